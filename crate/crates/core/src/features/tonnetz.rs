use std::f64::consts::PI;

use super::FrameMatrix;
use crate::error::{Error, Result};

/// The 6 x 12 tonal-centroid basis: (sin, cos) pairs on the circle of
/// fifths, minor thirds and major thirds, with radii 1, 1 and 0.5.
pub fn tonnetz_basis() -> [[f64; 12]; 6] {
    let mut basis = [[0.0; 12]; 6];
    let circles = [(7.0 / 6.0, 1.0), (3.0 / 2.0, 1.0), (2.0 / 3.0, 0.5)];
    for (c, &(turn, radius)) in circles.iter().enumerate() {
        for p in 0..12 {
            let angle = turn * PI * p as f64;
            basis[2 * c][p] = radius * angle.sin();
            basis[2 * c + 1][p] = radius * angle.cos();
        }
    }
    basis
}

/// Projects L1-normalized chroma frames onto the tonal centroid basis.
pub fn tonnetz(chroma: &FrameMatrix) -> Result<FrameMatrix> {
    if chroma.n_cols != 12 {
        return Err(Error::shape(format!("chroma has {} columns, expected 12", chroma.n_cols)));
    }
    if let Some(v) = chroma.values.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Domain(format!("chroma entry {v} is negative")));
    }
    let basis = tonnetz_basis();
    let mut out = FrameMatrix::zeros(chroma.n_frames, 6);
    for t in 0..chroma.n_frames {
        let row = chroma.row(t);
        let total: f64 = row.iter().sum();
        if total <= 0.0 {
            continue;
        }
        for (d, slot) in out.row_mut(t).iter_mut().enumerate() {
            *slot = basis[d].iter().zip(row).map(|(b, c)| b * c).sum::<f64>() / total;
        }
    }
    Ok(out)
}
