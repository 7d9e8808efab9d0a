use super::{FeatureConfig, FrameMatrix};
use crate::dsp::ComplexSpectrogram;
use crate::error::{Error, Result};

const LOG_OFFSET: f64 = 1e-10;

/// Band edges in Hz: `0, base, 2 base, ..., base 2^(n-2), nyquist`.
pub fn contrast_band_edges(base_hz: f64, n_bands: usize, nyquist: f64) -> Vec<f64> {
    let mut edges = vec![0.0];
    edges.extend((0..n_bands - 1).map(|i| base_hz * 2f64.powi(i as i32)));
    edges.push(nyquist);
    edges
}

/// Peak-minus-valley log magnitude per octave band.
///
/// Within each band the top and bottom `alpha` fraction of bins (at least
/// one) are averaged; contrast is `ln(peak) - ln(valley)`.
pub fn spectral_contrast(spec: &ComplexSpectrogram, cfg: &FeatureConfig) -> Result<FrameMatrix> {
    let nyquist = spec.sample_rate as f64 / 2.0;
    let edges = contrast_band_edges(cfg.contrast_base_hz, cfg.contrast_bands, nyquist);
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!(
            "contrast bands {edges:?} are not increasing below {nyquist} Hz"
        )));
    }
    let last = edges.len() - 2;
    let bands: Vec<Vec<usize>> = edges
        .windows(2)
        .enumerate()
        .map(|(b, w)| {
            (0..spec.n_bins)
                .filter(|&k| {
                    let f = spec.bin_hz(k);
                    f >= w[0] && (f < w[1] || (b == last && f <= w[1]))
                })
                .collect()
        })
        .collect();
    if let Some(b) = bands.iter().position(|bins| bins.is_empty()) {
        return Err(Error::Resolution(format!(
            "contrast band {b} ({:.1}..{:.1} Hz) holds no FFT bin",
            edges[b],
            edges[b + 1]
        )));
    }

    let mut out = FrameMatrix::zeros(spec.n_frames, bands.len());
    let mut scratch = Vec::new();
    for t in 0..spec.n_frames {
        let frame = spec.frame(t);
        let row = out.row_mut(t);
        for (slot, bins) in row.iter_mut().zip(&bands) {
            scratch.clear();
            scratch.extend(bins.iter().map(|&k| frame[k].norm()));
            scratch.sort_by(f64::total_cmp);
            let q = ((cfg.contrast_alpha * bins.len() as f64).round() as usize).max(1);
            let valley = scratch[..q].iter().sum::<f64>() / q as f64;
            let peak = scratch[scratch.len() - q..].iter().sum::<f64>() / q as f64;
            *slot = (peak + LOG_OFFSET).ln() - (valley + LOG_OFFSET).ln();
        }
    }
    Ok(out)
}
