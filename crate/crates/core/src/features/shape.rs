use super::FrameMatrix;
use crate::dsp::ComplexSpectrogram;

/// Per-frame spectral centroid, bandwidth and rolloff (all in Hz), as the
/// three columns of the result. Silent frames are all zero.
pub fn spectral_shape(spec: &ComplexSpectrogram, rolloff_fraction: f64) -> FrameMatrix {
    let freqs: Vec<f64> = (0..spec.n_bins).map(|k| spec.bin_hz(k)).collect();
    let mut out = FrameMatrix::zeros(spec.n_frames, 3);
    let mut mags = vec![0.0; spec.n_bins];
    for t in 0..spec.n_frames {
        for (m, c) in mags.iter_mut().zip(spec.frame(t)) {
            *m = c.norm();
        }
        let total: f64 = mags.iter().sum();
        if total <= 0.0 {
            continue;
        }
        let centroid = mags.iter().zip(&freqs).map(|(m, f)| m * f).sum::<f64>() / total;
        let spread = mags
            .iter()
            .zip(&freqs)
            .map(|(m, f)| m * (f - centroid).powi(2))
            .sum::<f64>()
            / total;
        let threshold = rolloff_fraction * total;
        let mut cumulative = 0.0;
        let mut rolloff = freqs[freqs.len() - 1];
        for (m, f) in mags.iter().zip(&freqs) {
            cumulative += m;
            if cumulative >= threshold {
                rolloff = *f;
                break;
            }
        }
        out.row_mut(t).copy_from_slice(&[centroid, spread.sqrt(), rolloff]);
    }
    out
}
