use super::FrameMatrix;
use crate::dsp::ComplexSpectrogram;

/// Equal-tempered pitch class (0 = C) of a frequency, with A4 = 440 Hz.
pub fn pitch_class(hz: f64) -> usize {
    let midi = (12.0 * (hz / 440.0).log2()).round() as i64 + 69;
    midi.rem_euclid(12) as usize
}

/// Octave-folded bin energy per pitch class, max-normalized per frame.
pub fn chroma(spec: &ComplexSpectrogram) -> FrameMatrix {
    let classes: Vec<Option<usize>> = (0..spec.n_bins)
        .map(|k| {
            let f = spec.bin_hz(k);
            (f > 0.0).then(|| pitch_class(f))
        })
        .collect();
    let mut out = FrameMatrix::zeros(spec.n_frames, 12);
    for t in 0..spec.n_frames {
        let row = out.row_mut(t);
        for (bin, class) in spec.frame(t).iter().zip(&classes) {
            if let Some(c) = class {
                row[*c] += bin.norm_sqr();
            }
        }
        let max = row.iter().cloned().fold(0.0, f64::max);
        if max > 0.0 {
            row.iter_mut().for_each(|v| *v /= max);
        }
    }
    out
}
