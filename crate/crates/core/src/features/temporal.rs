use crate::dsp::stft::centered_frame;
use crate::dsp::{frame_count, AudioClip};
use crate::error::{Error, Result};

fn frames_of(
    clip: &AudioClip,
    frame_len: usize,
    hop: usize,
    mut f: impl FnMut(&[f64]) -> f64,
) -> Result<Vec<f64>> {
    if clip.is_empty() {
        return Err(Error::Domain("empty clip".into()));
    }
    if frame_len < 2 || hop == 0 {
        return Err(Error::Domain(format!(
            "frame length {frame_len} / hop {hop} invalid"
        )));
    }
    let mut buf = vec![0.0; frame_len];
    Ok((0..frame_count(clip.len(), hop))
        .map(|t| {
            centered_frame(&clip.samples, t, hop, &mut buf);
            f(&buf)
        })
        .collect())
}

/// Fraction of adjacent sample pairs per frame whose signs differ.
/// Zero counts as non-negative.
pub fn zero_crossing_rate(clip: &AudioClip, frame_len: usize, hop: usize) -> Result<Vec<f64>> {
    frames_of(clip, frame_len, hop, |frame| {
        let crossings = frame
            .windows(2)
            .filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0))
            .count();
        crossings as f64 / (frame.len() - 1) as f64
    })
}

/// Root-mean-square amplitude per frame.
pub fn rms_energy(clip: &AudioClip, frame_len: usize, hop: usize) -> Result<Vec<f64>> {
    frames_of(clip, frame_len, hop, |frame| {
        (frame.iter().map(|x| x * x).sum::<f64>() / frame.len() as f64).sqrt()
    })
}
