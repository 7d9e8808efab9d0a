use super::AudioClip;
use crate::error::{Error, Result};

/// Linear-interpolation resampling on a uniform time grid.
///
/// Output sample `j` sits at input position `j * in_sr / target_sr`; the
/// output has `floor(n * target_sr / in_sr)` samples. There is no
/// anti-aliasing filter, so content above the target Nyquist folds back.
pub fn resample(clip: &AudioClip, target_sr: u32) -> Result<AudioClip> {
    if clip.is_empty() {
        return Err(Error::Domain("cannot resample an empty clip".into()));
    }
    if target_sr == 0 {
        return Err(Error::Domain("target sample rate must be positive".into()));
    }
    if target_sr == clip.sample_rate {
        return Ok(clip.clone());
    }
    let n_in = clip.samples.len();
    let n_out = (n_in as u128 * target_sr as u128 / clip.sample_rate as u128) as usize;
    let step = clip.sample_rate as f64 / target_sr as f64;
    let last = n_in - 1;
    let x = &clip.samples;
    let samples = (0..n_out)
        .map(|j| {
            let pos = j as f64 * step;
            let i = (pos.floor() as usize).min(last);
            let frac = pos - i as f64;
            let a = x[i] as f64;
            let b = x[(i + 1).min(last)] as f64;
            (a + (b - a) * frac) as f32
        })
        .collect();
    Ok(AudioClip {
        samples,
        sample_rate: target_sr,
        source_id: clip.source_id.clone(),
        offset_s: clip.offset_s,
    })
}
