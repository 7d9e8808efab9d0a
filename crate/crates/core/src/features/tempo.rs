use super::FeatureConfig;
use crate::dsp::{self, AudioClip, SAMPLE_RATE};
use crate::error::Result;

const ONSET_SMOOTHING_FRAMES: f64 = 2.0;
const SUBHARMONIC_RATIO: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TempoEstimate {
    /// Beats per minute, or 0 when no onsets were found.
    pub bpm: f64,
    /// Set when the onset envelope is identically zero.
    pub silent: bool,
}

/// Half-wave rectified frame-to-frame increase of a dB mel spectrogram,
/// summed over bands. The first frame has no predecessor and scores 0.
pub fn onset_envelope(db: &[f64], n_frames: usize, n_mels: usize) -> Vec<f64> {
    let mut env = vec![0.0; n_frames];
    for t in 1..n_frames {
        let (prev, cur) = (&db[(t - 1) * n_mels..t * n_mels], &db[t * n_mels..(t + 1) * n_mels]);
        env[t] = cur.iter().zip(prev).map(|(c, p)| (c - p).max(0.0)).sum();
    }
    env
}

/// Convolves with a normalized Gaussian of `sigma` frames (truncated at 3 sigma).
fn smooth(x: &[f64], sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i as f64).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = kernel.iter().sum();
    let n = x.len() as isize;
    (0..n)
        .map(|t| {
            kernel
                .iter()
                .zip(-radius..)
                .filter(|(_, i)| (0..n).contains(&(t + i)))
                .map(|(k, i)| k * x[(t + i) as usize])
                .sum::<f64>()
                / norm
        })
        .collect()
}

fn autocorrelation(x: &[f64], lag: usize) -> f64 {
    x.iter().zip(&x[lag..]).map(|(a, b)| a * b).sum()
}

/// Autocorrelation tempo of a dB mel spectrogram analysed at `hop`.
///
/// Onsets land on whole frames, so a beat period that is not an integer
/// number of frames splits its energy between two neighbouring lags. The
/// envelope is smoothed (Gaussian, sigma 2 frames) before autocorrelating,
/// and the best integer lag is refined by a parabola through its neighbours.
pub fn tempo_from_mel_db(
    db: &[f64],
    n_frames: usize,
    n_mels: usize,
    hop: usize,
    sample_rate: u32,
    min_bpm: f64,
    max_bpm: f64,
) -> TempoEstimate {
    let env = onset_envelope(db, n_frames, n_mels);
    if env.iter().all(|&v| v == 0.0) {
        return TempoEstimate { bpm: 0.0, silent: true };
    }
    let mean = env.iter().sum::<f64>() / env.len() as f64;
    let centered: Vec<f64> = smooth(&env, ONSET_SMOOTHING_FRAMES)
        .iter()
        .map(|v| v - mean)
        .collect();

    let frames_per_minute = 60.0 * sample_rate as f64 / hop as f64;
    let lag_lo = ((frames_per_minute / max_bpm).ceil() as usize).max(1);
    let lag_hi = ((frames_per_minute / min_bpm).floor() as usize).min(n_frames.saturating_sub(2));
    if lag_lo > lag_hi {
        return TempoEstimate { bpm: 0.0, silent: false };
    }
    let argmax = |range: std::ops::RangeInclusive<usize>| {
        range
            .map(|lag| (lag, autocorrelation(&centered, lag)))
            .fold((0, f64::MIN), |acc, (lag, r)| if r > acc.1 { (lag, r) } else { acc })
    };
    let (mut best, mut best_r) = argmax(lag_lo..=lag_hi);
    // A periodic onset train correlates as well at two periods as at one;
    // prefer the shorter period when it is nearly as strong.
    while best_r > 0.0 {
        let half = best / 2;
        let (lo, hi) = (half.saturating_sub(1).max(lag_lo), (half + 1).min(lag_hi));
        if lo > hi {
            break;
        }
        let (lag, r) = argmax(lo..=hi);
        if r < SUBHARMONIC_RATIO * best_r {
            break;
        }
        (best, best_r) = (lag, r);
    }

    let r0 = autocorrelation(&centered, best);
    let rm = autocorrelation(&centered, best - 1);
    let rp = autocorrelation(&centered, best + 1);
    let curvature = rm - 2.0 * r0 + rp;
    let offset = if curvature < 0.0 {
        (0.5 * (rm - rp) / curvature).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let bpm = (frames_per_minute / (best as f64 + offset)).clamp(min_bpm, max_bpm);
    TempoEstimate { bpm, silent: false }
}

/// Tempo of a pipeline-standard clip with the default analysis settings.
pub fn tempo(clip: &AudioClip) -> Result<TempoEstimate> {
    clip.require_standard("tempo")?;
    let cfg = FeatureConfig::default();
    let spec = dsp::stft(clip, cfg.n_fft, cfg.hop)?;
    let bank = dsp::mel_filterbank(cfg.n_mels, cfg.n_fft, SAMPLE_RATE, 0.0, cfg.fmax())?;
    let mut db = bank.apply(&spec.power(), spec.n_frames);
    dsp::power_to_db_in_place(&mut db)?;
    Ok(tempo_from_mel_db(
        &db,
        spec.n_frames,
        cfg.n_mels,
        cfg.hop,
        SAMPLE_RATE,
        cfg.tempo_min_bpm,
        cfg.tempo_max_bpm,
    ))
}
