use std::f64::consts::PI;

use super::{FeatureConfig, FrameMatrix};
use crate::dsp::{self, AudioClip, SAMPLE_RATE};
use crate::error::{Error, Result};

/// Orthonormal DCT-II of `input`, keeping the first `n_out` coefficients.
pub fn dct_ii_ortho(input: &[f64], n_out: usize) -> Vec<f64> {
    let n = input.len() as f64;
    (0..n_out)
        .map(|k| {
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            scale
                * input
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| x * (PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n)).cos())
                    .sum::<f64>()
        })
        .collect()
}

fn dct_matrix(n_in: usize, n_out: usize) -> Vec<f64> {
    let mut basis = vec![0.0; n_in];
    let mut m = Vec::with_capacity(n_in * n_out);
    for i in 0..n_in {
        basis.iter_mut().for_each(|b| *b = 0.0);
        basis[i] = 1.0;
        m.extend(dct_ii_ortho(&basis, n_out));
    }
    // m[i * n_out + k] = contribution of input i to coefficient k
    m
}

/// Cepstral coefficients of a dB mel spectrogram (`n_frames x n_mels`).
pub fn mfcc_from_db(db: &[f64], n_frames: usize, n_mels: usize, n_mfcc: usize) -> Result<FrameMatrix> {
    if n_mfcc > n_mels {
        return Err(Error::Domain(format!(
            "n_mfcc {n_mfcc} exceeds the {n_mels} available mel bands"
        )));
    }
    let basis = dct_matrix(n_mels, n_mfcc);
    let mut out = FrameMatrix::zeros(n_frames, n_mfcc);
    for t in 0..n_frames {
        let frame = &db[t * n_mels..(t + 1) * n_mels];
        let row = out.row_mut(t);
        for (i, &x) in frame.iter().enumerate() {
            for (slot, &b) in row.iter_mut().zip(&basis[i * n_mfcc..(i + 1) * n_mfcc]) {
                *slot += x * b;
            }
        }
    }
    Ok(out)
}

/// Per-frame MFCCs of a pipeline-standard clip.
pub fn mfcc(clip: &AudioClip, n_mfcc: usize) -> Result<FrameMatrix> {
    clip.require_standard("mfcc")?;
    let cfg = FeatureConfig::default();
    if n_mfcc > cfg.n_mels {
        return Err(Error::Domain(format!(
            "n_mfcc {n_mfcc} exceeds the {} available mel bands",
            cfg.n_mels
        )));
    }
    let spec = dsp::stft(clip, cfg.n_fft, cfg.hop)?;
    let bank = dsp::mel_filterbank(cfg.n_mels, cfg.n_fft, SAMPLE_RATE, 0.0, cfg.fmax())?;
    let mut db = bank.apply(&spec.power(), spec.n_frames);
    dsp::power_to_db_in_place(&mut db)?;
    mfcc_from_db(&db, spec.n_frames, cfg.n_mels, n_mfcc)
}
