use super::{
    chroma, mfcc_from_db, spectral_contrast, spectral_shape, tempo_from_mel_db, tonnetz,
    FeatureConfig,
};
use super::temporal::{rms_energy, zero_crossing_rate};
use crate::dsp::{self, AudioClip, SAMPLE_RATE};
use crate::error::{Error, Result};

/// Fixed-order 51-dimensional clip summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector51 {
    pub values: [f64; 51],
}

impl FeatureVector51 {
    pub const LEN: usize = 51;
    pub const MFCC: std::ops::Range<usize> = 0..20;
    pub const CHROMA: std::ops::Range<usize> = 20..32;
    pub const CONTRAST: std::ops::Range<usize> = 32..39;
    pub const CENTROID: usize = 39;
    pub const BANDWIDTH: usize = 40;
    pub const ROLLOFF: usize = 41;
    pub const ZCR: usize = 42;
    pub const TONNETZ: std::ops::Range<usize> = 43..49;
    pub const RMS: usize = 49;
    pub const TEMPO: usize = 50;

    pub fn mfcc(&self) -> &[f64] {
        &self.values[Self::MFCC]
    }

    pub fn chroma(&self) -> &[f64] {
        &self.values[Self::CHROMA]
    }

    pub fn contrast(&self) -> &[f64] {
        &self.values[Self::CONTRAST]
    }

    pub fn tonnetz(&self) -> &[f64] {
        &self.values[Self::TONNETZ]
    }
}

/// Column names in vector order, used as CSV headers.
pub const FEATURE_NAMES: [&str; 51] = [
    "mfcc_0", "mfcc_1", "mfcc_2", "mfcc_3", "mfcc_4", "mfcc_5", "mfcc_6", "mfcc_7", "mfcc_8",
    "mfcc_9", "mfcc_10", "mfcc_11", "mfcc_12", "mfcc_13", "mfcc_14", "mfcc_15", "mfcc_16",
    "mfcc_17", "mfcc_18", "mfcc_19", "chroma_c", "chroma_cs", "chroma_d", "chroma_ds",
    "chroma_e", "chroma_f", "chroma_fs", "chroma_g", "chroma_gs", "chroma_a", "chroma_as",
    "chroma_b", "contrast_0", "contrast_1", "contrast_2", "contrast_3", "contrast_4",
    "contrast_5", "contrast_6", "centroid_hz", "bandwidth_hz", "rolloff_hz", "zcr",
    "tonnetz_0", "tonnetz_1", "tonnetz_2", "tonnetz_3", "tonnetz_4", "tonnetz_5", "rms",
    "tempo_bpm",
];

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len().max(1) as f64
}

pub fn extract_features_51(clip: &AudioClip) -> Result<FeatureVector51> {
    extract_features_51_with(clip, &FeatureConfig::default())
}

/// Computes every feature family on one shared STFT and averages over frames.
pub fn extract_features_51_with(clip: &AudioClip, cfg: &FeatureConfig) -> Result<FeatureVector51> {
    clip.require_standard("feature extraction")?;
    if cfg.n_mfcc != 20 || cfg.contrast_bands != 7 {
        return Err(Error::Config(format!(
            "the 51-feature layout needs 20 MFCCs and 7 contrast bands, got {} and {}",
            cfg.n_mfcc, cfg.contrast_bands
        )));
    }
    let spec = dsp::stft(clip, cfg.n_fft, cfg.hop)?;
    let bank = dsp::mel_filterbank(cfg.n_mels, cfg.n_fft, SAMPLE_RATE, 0.0, cfg.fmax())?;
    let mut db = bank.apply(&spec.power(), spec.n_frames);
    dsp::power_to_db_in_place(&mut db)?;

    let mfcc = mfcc_from_db(&db, spec.n_frames, cfg.n_mels, cfg.n_mfcc)?;
    let chroma = chroma(&spec);
    let contrast = spectral_contrast(&spec, cfg)?;
    let shape = spectral_shape(&spec, cfg.rolloff_fraction);
    let zcr = zero_crossing_rate(clip, cfg.n_fft, cfg.hop)?;
    let tonnetz = tonnetz(&chroma)?;
    let rms = rms_energy(clip, cfg.n_fft, cfg.hop)?;
    let tempo = tempo_from_mel_db(
        &db,
        spec.n_frames,
        cfg.n_mels,
        cfg.hop,
        SAMPLE_RATE,
        cfg.tempo_min_bpm,
        cfg.tempo_max_bpm,
    );

    let mut values = [0.0; 51];
    values[FeatureVector51::MFCC].copy_from_slice(&mfcc.column_means());
    values[FeatureVector51::CHROMA].copy_from_slice(&chroma.column_means());
    values[FeatureVector51::CONTRAST].copy_from_slice(&contrast.column_means());
    let shape_means = shape.column_means();
    values[FeatureVector51::CENTROID] = shape_means[0];
    values[FeatureVector51::BANDWIDTH] = shape_means[1];
    values[FeatureVector51::ROLLOFF] = shape_means[2];
    values[FeatureVector51::ZCR] = mean(&zcr);
    values[FeatureVector51::TONNETZ].copy_from_slice(&tonnetz.column_means());
    values[FeatureVector51::RMS] = mean(&rms);
    values[FeatureVector51::TEMPO] = tempo.bpm;
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NumericFault(format!("feature {} is {}", FEATURE_NAMES[i], values[i])));
    }
    Ok(FeatureVector51 { values })
}
