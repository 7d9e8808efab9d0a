//! The 51-dimensional hand-crafted feature vector.
//!
//! Each family is computed per analysis frame and then averaged over the
//! clip. Values are raw physical quantities; standardization happens in the
//! classical models.

mod chroma;
mod contrast;
mod mfcc;
mod shape;
mod temporal;
mod tempo;
mod tonnetz;
mod vector;

pub use chroma::{chroma, pitch_class};
pub use contrast::{contrast_band_edges, spectral_contrast};
pub use mfcc::{dct_ii_ortho, mfcc, mfcc_from_db};
pub use shape::spectral_shape;
pub use temporal::{rms_energy, zero_crossing_rate};
pub use tempo::{onset_envelope, tempo, tempo_from_mel_db, TempoEstimate};
pub use tonnetz::{tonnetz, tonnetz_basis};
pub use vector::{extract_features_51, extract_features_51_with, FeatureVector51, FEATURE_NAMES};

use serde::{Deserialize, Serialize};

use crate::dsp::SAMPLE_RATE;

/// A row-major `n_frames x n_cols` matrix of per-frame values.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatrix {
    pub values: Vec<f64>,
    pub n_frames: usize,
    pub n_cols: usize,
}

impl FrameMatrix {
    pub fn zeros(n_frames: usize, n_cols: usize) -> Self {
        Self {
            values: vec![0.0; n_frames * n_cols],
            n_frames,
            n_cols,
        }
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.n_cols..(t + 1) * self.n_cols]
    }

    pub fn row_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.values[t * self.n_cols..(t + 1) * self.n_cols]
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_frames).map(move |t| self.values[t * self.n_cols + c])
    }

    /// Arithmetic mean of each column over frames.
    pub fn column_means(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_cols];
        for t in 0..self.n_frames {
            for (s, v) in sums.iter_mut().zip(self.row(t)) {
                *s += v;
            }
        }
        let n = self.n_frames.max(1) as f64;
        sums.iter().map(|s| s / n).collect()
    }
}

/// Analysis parameters for the hand-crafted features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub n_mfcc: usize,
    pub rolloff_fraction: f64,
    pub contrast_alpha: f64,
    pub contrast_base_hz: f64,
    pub contrast_bands: usize,
    pub tempo_min_bpm: f64,
    pub tempo_max_bpm: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            n_fft: 2048,
            hop: 512,
            n_mels: 128,
            n_mfcc: 20,
            rolloff_fraction: 0.85,
            contrast_alpha: 0.02,
            contrast_base_hz: 200.0,
            contrast_bands: 7,
            tempo_min_bpm: 40.0,
            tempo_max_bpm: 200.0,
        }
    }
}

impl FeatureConfig {
    pub(crate) fn fmax(&self) -> f64 {
        SAMPLE_RATE as f64 / 2.0
    }
}
