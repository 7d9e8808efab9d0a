//! Waveform ingestion and time-frequency transforms.
//!
//! Everything here is a pure function of its inputs. Arithmetic runs in
//! `f64`; sample buffers and spectrogram outputs are stored as `f32`.

mod db;
mod mel;
mod resample;
pub(crate) mod stft;
mod wav;

pub use db::{power_to_db, power_to_db_in_place, AMIN, TOP_DB};
pub use mel::{
    hz_to_mel, mel_filterbank, mel_spectrogram, mel_spectrogram_with, mel_to_hz, MelConfig,
    MelFilterBank, MelSpectrogram,
};
pub use resample::resample;
pub use stft::{frame_count, hann_window, reflect_index, stft, ComplexSpectrogram};
pub use wav::{decode_wav, encode_wav, load_wav, save_wav};

use crate::error::{Error, Result};

/// Sample rate every clip is normalized to before analysis.
pub const SAMPLE_RATE: u32 = 22_050;
/// Length of a dataset clip in seconds.
pub const CLIP_SECONDS: u32 = 30;
/// Number of samples in a pipeline-standard clip.
pub const CLIP_SAMPLES: usize = (SAMPLE_RATE * CLIP_SECONDS) as usize;

/// A mono waveform with amplitudes nominally in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    /// Identifier of the song this clip was cut from.
    pub source_id: String,
    /// Seconds from the start of the source song.
    pub offset_s: f64,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        Self::with_source(samples, sample_rate, "", 0.0)
    }

    pub fn with_source(
        samples: Vec<f32>,
        sample_rate: u32,
        source_id: impl Into<String>,
        offset_s: f64,
    ) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Domain("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Domain(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
            source_id: source_id.into(),
            offset_s,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// True for 30.0 s clips at 22,050 Hz.
    pub fn is_pipeline_standard(&self) -> bool {
        self.sample_rate == SAMPLE_RATE && self.samples.len() == CLIP_SAMPLES
    }

    pub(crate) fn require_standard(&self, what: &str) -> Result<()> {
        if self.is_pipeline_standard() {
            Ok(())
        } else {
            Err(Error::Contract(format!(
                "{what} needs a {CLIP_SECONDS} s clip at {SAMPLE_RATE} Hz ({CLIP_SAMPLES} samples), \
                 got {} samples at {} Hz; resample and segment first",
                self.samples.len(),
                self.sample_rate
            )))
        }
    }
}
