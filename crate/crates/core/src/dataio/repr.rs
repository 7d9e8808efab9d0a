use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dsp::{mel_spectrogram_with, AudioClip, MelConfig};
use crate::error::{Error, Result};
use crate::features::{extract_features_51_with, FeatureConfig, FeatureVector51};
use crate::models::sha256_hex;
use crate::neural::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputMode {
    /// `frames x bands` dB mel spectrogram per clip.
    Melspec,
    /// The 51-value hand-crafted summary per clip.
    Features51,
}

impl InputMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InputMode::Melspec => "melspec",
            InputMode::Features51 => "features51",
        }
    }
}

impl fmt::Display for InputMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InputMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "melspec" => Ok(InputMode::Melspec),
            "features51" => Ok(InputMode::Features51),
            _ => Err(Error::Config(format!("unknown input mode {s:?}; expected melspec or features51"))),
        }
    }
}

/// The settings that turn a pipeline-standard clip into model input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum InputRepresentation {
    Melspec(MelConfig),
    Features51(FeatureConfig),
}

impl InputRepresentation {
    pub fn mode(&self) -> InputMode {
        match self {
            InputRepresentation::Melspec(_) => InputMode::Melspec,
            InputRepresentation::Features51(_) => InputMode::Features51,
        }
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("representation serialises"))
    }

    /// Shape of one clip's input: `[frames, bands]` or `[51]`.
    pub fn item_shape(&self) -> Vec<usize> {
        match self {
            InputRepresentation::Melspec(c) => vec![c.output_frames(), c.n_mels],
            InputRepresentation::Features51(_) => vec![FeatureVector51::LEN],
        }
    }

    /// Flattened input of one clip, in `f32`.
    pub fn compute(&self, clip: &AudioClip) -> Result<Vec<f32>> {
        match self {
            InputRepresentation::Melspec(c) => Ok(mel_spectrogram_with(clip, c, None)?.values),
            InputRepresentation::Features51(c) => Ok(extract_features_51_with(clip, c)?
                .values
                .iter()
                .map(|&v| v as f32)
                .collect()),
        }
    }

    /// Stacks per-clip inputs into an `N x item_shape` tensor.
    pub fn stack(&self, items: Vec<Vec<f32>>) -> Result<Tensor<f32>> {
        let mut shape = vec![items.len()];
        shape.extend(self.item_shape());
        Tensor::from_vec(&shape, items.concat())
    }
}
