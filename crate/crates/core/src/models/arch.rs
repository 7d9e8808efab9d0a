use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::{
    BatchNorm1d, Conv1d, Dense, Dropout, Flatten, Lstm, MaxPool1d, Parallel, Relu, Scalar,
    Sequential,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchKind {
    Cnn,
    Rnn,
    Parallel,
    Crnn,
}

impl ArchKind {
    pub const ALL: [ArchKind; 4] = [ArchKind::Cnn, ArchKind::Rnn, ArchKind::Parallel, ArchKind::Crnn];

    pub fn as_str(self) -> &'static str {
        match self {
            ArchKind::Cnn => "cnn",
            ArchKind::Rnn => "rnn",
            ArchKind::Parallel => "parallel",
            ArchKind::Crnn => "crnn",
        }
    }
}

impl fmt::Display for ArchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ArchKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown architecture {s:?}")))
    }
}

/// Layer sizes for the deep classifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchitectureConfig {
    pub kind: ArchKind,
    pub conv_channels: Vec<usize>,
    pub kernel_width: usize,
    pub pool_width: usize,
    pub lstm_hidden: usize,
    pub dense_hidden: usize,
    pub n_classes: usize,
    pub dropout: f64,
    pub l2: f64,
    /// Time frames per input spectrogram.
    pub input_frames: usize,
    /// Mel bands per frame.
    pub input_bands: usize,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        Self {
            kind: ArchKind::Crnn,
            conv_channels: vec![64, 128, 128],
            kernel_width: 5,
            pool_width: 2,
            lstm_hidden: 96,
            dense_hidden: 64,
            n_classes: 8,
            dropout: 0.3,
            l2: 1e-4,
            input_frames: 640,
            input_bands: 128,
        }
    }
}

impl ArchitectureConfig {
    pub fn with_kind(kind: ArchKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn uses_conv(&self) -> bool {
        self.kind != ArchKind::Rnn
    }

    /// Time steps left after the convolutional blocks.
    pub fn pooled_frames(&self) -> usize {
        let mut t = self.input_frames;
        for _ in &self.conv_channels {
            t /= self.pool_width.max(1);
        }
        t
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.n_classes < 2 {
            return fail(format!("n_classes must be at least 2, got {}", self.n_classes));
        }
        if self.input_frames == 0 || self.input_bands == 0 {
            return fail("input dimensions must be positive".into());
        }
        if self.kind != ArchKind::Cnn && self.lstm_hidden == 0 {
            return fail("lstm_hidden must be positive".into());
        }
        if self.dense_hidden == 0 {
            return fail("dense_hidden must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return fail(format!("l2 must be a nonnegative number, got {}", self.l2));
        }
        if self.uses_conv() {
            if self.conv_channels.is_empty() || self.conv_channels.contains(&0) {
                return fail("conv_channels must be a nonempty list of positive counts".into());
            }
            if self.kernel_width % 2 == 0 {
                return fail(format!("kernel_width must be odd, got {}", self.kernel_width));
            }
            if self.pool_width == 0 {
                return fail("pool_width must be positive".into());
            }
            if self.pooled_frames() == 0 {
                return fail(format!(
                    "{} frames do not survive {} pooling stages of width {}",
                    self.input_frames,
                    self.conv_channels.len(),
                    self.pool_width
                ));
            }
        }
        Ok(())
    }
}

fn conv_blocks<T: Scalar>(
    net: &mut Sequential<T>,
    cfg: &ArchitectureConfig,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let mut channels = cfg.input_bands;
    for (i, &out) in cfg.conv_channels.iter().enumerate() {
        let n = i + 1;
        net.push(format!("conv{n}"), Conv1d::new(channels, out, cfg.kernel_width, rng)?)
            .push(format!("relu{n}"), Relu::new())
            .push(format!("bn{n}"), BatchNorm1d::new(out))
            .push(format!("pool{n}"), MaxPool1d::new(cfg.pool_width));
        channels = out;
    }
    Ok(())
}

/// dropout -> dense(hidden) -> relu -> dropout -> dense(classes)
fn classifier_head<T: Scalar>(
    net: &mut Sequential<T>,
    cfg: &ArchitectureConfig,
    inputs: usize,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    net.push("drop1", Dropout::new(cfg.dropout, seed.wrapping_add(1))?)
        .push("dense1", Dense::new(inputs, cfg.dense_hidden, rng))
        .push("relu_dense", Relu::new())
        .push("drop2", Dropout::new(cfg.dropout, seed.wrapping_add(2))?)
        .push("logits", Dense::new(cfg.dense_hidden, cfg.n_classes, rng));
    Ok(())
}

/// Builds the network for `cfg`, producing logits (softmax is applied by
/// the loss and by prediction). Initialisation is a pure function of `seed`.
pub fn build_network<T: Scalar>(cfg: &ArchitectureConfig, seed: u64) -> Result<Sequential<T>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Sequential::new();
    let last_channels = cfg.conv_channels.last().copied().unwrap_or(0);
    match cfg.kind {
        ArchKind::Crnn => {
            conv_blocks(&mut net, cfg, &mut rng)?;
            net.push("lstm", Lstm::new(last_channels, cfg.lstm_hidden, &mut rng));
            classifier_head(&mut net, cfg, cfg.lstm_hidden, seed, &mut rng)?;
        }
        ArchKind::Cnn => {
            conv_blocks(&mut net, cfg, &mut rng)?;
            net.push("flatten", Flatten::new());
            classifier_head(&mut net, cfg, cfg.pooled_frames() * last_channels, seed, &mut rng)?;
        }
        ArchKind::Rnn => {
            net.push("lstm", Lstm::new(cfg.input_bands, cfg.lstm_hidden, &mut rng));
            classifier_head(&mut net, cfg, cfg.lstm_hidden, seed, &mut rng)?;
        }
        ArchKind::Parallel => {
            let mut conv = Sequential::new();
            conv_blocks(&mut conv, cfg, &mut rng)?;
            conv.push("flatten", Flatten::new());
            let rec = Sequential::new().with("lstm", Lstm::new(cfg.input_bands, cfg.lstm_hidden, &mut rng));
            net.push(
                "branches",
                Parallel::new(vec![("cnn".into(), conv), ("rnn".into(), rec)]),
            );
            let fused = cfg.pooled_frames() * last_channels + cfg.lstm_hidden;
            classifier_head(&mut net, cfg, fused, seed, &mut rng)?;
        }
    }
    Ok(net)
}
