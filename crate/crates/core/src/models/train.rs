use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::deep::{argmax, DeepModel, InputStats};
use crate::error::{Error, Result};
use crate::neural::{softmax_cross_entropy_indices, Adam, AdamConfig, Layer, Mode, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub val_fraction: f64,
    /// Smallest validation-loss decrease that resets the patience counter.
    pub min_delta: f64,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            max_epochs: 100,
            patience: 10,
            val_fraction: 0.1,
            min_delta: 1e-4,
            seed: 0,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.batch_size == 0 {
            return fail("batch_size must be positive".into());
        }
        if self.max_epochs == 0 {
            return fail("max_epochs must be positive".into());
        }
        if self.patience == 0 {
            return fail("patience must be at least 1".into());
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return fail(format!("val_fraction must be in (0, 1), got {}", self.val_fraction));
        }
        if !(self.adam.lr > 0.0 && self.adam.epsilon > 0.0) {
            return fail("learning rate and epsilon must be positive".into());
        }
        Ok(())
    }
}

/// One row of the training-curve table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

pub const CURVES_HEADER: &str = "epoch,train_loss,train_acc,val_loss,val_acc";

pub fn curves_csv(curves: &[EpochRecord]) -> String {
    let mut s = format!("{CURVES_HEADER}\n");
    for r in curves {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.epoch, r.train_loss, r.train_acc, r.val_loss, r.val_acc
        ));
    }
    s
}

pub fn parse_curves_csv(text: &str) -> Result<Vec<EpochRecord>> {
    let mut lines = text.lines();
    if lines.next() != Some(CURVES_HEADER) {
        return Err(Error::Format(format!("curves file must start with {CURVES_HEADER}")));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let num = |i: usize| -> Result<f64> {
                f.get(i)
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| Error::Format(format!("bad curves row {l:?}")))
            };
            if f.len() != 5 {
                return Err(Error::Format(format!("bad curves row {l:?}")));
            }
            Ok(EpochRecord {
                epoch: num(0)? as usize,
                train_loss: num(1)?,
                train_acc: num(2)?,
                val_loss: num(3)?,
                val_acc: num(4)?,
            })
        })
        .collect()
}

/// What [`EarlyStopping::observe`] decided about one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopDecision {
    /// The loss is the lowest seen so far; snapshot the parameters.
    pub new_best: bool,
    pub stop: bool,
}

/// Patience-based stopping on validation loss.
///
/// The patience counter resets only when the loss beats the last reset
/// point by at least `min_delta`; the best snapshot follows every strict
/// new minimum, so the restored parameters always carry the lowest loss
/// recorded.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    min_delta: f64,
    reference: f64,
    best: f64,
    best_epoch: Option<usize>,
    wait: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize, min_delta: f64) -> Self {
        Self {
            patience,
            min_delta,
            reference: f64::INFINITY,
            best: f64::INFINITY,
            best_epoch: None,
            wait: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> StopDecision {
        let new_best = val_loss < self.best;
        if new_best {
            self.best = val_loss;
            self.best_epoch = Some(epoch);
        }
        if self.reference - val_loss >= self.min_delta {
            self.reference = val_loss;
            self.wait = 0;
        } else {
            self.wait += 1;
        }
        StopDecision {
            new_best,
            stop: self.wait >= self.patience,
        }
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }

    pub fn best_loss(&self) -> f64 {
        self.best
    }
}

/// Splits row indices into (train, validation), taking
/// `round(fraction * n_c)` rows of every class for validation (at least one
/// when the class has two or more rows, never all of them).
pub fn stratified_split(
    labels: &[usize],
    n_classes: usize,
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut val = Vec::new();
    for c in 0..n_classes {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        rows.shuffle(&mut rng);
        let n = rows.len();
        let mut take = (fraction * n as f64).round() as usize;
        if n >= 2 {
            take = take.clamp(1, n - 1);
        } else {
            take = 0;
        }
        val.extend_from_slice(&rows[..take]);
        train.extend_from_slice(&rows[take..]);
    }
    if val.is_empty() || train.is_empty() {
        return Err(Error::Data(
            "too few rows per class to carve a validation split".into(),
        ));
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

/// Outcome of [`train`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
}

/// Minibatch Adam over a fixed set of training rows.
pub struct Trainer {
    pub config: TrainConfig,
    adam: Adam<f32>,
    rng: ChaCha8Rng,
    epoch: usize,
}

impl Trainer {
    pub fn new(model: &DeepModel, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);
        Ok(Self {
            config: config.clone(),
            adam: Adam::new(config.adam, model.arch.l2),
            rng,
            epoch: 0,
        })
    }

    /// One pass over `rows` in a fresh seeded order; the last partial batch
    /// is kept. Returns the running (loss, accuracy) of the training-mode
    /// forward passes.
    pub fn epoch(
        &mut self,
        model: &mut DeepModel,
        x: &Tensor<f32>,
        y: &[usize],
        rows: &[usize],
    ) -> Result<(f64, f64)> {
        model.check_input(x)?;
        self.epoch += 1;
        let epoch = self.epoch;
        let mut order = rows.to_vec();
        order.shuffle(&mut self.rng);
        let k = model.arch.n_classes;
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for (bi, chunk) in order.chunks(self.config.batch_size).enumerate() {
            let context = |e: Error| match e {
                Error::NumericFault(m) => {
                    Error::NumericFault(format!("epoch {epoch}, batch {}: {m}", bi + 1))
                }
                other => other,
            };
            let xb = model.batch(x, chunk);
            let labels: Vec<usize> = chunk.iter().map(|&r| y[r]).collect();
            model.network.zero_grad();
            let logits = model.network.forward(&xb, Mode::Train).map_err(context)?;
            let ce = softmax_cross_entropy_indices(&logits, &labels).map_err(context)?;
            model.network.backward(&ce.grad).map_err(context)?;
            self.adam
                .step(model.network.params_mut().into_iter().map(|(_, p)| p))
                .map_err(context)?;
            loss_sum += ce.loss * chunk.len() as f64;
            correct += ce
                .probs
                .data()
                .chunks_exact(k)
                .zip(&labels)
                .filter(|(p, &l)| argmax(p) == l)
                .count();
        }
        let n = rows.len().max(1) as f64;
        Ok((loss_sum / n, correct as f64 / n))
    }
}

/// Trains `model` on `x` (`N x frames x bands`, raw dB) with early stopping
/// on a stratified validation split. Parameters end at the best validation
/// epoch; curves and input statistics are stored on the model.
pub fn train(model: &mut DeepModel, x: &Tensor<f32>, y: &[usize], config: &TrainConfig) -> Result<TrainSummary> {
    train_with_progress(model, x, y, config, |_| {})
}

pub fn train_with_progress(
    model: &mut DeepModel,
    x: &Tensor<f32>,
    y: &[usize],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainSummary> {
    config.validate()?;
    let n = model.check_input(x)?;
    if y.len() != n {
        return Err(Error::shape(format!("{} labels for {n} inputs", y.len())));
    }
    if let Some(&bad) = y.iter().find(|&&l| l >= model.arch.n_classes) {
        return Err(Error::Label(format!("label {bad} outside {} classes", model.arch.n_classes)));
    }
    if n < config.batch_size {
        return Err(Error::Config(format!(
            "{n} training rows is fewer than one batch of {}",
            config.batch_size
        )));
    }
    let (train_rows, val_rows) =
        stratified_split(y, model.arch.n_classes, config.val_fraction, config.seed)?;
    model.input_stats = Some(InputStats::fit(x, &train_rows)?);
    let mut trainer = Trainer::new(model, config)?;
    let mut stopper = EarlyStopping::new(config.patience, config.min_delta);
    let mut best = model.snapshot();
    model.curves.clear();
    let mut stopped_early = false;
    for epoch in 1..=config.max_epochs {
        let (train_loss, train_acc) = trainer.epoch(model, x, y, &train_rows)?;
        let (val_loss, val_acc) = model.evaluate(x, y, &val_rows).map_err(|e| match e {
            Error::NumericFault(m) => Error::NumericFault(format!("epoch {epoch}, validation: {m}")),
            other => other,
        })?;
        if !val_loss.is_finite() {
            return Err(Error::NumericFault(format!("epoch {epoch}: validation loss {val_loss}")));
        }
        let record = EpochRecord {
            epoch,
            train_loss,
            train_acc,
            val_loss,
            val_acc,
        };
        model.curves.push(record);
        on_epoch(&record);
        let decision = stopper.observe(epoch, val_loss);
        if decision.new_best {
            best = model.snapshot();
        }
        if decision.stop {
            stopped_early = epoch < config.max_epochs;
            break;
        }
    }
    model.restore(&best);
    model.best_epoch = stopper.best_epoch();
    Ok(TrainSummary {
        epochs_run: model.curves.len(),
        best_epoch: stopper.best_epoch().unwrap_or(0),
        best_val_loss: stopper.best_loss(),
        stopped_early,
    })
}
