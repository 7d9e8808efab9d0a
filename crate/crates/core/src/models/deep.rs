use serde::{Deserialize, Serialize};

use super::arch::{build_network, ArchitectureConfig};
use super::train::EpochRecord;
use crate::error::{Error, Result};
use crate::neural::{softmax, softmax_cross_entropy_indices, Layer, Mode, Sequential, Tensor};

/// Rows per forward pass during prediction and evaluation.
pub const INFERENCE_BATCH: usize = 32;

/// Global standardisation applied to spectrogram inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputStats {
    pub mean: f64,
    pub std: f64,
}

impl InputStats {
    /// Mean and standard deviation over every entry of the selected rows.
    /// A zero spread is replaced by 1.
    pub fn fit(x: &Tensor<f32>, rows: &[usize]) -> Result<Self> {
        let inner: usize = x.shape()[1..].iter().product();
        let n = (rows.len() * inner) as f64;
        if n == 0.0 {
            return Err(Error::Data("cannot standardise an empty set".into()));
        }
        let row = |r: usize| &x.data()[r * inner..(r + 1) * inner];
        let mean = rows
            .iter()
            .map(|&r| row(r).iter().map(|&v| v as f64).sum::<f64>())
            .sum::<f64>()
            / n;
        let var = rows
            .iter()
            .map(|&r| row(r).iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>())
            .sum::<f64>()
            / n;
        let std = if var > 0.0 { var.sqrt() } else { 1.0 };
        if !(mean.is_finite() && std.is_finite()) {
            return Err(Error::NumericFault("input statistics are not finite".into()));
        }
        Ok(Self { mean, std })
    }

    pub fn apply(&self, t: &mut Tensor<f32>) {
        let (m, s) = (self.mean as f32, self.std as f32);
        t.data_mut().iter_mut().for_each(|v| *v = (*v - m) / s);
    }
}

/// Per-row class probabilities and argmax labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// `N x K`, rows sum to one.
    pub probs: Tensor<f32>,
    pub labels: Vec<usize>,
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<T: PartialOrd + Copy>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// A deep spectrogram classifier with everything needed to use it later.
pub struct DeepModel {
    pub arch: ArchitectureConfig,
    pub class_order: Vec<String>,
    /// Seed the parameters were initialised from.
    pub seed: u64,
    /// Set by training; prediction standardises inputs with it.
    pub input_stats: Option<InputStats>,
    pub network: Sequential<f32>,
    pub curves: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
}

/// An untrained model for `arch`, initialised deterministically from `seed`.
pub fn build_model(arch: &ArchitectureConfig, class_order: &[String], seed: u64) -> Result<DeepModel> {
    if class_order.len() != arch.n_classes {
        return Err(Error::Config(format!(
            "{} class labels for a {}-class architecture",
            class_order.len(),
            arch.n_classes
        )));
    }
    Ok(DeepModel {
        arch: arch.clone(),
        class_order: class_order.to_vec(),
        seed,
        input_stats: None,
        network: build_network(arch, seed)?,
        curves: Vec::new(),
        best_epoch: None,
    })
}

impl DeepModel {
    pub fn input_shape(&self) -> [usize; 2] {
        [self.arch.input_frames, self.arch.input_bands]
    }

    pub(crate) fn check_input(&self, x: &Tensor<f32>) -> Result<usize> {
        let [n, t, m] = x.dims::<3>("model input")?;
        if [t, m] != self.input_shape() {
            return Err(Error::shape(format!(
                "model expects N x {} x {}, got {:?}",
                self.arch.input_frames,
                self.arch.input_bands,
                x.shape()
            )));
        }
        Ok(n)
    }

    /// Gathers `rows`, standardised with the model's input statistics.
    pub(crate) fn batch(&self, x: &Tensor<f32>, rows: &[usize]) -> Tensor<f32> {
        let mut b = x.select_outer(rows);
        if let Some(stats) = &self.input_stats {
            stats.apply(&mut b);
        }
        b
    }

    /// Raw network outputs in inference mode.
    pub fn logits(&mut self, x: &Tensor<f32>) -> Result<Tensor<f32>> {
        let n = self.check_input(x)?;
        let k = self.arch.n_classes;
        let mut out = Vec::with_capacity(n * k);
        let rows: Vec<usize> = (0..n).collect();
        for chunk in rows.chunks(INFERENCE_BATCH) {
            let b = self.batch(x, chunk);
            out.extend_from_slice(self.network.forward(&b, Mode::Infer)?.data());
        }
        Tensor::from_vec(&[n, k], out)
    }

    pub fn predict(&mut self, x: &Tensor<f32>) -> Result<Prediction> {
        let probs = softmax(&self.logits(x)?)?;
        let k = self.arch.n_classes;
        let labels = probs.data().chunks_exact(k).map(argmax).collect();
        Ok(Prediction { probs, labels })
    }

    /// Mean cross-entropy and accuracy over the selected rows in inference
    /// mode.
    pub fn evaluate(&mut self, x: &Tensor<f32>, y: &[usize], rows: &[usize]) -> Result<(f64, f64)> {
        self.check_input(x)?;
        if rows.is_empty() {
            return Err(Error::Data("cannot evaluate on zero rows".into()));
        }
        let mut loss = 0.0;
        let mut correct = 0usize;
        for chunk in rows.chunks(INFERENCE_BATCH) {
            let b = self.batch(x, chunk);
            let logits = self.network.forward(&b, Mode::Infer)?;
            let labels: Vec<usize> = chunk.iter().map(|&r| y[r]).collect();
            let ce = softmax_cross_entropy_indices(&logits, &labels)?;
            loss += ce.loss * chunk.len() as f64;
            correct += ce
                .probs
                .data()
                .chunks_exact(self.arch.n_classes)
                .zip(&labels)
                .filter(|(p, &l)| argmax(p) == l)
                .count();
        }
        Ok((loss / rows.len() as f64, correct as f64 / rows.len() as f64))
    }

    /// Copies of every parameter and buffer, in a fixed order.
    pub fn snapshot(&self) -> Vec<Tensor<f32>> {
        let mut out: Vec<Tensor<f32>> =
            self.network.params().into_iter().map(|(_, p)| p.value.clone()).collect();
        out.extend(self.network.buffers().into_iter().map(|(_, b)| b.clone()));
        out
    }

    pub fn restore(&mut self, snapshot: &[Tensor<f32>]) {
        let mut it = snapshot.iter();
        for (_, p) in self.network.params_mut() {
            p.value = it.next().expect("snapshot matches network").clone();
        }
        for (_, b) in self.network.buffers_mut() {
            *b = it.next().expect("snapshot matches network").clone();
        }
    }
}
