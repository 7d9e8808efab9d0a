use super::{Layer, Mode, Param, Scalar, Tensor};
use crate::error::{Error, Result};

pub const BN_EPSILON: f64 = 1e-5;
/// Weight of the old running statistic in each update.
pub const BN_MOMENTUM: f64 = 0.9;

/// Batch normalisation over the last (channel) axis.
///
/// Training uses the biased batch variance over every non-channel position
/// and updates running statistics as `m * running + (1 - m) * batch`.
/// Inference uses the running statistics and fails if none were ever
/// accumulated.
pub struct BatchNorm1d<T> {
    channels: usize,
    gamma: Param<T>,
    beta: Param<T>,
    running_mean: Tensor<T>,
    running_var: Tensor<T>,
    /// Number of training batches seen, stored as a one-element tensor so it
    /// travels with the other buffers.
    batches: Tensor<T>,
    cache: Option<BnCache<T>>,
}

struct BnCache<T> {
    shape: Vec<usize>,
    /// Normalised input.
    x_hat: Vec<T>,
    inv_std: Vec<T>,
    mode: Mode,
}

impl<T: Scalar> BatchNorm1d<T> {
    pub fn new(channels: usize) -> Self {
        assert!(channels > 0);
        Self {
            channels,
            gamma: Param::new(Tensor::full(&[channels], T::one()), false),
            beta: Param::new(Tensor::zeros(&[channels]), false),
            running_mean: Tensor::zeros(&[channels]),
            running_var: Tensor::full(&[channels], T::one()),
            batches: Tensor::zeros(&[1]),
            cache: None,
        }
    }

    pub fn running_mean(&self) -> &[T] {
        self.running_mean.data()
    }

    pub fn running_var(&self) -> &[T] {
        self.running_var.data()
    }

    fn check(&self, shape: &[usize]) -> Result<()> {
        if shape.len() < 2 || shape[shape.len() - 1] != self.channels {
            return Err(Error::shape(format!(
                "batch norm expects trailing axis of {} channels, got {shape:?}",
                self.channels
            )));
        }
        Ok(())
    }
}

impl<T: Scalar> Layer<T> for BatchNorm1d<T> {
    fn kind(&self) -> &'static str {
        "batch_norm"
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        self.check(input)?;
        Ok(input.to_vec())
    }

    fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        self.check(x.shape())?;
        let c = self.channels;
        let n = x.len() / c;
        if n == 0 {
            return Err(Error::shape("batch norm on an empty batch"));
        }
        let gamma = self.gamma.value.data();
        let beta = self.beta.value.data();
        let mut out = x.clone();
        match mode {
            Mode::Train => {
                if n < 2 {
                    return Err(Error::shape(
                        "batch norm training needs at least two positions per channel",
                    ));
                }
                let mut mean = vec![0.0f64; c];
                for row in x.data().chunks_exact(c) {
                    for (m, v) in mean.iter_mut().zip(row) {
                        *m += v.to_f64().unwrap_or(f64::NAN);
                    }
                }
                mean.iter_mut().for_each(|m| *m /= n as f64);
                let mut var = vec![0.0f64; c];
                for row in x.data().chunks_exact(c) {
                    for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                        let d = v.to_f64().unwrap_or(f64::NAN) - m;
                        *s += d * d;
                    }
                }
                var.iter_mut().for_each(|s| *s /= n as f64);
                let inv_std: Vec<T> = var.iter().map(|v| T::of(1.0 / (v + BN_EPSILON).sqrt())).collect();
                let mut x_hat = vec![T::zero(); x.len()];
                for ((xh, o), row) in x_hat
                    .chunks_exact_mut(c)
                    .zip(out.data_mut().chunks_exact_mut(c))
                    .zip(x.data().chunks_exact(c))
                {
                    for j in 0..c {
                        xh[j] = (row[j] - T::of(mean[j])) * inv_std[j];
                        o[j] = gamma[j] * xh[j] + beta[j];
                    }
                }
                let m = T::of(BN_MOMENTUM);
                let one_m = T::of(1.0 - BN_MOMENTUM);
                for j in 0..c {
                    let rm = &mut self.running_mean.data_mut()[j];
                    *rm = m * *rm + one_m * T::of(mean[j]);
                    let rv = &mut self.running_var.data_mut()[j];
                    *rv = m * *rv + one_m * T::of(var[j]);
                }
                self.batches.data_mut()[0] += T::one();
                self.cache = Some(BnCache {
                    shape: x.shape().to_vec(),
                    x_hat,
                    inv_std,
                    mode,
                });
            }
            Mode::Infer => {
                if self.batches.data()[0] <= T::zero() {
                    return Err(Error::UninitializedStats);
                }
                let inv_std: Vec<T> = self
                    .running_var
                    .data()
                    .iter()
                    .map(|&v| T::one() / (v + T::of(BN_EPSILON)).sqrt())
                    .collect();
                let mean = self.running_mean.data();
                let mut x_hat = vec![T::zero(); x.len()];
                for (xh, o) in x_hat.chunks_exact_mut(c).zip(out.data_mut().chunks_exact_mut(c)) {
                    for j in 0..c {
                        xh[j] = (o[j] - mean[j]) * inv_std[j];
                        o[j] = gamma[j] * xh[j] + beta[j];
                    }
                }
                self.cache = Some(BnCache {
                    shape: x.shape().to_vec(),
                    x_hat,
                    inv_std,
                    mode,
                });
            }
        }
        Ok(out)
    }

    fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::Contract("batch norm backward before forward".into()))?;
        if grad.shape() != cache.shape.as_slice() {
            return Err(Error::shape(format!(
                "batch norm gradient {:?} does not match output {:?}",
                grad.shape(),
                cache.shape
            )));
        }
        let c = self.channels;
        let gamma = self.gamma.value.data();
        let mut dx = grad.clone();
        let mut sum_dy = vec![T::zero(); c];
        let mut sum_dy_xhat = vec![T::zero(); c];
        for (dy, xh) in grad.data().chunks_exact(c).zip(cache.x_hat.chunks_exact(c)) {
            for j in 0..c {
                sum_dy[j] += dy[j];
                sum_dy_xhat[j] += dy[j] * xh[j];
            }
        }
        match cache.mode {
            // Running statistics are constants at inference time.
            Mode::Infer => {
                for d in dx.data_mut().chunks_exact_mut(c) {
                    for j in 0..c {
                        d[j] = d[j] * gamma[j] * cache.inv_std[j];
                    }
                }
            }
            Mode::Train => {
                let n = T::of((grad.len() / c) as f64);
                for (d, xh) in dx.data_mut().chunks_exact_mut(c).zip(cache.x_hat.chunks_exact(c)) {
                    for j in 0..c {
                        let scale = gamma[j] * cache.inv_std[j] / n;
                        d[j] = scale * (n * d[j] - sum_dy[j] - xh[j] * sum_dy_xhat[j]);
                    }
                }
            }
        }
        for j in 0..c {
            self.gamma.grad.data_mut()[j] += sum_dy_xhat[j];
            self.beta.grad.data_mut()[j] += sum_dy[j];
        }
        Ok(dx)
    }

    fn params(&self) -> Vec<(String, &Param<T>)> {
        vec![("gamma".into(), &self.gamma), ("beta".into(), &self.beta)]
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Param<T>)> {
        vec![("gamma".into(), &mut self.gamma), ("beta".into(), &mut self.beta)]
    }

    fn buffers(&self) -> Vec<(String, &Tensor<T>)> {
        vec![
            ("running_mean".into(), &self.running_mean),
            ("running_var".into(), &self.running_var),
            ("batches".into(), &self.batches),
        ]
    }

    fn buffers_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        vec![
            ("running_mean".into(), &mut self.running_mean),
            ("running_var".into(), &mut self.running_var),
            ("batches".into(), &mut self.batches),
        ]
    }
}
