use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Layer, Mode, Scalar, Tensor};
use crate::error::{Error, Result};

/// Rectified linear unit. The derivative at exactly zero is taken as zero.
#[derive(Default)]
pub struct Relu {
    mask: Vec<bool>,
}

impl Relu {
    pub fn new() -> Self {
        Self::default()
    }
}

impl<T: Scalar> Layer<T> for Relu {
    fn kind(&self) -> &'static str {
        "relu"
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        Ok(input.to_vec())
    }

    fn forward(&mut self, x: &Tensor<T>, _mode: Mode) -> Result<Tensor<T>> {
        self.mask = x.data().iter().map(|&v| v > T::zero()).collect();
        Ok(x.map(|v| if v > T::zero() { v } else { T::zero() }))
    }

    fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        if grad.len() != self.mask.len() {
            return Err(Error::Contract("relu backward does not match forward".into()));
        }
        let mut dx = grad.clone();
        for (d, &m) in dx.data_mut().iter_mut().zip(&self.mask) {
            if !m {
                *d = T::zero();
            }
        }
        Ok(dx)
    }

    fn near_kink(&mut self, x: &Tensor<T>, tol: f64) -> Result<bool> {
        Ok(x.data().iter().any(|v| v.to_f64().is_some_and(|v| v.abs() < tol)))
    }
}

/// Inverted dropout: in training each entry is zeroed with probability
/// `rate` and survivors are scaled by `1 / (1 - rate)`; inference is the
/// identity.
///
/// Masks come from a ChaCha stream keyed by the layer seed and a call
/// counter, so a run is reproducible from its seed alone.
pub struct Dropout {
    rate: f64,
    seed: u64,
    calls: u64,
    mask: Option<Vec<f64>>,
}

impl Dropout {
    pub fn new(rate: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!("dropout rate must be in [0, 1), got {rate}")));
        }
        Ok(Self {
            rate,
            seed,
            calls: 0,
            mask: None,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

impl<T: Scalar> Layer<T> for Dropout {
    fn kind(&self) -> &'static str {
        "dropout"
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        Ok(input.to_vec())
    }

    fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        if mode == Mode::Infer || self.rate == 0.0 {
            self.mask = None;
            return Ok(x.clone());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.calls);
        self.calls += 1;
        let keep = 1.0 / (1.0 - self.rate);
        let mask: Vec<f64> = (0..x.len())
            .map(|_| if rng.random::<f64>() < self.rate { 0.0 } else { keep })
            .collect();
        let mut out = x.clone();
        for (o, &m) in out.data_mut().iter_mut().zip(&mask) {
            *o *= T::of(m);
        }
        self.mask = Some(mask);
        Ok(out)
    }

    fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let mut dx = grad.clone();
        if let Some(mask) = &self.mask {
            if mask.len() != grad.len() {
                return Err(Error::Contract("dropout backward does not match forward".into()));
            }
            for (d, &m) in dx.data_mut().iter_mut().zip(mask) {
                *d *= T::of(m);
            }
        }
        Ok(dx)
    }
}
