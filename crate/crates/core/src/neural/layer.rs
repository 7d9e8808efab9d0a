use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::{Scalar, Tensor};
use crate::error::Result;

/// Whether a forward pass is part of training (batch statistics, dropout
/// active) or inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// A trainable tensor with its accumulated gradient.
#[derive(Debug, Clone)]
pub struct Param<T> {
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
    /// Whether L2 regularisation applies (weights yes, biases and
    /// normalisation parameters no).
    pub decay: bool,
}

impl<T: Scalar> Param<T> {
    pub fn new(value: Tensor<T>, decay: bool) -> Self {
        let grad = Tensor::zeros(value.shape());
        Self { value, grad, decay }
    }
}

/// A differentiable network stage.
///
/// `forward` caches whatever `backward` needs; `backward` must follow the
/// forward pass it differentiates. Parameter gradients accumulate until
/// [`Layer::zero_grad`].
pub trait Layer<T: Scalar>: Send {
    fn kind(&self) -> &'static str;

    fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>>;

    /// Takes dL/d(output), accumulates parameter gradients, returns dL/d(input).
    fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>>;

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>>;

    fn params(&self) -> Vec<(String, &Param<T>)> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Param<T>)> {
        Vec::new()
    }

    /// Non-trainable state that must survive a checkpoint round trip.
    fn buffers(&self) -> Vec<(String, &Tensor<T>)> {
        Vec::new()
    }

    fn buffers_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        Vec::new()
    }

    /// True when `x` puts some non-differentiable point of this layer within
    /// `tol`, which would make finite differences meaningless. May run a
    /// training-mode forward pass.
    fn near_kink(&mut self, _x: &Tensor<T>, _tol: f64) -> Result<bool> {
        Ok(false)
    }

    fn zero_grad(&mut self) {
        for (_, p) in self.params_mut() {
            p.grad.fill(T::zero());
        }
    }
}

pub(crate) fn uniform_tensor<T: Scalar, R: Rng + ?Sized>(
    shape: &[usize],
    bound: f64,
    rng: &mut R,
) -> Tensor<T> {
    let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
    let n = shape.iter().product();
    let data = (0..n).map(|_| T::of(dist.sample(rng))).collect();
    Tensor::from_vec(shape, data).expect("length matches shape")
}

/// Kaiming (He) uniform bound for ReLU layers.
pub(crate) fn kaiming_bound(fan_in: usize) -> f64 {
    (6.0 / fan_in as f64).sqrt()
}

/// Adds every row of a `rows x cols` buffer into `acc`.
pub(crate) fn sum_rows<T: Scalar>(data: &[T], cols: usize, acc: &mut [T]) {
    for row in data.chunks_exact(cols) {
        for (a, &v) in acc.iter_mut().zip(row) {
            *a += v;
        }
    }
}
