use super::{Layer, Mode, Scalar, Tensor};
use crate::error::{Error, Result};

/// Non-overlapping max pooling along time, `B x T x C -> B x floor(T/w) x C`.
/// Trailing frames that do not fill a window are dropped. Ties route the
/// gradient to the earliest frame.
pub struct MaxPool1d {
    width: usize,
    input_shape: Vec<usize>,
    /// Flat input index of each output's maximum.
    argmax: Vec<usize>,
}

impl MaxPool1d {
    pub fn new(width: usize) -> Self {
        assert!(width > 0);
        Self {
            width,
            input_shape: Vec::new(),
            argmax: Vec::new(),
        }
    }
}

impl<T: Scalar> Layer<T> for MaxPool1d {
    fn kind(&self) -> &'static str {
        "max_pool"
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match input {
            [b, t, c] if *t >= self.width => Ok(vec![*b, t / self.width, *c]),
            _ => Err(Error::shape(format!(
                "max pool of width {} expects (batch, time >= width, channels), got {input:?}",
                self.width
            ))),
        }
    }

    fn forward(&mut self, x: &Tensor<T>, _mode: Mode) -> Result<Tensor<T>> {
        let shape = <Self as Layer<T>>::output_shape(self, x.shape())?;
        let [b, t, c] = x.dims::<3>("max pool")?;
        let to = shape[1];
        let mut out = Tensor::zeros(&shape);
        self.argmax = vec![0; b * to * c];
        let xd = x.data();
        for bi in 0..b {
            for o in 0..to {
                for ch in 0..c {
                    let mut best = (bi * t + o * self.width) * c + ch;
                    for k in 1..self.width {
                        let idx = (bi * t + o * self.width + k) * c + ch;
                        if xd[idx] > xd[best] {
                            best = idx;
                        }
                    }
                    let oi = (bi * to + o) * c + ch;
                    out.data_mut()[oi] = xd[best];
                    self.argmax[oi] = best;
                }
            }
        }
        self.input_shape = x.shape().to_vec();
        Ok(out)
    }

    fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        if grad.len() != self.argmax.len() || self.input_shape.is_empty() {
            return Err(Error::Contract(
                "max pool backward does not match the preceding forward".into(),
            ));
        }
        let mut dx = Tensor::zeros(&self.input_shape);
        for (&g, &i) in grad.data().iter().zip(&self.argmax) {
            dx.data_mut()[i] += g;
        }
        Ok(dx)
    }

    /// A window whose top two values differ by less than `tol` (but are not
    /// exactly equal) would switch winners under a finite perturbation.
    /// Exact ties are harmless: they come from clamped ReLU zeros that stay
    /// tied.
    fn near_kink(&mut self, x: &Tensor<T>, tol: f64) -> Result<bool> {
        let [b, t, c] = x.dims::<3>("max pool")?;
        let xd = x.data();
        for bi in 0..b {
            for o in 0..t / self.width {
                for ch in 0..c {
                    let mut vals: Vec<f64> = (0..self.width)
                        .map(|k| xd[(bi * t + o * self.width + k) * c + ch].to_f64().unwrap_or(0.0))
                        .collect();
                    vals.sort_by(|a, b| b.total_cmp(a));
                    if vals.len() > 1 {
                        let gap = vals[0] - vals[1];
                        if gap > 0.0 && gap < tol {
                            return Ok(true);
                        }
                    }
                }
            }
        }
        Ok(false)
    }
}

/// Collapses everything after the batch axis.
#[derive(Default)]
pub struct Flatten {
    input_shape: Vec<usize>,
}

impl Flatten {
    pub fn new() -> Self {
        Self::default()
    }
}

impl<T: Scalar> Layer<T> for Flatten {
    fn kind(&self) -> &'static str {
        "flatten"
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match input {
            [b, rest @ ..] if !rest.is_empty() => Ok(vec![*b, rest.iter().product()]),
            _ => Err(Error::shape(format!("flatten needs rank >= 2, got {input:?}"))),
        }
    }

    fn forward(&mut self, x: &Tensor<T>, _mode: Mode) -> Result<Tensor<T>> {
        let shape = <Self as Layer<T>>::output_shape(self, x.shape())?;
        self.input_shape = x.shape().to_vec();
        x.clone().reshape(&shape)
    }

    fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        grad.clone().reshape(&self.input_shape)
    }
}
