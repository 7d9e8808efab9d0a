use rand::Rng;

use super::layer::{kaiming_bound, sum_rows, uniform_tensor};
use super::scalar::{gemm, MatRef};
use super::{Layer, Mode, Param, Scalar, Tensor};
use crate::error::{Error, Result};

/// One-dimensional convolution along time with "same" zero padding.
///
/// Input `B x T x C_in`, output `B x T x C_out`; the kernel width must be
/// odd. Weights are stored as `C_out x width x C_in`.
pub struct Conv1d<T> {
    in_channels: usize,
    out_channels: usize,
    width: usize,
    weight: Param<T>,
    bias: Param<T>,
    padded: Option<Tensor<T>>,
}

impl<T: Scalar> Conv1d<T> {
    pub fn new<R: Rng + ?Sized>(
        in_channels: usize,
        out_channels: usize,
        width: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if in_channels == 0 || out_channels == 0 || width % 2 == 0 {
            return Err(Error::Config(format!(
                "conv1d needs positive channel counts and an odd kernel width, got \
                 {in_channels} -> {out_channels}, width {width}"
            )));
        }
        let bound = kaiming_bound(width * in_channels);
        Ok(Self {
            in_channels,
            out_channels,
            width,
            weight: Param::new(uniform_tensor(&[out_channels, width, in_channels], bound, rng), true),
            bias: Param::new(Tensor::zeros(&[out_channels]), false),
            padded: None,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    fn pad_left(&self) -> usize {
        self.width / 2
    }
}

impl<T: Scalar> Layer<T> for Conv1d<T> {
    fn kind(&self) -> &'static str {
        "conv1d"
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match input {
            [b, t, c] if *c == self.in_channels => Ok(vec![*b, *t, self.out_channels]),
            _ => Err(Error::shape(format!(
                "conv1d expects (batch, time, {}), got {input:?}",
                self.in_channels
            ))),
        }
    }

    fn forward(&mut self, x: &Tensor<T>, _mode: Mode) -> Result<Tensor<T>> {
        self.output_shape(x.shape())?;
        let [b, t, c] = x.dims::<3>("conv1d")?;
        let k = self.out_channels;
        let tp = t + self.width - 1;
        let left = self.pad_left();
        let mut padded = Tensor::zeros(&[b, tp, c]);
        for bi in 0..b {
            let src = &x.data()[bi * t * c..(bi + 1) * t * c];
            let dst = &mut padded.data_mut()[(bi * tp + left) * c..(bi * tp + left + t) * c];
            dst.copy_from_slice(src);
        }
        let mut out = Tensor::zeros(&[b, t, k]);
        let wc = self.width * c;
        let w = MatRef::row_major(self.weight.value.data(), k, wc).t();
        for bi in 0..b {
            let xp = &padded.data()[bi * tp * c..(bi + 1) * tp * c];
            let y = &mut out.data_mut()[bi * t * k..(bi + 1) * t * k];
            for row in y.chunks_exact_mut(k) {
                row.copy_from_slice(self.bias.value.data());
            }
            if t > 0 {
                gemm(T::one(), MatRef::strided(xp, t, wc, c, 1), w, T::one(), y);
            }
        }
        self.padded = Some(padded);
        Ok(out)
    }

    fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let padded = self
            .padded
            .as_ref()
            .ok_or_else(|| Error::Contract("conv1d backward before forward".into()))?;
        let [b, tp, c] = padded.dims::<3>("conv1d cache")?;
        let t = tp + 1 - self.width;
        let k = self.out_channels;
        if grad.shape() != [b, t, k] {
            return Err(Error::shape(format!(
                "conv1d gradient {:?} does not match output ({b}, {t}, {k})",
                grad.shape()
            )));
        }
        let wc = self.width * c;
        sum_rows(grad.data(), k, self.bias.grad.data_mut());
        let mut dx = Tensor::zeros(&[b, t, c]);
        let mut dpatch = vec![T::zero(); t * wc];
        let left = self.pad_left();
        for bi in 0..b {
            let xp = &padded.data()[bi * tp * c..(bi + 1) * tp * c];
            let dy = MatRef::row_major(&grad.data()[bi * t * k..(bi + 1) * t * k], t, k);
            if t == 0 {
                continue;
            }
            let patches = MatRef::strided(xp, t, wc, c, 1);
            gemm(T::one(), dy.t(), patches, T::one(), self.weight.grad.data_mut());
            let w = MatRef::row_major(self.weight.value.data(), k, wc);
            gemm(T::one(), dy, w, T::zero(), &mut dpatch);
            // Scatter the patch gradients back onto the padded timeline and
            // keep only the unpadded part.
            let dxb = &mut dx.data_mut()[bi * t * c..(bi + 1) * t * c];
            for (ti, row) in dpatch.chunks_exact(wc).enumerate() {
                for (j, tap) in row.chunks_exact(c).enumerate() {
                    let pos = ti + j;
                    if pos < left || pos >= left + t {
                        continue;
                    }
                    let dst = &mut dxb[(pos - left) * c..(pos - left + 1) * c];
                    for (d, &v) in dst.iter_mut().zip(tap) {
                        *d += v;
                    }
                }
            }
        }
        Ok(dx)
    }

    fn params(&self) -> Vec<(String, &Param<T>)> {
        vec![("weight".into(), &self.weight), ("bias".into(), &self.bias)]
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Param<T>)> {
        vec![("weight".into(), &mut self.weight), ("bias".into(), &mut self.bias)]
    }
}
