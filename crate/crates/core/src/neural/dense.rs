use rand::Rng;

use super::layer::{kaiming_bound, sum_rows, uniform_tensor};
use super::scalar::{gemm, MatRef};
use super::{Layer, Mode, Param, Scalar, Tensor};
use crate::error::{Error, Result};

/// Fully connected layer, `B x in -> B x out`. Weights are `in x out`.
pub struct Dense<T> {
    inputs: usize,
    outputs: usize,
    weight: Param<T>,
    bias: Param<T>,
    input: Option<Tensor<T>>,
}

impl<T: Scalar> Dense<T> {
    pub fn new<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        assert!(inputs > 0 && outputs > 0);
        Self {
            inputs,
            outputs,
            weight: Param::new(uniform_tensor(&[inputs, outputs], kaiming_bound(inputs), rng), true),
            bias: Param::new(Tensor::zeros(&[outputs]), false),
            input: None,
        }
    }
}

impl<T: Scalar> Layer<T> for Dense<T> {
    fn kind(&self) -> &'static str {
        "dense"
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match input {
            [b, f] if *f == self.inputs => Ok(vec![*b, self.outputs]),
            _ => Err(Error::shape(format!(
                "dense expects (batch, {}), got {input:?}",
                self.inputs
            ))),
        }
    }

    fn forward(&mut self, x: &Tensor<T>, _mode: Mode) -> Result<Tensor<T>> {
        self.output_shape(x.shape())?;
        let b = x.shape()[0];
        let mut out = Tensor::zeros(&[b, self.outputs]);
        for row in out.data_mut().chunks_exact_mut(self.outputs) {
            row.copy_from_slice(self.bias.value.data());
        }
        gemm(
            T::one(),
            MatRef::row_major(x.data(), b, self.inputs),
            MatRef::row_major(self.weight.value.data(), self.inputs, self.outputs),
            T::one(),
            out.data_mut(),
        );
        self.input = Some(x.clone());
        Ok(out)
    }

    fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let x = self
            .input
            .as_ref()
            .ok_or_else(|| Error::Contract("dense backward before forward".into()))?;
        let b = x.shape()[0];
        if grad.shape() != [b, self.outputs] {
            return Err(Error::shape(format!(
                "dense gradient {:?} does not match output ({b}, {})",
                grad.shape(),
                self.outputs
            )));
        }
        let dy = MatRef::row_major(grad.data(), b, self.outputs);
        let xm = MatRef::row_major(x.data(), b, self.inputs);
        gemm(T::one(), xm.t(), dy, T::one(), self.weight.grad.data_mut());
        sum_rows(grad.data(), self.outputs, self.bias.grad.data_mut());
        let mut dx = Tensor::zeros(&[b, self.inputs]);
        let w = MatRef::row_major(self.weight.value.data(), self.inputs, self.outputs);
        gemm(T::one(), dy, w.t(), T::zero(), dx.data_mut());
        Ok(dx)
    }

    fn params(&self) -> Vec<(String, &Param<T>)> {
        vec![("weight".into(), &self.weight), ("bias".into(), &self.bias)]
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Param<T>)> {
        vec![("weight".into(), &mut self.weight), ("bias".into(), &mut self.bias)]
    }
}
