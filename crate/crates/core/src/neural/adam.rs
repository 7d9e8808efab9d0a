use serde::{Deserialize, Serialize};

use super::{Param, Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam with coupled L2: for parameters marked `decay`, the gradient becomes
/// `g + l2 * theta` before the moment updates.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub config: AdamConfig,
    pub l2: f64,
    step_count: u64,
    first_moment: Vec<Tensor<T>>,
    second_moment: Vec<Tensor<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(config: AdamConfig, l2: f64) -> Self {
        Self {
            config,
            l2,
            step_count: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn second_moments(&self) -> &[Tensor<T>] {
        &self.second_moment
    }

    /// Applies one update using the gradients stored in `params`. The
    /// parameter list must be the same, in the same order, on every call.
    pub fn step<'a, I>(&mut self, params: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a mut Param<T>>,
    {
        let params: Vec<&mut Param<T>> = params.into_iter().collect();
        if self.first_moment.is_empty() {
            self.first_moment = params.iter().map(|p| Tensor::zeros(p.value.shape())).collect();
            self.second_moment = self.first_moment.clone();
        }
        if params.len() != self.first_moment.len()
            || params
                .iter()
                .zip(&self.first_moment)
                .any(|(p, m)| p.value.shape() != m.shape())
        {
            return Err(Error::Contract(
                "parameter list changed between optimiser steps".into(),
            ));
        }
        self.step_count += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step_count as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for ((p, m), v) in params
            .into_iter()
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            let l2 = if p.decay { self.l2 } else { 0.0 };
            let grad = p.grad.data();
            let value = p.value.data_mut();
            for (((theta, &g), mi), vi) in value
                .iter_mut()
                .zip(grad)
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                let th = theta.to_f64().unwrap_or(f64::NAN);
                let g = g.to_f64().unwrap_or(f64::NAN) + l2 * th;
                let mn = beta1 * mi.to_f64().unwrap_or(0.0) + (1.0 - beta1) * g;
                let vn = beta2 * vi.to_f64().unwrap_or(0.0) + (1.0 - beta2) * g * g;
                *mi = T::of(mn);
                *vi = T::of(vn);
                let update = lr * (mn / c1) / ((vn / c2).sqrt() + epsilon);
                *theta = T::of(th - update);
            }
            p.value.check_finite("adam update")?;
        }
        Ok(())
    }
}
