use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use super::loss::softmax_cross_entropy_indices;
use super::{Layer, Mode, Tensor};
use crate::error::{Error, Result};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;
/// Inputs placing any kink closer than this are resampled.
pub const KINK_DISTANCE: f64 = 1e-4;
const MAX_RESAMPLES: usize = 100;

/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares analytic gradients of `layer` against central finite
/// differences for the scalar objective `sum(out * r)` with a random
/// projection `r`. Covers every parameter entry and every input entry;
/// returns the largest relative error.
pub fn gradient_check(layer: &mut dyn Layer<f64>, input_shape: &[usize], seed: u64) -> Result<f64> {
    let out_shape = layer.output_shape(input_shape)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n: usize = out_shape.iter().product();
    let r: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let r = Tensor::from_vec(&out_shape, r)?;
    let objective = move |out: &Tensor<f64>| -> Result<(f64, Tensor<f64>)> {
        let loss = out.data().iter().zip(r.data()).map(|(a, b)| a * b).sum();
        Ok((loss, r.clone()))
    };
    check(layer, input_shape, seed, &objective)
}

/// Like [`gradient_check`] but with the network's logits fed into softmax
/// cross-entropy against `labels`.
pub fn gradient_check_classifier(
    net: &mut dyn Layer<f64>,
    input_shape: &[usize],
    labels: &[usize],
    seed: u64,
) -> Result<f64> {
    let labels = labels.to_vec();
    let objective = move |out: &Tensor<f64>| -> Result<(f64, Tensor<f64>)> {
        let ce = softmax_cross_entropy_indices(out, &labels)?;
        Ok((ce.loss, ce.grad))
    };
    check(net, input_shape, seed, &objective)
}

/// Checks the softmax cross-entropy gradient with respect to random logits.
pub fn gradient_check_cross_entropy(batch: usize, classes: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..batch)
        .map(|_| Uniform::new(0, classes).expect("classes > 0").sample(&mut rng))
        .collect();
    let logits: Vec<f64> = (0..batch * classes)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let mut logits = Tensor::from_vec(&[batch, classes], logits)?;
    let analytic = softmax_cross_entropy_indices(&logits, &labels)?.grad;
    let mut worst = 0.0f64;
    for i in 0..logits.len() {
        let orig = logits.data()[i];
        logits.data_mut()[i] = orig + FD_STEP;
        let plus = softmax_cross_entropy_indices(&logits, &labels)?.loss;
        logits.data_mut()[i] = orig - FD_STEP;
        let minus = softmax_cross_entropy_indices(&logits, &labels)?.loss;
        logits.data_mut()[i] = orig;
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        worst = worst.max(relative_error(analytic.data()[i], numeric));
    }
    Ok(worst)
}

type Objective<'a> = dyn Fn(&Tensor<f64>) -> Result<(f64, Tensor<f64>)> + 'a;

fn evaluate(layer: &mut dyn Layer<f64>, x: &Tensor<f64>, objective: &Objective) -> Result<f64> {
    let out = layer.forward(x, Mode::Train)?;
    let (loss, _) = objective(&out)?;
    if !loss.is_finite() {
        return Err(Error::NumericFault(format!("objective evaluated to {loss}")));
    }
    Ok(loss)
}

fn check(
    layer: &mut dyn Layer<f64>,
    input_shape: &[usize],
    seed: u64,
    objective: &Objective,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Uniform::new_inclusive(-1.0, 1.0).expect("valid range");
    let n: usize = input_shape.iter().product();
    let mut x = None;
    for _ in 0..MAX_RESAMPLES {
        let data: Vec<f64> = (0..n).map(|_| unit.sample(&mut rng)).collect();
        let candidate = Tensor::from_vec(input_shape, data)?;
        if !layer.near_kink(&candidate, KINK_DISTANCE)? {
            x = Some(candidate);
            break;
        }
    }
    let mut x = x.ok_or_else(|| {
        Error::NumericFault("could not sample an input away from non-differentiable points".into())
    })?;

    layer.zero_grad();
    let out = layer.forward(&x, Mode::Train)?;
    let (_, dout) = objective(&out)?;
    let dx = layer.backward(&dout)?;
    dx.check_finite("input gradient")?;
    let analytic: Vec<Vec<f64>> = layer
        .params()
        .iter()
        .map(|(_, p)| p.grad.data().to_vec())
        .collect();

    let mut worst = 0.0f64;
    for (pi, grads) in analytic.iter().enumerate() {
        for (j, &a) in grads.iter().enumerate() {
            let nudge = |layer: &mut dyn Layer<f64>, delta: f64| {
                layer.params_mut()[pi].1.value.data_mut()[j] += delta;
            };
            nudge(layer, FD_STEP);
            let plus = evaluate(layer, &x, objective)?;
            nudge(layer, -2.0 * FD_STEP);
            let minus = evaluate(layer, &x, objective)?;
            nudge(layer, FD_STEP);
            worst = worst.max(relative_error(a, (plus - minus) / (2.0 * FD_STEP)));
        }
    }
    for j in 0..x.len() {
        let orig = x.data()[j];
        x.data_mut()[j] = orig + FD_STEP;
        let plus = evaluate(layer, &x, objective)?;
        x.data_mut()[j] = orig - FD_STEP;
        let minus = evaluate(layer, &x, objective)?;
        x.data_mut()[j] = orig;
        worst = worst.max(relative_error(dx.data()[j], (plus - minus) / (2.0 * FD_STEP)));
    }
    if worst.is_nan() {
        return Err(Error::NumericFault("gradient check produced NaN".into()));
    }
    Ok(worst)
}
