use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Output of [`softmax_cross_entropy`].
#[derive(Debug, Clone)]
pub struct CrossEntropy<T> {
    /// Mean over the batch of `-ln p_true`.
    pub loss: f64,
    pub probs: Tensor<T>,
    /// dL/dlogits, `(probs - labels) / B`.
    pub grad: Tensor<T>,
}

/// Row-wise softmax with the row maximum subtracted first.
pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Result<Tensor<T>> {
    let [_, k] = logits.dims::<2>("softmax")?;
    let mut probs = logits.clone();
    if k == 0 {
        return Ok(probs);
    }
    for row in probs.data_mut().chunks_exact_mut(k) {
        let max = row.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    Ok(probs)
}

pub fn one_hot<T: Scalar>(labels: &[usize], classes: usize) -> Result<Tensor<T>> {
    let mut t = Tensor::zeros(&[labels.len(), classes]);
    for (i, &y) in labels.iter().enumerate() {
        if y >= classes {
            return Err(Error::Label(format!("label {y} outside {classes} classes")));
        }
        t.data_mut()[i * classes + y] = T::one();
    }
    Ok(t)
}

/// Categorical cross-entropy on one-hot `targets`.
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &Tensor<T>,
    targets: &Tensor<T>,
) -> Result<CrossEntropy<T>> {
    let [b, k] = logits.dims::<2>("cross-entropy logits")?;
    if targets.shape() != logits.shape() {
        return Err(Error::shape(format!(
            "targets {:?} do not match logits {:?}",
            targets.shape(),
            logits.shape()
        )));
    }
    let mut labels = Vec::with_capacity(b);
    for (i, row) in targets.data().chunks_exact(k.max(1)).enumerate() {
        let ones = row.iter().filter(|&&v| v == T::one()).count();
        let zeros = row.iter().filter(|&&v| v == T::zero()).count();
        if ones != 1 || ones + zeros != k {
            return Err(Error::Label(format!("target row {i} is not one-hot")));
        }
        labels.push(row.iter().position(|&v| v == T::one()).unwrap_or(0));
    }
    softmax_cross_entropy_indices(logits, &labels)
}

/// Categorical cross-entropy with integer class labels.
pub fn softmax_cross_entropy_indices<T: Scalar>(
    logits: &Tensor<T>,
    labels: &[usize],
) -> Result<CrossEntropy<T>> {
    let [b, k] = logits.dims::<2>("cross-entropy logits")?;
    if labels.len() != b {
        return Err(Error::shape(format!("{} labels for a batch of {b}", labels.len())));
    }
    if b == 0 {
        return Err(Error::shape("cross-entropy on an empty batch"));
    }
    let probs = softmax(logits)?;
    let mut grad = probs.clone();
    let mut total = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        if y >= k {
            return Err(Error::Label(format!("label {y} outside {k} classes")));
        }
        // ln p_y computed as z_y - logsumexp(z) in f64 to survive saturation.
        let row = &logits.data()[i * k..(i + 1) * k];
        let z: Vec<f64> = row.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
        let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        total += lse - z[y];
        grad.data_mut()[i * k + y] -= T::one();
    }
    let inv_b = T::of(1.0 / b as f64);
    grad.data_mut().iter_mut().for_each(|g| *g *= inv_b);
    let loss = total / b as f64;
    if !loss.is_finite() {
        return Err(Error::NumericFault(format!("cross-entropy loss is {loss}")));
    }
    Ok(CrossEntropy { loss, probs, grad })
}
