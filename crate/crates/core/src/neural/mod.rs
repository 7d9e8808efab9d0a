//! A small deterministic neural network toolkit: tensors, layers with
//! hand-written backward passes, cross-entropy, Adam and a finite-difference
//! gradient checker.

mod activation;
mod adam;
mod container;
mod conv;
mod dense;
pub mod gradcheck;
mod layer;
mod loss;
mod lstm;
mod norm;
mod pool;
mod scalar;
mod tensor;

pub use activation::{Dropout, Relu};
pub use adam::{Adam, AdamConfig};
pub use container::{Parallel, Sequential};
pub use conv::Conv1d;
pub use dense::Dense;
pub use gradcheck::{gradient_check, gradient_check_classifier, gradient_check_cross_entropy};
pub use layer::{Layer, Mode, Param};
pub use loss::{one_hot, softmax, softmax_cross_entropy, softmax_cross_entropy_indices, CrossEntropy};
pub use lstm::{Lstm, FORGET_BIAS};
pub use norm::{BatchNorm1d, BN_EPSILON, BN_MOMENTUM};
pub use pool::{Flatten, MaxPool1d};
pub use scalar::{gemm, MatRef, Scalar};
pub use tensor::Tensor;
