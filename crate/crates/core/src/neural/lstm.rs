use rand::Rng;

use super::layer::{sum_rows, uniform_tensor};
use super::scalar::{gemm, MatRef};
use super::{Layer, Mode, Param, Scalar, Tensor};
use crate::error::{Error, Result};

/// Initial value of the forget-gate bias.
pub const FORGET_BIAS: f64 = 1.0;

/// Single-layer LSTM returning the final hidden state.
///
/// Input `B x T x C`, output `B x H`, zero initial state. Gate blocks in the
/// packed `4H` axis are ordered input, forget, cell candidate, output.
pub struct Lstm<T> {
    inputs: usize,
    hidden: usize,
    w_x: Param<T>,
    w_h: Param<T>,
    bias: Param<T>,
    cache: Option<LstmCache<T>>,
}

struct LstmCache<T> {
    x: Tensor<T>,
    steps: usize,
    /// Activated gates, `T x B x 4H`.
    gates: Vec<T>,
    /// Cell states `c_0..c_T`, `(T + 1) x B x H`.
    cells: Vec<T>,
    /// Hidden states `h_0..h_T`, `(T + 1) x B x H`.
    hiddens: Vec<T>,
}

fn sigmoid<T: Scalar>(v: T) -> T {
    T::one() / (T::one() + (-v).exp())
}

impl<T: Scalar> Lstm<T> {
    pub fn new<R: Rng + ?Sized>(inputs: usize, hidden: usize, rng: &mut R) -> Self {
        assert!(inputs > 0 && hidden > 0);
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut bias = Tensor::zeros(&[4 * hidden]);
        bias.data_mut()[hidden..2 * hidden].fill(T::of(FORGET_BIAS));
        Self {
            inputs,
            hidden,
            w_x: Param::new(uniform_tensor(&[inputs, 4 * hidden], bound, rng), true),
            w_h: Param::new(uniform_tensor(&[hidden, 4 * hidden], bound, rng), true),
            bias: Param::new(bias, false),
            cache: None,
        }
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }
}

impl<T: Scalar> Layer<T> for Lstm<T> {
    fn kind(&self) -> &'static str {
        "lstm"
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match input {
            [b, _, c] if *c == self.inputs => Ok(vec![*b, self.hidden]),
            _ => Err(Error::shape(format!(
                "lstm expects (batch, time, {}), got {input:?}",
                self.inputs
            ))),
        }
    }

    fn forward(&mut self, x: &Tensor<T>, _mode: Mode) -> Result<Tensor<T>> {
        self.output_shape(x.shape())?;
        let [b, steps, c] = x.dims::<3>("lstm")?;
        let h = self.hidden;
        let g4 = 4 * h;
        // Input projections for every (batch, step) row at once.
        let mut xg = vec![T::zero(); b * steps * g4];
        for row in xg.chunks_exact_mut(g4) {
            row.copy_from_slice(self.bias.value.data());
        }
        gemm(
            T::one(),
            MatRef::row_major(x.data(), b * steps, c),
            MatRef::row_major(self.w_x.value.data(), c, g4),
            T::one(),
            &mut xg,
        );
        let mut gates = vec![T::zero(); steps * b * g4];
        let mut cells = vec![T::zero(); (steps + 1) * b * h];
        let mut hiddens = vec![T::zero(); (steps + 1) * b * h];
        let w_h = MatRef::row_major(self.w_h.value.data(), h, g4);
        for t in 0..steps {
            let pre = &mut gates[t * b * g4..(t + 1) * b * g4];
            let h_prev = &hiddens[t * b * h..(t + 1) * b * h];
            gemm(T::one(), MatRef::row_major(h_prev, b, h), w_h, T::zero(), pre);
            let (done, rest) = cells.split_at_mut((t + 1) * b * h);
            let c_prev = &done[t * b * h..];
            let c_next = &mut rest[..b * h];
            let h_next = &mut hiddens[(t + 1) * b * h..(t + 2) * b * h];
            for bi in 0..b {
                let z = &mut pre[bi * g4..(bi + 1) * g4];
                let xrow = &xg[(bi * steps + t) * g4..(bi * steps + t + 1) * g4];
                for (zj, &xj) in z.iter_mut().zip(xrow) {
                    *zj += xj;
                }
                for j in 0..h {
                    let i = sigmoid(z[j]);
                    let f = sigmoid(z[h + j]);
                    let g = z[2 * h + j].tanh();
                    let o = sigmoid(z[3 * h + j]);
                    z[j] = i;
                    z[h + j] = f;
                    z[2 * h + j] = g;
                    z[3 * h + j] = o;
                    let cell = f * c_prev[bi * h + j] + i * g;
                    c_next[bi * h + j] = cell;
                    h_next[bi * h + j] = o * cell.tanh();
                }
            }
        }
        let out = Tensor::from_vec(&[b, h], hiddens[steps * b * h..].to_vec())?;
        self.cache = Some(LstmCache {
            x: x.clone(),
            steps,
            gates,
            cells,
            hiddens,
        });
        Ok(out)
    }

    fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::Contract("lstm backward before forward".into()))?;
        let b = cache.x.shape()[0];
        let c = self.inputs;
        let h = self.hidden;
        let g4 = 4 * h;
        let steps = cache.steps;
        if grad.shape() != [b, h] {
            return Err(Error::shape(format!(
                "lstm gradient {:?} does not match output ({b}, {h})",
                grad.shape()
            )));
        }
        // Pre-activation gradients laid out like the input rows, (b, t) major.
        let mut dpre = vec![T::zero(); b * steps * g4];
        let mut dh = grad.data().to_vec();
        let mut dc = vec![T::zero(); b * h];
        let mut da = vec![T::zero(); b * g4];
        let w_h = MatRef::row_major(self.w_h.value.data(), h, g4);
        for t in (0..steps).rev() {
            let gates = &cache.gates[t * b * g4..(t + 1) * b * g4];
            let c_prev = &cache.cells[t * b * h..(t + 1) * b * h];
            let c_t = &cache.cells[(t + 1) * b * h..(t + 2) * b * h];
            for bi in 0..b {
                let z = &gates[bi * g4..(bi + 1) * g4];
                let d = &mut da[bi * g4..(bi + 1) * g4];
                for j in 0..h {
                    let (i, f, g, o) = (z[j], z[h + j], z[2 * h + j], z[3 * h + j]);
                    let k = bi * h + j;
                    let tc = c_t[k].tanh();
                    let dht = dh[k];
                    let dct = dc[k] + dht * o * (T::one() - tc * tc);
                    d[j] = dct * g * i * (T::one() - i);
                    d[h + j] = dct * c_prev[k] * f * (T::one() - f);
                    d[2 * h + j] = dct * i * (T::one() - g * g);
                    d[3 * h + j] = dht * tc * o * (T::one() - o);
                    dc[k] = dct * f;
                }
                dpre[(bi * steps + t) * g4..(bi * steps + t + 1) * g4].copy_from_slice(d);
            }
            let h_prev = &cache.hiddens[t * b * h..(t + 1) * b * h];
            let dam = MatRef::row_major(&da, b, g4);
            gemm(T::one(), MatRef::row_major(h_prev, b, h).t(), dam, T::one(), self.w_h.grad.data_mut());
            gemm(T::one(), dam, w_h.t(), T::zero(), &mut dh);
        }
        let dp = MatRef::row_major(&dpre, b * steps, g4);
        let xm = MatRef::row_major(cache.x.data(), b * steps, c);
        gemm(T::one(), xm.t(), dp, T::one(), self.w_x.grad.data_mut());
        sum_rows(&dpre, g4, self.bias.grad.data_mut());
        let mut dx = Tensor::zeros(&[b, steps, c]);
        let w_x = MatRef::row_major(self.w_x.value.data(), c, g4);
        gemm(T::one(), dp, w_x.t(), T::zero(), dx.data_mut());
        Ok(dx)
    }

    fn params(&self) -> Vec<(String, &Param<T>)> {
        vec![
            ("w_x".into(), &self.w_x),
            ("w_h".into(), &self.w_h),
            ("bias".into(), &self.bias),
        ]
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Param<T>)> {
        vec![
            ("w_x".into(), &mut self.w_x),
            ("w_h".into(), &mut self.w_h),
            ("bias".into(), &mut self.bias),
        ]
    }
}
