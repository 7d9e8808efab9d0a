use super::{Layer, Mode, Param, Scalar, Tensor};
use crate::error::{Error, Result};

/// Layers applied in order. Parameter names are `"{layer}.{param}"`.
pub struct Sequential<T> {
    layers: Vec<(String, Box<dyn Layer<T>>)>,
}

impl<T: Scalar> Default for Sequential<T> {
    fn default() -> Self {
        Self { layers: Vec::new() }
    }
}

impl<T: Scalar> Sequential<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, layer: impl Layer<T> + 'static) -> &mut Self {
        self.layers.push((name.into(), Box::new(layer)));
        self
    }

    pub fn with(mut self, name: impl Into<String>, layer: impl Layer<T> + 'static) -> Self {
        self.push(name, layer);
        self
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn layer_names(&self) -> impl Iterator<Item = (&str, &'static str)> {
        self.layers.iter().map(|(n, l)| (n.as_str(), l.kind()))
    }

    /// Shapes after each layer, starting from `input`.
    pub fn trace_shapes(&self, input: &[usize]) -> Result<Vec<(String, Vec<usize>)>> {
        let mut shape = input.to_vec();
        let mut out = Vec::with_capacity(self.layers.len());
        for (name, layer) in &self.layers {
            shape = layer.output_shape(&shape)?;
            out.push((name.clone(), shape.clone()));
        }
        Ok(out)
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|(_, p)| p.value.len()).sum()
    }
}

fn prefixed<V>(prefix: &str, items: Vec<(String, V)>) -> Vec<(String, V)> {
    items
        .into_iter()
        .map(|(n, v)| (format!("{prefix}.{n}"), v))
        .collect()
}

impl<T: Scalar> Layer<T> for Sequential<T> {
    fn kind(&self) -> &'static str {
        "sequential"
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let mut shape = input.to_vec();
        for (_, layer) in &self.layers {
            shape = layer.output_shape(&shape)?;
        }
        Ok(shape)
    }

    fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let mut cur = x.clone();
        for (name, layer) in &mut self.layers {
            cur = layer.forward(&cur, mode)?;
            cur.check_finite(name)?;
        }
        Ok(cur)
    }

    fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let mut cur = grad.clone();
        for (_, layer) in self.layers.iter_mut().rev() {
            cur = layer.backward(&cur)?;
        }
        Ok(cur)
    }

    fn params(&self) -> Vec<(String, &Param<T>)> {
        self.layers
            .iter()
            .flat_map(|(name, l)| prefixed(name, l.params()))
            .collect()
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Param<T>)> {
        self.layers
            .iter_mut()
            .flat_map(|(name, l)| prefixed(name, l.params_mut()))
            .collect()
    }

    fn buffers(&self) -> Vec<(String, &Tensor<T>)> {
        self.layers
            .iter()
            .flat_map(|(name, l)| prefixed(name, l.buffers()))
            .collect()
    }

    fn buffers_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        self.layers
            .iter_mut()
            .flat_map(|(name, l)| prefixed(name, l.buffers_mut()))
            .collect()
    }

    fn near_kink(&mut self, x: &Tensor<T>, tol: f64) -> Result<bool> {
        let mut cur = x.clone();
        for (_, layer) in &mut self.layers {
            if layer.near_kink(&cur, tol)? {
                return Ok(true);
            }
            cur = layer.forward(&cur, Mode::Train)?;
        }
        Ok(false)
    }
}

/// Runs several branches on the same input and concatenates their
/// `B x F_i` outputs along the feature axis.
pub struct Parallel<T> {
    branches: Vec<(String, Sequential<T>)>,
    widths: Vec<usize>,
}

impl<T: Scalar> Parallel<T> {
    pub fn new(branches: Vec<(String, Sequential<T>)>) -> Self {
        assert!(!branches.is_empty());
        Self {
            branches,
            widths: Vec::new(),
        }
    }
}

impl<T: Scalar> Layer<T> for Parallel<T> {
    fn kind(&self) -> &'static str {
        "parallel"
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let mut batch = None;
        let mut total = 0;
        for (name, branch) in &self.branches {
            match branch.output_shape(input)?.as_slice() {
                [b, f] => {
                    if batch.is_some_and(|bb| bb != *b) {
                        return Err(Error::shape("parallel branches disagree on batch size"));
                    }
                    batch = Some(*b);
                    total += f;
                }
                other => {
                    return Err(Error::shape(format!(
                        "parallel branch {name} must output (batch, features), got {other:?}"
                    )))
                }
            }
        }
        Ok(vec![batch.unwrap_or(0), total])
    }

    fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let shape = self.output_shape(x.shape())?;
        let outs = self
            .branches
            .iter_mut()
            .map(|(_, br)| br.forward(x, mode))
            .collect::<Result<Vec<_>>>()?;
        self.widths = outs.iter().map(|o| o.shape()[1]).collect();
        let (b, total) = (shape[0], shape[1]);
        let mut out = Tensor::zeros(&[b, total]);
        for bi in 0..b {
            let mut off = 0;
            for (o, &w) in outs.iter().zip(&self.widths) {
                out.data_mut()[bi * total + off..bi * total + off + w]
                    .copy_from_slice(&o.data()[bi * w..(bi + 1) * w]);
                off += w;
            }
        }
        Ok(out)
    }

    fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let [b, total] = grad.dims::<2>("parallel gradient")?;
        if total != self.widths.iter().sum::<usize>() {
            return Err(Error::Contract("parallel backward does not match forward".into()));
        }
        let mut dx: Option<Tensor<T>> = None;
        let mut off = 0;
        for ((_, br), &w) in self.branches.iter_mut().zip(&self.widths) {
            let mut part = Tensor::zeros(&[b, w]);
            for bi in 0..b {
                part.data_mut()[bi * w..(bi + 1) * w]
                    .copy_from_slice(&grad.data()[bi * total + off..bi * total + off + w]);
            }
            off += w;
            let d = br.backward(&part)?;
            match &mut dx {
                None => dx = Some(d),
                Some(acc) => {
                    for (a, v) in acc.data_mut().iter_mut().zip(d.data()) {
                        *a += *v;
                    }
                }
            }
        }
        dx.ok_or_else(|| Error::Contract("parallel layer without branches".into()))
    }

    fn params(&self) -> Vec<(String, &Param<T>)> {
        self.branches
            .iter()
            .flat_map(|(name, br)| prefixed(name, br.params()))
            .collect()
    }

    fn params_mut(&mut self) -> Vec<(String, &mut Param<T>)> {
        self.branches
            .iter_mut()
            .flat_map(|(name, br)| prefixed(name, br.params_mut()))
            .collect()
    }

    fn buffers(&self) -> Vec<(String, &Tensor<T>)> {
        self.branches
            .iter()
            .flat_map(|(name, br)| prefixed(name, br.buffers()))
            .collect()
    }

    fn buffers_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        self.branches
            .iter_mut()
            .flat_map(|(name, br)| prefixed(name, br.buffers_mut()))
            .collect()
    }

    fn near_kink(&mut self, x: &Tensor<T>, tol: f64) -> Result<bool> {
        for (_, br) in &mut self.branches {
            if br.near_kink(x, tol)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}
