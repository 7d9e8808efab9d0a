use serde::{Deserialize, Serialize};

use super::deep::argmax;
use crate::error::{Error, Result};

/// Per-feature z-score statistics from a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureStats {
    /// Column means and (population) standard deviations; constant columns
    /// get a spread of 1.
    pub fn fit<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = check_rows(rows)?;
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r.as_ref()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r.as_ref()).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        let std = var
            .iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::shape(format!(
                "expected {} features, got {}",
                self.dim(),
                row.len()
            )));
        }
        Ok(row
            .iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect())
    }
}

fn check_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<usize> {
    let d = rows
        .first()
        .map(|r| r.as_ref().len())
        .ok_or_else(|| Error::Data("no training rows".into()))?;
    if d == 0 {
        return Err(Error::Data("rows have no features".into()));
    }
    for (i, r) in rows.iter().enumerate() {
        let r = r.as_ref();
        if r.len() != d {
            return Err(Error::shape(format!("row {i} has {} features, expected {d}", r.len())));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericFault(format!("row {i} contains a non-finite feature")));
        }
    }
    Ok(d)
}

fn check_labels(labels: &[usize], rows: usize, n_classes: usize) -> Result<()> {
    if labels.len() != rows {
        return Err(Error::shape(format!("{} labels for {rows} rows", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::Label(format!("label {bad} outside {n_classes} classes")));
    }
    Ok(())
}

/// Hyperparameters of the one-vs-rest logistic regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogRegConfig {
    /// L2 strength on the weights (bias unpenalised).
    pub lambda: f64,
    pub lr: f64,
    pub max_iter: usize,
    /// Stop once the gradient's largest absolute entry falls below this.
    pub tol: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            lr: 0.05,
            max_iter: 5000,
            tol: 1e-5,
        }
    }
}

/// Eight (or `n_classes`) independent binary logistic models over
/// standardised features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub config: LogRegConfig,
    pub stats: FeatureStats,
    /// `n_classes` rows of `d` weights.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    /// Iterations each binary model ran.
    pub iterations: Vec<usize>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticRegression {
    /// Full-batch Adam on mean binary cross-entropy plus `lambda/2 |w|^2`
    /// for each class against the rest.
    pub fn fit<R: AsRef<[f64]>>(
        rows: &[R],
        labels: &[usize],
        n_classes: usize,
        config: LogRegConfig,
    ) -> Result<Self> {
        if !(config.lambda >= 0.0) || !(config.lr > 0.0) {
            return Err(Error::Config("lambda must be >= 0 and lr > 0".into()));
        }
        let stats = FeatureStats::fit(rows)?;
        check_labels(labels, rows.len(), n_classes)?;
        let z: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| stats.apply(r.as_ref()))
            .collect::<Result<_>>()?;
        let d = stats.dim();
        let n = z.len() as f64;
        let mut weights = Vec::with_capacity(n_classes);
        let mut bias = Vec::with_capacity(n_classes);
        let mut iterations = Vec::with_capacity(n_classes);
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        for c in 0..n_classes {
            if !labels.contains(&c) {
                return Err(Error::Data(format!("class {c} has no training rows")));
            }
            let target: Vec<f64> = labels.iter().map(|&l| if l == c { 1.0 } else { 0.0 }).collect();
            // Parameters: d weights followed by the bias.
            let mut theta = vec![0.0; d + 1];
            let mut m = vec![0.0; d + 1];
            let mut v = vec![0.0; d + 1];
            let mut grad = vec![0.0; d + 1];
            let mut iters = 0;
            for t in 1..=config.max_iter {
                grad.iter_mut().for_each(|g| *g = 0.0);
                for (row, &y) in z.iter().zip(&target) {
                    let s = theta[d] + row.iter().zip(&theta[..d]).map(|(a, b)| a * b).sum::<f64>();
                    let r = sigmoid(s) - y;
                    for (g, x) in grad[..d].iter_mut().zip(row) {
                        *g += r * x;
                    }
                    grad[d] += r;
                }
                grad.iter_mut().for_each(|g| *g /= n);
                for (g, w) in grad[..d].iter_mut().zip(&theta[..d]) {
                    *g += config.lambda * w;
                }
                if grad.iter().fold(0.0f64, |a, g| a.max(g.abs())) < config.tol {
                    break;
                }
                iters = t;
                let c1 = 1.0 - b1.powi(t as i32);
                let c2 = 1.0 - b2.powi(t as i32);
                for j in 0..=d {
                    m[j] = b1 * m[j] + (1.0 - b1) * grad[j];
                    v[j] = b2 * v[j] + (1.0 - b2) * grad[j] * grad[j];
                    theta[j] -= config.lr * (m[j] / c1) / ((v[j] / c2).sqrt() + eps);
                }
            }
            bias.push(theta[d]);
            theta.truncate(d);
            weights.push(theta);
            iterations.push(iters);
        }
        Ok(Self {
            config,
            stats,
            weights,
            bias,
            iterations,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.bias.len()
    }

    /// Per-class linear scores for one raw feature row.
    pub fn scores(&self, row: &[f64]) -> Result<Vec<f64>> {
        let z = self.stats.apply(row)?;
        Ok(self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| b + w.iter().zip(&z).map(|(a, x)| a * x).sum::<f64>())
            .collect())
    }

    /// Per-class sigmoids renormalised to sum to one.
    pub fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>> {
        let s: Vec<f64> = self.scores(row)?.into_iter().map(sigmoid).collect();
        let total: f64 = s.iter().sum();
        Ok(s.into_iter().map(|p| p / total).collect())
    }

    pub fn predict<R: AsRef<[f64]>>(&self, rows: &[R]) -> Result<Vec<usize>> {
        rows.iter()
            .map(|r| self.scores(r.as_ref()).map(|s| argmax(&s)))
            .collect()
    }

    pub fn weight_norm(&self) -> f64 {
        self.weights.iter().flatten().map(|w| w * w).sum::<f64>().sqrt()
    }
}

/// Exact k-nearest-neighbour classifier in standardised feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnClassifier {
    pub k: usize,
    pub n_classes: usize,
    pub stats: FeatureStats,
    /// Standardised training rows.
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl KnnClassifier {
    pub fn fit<R: AsRef<[f64]>>(rows: &[R], labels: &[usize], n_classes: usize, k: usize) -> Result<Self> {
        let stats = FeatureStats::fit(rows)?;
        check_labels(labels, rows.len(), n_classes)?;
        if k == 0 || k > rows.len() {
            return Err(Error::Config(format!(
                "k must be between 1 and the {} training rows, got {k}",
                rows.len()
            )));
        }
        let points = rows
            .iter()
            .map(|r| stats.apply(r.as_ref()))
            .collect::<Result<_>>()?;
        Ok(Self {
            k,
            n_classes,
            stats,
            points,
            labels: labels.to_vec(),
        })
    }

    /// Training indices of the `k` nearest rows, nearest first; equal
    /// distances are ordered by training index.
    pub fn neighbors(&self, row: &[f64]) -> Result<Vec<usize>> {
        let z = self.stats.apply(row)?;
        let mut d: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(d[..self.k].iter().map(|&(_, i)| i).collect())
    }

    /// Majority label among the neighbours. A tie in votes goes to whichever
    /// tied label owns the nearest neighbour.
    pub fn predict_one(&self, row: &[f64]) -> Result<usize> {
        let nn = self.neighbors(row)?;
        let mut votes = vec![0usize; self.n_classes];
        for &i in &nn {
            votes[self.labels[i]] += 1;
        }
        let top = votes.iter().copied().max().unwrap_or(0);
        Ok(nn
            .iter()
            .map(|&i| self.labels[i])
            .find(|&l| votes[l] == top)
            .unwrap_or(0))
    }

    pub fn predict<R: AsRef<[f64]>>(&self, rows: &[R]) -> Result<Vec<usize>> {
        rows.iter().map(|r| self.predict_one(r.as_ref())).collect()
    }

    /// Vote shares of each class among the neighbours.
    pub fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>> {
        let mut p = vec![0.0; self.n_classes];
        for i in self.neighbors(row)? {
            p[self.labels[i]] += 1.0 / self.k as f64;
        }
        Ok(p)
    }
}

/// A classifier over fixed-length feature vectors.
pub trait FeatureClassifier {
    fn name(&self) -> &'static str;

    fn fit(&mut self, rows: &[Vec<f64>], labels: &[usize], n_classes: usize) -> Result<()>;

    fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>>;
}

/// Baselines reported alongside the in-repo models but not implemented
/// here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExternalBaseline {
    SvmRbf,
    RandomForest,
    XgBoost,
}

impl FeatureClassifier for ExternalBaseline {
    fn name(&self) -> &'static str {
        match self {
            ExternalBaseline::SvmRbf => "svm_rbf",
            ExternalBaseline::RandomForest => "random_forest",
            ExternalBaseline::XgBoost => "xgboost",
        }
    }

    fn fit(&mut self, _: &[Vec<f64>], _: &[usize], _: usize) -> Result<()> {
        Err(Error::NotImplemented(self.name().into()))
    }

    fn predict(&self, _: &[Vec<f64>]) -> Result<Vec<usize>> {
        Err(Error::NotImplemented(self.name().into()))
    }
}

/// [`LogisticRegression`] behind the [`FeatureClassifier`] interface.
#[derive(Debug, Clone, Default)]
pub struct LogRegBaseline {
    pub config: LogRegConfig,
    pub model: Option<LogisticRegression>,
}

impl FeatureClassifier for LogRegBaseline {
    fn name(&self) -> &'static str {
        "logreg"
    }

    fn fit(&mut self, rows: &[Vec<f64>], labels: &[usize], n_classes: usize) -> Result<()> {
        self.model = Some(LogisticRegression::fit(rows, labels, n_classes, self.config)?);
        Ok(())
    }

    fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        self.model
            .as_ref()
            .ok_or_else(|| Error::Contract("predict before fit".into()))?
            .predict(rows)
    }
}

/// [`KnnClassifier`] behind the [`FeatureClassifier`] interface.
#[derive(Debug, Clone)]
pub struct KnnBaseline {
    pub k: usize,
    pub model: Option<KnnClassifier>,
}

impl FeatureClassifier for KnnBaseline {
    fn name(&self) -> &'static str {
        "knn"
    }

    fn fit(&mut self, rows: &[Vec<f64>], labels: &[usize], n_classes: usize) -> Result<()> {
        self.model = Some(KnnClassifier::fit(rows, labels, n_classes, self.k)?);
        Ok(())
    }

    fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        self.model
            .as_ref()
            .ok_or_else(|| Error::Contract("predict before fit".into()))?
            .predict(rows)
    }
}
