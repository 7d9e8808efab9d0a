use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::arch::ArchitectureConfig;
use super::classical::{FeatureStats, KnnClassifier, LogRegConfig, LogisticRegression};
use super::deep::{build_model, DeepModel, InputStats};
use super::train::EpochRecord;
use crate::dataio::container::{bytes_tensor, take, tensor_bytes};
use crate::dataio::{read_container, write_container, InputRepresentation, NamedTensor};
use crate::error::{Error, Result};
use crate::neural::{Layer, Tensor};

pub const MANIFEST_ENTRY: &str = "__manifest__";
const FORMAT: &str = "genrekit-checkpoint/1";

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of a configuration's canonical JSON form.
pub fn config_hash<C: Serialize>(config: &C) -> String {
    sha256_hex(&serde_json::to_vec(config).expect("configs serialise"))
}

/// Model-specific settings carried in the checkpoint manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ModelSpec {
    Deep {
        architecture: ArchitectureConfig,
        seed: u64,
        input_stats: Option<InputStats>,
    },
    Logreg {
        config: LogRegConfig,
        iterations: Vec<usize>,
    },
    Knn {
        k: usize,
    },
}

/// JSON metadata stored next to the tensors of a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format: String,
    /// `cnn`, `rnn`, `parallel`, `crnn`, `logreg` or `knn`.
    pub model: String,
    pub class_order: Vec<String>,
    pub config_hash: String,
    /// Hash identifying the training data, when the caller supplies one.
    pub data_hash: Option<String>,
    pub epoch: Option<usize>,
    pub metrics: BTreeMap<String, f64>,
    pub curves: Vec<EpochRecord>,
    pub spec: ModelSpec,
    /// How raw audio becomes model input, when the trainer recorded it.
    #[serde(default)]
    pub input: Option<InputRepresentation>,
}

/// Any trained classifier.
pub enum Model {
    Deep(DeepModel),
    Logreg {
        model: LogisticRegression,
        class_order: Vec<String>,
    },
    Knn {
        model: KnnClassifier,
        class_order: Vec<String>,
    },
}

impl Model {
    pub fn name(&self) -> String {
        match self {
            Model::Deep(m) => m.arch.kind.to_string(),
            Model::Logreg { .. } => "logreg".into(),
            Model::Knn { .. } => "knn".into(),
        }
    }

    pub fn class_order(&self) -> &[String] {
        match self {
            Model::Deep(m) => &m.class_order,
            Model::Logreg { class_order, .. } | Model::Knn { class_order, .. } => class_order,
        }
    }

    pub fn is_deep(&self) -> bool {
        matches!(self, Model::Deep(_))
    }

    fn spec(&self) -> ModelSpec {
        match self {
            Model::Deep(m) => ModelSpec::Deep {
                architecture: m.arch.clone(),
                seed: m.seed,
                input_stats: m.input_stats,
            },
            Model::Logreg { model, .. } => ModelSpec::Logreg {
                config: model.config,
                iterations: model.iterations.clone(),
            },
            Model::Knn { model, .. } => ModelSpec::Knn { k: model.k },
        }
    }

    /// Hash of the settings that define the model (not its learned values).
    pub fn config_hash(&self) -> String {
        match self.spec() {
            ModelSpec::Deep { architecture, .. } => config_hash(&architecture),
            ModelSpec::Logreg { config, .. } => config_hash(&config),
            ModelSpec::Knn { k } => config_hash(&k),
        }
    }

    pub fn manifest(&self, data_hash: Option<String>, metrics: BTreeMap<String, f64>) -> CheckpointManifest {
        let (epoch, curves) = match self {
            Model::Deep(m) => (m.best_epoch, m.curves.clone()),
            _ => (None, Vec::new()),
        };
        CheckpointManifest {
            format: FORMAT.into(),
            model: self.name(),
            class_order: self.class_order().to_vec(),
            config_hash: self.config_hash(),
            data_hash,
            epoch,
            metrics,
            curves,
            spec: self.spec(),
            input: None,
        }
    }

    fn tensors(&self) -> Vec<NamedTensor> {
        let row_tensor = |rows: &[Vec<f64>]| {
            let d = rows.first().map_or(0, Vec::len);
            let data = rows.iter().flatten().map(|&v| v as f32).collect();
            Tensor::from_vec(&[rows.len(), d], data).expect("rectangular rows")
        };
        let vec_tensor = |v: &[f64]| {
            Tensor::from_vec(&[v.len()], v.iter().map(|&x| x as f32).collect()).expect("rank 1")
        };
        let stats = |s: &FeatureStats| {
            vec![
                ("feature_mean".to_string(), vec_tensor(&s.mean)),
                ("feature_std".to_string(), vec_tensor(&s.std)),
            ]
        };
        match self {
            Model::Deep(m) => {
                let mut out: Vec<NamedTensor> = m
                    .network
                    .params()
                    .into_iter()
                    .map(|(n, p)| (format!("param/{n}"), p.value.clone()))
                    .collect();
                out.extend(
                    m.network
                        .buffers()
                        .into_iter()
                        .map(|(n, b)| (format!("buffer/{n}"), b.clone())),
                );
                out
            }
            Model::Logreg { model, .. } => {
                let mut out = stats(&model.stats);
                out.push(("weight".into(), row_tensor(&model.weights)));
                out.push(("bias".into(), vec_tensor(&model.bias)));
                out
            }
            Model::Knn { model, .. } => {
                let mut out = stats(&model.stats);
                out.push(("train_x".into(), row_tensor(&model.points)));
                let labels: Vec<f64> = model.labels.iter().map(|&l| l as f64).collect();
                out.push(("train_y".into(), vec_tensor(&labels)));
                out
            }
        }
    }

    /// Writes the checkpoint. Deep models are stored in `f32`, which is
    /// their native precision; classical models are rounded to `f32`.
    pub fn save(
        &self,
        path: impl AsRef<Path>,
        data_hash: Option<String>,
        metrics: BTreeMap<String, f64>,
    ) -> Result<CheckpointManifest> {
        let manifest = self.manifest(data_hash, metrics);
        self.save_manifest(path, &manifest)?;
        Ok(manifest)
    }

    /// Writes the model under a caller-built manifest, which must describe
    /// this model.
    pub fn save_manifest(&self, path: impl AsRef<Path>, manifest: &CheckpointManifest) -> Result<()> {
        if manifest.spec != self.spec() || manifest.config_hash != self.config_hash() {
            return Err(Error::Contract("checkpoint manifest does not describe this model".into()));
        }
        let json = serde_json::to_vec(&manifest).map_err(|e| Error::Format(e.to_string()))?;
        let mut tensors = vec![(MANIFEST_ENTRY.to_string(), bytes_tensor(&json))];
        tensors.extend(self.tensors());
        write_container(path, &tensors)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, CheckpointManifest)> {
        let mut tensors = read_container(path)?;
        let raw = tensor_bytes(&take(&mut tensors, MANIFEST_ENTRY)?)?;
        let manifest: CheckpointManifest = serde_json::from_slice(&raw)
            .map_err(|e| Error::Format(format!("checkpoint manifest: {e}")))?;
        if manifest.format != FORMAT {
            return Err(Error::UnsupportedFormat {
                field: "checkpoint format",
                value: manifest.format,
            });
        }
        let class_order = manifest.class_order.clone();
        let rows = |t: Tensor<f32>| -> Result<Vec<Vec<f64>>> {
            let [n, d] = t.dims::<2>("row matrix")?;
            let v: Vec<f64> = t.data().iter().map(|&x| x as f64).collect();
            Ok((0..n).map(|i| v[i * d..(i + 1) * d].to_vec()).collect())
        };
        let vector = |t: Tensor<f32>| -> Vec<f64> { t.data().iter().map(|&x| x as f64).collect() };
        let model = match &manifest.spec {
            ModelSpec::Deep {
                architecture,
                seed,
                input_stats,
            } => {
                let mut m = build_model(architecture, &class_order, *seed)?;
                m.input_stats = *input_stats;
                m.best_epoch = manifest.epoch;
                m.curves = manifest.curves.clone();
                for (name, p) in m.network.params_mut() {
                    assign(&mut p.value, take(&mut tensors, &format!("param/{name}"))?, &name)?;
                }
                for (name, b) in m.network.buffers_mut() {
                    assign(b, take(&mut tensors, &format!("buffer/{name}"))?, &name)?;
                }
                Model::Deep(m)
            }
            ModelSpec::Logreg { config, iterations } => {
                let stats = FeatureStats {
                    mean: vector(take(&mut tensors, "feature_mean")?),
                    std: vector(take(&mut tensors, "feature_std")?),
                };
                let weights = rows(take(&mut tensors, "weight")?)?;
                let bias = vector(take(&mut tensors, "bias")?);
                if weights.len() != bias.len() || weights.iter().any(|w| w.len() != stats.dim()) {
                    return Err(Error::Format("logistic regression tensors disagree".into()));
                }
                Model::Logreg {
                    model: LogisticRegression {
                        config: *config,
                        stats,
                        weights,
                        bias,
                        iterations: iterations.clone(),
                    },
                    class_order,
                }
            }
            ModelSpec::Knn { k } => {
                let stats = FeatureStats {
                    mean: vector(take(&mut tensors, "feature_mean")?),
                    std: vector(take(&mut tensors, "feature_std")?),
                };
                let points = rows(take(&mut tensors, "train_x")?)?;
                let labels: Vec<usize> = vector(take(&mut tensors, "train_y")?)
                    .into_iter()
                    .map(|v| v as usize)
                    .collect();
                if points.len() != labels.len() || *k == 0 || *k > points.len() {
                    return Err(Error::Format("nearest-neighbour tensors disagree".into()));
                }
                Model::Knn {
                    model: KnnClassifier {
                        k: *k,
                        n_classes: class_order.len(),
                        stats,
                        points,
                        labels,
                    },
                    class_order,
                }
            }
        };
        if let Some((extra, _)) = tensors.first() {
            return Err(Error::Format(format!("unexpected tensor {extra:?} in checkpoint")));
        }
        let actual = model.config_hash();
        if actual != manifest.config_hash {
            return Err(Error::HashMismatch {
                what: "checkpoint config".into(),
                expected: manifest.config_hash.clone(),
                found: actual,
            });
        }
        Ok((model, manifest))
    }
}

fn assign(dst: &mut Tensor<f32>, src: Tensor<f32>, name: &str) -> Result<()> {
    if dst.shape() != src.shape() {
        return Err(Error::shape(format!(
            "checkpoint tensor {name} has shape {:?}, model expects {:?}",
            src.shape(),
            dst.shape()
        )));
    }
    *dst = src;
    Ok(())
}
