use std::path::{Path, PathBuf};

use genrekit::dataio::container::{bytes_tensor, take, tensor_bytes};
use genrekit::dataio::{read_container, write_container, InputRepresentation, Split};
use genrekit::neural::Tensor;
use serde::{Deserialize, Serialize};

use crate::error::{usage, CliResult};

const FORMAT: &str = "genrekit-data/1";
const META: &str = "__data__";

/// Description stored with an extracted split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataMeta {
    pub format: String,
    pub split: Split,
    pub class_order: Vec<String>,
    pub input: InputRepresentation,
    /// Manifest paths of the clips, in row order.
    pub clips: Vec<String>,
}

/// One extracted split: inputs `x` (`N x item_shape`) and labels `y`.
#[derive(Debug, Clone)]
pub struct DataSet {
    pub meta: DataMeta,
    pub x: Tensor<f32>,
    pub y: Vec<usize>,
}

pub fn split_path(dir: &Path, split: Split) -> PathBuf {
    dir.join(format!("{}.mgt", split.as_str()))
}

impl DataSet {
    pub fn write(&self, dir: &Path) -> CliResult<PathBuf> {
        let path = split_path(dir, self.meta.split);
        let meta = serde_json::to_vec(&self.meta).expect("data meta serialises");
        let y = Tensor::from_vec(&[self.y.len()], self.y.iter().map(|&v| v as f32).collect())?;
        write_container(
            &path,
            &[(META.into(), bytes_tensor(&meta)), ("x".into(), self.x.clone()), ("y".into(), y)],
        )?;
        Ok(path)
    }

    pub fn read(dir: &Path, split: Split) -> CliResult<Self> {
        let path = split_path(dir, split);
        let mut tensors = read_container(&path)?;
        let bad = |m: String| genrekit::Error::Format(format!("{}: {m}", path.display()));
        let meta: DataMeta = serde_json::from_slice(&tensor_bytes(&take(&mut tensors, META)?)?)
            .map_err(|e| bad(e.to_string()))?;
        if meta.format != FORMAT {
            return Err(bad(format!("unsupported data format {:?}", meta.format)).into());
        }
        let x = take(&mut tensors, "x")?;
        let y: Vec<usize> = take(&mut tensors, "y")?.data().iter().map(|&v| v as usize).collect();
        if x.shape().first() != Some(&y.len()) || x.shape()[1..] != meta.input.item_shape()[..] {
            return Err(bad(format!("inputs {:?} disagree with {} labels", x.shape(), y.len())).into());
        }
        if y.iter().any(|&l| l >= meta.class_order.len()) {
            return Err(bad("label outside the class order".into()).into());
        }
        Ok(Self { meta, x, y })
    }

    pub fn new(
        split: Split,
        class_order: Vec<String>,
        input: InputRepresentation,
        clips: Vec<String>,
        x: Tensor<f32>,
        y: Vec<usize>,
    ) -> Self {
        Self {
            meta: DataMeta {
                format: FORMAT.into(),
                split,
                class_order,
                input,
                clips,
            },
            x,
            y,
        }
    }

    /// Rows of a `N x 51` feature set as `f64` vectors.
    pub fn rows(&self) -> CliResult<Vec<Vec<f64>>> {
        let [_, d] = self.x.dims::<2>("feature rows")?;
        Ok(self
            .x
            .data()
            .chunks_exact(d)
            .map(|r| r.iter().map(|&v| v as f64).collect())
            .collect())
    }
}

/// Exit-2 failure when a model family and the data's input mode disagree.
pub fn require_mode(data: &DataSet, deep: bool, model: &str) -> CliResult<()> {
    let have = data.meta.input.mode();
    let need = if deep {
        genrekit::dataio::InputMode::Melspec
    } else {
        genrekit::dataio::InputMode::Features51
    };
    if have != need {
        return usage(format!(
            "model {model} needs {need} data but the data set holds {have}; rerun extract with --mode {need}"
        ));
    }
    Ok(())
}
