use std::path::{Path, PathBuf};

use genrekit::dsp::MelConfig;
use genrekit::features::FeatureConfig;
use genrekit::models::{ArchitectureConfig, LogRegConfig, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{usage, CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepConfig {
    pub train_per_genre: usize,
    pub test_per_genre: usize,
    pub clip_seconds: f64,
}

impl Default for PrepConfig {
    fn default() -> Self {
        Self {
            train_per_genre: 900,
            test_per_genre: 100,
            clip_seconds: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnConfig {
    pub k: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self { k: 5 }
    }
}

/// Every setting a command may use. Values come from the defaults, then the
/// `--config` TOML file, then command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run_id: String,
    pub out: Option<PathBuf>,
    /// Seeds the split, weight initialisation, dropout and batch order.
    pub seed: u64,
    pub prep: PrepConfig,
    pub mel: MelConfig,
    pub features: FeatureConfig,
    pub arch: ArchitectureConfig,
    pub train: TrainConfig,
    pub logreg: LogRegConfig,
    pub knn: KnnConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            run_id: "run".into(),
            out: None,
            seed: 0,
            prep: PrepConfig::default(),
            mel: MelConfig::default(),
            features: FeatureConfig::default(),
            arch: ArchitectureConfig::default(),
            train: TrainConfig::default(),
            logreg: LogRegConfig::default(),
            knn: KnnConfig::default(),
        }
    }
}

/// Flags shared by every command that writes a run directory.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct CommonArgs {
    /// TOML file layered over the defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Parent directory; outputs go to OUT/RUN_ID/.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub run_id: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> CliResult<Self> {
        toml::from_str(text).map_err(|source| CliError::ConfigFile {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Defaults, then the config file, then the common flags. Command
    /// specific flags are applied by the caller before [`RunConfig::finish`].
    pub fn load(args: &CommonArgs) -> CliResult<Self> {
        let mut cfg = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|source| genrekit::Error::Io { path: path.clone(), source })?;
                Self::from_toml(&text, path)?
            }
            None => Self::default(),
        };
        if let Some(out) = &args.out {
            cfg.out = Some(out.clone());
        }
        if let Some(id) = &args.run_id {
            cfg.run_id = id.clone();
        }
        if let Some(seed) = args.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    /// Propagates the top-level seed and checks the run id.
    pub fn finish(mut self) -> CliResult<Self> {
        self.train.seed = self.seed;
        if self.run_id.is_empty()
            || !self.run_id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return usage(format!(
                "run id {:?} must be non-empty and use only letters, digits, '-' and '_'",
                self.run_id
            ));
        }
        Ok(self)
    }

    /// `OUT/RUN_ID`, created if missing.
    pub fn run_dir(&self) -> CliResult<PathBuf> {
        let Some(out) = &self.out else {
            return usage("no output directory: pass --out or set `out` in the config file");
        };
        let dir = out.join(&self.run_id);
        std::fs::create_dir_all(&dir).map_err(|source| genrekit::Error::Io { path: dir.clone(), source })?;
        Ok(dir)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serialises to TOML")
    }

    /// Writes the resolved configuration as `RUN_ID_COMMAND_config.toml`.
    pub fn write_resolved(&self, dir: &Path, command: &str) -> CliResult<PathBuf> {
        let path = dir.join(format!("{}_{command}_config.toml", self.run_id));
        std::fs::write(&path, self.to_toml()).map_err(|source| genrekit::Error::Io { path: path.clone(), source })?;
        Ok(path)
    }
}
