use std::path::{Path, PathBuf};

use anyhow::Context;
use formscreen::baselines::{RfrConfig, SvrConfig};
use formscreen::candidates::GenConfig;
use formscreen::formulation::{DescriptorConvention, Separator};
use formscreen::gcn::PretrainConfig;
use formscreen::interpret::{default_loading_windows, Grouping, LoadingWindow};
use formscreen::regressor::TrainConfig;
use formscreen::screening::ShortlistConfig;
use formscreen::Error;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Everything a run needs. Every section is optional in the file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Output directory.
    pub out: Option<PathBuf>,
    pub paths: Paths,
    pub synth: SynthSection,
    pub pretrain: PretrainConfig,
    pub split: SplitSection,
    pub descriptor: DescriptorConvention,
    pub train: TrainConfig,
    pub gen: GenConfig,
    pub screen: ScreenSection,
    pub interpret: InterpretSection,
    pub report: ReportSection,
}

/// Inputs. Relative paths in a config file resolve against its directory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub dataset: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    /// Defaults to `<out>/model.fsm`.
    pub model: Option<PathBuf>,
    /// Defaults to `<out>/pool.csv`.
    pub pool: Option<PathBuf>,
    /// Defaults to `<out>/predictions.csv`.
    pub predictions: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub molecules: usize,
    pub records: usize,
    /// Cell-to-cell noise of the synthetic capacities, mAh/g.
    pub sigma: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            molecules: 200,
            records: 93,
            sigma: 20.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMethod {
    Random,
    /// Highest loadings held out.
    Sorted,
}

/// Where early stopping looks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Validation {
    /// A random slice of the training part.
    Holdout,
    /// The test set itself.
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub method: SplitMethod,
    pub test_fraction: f64,
    pub validation: Validation,
    pub validation_fraction: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self {
            method: SplitMethod::Random,
            test_fraction: 0.2,
            validation: Validation::Holdout,
            validation_fraction: 0.15,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScreenSection {
    /// Screen only designs with this separator.
    pub separator: Option<Separator>,
    pub window: (f64, f64),
    pub threshold: f64,
    pub max_n: usize,
    pub salt_caps: Option<[f64; 4]>,
}

impl Default for ScreenSection {
    fn default() -> Self {
        let s = ShortlistConfig::default();
        Self {
            separator: None,
            window: s.window,
            threshold: s.threshold,
            max_n: s.max_n,
            salt_caps: s.salt_caps,
        }
    }
}

impl ScreenSection {
    pub fn shortlist(&self) -> ShortlistConfig {
        ShortlistConfig {
            window: self.window,
            threshold: self.threshold,
            max_n: self.max_n,
            salt_caps: self.salt_caps,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterpretSource {
    /// Screening output, capacity = prediction.
    Predictions,
    /// Measured capacities.
    Dataset,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub lo_open: bool,
}

impl From<&WindowSpec> for LoadingWindow {
    fn from(w: &WindowSpec) -> Self {
        LoadingWindow {
            lo: w.lo,
            hi: w.hi,
            lo_open: w.lo_open,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterpretSection {
    pub source: InterpretSource,
    /// Quartile summaries use rows at or above this capacity, mAh/g.
    pub capacity_floor: f64,
    /// Per-constituent groups; absent means one group per loading value.
    pub bins: Option<Vec<WindowSpec>>,
    /// Windows for ρ(loading, capacity).
    pub loading_windows: Vec<WindowSpec>,
}

impl Default for InterpretSection {
    fn default() -> Self {
        Self {
            source: InterpretSource::Predictions,
            bins: None,
            loading_windows: default_loading_windows()
                .iter()
                .map(|w| WindowSpec {
                    lo: w.lo,
                    hi: w.hi,
                    lo_open: w.lo_open,
                })
                .collect(),
            capacity_floor: 210.0,
        }
    }
}

impl InterpretSection {
    pub fn grouping(&self) -> Grouping {
        match &self.bins {
            None => Grouping::PerLoading,
            Some(b) => Grouping::Windows(b.iter().map(LoadingWindow::from).collect()),
        }
    }

    pub fn windows(&self) -> Vec<LoadingWindow> {
        self.loading_windows
            .iter()
            .map(LoadingWindow::from)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub models: Vec<String>,
    pub test_fraction: f64,
    pub rfr: RfrConfig,
    pub svr: SvrConfig,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self {
            models: vec!["fgcn".into(), "rfr".into(), "svr".into()],
            test_fraction: 0.15,
            rfr: RfrConfig::default(),
            svr: SvrConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads a TOML file and makes its relative paths absolute.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
            .context("reading config")?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p.as_mut() {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        fix(&mut cfg.out);
        let p = &mut cfg.paths;
        for slot in [
            &mut p.dataset,
            &mut p.corpus,
            &mut p.model,
            &mut p.pool,
            &mut p.predictions,
        ] {
            fix(slot);
        }
        Ok(cfg)
    }

    /// Pushes the run seed into every seeded component.
    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.pretrain.seed = seed;
        self.train.seed = seed;
        self.gen.seed = seed;
        self.report.rfr.seed = seed;
    }

    /// Short hash of the effective configuration.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).expect("config serializes");
        let mut h = Sha256::new();
        h.update(text.as_bytes());
        h.update(self.seed.to_le_bytes());
        h.finalize()[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn model_path(&self) -> PathBuf {
        self.paths
            .model
            .clone()
            .unwrap_or_else(|| self.out_dir().join("model.fsm"))
    }

    pub fn pool_path(&self) -> PathBuf {
        self.paths
            .pool
            .clone()
            .unwrap_or_else(|| self.out_dir().join("pool.csv"))
    }

    pub fn predictions_path(&self) -> PathBuf {
        self.paths
            .predictions
            .clone()
            .unwrap_or_else(|| self.out_dir().join("predictions.csv"))
    }

    pub fn dataset_path(&self) -> anyhow::Result<&Path> {
        Ok(self
            .paths
            .dataset
            .as_deref()
            .ok_or_else(|| Error::Config("no dataset given (paths.dataset or --dataset)".into()))?)
    }

    pub fn corpus_path(&self) -> anyhow::Result<&Path> {
        Ok(self.paths.corpus.as_deref().ok_or_else(|| {
            Error::Config("no pretraining corpus given (paths.corpus or --corpus)".into())
        })?)
    }
}
