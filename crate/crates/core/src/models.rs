//! Capacity models behind one trait, registered by name so the model family
//! can be chosen at run time, and the MAE comparison across families.

use std::collections::BTreeMap;
use std::io::Write;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::baselines::{
    flat_rows, train_rfr, train_svr, FlatFeatures, ForestModel, RfrConfig, SvrConfig, SvrModel,
};
use crate::error::{Error, Result};
use crate::formulation::{build_descriptor, CellRecord, DescriptorConvention, FormulationDesign};
use crate::gcn::GrSet;
use crate::regressor::{train, RegressorModel, TrainConfig, TrainHistory};

/// A trained predictor of specific capacity (mAh/g).
pub trait CapacityModel: Send + Sync {
    fn name(&self) -> &str;
    fn predict(&self, design: &FormulationDesign) -> Result<f64>;
    fn hyperparameters(&self) -> Value;
    /// Fingerprint of the records the model was fitted on.
    fn train_fingerprint(&self) -> &str;
}

/// Fits one model family.
pub trait ModelTrainer: Send + Sync {
    fn name(&self) -> &'static str;
    fn fit(&self, train: &[CellRecord], val: &[CellRecord]) -> Result<Box<dyn CapacityModel>>;
}

/// Order-independent hash of record ids and capacities.
pub fn split_fingerprint(records: &[CellRecord]) -> String {
    let mut keyed: Vec<(u64, u64)> = records
        .iter()
        .map(|r| (r.id, r.capacity.to_bits()))
        .collect();
    keyed.sort_unstable();
    let mut h = Sha256::new();
    for (id, cap) in keyed {
        h.update(id.to_le_bytes());
        h.update(cap.to_le_bytes());
    }
    h.finalize()[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub struct FgcnModel {
    pub regressor: RegressorModel,
    pub grs: GrSet,
    pub history: Option<TrainHistory>,
    pub config: TrainConfig,
    fingerprint: String,
}

impl FgcnModel {
    pub fn new(
        regressor: RegressorModel,
        grs: GrSet,
        config: TrainConfig,
        fingerprint: String,
    ) -> Self {
        Self {
            regressor,
            grs,
            history: None,
            config,
            fingerprint,
        }
    }
}

impl CapacityModel for FgcnModel {
    fn name(&self) -> &str {
        "fgcn"
    }

    fn predict(&self, design: &FormulationDesign) -> Result<f64> {
        let d = build_descriptor(design, &self.grs, self.regressor.convention());
        self.regressor.predict(&d)
    }

    fn hyperparameters(&self) -> Value {
        let c = &self.config;
        json!({
            "hidden": c.hidden,
            "initial_lr": c.initial_lr,
            "initial_epochs": c.initial_epochs,
            "phase_epochs": c.phase_epochs,
            "phase_lrs": c.phase_lrs,
            "max_epochs": c.max_epochs,
            "patience": c.patience,
            "seed": c.seed,
            "loading_scale": self.regressor.convention().loading.as_str(),
            "separator_encoding": self.regressor.convention().separator.as_str(),
        })
    }

    fn train_fingerprint(&self) -> &str {
        &self.fingerprint
    }
}

pub struct RfrModel {
    pub forest: ForestModel,
    fingerprint: String,
}

impl CapacityModel for RfrModel {
    fn name(&self) -> &str {
        "rfr"
    }

    fn predict(&self, design: &FormulationDesign) -> Result<f64> {
        Ok(self.forest.predict(&FlatFeatures::from_design(design)))
    }

    fn hyperparameters(&self) -> Value {
        serde_json::to_value(&self.forest.config).expect("config serializes")
    }

    fn train_fingerprint(&self) -> &str {
        &self.fingerprint
    }
}

pub struct SvrCapacityModel {
    pub svr: SvrModel,
    fingerprint: String,
}

impl CapacityModel for SvrCapacityModel {
    fn name(&self) -> &str {
        "svr"
    }

    fn predict(&self, design: &FormulationDesign) -> Result<f64> {
        Ok(self.svr.predict(&FlatFeatures::from_design(design)))
    }

    fn hyperparameters(&self) -> Value {
        let mut v = serde_json::to_value(&self.svr.config).expect("config serializes");
        v["converged"] = json!(self.svr.converged);
        v
    }

    fn train_fingerprint(&self) -> &str {
        &self.fingerprint
    }
}

pub struct FgcnTrainer {
    pub grs: GrSet,
    pub convention: DescriptorConvention,
    pub config: TrainConfig,
}

impl ModelTrainer for FgcnTrainer {
    fn name(&self) -> &'static str {
        "fgcn"
    }

    /// An empty `val` falls back to early stopping on the training set.
    fn fit(&self, train_set: &[CellRecord], val: &[CellRecord]) -> Result<Box<dyn CapacityModel>> {
        let rows = |rs: &[CellRecord]| {
            rs.iter()
                .map(|r| {
                    (
                        build_descriptor(&r.design, &self.grs, self.convention),
                        r.capacity,
                    )
                })
                .collect::<Vec<_>>()
        };
        let tr = rows(train_set);
        let va = if val.is_empty() {
            tr.clone()
        } else {
            rows(val)
        };
        let (regressor, history) = train(&tr, &va, &self.config)?;
        let mut m = FgcnModel::new(
            regressor,
            self.grs.clone(),
            self.config.clone(),
            split_fingerprint(train_set),
        );
        m.history = Some(history);
        Ok(Box::new(m))
    }
}

pub struct RfrTrainer(pub RfrConfig);

impl ModelTrainer for RfrTrainer {
    fn name(&self) -> &'static str {
        "rfr"
    }

    fn fit(&self, train_set: &[CellRecord], _val: &[CellRecord]) -> Result<Box<dyn CapacityModel>> {
        Ok(Box::new(RfrModel {
            forest: train_rfr(&flat_rows(train_set), &self.0)?,
            fingerprint: split_fingerprint(train_set),
        }))
    }
}

pub struct SvrTrainer(pub SvrConfig);

impl ModelTrainer for SvrTrainer {
    fn name(&self) -> &'static str {
        "svr"
    }

    fn fit(&self, train_set: &[CellRecord], _val: &[CellRecord]) -> Result<Box<dyn CapacityModel>> {
        Ok(Box::new(SvrCapacityModel {
            svr: train_svr(&flat_rows(train_set), &self.0)?,
            fingerprint: split_fingerprint(train_set),
        }))
    }
}

/// Trainers keyed by name.
#[derive(Default)]
pub struct Registry {
    trainers: BTreeMap<&'static str, Box<dyn ModelTrainer>>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// `fgcn`, `rfr` and `svr`.
    pub fn standard(fgcn: FgcnTrainer, rfr: RfrConfig, svr: SvrConfig) -> Self {
        let mut r = Self::new();
        r.register(Box::new(fgcn));
        r.register(Box::new(RfrTrainer(rfr)));
        r.register(Box::new(SvrTrainer(svr)));
        r
    }

    pub fn register(&mut self, trainer: Box<dyn ModelTrainer>) {
        self.trainers.insert(trainer.name(), trainer);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.trainers.keys().copied().collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn ModelTrainer> {
        self.trainers.get(name).map(|t| t.as_ref()).ok_or_else(|| {
            Error::Config(format!(
                "unknown model '{name}' (available: {})",
                self.names().join(", ")
            ))
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub model: String,
    pub mae: f64,
    pub hyperparameters: Value,
}

/// Test MAE per model, ascending (ties by name). All models must have
/// been fitted on the same training records.
pub fn compare(models: &[&dyn CapacityModel], test: &[CellRecord]) -> Result<Vec<ComparisonRow>> {
    if test.is_empty() {
        return Err(Error::Input("comparison needs test records".into()));
    }
    if let Some(first) = models.first() {
        if let Some(odd) = models
            .iter()
            .find(|m| m.train_fingerprint() != first.train_fingerprint())
        {
            return Err(Error::Protocol(format!(
                "models '{}' and '{}' were trained on different splits",
                first.name(),
                odd.name()
            )));
        }
    }
    let mut rows = models
        .iter()
        .map(|m| {
            let mut total = 0.0;
            for r in test {
                total += (m.predict(&r.design)? - r.capacity).abs();
            }
            Ok(ComparisonRow {
                model: m.name().to_string(),
                mae: total / test.len() as f64,
                hyperparameters: m.hyperparameters(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.mae.total_cmp(&b.mae).then_with(|| a.model.cmp(&b.model)));
    Ok(rows)
}

/// CSV with columns model, mae_mah_g, hyperparameters-json.
pub fn write_comparison_csv<W: Write>(out: W, rows: &[ComparisonRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Input(format!("writing comparison: {e}"));
    w.write_record(["model", "mae_mah_g", "hyperparameters-json"])
        .map_err(err)?;
    for r in rows {
        w.write_record([
            r.model.clone(),
            r.mae.to_string(),
            r.hyperparameters.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush()
        .map_err(|e| Error::Input(format!("writing comparison: {e}")))
}
