use serde::{Deserialize, Serialize};

use crate::chem::{featurize, FeaturizedGraph, MolecularGraph};
use crate::error::{Error, Result};
use crate::numkernel::{AdamConfig, AdamState, Gradients, Matrix, Objective, ParamSet, Tape};

use super::model::{GcnModel, LabelStats, LABEL_COUNT};

/// Quantum-chemical targets for one molecule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PretrainLabel {
    pub homo_ev: f64,
    pub lumo_ev: f64,
    pub dipole_debye: f64,
}

impl PretrainLabel {
    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let &[homo_ev, lumo_ev, dipole_debye] = values else {
            return Err(Error::Input(format!(
                "pretraining label needs {LABEL_COUNT} values (homo, lumo, dipole), got {}",
                values.len()
            )));
        };
        let label = Self {
            homo_ev,
            lumo_ev,
            dipole_debye,
        };
        if !label.to_array().iter().all(|v| v.is_finite()) {
            return Err(Error::Input("pretraining label is not finite".into()));
        }
        Ok(label)
    }

    pub fn to_array(self) -> [f64; LABEL_COUNT] {
        [self.homo_ev, self.lumo_ev, self.dipole_debye]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PretrainConfig {
    pub lr: f64,
    pub max_epochs: usize,
    /// Stop after this many epochs without a new best loss.
    pub patience: usize,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            max_epochs: 2000,
            patience: 200,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    MaxEpochs,
    Plateau,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::MaxEpochs => "max_epochs",
            StopReason::Plateau => "plateau",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PretrainHistory {
    /// Full-batch MSE (standardized units) before each epoch's update.
    pub losses: Vec<f64>,
    pub best_epoch: usize,
    pub best_loss: f64,
    pub stop: StopReason,
}

/// Full-batch pretraining loss over a featurized corpus.
pub struct PretrainObjective<'m> {
    model: &'m GcnModel,
    graphs: Vec<FeaturizedGraph>,
    targets: Matrix,
}

impl<'m> PretrainObjective<'m> {
    /// `targets` are already standardized, one row per graph.
    pub fn new(model: &'m GcnModel, graphs: Vec<FeaturizedGraph>, targets: Matrix) -> Result<Self> {
        if graphs.is_empty() || targets.rows() != graphs.len() || targets.cols() != LABEL_COUNT {
            return Err(Error::Shape {
                op: "PretrainObjective::new",
                left_name: "graphs",
                left: (graphs.len(), LABEL_COUNT),
                right_name: "targets",
                right: targets.shape(),
            });
        }
        Ok(Self {
            model,
            graphs,
            targets,
        })
    }

    fn record<'p>(&'p self, params: &'p ParamSet, tape: &mut Tape<'p>) -> Result<()> {
        let pooled = self
            .graphs
            .iter()
            .map(|fg| self.model.encode_tape(params, tape, fg))
            .collect::<Result<Vec<_>>>()?;
        let stacked = tape.concat_rows(&pooled)?;
        let pred = self.model.head().forward_tape(tape, params, stacked)?;
        let target = tape.input_ref(&self.targets);
        tape.mse(pred, target)?;
        Ok(())
    }
}

impl Objective for PretrainObjective<'_> {
    fn loss(&self, params: &ParamSet) -> Result<f64> {
        let mut tape = Tape::new();
        self.record(params, &mut tape)?;
        Ok(tape.loss().expect("mse is scalar"))
    }

    fn loss_and_grad(&self, params: &ParamSet) -> Result<(f64, Gradients)> {
        let mut tape = Tape::new();
        self.record(params, &mut tape)?;
        let loss = tape.loss().expect("mse is scalar");
        Ok((loss, tape.backward(params, 1.0)?))
    }

    fn relu_pattern(&self, params: &ParamSet) -> Result<Vec<bool>> {
        let mut tape = Tape::new();
        self.record(params, &mut tape)?;
        Ok(tape.relu_pattern())
    }
}

/// Mean and population standard deviation per label; a zero spread is
/// replaced by 1 so single-molecule corpora stay well defined.
pub fn label_stats(labels: &[PretrainLabel]) -> LabelStats {
    let n = labels.len() as f64;
    let mut stats = LabelStats::default();
    for k in 0..LABEL_COUNT {
        let mean = labels.iter().map(|l| l.to_array()[k]).sum::<f64>() / n;
        let var = labels
            .iter()
            .map(|l| (l.to_array()[k] - mean).powi(2))
            .sum::<f64>()
            / n;
        stats.mean[k] = mean;
        stats.std[k] = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    }
    stats
}

/// Trains the encoder and head on standardized labels and returns the
/// best-loss checkpoint, frozen.
pub fn pretrain(
    corpus: &[(MolecularGraph, PretrainLabel)],
    config: &PretrainConfig,
) -> Result<(GcnModel, PretrainHistory)> {
    if corpus.is_empty() {
        return Err(Error::Input("pretraining corpus is empty".into()));
    }
    if !(config.lr > 0.0) || config.max_epochs == 0 {
        return Err(Error::Config(
            "pretraining needs a positive learning rate and at least one epoch".into(),
        ));
    }
    for (i, (_, l)) in corpus.iter().enumerate() {
        if !l.to_array().iter().all(|v| v.is_finite()) {
            return Err(Error::Input(format!("pretraining label {i} is not finite")));
        }
    }

    let labels: Vec<PretrainLabel> = corpus.iter().map(|(_, l)| *l).collect();
    let stats = label_stats(&labels);
    let mut targets = Matrix::zeros(corpus.len(), LABEL_COUNT);
    for (i, l) in labels.iter().enumerate() {
        for (k, v) in l.to_array().into_iter().enumerate() {
            targets.set(i, k, (v - stats.mean[k]) / stats.std[k]);
        }
    }
    let graphs: Vec<FeaturizedGraph> = corpus.iter().map(|(g, _)| featurize(g)).collect();

    let mut model = GcnModel::init(config.seed);
    model.set_label_stats(stats);
    let mut params = model.params().clone();
    let mut best = params.clone();
    let mut adam = AdamState::new(&params, AdamConfig::default());
    let mut history = PretrainHistory {
        losses: Vec::new(),
        best_epoch: 0,
        best_loss: f64::INFINITY,
        stop: StopReason::MaxEpochs,
    };

    {
        let objective = PretrainObjective::new(&model, graphs, targets)?;
        for epoch in 0..config.max_epochs {
            let (loss, grads) = objective.loss_and_grad(&params)?;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    last_finite: epoch.checked_sub(1),
                });
            }
            history.losses.push(loss);
            if loss < history.best_loss {
                history.best_loss = loss;
                history.best_epoch = epoch;
                best.copy_from(&params)?;
            } else if epoch - history.best_epoch >= config.patience {
                history.stop = StopReason::Plateau;
                break;
            }
            adam.step(&mut params, &grads, config.lr)?;
        }
    }

    model.params_mut()?.copy_from(&best)?;
    model.freeze();
    Ok((model, history))
}
