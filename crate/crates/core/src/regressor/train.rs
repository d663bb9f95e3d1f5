use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulation::DescriptorVector;
use crate::gcn::StopReason;
use crate::numkernel::{
    AdamConfig, AdamState, DenseStack, Gradients, Matrix, Objective, ParamSet, Tape,
};

use super::model::{RegressorModel, HIDDEN_WIDTHS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(skip)]
    pub seed: u64,
    pub initial_lr: f64,
    /// Epochs spent at `initial_lr`.
    pub initial_epochs: usize,
    /// Length of each later phase; the last entry of `phase_lrs` persists.
    pub phase_epochs: usize,
    pub phase_lrs: Vec<f64>,
    pub max_epochs: usize,
    /// Stop after this many epochs without a new best validation RMSE.
    pub patience: usize,
    /// The epoch at which validation RMSE first drops below this is logged.
    pub rmse_milestone: f64,
    pub hidden: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            initial_lr: 1e-4,
            initial_epochs: 4000,
            phase_epochs: 3000,
            phase_lrs: vec![1e-3, 1e-2],
            max_epochs: 15000,
            patience: 1000,
            rmse_milestone: 20.0,
            hidden: HIDDEN_WIDTHS.to_vec(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let lr_ok = |lr: f64| lr.is_finite() && lr > 0.0;
        if !lr_ok(self.initial_lr) || !self.phase_lrs.iter().all(|&l| lr_ok(l)) {
            return Err(Error::Config(
                "learning rates must be positive and finite".into(),
            ));
        }
        if self.initial_epochs == 0 || self.phase_epochs == 0 {
            return Err(Error::Config(
                "schedule phase lengths must be positive".into(),
            ));
        }
        if self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::Config(
                "max_epochs and patience must be positive".into(),
            ));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden widths must be positive".into()));
        }
        Ok(())
    }

    /// Step schedule: `initial_lr` for `initial_epochs`, then each entry of
    /// `phase_lrs` for `phase_epochs`, the last one indefinitely.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        if epoch < self.initial_epochs || self.phase_lrs.is_empty() {
            return self.initial_lr;
        }
        let phase = (epoch - self.initial_epochs) / self.phase_epochs;
        self.phase_lrs[phase.min(self.phase_lrs.len() - 1)]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainHistory {
    /// Mean per-sample squared error over each epoch, (mAh/g)².
    pub train_loss: Vec<f64>,
    /// Validation RMSE after each epoch, mAh/g.
    pub val_rmse: Vec<f64>,
    pub lr: Vec<f64>,
    pub best_epoch: usize,
    pub best_val_rmse: f64,
    pub stop: StopReason,
    /// First epoch with validation RMSE below the configured milestone.
    pub milestone_epoch: Option<usize>,
}

/// Batched MSE of a dense stack over fixed rows, for gradient checks.
pub struct RegressorObjective<'m> {
    stack: &'m DenseStack,
    x: Matrix,
    y: Matrix,
}

impl<'m> RegressorObjective<'m> {
    pub fn new(model: &'m RegressorModel, rows: &[(&[f64], f64)]) -> Result<Self> {
        let xs: Vec<&[f64]> = rows.iter().map(|(x, _)| *x).collect();
        let ys: Vec<f64> = rows.iter().map(|(_, y)| *y).collect();
        Ok(Self {
            stack: model.stack(),
            x: Matrix::from_rows(&xs)?,
            y: Matrix::new(ys.len(), 1, ys)?,
        })
    }

    fn record<'p>(&'p self, params: &'p ParamSet, tape: &mut Tape<'p>) -> Result<f64> {
        let x = tape.input_ref(&self.x);
        let pred = self.stack.forward_tape(tape, params, x)?;
        let y = tape.input_ref(&self.y);
        tape.mse(pred, y)?;
        Ok(tape.loss().expect("mse is scalar"))
    }
}

impl Objective for RegressorObjective<'_> {
    fn loss(&self, params: &ParamSet) -> Result<f64> {
        self.record(params, &mut Tape::new())
    }

    fn loss_and_grad(&self, params: &ParamSet) -> Result<(f64, Gradients)> {
        let mut tape = Tape::new();
        let loss = self.record(params, &mut tape)?;
        Ok((loss, tape.backward(params, 1.0)?))
    }

    fn relu_pattern(&self, params: &ParamSet) -> Result<Vec<bool>> {
        let mut tape = Tape::new();
        self.record(params, &mut tape)?;
        Ok(tape.relu_pattern())
    }
}

/// Trains a freshly initialized regressor on descriptors and returns the
/// best-validation checkpoint.
pub fn train(
    train: &[(DescriptorVector, f64)],
    val: &[(DescriptorVector, f64)],
    config: &TrainConfig,
) -> Result<(RegressorModel, TrainHistory)> {
    let Some((first, _)) = train.first() else {
        return Err(Error::Input("training set is empty".into()));
    };
    if val.is_empty() {
        return Err(Error::Input("validation set is empty".into()));
    }
    let model = RegressorModel::init_with_hidden(
        config.seed,
        first.convention(),
        first.gr_version(),
        &config.hidden,
    );
    for (d, _) in train.iter().chain(val) {
        model.check_descriptor(d)?;
    }
    let rows = |set: &[(DescriptorVector, f64)]| -> Vec<(Vec<f64>, f64)> {
        set.iter()
            .map(|(d, y)| (d.as_slice().to_vec(), *y))
            .collect()
    };
    fit(model, &rows(train), &rows(val), config)
}

/// Training loop over bare feature rows: batch size 1, reshuffled each
/// epoch, stepped learning rate, early stopping on validation RMSE.
pub fn fit(
    mut model: RegressorModel,
    train: &[(Vec<f64>, f64)],
    val: &[(Vec<f64>, f64)],
    config: &TrainConfig,
) -> Result<(RegressorModel, TrainHistory)> {
    config.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Input(
            "training and validation sets must be non-empty".into(),
        ));
    }
    let width = model.widths()[0];
    for (x, y) in train.iter().chain(val) {
        if x.len() != width {
            return Err(Error::Shape {
                op: "fit",
                left_name: "descriptor",
                left: (1, x.len()),
                right_name: "model input",
                right: (1, width),
            });
        }
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input(
                "training data contains non-finite values".into(),
            ));
        }
    }

    let xs: Vec<Matrix> = train.iter().map(|(x, _)| Matrix::row_vector(x)).collect();
    let ys: Vec<Matrix> = train
        .iter()
        .map(|(_, y)| Matrix::row_vector(&[*y]))
        .collect();
    let val_x = Matrix::from_rows(&val.iter().map(|(x, _)| x.as_slice()).collect::<Vec<_>>())?;
    let val_y: Vec<f64> = val.iter().map(|(_, y)| *y).collect();

    let stack = model.stack().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let params = model.params_mut();
    let mut best = params.clone();
    let mut grads = Gradients::zeros_like(params);
    let mut adam = AdamState::new(params, AdamConfig::default());
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut history = TrainHistory {
        train_loss: Vec::new(),
        val_rmse: Vec::new(),
        lr: Vec::new(),
        best_epoch: 0,
        best_val_rmse: f64::INFINITY,
        stop: StopReason::MaxEpochs,
        milestone_epoch: None,
    };

    for epoch in 0..config.max_epochs {
        let lr = config.lr_at(epoch);
        let diverged = || Error::Diverged {
            epoch,
            last_finite: epoch.checked_sub(1),
        };
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let mut tape = Tape::new();
            let x = tape.input_ref(&xs[i]);
            let pred = stack.forward_tape(&mut tape, params, x)?;
            let y = tape.input_ref(&ys[i]);
            tape.mse(pred, y)?;
            let loss = tape.loss().expect("mse is scalar");
            if !loss.is_finite() {
                return Err(diverged());
            }
            total += loss;
            tape.backward_into(1.0, &mut grads)?;
            adam.step(params, &grads, lr).map_err(|e| match e {
                Error::NonFinite(_) => diverged(),
                other => other,
            })?;
        }
        let val_rmse = rmse_of(&stack.forward(params, &val_x)?.into_vec(), &val_y);
        if !val_rmse.is_finite() {
            return Err(diverged());
        }
        history.lr.push(lr);
        history.train_loss.push(total / xs.len() as f64);
        history.val_rmse.push(val_rmse);
        if history.milestone_epoch.is_none() && val_rmse < config.rmse_milestone {
            history.milestone_epoch = Some(epoch);
        }
        if val_rmse < history.best_val_rmse {
            history.best_val_rmse = val_rmse;
            history.best_epoch = epoch;
            best.copy_from(params)?;
        } else if epoch - history.best_epoch >= config.patience {
            history.stop = StopReason::Plateau;
            break;
        }
    }

    params.copy_from(&best)?;
    Ok((model, history))
}

pub(crate) fn rmse_of(pred: &[f64], truth: &[f64]) -> f64 {
    let n = pred.len() as f64;
    (pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
}
