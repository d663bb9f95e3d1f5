//! Dense capacity regressor over battery descriptors: training with a
//! stepped learning rate and early stopping, prediction and evaluation.

mod eval;
mod model;
mod train;

pub use eval::{evaluate, mae_of, write_metrics_csv, write_parity_csv, Metrics, ParityPoint};
pub use model::{predict, RegressorModel, HIDDEN_WIDTHS};
pub use train::{fit, train, RegressorObjective, TrainConfig, TrainHistory};
