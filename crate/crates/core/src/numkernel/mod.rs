//! Dense linear algebra, reverse-mode gradients and Adam.

mod adam;
mod dense;
mod fdcheck;
pub(crate) mod matrix;
mod params;
mod tape;

pub use adam::{AdamConfig, AdamState};
pub use dense::{DenseLayer, DenseStack};
pub use fdcheck::{fd_check, fd_check_report, FdReport, Objective, Probe};
pub use matrix::Matrix;
pub use params::{Gradients, ParamId, ParamSet};
pub use tape::{NodeId, Tape};
