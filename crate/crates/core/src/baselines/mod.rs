//! Conventional regressors over flat composition features: random forest
//! and support vector regression.

mod forest;
mod svr;

pub use forest::{train_rfr, ForestModel, Node, RfrConfig, Tree};
pub use svr::{train_svr, SvrConfig, SvrModel};

use crate::chem::CONSTITUENT_COUNT;
use crate::formulation::{CellRecord, FormulationDesign};

pub const FLAT_WIDTH: usize = CONSTITUENT_COUNT + 2;

/// Eight mol% values, LiI wt%, separator class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlatFeatures(pub [f64; FLAT_WIDTH]);

impl FlatFeatures {
    pub fn from_design(d: &FormulationDesign) -> Self {
        Self(d.flat_features())
    }
}

/// Flat features and capacity of each record.
pub fn flat_rows(records: &[CellRecord]) -> Vec<(FlatFeatures, f64)> {
    records
        .iter()
        .map(|r| (FlatFeatures::from_design(&r.design), r.capacity))
        .collect()
}
