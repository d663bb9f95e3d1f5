//! Electrolyte formulation screening.
//!
//! Constituent molecules are parsed from SMILES, encoded by a pretrained and
//! frozen graph convolution network into 100-dimensional graph
//! representations, scaled by mole fraction and concatenated with cell-level
//! variables into a battery descriptor. A dense regressor maps descriptors to
//! specific capacity; the trained model then screens a large pool of
//! candidate designs and the predictions are summarized by Spearman rank
//! correlations per cathode loading.

pub mod artifact;
pub mod baselines;
pub mod candidates;
pub mod chem;
mod error;
pub mod formulation;
pub mod gcn;
pub mod interpret;
pub mod models;
pub mod numkernel;
pub mod regressor;
pub mod screening;
pub mod synthetic;

pub use error::{Error, Result};
