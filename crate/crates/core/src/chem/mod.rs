//! SMILES parsing, molecular graphs, node featurization and the built-in
//! electrolyte constituent registry.

mod featurize;
mod graph;
mod registry;
mod smiles;

pub use featurize::{featurize, FeaturizedGraph, ELEMENT_CLASSES, NODE_FEATURES};
pub use graph::{Atom, Bond, MolecularGraph};
pub use registry::{
    canonical_constituents, constituent_names, is_salt, mol_columns, Constituent, Role,
    CONSTITUENT_COUNT, REGISTRY,
};
pub use smiles::{parse_smiles, SmilesError};
