//! Formulation designs, the measured-cell dataset, train/test splits and the
//! battery descriptor.

mod dataset;
mod descriptor;
mod design;
mod split;

pub use dataset::{
    dataset_columns, load_dataset, read_dataset, save_dataset, write_dataset, Dataset, Rejection,
    CAPACITY_COLUMN, CURRENT_DENSITY_COLUMN, ID_COLUMN, LOADING_COLUMN, SEPARATOR_COLUMN,
};
pub use descriptor::{
    build_descriptor, build_descriptor_from_list, descriptor_from_parts, DescriptorConvention,
    DescriptorVector, LoadingScale, SeparatorEncoding,
};
pub use design::{CellRecord, FormulationDesign, Separator, RAW_SUM_TOLERANCE, SUM_TOLERANCE};
pub use split::{split_random, split_sorted, Split};
