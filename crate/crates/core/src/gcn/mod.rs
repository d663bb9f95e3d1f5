//! Graph convolution encoder: pretraining on molecular labels, freezing and
//! constituent encoding.

mod corpus;
mod encode;
mod model;
mod pretrain;

pub use corpus::{load_corpus, read_corpus, write_corpus, CorpusEntry, CORPUS_COLUMNS};
pub use encode::{encode_constituent, GrCache, GrSet};
pub use model::{
    gcn_forward, GcnModel, GraphRepresentation, LabelStats, CONV_HIDDEN, GR_WIDTH, HEAD_HIDDEN,
    LABEL_COUNT,
};
pub use pretrain::{
    label_stats, pretrain, PretrainConfig, PretrainHistory, PretrainLabel, PretrainObjective,
    StopReason,
};
