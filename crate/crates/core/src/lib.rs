//! Exact SAT-based verification of binarized neural networks.
//!
//! A network is lowered neuron by neuron to cardinality constraints
//! `sum of literals >= D`, which are encoded with sequential counters.
//! Robustness, universal robustness and equivalence queries are built on
//! top of that encoding and decided either in one solver call or by a
//! generator/verifier loop split at a block boundary.

pub mod cardinality;
pub mod ceg;
pub mod cnf;
pub mod encoder;
mod exact;
pub mod lowering;
pub mod model;
pub mod oracle;
pub mod properties;
pub mod random;
pub mod solver;

use thiserror::Error;

pub use model::{parse_model, serialize_model, Activations, BnnModel, ModelError};
pub use properties::{PropertyInstance, Verdict, Witness};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Cnf(#[from] cnf::CnfError),
    #[error(transparent)]
    Solver(#[from] solver::SolverError),
    #[error("robustness over integer pixels needs an input binarizer")]
    MissingBinarizer,
    #[error("label {label} out of range for {labels} labels")]
    LabelOutOfRange { label: usize, labels: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid property: {0}")]
    InvalidProperty(String),
    #[error("incompatible models: {0}")]
    Incompatible(String),
    #[error("split after block {k} is invalid for a model with {blocks} internal blocks (need 1 <= k < {blocks})")]
    SplitOutOfRange { k: usize, blocks: usize },
    #[error("enumeration space of {} points exceeds the cap of {cap}", size.map_or("more than 2^64".to_string(), |s| s.to_string()))]
    OracleCap { size: Option<u64>, cap: u64 },
    #[error("LP export supports robustness properties only, not {0}")]
    UnsupportedProperty(String),
    #[error("internal consistency error: {0}")]
    Internal(String),
}
