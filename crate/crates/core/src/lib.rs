//! Signed graph learning from partially observed smooth signals.
//!
//! The crate estimates the positive and negative Laplacians of a signed graph
//! from signals recorded on a subset of its nodes, treating the influence of
//! the unobserved nodes through column-sparse nuisance terms.
//!
//! - [`graph`]: signed graphs, Laplacians and the edge-vector algebra.
//! - [`synth`]: random signed graphs, smooth signals and hidden-node sampling.
//! - [`solver`]: the hidden-node estimator and its ADMM inner solver.
//! - [`baselines`]: the fully observed unsigned and signed learners.
//! - [`metrics`]: RelErr, F-score and NMI against a ground truth.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::result_large_err)]

pub mod baselines;
pub mod error;
pub mod graph;
pub mod matio;
pub mod metrics;
pub mod solver;
pub mod synth;

pub use error::{Error, Result, Sign};
pub use graph::{EdgeVector, LaplacianPair, PairIncidence, SignedGraph, UnsignedGraphPair};
pub use metrics::{EdgeLabel, EdgeLabels, MetricReport, RelErrNorm};
pub use solver::{
    sgl_hncs, AdmmConfig, AdmmState, BcdConfig, HiddenAux, SolveFailure, SolveOutput, SolveTrace,
};
pub use synth::{GenConfig, ObservedData, Partition, SignalSet, SyntheticInstance};
