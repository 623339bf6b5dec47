//! Estimation of topological orderings for linear non-Gaussian acyclic
//! models (LiNGAM).
//!
//! The ordering is built one node at a time. Each unsorted node is regressed
//! on its already-sorted neighbors and the node whose residual is least
//! Gaussian, measured by a likelihood ratio between a fitted non-Gaussian
//! density (Laplace, Logistic or scaled-t) and a moment-matched Gaussian,
//! is appended next.
//!
//! Modules:
//! * [`model`]: graphs, SEM parameters, orderings, data matrices
//! * [`simulate`]: random sparse DAGs and iid data with non-Gaussian noise
//! * [`regression`]: standardization, OLS residuals, partial regression
//! * [`scoring`]: log-densities, scale estimates, likelihood-ratio score
//! * [`sorter`]: fast (partial regression) and exact (joint OLS) sorters
//! * [`neighborhoods`]: Markov blankets, correlation screens, full sets
//! * [`metrics`]: order error, coefficient fitting, held-out log-likelihood

// `!(x > y)` is used on purpose so that NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod metrics;
pub mod model;
pub mod neighborhoods;
pub mod regression;
pub mod scoring;
pub mod simulate;
pub mod sorter;

pub use error::{Error, Result};
pub use model::{is_topological, mixing_matrix, DataMatrix, Dag, NeighborhoodSets, NoiseFamily, Ordering, PartialOrdering, WeightedDag};
pub use sorter::{sort, sort_exact, sort_fast, SortConfig, SortMode, SortResult};
