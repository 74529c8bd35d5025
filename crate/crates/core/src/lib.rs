//! Spatio-temporal multi-task multi-view (stMTMV) regression.
//!
//! Stations coupled through a pipe network are modelled jointly: each station
//! is a task with a spatial and a temporal feature view, predictions fuse the
//! two views, and the weight matrix is regularized by view agreement, a graph
//! Laplacian built from top-k shortest pipe paths, and an l2,1 group penalty.
//!
//! * [`features`] turns raw sensor windows and geographic summaries into views.
//! * [`pipegraph`] builds the station coupling matrix and its Laplacian.
//! * [`solver`] holds the objective, its gradient, the group prox and FISTA.
//! * [`baselines`] implements first-order decay, OLS, Lasso and MRMTL.
//! * [`harness`] covers ingestion, synthetic data, metrics and experiments.

pub mod baselines;
pub mod error;
pub mod features;
pub mod harness;
pub mod linalg;
pub mod pipegraph;
pub mod solver;

pub use error::{Error, Result};
