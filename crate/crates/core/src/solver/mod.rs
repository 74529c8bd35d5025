//! The stMTMV objective and its FISTA solver.
//!
//! For `M` stations with views `X_l = [Xs_l | Xt_l]` and weights
//! `W = [w_1 … w_M]` (`D × M`), the objective is
//!
//! ```text
//! ½ Σ_l ‖y_l − ½ X_l w_l‖² + λ Σ_l ‖Xs_l ws_l − Xt_l wt_l‖² + γ tr(W L Wᵀ) + θ ‖W‖₂,₁
//! ```
//!
//! where `L` is the Laplacian of the pipe-network coupling. Note that
//! `tr(W L Wᵀ) = ½ Σ_{l,m} C_lm ‖w_l − w_m‖²`, so `γ` absorbs the factor 2.
//! Predictions fuse the views late: `ŷ_l = ½ X_l w_l`.

mod data;
mod engine;
mod model;
mod objective;
mod prox;

pub use data::{StationData, StationDataset, WeightMatrix};
pub use engine::{fista, FistaOptions, FistaOutcome, NoPenalty, Proximal, Smooth, StopRule};
pub use model::{Standardizer, StMtmvModel};
pub use objective::{grad_smooth, objective, predict, StMtmvProblem};
pub use prox::{group_l21_norm, prox_group_l21, soft_threshold, GroupL21, L1};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipegraph::TaskCoupling;

/// Which terms of the objective are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// All terms.
    #[default]
    Full,
    /// Uniform station coupling with the same total mass as the pipe coupling.
    Us,
    /// No group sparsity (`θ = 0`).
    Ws,
    /// No view agreement (`λ = 0`).
    Sv,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::Full => "stMTMV",
            Variant::Us => "stMTMV-us",
            Variant::Ws => "stMTMV-ws",
            Variant::Sv => "stMTMV-sv",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(Variant::Full),
            "us" => Ok(Variant::Us),
            "ws" => Ok(Variant::Ws),
            "sv" => Ok(Variant::Sv),
            other => Err(Error::Config(format!("unknown variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    /// View agreement weight.
    pub lambda: f64,
    /// Laplacian coupling weight.
    pub gamma: f64,
    /// Group sparsity weight.
    pub theta: f64,
    pub max_iters: usize,
    /// Relative objective change that stops the iteration.
    pub tol: f64,
    /// Initial Lipschitz estimate for backtracking.
    pub l0: f64,
    /// Backtracking growth factor.
    pub eta: f64,
    pub variant: Variant,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            gamma: 0.0,
            theta: 0.0,
            max_iters: 2000,
            tol: 1e-6,
            l0: 1.0,
            eta: 2.0,
            variant: Variant::Full,
        }
    }
}

impl SolverParams {
    pub fn with_weights(lambda: f64, gamma: f64, theta: f64) -> Self {
        Self {
            lambda,
            gamma,
            theta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda", self.lambda), ("gamma", self.gamma), ("theta", self.theta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.eta > 1.0) {
            return Err(Error::invalid("eta must exceed 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol must be positive"));
        }
        if !(self.l0 > 0.0 && self.l0.is_finite()) {
            return Err(Error::invalid("initial Lipschitz estimate must be positive"));
        }
        Ok(())
    }

    /// Applies the variant switch, returning plain full-model parameters and
    /// the coupling to use.
    pub fn resolve(&self, coupling: &TaskCoupling) -> (SolverParams, TaskCoupling) {
        let mut p = *self;
        p.variant = Variant::Full;
        let c = match self.variant {
            Variant::Us => coupling.uniform_like(),
            _ => coupling.clone(),
        };
        match self.variant {
            Variant::Ws => p.theta = 0.0,
            Variant::Sv => p.lambda = 0.0,
            _ => {}
        }
        (p, c)
    }

    pub fn engine_options(&self) -> FistaOptions {
        FistaOptions {
            max_iters: self.max_iters,
            tol: self.tol,
            l0: self.l0,
            eta: self.eta,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub weights: WeightMatrix,
    /// Objective after each iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Final backtracking step scalar `L_k`.
    pub lipschitz: f64,
}

/// Fits `W` by FISTA with backtracking, starting from zeros.
pub fn fista_fit(
    data: &StationDataset,
    coupling: &TaskCoupling,
    params: &SolverParams,
) -> Result<FitReport> {
    params.validate()?;
    let (p, c) = params.resolve(coupling);
    let problem = StMtmvProblem::new(data, &c, &p)?;
    problem.solve(&p.engine_options())
}
