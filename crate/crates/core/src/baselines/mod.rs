//! Comparison models: first-order RC decay, per-station OLS, Lasso and
//! mean-regularized multi-task learning (MRMTL).
//!
//! Regression baselines use the plain linear model `ŷ_l = X_l w_l` on the
//! concatenated views; the ½ late-fusion factor belongs to stMTMV only.

mod decay;
mod linear;

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::StationDataset;

pub use decay::{decay_fit, decay_forecast, decay_predict, DecayModel};
pub use linear::{lasso_fit, lasso_fit_with, mrmtl_fit, mrmtl_fit_with, ols_fit, OLS_JITTER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Decay,
    Ols,
    Lasso,
    Mrmtl,
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::Decay => "RC-decay",
            BaselineKind::Ols => "LR",
            BaselineKind::Lasso => "LASSO",
            BaselineKind::Mrmtl => "MRMTL",
        })
    }
}

/// A fitted regression baseline: one weight column per station.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    pub kind: BaselineKind,
    pub weights: DMatrix<f64>,
    /// Regularizer values used, by name.
    pub regularizers: Vec<(String, f64)>,
}

impl BaselineModel {
    pub fn predict(&self, data: &StationDataset) -> Result<Vec<DVector<f64>>> {
        if data.d() != self.weights.nrows() || data.m() != self.weights.ncols() {
            return Err(Error::invalid(format!(
                "dataset is {}x{} features/stations, model expects {}x{}",
                data.d(),
                data.m(),
                self.weights.nrows(),
                self.weights.ncols()
            )));
        }
        Ok(data
            .stations()
            .iter()
            .enumerate()
            .map(|(l, s)| s.x() * self.weights.column(l))
            .collect())
    }

    pub fn zero_count(&self) -> usize {
        self.weights.iter().filter(|v| **v == 0.0).count()
    }
}
