use nalgebra::{DMatrix, DVector};

use super::{BaselineKind, BaselineModel};
use crate::error::{Error, Result};
use crate::linalg::spd_solve;
use crate::solver::{fista, FistaOptions, NoPenalty, Smooth, StationDataset, StopRule, L1};

/// Ridge jitter added to each station's normal equations.
pub const OLS_JITTER: f64 = 1e-8;

/// Per-station least squares `min ‖y_l − X_l w_l‖²`.
pub fn ols_fit(data: &StationDataset) -> Result<BaselineModel> {
    let mut w = DMatrix::zeros(data.d(), data.m());
    for (l, s) in data.stations().iter().enumerate() {
        let x = s.x();
        let col = spd_solve(&(x.transpose() * &x), &(x.transpose() * &s.y), OLS_JITTER)
            .map_err(|e| match e {
                Error::NumericFailure { message, .. } => {
                    Error::numeric(0, format!("OLS for station {}: {message}", s.id))
                }
                other => other,
            })?;
        w.set_column(l, &col);
    }
    Ok(BaselineModel {
        kind: BaselineKind::Ols,
        weights: w,
        regularizers: Vec::new(),
    })
}

/// `½ Σ_l ‖y_l − X_l w_l‖² + μ Σ_l ‖w_l − w̄‖² + ρ ‖W‖²_F` with cached Grams.
struct LeastSquares {
    xtx: Vec<DMatrix<f64>>,
    xty: Vec<DVector<f64>>,
    yty: Vec<f64>,
    mean_reg: f64,
    ridge: f64,
}

impl LeastSquares {
    fn new(data: &StationDataset, mean_reg: f64, ridge: f64) -> Self {
        let mut xtx = Vec::new();
        let mut xty = Vec::new();
        let mut yty = Vec::new();
        for s in data.stations() {
            let x = s.x();
            xtx.push(x.transpose() * &x);
            xty.push(x.transpose() * &s.y);
            yty.push(s.y.norm_squared());
        }
        Self {
            xtx,
            xty,
            yty,
            mean_reg,
            ridge,
        }
    }

    fn deviations(w: &DMatrix<f64>) -> DMatrix<f64> {
        let mean = w.column_mean();
        let mut dev = w.clone();
        for mut c in dev.column_iter_mut() {
            c -= &mean;
        }
        dev
    }
}

impl Smooth for LeastSquares {
    fn value(&self, w: &DMatrix<f64>) -> f64 {
        let mut total = 0.0;
        for l in 0..w.ncols() {
            let wl = w.column(l);
            total += 0.5 * (self.yty[l] - 2.0 * wl.dot(&self.xty[l]) + wl.dot(&(&self.xtx[l] * wl)));
        }
        if self.mean_reg != 0.0 {
            total += self.mean_reg * Self::deviations(w).norm_squared();
        }
        total + self.ridge * w.norm_squared()
    }

    fn gradient(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(w.nrows(), w.ncols());
        for l in 0..w.ncols() {
            let col = &self.xtx[l] * w.column(l) - &self.xty[l];
            g.set_column(l, &col);
        }
        if self.mean_reg != 0.0 {
            g += Self::deviations(w) * (2.0 * self.mean_reg);
        }
        g + w * (2.0 * self.ridge)
    }
}

fn check_weight(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
    }
    Ok(())
}

const LASSO_OPTIONS: FistaOptions = FistaOptions {
    max_iters: 20_000,
    tol: 1e-12,
    l0: 1.0,
    eta: 2.0,
    stop: StopRule::ObjectiveChange,
};

const MRMTL_OPTIONS: FistaOptions = FistaOptions {
    max_iters: 20_000,
    tol: 1e-8,
    l0: 1.0,
    eta: 2.0,
    stop: StopRule::IterateChange,
};

/// `½ Σ_l ‖y_l − X_l w_l‖² + α ‖W‖₁` by FISTA with soft thresholding.
pub fn lasso_fit(data: &StationDataset, alpha: f64) -> Result<BaselineModel> {
    lasso_fit_with(data, alpha, &LASSO_OPTIONS)
}

pub fn lasso_fit_with(data: &StationDataset, alpha: f64, opts: &FistaOptions) -> Result<BaselineModel> {
    check_weight("alpha", alpha)?;
    let ls = LeastSquares::new(data, 0.0, 0.0);
    let out = fista(&ls, &L1(alpha), DMatrix::zeros(data.d(), data.m()), opts)?;
    Ok(BaselineModel {
        kind: BaselineKind::Lasso,
        weights: out.w,
        regularizers: vec![("alpha".into(), alpha)],
    })
}

/// `½ Σ_l ‖y_l − X_l w_l‖² + λ Σ_l ‖w_l − w̄‖² + θ ‖W‖²_F` by accelerated
/// gradient descent with backtracking, stopping once the relative iterate
/// change falls below 1e-8.
pub fn mrmtl_fit(data: &StationDataset, lambda: f64, theta: f64) -> Result<BaselineModel> {
    mrmtl_fit_with(data, lambda, theta, &MRMTL_OPTIONS)
}

pub fn mrmtl_fit_with(
    data: &StationDataset,
    lambda: f64,
    theta: f64,
    opts: &FistaOptions,
) -> Result<BaselineModel> {
    check_weight("lambda", lambda)?;
    check_weight("theta", theta)?;
    let ls = LeastSquares::new(data, lambda, theta);
    let out = fista(&ls, &NoPenalty, DMatrix::zeros(data.d(), data.m()), opts)?;
    Ok(BaselineModel {
        kind: BaselineKind::Mrmtl,
        weights: out.w,
        regularizers: vec![("lambda".into(), lambda), ("theta".into(), theta)],
    })
}

#[cfg(test)]
fn mrmtl_objective(data: &StationDataset, w: &DMatrix<f64>, lambda: f64, theta: f64) -> f64 {
    LeastSquares::new(data, lambda, theta).value(w)
}
