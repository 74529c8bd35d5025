//! Accelerated proximal gradient (FISTA) with backtracking.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Differentiable part `h` of a composite objective.
pub trait Smooth {
    fn value(&self, w: &DMatrix<f64>) -> f64;
    fn gradient(&self, w: &DMatrix<f64>) -> DMatrix<f64>;
}

/// Non-smooth part `g` with an inexpensive proximal map.
pub trait Proximal {
    fn penalty(&self, w: &DMatrix<f64>) -> f64;
    /// `argmin_W g(W) + 1/(2 step) ‖W − b‖²_F`.
    fn prox(&self, b: &DMatrix<f64>, step: f64) -> DMatrix<f64>;
}

/// `g = 0`; FISTA reduces to accelerated gradient descent.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoPenalty;

impl Proximal for NoPenalty {
    fn penalty(&self, _: &DMatrix<f64>) -> f64 {
        0.0
    }

    fn prox(&self, b: &DMatrix<f64>, _: f64) -> DMatrix<f64> {
        b.clone()
    }
}

/// Quantity compared against `tol` after each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopRule {
    /// `|F_k − F_{k−1}| / |F_{k−1}|`.
    #[default]
    ObjectiveChange,
    /// `‖W_k − W_{k−1}‖_F / max(‖W_k‖_F, 1)`.
    IterateChange,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FistaOptions {
    pub max_iters: usize,
    pub tol: f64,
    pub l0: f64,
    pub eta: f64,
    pub stop: StopRule,
}

impl Default for FistaOptions {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            tol: 1e-6,
            l0: 1.0,
            eta: 2.0,
            stop: StopRule::ObjectiveChange,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FistaOutcome {
    pub w: DMatrix<f64>,
    pub initial_objective: f64,
    pub trace: Vec<f64>,
    pub converged: bool,
    pub lipschitz: f64,
}

const MAX_BACKTRACKS: usize = 200;

/// Minimizes `h + g` from `w0`.
///
/// Each iteration backtracks `L` (multiplying by `eta`) until the quadratic
/// upper bound at the search point holds, then takes the proximal step and
/// extrapolates with `t_{k+1} = (1 + √(1 + 4 t_k²)) / 2`. Stops after
/// `max_iters` or when the [`StopRule`] quantity drops below `tol`.
pub fn fista<S: Smooth, P: Proximal>(
    smooth: &S,
    prox: &P,
    w0: DMatrix<f64>,
    opts: &FistaOptions,
) -> Result<FistaOutcome> {
    let initial_objective = smooth.value(&w0) + prox.penalty(&w0);
    if !initial_objective.is_finite() {
        return Err(Error::numeric(0, "initial objective is not finite"));
    }
    let mut w_prev = w0.clone();
    let mut v = w0;
    let mut t = 1.0f64;
    let mut lip = opts.l0;
    let mut f_prev = initial_objective;
    let mut trace = Vec::new();
    let mut converged = false;

    for k in 1..=opts.max_iters {
        let hv = smooth.value(&v);
        let gv = smooth.gradient(&v);
        if !hv.is_finite() || gv.iter().any(|g| !g.is_finite()) {
            return Err(Error::numeric(k, "smooth part diverged at the search point"));
        }
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let w = prox.prox(&(&v - &gv * (1.0 / lip)), 1.0 / lip);
            let hw = smooth.value(&w);
            let diff = &w - &v;
            let bound = hv + gv.dot(&diff) + 0.5 * lip * diff.norm_squared();
            if hw.is_finite() && hw <= bound + 1e-12 * hv.abs().max(1.0) {
                accepted = Some((w, hw));
                break;
            }
            lip *= opts.eta;
        }
        let (w, hw) =
            accepted.ok_or_else(|| Error::numeric(k, "backtracking line search did not terminate"))?;
        let f = hw + prox.penalty(&w);
        if !f.is_finite() {
            return Err(Error::numeric(k, "objective is not finite"));
        }
        trace.push(f);

        let step = &w - &w_prev;
        let rel = match opts.stop {
            StopRule::ObjectiveChange => (f_prev - f).abs() / f_prev.abs().max(f64::MIN_POSITIVE),
            StopRule::IterateChange => step.norm() / w.norm().max(1.0),
        };
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        v = &w + step * ((t - 1.0) / t_next);
        w_prev = w;
        t = t_next;

        f_prev = f;
        if rel < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(FistaOutcome {
        w: w_prev,
        initial_objective,
        trace,
        converged,
        lipschitz: lip,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `½ ‖A w − b‖²` on a single column.
    struct Quadratic {
        a: DMatrix<f64>,
        b: DMatrix<f64>,
    }

    impl Smooth for Quadratic {
        fn value(&self, w: &DMatrix<f64>) -> f64 {
            0.5 * (&self.a * w - &self.b).norm_squared()
        }

        fn gradient(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
            self.a.transpose() * (&self.a * w - &self.b)
        }
    }

    #[test]
    fn solves_least_squares() {
        let a = DMatrix::from_row_slice(3, 2, &[2.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DMatrix::from_row_slice(3, 1, &[2.0, 1.0, 2.0]);
        let q = Quadratic { a, b };
        let opts = FistaOptions {
            max_iters: 5000,
            tol: 1e-15,
            ..Default::default()
        };
        let out = fista(&q, &NoPenalty, DMatrix::zeros(2, 1), &opts).unwrap();
        assert!((out.w[(0, 0)] - 1.0).abs() < 1e-6 && (out.w[(1, 0)] - 1.0).abs() < 1e-6);
        assert!(out.lipschitz >= 1.0);
        assert!(*out.trace.last().unwrap() <= out.initial_objective);
    }

    struct Exploding;

    impl Smooth for Exploding {
        fn value(&self, w: &DMatrix<f64>) -> f64 {
            if w.norm() > 0.0 {
                f64::NAN
            } else {
                1.0
            }
        }

        fn gradient(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
            DMatrix::from_element(w.nrows(), w.ncols(), 1.0)
        }
    }

    #[test]
    fn reports_failure_iteration() {
        let err = fista(&Exploding, &NoPenalty, DMatrix::zeros(1, 1), &FistaOptions::default())
            .unwrap_err();
        match err {
            Error::NumericFailure { iteration, .. } => assert_eq!(iteration, 1),
            other => panic!("unexpected {other}"),
        }
    }
}
