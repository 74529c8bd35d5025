use nalgebra::{DMatrix, DVector};

use super::engine::{fista, FistaOptions, Smooth};
use super::prox::{group_l21_norm, GroupL21};
use super::{FitReport, SolverParams, StationDataset, WeightMatrix};
use crate::error::{Error, Result};
use crate::pipegraph::TaskCoupling;

/// Late-fusion prediction `½ X w = ½ (Xs ws + Xt wt)`.
pub fn predict(x: &DMatrix<f64>, w: &DVector<f64>) -> Result<DVector<f64>> {
    if x.ncols() != w.len() {
        return Err(Error::invalid(format!(
            "{} feature columns but {} weights",
            x.ncols(),
            w.len()
        )));
    }
    Ok(x * w * 0.5)
}

fn check_shapes(w: &DMatrix<f64>, data: &StationDataset, coupling: &TaskCoupling) -> Result<()> {
    if w.shape() != (data.d(), data.m()) {
        return Err(Error::invalid(format!(
            "weights are {:?}, expected ({}, {})",
            w.shape(),
            data.d(),
            data.m()
        )));
    }
    if coupling.m() != data.m() {
        return Err(Error::invalid(format!(
            "coupling covers {} stations, dataset has {}",
            coupling.m(),
            data.m()
        )));
    }
    Ok(())
}

/// Full objective evaluated directly on the data (variant switch ignored).
pub fn objective(
    w: &DMatrix<f64>,
    data: &StationDataset,
    coupling: &TaskCoupling,
    p: &SolverParams,
) -> Result<f64> {
    check_shapes(w, data, coupling)?;
    let ds = data.ds();
    let mut total = 0.0;
    for (l, s) in data.stations().iter().enumerate() {
        let wl = w.column(l);
        let ws = wl.rows(0, ds);
        let wt = wl.rows(ds, data.dt());
        let fs = &s.xs * ws;
        let ft = &s.xt * wt;
        let resid = &s.y - (&fs + &ft) * 0.5;
        total += 0.5 * resid.norm_squared();
        total += p.lambda * (fs - ft).norm_squared();
    }
    total += p.gamma * coupling.trace_penalty(w);
    total += p.theta * group_l21_norm(w);
    Ok(total)
}

/// Gradient of the smooth part (everything but `θ ‖W‖₂,₁`).
pub fn grad_smooth(
    w: &DMatrix<f64>,
    data: &StationDataset,
    coupling: &TaskCoupling,
    p: &SolverParams,
) -> Result<DMatrix<f64>> {
    check_shapes(w, data, coupling)?;
    Ok(StMtmvProblem::new(data, coupling, p)?.gradient(w))
}

struct Gram {
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
    /// View-agreement block matrix `[[2XsᵀXs, −2XsᵀXt], [−2XtᵀXs, 2XtᵀXt]]`.
    p: DMatrix<f64>,
}

/// Objective with `XᵀX`, `Xᵀy`, `yᵀy` and `P` precomputed per station, so
/// each evaluation costs `O((D + M) D M)` independent of sample counts.
pub struct StMtmvProblem {
    grams: Vec<Gram>,
    laplacian: DMatrix<f64>,
    lambda: f64,
    gamma: f64,
    theta: f64,
    d: usize,
    ds: usize,
}

impl StMtmvProblem {
    /// Uses `p`'s weights as given; apply [`SolverParams::resolve`] first to
    /// honour a variant.
    pub fn new(data: &StationDataset, coupling: &TaskCoupling, p: &SolverParams) -> Result<Self> {
        p.validate()?;
        if coupling.m() != data.m() {
            return Err(Error::invalid(format!(
                "coupling covers {} stations, dataset has {}",
                coupling.m(),
                data.m()
            )));
        }
        let ds = data.ds();
        let grams = data
            .stations()
            .iter()
            .map(|s| {
                let x = s.x();
                let xtx = x.transpose() * &x;
                let mut pm = &xtx * 2.0;
                let d = xtx.nrows();
                for i in 0..d {
                    for j in 0..d {
                        if (i < ds) != (j < ds) {
                            pm[(i, j)] = -pm[(i, j)];
                        }
                    }
                }
                Gram {
                    xty: x.transpose() * &s.y,
                    yty: s.y.norm_squared(),
                    xtx,
                    p: pm,
                }
            })
            .collect();
        Ok(Self {
            grams,
            laplacian: coupling.laplacian().clone(),
            lambda: p.lambda,
            gamma: p.gamma,
            theta: p.theta,
            d: data.d(),
            ds,
        })
    }

    pub fn solve(&self, opts: &FistaOptions) -> Result<FitReport> {
        let w0 = DMatrix::zeros(self.d, self.grams.len());
        let out = fista(self, &GroupL21(self.theta), w0, opts)?;
        Ok(FitReport {
            iterations: out.trace.len(),
            weights: WeightMatrix::new(out.w, self.ds)?,
            trace: out.trace,
            converged: out.converged,
            lipschitz: out.lipschitz,
        })
    }

    pub fn full_objective(&self, w: &DMatrix<f64>) -> f64 {
        self.value(w) + self.theta * group_l21_norm(w)
    }
}

impl Smooth for StMtmvProblem {
    fn value(&self, w: &DMatrix<f64>) -> f64 {
        let mut total = 0.0;
        for (l, g) in self.grams.iter().enumerate() {
            let wl = w.column(l);
            let quad = wl.dot(&(&g.xtx * wl));
            total += 0.5 * (g.yty - wl.dot(&g.xty) + 0.25 * quad);
            if self.lambda != 0.0 {
                total += self.lambda * 0.5 * wl.dot(&(&g.p * wl));
            }
        }
        if self.gamma != 0.0 {
            total += self.gamma * (w * &self.laplacian).component_mul(w).sum();
        }
        total
    }

    fn gradient(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        let mut grad = if self.gamma != 0.0 {
            w * &self.laplacian * (2.0 * self.gamma)
        } else {
            DMatrix::zeros(w.nrows(), w.ncols())
        };
        for (l, g) in self.grams.iter().enumerate() {
            let wl = w.column(l);
            let mut col = &g.xtx * wl * 0.25 - &g.xty * 0.5;
            if self.lambda != 0.0 {
                col += &g.p * wl * self.lambda;
            }
            let mut target = grad.column_mut(l);
            target += col;
        }
        grad
    }
}
