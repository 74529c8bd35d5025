use nalgebra::DMatrix;

use super::engine::Proximal;

/// Row-wise group shrinkage: each row `b` becomes `max(0, 1 − β/‖b‖₂) · b`.
pub fn prox_group_l21(b: &DMatrix<f64>, beta: f64) -> DMatrix<f64> {
    assert!(beta >= 0.0, "beta must be non-negative");
    let mut out = b.clone();
    for mut row in out.row_iter_mut() {
        let norm = row.norm();
        let scale = if norm > beta { 1.0 - beta / norm } else { 0.0 };
        row *= scale;
    }
    out
}

/// `Σ_i ‖row_i‖₂`.
pub fn group_l21_norm(w: &DMatrix<f64>) -> f64 {
    w.row_iter().map(|r| r.norm()).sum()
}

/// Elementwise `sign(b) · max(0, |b| − β)`.
pub fn soft_threshold(b: &DMatrix<f64>, beta: f64) -> DMatrix<f64> {
    b.map(|v| v.signum() * (v.abs() - beta).max(0.0))
}

/// `θ ‖W‖₂,₁`.
#[derive(Debug, Clone, Copy)]
pub struct GroupL21(pub f64);

impl Proximal for GroupL21 {
    fn penalty(&self, w: &DMatrix<f64>) -> f64 {
        if self.0 == 0.0 {
            0.0
        } else {
            self.0 * group_l21_norm(w)
        }
    }

    fn prox(&self, b: &DMatrix<f64>, step: f64) -> DMatrix<f64> {
        if self.0 == 0.0 {
            b.clone()
        } else {
            prox_group_l21(b, self.0 * step)
        }
    }
}

/// `α ‖W‖₁`.
#[derive(Debug, Clone, Copy)]
pub struct L1(pub f64);

impl Proximal for L1 {
    fn penalty(&self, w: &DMatrix<f64>) -> f64 {
        self.0 * w.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn prox(&self, b: &DMatrix<f64>, step: f64) -> DMatrix<f64> {
        soft_threshold(b, self.0 * step)
    }
}
