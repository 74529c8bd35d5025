use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::TimeSeriesWindow;

/// First-order bulk decay `dC/dt = −k C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayModel {
    /// Decay constant in 1/hour.
    pub k: f64,
    /// Concentration at the anchor time (mg/L).
    pub c0: f64,
}

impl DecayModel {
    /// Same decay constant, anchored at `last`.
    pub fn reanchor(self, last: f64) -> Self {
        Self { k: self.k, c0: last }
    }
}

/// Log-linear least squares of `ln c_t` on time in hours; `k` is the negated
/// slope clamped at 0 and `c0 = exp(intercept)`.
pub fn decay_fit(series: &TimeSeriesWindow) -> Result<DecayModel> {
    let c = series.values();
    if c.len() < 2 {
        return Err(Error::invalid("decay fit needs at least 2 samples"));
    }
    if let Some(v) = c.iter().find(|v| **v <= 0.0) {
        return Err(Error::invalid(format!("non-positive concentration {v}")));
    }
    let dt = series.step_minutes() / 60.0;
    let n = c.len() as f64;
    let t: Vec<f64> = (0..c.len()).map(|i| i as f64 * dt).collect();
    let logs: Vec<f64> = c.iter().map(|v| v.ln()).collect();
    let tbar = t.iter().sum::<f64>() / n;
    let lbar = logs.iter().sum::<f64>() / n;
    let (mut stl, mut stt) = (0.0, 0.0);
    for (ti, li) in t.iter().zip(&logs) {
        stl += (ti - tbar) * (li - lbar);
        stt += (ti - tbar) * (ti - tbar);
    }
    let slope = stl / stt;
    let intercept = lbar - slope * tbar;
    Ok(DecayModel {
        k: (-slope).max(0.0),
        c0: intercept.exp(),
    })
}

/// `c0 · exp(−k h)` for a horizon of `h ≥ 0` hours past the anchor.
pub fn decay_predict(m: &DecayModel, horizon_hours: f64) -> f64 {
    debug_assert!(horizon_hours >= 0.0);
    m.c0 * (-m.k * horizon_hours).exp()
}

/// Fits the window, re-anchors at its last sample and projects `h` hours on.
pub fn decay_forecast(series: &TimeSeriesWindow, horizon_hours: f64) -> Result<f64> {
    let m = decay_fit(series)?.reanchor(series.last());
    Ok(decay_predict(&m, horizon_hours))
}
