//! Model selection, fitted-model container and its on-disk format.

use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{GridConfig, SolverConfig};
use super::metrics::rmse;
use crate::baselines::{decay_fit, decay_predict, lasso_fit, mrmtl_fit, ols_fit, DecayModel};
use crate::error::{Error, Result};
use crate::features::TimeSeriesWindow;
use crate::pipegraph::TaskCoupling;
use crate::solver::{SolverParams, Standardizer, StMtmvModel, StationDataset, Variant};

/// A model requested in an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ModelSpec {
    Stmtmv(Variant),
    Ols,
    Lasso,
    Mrmtl,
    Decay,
}

impl ModelSpec {
    /// Row label in result tables.
    pub fn label(self) -> &'static str {
        match self {
            ModelSpec::Stmtmv(v) => v.label(),
            ModelSpec::Ols => "LR",
            ModelSpec::Lasso => "LASSO",
            ModelSpec::Mrmtl => "MRMTL",
            ModelSpec::Decay => "RC-decay",
        }
    }

    /// Config and CLI spelling.
    pub fn key(self) -> &'static str {
        match self {
            ModelSpec::Stmtmv(Variant::Full) => "stmtmv",
            ModelSpec::Stmtmv(Variant::Us) => "stmtmv-us",
            ModelSpec::Stmtmv(Variant::Ws) => "stmtmv-ws",
            ModelSpec::Stmtmv(Variant::Sv) => "stmtmv-sv",
            ModelSpec::Ols => "ols",
            ModelSpec::Lasso => "lasso",
            ModelSpec::Mrmtl => "mrmtl",
            ModelSpec::Decay => "decay",
        }
    }

    /// Hyperparameter settings tried during selection. Terms a variant
    /// switches off are pinned to 0 instead of searched.
    pub fn candidates(self, grid: &GridConfig) -> Vec<Vec<(String, f64)>> {
        let named = |name: &str, vals: &[f64]| -> Vec<(String, f64)> {
            vals.iter().map(|v| (name.to_string(), *v)).collect()
        };
        let axes: Vec<Vec<(String, f64)>> = match self {
            ModelSpec::Stmtmv(v) => {
                let lambda = if v == Variant::Sv { vec![0.0] } else { grid.lambda.clone() };
                let theta = if v == Variant::Ws { vec![0.0] } else { grid.theta.clone() };
                vec![named("lambda", &lambda), named("gamma", &grid.gamma), named("theta", &theta)]
            }
            ModelSpec::Lasso => vec![named("alpha", &grid.alpha)],
            ModelSpec::Mrmtl => vec![named("lambda", &grid.lambda), named("theta", &grid.theta)],
            ModelSpec::Ols | ModelSpec::Decay => Vec::new(),
        };
        axes.into_iter().fold(vec![Vec::new()], |acc, axis| {
            acc.iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |item| {
                        let mut next = prefix.clone();
                        next.push(item.clone());
                        next
                    })
                })
                .collect()
        })
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "stmtmv" => ModelSpec::Stmtmv(Variant::Full),
            "stmtmv-us" => ModelSpec::Stmtmv(Variant::Us),
            "stmtmv-ws" => ModelSpec::Stmtmv(Variant::Ws),
            "stmtmv-sv" => ModelSpec::Stmtmv(Variant::Sv),
            "ols" | "lr" => ModelSpec::Ols,
            "lasso" => ModelSpec::Lasso,
            "mrmtl" => ModelSpec::Mrmtl,
            "decay" | "rc-decay" => ModelSpec::Decay,
            other => return Err(Error::Config(format!("unknown model {other:?}"))),
        })
    }
}

impl From<ModelSpec> for String {
    fn from(m: ModelSpec) -> String {
        m.key().to_string()
    }
}

impl TryFrom<String> for ModelSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Training inputs for one horizon.
#[derive(Debug, Clone)]
pub struct TrainingSet<'a> {
    pub data: &'a StationDataset,
    pub coupling: &'a TaskCoupling,
    /// Per-station anchor RC readings, when the data came from raw series.
    pub anchor_rc: Option<&'a [Vec<f64>]>,
    pub step_minutes: Option<f64>,
    pub horizon_hours: u32,
}

impl<'a> TrainingSet<'a> {
    fn with_data(&self, data: &'a StationDataset, anchor_rc: Option<&'a [Vec<f64>]>) -> Self {
        Self {
            data,
            anchor_rc,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelBody {
    /// `ŷ_l = fusion · Z(X_l) w_l + offset_l` with `Z` the standardizer.
    Linear {
        standardizer: Standardizer,
        ds: usize,
        /// 0.5 for the stMTMV late fusion, 1 for plain baselines.
        fusion: f64,
        /// One weight vector per station.
        weights: Vec<Vec<f64>>,
    },
    Decay { models: Vec<DecayModel> },
}

pub const MODEL_FORMAT: &str = "stmtmv-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub format: String,
    pub version: u32,
    pub model: ModelSpec,
    pub horizon_hours: u32,
    pub station_ids: Vec<String>,
    pub hyperparameters: Vec<(String, f64)>,
    pub body: ModelBody,
}

fn hyper(h: &[(String, f64)], name: &str) -> f64 {
    h.iter().find(|(n, _)| n == name).map(|(_, v)| *v).unwrap_or(0.0)
}

fn anchors_for<'a>(set: &TrainingSet<'a>) -> Result<&'a [Vec<f64>]> {
    set.anchor_rc
        .ok_or_else(|| Error::invalid("RC-decay needs raw RC series (not available for this data)"))
}

impl FittedModel {
    /// Fits `spec` with fixed hyperparameters.
    pub fn fit(
        spec: ModelSpec,
        hyperparameters: Vec<(String, f64)>,
        set: &TrainingSet<'_>,
        solver: &SolverConfig,
    ) -> Result<Self> {
        let data = set.data;
        let body = match spec {
            ModelSpec::Decay => {
                let anchors = anchors_for(set)?;
                let step = set.step_minutes.ok_or_else(|| Error::invalid("missing sampling step"))?;
                let models = anchors
                    .iter()
                    .map(|rc| {
                        let span = rc.len() as f64 * step / 60.0;
                        decay_fit(&TimeSeriesWindow::new(rc.clone(), step, span)?)
                    })
                    .collect::<Result<_>>()?;
                ModelBody::Decay { models }
            }
            ModelSpec::Stmtmv(variant) => {
                let params = SolverParams {
                    lambda: hyper(&hyperparameters, "lambda"),
                    gamma: hyper(&hyperparameters, "gamma"),
                    theta: hyper(&hyperparameters, "theta"),
                    max_iters: solver.max_iters,
                    tol: solver.tol,
                    l0: solver.l0,
                    eta: solver.eta,
                    variant,
                };
                let m = StMtmvModel::fit(data, set.coupling, &params)?;
                ModelBody::Linear {
                    ds: data.ds(),
                    fusion: 0.5,
                    weights: columns(m.weights.matrix()),
                    standardizer: m.standardizer,
                }
            }
            ModelSpec::Ols | ModelSpec::Lasso | ModelSpec::Mrmtl => {
                let standardizer = Standardizer::fit(data);
                let z = standardizer.transform(data)?;
                let fitted = match spec {
                    ModelSpec::Ols => ols_fit(&z)?,
                    ModelSpec::Lasso => lasso_fit(&z, hyper(&hyperparameters, "alpha"))?,
                    _ => mrmtl_fit(&z, hyper(&hyperparameters, "lambda"), hyper(&hyperparameters, "theta"))?,
                };
                ModelBody::Linear {
                    standardizer,
                    ds: data.ds(),
                    fusion: 1.0,
                    weights: columns(&fitted.weights),
                }
            }
        };
        Ok(Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            model: spec,
            horizon_hours: set.horizon_hours,
            station_ids: data.ids(),
            hyperparameters,
            body,
        })
    }

    /// Grid search on the trailing validation slice of `set`, then a refit
    /// on all of it. Ties keep the earlier candidate.
    pub fn select(spec: ModelSpec, set: &TrainingSet<'_>, grid: &GridConfig, solver: &SolverConfig) -> Result<Self> {
        let candidates = spec.candidates(grid);
        if candidates.len() == 1 {
            return Self::fit(spec, candidates[0].clone(), set, solver);
        }
        let (fit_part, val_part) = set.data.split(1.0 - grid.validation_fraction)?;
        let inner = set.with_data(&fit_part, None);
        let scores: Vec<Result<f64>> = candidates
            .par_iter()
            .map(|h| {
                let m = Self::fit(spec, h.clone(), &inner, solver)?;
                rmse(&val_part.targets(), &m.predict(&val_part, None)?)
            })
            .collect();
        let mut best: Option<(usize, f64)> = None;
        let mut first_err = None;
        for (i, s) in scores.into_iter().enumerate() {
            match s {
                Ok(v) if v.is_finite() && best.is_none_or(|(_, b)| v < b) => best = Some((i, v)),
                Ok(_) => {}
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
        }
        match best {
            Some((i, _)) => Self::fit(spec, candidates[i].clone(), set, solver),
            None => Err(first_err.unwrap_or_else(|| Error::numeric(0, "no candidate produced a finite score"))),
        }
    }

    pub fn predict(&self, data: &StationDataset, anchor_rc: Option<&[Vec<f64>]>) -> Result<Vec<DVector<f64>>> {
        if data.ids() != self.station_ids {
            return Err(Error::invalid("dataset stations differ from the fitted model"));
        }
        match &self.body {
            ModelBody::Linear {
                standardizer,
                ds,
                fusion,
                weights,
            } => {
                if data.ds() != *ds || data.d() != standardizer.dim() {
                    return Err(Error::invalid("dataset feature layout differs from the fitted model"));
                }
                Ok(data
                    .stations()
                    .iter()
                    .enumerate()
                    .map(|(l, s)| {
                        let x = standardizer.transform_x(l, &s.x());
                        let w = DVector::from_column_slice(&weights[l]);
                        (x * w * *fusion).add_scalar(standardizer.y_offset[l])
                    })
                    .collect())
            }
            ModelBody::Decay { models } => {
                let anchors = anchor_rc
                    .ok_or_else(|| Error::invalid("RC-decay prediction needs the anchor RC readings"))?;
                if anchors.len() != models.len() {
                    return Err(Error::invalid("anchor readings do not match the station count"));
                }
                let h = self.horizon_hours as f64;
                Ok(models
                    .iter()
                    .zip(anchors)
                    .map(|(m, rc)| DVector::from_iterator(rc.len(), rc.iter().map(|&c| decay_predict(&m.reanchor(c), h))))
                    .collect())
            }
        }
    }

    /// Weight matrix (`D × M`) for linear models.
    pub fn weight_matrix(&self) -> Option<DMatrix<f64>> {
        match &self.body {
            ModelBody::Linear { weights, .. } => {
                let d = weights.first().map_or(0, |w| w.len());
                Some(DMatrix::from_fn(d, weights.len(), |i, l| weights[l][i]))
            }
            ModelBody::Decay { .. } => None,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("model serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Self = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path, e.line(), format!("model file: {e}")))?;
        if m.format != MODEL_FORMAT || m.version != MODEL_VERSION {
            return Err(Error::parse(
                path,
                1,
                format!("unsupported model format {} v{}", m.format, m.version),
            ));
        }
        Ok(m)
    }
}

fn columns(w: &DMatrix<f64>) -> Vec<Vec<f64>> {
    w.column_iter().map(|c| c.iter().copied().collect()).collect()
}
