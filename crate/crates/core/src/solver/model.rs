//! Standardized stMTMV model: features and targets centered per station and
//! scaled with pooled training statistics around [`fista_fit`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{fista_fit, FitReport, SolverParams, StationData, StationDataset, WeightMatrix};
use crate::error::{Error, Result};
use crate::pipegraph::TaskCoupling;

/// Per-station column means, scales pooled over every station's
/// within-station deviations, and per-station target means. Centering
/// features and targets by the same station gives each station an exact
/// intercept. Constant columns keep scale 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    /// `x_mean[l][j]`: mean of column `j` at station `l`.
    pub x_mean: Vec<Vec<f64>>,
    pub scale: Vec<f64>,
    /// Per-station target means.
    pub y_offset: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &StationDataset) -> Self {
        let d = data.d();
        let n = data.total_samples() as f64;
        let mut sq = vec![0.0; d];
        let mut x_mean = Vec::with_capacity(data.m());
        for s in data.stations() {
            let x = s.x();
            let means: Vec<f64> = (0..d).map(|j| x.column(j).mean()).collect();
            for j in 0..d {
                sq[j] += x.column(j).iter().map(|v| (v - means[j]).powi(2)).sum::<f64>();
            }
            x_mean.push(means);
        }
        let scale = sq
            .iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        let y_offset = data.stations().iter().map(|s| s.y.mean()).collect();
        Self {
            x_mean,
            scale,
            y_offset,
        }
    }

    pub fn dim(&self) -> usize {
        self.scale.len()
    }

    /// Standardizes rows of station `l`.
    pub fn transform_x(&self, l: usize, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mean = &self.x_mean[l];
        DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - mean[j]) / self.scale[j])
    }

    /// Standardized features and centered targets, station by station.
    pub fn transform(&self, data: &StationDataset) -> Result<StationDataset> {
        if data.d() != self.dim() || data.m() != self.y_offset.len() {
            return Err(Error::invalid("dataset shape does not match standardizer"));
        }
        let ds = data.ds();
        let stations = data
            .stations()
            .iter()
            .enumerate()
            .map(|(l, s)| {
                let x = self.transform_x(l, &s.x());
                StationData {
                    id: s.id.clone(),
                    xs: x.columns(0, ds).into_owned(),
                    xt: x.columns(ds, data.dt()).into_owned(),
                    y: s.y.add_scalar(-self.y_offset[l]),
                }
            })
            .collect();
        StationDataset::new(stations, ds, data.dt())
    }
}

#[derive(Debug, Clone)]
pub struct StMtmvModel {
    pub weights: WeightMatrix,
    pub standardizer: Standardizer,
    pub params: SolverParams,
    pub station_ids: Vec<String>,
    pub report: Option<FitReport>,
}

impl StMtmvModel {
    pub fn fit(data: &StationDataset, coupling: &TaskCoupling, params: &SolverParams) -> Result<Self> {
        let standardizer = Standardizer::fit(data);
        let z = standardizer.transform(data)?;
        let report = fista_fit(&z, coupling, params)?;
        Ok(Self {
            weights: report.weights.clone(),
            standardizer,
            params: *params,
            station_ids: data.ids(),
            report: Some(report),
        })
    }

    /// Predictions in original target units, one vector per station.
    pub fn predict(&self, data: &StationDataset) -> Result<Vec<DVector<f64>>> {
        if data.ids() != self.station_ids {
            return Err(Error::invalid("dataset stations differ from the fitted model"));
        }
        if data.d() != self.weights.matrix().nrows() || data.ds() != self.weights.ds() {
            return Err(Error::invalid("dataset feature layout differs from the fitted model"));
        }
        data.stations()
            .iter()
            .enumerate()
            .map(|(l, s)| {
                let x = self.standardizer.transform_x(l, &s.x());
                let yhat = super::predict(&x, &self.weights.column(l))?;
                Ok(yhat.add_scalar(self.standardizer.y_offset[l]))
            })
            .collect()
    }
}
