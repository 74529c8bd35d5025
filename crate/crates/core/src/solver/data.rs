use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::hstack;

/// One station's spatial view, temporal view and targets.
#[derive(Debug, Clone, PartialEq)]
pub struct StationData {
    pub id: String,
    pub xs: DMatrix<f64>,
    pub xt: DMatrix<f64>,
    pub y: DVector<f64>,
}

impl StationData {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// `[Xs | Xt]`.
    pub fn x(&self) -> DMatrix<f64> {
        hstack(&self.xs, &self.xt)
    }

    /// Rows in `range`, in order.
    pub fn rows(&self, range: std::ops::Range<usize>) -> StationData {
        let n = range.len();
        StationData {
            id: self.id.clone(),
            xs: self.xs.rows(range.start, n).into_owned(),
            xt: self.xt.rows(range.start, n).into_owned(),
            y: self.y.rows(range.start, n).into_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationDataset {
    stations: Vec<StationData>,
    ds: usize,
    dt: usize,
}

impl StationDataset {
    pub fn new(stations: Vec<StationData>, ds: usize, dt: usize) -> Result<Self> {
        if stations.is_empty() {
            return Err(Error::invalid("dataset has no stations"));
        }
        for s in &stations {
            let n = s.y.len();
            if n == 0 {
                return Err(Error::invalid(format!("station {} has no samples", s.id)));
            }
            if s.xs.shape() != (n, ds) || s.xt.shape() != (n, dt) {
                return Err(Error::invalid(format!(
                    "station {}: views {:?}/{:?} do not match {n} samples of {ds}+{dt} features",
                    s.id,
                    s.xs.shape(),
                    s.xt.shape()
                )));
            }
            let finite = s.xs.iter().chain(s.xt.iter()).chain(s.y.iter()).all(|v| v.is_finite());
            if !finite {
                return Err(Error::invalid(format!("station {} has non-finite entries", s.id)));
            }
        }
        Ok(Self { stations, ds, dt })
    }

    pub fn stations(&self) -> &[StationData] {
        &self.stations
    }

    pub fn station(&self, l: usize) -> &StationData {
        &self.stations[l]
    }

    pub fn ids(&self) -> Vec<String> {
        self.stations.iter().map(|s| s.id.clone()).collect()
    }

    pub fn m(&self) -> usize {
        self.stations.len()
    }

    pub fn ds(&self) -> usize {
        self.ds
    }

    pub fn dt(&self) -> usize {
        self.dt
    }

    pub fn d(&self) -> usize {
        self.ds + self.dt
    }

    /// Total sample count `N = Σ N_l`.
    pub fn total_samples(&self) -> usize {
        self.stations.iter().map(|s| s.n()).sum()
    }

    pub fn targets(&self) -> Vec<DVector<f64>> {
        self.stations.iter().map(|s| s.y.clone()).collect()
    }

    /// Applies `f` to every station, keeping the view split.
    pub fn map_stations(&self, f: impl Fn(&StationData) -> StationData) -> Result<Self> {
        Self::new(self.stations.iter().map(f).collect(), self.ds, self.dt)
    }

    /// Chronological split: the first `floor(fraction · N_l)` rows of every
    /// station train, the rest test. Each side keeps at least one row.
    pub fn split(&self, fraction: f64) -> Result<(Self, Self)> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::invalid(format!("split fraction {fraction} outside (0, 1)")));
        }
        let mut train = Vec::with_capacity(self.m());
        let mut test = Vec::with_capacity(self.m());
        for s in &self.stations {
            let n = s.n();
            if n < 2 {
                return Err(Error::invalid(format!("station {} has too few samples to split", s.id)));
            }
            let cut = ((fraction * n as f64).floor() as usize).clamp(1, n - 1);
            train.push(s.rows(0..cut));
            test.push(s.rows(cut..n));
        }
        Ok((
            Self::new(train, self.ds, self.dt)?,
            Self::new(test, self.ds, self.dt)?,
        ))
    }
}

/// Model parameters: column `l` is `w_l = [ws_l; wt_l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    w: DMatrix<f64>,
    ds: usize,
}

impl WeightMatrix {
    pub fn new(w: DMatrix<f64>, ds: usize) -> Result<Self> {
        if ds > w.nrows() {
            return Err(Error::invalid("view split exceeds weight rows"));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("weight matrix has non-finite entries"));
        }
        Ok(Self { w, ds })
    }

    pub fn zeros(d: usize, m: usize, ds: usize) -> Self {
        Self {
            w: DMatrix::zeros(d, m),
            ds,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.w
    }

    pub fn ds(&self) -> usize {
        self.ds
    }

    pub fn column(&self, l: usize) -> DVector<f64> {
        self.w.column(l).into_owned()
    }

    /// Indices of rows that are exactly zero.
    pub fn zero_rows(&self) -> Vec<usize> {
        (0..self.w.nrows())
            .filter(|&i| self.w.row(i).iter().all(|v| *v == 0.0))
            .collect()
    }
}
