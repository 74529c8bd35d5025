use nalgebra::DMatrix;

use super::{PipeNetwork, PowerTriplet, WeightedGraph};
use crate::error::{Error, Result};

/// Station similarity `C` and its Laplacian `L = D - C`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskCoupling {
    c: DMatrix<f64>,
    laplacian: DMatrix<f64>,
    k: usize,
}

impl TaskCoupling {
    /// Validates `C` (square, symmetric, non-negative, zero diagonal) and
    /// derives its Laplacian.
    pub fn from_similarity(c: DMatrix<f64>, k: usize) -> Result<Self> {
        let m = c.nrows();
        if c.ncols() != m {
            return Err(Error::invalid("coupling matrix must be square"));
        }
        for i in 0..m {
            if c[(i, i)] != 0.0 {
                return Err(Error::invalid("coupling matrix must have a zero diagonal"));
            }
            for j in 0..m {
                let v = c[(i, j)];
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::invalid(format!("coupling entry ({i},{j}) = {v}")));
                }
                if v != c[(j, i)] {
                    return Err(Error::invalid("coupling matrix must be symmetric"));
                }
            }
        }
        let mut laplacian = -c.clone();
        for i in 0..m {
            laplacian[(i, i)] = c.row(i).sum();
        }
        Ok(Self { c, laplacian, k })
    }

    /// No coupling between `m` tasks.
    pub fn uncoupled(m: usize) -> Self {
        Self::from_similarity(DMatrix::zeros(m, m), 0).expect("zero matrix is valid")
    }

    /// Uniform off-diagonal coupling whose total mass `Σ C` matches `self`.
    pub fn uniform_like(&self) -> Self {
        let m = self.m();
        if m < 2 {
            return Self::uncoupled(m);
        }
        let level = self.c.sum() / (m * (m - 1)) as f64;
        let c = DMatrix::from_fn(m, m, |i, j| if i == j { 0.0 } else { level });
        Self::from_similarity(c, self.k).expect("uniform matrix is valid")
    }

    pub fn m(&self) -> usize {
        self.c.nrows()
    }

    pub fn similarity(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `tr(W L Wᵀ)` for a `D × M` weight matrix.
    pub fn trace_penalty(&self, w: &DMatrix<f64>) -> f64 {
        (w * &self.laplacian).component_mul(w).sum()
    }
}

fn mean_path_cost(g: &WeightedGraph, a: usize, b: usize, k: usize) -> Result<f64> {
    let paths = g.k_shortest_paths(a, b, k)?;
    if paths.is_empty() {
        return Ok(0.0);
    }
    Ok(paths.iter().map(|p| p.cost).sum::<f64>() / paths.len() as f64)
}

/// Mean total weight of the top-`k` loopless paths between two stations;
/// fewer paths are averaged as found, a disconnected pair gives 0.
pub fn station_correlation(
    g: &PipeNetwork,
    i: &str,
    j: &str,
    k: usize,
    t: PowerTriplet,
) -> Result<f64> {
    if i == j {
        return Err(Error::invalid("station correlation needs two distinct stations"));
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let (a, b) = (g.station_node(i)?, g.station_node(j)?);
    if a == b {
        return Err(Error::invalid(format!("stations {i} and {j} share a node")));
    }
    mean_path_cost(&g.weighted_graph(t)?, a, b, k)
}

pub(crate) fn coupling_from_graph(
    graph: &WeightedGraph,
    nodes: &[usize],
    k: usize,
    normalize: bool,
) -> Result<TaskCoupling> {
    let m = nodes.len();
    let mut c = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            if nodes[i] == nodes[j] {
                return Err(Error::invalid("two stations share a node"));
            }
            let v = mean_path_cost(graph, nodes[i], nodes[j], k)?;
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    if normalize {
        let max = c.max();
        if max > 0.0 {
            c /= max;
        }
    }
    TaskCoupling::from_similarity(c, k)
}

/// Pairwise station correlations for `stations` (in that order) and their
/// Laplacian, optionally scaled so the largest entry is 1.
pub fn correlation_matrix(
    g: &PipeNetwork,
    stations: &[String],
    k: usize,
    t: PowerTriplet,
    normalize: bool,
) -> Result<TaskCoupling> {
    if stations.len() < 2 {
        return Err(Error::invalid("correlation matrix needs at least 2 stations"));
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let nodes = stations
        .iter()
        .map(|s| g.station_node(s))
        .collect::<Result<Vec<_>>>()?;
    coupling_from_graph(&g.weighted_graph(t)?, &nodes, k, normalize)
}
