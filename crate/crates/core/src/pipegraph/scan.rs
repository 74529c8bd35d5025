use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::coupling::coupling_from_graph;
use super::{PipeNetwork, PowerTriplet};
use crate::error::{Error, Result};
use crate::linalg::{pearson, upper_triangle};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TripletScore {
    pub triplet: PowerTriplet,
    pub score: f64,
}

/// Scores every power triplet in `[-5, 5]³` by the Pearson correlation
/// between the upper triangles of `corr_mat` (empirical station correlation)
/// and the path-based coupling it induces. Sorted by score, best first; equal
/// scores keep lexicographic triplet order.
pub fn power_triplet_scan(
    g: &PipeNetwork,
    stations: &[String],
    corr_mat: &DMatrix<f64>,
    k: usize,
) -> Result<Vec<TripletScore>> {
    let m = stations.len();
    if m < 3 {
        return Err(Error::invalid("power triplet scan needs at least 3 stations"));
    }
    if corr_mat.nrows() != m || corr_mat.ncols() != m {
        return Err(Error::invalid(format!(
            "correlation matrix is {}x{}, expected {m}x{m}",
            corr_mat.nrows(),
            corr_mat.ncols()
        )));
    }
    if (corr_mat - corr_mat.transpose()).abs().max() > 1e-12 {
        return Err(Error::invalid("correlation matrix must be symmetric"));
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let nodes = stations
        .iter()
        .map(|s| g.station_node(s))
        .collect::<Result<Vec<_>>>()?;
    let target = upper_triangle(corr_mat);
    let triplets: Vec<PowerTriplet> = PowerTriplet::all().collect();
    let mut scores = triplets
        .par_iter()
        .map(|&t| {
            let graph = g.weighted_graph(t)?;
            let c = coupling_from_graph(&graph, &nodes, k, false)?;
            Ok(TripletScore {
                triplet: t,
                score: pearson(&target, &upper_triangle(c.similarity())),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    scores.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(scores)
}
