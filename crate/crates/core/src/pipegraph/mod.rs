//! Station coupling derived from the pipe network.
//!
//! Pipes become weighted edges (`d^a · len^b · age^c` for a power triplet),
//! the correlation between two stations is the mean cost of their top-k
//! loopless shortest paths, and the resulting similarity matrix feeds a graph
//! Laplacian penalty in the solver.

mod coupling;
mod io;
mod ksp;
mod scan;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use coupling::{correlation_matrix, station_correlation, TaskCoupling};
pub use io::{read_matrix_csv, read_pipe_network, write_matrix_csv, write_pipe_network};
pub(crate) use io::{open_csv, parse_f64};
pub use ksp::{GraphPath, WeightedGraph};
pub use scan::{power_triplet_scan, TripletScore};

/// Exponents applied to (diameter, length, age) when weighting a pipe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PowerTriplet {
    pub pow_d: i32,
    pub pow_len: i32,
    pub pow_age: i32,
}

impl PowerTriplet {
    pub const MIN: i32 = -5;
    pub const MAX: i32 = 5;

    /// `d² / (len · age)`.
    pub const DEFAULT: PowerTriplet = PowerTriplet {
        pow_d: 2,
        pow_len: -1,
        pow_age: -1,
    };

    pub fn new(pow_d: i32, pow_len: i32, pow_age: i32) -> Result<Self> {
        let range = Self::MIN..=Self::MAX;
        if !(range.contains(&pow_d) && range.contains(&pow_len) && range.contains(&pow_age)) {
            return Err(Error::invalid(format!(
                "power triplet ({pow_d}, {pow_len}, {pow_age}) outside [-5, 5]"
            )));
        }
        Ok(Self {
            pow_d,
            pow_len,
            pow_age,
        })
    }

    /// All 11³ triplets in lexicographic order.
    pub fn all() -> impl Iterator<Item = PowerTriplet> {
        let r = Self::MIN..=Self::MAX;
        r.clone().flat_map(move |d| {
            let r2 = Self::MIN..=Self::MAX;
            r2.flat_map(move |l| {
                (Self::MIN..=Self::MAX).map(move |a| PowerTriplet {
                    pow_d: d,
                    pow_len: l,
                    pow_age: a,
                })
            })
        })
    }
}

impl Default for PowerTriplet {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl std::ops::Add for PowerTriplet {
    type Output = PowerTriplet;

    fn add(self, o: Self) -> Self {
        PowerTriplet {
            pow_d: self.pow_d + o.pow_d,
            pow_len: self.pow_len + o.pow_len,
            pow_age: self.pow_age + o.pow_age,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipeSegment {
    pub node_a: String,
    pub node_b: String,
    pub length_km: f64,
    pub diameter_mm: f64,
    pub age_years: f64,
}

impl PipeSegment {
    pub fn new(
        node_a: impl Into<String>,
        node_b: impl Into<String>,
        length_km: f64,
        diameter_mm: f64,
        age_years: f64,
    ) -> Self {
        Self {
            node_a: node_a.into(),
            node_b: node_b.into(),
            length_km,
            diameter_mm,
            age_years,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("length", self.length_km),
            ("diameter", self.diameter_mm),
            ("age", self.age_years),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "pipe {}-{} has non-positive {name} {v}",
                    self.node_a, self.node_b
                )));
            }
        }
        Ok(())
    }
}

/// `d^pow_d · len^pow_len · age^pow_age`.
pub fn pipe_weight(p: &PipeSegment, t: PowerTriplet) -> Result<f64> {
    p.validate()?;
    Ok(p.diameter_mm.powi(t.pow_d) * p.length_km.powi(t.pow_len) * p.age_years.powi(t.pow_age))
}

/// Undirected pipe multigraph plus the station → node mapping.
///
/// Node indices follow the sorted order of node ids, so index order equals
/// lexicographic id order.
#[derive(Debug, Clone)]
pub struct PipeNetwork {
    nodes: Vec<String>,
    index: BTreeMap<String, usize>,
    segments: Vec<PipeSegment>,
    stations: Vec<(String, usize)>,
}

impl PipeNetwork {
    /// `stations` lists `(station_id, node_id)` in station order.
    pub fn new(
        segments: Vec<PipeSegment>,
        extra_nodes: impl IntoIterator<Item = String>,
        stations: Vec<(String, String)>,
    ) -> Result<Self> {
        for s in &segments {
            s.validate()?;
        }
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        for s in &segments {
            index.insert(s.node_a.clone(), 0);
            index.insert(s.node_b.clone(), 0);
        }
        for n in extra_nodes {
            index.insert(n, 0);
        }
        let nodes: Vec<String> = index.keys().cloned().collect();
        for (i, v) in index.values_mut().enumerate() {
            *v = i;
        }
        let mut mapped = Vec::with_capacity(stations.len());
        for (sid, nid) in stations {
            if mapped.iter().any(|(s, _): &(String, usize)| *s == sid) {
                return Err(Error::invalid(format!("station {sid} mapped twice")));
            }
            let idx = *index.get(&nid).ok_or_else(|| {
                Error::invalid(format!("station {sid} maps to unknown node {nid}"))
            })?;
            mapped.push((sid, idx));
        }
        Ok(Self {
            nodes,
            index,
            segments,
            stations: mapped,
        })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn segments(&self) -> &[PipeSegment] {
        &self.segments
    }

    pub fn station_ids(&self) -> Vec<String> {
        self.stations.iter().map(|(s, _)| s.clone()).collect()
    }

    pub fn station_map(&self) -> Vec<(String, String)> {
        self.stations
            .iter()
            .map(|(s, n)| (s.clone(), self.nodes[*n].clone()))
            .collect()
    }

    pub fn station_node(&self, station: &str) -> Result<usize> {
        self.stations
            .iter()
            .find(|(s, _)| s == station)
            .map(|(_, n)| *n)
            .ok_or_else(|| Error::invalid(format!("station {station} is not mapped to a node")))
    }

    /// Edge `i` of the returned graph is segment `i`.
    pub fn weighted_graph(&self, t: PowerTriplet) -> Result<WeightedGraph> {
        let edges = self
            .segments
            .iter()
            .map(|s| Ok((self.index[&s.node_a], self.index[&s.node_b], pipe_weight(s, t)?)))
            .collect::<Result<Vec<_>>>()?;
        WeightedGraph::new(self.nodes.len(), edges)
    }

    /// Loopless paths between two nodes ordered by total pipe weight.
    pub fn k_shortest_paths(
        &self,
        src: &str,
        dst: &str,
        k: usize,
        t: PowerTriplet,
    ) -> Result<Vec<GraphPath>> {
        let s = self
            .node_index(src)
            .ok_or_else(|| Error::invalid(format!("unknown node {src}")))?;
        let d = self
            .node_index(dst)
            .ok_or_else(|| Error::invalid(format!("unknown node {dst}")))?;
        self.weighted_graph(t)?.k_shortest_paths(s, d, k)
    }
}
