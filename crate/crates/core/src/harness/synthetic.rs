//! Planted-model generator: a random geometric pipe network, a coupling
//! derived from it, and per-station data drawn from a known `W`.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipegraph::{correlation_matrix, PipeNetwork, PipeSegment, PowerTriplet, TaskCoupling};
use crate::solver::{StationData, StationDataset, WeightMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub stations: usize,
    pub ds: usize,
    pub dt: usize,
    /// Samples per station.
    pub samples: usize,
    /// Number of non-zero rows in the shared base weights.
    pub support: usize,
    /// Target noise standard deviation.
    pub sigma: f64,
    pub graph_nodes: usize,
    /// Connection radius in the unit square.
    pub graph_radius: f64,
    pub length_km: [f64; 2],
    pub diameter_mm: [f64; 2],
    pub age_years: [f64; 2],
    /// `κ` in the perturbation covariance `τ² (I + κ L)⁻¹`.
    pub smoothness: f64,
    /// `τ`, the per-task perturbation scale.
    pub perturbation: f64,
    /// Correlation between a group's spatial column and its temporal signal.
    pub view_correlation: f64,
    /// Smallest magnitude of an active base weight.
    pub min_weight: f64,
    /// Paths per station pair for the coupling.
    pub k: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            stations: 6,
            ds: 10,
            dt: 10,
            samples: 100,
            support: 5,
            sigma: 0.1,
            graph_nodes: 30,
            graph_radius: 0.3,
            length_km: [0.2, 3.0],
            diameter_mm: [100.0, 600.0],
            age_years: [1.0, 40.0],
            smoothness: 10.0,
            perturbation: 0.4,
            view_correlation: 0.99,
            min_weight: 0.5,
            k: 3,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid(format!("synthetic spec: {msg}")));
        if self.stations < 1 {
            return bad("need at least one station".into());
        }
        if self.ds + self.dt == 0 {
            return bad("need at least one feature".into());
        }
        if self.support > self.ds + self.dt {
            return bad(format!("support {} exceeds D = {}", self.support, self.ds + self.dt));
        }
        if self.samples < 2 {
            return bad("need at least 2 samples per station".into());
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma {} must be >= 0", self.sigma));
        }
        if self.graph_nodes < self.stations.max(2) {
            return bad(format!(
                "{} graph nodes cannot host {} stations",
                self.graph_nodes, self.stations
            ));
        }
        for (name, [lo, hi]) in [
            ("length_km", self.length_km),
            ("diameter_mm", self.diameter_mm),
            ("age_years", self.age_years),
        ] {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return bad(format!("{name} range [{lo}, {hi}] must be positive and ordered"));
            }
        }
        if !(self.graph_radius > 0.0) {
            return bad("graph radius must be positive".into());
        }
        if !(self.smoothness >= 0.0 && self.perturbation >= 0.0 && self.min_weight >= 0.0) {
            return bad("smoothness, perturbation and min_weight must be >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.view_correlation) {
            return bad("view correlation must lie in [0, 1]".into());
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: StationDataset,
    pub network: PipeNetwork,
    pub planted: WeightMatrix,
    pub coupling: TaskCoupling,
}

impl SyntheticData {
    /// Noise-free targets `½ X_l w_l` under the planted weights.
    pub fn oracle_predictions(&self, data: &StationDataset) -> Vec<DVector<f64>> {
        data.stations()
            .iter()
            .enumerate()
            .map(|(l, s)| s.x() * self.planted.column(l) * 0.5)
            .collect()
    }
}

fn uniform(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn node_id(i: usize) -> String {
    format!("n{i:03}")
}

fn random_network(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Result<PipeNetwork> {
    let n = spec.graph_nodes;
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)))
        .collect();
    let dist = |a: usize, b: usize| ((pts[a].0 - pts[b].0).powi(2) + (pts[a].1 - pts[b].1).powi(2)).sqrt();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if dist(a, b) < spec.graph_radius {
                edges.push((a, b));
            }
        }
    }
    // Attach every node to its nearest predecessor so the graph is connected.
    for b in 1..n {
        let a = (0..b)
            .min_by(|&x, &y| dist(x, b).total_cmp(&dist(y, b)))
            .expect("b > 0");
        if !edges.contains(&(a, b)) {
            edges.push((a, b));
        }
    }
    edges.sort_unstable();
    let span = spec.length_km[1] - spec.length_km[0];
    let segments = edges
        .into_iter()
        .map(|(a, b)| {
            let length = spec.length_km[0] + span * (dist(a, b) / std::f64::consts::SQRT_2).min(1.0);
            PipeSegment::new(
                node_id(a),
                node_id(b),
                length,
                uniform(rng, spec.diameter_mm),
                uniform(rng, spec.age_years),
            )
        })
        .collect();
    let mut hosts: Vec<usize> = (0..n).collect();
    hosts.shuffle(rng);
    let stations = (0..spec.stations)
        .map(|l| (format!("S{:02}", l + 1), node_id(hosts[l])))
        .collect();
    PipeNetwork::new(segments, (0..n).map(node_id), stations)
}

/// Active rows that explain one latent signal: a spatial row tied to one or
/// two temporal rows, or a lone row when no partner is left.
#[derive(Debug, Clone)]
struct Group {
    spatial: Option<usize>,
    temporal: Vec<usize>,
}

/// Splits `support` active rows into view-matched groups. Pairs `(j, D_s + j)`
/// come first; an odd remainder of three becomes one spatial row tied to two
/// temporal rows, so every group can satisfy the view agreement exactly.
fn support_groups(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Vec<Group> {
    let (ds, dt) = (spec.ds, spec.dt);
    let mut spatial: Vec<usize> = (0..ds).collect();
    let mut temporal: Vec<usize> = (0..dt).collect();
    spatial.shuffle(rng);
    temporal.shuffle(rng);
    let mut groups = Vec::new();
    let mut left = spec.support;
    while left >= 2 && !spatial.is_empty() && !temporal.is_empty() {
        let take = if left == 3 && temporal.len() >= 2 { 2 } else { 1 };
        let s = spatial.pop().expect("non-empty");
        let t: Vec<usize> = (0..take).map(|_| temporal.pop().expect("checked length")).collect();
        left -= 1 + take;
        groups.push(Group {
            spatial: Some(s),
            temporal: t,
        });
    }
    let mut free: Vec<Group> = spatial
        .into_iter()
        .map(|s| Group {
            spatial: Some(s),
            temporal: Vec::new(),
        })
        .chain(temporal.into_iter().map(|t| Group {
            spatial: None,
            temporal: vec![t],
        }))
        .collect();
    free.shuffle(rng);
    groups.extend(free.into_iter().take(left));
    groups
}

/// Rows of `W`: the shared sparse base plus, on active rows, a perturbation
/// across tasks drawn from `N(0, τ² (I + κ L)⁻¹)`.
///
/// Within a group the temporal rows carry the common value `v` and the
/// spatial row carries `v·√|T|`, matching the column construction in
/// [`generate_synthetic`].
fn planted_weights(
    spec: &SyntheticSpec,
    groups: &[Group],
    coupling: &TaskCoupling,
    rng: &mut ChaCha8Rng,
) -> Result<DMatrix<f64>> {
    let (m, ds) = (spec.stations, spec.ds);
    let cov = (DMatrix::identity(m, m) + coupling.laplacian() * spec.smoothness)
        .try_inverse()
        .ok_or_else(|| Error::invalid("perturbation covariance is singular"))?;
    let chol = cov
        .cholesky()
        .ok_or_else(|| Error::invalid("perturbation covariance is not positive definite"))?;
    let factor = chol.l() * spec.perturbation;

    let mut w = DMatrix::zeros(ds + spec.dt, m);
    for g in groups {
        let z: f64 = rng.sample(StandardNormal);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let base = sign * (spec.min_weight + z.abs());
        let delta = &factor * DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let spatial_scale = (g.temporal.len().max(1) as f64).sqrt();
        for l in 0..m {
            let v = base + delta[l];
            if let Some(s) = g.spatial {
                w[(s, l)] = v * spatial_scale;
            }
            for &t in &g.temporal {
                w[(ds + t, l)] = v;
            }
        }
    }
    Ok(w)
}

/// Draws a complete planted instance; identical seeds give identical data.
///
/// Columns are standard normal. In a group with a spatial row `j` and
/// temporal rows `T`, the spatial column is `ρ Σ_T x_t / √|T| + √(1-ρ²) ε`,
/// so both views carry the same signal; inactive columns are independent.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let network = random_network(spec, &mut rng)?;
    let ids = network.station_ids();
    let coupling = if spec.stations >= 2 {
        correlation_matrix(&network, &ids, spec.k, PowerTriplet::DEFAULT, true)?
    } else {
        TaskCoupling::uncoupled(1)
    };
    let groups = support_groups(spec, &mut rng);
    let w = planted_weights(spec, &groups, &coupling, &mut rng)?;

    let (ds, dt, n) = (spec.ds, spec.dt, spec.samples);
    let rho = spec.view_correlation;
    let rest = (1.0 - rho * rho).sqrt();
    let stations = ids
        .iter()
        .enumerate()
        .map(|(l, id)| {
            let xt = DMatrix::from_fn(n, dt, |_, _| rng.sample::<f64, _>(StandardNormal));
            let mut xs = DMatrix::from_fn(n, ds, |_, _| rng.sample::<f64, _>(StandardNormal));
            for g in &groups {
                let (Some(j), false) = (g.spatial, g.temporal.is_empty()) else {
                    continue;
                };
                let norm = (g.temporal.len() as f64).sqrt();
                for i in 0..n {
                    let shared: f64 = g.temporal.iter().map(|&t| xt[(i, t)]).sum::<f64>() / norm;
                    xs[(i, j)] = rho * shared + rest * xs[(i, j)];
                }
            }
            let signal = (&xs * w.view((0, l), (ds, 1)) + &xt * w.view((ds, l), (dt, 1))) * 0.5;
            let y = DVector::from_fn(n, |i, _| signal[(i, 0)] + spec.sigma * rng.sample::<f64, _>(StandardNormal));
            StationData {
                id: id.clone(),
                xs,
                xt,
                y,
            }
        })
        .collect();
    Ok(SyntheticData {
        dataset: StationDataset::new(stations, ds, dt)?,
        network,
        planted: WeightMatrix::new(w, ds)?,
        coupling,
    })
}
