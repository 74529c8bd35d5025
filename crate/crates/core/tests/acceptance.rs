//! Acceptance checks. Prints one PASS/FAIL line per criterion.
//!
//! Exits non-zero on a failure only when `ACCEPTANCE_STRICT` is set, so the
//! workspace test run reports the lines without aborting; see README.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use stmtmv::harness::{generate_synthetic, prepare_horizon, score_models, ExperimentConfig, SyntheticSpec};
use stmtmv::pipegraph::{
    correlation_matrix, power_triplet_scan, station_correlation, PipeNetwork, PipeSegment, PowerTriplet,
    TaskCoupling, WeightedGraph,
};
use stmtmv::solver::{
    fista_fit, grad_smooth, group_l21_norm, objective, prox_group_l21, FistaOptions, SolverParams, StMtmvProblem,
    StationData, StationDataset,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn random_instance(rng: &mut ChaCha8Rng, m: usize, ds: usize, dt: usize, n: usize) -> (StationDataset, TaskCoupling) {
    let stations = (0..m)
        .map(|l| StationData {
            id: format!("S{l}"),
            xs: DMatrix::from_fn(n, ds, |_, _| normal(rng)),
            xt: DMatrix::from_fn(n, dt, |_, _| normal(rng)),
            y: DVector::from_fn(n, |_, _| normal(rng)),
        })
        .collect();
    (
        StationDataset::new(stations, ds, dt).unwrap(),
        TaskCoupling::from_similarity(random_similarity(rng, m), 1).unwrap(),
    )
}

fn random_similarity(rng: &mut ChaCha8Rng, m: usize) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let v = rng.random_range(0.0..2.0);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    c
}

// 1 -------------------------------------------------------------------------

fn worked_example() -> Outcome {
    // Weight equals length under (0, 1, 0).
    let pipe = |a: &str, b: &str, len: f64| PipeSegment::new(a, b, len, 1.0, 1.0);
    let segs = vec![
        pipe("s1", "a", 2.0),
        pipe("a", "s2", 1.0),
        pipe("s1", "b", 1.0),
        pipe("b", "c", 2.0),
        pipe("c", "s2", 1.0),
        pipe("s1", "d", 2.0),
        pipe("d", "e", 2.0),
        pipe("e", "s2", 2.0),
    ];
    let g = PipeNetwork::new(segs, [], vec![("S1".into(), "s1".into()), ("S2".into(), "s2".into())]).unwrap();
    let t = PowerTriplet::new(0, 1, 0).unwrap();
    let k1 = station_correlation(&g, "S1", "S2", 1, t).unwrap();
    let k3 = station_correlation(&g, "S1", "S2", 3, t).unwrap();
    let pass = (k1 - 3.0).abs() <= 1e-12 && (k3 - 13.0 / 3.0).abs() <= 1e-12;
    outcome(pass, format!("k=1 -> {k1}, k=3 -> {k3}"))
}

// 2 -------------------------------------------------------------------------

/// Minimizes `½‖x − b‖² + β‖x‖` over all of ℝᵐ by damped Newton, compared
/// against the non-smooth candidate `x = 0`.
fn prox_row_numeric(b: &DVector<f64>, beta: f64) -> DVector<f64> {
    let f = |x: &DVector<f64>| 0.5 * (x - b).norm_squared() + beta * x.norm();
    let m = b.len();
    let mut x = b.clone();
    for _ in 0..200 {
        let r = x.norm();
        if r < 1e-300 {
            break;
        }
        let g = &x - b + &x * (beta / r);
        if g.norm() < 1e-15 {
            break;
        }
        let hess = DMatrix::identity(m, m) * (1.0 + beta / r) - (&x * x.transpose()) * (beta / (r * r * r));
        let step = hess.lu().solve(&g).unwrap();
        let mut t = 1.0;
        let fx = f(&x);
        while t > 1e-12 && f(&(&x - &step * t)) > fx {
            t *= 0.5;
        }
        if t <= 1e-12 {
            break;
        }
        x -= step * t;
    }
    let zero = DVector::zeros(m);
    if f(&zero) <= f(&x) {
        zero
    } else {
        x
    }
}

fn prox_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let m = 5;
    let b = DMatrix::from_fn(100, m, |_, _| 2.0 * normal(&mut rng));
    let mut worst: f64 = 0.0;
    let mut zeros = 0;
    for beta in [0.5, 2.0, 4.0] {
        let p = prox_group_l21(&b, beta);
        for i in 0..b.nrows() {
            let row: DVector<f64> = b.row(i).transpose();
            let want = prox_row_numeric(&row, beta);
            zeros += (want.norm() == 0.0) as usize;
            worst = worst.max((p.row(i).transpose() - want).amax());
        }
    }
    outcome(worst <= 1e-8, format!("max abs deviation {worst:.2e} over 300 rows ({zeros} zero)"))
}

// 3 -------------------------------------------------------------------------

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let m = rng.random_range(1..=4);
        let ds = rng.random_range(1..=6);
        let dt = rng.random_range(1..=6);
        let n = rng.random_range(2..=30);
        let (data, coupling) = random_instance(&mut rng, m, ds, dt, n);
        let p = SolverParams::with_weights(
            rng.random_range(0.0..2.0),
            rng.random_range(0.0..2.0),
            rng.random_range(0.0..2.0),
        );
        let smooth = |w: &DMatrix<f64>| objective(w, &data, &coupling, &p).unwrap() - p.theta * group_l21_norm(w);
        let w = DMatrix::from_fn(ds + dt, m, |_, _| normal(&mut rng));
        let g = grad_smooth(&w, &data, &coupling, &p).unwrap();
        let h = 1e-6;
        let fd = DMatrix::from_fn(ds + dt, m, |i, l| {
            let mut up = w.clone();
            let mut dn = w.clone();
            up[(i, l)] += h;
            dn[(i, l)] -= h;
            (smooth(&up) - smooth(&dn)) / (2.0 * h)
        });
        worst = worst.max((&g - &fd).norm() / g.norm().max(1e-12));
    }
    outcome(worst < 1e-5, format!("max relative error {worst:.2e}"))
}

// 4 -------------------------------------------------------------------------

fn fista_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (data, coupling) = random_instance(&mut rng, 1, 3, 3, 80);
    let p = SolverParams {
        max_iters: 20_000,
        tol: 1e-15,
        ..SolverParams::with_weights(0.0, 0.0, 0.0)
    };
    let fit = fista_fit(&data, &coupling, &p).unwrap();
    let s = data.station(0);
    let x = s.x();
    let closed = (x.transpose() * &x).try_inverse().unwrap() * x.transpose() * &s.y * 2.0;
    let rmse = ((fit.weights.column(0) - &closed).norm_squared() / closed.len() as f64).sqrt();
    outcome(rmse < 1e-6, format!("rmse {rmse:.2e} after {} iterations", fit.iterations))
}

// 5 -------------------------------------------------------------------------

type Path = (Vec<usize>, Vec<usize>);

fn all_loopless(g: &WeightedGraph, src: usize, dst: usize) -> Vec<(f64, Vec<usize>, Vec<usize>)> {
    fn walk(
        g: &WeightedGraph,
        at: usize,
        dst: usize,
        nodes: &mut Vec<usize>,
        edges: &mut Vec<usize>,
        out: &mut Vec<(f64, Vec<usize>, Vec<usize>)>,
    ) {
        if at == dst {
            out.push((g.path_cost(edges), nodes.clone(), edges.clone()));
            return;
        }
        for e in 0..g.edge_count() {
            let (a, b, _) = g.edge(e);
            let next = match (a == at, b == at) {
                (true, false) => b,
                (false, true) => a,
                _ => continue,
            };
            if nodes.contains(&next) {
                continue;
            }
            nodes.push(next);
            edges.push(e);
            walk(g, next, dst, nodes, edges, out);
            nodes.pop();
            edges.pop();
        }
    }
    let mut out = Vec::new();
    walk(g, src, dst, &mut vec![src], &mut Vec::new(), &mut out);
    out.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| x.1.cmp(&y.1)).then_with(|| x.2.cmp(&y.2)));
    out
}

fn ksp_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut compared = 0;
    for case in 0..50 {
        let n = rng.random_range(2..=8);
        let edge_count = rng.random_range(n - 1..=3 * n);
        // Small integer weights force many exact ties.
        let edges = (0..edge_count)
            .map(|_| (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(1..=4) as f64))
            .collect();
        let g = WeightedGraph::new(n, edges).unwrap();
        let (src, dst) = (rng.random_range(0..n), rng.random_range(0..n));
        if src == dst {
            continue;
        }
        let brute = all_loopless(&g, src, dst);
        for k in 1..=5 {
            let got: Vec<Path> = g
                .k_shortest_paths(src, dst, k)
                .unwrap()
                .into_iter()
                .map(|p| (p.nodes, p.edges))
                .collect();
            let want: Vec<Path> = brute.iter().take(k).map(|p| (p.1.clone(), p.2.clone())).collect();
            if got != want {
                return outcome(false, format!("graph {case}, k={k}: {got:?} vs {want:?}"));
            }
            compared += 1;
        }
    }
    outcome(true, format!("{compared} (graph, k) path sets identical"))
}

// 6 -------------------------------------------------------------------------

fn laplacian_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst_gap, mut min_eig) = (0.0f64, f64::INFINITY);
    for _ in 0..20 {
        let m = rng.random_range(2..=8);
        let d = rng.random_range(1..=12);
        let tc = TaskCoupling::from_similarity(random_similarity(&mut rng, m), 1).unwrap();
        let w = DMatrix::from_fn(d, m, |_, _| normal(&mut rng));
        let trace = (&w * tc.laplacian() * w.transpose()).trace();
        let mut pairwise = 0.0;
        for l in 0..m {
            for j in 0..m {
                pairwise += 0.5 * tc.similarity()[(l, j)] * (w.column(l) - w.column(j)).norm_squared();
            }
        }
        worst_gap = worst_gap.max((trace - pairwise).abs()).max((tc.trace_penalty(&w) - pairwise).abs());
        min_eig = min_eig.min(SymmetricEigen::new(tc.laplacian().clone()).eigenvalues.min());
    }
    outcome(
        worst_gap <= 1e-10 && min_eig >= -1e-10,
        format!("max gap {worst_gap:.2e}, min eigenvalue {min_eig:.2e}"),
    )
}

// 7 -------------------------------------------------------------------------

fn planted_recovery() -> Outcome {
    let sigma = SyntheticSpec::default().sigma;
    let mut wins = [0usize; 6];
    let names = ["<=1.5σ", "<=LR", "<=LASSO", "<=us", "<=ws", "<=sv"];
    let mut lines = Vec::new();
    for seed in 1..=5 {
        let mut cfg = ExperimentConfig::synthetic_default(seed);
        cfg.horizons = vec![1];
        cfg.models = ["stmtmv", "stmtmv-us", "stmtmv-ws", "stmtmv-sv", "ols", "lasso"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let hd = prepare_horizon(&cfg, 1).unwrap();
        let (rows, _) = score_models(&cfg, &[hd]).unwrap();
        let r = |label: &str| {
            rows.iter()
                .find(|r| r.model == label)
                .and_then(|r| r.rmse[0].value())
                .unwrap_or(f64::INFINITY)
        };
        let full = r("stMTMV");
        let others = [r("LR"), r("LASSO"), r("stMTMV-us"), r("stMTMV-ws"), r("stMTMV-sv")];
        wins[0] += (full <= 1.5 * sigma) as usize;
        for (w, o) in wins[1..].iter_mut().zip(others) {
            *w += (full <= o) as usize;
        }
        lines.push(format!(
            "seed {seed}: full {full:.6} LR {:.6} LASSO {:.6} us {:.6} ws {:.6} sv {:.6}",
            others[0], others[1], others[2], others[3], others[4]
        ));
    }
    let summary: Vec<String> = names.iter().zip(wins).map(|(n, w)| format!("{n} {w}/5")).collect();
    outcome(
        wins.iter().all(|&w| w >= 4),
        format!("{}\n    {}", summary.join(", "), lines.join("\n    ")),
    )
}

// 8 -------------------------------------------------------------------------

fn triplet_scan() -> Outcome {
    let synth = generate_synthetic(&SyntheticSpec::default(), 8).unwrap();
    let net = synth.network;
    let ids = net.station_ids();
    let planted = PowerTriplet::new(-1, 2, 1).unwrap();
    let corr = correlation_matrix(&net, &ids, 3, planted, false).unwrap();
    let scores = power_triplet_scan(&net, &ids, corr.similarity(), 3).unwrap();
    let top = scores[0];
    let pass = ids.len() == 6 && scores.len() == 1331 && top.triplet == planted && (top.score - 1.0).abs() <= 1e-9;
    outcome(
        pass,
        format!(
            "{} stations, rank 1 = ({}, {}, {}) score {:.12}",
            ids.len(),
            top.triplet.pow_d,
            top.triplet.pow_len,
            top.triplet.pow_age,
            top.score
        ),
    )
}

// 9 -------------------------------------------------------------------------

fn sparsity_monotone() -> Outcome {
    let synth = generate_synthetic(&SyntheticSpec::default(), 9).unwrap();
    let counts: Vec<usize> = [0.0, 0.1, 1.0, 10.0, 100.0]
        .iter()
        .map(|&theta| {
            let p = SolverParams::with_weights(0.1, 0.1, theta);
            fista_fit(&synth.dataset, &synth.coupling, &p).unwrap().weights.zero_rows().len()
        })
        .collect();
    outcome(counts.windows(2).all(|w| w[0] <= w[1]), format!("zero rows {counts:?}"))
}

// 10 ------------------------------------------------------------------------

fn iteration_seconds(n: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (data, coupling) = random_instance(&mut rng, 4, 20, 20, n);
    let problem = StMtmvProblem::new(&data, &coupling, &SolverParams::with_weights(0.1, 0.1, 0.1)).unwrap();
    let opts = FistaOptions {
        max_iters: 300,
        tol: 1e-300,
        ..FistaOptions::default()
    };
    let mut best = f64::INFINITY;
    for _ in 0..5 {
        let t = Instant::now();
        let report = problem.solve(&opts).unwrap();
        best = best.min(t.elapsed().as_secs_f64() / report.iterations as f64);
    }
    best
}

fn complexity() -> Outcome {
    let small = iteration_seconds(100);
    let large = iteration_seconds(10_000);
    let ratio = small.max(large) / small.min(large);
    outcome(
        ratio < 2.0,
        format!("{:.1} µs vs {:.1} µs per iteration, ratio {ratio:.2}", small * 1e6, large * 1e6),
    )
}

// 11 ------------------------------------------------------------------------

fn determinism() -> Outcome {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let status = Command::new(env!("CARGO_BIN_EXE_stmtmv"))
            .args(["run", "--seed", "42", "--out-dir"])
            .arg(dir.path())
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        std::fs::read(dir.path().join("results.csv")).unwrap()
    };
    let (a, b) = (run(), run());
    outcome(a == b && !a.is_empty(), format!("{} bytes, identical: {}", a.len(), a == b))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, u64); 11] = [
        ("worked example", worked_example, 1),
        ("prox oracle", prox_oracle, 5),
        ("gradient check", gradient_check, 30),
        ("FISTA reduction", fista_reduction, 5),
        ("k-shortest-path oracle", ksp_oracle, 30),
        ("Laplacian identity", laplacian_identity, 30),
        ("planted recovery", planted_recovery, 120),
        ("power-triplet scan", triplet_scan, 60),
        ("sparsity monotonicity", sparsity_monotone, 60),
        ("complexity contract", complexity, 120),
        ("determinism", determinism, 300),
    ];
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let took = t.elapsed();
        let in_time = took <= Duration::from_secs(*limit);
        let pass = result.pass && in_time;
        failed += (!pass) as usize;
        println!(
            "criterion {:>2} {:<24} {} ({:.2} s{}) {}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            if in_time { String::new() } else { format!(" > {limit} s") },
            result.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
