//! Per-horizon fitting and scoring of every requested model.

use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDateTime;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::ingest::load_dataset;
use super::metrics::{accuracy, rmse};
use super::models::{FittedModel, ModelSpec, TrainingSet};
use super::synthetic::generate_synthetic;
use crate::error::{Error, Result};
use crate::pipegraph::TaskCoupling;
use crate::solver::StationDataset;

/// Rows reported as "n/a": comparison methods this crate does not implement.
pub const UNIMPLEMENTED: [&str; 4] = ["ARMA", "Kalman", "ANN", "regMVMT"];

/// Train/test data for one horizon.
#[derive(Debug, Clone)]
pub struct HorizonData {
    pub horizon_hours: u32,
    pub train: StationDataset,
    pub test: StationDataset,
    pub coupling: TaskCoupling,
    pub rc_train: Option<Vec<Vec<f64>>>,
    pub rc_test: Option<Vec<Vec<f64>>>,
    pub times_train: Option<Vec<Vec<NaiveDateTime>>>,
    pub times_test: Option<Vec<Vec<NaiveDateTime>>>,
    pub step_minutes: Option<f64>,
    pub skipped: usize,
}

impl HorizonData {
    pub fn training_set(&self) -> TrainingSet<'_> {
        TrainingSet {
            data: &self.train,
            coupling: &self.coupling,
            anchor_rc: self.rc_train.as_deref(),
            step_minutes: self.step_minutes,
            horizon_hours: self.horizon_hours,
        }
    }
}

/// Seed for the synthetic draw at horizon `h`.
pub fn horizon_seed(seed: u64, h: u32) -> u64 {
    seed ^ (h as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn split_rows<T: Clone>(rows: &[Vec<T>], train: &StationDataset) -> (Vec<Vec<T>>, Vec<Vec<T>>) {
    rows.iter()
        .zip(train.stations())
        .map(|(r, s)| (r[..s.n()].to_vec(), r[s.n()..].to_vec()))
        .unzip()
}

/// Loads (or draws) the data for one horizon and splits it chronologically.
pub fn prepare_horizon(cfg: &ExperimentConfig, h: u32) -> Result<HorizonData> {
    if let Some(spec) = &cfg.synthetic {
        let s = generate_synthetic(spec, horizon_seed(cfg.seed, h))?;
        let (train, test) = s.dataset.split(cfg.train_fraction)?;
        return Ok(HorizonData {
            horizon_hours: h,
            train,
            test,
            coupling: s.coupling,
            rc_train: None,
            rc_test: None,
            times_train: None,
            times_test: None,
            step_minutes: None,
            skipped: 0,
        });
    }
    let paths = cfg
        .data
        .as_ref()
        .ok_or_else(|| Error::Config("config has no data source".into()))?;
    let loaded = load_dataset(paths, &cfg.features, &cfg.coupling, h)?;
    let (train, test) = loaded.dataset.split(cfg.train_fraction)?;
    let (rc_train, rc_test) = split_rows(&loaded.anchor_rc, &train);
    let (t_train, t_test) = split_rows(&loaded.times, &train);
    Ok(HorizonData {
        horizon_hours: h,
        train,
        test,
        coupling: loaded.coupling,
        rc_train: Some(rc_train),
        rc_test: Some(rc_test),
        times_train: Some(t_train),
        times_test: Some(t_test),
        step_minutes: Some(loaded.step_minutes),
        skipped: loaded.skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Cell {
    Value(f64),
    NotApplicable,
    Failed,
}

impl Cell {
    pub fn value(self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(v),
            _ => None,
        }
    }

    fn render(self) -> String {
        match self {
            Cell::Value(v) => format!("{v:.6}"),
            Cell::NotApplicable => "n/a".into(),
            Cell::Failed => "error".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub model: String,
    /// One entry per horizon.
    pub rmse: Vec<Cell>,
    pub acc: Vec<Cell>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub model: String,
    pub horizon_hours: u32,
    pub hyperparameters: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultTable {
    pub horizons: Vec<u32>,
    pub rows: Vec<ResultRow>,
    pub config_hash: String,
    pub seed: u64,
    pub started_utc: String,
    pub finished_utc: String,
    pub selections: Vec<Selection>,
    /// Skipped windows per horizon.
    pub skipped: Vec<usize>,
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(cfg.to_toml().as_bytes());
    digest.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

struct CellOutcome {
    rmse: Cell,
    acc: Cell,
    note: Option<String>,
    selection: Option<Vec<(String, f64)>>,
}

fn evaluate(spec: ModelSpec, data: &HorizonData, cfg: &ExperimentConfig) -> CellOutcome {
    if spec == ModelSpec::Decay && data.rc_train.is_none() {
        return CellOutcome {
            rmse: Cell::NotApplicable,
            acc: Cell::NotApplicable,
            note: Some("needs raw RC series".into()),
            selection: None,
        };
    }
    let fitted = FittedModel::select(spec, &data.training_set(), &cfg.grid, &cfg.solver)
        .and_then(|m| m.predict(&data.test, data.rc_test.as_deref()).map(|p| (m, p)));
    match fitted {
        Ok((m, pred)) => {
            let y = data.test.targets();
            let r = rmse(&y, &pred);
            let a = accuracy(&y, &pred);
            let note = match (&r, &a) {
                (Err(e), _) | (_, Err(e)) => Some(format!("h{}: {e}", data.horizon_hours)),
                _ => None,
            };
            CellOutcome {
                rmse: r.map_or(Cell::Failed, Cell::Value),
                acc: a.map_or(Cell::Failed, Cell::Value),
                note,
                selection: Some(m.hyperparameters),
            }
        }
        Err(e) => CellOutcome {
            rmse: Cell::Failed,
            acc: Cell::Failed,
            note: Some(format!("h{}: {e}", data.horizon_hours)),
            selection: None,
        },
    }
}

/// Scores every configured model on already-prepared horizons.
pub fn score_models(cfg: &ExperimentConfig, horizons: &[HorizonData]) -> Result<(Vec<ResultRow>, Vec<Selection>)> {
    let specs = cfg.model_specs()?;
    let cells: Vec<(usize, usize)> = (0..specs.len())
        .flat_map(|m| (0..horizons.len()).map(move |h| (m, h)))
        .collect();
    let outcomes: Vec<CellOutcome> = cells
        .par_iter()
        .map(|&(m, h)| evaluate(specs[m], &horizons[h], cfg))
        .collect();

    let mut rows = Vec::new();
    let mut selections = Vec::new();
    for (m, spec) in specs.iter().enumerate() {
        let mine = &outcomes[m * horizons.len()..(m + 1) * horizons.len()];
        let notes: Vec<String> = mine.iter().filter_map(|o| o.note.clone()).collect();
        let mut notes = notes;
        notes.dedup();
        rows.push(ResultRow {
            model: spec.label().into(),
            rmse: mine.iter().map(|o| o.rmse).collect(),
            acc: mine.iter().map(|o| o.acc).collect(),
            note: notes.join("; "),
        });
        for (o, hd) in mine.iter().zip(horizons) {
            if let Some(h) = &o.selection {
                selections.push(Selection {
                    model: spec.key().into(),
                    horizon_hours: hd.horizon_hours,
                    hyperparameters: h.clone(),
                });
            }
        }
    }
    for name in UNIMPLEMENTED {
        rows.push(ResultRow {
            model: name.into(),
            rmse: vec![Cell::NotApplicable; horizons.len()],
            acc: vec![Cell::NotApplicable; horizons.len()],
            note: "not implemented".into(),
        });
    }
    Ok((rows, selections))
}

/// Fits every requested model at every horizon and scores it on the test
/// split. Model failures are recorded in their row; data problems abort.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let started = chrono::Utc::now();
    let horizons = cfg
        .horizons
        .iter()
        .map(|&h| prepare_horizon(cfg, h))
        .collect::<Result<Vec<_>>>()?;
    let (rows, selections) = score_models(cfg, &horizons)?;
    Ok(ResultTable {
        horizons: cfg.horizons.clone(),
        rows,
        config_hash: config_hash(cfg),
        seed: cfg.seed,
        started_utc: started.to_rfc3339(),
        finished_utc: chrono::Utc::now().to_rfc3339(),
        selections,
        skipped: horizons.iter().map(|h| h.skipped).collect(),
    })
}

impl ResultTable {
    pub fn row(&self, model: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.model == model)
    }

    fn header(&self) -> Vec<String> {
        let mut h = vec!["model".to_string()];
        h.extend(self.horizons.iter().map(|x| format!("rmse_{x}h")));
        h.extend(self.horizons.iter().map(|x| format!("acc_{x}h")));
        h.push("note".into());
        h
    }

    fn cells(&self, r: &ResultRow) -> Vec<String> {
        let mut out = vec![r.model.clone()];
        out.extend(r.rmse.iter().map(|c| c.render()));
        out.extend(r.acc.iter().map(|c| c.render()));
        out.push(r.note.clone());
        out
    }

    /// Wide CSV. Holds no timestamps, so a fixed seed reproduces it exactly.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header()).expect("in-memory write");
        for r in &self.rows {
            w.write_record(self.cells(r)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// Long format `model,horizon,metric,value` over numeric cells.
    pub fn to_long_csv(&self) -> String {
        let mut out = String::from("model,horizon,metric,value\n");
        for r in &self.rows {
            for (metric, cells) in [("rmse", &r.rmse), ("acc", &r.acc)] {
                for (h, c) in self.horizons.iter().zip(cells) {
                    if let Cell::Value(v) = c {
                        let _ = writeln!(out, "{},{h},{metric},{v:.6}", r.model);
                    }
                }
            }
        }
        out
    }

    /// Column-aligned text rendering.
    pub fn to_text(&self) -> String {
        let mut table = vec![self.header()];
        table.extend(self.rows.iter().map(|r| self.cells(r)));
        let cols = table[0].len();
        let widths: Vec<usize> = (0..cols)
            .map(|c| table.iter().map(|row| row[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &table {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (v, w))| if c == 0 || c == cols - 1 { format!("{v:<w$}") } else { format!("{v:>w$}") })
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }

    pub fn meta_json(&self) -> String {
        #[derive(Serialize)]
        struct Meta<'a> {
            seed: u64,
            config_hash: &'a str,
            started_utc: &'a str,
            finished_utc: &'a str,
            horizons: &'a [u32],
            skipped_windows: &'a [usize],
            selections: &'a [Selection],
        }
        serde_json::to_string_pretty(&Meta {
            seed: self.seed,
            config_hash: &self.config_hash,
            started_utc: &self.started_utc,
            finished_utc: &self.finished_utc,
            horizons: &self.horizons,
            skipped_windows: &self.skipped,
            selections: &self.selections,
        })
        .expect("metadata serializes")
    }

    /// Writes `results.csv`, `results.txt`, `results_long.csv` and
    /// `run_meta.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, body) in [
            ("results.csv", self.to_csv()),
            ("results.txt", self.to_text()),
            ("results_long.csv", self.to_long_csv()),
            ("run_meta.json", self.meta_json() + "\n"),
        ] {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}
