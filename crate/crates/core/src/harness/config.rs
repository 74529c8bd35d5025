use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::models::ModelSpec;
use super::synthetic::SyntheticSpec;
use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::pipegraph::PowerTriplet;

/// Files making up a real dataset. Relative paths resolve against the
/// directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    /// Directory holding one `<station_id>.csv` series file per station.
    pub series_dir: PathBuf,
    pub geo: PathBuf,
    pub pipes: PathBuf,
    /// `station_id,node_id` mapping; its order fixes the station order.
    pub stations: PathBuf,
}

impl DataPaths {
    fn resolve(&mut self, base: &Path) {
        for p in [&mut self.series_dir, &mut self.geo, &mut self.pipes, &mut self.stations] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingConfig {
    pub k: usize,
    pub triplet: [i32; 3],
    /// Scale `C` so its largest entry is 1.
    pub normalize: bool,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        let t = PowerTriplet::DEFAULT;
        Self {
            k: 3,
            triplet: [t.pow_d, t.pow_len, t.pow_age],
            normalize: true,
        }
    }
}

impl CouplingConfig {
    pub fn power_triplet(&self) -> Result<PowerTriplet> {
        let [d, l, a] = self.triplet;
        PowerTriplet::new(d, l, a).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Hyperparameter values searched on the validation slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub lambda: Vec<f64>,
    pub gamma: Vec<f64>,
    pub theta: Vec<f64>,
    /// Lasso penalty.
    pub alpha: Vec<f64>,
    /// Trailing share of the training rows held out for selection.
    pub validation_fraction: f64,
}

const LOG_GRID: [f64; 5] = [1e-3, 1e-2, 1e-1, 1.0, 10.0];

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            lambda: LOG_GRID.to_vec(),
            gamma: LOG_GRID.to_vec(),
            theta: LOG_GRID.to_vec(),
            alpha: LOG_GRID.to_vec(),
            validation_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub tol: f64,
    pub l0: f64,
    pub eta: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            tol: 1e-6,
            l0: 1.0,
            eta: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    Chronological,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_horizons")]
    pub horizons: Vec<u32>,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_split")]
    pub split: SplitMode,
    #[serde(default = "default_models")]
    pub models: Vec<String>,
    #[serde(default)]
    pub synthetic: Option<SyntheticSpec>,
    #[serde(default)]
    pub data: Option<DataPaths>,
    #[serde(default)]
    pub coupling: CouplingConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub features: FeatureConfig,
}

fn default_horizons() -> Vec<u32> {
    vec![1, 2, 3, 4]
}

fn default_train_fraction() -> f64 {
    0.7
}

fn default_split() -> SplitMode {
    SplitMode::Chronological
}

fn default_models() -> Vec<String> {
    ["stmtmv", "stmtmv-us", "stmtmv-ws", "stmtmv-sv", "ols", "lasso", "mrmtl", "decay"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

impl ExperimentConfig {
    /// The built-in planted synthetic experiment.
    pub fn synthetic_default(seed: u64) -> Self {
        Self {
            seed,
            horizons: default_horizons(),
            train_fraction: default_train_fraction(),
            split: default_split(),
            models: default_models(),
            synthetic: Some(SyntheticSpec::default()),
            data: None,
            coupling: CouplingConfig::default(),
            grid: GridConfig::default(),
            solver: SolverConfig::default(),
            features: FeatureConfig::default(),
        }
    }

    /// Parses TOML; `seed_override` replaces (or supplies) the seed.
    pub fn from_toml(text: &str, base_dir: &Path, seed_override: Option<u64>) -> Result<Self> {
        let mut value: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        if let Some(seed) = seed_override {
            let seed = i64::try_from(seed).map_err(|_| Error::Config("seed too large".into()))?;
            value.insert("seed".into(), toml::Value::Integer(seed));
        }
        if !value.contains_key("seed") {
            return Err(Error::Config("config must set a seed (or pass --seed)".into()));
        }
        let mut cfg: Self = value
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("config: {e}")))?;
        if let Some(data) = cfg.data.as_mut() {
            data.resolve(base_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml(&text, base, seed_override)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.horizons.is_empty() {
            return cfg("at least one horizon is required".into());
        }
        if let Some(h) = self.horizons.iter().find(|h| !(1..=4).contains(*h)) {
            return cfg(format!("horizon {h} outside 1..=4"));
        }
        let mut seen = self.horizons.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.horizons.len() {
            return cfg("horizons must be distinct".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return cfg(format!("train_fraction {} outside (0, 1)", self.train_fraction));
        }
        match (&self.synthetic, &self.data) {
            (Some(_), Some(_)) => return cfg("set either [synthetic] or [data], not both".into()),
            (None, None) => return cfg("config needs a [synthetic] or [data] section".into()),
            (Some(spec), None) => spec.validate().map_err(|e| Error::Config(e.to_string()))?,
            _ => {}
        }
        if self.models.is_empty() {
            return cfg("no models requested".into());
        }
        for m in &self.models {
            m.parse::<ModelSpec>()?;
        }
        if self.coupling.k == 0 {
            return cfg("coupling.k must be at least 1".into());
        }
        self.coupling.power_triplet()?;
        let g = &self.grid;
        for (name, values) in [("lambda", &g.lambda), ("gamma", &g.gamma), ("theta", &g.theta), ("alpha", &g.alpha)] {
            if values.is_empty() {
                return cfg(format!("grid.{name} is empty"));
            }
            if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return cfg(format!("grid.{name} values must be finite and >= 0"));
            }
        }
        if !(g.validation_fraction > 0.0 && g.validation_fraction < 1.0) {
            return cfg("grid.validation_fraction outside (0, 1)".into());
        }
        let s = &self.solver;
        if s.max_iters == 0 || !(s.tol > 0.0) || !(s.l0 > 0.0) || !(s.eta > 1.0) {
            return cfg("solver needs max_iters >= 1, tol > 0, l0 > 0, eta > 1".into());
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Models in config order.
    pub fn model_specs(&self) -> Result<Vec<ModelSpec>> {
        self.models.iter().map(|m| m.parse()).collect()
    }
}
