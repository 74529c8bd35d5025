//! Experiment plumbing: ingestion, planted synthetic data, metrics, model
//! selection and result tables.

mod config;
mod experiment;
mod ingest;
mod metrics;
mod models;
mod synthetic;

pub use config::{CouplingConfig, DataPaths, ExperimentConfig, GridConfig, SolverConfig, SplitMode};
pub use experiment::{
    config_hash, horizon_seed, prepare_horizon, run_experiment, score_models, Cell, HorizonData, ResultRow,
    ResultTable, Selection, UNIMPLEMENTED,
};
pub use ingest::{geo_header, load_dataset, read_geo, read_station_series, LoadedData, StationSeries, SERIES_HEADER};
pub use metrics::{accuracy, rmse};
pub use models::{FittedModel, ModelBody, ModelSpec, TrainingSet, MODEL_FORMAT, MODEL_VERSION};
pub use synthetic::{generate_synthetic, SyntheticData, SyntheticSpec};
