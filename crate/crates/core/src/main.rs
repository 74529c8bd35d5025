use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;

use stmtmv::error::{Error, Result};
use stmtmv::features::{spatial_layout, temporal_layout, FeatureConfig};
use stmtmv::harness::{
    accuracy, generate_synthetic, load_dataset, prepare_horizon, rmse, run_experiment, ExperimentConfig,
    FittedModel, HorizonData, ModelSpec,
};
use stmtmv::pipegraph::{
    correlation_matrix, power_triplet_scan, read_matrix_csv, read_pipe_network, write_matrix_csv,
    write_pipe_network, PipeNetwork, PowerTriplet,
};
use stmtmv::solver::StationDataset;

#[derive(Parser)]
#[command(name = "stmtmv", version, about = "Multi-task multi-view regression for pipe-coupled stations")]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed; overrides the config and, alone, selects the built-in synthetic experiment.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a planted synthetic instance and write it to the output directory.
    Synth,
    /// Print the feature layout, or export feature matrices for the configured data.
    Features {
        #[arg(long)]
        describe: bool,
        #[arg(long, default_value_t = 1)]
        horizon: u32,
    },
    /// Station coupling matrix from the pipe network.
    Correlate {
        #[command(flatten)]
        net: NetworkArgs,
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Exponents for diameter, length and age, e.g. `2,-1,-1`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 3)]
        triplet: Option<Vec<i32>>,
        /// Keep raw path costs instead of scaling the largest entry to 1.
        #[arg(long)]
        raw: bool,
    },
    /// Rank all power triplets against an empirical station correlation matrix.
    ScanPowers {
        #[command(flatten)]
        net: NetworkArgs,
        /// Labelled matrix CSV (`station,<ids...>`).
        #[arg(long)]
        corr: PathBuf,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Select hyperparameters on the training split and save the model.
    Fit {
        #[arg(long, default_value = "stmtmv")]
        model: ModelSpec,
        #[arg(long, default_value_t = 1)]
        horizon: u32,
        /// Model file; defaults to `<out-dir>/<model>_<h>h.json`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Predict the test split with a saved model.
    Predict {
        #[arg(long)]
        model_file: PathBuf,
    },
    /// Score a saved model on the test split.
    Eval {
        #[arg(long)]
        model_file: PathBuf,
    },
    /// Run the full model-by-horizon experiment.
    Run,
}

#[derive(Args)]
struct NetworkArgs {
    #[arg(long, requires = "stations")]
    pipes: Option<PathBuf>,
    #[arg(long, requires = "pipes")]
    stations: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn config(cli: &Cli) -> Result<ExperimentConfig> {
    match (&cli.config, cli.seed) {
        (Some(path), seed) => ExperimentConfig::load(path, seed),
        (None, Some(seed)) => Ok(ExperimentConfig::synthetic_default(seed)),
        (None, None) => Err(Error::Config("pass --config or --seed".into())),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.into(), source: e })
}

fn write(path: &Path, body: String) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::Io { path: path.into(), source: e })
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth => synth(cli),
        Command::Features { describe, horizon } => {
            let features = match &cli.config {
                Some(_) => config(cli)?.features,
                None => FeatureConfig::default(),
            };
            if *describe {
                print!("{}", describe_layout(&features));
                Ok(())
            } else {
                export_features(cli, *horizon)
            }
        }
        Command::Correlate { net, k, triplet, raw } => {
            let network = network(cli, net)?;
            let t = match triplet {
                Some(v) => PowerTriplet::new(v[0], v[1], v[2])?,
                None => PowerTriplet::DEFAULT,
            };
            let ids = network.station_ids();
            let c = correlation_matrix(&network, &ids, *k, t, !raw)?;
            create_dir(&cli.out_dir)?;
            let path = cli.out_dir.join("coupling.csv");
            write_matrix_csv(&path, &ids, c.similarity())?;
            print!("{}", render_matrix(&ids, c.similarity()));
            Ok(())
        }
        Command::ScanPowers { net, corr, k, top } => {
            let network = network(cli, net)?;
            let (ids, mat) = read_matrix_csv(corr)?;
            let scores = power_triplet_scan(&network, &ids, &mat, *k)?;
            let mut out = String::from("rank,pow_d,pow_len,pow_age,score\n");
            for (i, s) in scores.iter().enumerate() {
                let t = s.triplet;
                out.push_str(&format!("{},{},{},{},{:.6}\n", i + 1, t.pow_d, t.pow_len, t.pow_age, s.score));
            }
            create_dir(&cli.out_dir)?;
            write(&cli.out_dir.join("power_scan.csv"), out.clone())?;
            for line in out.lines().take(top + 1) {
                println!("{line}");
            }
            Ok(())
        }
        Command::Fit { model, horizon, output } => {
            let cfg = config(cli)?;
            let hd = horizon_data(&cfg, *horizon)?;
            let fitted = FittedModel::select(*model, &hd.training_set(), &cfg.grid, &cfg.solver)?;
            let path = match output {
                Some(p) => p.clone(),
                None => {
                    create_dir(&cli.out_dir)?;
                    cli.out_dir.join(format!("{}_{horizon}h.json", model.key()))
                }
            };
            fitted.save(&path)?;
            let hyper: Vec<String> = fitted.hyperparameters.iter().map(|(n, v)| format!("{n}={v}")).collect();
            println!("{} {}h [{}] -> {}", model.label(), horizon, hyper.join(" "), path.display());
            Ok(())
        }
        Command::Predict { model_file } => {
            let cfg = config(cli)?;
            let m = FittedModel::load(model_file)?;
            let hd = horizon_data(&cfg, m.horizon_hours)?;
            let pred = m.predict(&hd.test, hd.rc_test.as_deref())?;
            let mut out = String::from("station,index,prediction,target\n");
            for (s, p) in hd.test.stations().iter().zip(&pred) {
                for i in 0..s.n() {
                    out.push_str(&format!("{},{},{},{}\n", s.id, i, p[i], s.y[i]));
                }
            }
            create_dir(&cli.out_dir)?;
            let path = cli.out_dir.join("predictions.csv");
            write(&path, out)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Eval { model_file } => {
            let cfg = config(cli)?;
            let m = FittedModel::load(model_file)?;
            let hd = horizon_data(&cfg, m.horizon_hours)?;
            let pred = m.predict(&hd.test, hd.rc_test.as_deref())?;
            let y = hd.test.targets();
            println!(
                "{} {}h rmse={:.6} acc={:.6}",
                m.model.label(),
                m.horizon_hours,
                rmse(&y, &pred)?,
                accuracy(&y, &pred)?
            );
            Ok(())
        }
        Command::Run => {
            let cfg = config(cli)?;
            let table = run_experiment(&cfg)?;
            table.write_to(&cli.out_dir)?;
            print!("{}", table.to_text());
            Ok(())
        }
    }
}

fn horizon_data(cfg: &ExperimentConfig, h: u32) -> Result<HorizonData> {
    if !(1..=4).contains(&h) {
        return Err(Error::Config(format!("horizon {h} outside 1..=4")));
    }
    prepare_horizon(cfg, h)
}

fn network(cli: &Cli, net: &NetworkArgs) -> Result<PipeNetwork> {
    if let (Some(p), Some(s)) = (&net.pipes, &net.stations) {
        return read_pipe_network(p, s);
    }
    let cfg = config(cli)?;
    match (&cfg.data, &cfg.synthetic) {
        (Some(d), _) => read_pipe_network(&d.pipes, &d.stations),
        (None, Some(spec)) => Ok(generate_synthetic(spec, cfg.seed)?.network),
        (None, None) => Err(Error::Config("no pipe network configured".into())),
    }
}

fn describe_layout(cfg: &FeatureConfig) -> String {
    let mut out = String::from("view,index,name\n");
    for (view, layout) in [("spatial", spatial_layout(cfg)), ("temporal", temporal_layout(cfg))] {
        for d in layout {
            out.push_str(&format!("{view},{},{}\n", d.index, d.name));
        }
    }
    out
}

fn render_matrix(labels: &[String], m: &DMatrix<f64>) -> String {
    let width = labels.iter().map(|l| l.len()).max().unwrap_or(0).max(8);
    let mut out = format!("{:width$}", "");
    for l in labels {
        out.push_str(&format!(" {l:>width$}"));
    }
    out.push('\n');
    for (i, l) in labels.iter().enumerate() {
        out.push_str(&format!("{l:width$}"));
        for j in 0..m.ncols() {
            out.push_str(&format!(" {:>width$.4}", m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

/// One CSV per station: feature columns then the target.
fn write_station_tables(dir: &Path, data: &StationDataset, names: &[String], times: Option<&[Vec<String>]>) -> Result<()> {
    for (l, s) in data.stations().iter().enumerate() {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = Vec::new();
        if times.is_some() {
            header.push("timestamp");
        }
        header.extend(names.iter().map(String::as_str));
        header.push("target");
        w.write_record(&header).expect("in-memory write");
        let x = s.x();
        for i in 0..s.n() {
            let mut rec: Vec<String> = Vec::with_capacity(header.len());
            if let Some(t) = times {
                rec.push(t[l][i].clone());
            }
            rec.extend(x.row(i).iter().map(|v| v.to_string()));
            rec.push(s.y[i].to_string());
            w.write_record(&rec).expect("in-memory write");
        }
        let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv");
        write(&dir.join(format!("features_{}.csv", s.id)), body)?;
    }
    Ok(())
}

fn synth(cli: &Cli) -> Result<()> {
    let cfg = config(cli)?;
    let spec = cfg
        .synthetic
        .as_ref()
        .ok_or_else(|| Error::Config("synth needs a [synthetic] config".into()))?;
    let s = generate_synthetic(spec, cfg.seed)?;
    let dir = &cli.out_dir;
    create_dir(dir)?;
    write_pipe_network(&s.network, &dir.join("pipes.csv"), &dir.join("stations.csv"))?;
    let ids = s.dataset.ids();
    write_matrix_csv(&dir.join("coupling.csv"), &ids, s.coupling.similarity())?;
    let names: Vec<String> = (0..spec.ds)
        .map(|j| format!("xs_{j:02}"))
        .chain((0..spec.dt).map(|j| format!("xt_{j:02}")))
        .collect();
    let w = s.planted.matrix();
    let mut planted = String::from("feature");
    for id in &ids {
        planted.push_str(&format!(",{id}"));
    }
    planted.push('\n');
    for (i, name) in names.iter().enumerate() {
        planted.push_str(name);
        for l in 0..w.ncols() {
            planted.push_str(&format!(",{}", w[(i, l)]));
        }
        planted.push('\n');
    }
    write(&dir.join("planted_w.csv"), planted)?;
    write_station_tables(dir, &s.dataset, &names, None)?;
    println!(
        "{} stations, {} samples each, {} active rows -> {}",
        ids.len(),
        spec.samples,
        s.planted.matrix().nrows() - s.planted.zero_rows().len(),
        dir.display()
    );
    Ok(())
}

fn export_features(cli: &Cli, horizon: u32) -> Result<()> {
    let cfg = config(cli)?;
    let paths = cfg
        .data
        .as_ref()
        .ok_or_else(|| Error::Config("features without --describe needs a [data] config".into()))?;
    if !(1..=4).contains(&horizon) {
        return Err(Error::Config(format!("horizon {horizon} outside 1..=4")));
    }
    let loaded = load_dataset(paths, &cfg.features, &cfg.coupling, horizon)?;
    let names: Vec<String> = spatial_layout(&cfg.features)
        .into_iter()
        .chain(temporal_layout(&cfg.features))
        .map(|d| d.name)
        .collect();
    let times: Vec<Vec<String>> = loaded
        .times
        .iter()
        .map(|ts| ts.iter().map(|t| t.format("%Y-%m-%dT%H:%M:%S").to_string()).collect())
        .collect();
    create_dir(&cli.out_dir)?;
    write_station_tables(&cli.out_dir, &loaded.dataset, &names, Some(&times))?;
    println!(
        "{} stations, {} samples, {} windows skipped -> {}",
        loaded.dataset.m(),
        loaded.dataset.total_samples(),
        loaded.skipped,
        cli.out_dir.display()
    );
    Ok(())
}
