#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STATIONS: [&str; 3] = ["A1", "B2", "C3"];
pub const HOURS: usize = 48;
pub const WEATHER: [&str; 5] = ["clear", "cloudy", "overcast", "rain", "storm"];

/// Raw readings of one fixture station, column-major like the CSV.
pub struct RawSeries {
    pub times: Vec<String>,
    /// rc, turbidity, ph, flow, pressure, temp, humidity, baro, wind.
    pub columns: [Vec<f64>; 9],
    pub weather: Vec<&'static str>,
}

pub fn raw_series(station: usize) -> RawSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(900 + station as u64);
    let mut columns: [Vec<f64>; 9] = Default::default();
    let mut times = Vec::new();
    let mut weather = Vec::new();
    for h in 0..HOURS {
        times.push(format!("2024-03-{:02}T{:02}:00:00", 1 + h / 24, h % 24));
        let phase = 2.0 * std::f64::consts::PI * h as f64 / 24.0;
        let row = [
            0.6 + 0.1 * phase.sin() - 0.05 * station as f64 + rng.random_range(-0.02..0.02),
            0.3 + rng.random_range(0.0..0.2),
            7.2 + 0.1 * phase.cos() + rng.random_range(-0.05..0.05),
            120.0 + 30.0 * phase.sin() + rng.random_range(-5.0..5.0),
            310.0 + rng.random_range(-8.0..8.0),
            18.0 + 5.0 * phase.sin(),
            60.0 + rng.random_range(-10.0..10.0),
            1012.0 + rng.random_range(-2.0..2.0),
            rng.random_range(0.0..6.0),
        ];
        for (c, v) in columns.iter_mut().zip(row) {
            c.push(v);
        }
        weather.push(WEATHER[(h / 7 + station) % WEATHER.len()]);
    }
    RawSeries {
        times,
        columns,
        weather,
    }
}

pub const SERIES_HEADER: &str =
    "timestamp_iso8601,rc_mgL,turbidity_ntu,ph,flow_m3h,pressure_kPa,temp_C,humidity_pct,baro_hPa,wind_ms,weather_code";

pub fn series_csv(s: &RawSeries) -> String {
    let mut out = String::from(SERIES_HEADER);
    out.push('\n');
    for i in 0..s.times.len() {
        out.push_str(&s.times[i]);
        for c in &s.columns {
            write!(out, ",{}", c[i]).unwrap();
        }
        writeln!(out, ",{}", s.weather[i]).unwrap();
    }
    out
}

/// Geo row values: road length, intersections, density, 20 POI counts.
pub fn geo_row(station: usize) -> (f64, u32, f64, Vec<u32>) {
    let counts = (0..20).map(|c| ((c * 7 + station * 3) % 11) as u32).collect();
    (2.5 + station as f64, 10 + 4 * station as u32, 35.0 + 5.0 * station as f64, counts)
}

pub struct Fixture {
    pub dir: tempfile::TempDir,
}

impl Fixture {
    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn config(&self) -> PathBuf {
        self.dir.path().join("config.toml")
    }
}

/// Writes series, geo, pipe and station files plus `config.toml`.
pub fn write_fixture(extra_config: &str) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    fs::create_dir(root.join("series")).unwrap();
    for (i, id) in STATIONS.iter().enumerate() {
        fs::write(root.join("series").join(format!("{id}.csv")), series_csv(&raw_series(i))).unwrap();
    }
    let mut geo = String::from("station_id,road_len_km,intersections,poi_density");
    for c in 1..=20 {
        write!(geo, ",poi_c{c:02}").unwrap();
    }
    geo.push('\n');
    for (i, id) in STATIONS.iter().enumerate() {
        let (len, inter, dens, counts) = geo_row(i);
        write!(geo, "{id},{len},{inter},{dens}").unwrap();
        for c in counts {
            write!(geo, ",{c}").unwrap();
        }
        geo.push('\n');
    }
    fs::write(root.join("geo.csv"), geo).unwrap();
    fs::write(
        root.join("pipes.csv"),
        "node_a,node_b,length_km,diameter_mm,age_years\n\
         n1,n2,1.0,300,10\nn2,n3,2.0,200,20\nn1,n4,0.5,400,5\nn4,n3,1.5,250,15\nn3,n5,1.0,150,30\n",
    )
    .unwrap();
    fs::write(root.join("stations.csv"), "station_id,node_id\nA1,n1\nB2,n3\nC3,n5\n").unwrap();
    fs::write(
        root.join("config.toml"),
        format!(
            "seed = 7\nhorizons = [1, 2]\n{extra_config}\n[data]\nseries_dir = \"series\"\ngeo = \"geo.csv\"\npipes = \"pipes.csv\"\nstations = \"stations.csv\"\n"
        ),
    )
    .unwrap();
    Fixture { dir }
}
