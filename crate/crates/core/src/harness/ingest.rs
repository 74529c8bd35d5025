//! Raw station CSVs to per-station view matrices.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, Timelike};
use nalgebra::{DMatrix, DVector};

use super::config::{CouplingConfig, DataPaths};
use crate::error::{Error, Result};
use crate::features::{
    build_spatial_view, build_temporal_view, FeatureConfig, GeoSummary, MeteoSnapshot, SensorWindows,
    TimeSeriesWindow,
};
use crate::pipegraph::{correlation_matrix, open_csv, parse_f64, read_pipe_network, PipeNetwork, TaskCoupling};
use crate::solver::{StationData, StationDataset};

pub const SERIES_HEADER: [&str; 11] = [
    "timestamp_iso8601",
    "rc_mgL",
    "turbidity_ntu",
    "ph",
    "flow_m3h",
    "pressure_kPa",
    "temp_C",
    "humidity_pct",
    "baro_hPa",
    "wind_ms",
    "weather_code",
];

/// Numeric columns of [`SERIES_HEADER`], i.e. all but timestamp and weather.
const NUMERIC: usize = 9;

#[derive(Debug, Clone, PartialEq)]
struct Reading {
    values: [Option<f64>; NUMERIC],
    weather: Option<String>,
}

/// One station's readings on a regular time grid; absent slots are `None`.
#[derive(Debug, Clone)]
pub struct StationSeries {
    pub id: String,
    pub start: NaiveDateTime,
    pub step_minutes: f64,
    slots: Vec<Option<Reading>>,
}

impl StationSeries {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn time(&self, slot: usize) -> NaiveDateTime {
        self.start + chrono::Duration::seconds((slot as f64 * self.step_minutes * 60.0).round() as i64)
    }

    fn slot_of(&self, t: NaiveDateTime) -> Option<usize> {
        let minutes = (t - self.start).num_seconds() as f64 / 60.0;
        let pos = minutes / self.step_minutes;
        let slot = pos.round();
        if slot < 0.0 || (pos - slot).abs() > 1e-6 || slot as usize >= self.slots.len() {
            return None;
        }
        Some(slot as usize)
    }

    fn value(&self, slot: usize, col: usize) -> Option<f64> {
        self.slots[slot].as_ref().and_then(|r| r.values[col])
    }

    fn rc_at(&self, t: NaiveDateTime) -> Option<f64> {
        self.slot_of(t).and_then(|s| self.value(s, 0))
    }
}

fn parse_time(raw: &str) -> Option<NaiveDateTime> {
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Some(t.naive_utc());
    }
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(raw, f).ok())
}

/// Reads a station series CSV. Empty cells are missing values. The sampling
/// step is the median spacing of the timestamps.
pub fn read_station_series(path: &Path, id: &str) -> Result<StationSeries> {
    let (mut rdr, cols) = open_csv(path, &SERIES_HEADER)?;
    let mut rows: Vec<(NaiveDateTime, Reading)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(path, line, e.to_string()))?;
        let field = |c: usize| rec.get(cols[c]).unwrap_or("");
        let t = parse_time(field(0)).ok_or_else(|| {
            Error::parse(path, line, format!("column `{}`: bad timestamp {:?}", SERIES_HEADER[0], field(0)))
        })?;
        if let Some((prev, _)) = rows.last() {
            if t <= *prev {
                return Err(Error::parse(path, line, "timestamps must be strictly increasing"));
            }
        }
        let mut values = [None; NUMERIC];
        for (k, v) in values.iter_mut().enumerate() {
            let raw = field(k + 1);
            if !raw.is_empty() {
                *v = Some(parse_f64(path, line, SERIES_HEADER[k + 1], raw)?);
            }
        }
        let w = field(10);
        rows.push((
            t,
            Reading {
                values,
                weather: (!w.is_empty()).then(|| w.to_string()),
            },
        ));
    }
    if rows.len() < 2 {
        return Err(Error::parse(path, 1, "need at least two rows"));
    }
    let mut gaps: Vec<i64> = rows.windows(2).map(|w| (w[1].0 - w[0].0).num_seconds()).collect();
    gaps.sort_unstable();
    let step_minutes = gaps[gaps.len() / 2] as f64 / 60.0;
    let start = rows[0].0;
    let last = ((rows.last().unwrap().0 - start).num_seconds() as f64 / 60.0 / step_minutes).round() as usize;
    let mut slots = vec![None; last + 1];
    for (t, r) in rows {
        let slot = ((t - start).num_seconds() as f64 / 60.0 / step_minutes).round() as usize;
        slots[slot] = Some(r);
    }
    Ok(StationSeries {
        id: id.to_string(),
        start,
        step_minutes,
        slots,
    })
}

pub fn geo_header(cfg: &FeatureConfig) -> Vec<String> {
    let mut h: Vec<String> = ["station_id", "road_len_km", "intersections", "poi_density"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=cfg.poi_categories).map(|i| format!("poi_c{i:02}")));
    h
}

pub fn read_geo(path: &Path, cfg: &FeatureConfig) -> Result<BTreeMap<String, GeoSummary>> {
    let header = geo_header(cfg);
    let refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let (mut rdr, cols) = open_csv(path, &refs)?;
    let mut out = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(path, line, e.to_string()))?;
        let field = |c: usize| rec.get(cols[c]).unwrap_or("");
        let count = |c: usize| {
            field(c).parse::<u32>().map_err(|_| {
                Error::parse(path, line, format!("column `{}`: expected a count, got {:?}", header[c], field(c)))
            })
        };
        let geo = GeoSummary {
            road_total_length: parse_f64(path, line, &header[1], field(1))?,
            road_intersections: count(2)?,
            poi_density: parse_f64(path, line, &header[3], field(3))?,
            poi_counts: (4..header.len()).map(count).collect::<Result<_>>()?,
        };
        geo.validate(cfg).map_err(|e| Error::parse(path, line, e.to_string()))?;
        if out.insert(field(0).to_string(), geo).is_some() {
            return Err(Error::parse(path, line, format!("duplicate station {}", field(0))));
        }
    }
    Ok(out)
}

/// Samples built for one forecast horizon.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub dataset: StationDataset,
    /// Last RC reading of each sample's window, per station.
    pub anchor_rc: Vec<Vec<f64>>,
    /// Window end time of each sample, per station.
    pub times: Vec<Vec<NaiveDateTime>>,
    pub step_minutes: f64,
    /// Candidate windows dropped for gaps or missing targets.
    pub skipped: usize,
    pub network: PipeNetwork,
    pub coupling: TaskCoupling,
}

fn steps_for(hours: f64, step_minutes: f64, what: &str) -> Result<usize> {
    let steps = hours * 60.0 / step_minutes;
    if (steps - steps.round()).abs() > 1e-6 || steps.round() < 1.0 {
        return Err(Error::invalid(format!(
            "{what} of {hours} h is not a whole number of {step_minutes}-minute steps"
        )));
    }
    Ok(steps.round() as usize)
}

/// Builds per-station view matrices for `horizon_hours`.
///
/// Every slot with a full window of history and an observed target
/// `horizon_hours` later yields one sample; windows with too many gaps are
/// skipped and counted. Samples stay in time order.
pub fn load_dataset(
    paths: &DataPaths,
    features: &FeatureConfig,
    coupling_cfg: &CouplingConfig,
    horizon_hours: u32,
) -> Result<LoadedData> {
    let network = read_pipe_network(&paths.pipes, &paths.stations)?;
    let ids = network.station_ids();
    if ids.is_empty() {
        return Err(Error::invalid("station map lists no stations"));
    }
    let coupling = if ids.len() >= 2 {
        correlation_matrix(&network, &ids, coupling_cfg.k, coupling_cfg.power_triplet()?, coupling_cfg.normalize)?
    } else {
        TaskCoupling::uncoupled(1)
    };
    let geo = read_geo(&paths.geo, features)?;
    let series = ids
        .iter()
        .map(|id| read_station_series(&paths.series_dir.join(format!("{id}.csv")), id))
        .collect::<Result<Vec<_>>>()?;
    let step = series[0].step_minutes;
    if let Some(s) = series.iter().find(|s| (s.step_minutes - step).abs() > 1e-9) {
        return Err(Error::invalid(format!(
            "station {} samples every {} min, others every {step} min",
            s.id, s.step_minutes
        )));
    }
    let window = steps_for(features.window_hours, step, "window")?;
    let shift = steps_for(horizon_hours as f64, step, "horizon")?;

    let (ds, dt) = (features.spatial_dim(), features.temporal_dim());
    let mut stations = Vec::with_capacity(ids.len());
    let mut anchor_rc = Vec::with_capacity(ids.len());
    let mut times = Vec::with_capacity(ids.len());
    let mut skipped = 0;
    for (l, s) in series.iter().enumerate() {
        let g = geo
            .get(&s.id)
            .ok_or_else(|| Error::invalid(format!("no geo summary for station {}", s.id)))?;
        let mut xs_rows = Vec::new();
        let mut xt_rows = Vec::new();
        let mut y = Vec::new();
        let mut rc_last = Vec::new();
        let mut t_rows = Vec::new();
        let row: Vec<f64> = coupling.similarity().row(l).iter().copied().collect();
        let end = s.len().saturating_sub(shift);
        for i in window.saturating_sub(1)..end {
            match sample_at(s, &series, l, &row, g, i, window, shift, features) {
                Some(Ok((xs, xt, target, rc))) => {
                    xs_rows.push(xs);
                    xt_rows.push(xt);
                    y.push(target);
                    rc_last.push(rc);
                    t_rows.push(s.time(i));
                }
                Some(Err(e)) => return Err(e),
                None => skipped += 1,
            }
        }
        if y.is_empty() {
            return Err(Error::invalid(format!(
                "station {} has no usable samples for horizon {horizon_hours} h",
                s.id
            )));
        }
        let n = y.len();
        stations.push(StationData {
            id: s.id.clone(),
            xs: DMatrix::from_fn(n, ds, |i, j| xs_rows[i][j]),
            xt: DMatrix::from_fn(n, dt, |i, j| xt_rows[i][j]),
            y: DVector::from_vec(y),
        });
        anchor_rc.push(rc_last);
        times.push(t_rows);
    }
    if skipped > 0 {
        eprintln!("warning: skipped {skipped} windows with gaps or missing targets (horizon {horizon_hours} h)");
    }
    Ok(LoadedData {
        dataset: StationDataset::new(stations, ds, dt)?,
        anchor_rc,
        times,
        step_minutes: step,
        skipped,
        network,
        coupling,
    })
}

type Sample = (Vec<f64>, Vec<f64>, f64, f64);

/// Features for the window ending at `slot`; `None` when the window cannot
/// be used.
#[allow(clippy::too_many_arguments)]
fn sample_at(
    s: &StationSeries,
    all: &[StationSeries],
    me: usize,
    coupling_row: &[f64],
    geo: &GeoSummary,
    slot: usize,
    window: usize,
    shift: usize,
    cfg: &FeatureConfig,
) -> Option<Result<Sample>> {
    let target = s.value(slot + shift, 0)?;
    let first = slot + 1 - window;
    let span = cfg.window_hours;
    let mut windows = Vec::with_capacity(5);
    for col in 0..5 {
        let raw: Vec<Option<f64>> = (first..=slot).map(|k| s.value(k, col)).collect();
        windows.push(TimeSeriesWindow::from_gappy(&raw, s.step_minutes, span).ok()?);
    }
    // Meteorology: most recent observation inside the window.
    let latest = |col: usize| (first..=slot).rev().find_map(|k| s.value(k, col));
    let weather = (first..=slot)
        .rev()
        .find_map(|k| s.slots[k].as_ref().and_then(|r| r.weather.clone()))?;
    let meteo = MeteoSnapshot {
        temperature: latest(5)?,
        humidity: latest(6)?,
        barometer: latest(7)?,
        wind_speed: latest(8)?,
        weather,
    };
    let t = s.time(slot);
    let hour = t.hour() as f64 + t.minute() as f64 / 60.0;
    let sensors = SensorWindows {
        rc: &windows[0],
        turbidity: &windows[1],
        ph: &windows[2],
        flow: &windows[3],
        pressure: &windows[4],
    };
    let temporal = match build_temporal_view(sensors, &meteo, hour, cfg) {
        Ok(v) => v,
        Err(e) => return Some(Err(e)),
    };
    let mut neighbor_rc = Vec::new();
    let mut weights = Vec::new();
    for (m, other) in all.iter().enumerate() {
        if m == me {
            continue;
        }
        match other.rc_at(t) {
            Some(v) => {
                neighbor_rc.push(v);
                weights.push(coupling_row[m]);
            }
            None => {
                neighbor_rc.push(0.0);
                weights.push(0.0);
            }
        }
    }
    let spatial = match build_spatial_view(geo, &neighbor_rc, &weights, cfg) {
        Ok(v) => v,
        Err(e) => return Some(Err(e)),
    };
    Some(Ok((spatial.values, temporal.values, target, windows[0].last())))
}
