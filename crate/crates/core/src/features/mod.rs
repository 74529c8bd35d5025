//! Temporal and spatial feature extraction.
//!
//! Every operation here is a pure function of its inputs. The temporal view
//! summarizes five sensor windows (RC, turbidity, pH, flow, pressure) with
//! moment, autocorrelation, piecewise, Fourier and Haar features, followed by
//! meteorology and a cyclic time-of-day encoding. The spatial view holds road
//! and POI summaries plus a coupling-weighted aggregate of neighbor RC.

mod spectral;
mod stats;
mod view;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use spectral::{dwt_topk, fft_topk, haar_details};
pub use stats::{autocorrelation, paa, pla, stat_features};
pub use view::{
    build_spatial_view, build_temporal_view, spatial_layout, temporal_layout, SensorWindows,
};

/// Maximum fraction of forward-filled samples tolerated in one window.
pub const MAX_MISSING_FRACTION: f64 = 0.2;

/// A uniformly sampled window of one sensor series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesWindow {
    values: Vec<f64>,
    step_minutes: f64,
    span_hours: f64,
}

impl TimeSeriesWindow {
    pub fn new(values: Vec<f64>, step_minutes: f64, span_hours: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("time series window is empty"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at position {i}")));
        }
        if !(step_minutes > 0.0 && step_minutes.is_finite()) {
            return Err(Error::invalid("sampling step must be positive"));
        }
        if !(span_hours > 0.0 && span_hours.is_finite()) {
            return Err(Error::invalid("window span must be positive"));
        }
        Ok(Self {
            values,
            step_minutes,
            span_hours,
        })
    }

    /// Hourly samples spanning `values.len()` hours.
    pub fn hourly(values: Vec<f64>) -> Result<Self> {
        let span = values.len().max(1) as f64;
        Self::new(values, 60.0, span)
    }

    /// Builds a window from samples with gaps. Gaps are forward-filled (a
    /// leading gap takes the first observed value); windows with more than
    /// [`MAX_MISSING_FRACTION`] missing are rejected.
    pub fn from_gappy(samples: &[Option<f64>], step_minutes: f64, span_hours: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("time series window is empty"));
        }
        let missing = samples.iter().filter(|s| s.is_none()).count();
        if missing as f64 > MAX_MISSING_FRACTION * samples.len() as f64 {
            return Err(Error::invalid(format!(
                "{missing} of {} samples missing",
                samples.len()
            )));
        }
        let first = samples
            .iter()
            .flatten()
            .copied()
            .next()
            .ok_or_else(|| Error::invalid("window has no observed samples"))?;
        let mut last = first;
        let values = samples
            .iter()
            .map(|s| {
                if let Some(v) = s {
                    last = *v;
                }
                last
            })
            .collect();
        Self::new(values, step_minutes, span_hours)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn step_minutes(&self) -> f64 {
        self.step_minutes
    }

    pub fn span_hours(&self) -> f64 {
        self.span_hours
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("window is non-empty")
    }
}

/// Point-in-time meteorology for one station.
#[derive(Debug, Clone, PartialEq)]
pub struct MeteoSnapshot {
    pub temperature: f64,
    pub humidity: f64,
    pub barometer: f64,
    pub wind_speed: f64,
    pub weather: String,
}

impl MeteoSnapshot {
    pub fn validate(&self, cfg: &FeatureConfig) -> Result<()> {
        for (name, v) in [
            ("temperature", self.temperature),
            ("humidity", self.humidity),
            ("barometer", self.barometer),
            ("wind_speed", self.wind_speed),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("meteo {name} is not finite")));
            }
        }
        if !(0.0..=100.0).contains(&self.humidity) {
            return Err(Error::invalid(format!(
                "humidity {} outside [0, 100]",
                self.humidity
            )));
        }
        if cfg.weather_index(&self.weather).is_none() {
            return Err(Error::invalid(format!(
                "weather code {:?} not in vocabulary",
                self.weather
            )));
        }
        Ok(())
    }
}

/// Precomputed road and POI summary of a station's surrounding region.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoSummary {
    /// Total road length in km.
    pub road_total_length: f64,
    /// Number of road intersections.
    pub road_intersections: u32,
    pub poi_counts: Vec<u32>,
    /// POIs per km².
    pub poi_density: f64,
}

impl GeoSummary {
    pub fn validate(&self, cfg: &FeatureConfig) -> Result<()> {
        if !(self.road_total_length >= 0.0 && self.road_total_length.is_finite()) {
            return Err(Error::invalid("road length must be finite and non-negative"));
        }
        if !(self.poi_density >= 0.0 && self.poi_density.is_finite()) {
            return Err(Error::invalid("POI density must be finite and non-negative"));
        }
        if self.poi_counts.len() != cfg.poi_categories {
            return Err(Error::invalid(format!(
                "expected {} POI categories, got {}",
                cfg.poi_categories,
                self.poi_counts.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub name: String,
    pub index: usize,
}

/// Feature values together with their named layout.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout: Vec<FeatureDescriptor>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.layout
            .iter()
            .find(|d| d.name == name)
            .map(|d| self.values[d.index])
    }
}

/// Renders a layout as `name,index` CSV with a header line.
pub fn layout_csv(layout: &[FeatureDescriptor]) -> String {
    let mut out = String::from("name,index\n");
    for d in layout {
        out.push_str(&format!("{},{}\n", d.name, d.index));
    }
    out
}

/// Granularity of the temporal recipe and the categorical vocabularies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub window_hours: f64,
    pub autocorr_lags: Vec<usize>,
    pub paa_segments: usize,
    pub pla_segments: usize,
    pub fft_top: usize,
    pub dwt_top: usize,
    pub weather_vocab: Vec<String>,
    pub poi_categories: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            window_hours: 12.0,
            autocorr_lags: vec![1, 2, 3],
            paa_segments: 4,
            pla_segments: 4,
            fft_top: 3,
            dwt_top: 3,
            weather_vocab: ["clear", "cloudy", "overcast", "rain", "storm"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            poi_categories: 20,
        }
    }
}

impl FeatureConfig {
    pub fn weather_index(&self, code: &str) -> Option<usize> {
        self.weather_vocab.iter().position(|w| w == code)
    }

    /// Features produced per sensor series.
    pub fn per_series_dim(&self) -> usize {
        6 + self.autocorr_lags.len()
            + self.paa_segments
            + 2 * self.pla_segments
            + self.fft_top
            + self.dwt_top
    }

    pub fn temporal_dim(&self) -> usize {
        SERIES_NAMES.len() * self.per_series_dim() + 4 + self.weather_vocab.len() + 2
    }

    pub fn spatial_dim(&self) -> usize {
        3 + self.poi_categories + 1
    }
}

/// Sensor series in temporal-view order.
pub const SERIES_NAMES: [&str; 5] = ["rc", "turbidity", "ph", "flow", "pressure"];
