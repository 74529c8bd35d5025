use std::f64::consts::PI;

use super::{
    autocorrelation, dwt_topk, fft_topk, paa, pla, stat_features, FeatureConfig,
    FeatureDescriptor, FeatureVector, GeoSummary, MeteoSnapshot, TimeSeriesWindow, SERIES_NAMES,
};
use crate::error::{Error, Result};

const STAT_NAMES: [&str; 6] = ["mean", "var", "max", "min", "skew", "kurt"];
const METEO_NAMES: [&str; 4] = ["temperature", "humidity", "barometer", "wind_speed"];

fn describe(names: Vec<String>) -> Vec<FeatureDescriptor> {
    names
        .into_iter()
        .enumerate()
        .map(|(index, name)| FeatureDescriptor { name, index })
        .collect()
}

/// Temporal-view layout. Per series (RC, turbidity, pH, flow, pressure):
/// moments, autocorrelations, PAA means, PLA slope/intercept pairs, FFT and
/// DWT magnitudes. Then meteorology, weather one-hot, time-of-day sin/cos.
pub fn temporal_layout(cfg: &FeatureConfig) -> Vec<FeatureDescriptor> {
    let mut names = Vec::with_capacity(cfg.temporal_dim());
    for s in SERIES_NAMES {
        names.extend(STAT_NAMES.iter().map(|n| format!("{s}.{n}")));
        names.extend(cfg.autocorr_lags.iter().map(|l| format!("{s}.acf{l}")));
        names.extend((0..cfg.paa_segments).map(|j| format!("{s}.paa{j}")));
        for j in 0..cfg.pla_segments {
            names.push(format!("{s}.pla{j}.slope"));
            names.push(format!("{s}.pla{j}.intercept"));
        }
        names.extend((0..cfg.fft_top).map(|j| format!("{s}.fft{j}")));
        names.extend((0..cfg.dwt_top).map(|j| format!("{s}.dwt{j}")));
    }
    names.extend(METEO_NAMES.iter().map(|n| format!("meteo.{n}")));
    names.extend(cfg.weather_vocab.iter().map(|w| format!("weather.{w}")));
    names.push("time.sin".into());
    names.push("time.cos".into());
    describe(names)
}

/// Spatial-view layout: road length, intersections, POI density, per-category
/// POI counts, coupling-weighted neighbor RC.
pub fn spatial_layout(cfg: &FeatureConfig) -> Vec<FeatureDescriptor> {
    let mut names = vec![
        "road.length_km".to_string(),
        "road.intersections".to_string(),
        "poi.density".to_string(),
    ];
    names.extend((1..=cfg.poi_categories).map(|c| format!("poi.c{c:02}")));
    names.push("neighbor.rc".into());
    describe(names)
}

fn series_features(w: &TimeSeriesWindow, cfg: &FeatureConfig, out: &mut Vec<f64>) -> Result<()> {
    out.extend(stat_features(w));
    for &lag in &cfg.autocorr_lags {
        out.push(autocorrelation(w, lag)?);
    }
    out.extend(paa(w, cfg.paa_segments)?);
    out.extend(pla(w, cfg.pla_segments)?);
    if w.len() < 2 {
        return Err(Error::invalid("spectral features need at least 2 samples"));
    }
    out.extend(fft_topk(w, cfg.fft_top));
    out.extend(dwt_topk(w, cfg.dwt_top));
    Ok(())
}

/// The five sensor windows feeding the temporal view, in layout order.
#[derive(Debug, Clone, Copy)]
pub struct SensorWindows<'a> {
    pub rc: &'a TimeSeriesWindow,
    pub turbidity: &'a TimeSeriesWindow,
    pub ph: &'a TimeSeriesWindow,
    pub flow: &'a TimeSeriesWindow,
    pub pressure: &'a TimeSeriesWindow,
}

impl<'a> SensorWindows<'a> {
    pub fn as_array(&self) -> [&'a TimeSeriesWindow; 5] {
        [self.rc, self.turbidity, self.ph, self.flow, self.pressure]
    }
}

pub fn build_temporal_view(
    windows: SensorWindows<'_>,
    meteo: &MeteoSnapshot,
    hour_of_day: f64,
    cfg: &FeatureConfig,
) -> Result<FeatureVector> {
    let series = windows.as_array();
    let (span, len) = (series[0].span_hours(), series[0].len());
    for (name, w) in SERIES_NAMES.iter().zip(series) {
        if (w.span_hours() - span).abs() > 1e-9 || w.len() != len {
            return Err(Error::invalid(format!(
                "{name} window covers {} h / {} samples, expected {span} h / {len}",
                w.span_hours(),
                w.len()
            )));
        }
    }
    if !(0.0..24.0).contains(&hour_of_day) {
        return Err(Error::invalid(format!("hour of day {hour_of_day} outside [0, 24)")));
    }
    meteo.validate(cfg)?;

    let mut values = Vec::with_capacity(cfg.temporal_dim());
    for w in series {
        series_features(w, cfg, &mut values)?;
    }
    values.extend([meteo.temperature, meteo.humidity, meteo.barometer, meteo.wind_speed]);
    let hot = cfg.weather_index(&meteo.weather).expect("validated");
    values.extend((0..cfg.weather_vocab.len()).map(|i| if i == hot { 1.0 } else { 0.0 }));
    let phase = 2.0 * PI * hour_of_day / 24.0;
    values.push(phase.sin());
    values.push(phase.cos());

    let layout = temporal_layout(cfg);
    debug_assert_eq!(layout.len(), values.len());
    Ok(FeatureVector { values, layout })
}

/// `neighbor_rc[i]` is the latest RC at neighbor `i`; `coupling_row[i]` its
/// non-negative coupling weight. The aggregate is their weighted mean, 0 when
/// all weights vanish.
pub fn build_spatial_view(
    geo: &GeoSummary,
    neighbor_rc: &[f64],
    coupling_row: &[f64],
    cfg: &FeatureConfig,
) -> Result<FeatureVector> {
    geo.validate(cfg)?;
    if neighbor_rc.len() != coupling_row.len() {
        return Err(Error::invalid(format!(
            "{} neighbor readings but {} coupling weights",
            neighbor_rc.len(),
            coupling_row.len()
        )));
    }
    if coupling_row.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
        return Err(Error::invalid("coupling weights must be finite and non-negative"));
    }
    let total: f64 = coupling_row.iter().sum();
    let aggregate = if total > 0.0 {
        neighbor_rc
            .iter()
            .zip(coupling_row)
            .map(|(r, c)| r * c)
            .sum::<f64>()
            / total
    } else {
        0.0
    };
    let mut values = vec![
        geo.road_total_length,
        geo.road_intersections as f64,
        geo.poi_density,
    ];
    values.extend(geo.poi_counts.iter().map(|&c| c as f64));
    values.push(aggregate);
    Ok(FeatureVector {
        values,
        layout: spatial_layout(cfg),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{layout_csv, SERIES_NAMES};

    fn geo(cfg: &FeatureConfig) -> GeoSummary {
        GeoSummary {
            road_total_length: 12.5,
            road_intersections: 40,
            poi_counts: (0..cfg.poi_categories as u32).collect(),
            poi_density: 3.2,
        }
    }

    fn meteo() -> MeteoSnapshot {
        MeteoSnapshot {
            temperature: 21.0,
            humidity: 70.0,
            barometer: 1008.0,
            wind_speed: 2.5,
            weather: "rain".into(),
        }
    }

    #[test]
    fn default_dimensions() {
        let cfg = FeatureConfig::default();
        assert_eq!(cfg.per_series_dim(), 27);
        assert_eq!(cfg.temporal_dim(), 146);
        assert_eq!(cfg.spatial_dim(), 24);
        assert_eq!(temporal_layout(&cfg).len(), 146);
        assert_eq!(spatial_layout(&cfg).len(), 24);
    }

    #[test]
    fn constant_inputs_zero_dynamic_features() {
        let cfg = FeatureConfig::default();
        let w = TimeSeriesWindow::hourly(vec![0.7; 12]).unwrap();
        let sw = SensorWindows {
            rc: &w,
            turbidity: &w,
            ph: &w,
            flow: &w,
            pressure: &w,
        };
        let fv = build_temporal_view(sw, &meteo(), 6.0, &cfg).unwrap();
        assert_eq!(fv.len(), 146);
        for d in &fv.layout {
            let dynamic = [".acf", ".fft", ".dwt", ".slope", ".skew", ".kurt", ".var"]
                .iter()
                .any(|k| d.name.contains(k));
            if dynamic {
                assert_eq!(fv.values[d.index], 0.0, "{}", d.name);
            }
        }
        assert_eq!(fv.get("weather.rain"), Some(1.0));
        assert_eq!(fv.get("weather.clear"), Some(0.0));
        assert!((fv.get("time.sin").unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mismatched_spans_rejected() {
        let cfg = FeatureConfig::default();
        let a = TimeSeriesWindow::hourly(vec![1.0; 12]).unwrap();
        let b = TimeSeriesWindow::new(vec![1.0; 12], 30.0, 6.0).unwrap();
        let sw = SensorWindows {
            rc: &a,
            turbidity: &a,
            ph: &b,
            flow: &a,
            pressure: &a,
        };
        assert!(build_temporal_view(sw, &meteo(), 1.0, &cfg).is_err());
    }

    #[test]
    fn temporal_view_is_composition_of_ops() {
        let cfg = FeatureConfig::default();
        let ws: Vec<TimeSeriesWindow> = (0..5)
            .map(|s| {
                TimeSeriesWindow::hourly(
                    (0..12).map(|t| ((t * 7 + s * 3) % 11) as f64 * 0.1 + s as f64).collect(),
                )
                .unwrap()
            })
            .collect();
        let sw = SensorWindows {
            rc: &ws[0],
            turbidity: &ws[1],
            ph: &ws[2],
            flow: &ws[3],
            pressure: &ws[4],
        };
        let fv = build_temporal_view(sw, &meteo(), 18.0, &cfg).unwrap();
        for (s, w) in SERIES_NAMES.iter().zip(&ws) {
            let st = stat_features(w);
            assert_eq!(fv.get(&format!("{s}.mean")), Some(st[0]));
            assert_eq!(fv.get(&format!("{s}.kurt")), Some(st[5]));
            assert_eq!(fv.get(&format!("{s}.acf2")), Some(autocorrelation(w, 2).unwrap()));
            assert_eq!(fv.get(&format!("{s}.paa3")), Some(paa(w, 4).unwrap()[3]));
            assert_eq!(fv.get(&format!("{s}.pla1.intercept")), Some(pla(w, 4).unwrap()[3]));
            assert_eq!(fv.get(&format!("{s}.fft2")), Some(fft_topk(w, 3)[2]));
            assert_eq!(fv.get(&format!("{s}.dwt0")), Some(dwt_topk(w, 3)[0]));
        }
        assert_eq!(fv.get("meteo.barometer"), Some(1008.0));
        let again = build_temporal_view(sw, &meteo(), 18.0, &cfg).unwrap();
        assert_eq!(layout_csv(&fv.layout), layout_csv(&again.layout));
        assert_eq!(fv.values, again.values);
    }

    #[test]
    fn unknown_weather_rejected() {
        let cfg = FeatureConfig::default();
        let w = TimeSeriesWindow::hourly(vec![1.0; 12]).unwrap();
        let sw = SensorWindows {
            rc: &w,
            turbidity: &w,
            ph: &w,
            flow: &w,
            pressure: &w,
        };
        let mut m = meteo();
        m.weather = "hail".into();
        assert!(build_temporal_view(sw, &m, 1.0, &cfg).is_err());
    }

    #[test]
    fn neighbor_aggregate() {
        let cfg = FeatureConfig::default();
        let g = geo(&cfg);
        let agg = |rc: &[f64], c: &[f64]| {
            build_spatial_view(&g, rc, c, &cfg)
                .unwrap()
                .get("neighbor.rc")
                .unwrap()
        };
        assert_eq!(agg(&[0.5, 0.9], &[0.0, 0.0]), 0.0);
        assert_eq!(agg(&[0.8], &[1.0]), 0.8);
        assert!((agg(&[0.4, 0.8], &[1.0, 3.0]) - 0.7).abs() < 1e-15);
        assert!(build_spatial_view(&g, &[0.4], &[1.0, 2.0], &cfg).is_err());
        assert!(build_spatial_view(&g, &[0.4], &[-1.0], &cfg).is_err());
        let fv = build_spatial_view(&g, &[0.4], &[1.0], &cfg).unwrap();
        assert_eq!(fv.len(), 24);
        assert_eq!(fv.get("poi.c20"), Some(19.0));
    }
}
