use super::TimeSeriesWindow;
use crate::error::{Error, Result};

// Rounding in the mean would otherwise leave ~1e-32 variance on constants.
fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

/// Population moments: `[mean, variance, max, min, skewness, excess kurtosis]`.
///
/// Skewness and kurtosis are 0 for a zero-variance window.
pub fn stat_features(w: &TimeSeriesWindow) -> [f64; 6] {
    let x = w.values();
    if is_constant(x) {
        return [x[0], 0.0, x[0], x[0], 0.0, 0.0];
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    let (mut max, mut min) = (f64::NEG_INFINITY, f64::INFINITY);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        max = max.max(v);
        min = min.min(v);
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let (skew, kurt) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };
    [mean, m2, max, min, skew, kurt]
}

/// Biased sample autocorrelation at `lag`; 0 for zero-variance windows.
pub fn autocorrelation(w: &TimeSeriesWindow, lag: usize) -> Result<f64> {
    let x = w.values();
    if lag >= x.len() {
        return Err(Error::invalid(format!(
            "lag {lag} must be below window length {}",
            x.len()
        )));
    }
    if is_constant(x) {
        return Ok(0.0);
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let denom: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    if denom <= 0.0 {
        return Ok(0.0);
    }
    if lag == 0 {
        return Ok(1.0);
    }
    let num: f64 = x
        .iter()
        .zip(&x[lag..])
        .map(|(a, b)| (a - mean) * (b - mean))
        .sum();
    Ok((num / denom).clamp(-1.0, 1.0))
}

/// Piecewise aggregate approximation over `segments` equal-support pieces.
///
/// When the length is not a multiple of `segments`, samples straddling a
/// boundary contribute fractionally to both neighbors.
pub fn paa(w: &TimeSeriesWindow, segments: usize) -> Result<Vec<f64>> {
    let x = w.values();
    let n = x.len();
    if segments == 0 || segments > n {
        return Err(Error::invalid(format!(
            "PAA needs 1..={n} segments, got {segments}"
        )));
    }
    // Scaled coordinates: sample i covers [i*s, (i+1)*s), segment j covers [j*n, (j+1)*n).
    let s = segments;
    let mut out = Vec::with_capacity(s);
    for j in 0..s {
        let (lo, hi) = (j * n, (j + 1) * n);
        let mut acc = 0.0;
        for i in (lo / s)..n.min(hi.div_ceil(s)) {
            let (a, b) = (i * s, (i + 1) * s);
            let overlap = b.min(hi).saturating_sub(a.max(lo));
            acc += (overlap as f64 / n as f64) * x[i];
        }
        out.push(acc);
    }
    Ok(out)
}

/// Piecewise linear approximation: `(slope, intercept)` per segment, fitted
/// by least squares against the local sample index.
pub fn pla(w: &TimeSeriesWindow, segments: usize) -> Result<Vec<f64>> {
    let x = w.values();
    let n = x.len();
    if segments == 0 || n / segments < 2 {
        return Err(Error::invalid(format!(
            "PLA with {segments} segments needs at least 2 points per segment (length {n})"
        )));
    }
    let mut out = Vec::with_capacity(2 * segments);
    for j in 0..segments {
        let seg = &x[j * n / segments..(j + 1) * n / segments];
        let m = seg.len() as f64;
        let tbar = (m - 1.0) / 2.0;
        let ybar = seg.iter().sum::<f64>() / m;
        let (mut sty, mut stt) = (0.0, 0.0);
        for (t, y) in seg.iter().enumerate() {
            let dt = t as f64 - tbar;
            sty += dt * (y - ybar);
            stt += dt * dt;
        }
        let slope = sty / stt;
        out.push(slope);
        out.push(ybar - slope * tbar);
    }
    Ok(out)
}
