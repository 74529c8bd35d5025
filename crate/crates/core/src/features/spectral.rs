use std::f64::consts::FRAC_1_SQRT_2;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::TimeSeriesWindow;

/// Magnitudes of the `k` strongest non-DC Fourier coefficients over the half
/// spectrum (bins `1..=n/2`), strongest first, ties to the lower bin.
/// Zero-padded when fewer bins exist.
pub fn fft_topk(w: &TimeSeriesWindow, k: usize) -> Vec<f64> {
    let x = w.values();
    let n = x.len();
    let mean = if x.iter().all(|&v| v == x[0]) {
        x[0]
    } else {
        x.iter().sum::<f64>() / n as f64
    };
    let mut buf: Vec<Complex<f64>> = x.iter().map(|v| Complex::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let bins: Vec<(usize, f64)> = (1..=n / 2).map(|b| (b, buf[b].norm())).collect();
    top_magnitudes(bins, k, |a, b| a.cmp(b))
}

/// Detail coefficients of a full orthonormal Haar decomposition as
/// `(level, position, value)`; level 1 is the finest.
///
/// The series is cut to its most recent `2^p` samples.
pub fn haar_details(x: &[f64]) -> Vec<(usize, usize, f64)> {
    if x.len() < 2 {
        return Vec::new();
    }
    let p = usize::BITS - 1 - x.len().leading_zeros();
    let mut approx = x[x.len() - (1usize << p)..].to_vec();
    let mut out = Vec::with_capacity(approx.len());
    let mut level = 1;
    while approx.len() > 1 {
        let half = approx.len() / 2;
        let mut next = Vec::with_capacity(half);
        for (pos, pair) in approx.chunks_exact(2).enumerate() {
            next.push((pair[0] + pair[1]) * FRAC_1_SQRT_2);
            out.push((level, pos, (pair[0] - pair[1]) * FRAC_1_SQRT_2));
        }
        approx = next;
        level += 1;
    }
    out
}

/// Magnitudes of the `k` largest Haar details, ties to the coarser level and
/// then the lower position. Zero-padded.
pub fn dwt_topk(w: &TimeSeriesWindow, k: usize) -> Vec<f64> {
    let coeffs = haar_details(w.values())
        .into_iter()
        .map(|(level, pos, v)| ((level, pos), v.abs()))
        .collect();
    top_magnitudes(coeffs, k, |a: &(usize, usize), b| {
        b.0.cmp(&a.0).then(a.1.cmp(&b.1))
    })
}

fn top_magnitudes<K>(
    mut items: Vec<(K, f64)>,
    k: usize,
    tie: impl Fn(&K, &K) -> std::cmp::Ordering,
) -> Vec<f64> {
    items.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| tie(&a.0, &b.0)));
    let mut out: Vec<f64> = items.into_iter().take(k).map(|(_, m)| m).collect();
    out.resize(k, 0.0);
    out
}
