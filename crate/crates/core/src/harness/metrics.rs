use nalgebra::DVector;

use crate::error::{Error, Result};

fn check(y: &[DVector<f64>], yhat: &[DVector<f64>]) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::invalid(format!(
            "{} target stations but {} prediction stations",
            y.len(),
            yhat.len()
        )));
    }
    for (l, (a, b)) in y.iter().zip(yhat).enumerate() {
        if a.len() != b.len() {
            return Err(Error::invalid(format!(
                "station {l}: {} targets but {} predictions",
                a.len(),
                b.len()
            )));
        }
    }
    Ok(())
}

/// Root-mean-square error pooled over every sample of every station.
pub fn rmse(y: &[DVector<f64>], yhat: &[DVector<f64>]) -> Result<f64> {
    check(y, yhat)?;
    let n: usize = y.iter().map(|v| v.len()).sum();
    if n == 0 {
        return Err(Error::invalid("no samples to score"));
    }
    let sse: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).norm_squared()).sum();
    Ok((sse / n as f64).sqrt())
}

/// `1 − mean_l ‖y_l − ŷ_l‖₁ / ‖y_l‖₁`; negative for very poor predictions.
pub fn accuracy(y: &[DVector<f64>], yhat: &[DVector<f64>]) -> Result<f64> {
    check(y, yhat)?;
    if y.is_empty() {
        return Err(Error::invalid("no stations to score"));
    }
    let mut total = 0.0;
    for (l, (a, b)) in y.iter().zip(yhat).enumerate() {
        let norm = a.lp_norm(1);
        if !(norm > 0.0) {
            return Err(Error::invalid(format!("station {l} has an all-zero target")));
        }
        total += (a - b).lp_norm(1) / norm;
    }
    Ok(1.0 - total / y.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn rmse_examples() {
        let y = vec![v(&[1.0, 2.0]), v(&[3.0])];
        assert_eq!(rmse(&y, &y).unwrap(), 0.0);
        let got = rmse(&[v(&[0.0, 0.0])], &[v(&[3.0, 4.0])]).unwrap();
        assert!((got - 12.5f64.sqrt()).abs() < 1e-15);
        assert!(rmse(&y, &[v(&[1.0])]).is_err());
        assert!(rmse(&[v(&[1.0])], &[v(&[1.0, 2.0])]).is_err());
    }

    #[test]
    fn accuracy_examples() {
        let y = vec![v(&[1.0, -2.0]), v(&[3.0])];
        assert_eq!(accuracy(&y, &y).unwrap(), 1.0);
        let zero = vec![v(&[0.0, 0.0]), v(&[0.0])];
        assert_eq!(accuracy(&y, &zero).unwrap(), 0.0);
        assert!(accuracy(&zero, &y).is_err());
        // Far-off predictions give negative accuracy.
        assert!(accuracy(&[v(&[1.0])], &[v(&[5.0])]).unwrap() < 0.0);
    }

    #[test]
    fn metrics_match_naive_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let m = rng.random_range(1..5);
            let sizes: Vec<usize> = (0..m).map(|_| rng.random_range(1..20)).collect();
            let y: Vec<DVector<f64>> = sizes
                .iter()
                .map(|&n| DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0)))
                .collect();
            let yhat: Vec<DVector<f64>> = sizes
                .iter()
                .map(|&n| DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0)))
                .collect();

            let mut count = 0usize;
            let mut mean_sq = 0.0;
            for (a, b) in y.iter().zip(&yhat) {
                for i in 0..a.len() {
                    count += 1;
                    mean_sq += ((a[i] - b[i]).powi(2) - mean_sq) / count as f64;
                }
            }
            assert!((rmse(&y, &yhat).unwrap() - mean_sq.sqrt()).abs() < 1e-12);

            let mut ratio_sum = 0.0;
            for (a, b) in y.iter().zip(&yhat) {
                let mut num = 0.0;
                let mut den = 0.0;
                for i in 0..a.len() {
                    num += (a[i] - b[i]).abs();
                    den += a[i].abs();
                }
                ratio_sum += num / den;
            }
            let want = 1.0 - ratio_sum / m as f64;
            assert!((accuracy(&y, &yhat).unwrap() - want).abs() < 1e-12);
        }
    }
}
