//! Small statistics helpers used by summaries and acceptance checks.

use statrs::distribution::{ContinuousCDF, StudentsT};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; zero for fewer than two samples.
pub fn stddev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

pub fn standard_error(xs: &[f64]) -> f64 {
    stddev(xs) / (xs.len() as f64).sqrt()
}

/// Least-squares slope of `ys` against 0, 1, 2, ...
pub fn ols_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    if ys.len() < 2 {
        return 0.0;
    }
    let xm = (n - 1.0) / 2.0;
    let ym = mean(ys);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - xm;
        sxy += dx * (y - ym);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// One-sided Student-t test that the population mean exceeds zero.
///
/// Returns the lower end of the one-sided confidence interval at
/// `confidence`; the test passes when it is positive.
pub fn t_lower_bound(xs: &[f64], confidence: f64) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NEG_INFINITY;
    }
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("degrees of freedom are positive")
        .inverse_cdf(confidence);
    mean(xs) - t * standard_error(xs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((stddev(&xs) - 1.290_994_448_735_805_6).abs() < 1e-12);
        assert_eq!(stddev(&[3.0]), 0.0);
    }

    #[test]
    fn slope_of_line() {
        let ys: Vec<f64> = (0..10).map(|i| 3.0 + 0.5 * i as f64).collect();
        assert!((ols_slope(&ys) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn t_bound() {
        // t(0.95, 4 dof) = 2.1318
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let se = stddev(&xs) / 5f64.sqrt();
        assert!((t_lower_bound(&xs, 0.95) - (3.0 - 2.131_847 * se)).abs() < 1e-5);
    }
}
