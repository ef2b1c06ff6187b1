//! Interval estimates used by every Monte-Carlo check.

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

pub fn wilson95(successes: u64, trials: u64) -> (f64, f64) {
    wilson(successes, trials, Z95)
}

/// Half-width of the 95% Wilson interval.
pub fn wilson_half_width(successes: u64, trials: u64) -> f64 {
    let (lo, hi) = wilson95(successes, trials);
    0.5 * (hi - lo)
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Least-squares slope of y against x.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Binomial standard deviation of a proportion.
pub fn binomial_sigma(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_brackets_estimate() {
        for &(k, n) in &[(0u64, 10u64), (5, 10), (10, 10), (3, 1000), (999, 1000)] {
            let (lo, hi) = wilson95(k, n);
            let p = k as f64 / n as f64;
            assert!(lo <= p + 1e-15 && p <= hi + 1e-15);
            assert!(0.0 <= lo && hi <= 1.0);
        }
    }

    #[test]
    fn wilson_known_value() {
        // 50/100: centre 0.5, half-width z*sqrt(0.0025+z²/40000)/(1+z²/100).
        let (lo, hi) = wilson95(50, 100);
        let z = Z95;
        let half = z * (0.0025f64 + z * z / 40000.0).sqrt() / (1.0 + z * z / 100.0);
        assert!((lo - (0.5 - half)).abs() < 1e-12);
        assert!((hi - (0.5 + half)).abs() < 1e-12);
    }

    #[test]
    fn slope_of_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 0.5 * v + 2.0).collect();
        assert!((ls_slope(&x, &y) - 0.5).abs() < 1e-12);
    }
}
