//! Small statistical helpers shared by the diagnostics.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

/// Result of a one-sample Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsOutcome {
    pub n: usize,
    pub statistic: f64,
    pub p_value: f64,
}

impl KsOutcome {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value > significance
    }
}

/// Two-sided KS statistic of `samples` against the continuous CDF `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0_f64, |d, (i, &x)| {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d.max(above).max(below)
    })
}

/// Asymptotic p-value `P(D_n > d)` with the Stephens small-sample correction.
pub fn kolmogorov_p_value(n: usize, d: f64) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// KS test of `samples` against the standard normal law.
pub fn ks_standard_normal(samples: &[f64]) -> KsOutcome {
    let normal = Normal::standard();
    let statistic = ks_statistic(samples, |x| normal.cdf(x));
    KsOutcome {
        n: samples.len(),
        statistic,
        p_value: kolmogorov_p_value(samples.len(), statistic),
    }
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (sxy, sxx) = xs.iter().zip(ys).fold((0.0, 0.0), |(sxy, sxx), (x, y)| {
        (sxy + (x - mx) * (y - my), sxx + (x - mx) * (x - mx))
    });
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Number of strict increases along `xs`.
pub fn count_inversions(xs: &[f64]) -> usize {
    xs.windows(2).filter(|w| w[1] > w[0]).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        assert!((least_squares_slope(&xs, &ys).unwrap() + 0.5).abs() < 1e-15);
        assert_eq!(least_squares_slope(&[1.0], &[1.0]), None);
    }

    #[test]
    fn kolmogorov_tail_values() {
        // Q(1.36) ~ 0.049, Q(1.63) ~ 0.0098 for the limiting distribution.
        let big = 1_000_000;
        let d = |lambda: f64| lambda / (big as f64).sqrt();
        assert!((kolmogorov_p_value(big, d(1.36)) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_p_value(big, d(1.63)) - 0.0098).abs() < 1e-3);
    }

    #[test]
    fn ks_detects_shift() {
        let uniform_grid: Vec<f64> = (1..2000).map(|i| i as f64 / 2000.0).collect();
        let normal = Normal::standard();
        let quantiles: Vec<f64> = uniform_grid.iter().map(|&u| normal.inverse_cdf(u)).collect();
        assert!(ks_standard_normal(&quantiles).passes(0.01));
        let shifted: Vec<f64> = quantiles.iter().map(|q| q + 0.3).collect();
        assert!(!ks_standard_normal(&shifted).passes(0.01));
    }

    #[test]
    fn median_and_inversions() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(count_inversions(&[3.0, 2.0, 2.5, 1.0]), 1);
    }
}
