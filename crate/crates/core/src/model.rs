//! Problem data: damping `lambda`, noise intensity `epsilon`, the
//! nonlinearity `f(x, s)` with its growth constants, and the time-dependent
//! forcing `g(t, x)`.
//!
//! Hypotheses on `f` are certified by sampling on a lattice over the
//! truncated box, never symbolically.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{l2_norm, Field, Grid};

/// Constants in the growth and dissipation bounds on `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthConstants {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub alpha4: f64,
    pub p: f64,
}

/// A nonlinearity `f(x, s)` together with the constants and profiles bounding it:
///
/// * `f(x,s) s <= -alpha1 |s|^p + psi1(x)`
/// * `|f(x,s)| <= alpha2 |s|^{p-1} + psi2(x)`
/// * `df/ds <= alpha3`
/// * `|df/dx| <= psi3(x)`
/// * `|df/ds| <= alpha4 |s|^{p-2} + psi4(x)`
///
/// Implementations must be pure.
pub trait Nonlinearity: Send + Sync + fmt::Debug {
    fn value(&self, x: &[f64], s: f64) -> f64;
    fn ds(&self, x: &[f64], s: f64) -> f64;
    /// Spatial gradient; unused components are 0.
    fn dx(&self, x: &[f64], s: f64) -> [f64; 2];
    fn constants(&self) -> GrowthConstants;
    fn psi1(&self, x: &[f64]) -> f64;
    fn psi2(&self, x: &[f64]) -> f64;
    fn psi3(&self, x: &[f64]) -> f64;
    fn psi4(&self, x: &[f64]) -> f64;
    /// True when `f(x, 0) = 0` for every `x`.
    fn vanishes_at_zero(&self) -> bool {
        false
    }
}

/// `f(x, s) = alpha3 s - scale s^3`, independent of `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubicNonlinearity {
    alpha3: f64,
    scale: f64,
}

/// The cubic instance with certified constants (`p = 4`).
pub fn canonical_cubic(alpha3: f64, scale: f64) -> Result<CubicNonlinearity> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::config(
            "nonlinearity.scale",
            format!("must be positive, got {scale}"),
        ));
    }
    if !(alpha3 >= 0.0) || !alpha3.is_finite() {
        return Err(Error::config(
            "nonlinearity.alpha3",
            format!("must be >= 0, got {alpha3}"),
        ));
    }
    Ok(CubicNonlinearity { alpha3, scale })
}

impl CubicNonlinearity {
    pub fn alpha3(&self) -> f64 {
        self.alpha3
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl Nonlinearity for CubicNonlinearity {
    fn value(&self, _x: &[f64], s: f64) -> f64 {
        self.alpha3 * s - self.scale * s * s * s
    }

    fn ds(&self, _x: &[f64], s: f64) -> f64 {
        self.alpha3 - 3.0 * self.scale * s * s
    }

    fn dx(&self, _x: &[f64], _s: f64) -> [f64; 2] {
        [0.0, 0.0]
    }

    fn constants(&self) -> GrowthConstants {
        GrowthConstants {
            alpha1: self.scale / 2.0,
            alpha2: self.scale + 1.0,
            alpha3: self.alpha3,
            alpha4: 3.0 * self.scale,
            p: 4.0,
        }
    }

    /// `sup_s (alpha3 s^2 - scale s^4 / 2)`.
    fn psi1(&self, _x: &[f64]) -> f64 {
        self.alpha3 * self.alpha3 / (2.0 * self.scale)
    }

    /// `sup_s (alpha3 |s| - |s|^3)`, the slack left after `alpha2 = scale + 1`.
    fn psi2(&self, _x: &[f64]) -> f64 {
        2.0 * self.alpha3 / 3.0 * (self.alpha3 / 3.0).sqrt()
    }

    fn psi3(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn psi4(&self, _x: &[f64]) -> f64 {
        self.alpha3
    }

    fn vanishes_at_zero(&self) -> bool {
        true
    }
}

/// `f = 0` with all constants zero (`p = 2`).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ZeroNonlinearity;

impl Nonlinearity for ZeroNonlinearity {
    fn value(&self, _x: &[f64], _s: f64) -> f64 {
        0.0
    }
    fn ds(&self, _x: &[f64], _s: f64) -> f64 {
        0.0
    }
    fn dx(&self, _x: &[f64], _s: f64) -> [f64; 2] {
        [0.0, 0.0]
    }
    fn constants(&self) -> GrowthConstants {
        GrowthConstants {
            alpha1: 0.0,
            alpha2: 0.0,
            alpha3: 0.0,
            alpha4: 0.0,
            p: 2.0,
        }
    }
    fn psi1(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn psi2(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn psi3(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn psi4(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn vanishes_at_zero(&self) -> bool {
        true
    }
}

/// Non-autonomous forcing `g(t, x)` with the exponent `delta` of its weighted energy bound.
pub trait Forcing: Send + Sync + fmt::Debug {
    fn value(&self, t: f64, x: &[f64]) -> f64;
    fn delta(&self) -> f64;
    /// True when `g` is identically zero.
    fn is_zero(&self) -> bool {
        false
    }
}

/// `g(t, x) = amplitude (1 + tanh t)/2 exp(-|x|^2 / width^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianPulseForcing {
    amplitude: f64,
    delta: f64,
    width: f64,
}

/// Builds the Gaussian-pulse forcing; `delta < lambda` is checked when the `ProblemSpec` is assembled.
pub fn canonical_forcing(amplitude: f64, delta: f64, width: f64) -> Result<GaussianPulseForcing> {
    if !(width > 0.0) || !width.is_finite() {
        return Err(Error::config("forcing.width", format!("must be positive, got {width}")));
    }
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::config("forcing.delta", format!("must be >= 0, got {delta}")));
    }
    if !amplitude.is_finite() {
        return Err(Error::config("forcing.amplitude", "must be finite"));
    }
    Ok(GaussianPulseForcing {
        amplitude,
        delta,
        width,
    })
}

impl GaussianPulseForcing {
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn width(&self) -> f64 {
        self.width
    }
}

impl Forcing for GaussianPulseForcing {
    fn value(&self, t: f64, x: &[f64]) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        let r2: f64 = x.iter().map(|c| c * c).sum();
        self.amplitude * 0.5 * (1.0 + t.tanh()) * (-r2 / (self.width * self.width)).exp()
    }

    fn delta(&self) -> f64 {
        self.delta
    }

    fn is_zero(&self) -> bool {
        self.amplitude == 0.0
    }
}

/// Complete PDE data. Immutable once built; clone to vary `epsilon`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub lambda: f64,
    pub epsilon: f64,
    pub dimension: usize,
    pub domain_radius: f64,
    pub nonlinearity: Arc<dyn Nonlinearity>,
    pub forcing: Arc<dyn Forcing>,
}

impl ProblemSpec {
    pub fn new(
        lambda: f64,
        epsilon: f64,
        dimension: usize,
        domain_radius: f64,
        nonlinearity: Arc<dyn Nonlinearity>,
        forcing: Arc<dyn Forcing>,
    ) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::config("lambda", format!("must be positive, got {lambda}")));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::config("epsilon", format!("must lie in [0, 1], got {epsilon}")));
        }
        if !(dimension == 1 || dimension == 2) {
            return Err(Error::config("dimension", format!("must be 1 or 2, got {dimension}")));
        }
        if !(domain_radius > 0.0) || !domain_radius.is_finite() {
            return Err(Error::config(
                "domain_radius",
                format!("must be positive, got {domain_radius}"),
            ));
        }
        let delta = forcing.delta();
        if !(delta < lambda) {
            return Err(Error::config(
                "forcing.delta",
                format!("must be below lambda = {lambda}, got {delta}"),
            ));
        }
        Ok(ProblemSpec {
            lambda,
            epsilon,
            dimension,
            domain_radius,
            nonlinearity,
            forcing,
        })
    }

    /// Same data with a different noise intensity.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        ProblemSpec::new(
            self.lambda,
            epsilon,
            self.dimension,
            self.domain_radius,
            self.nonlinearity.clone(),
            self.forcing.clone(),
        )
    }

    pub fn grid(&self, points_per_axis: usize) -> Result<Grid> {
        Grid::new(self.dimension, self.domain_radius, points_per_axis)
    }

    /// Fails unless `lambda > alpha3`, the condition for a unique random equilibrium.
    pub fn require_contraction(&self) -> Result<()> {
        let alpha3 = self.nonlinearity.constants().alpha3;
        if self.lambda > alpha3 {
            Ok(())
        } else {
            Err(Error::config(
                "lambda",
                format!(
                    "equilibrium experiments need lambda > alpha3, got {} <= {alpha3}",
                    self.lambda
                ),
            ))
        }
    }

    /// `g(t, .)` sampled on `grid`.
    pub fn forcing_field(&self, grid: Grid, t: f64) -> Field {
        Field::from_fn(grid, |x| self.forcing.value(t, x))
    }

    /// Discrete `||g(t, .)||^2` on `grid`.
    pub fn forcing_norm_sq(&self, grid: Grid, t: f64) -> f64 {
        if self.forcing.is_zero() {
            return 0.0;
        }
        l2_norm(&self.forcing_field(grid, t)).powi(2)
    }
}

/// Trapezoid approximation of `int_{-horizon}^{tau} e^{delta s} ||g(s)||^2 ds` with step `ds`.
pub fn weighted_forcing_energy(spec: &ProblemSpec, grid: Grid, tau: f64, horizon: f64, ds: f64) -> f64 {
    let delta = spec.forcing.delta();
    let n = ((tau + horizon) / ds).ceil().max(1.0) as usize;
    let h = (tau + horizon) / n as f64;
    (0..=n)
        .map(|i| {
            let s = -horizon + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            w * (delta * s).exp() * spec.forcing_norm_sq(grid, s)
        })
        .sum::<f64>()
        * h
}

/// Worst-case slack of one hypothesis over the sampling lattice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: &'static str,
    /// Minimum of `rhs - lhs`; negative values are violations.
    pub worst_slack: f64,
    pub at_x: Vec<f64>,
    pub at_s: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub n_samples: usize,
    pub s_range: f64,
    pub checks: Vec<HypothesisCheck>,
    pub passed: bool,
}

impl HypothesisReport {
    pub fn check(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Slack below which a check fails, scaled by the magnitude of the terms compared.
const SLACK_TOL: f64 = 1e-12;

/// Scans `(x, s)` on an `n_samples`-per-axis lattice over the box times `[-s_range, s_range]`.
pub fn check_hypotheses(spec: &ProblemSpec, n_samples: usize, s_range: f64) -> Result<HypothesisReport> {
    if n_samples == 0 {
        return Err(Error::config("n_samples", "must be >= 1"));
    }
    let f = spec.nonlinearity.as_ref();
    let c = f.constants();
    let lin = |n: usize, a: f64| -> Vec<f64> {
        if n == 1 {
            vec![0.0]
        } else {
            (0..n).map(|i| -a + 2.0 * a * i as f64 / (n - 1) as f64).collect()
        }
    };
    let axis = lin(n_samples, spec.domain_radius);
    let ss = lin(n_samples, s_range);
    let xs: Vec<Vec<f64>> = if spec.dimension == 1 {
        axis.iter().map(|&x| vec![x]).collect()
    } else {
        axis.iter()
            .flat_map(|&y| axis.iter().map(move |&x| vec![x, y]))
            .collect()
    };

    type Slack<'a> = Box<dyn Fn(&[f64], f64) -> (f64, f64) + 'a>;
    // Each closure returns (rhs - lhs, magnitude of the compared terms).
    let tests: Vec<(&'static str, Slack)> = vec![
        (
            "dissipation",
            Box::new(|x, s| {
                let lhs = f.value(x, s) * s;
                let rhs = -c.alpha1 * s.abs().powf(c.p) + f.psi1(x);
                (rhs - lhs, lhs.abs().max(rhs.abs()))
            }),
        ),
        (
            "growth",
            Box::new(|x, s| {
                let lhs = f.value(x, s).abs();
                let rhs = c.alpha2 * s.abs().powf(c.p - 1.0) + f.psi2(x);
                (rhs - lhs, lhs.max(rhs))
            }),
        ),
        (
            "one_sided_lipschitz",
            Box::new(|x, s| {
                let lhs = f.ds(x, s);
                (c.alpha3 - lhs, lhs.abs().max(c.alpha3))
            }),
        ),
        (
            "spatial_gradient",
            Box::new(|x, s| {
                let d = f.dx(x, s);
                let lhs = d[0].hypot(d[1]);
                let rhs = f.psi3(x);
                (rhs - lhs, lhs.max(rhs))
            }),
        ),
        (
            "derivative_growth",
            Box::new(|x, s| {
                let lhs = f.ds(x, s).abs();
                let rhs = c.alpha4 * s.abs().powf(c.p - 2.0) + f.psi4(x);
                (rhs - lhs, lhs.max(rhs))
            }),
        ),
    ];

    let checks: Vec<HypothesisCheck> = tests
        .iter()
        .map(|(name, slack)| {
            let mut worst = f64::INFINITY;
            let mut worst_scaled = f64::INFINITY;
            let mut at = (vec![0.0; spec.dimension], 0.0);
            for x in &xs {
                for &s in &ss {
                    let (sl, mag) = slack(x, s);
                    let scaled = sl / mag.max(1.0);
                    if sl < worst {
                        worst = sl;
                        at = (x.clone(), s);
                    }
                    worst_scaled = worst_scaled.min(scaled);
                }
            }
            HypothesisCheck {
                name,
                worst_slack: worst,
                at_x: at.0,
                at_s: at.1,
                passed: worst_scaled >= -SLACK_TOL,
            }
        })
        .collect();
    let passed = checks.iter().all(|c| c.passed);
    Ok(HypothesisReport {
        n_samples,
        s_range,
        checks,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_with(nl: Arc<dyn Nonlinearity>, dim: usize) -> ProblemSpec {
        ProblemSpec::new(
            2.0,
            0.5,
            dim,
            4.0,
            nl,
            Arc::new(canonical_forcing(1.0, 0.1, 1.0).unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn cubic_examples() {
        let f = canonical_cubic(1.0, 1.0).unwrap();
        assert_eq!(f.value(&[0.0], 0.0), 0.0);
        let c = f.constants();
        let s: f64 = 2.0;
        let lhs = f.value(&[0.0], s) * s;
        assert_eq!(lhs, -12.0);
        assert_eq!(-c.alpha1 * s.powi(4) + f.psi1(&[0.0]), -7.5);
        for i in -50..=50 {
            let s = i as f64 * 0.1;
            assert!(f.ds(&[0.0], s) <= c.alpha3);
        }
        assert!(canonical_cubic(1.0, 0.0).is_err());
    }

    #[test]
    fn canonical_passes_all_checks() {
        for dim in [1, 2] {
            let spec = spec_with(Arc::new(canonical_cubic(1.0, 1.0).unwrap()), dim);
            let report = check_hypotheses(&spec, 41, 5.0).unwrap();
            assert!(report.passed, "{report:?}");
            assert_eq!(report.checks.len(), 5);
        }
    }

    #[derive(Debug)]
    struct Identity;
    impl Nonlinearity for Identity {
        fn value(&self, _x: &[f64], s: f64) -> f64 {
            s
        }
        fn ds(&self, _x: &[f64], _s: f64) -> f64 {
            1.0
        }
        fn dx(&self, _x: &[f64], _s: f64) -> [f64; 2] {
            [0.0; 2]
        }
        fn constants(&self) -> GrowthConstants {
            GrowthConstants {
                alpha1: 1.0,
                alpha2: 1.0,
                alpha3: 1.0,
                alpha4: 1.0,
                p: 4.0,
            }
        }
        fn psi1(&self, _x: &[f64]) -> f64 {
            0.0
        }
        fn psi2(&self, _x: &[f64]) -> f64 {
            1.0
        }
        fn psi3(&self, _x: &[f64]) -> f64 {
            0.0
        }
        fn psi4(&self, _x: &[f64]) -> f64 {
            1.0
        }
    }

    #[test]
    fn identity_violates_dissipation() {
        let spec = spec_with(Arc::new(Identity), 1);
        let report = check_hypotheses(&spec, 21, 1.0).unwrap();
        let d = report.check("dissipation").unwrap();
        assert!(!d.passed);
        // at s = +-1: rhs - lhs = -1 - 1
        assert_eq!(d.worst_slack, -2.0);
        assert_eq!(d.at_s.abs(), 1.0);
        assert!(!report.passed);
    }

    #[test]
    fn zero_nonlinearity_equality() {
        let spec = spec_with(Arc::new(ZeroNonlinearity), 1);
        let report = check_hypotheses(&spec, 11, 2.0).unwrap();
        assert!(report.passed);
        assert_eq!(report.check("dissipation").unwrap().worst_slack, 0.0);
    }

    #[test]
    fn report_is_deterministic() {
        let spec = spec_with(Arc::new(canonical_cubic(0.7, 2.0).unwrap()), 2);
        assert_eq!(
            check_hypotheses(&spec, 9, 3.0).unwrap(),
            check_hypotheses(&spec, 9, 3.0).unwrap()
        );
        assert!(check_hypotheses(&spec, 0, 3.0).is_err());
    }

    #[test]
    fn forcing_examples() {
        let g = canonical_forcing(0.0, 0.1, 1.0).unwrap();
        assert_eq!(g.value(3.0, &[0.2]), 0.0);
        let g = canonical_forcing(2.0, 0.1, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for t in [0.0, -1.0, -2.0, -5.0, -10.0] {
            let v = g.value(t, &[0.0]);
            assert!(v < prev);
            prev = v;
        }
        assert!(canonical_forcing(1.0, 0.1, 0.0).is_err());
        let bad = ProblemSpec::new(
            0.5,
            0.0,
            1,
            4.0,
            Arc::new(ZeroNonlinearity),
            Arc::new(canonical_forcing(1.0, 0.5, 1.0).unwrap()),
        );
        assert!(matches!(bad, Err(Error::Config { .. })));
    }

    #[test]
    fn spec_validation() {
        let nl: Arc<dyn Nonlinearity> = Arc::new(ZeroNonlinearity);
        let g: Arc<dyn Forcing> = Arc::new(canonical_forcing(1.0, 0.0, 1.0).unwrap());
        assert!(ProblemSpec::new(0.0, 0.5, 1, 1.0, nl.clone(), g.clone()).is_err());
        assert!(ProblemSpec::new(1.0, 1.5, 1, 1.0, nl.clone(), g.clone()).is_err());
        assert!(ProblemSpec::new(1.0, 0.5, 3, 1.0, nl.clone(), g.clone()).is_err());
        let spec = ProblemSpec::new(1.0, 0.5, 1, 1.0, nl, g).unwrap();
        assert_eq!(spec.with_epsilon(0.0).unwrap().epsilon, 0.0);
        let strong = spec_with(Arc::new(canonical_cubic(3.0, 1.0).unwrap()), 1);
        assert!(strong.require_contraction().is_err());
    }
}
