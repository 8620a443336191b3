//! Pullback experiments: random equilibria, contraction rate, attractor
//! samples and their small-noise limit, tail and truncation diagnostics, and
//! witnesses for the bounding integrals of the energy estimates.
//!
//! Every experiment is a pure function of its inputs. Parallel work is
//! collected in input order, so results do not depend on scheduling.

use rayon::prelude::*;
use serde::Serialize;

use crate::cocycle::{phi, pullback_conjugated_observed, pullback_state, CocycleQuery};
use crate::error::{Error, Result};
use crate::field::{h1_norm, l2_norm, lp_norm, norm, superlevel_measure_integrand, tail_norm, Field, Grid, NormKind};
use crate::model::ProblemSpec;
use crate::noise::{z_window_bounds, NoisePath, ShiftedPath, WienerPath};
use crate::solver::{SolverConfig, Stepper};
use crate::stats::{count_inversions, least_squares_slope, mean};

/// One entry of the pullback Cauchy history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CauchyStep {
    /// The longer of the two pullback horizons being compared.
    pub t: f64,
    /// `||u_{t_{n+1}} - u_{t_n}||_{L2}`.
    pub increment: f64,
    /// `increment / (1 + ||u_{t_{n+1}}||_{L2})`.
    pub relative: f64,
}

/// Approximation of the random equilibrium `u*(tau, w)` by pullback.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult {
    #[serde(skip)]
    pub state: Field,
    pub horizons: Vec<f64>,
    pub history: Vec<CauchyStep>,
    pub tolerance: f64,
    pub converged: bool,
    pub l2_norm: f64,
    pub h1_norm: f64,
    /// `||u*||_{L^p}` with `p` the growth exponent of the nonlinearity.
    pub lp_norm: f64,
    pub p: f64,
}

impl EquilibriumResult {
    /// True when the last `k` increments decrease strictly.
    pub fn tail_decreasing(&self, k: usize) -> bool {
        let h = &self.history;
        if h.len() < k {
            return false;
        }
        h[h.len() - k..].windows(2).all(|w| w[1].increment < w[0].increment)
    }
}

fn check_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::config("t_schedule", "must not be empty"));
    }
    if schedule.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::config("t_schedule", "durations must be >= 0"));
    }
    if schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("t_schedule", "durations must increase strictly"));
    }
    Ok(())
}

/// Pullback states `u(tau; tau - t_n, theta_{-tau} w, u0)` along an increasing schedule,
/// with successive L2 increments. Non-convergence is reported in the result, not raised.
pub fn compute_equilibrium(
    tau: f64,
    path: &ShiftedPath<'_>,
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    u0: &Field,
    t_schedule: &[f64],
    tol: f64,
) -> Result<EquilibriumResult> {
    spec.require_contraction()?;
    check_schedule(t_schedule)?;
    if !(tol > 0.0) {
        return Err(Error::config("tolerance", format!("must be positive, got {tol}")));
    }
    let states = t_schedule
        .par_iter()
        .map(|&t| pullback_state(t, tau, path, u0, spec, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut history = Vec::with_capacity(states.len().saturating_sub(1));
    for (i, pair) in states.windows(2).enumerate() {
        let increment = l2_norm(&pair[1].difference(&pair[0])?);
        history.push(CauchyStep {
            t: t_schedule[i + 1],
            increment,
            relative: increment / (1.0 + l2_norm(&pair[1])),
        });
    }
    let converged = history.last().is_some_and(|s| s.relative <= tol);
    let state = states.into_iter().last().expect("schedule is non-empty");
    let p = spec.nonlinearity.constants().p.max(1.0);
    Ok(EquilibriumResult {
        horizons: t_schedule.to_vec(),
        history,
        tolerance: tol,
        converged,
        l2_norm: l2_norm(&state),
        h1_norm: h1_norm(&state),
        lp_norm: lp_norm(&state, p)?,
        p,
        state,
    })
}

/// Invariance residual of a computed equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvarianceResult {
    pub t: f64,
    /// `||phi(t, tau, w, u*(tau, w)) - u*(tau + t, theta_t w)||_{L2}`.
    pub residual: f64,
    pub u_star_norm: f64,
}

impl InvarianceResult {
    /// `residual <= tol * (1 + ||u*||)`.
    pub fn passes(&self, tol: f64) -> bool {
        self.residual <= tol * (1.0 + self.u_star_norm)
    }
}

/// Pushes `u*(tau, w)` forward by `t` with the cocycle and compares it with an independent
/// pullback of `u0` over `horizon` anchored at `tau + t` on the shifted path `theta_t w`.
pub fn equilibrium_invariance(
    tau: f64,
    t: f64,
    path: &ShiftedPath<'_>,
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    u0: &Field,
    horizon: f64,
) -> Result<InvarianceResult> {
    spec.require_contraction()?;
    let u_star = pullback_state(horizon, tau, path, u0, spec, cfg)?;
    let pushed = phi(&CocycleQuery {
        t,
        tau,
        path: *path,
        u0: &u_star,
        spec,
        cfg,
    })?;
    let shifted = path.shift(t)?;
    let later = pullback_state(horizon, tau + t, &shifted, u0, spec, cfg)?;
    Ok(InvarianceResult {
        t,
        residual: l2_norm(&pushed.difference(&later)?),
        u_star_norm: l2_norm(&u_star),
    })
}

/// Least-squares fit of `log ||v_a(t) - v_b(t)||^2` against `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    /// Fitted slope; `-inf` when the difference underflows to zero inside the window.
    pub slope: f64,
    pub underflow: bool,
    /// The guaranteed rate `-(lambda - alpha3)`.
    pub bound: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

impl DecayFit {
    /// `slope <= bound + tol`.
    pub fn satisfies(&self, tol: f64) -> bool {
        self.slope <= self.bound + tol
    }
}

/// Runs two conjugated solutions from `tau` with the same driving path `theta_{-tau} w`
/// and fits the decay of their squared L2 distance over `window`, given as offsets after `tau`.
#[allow(clippy::too_many_arguments)]
pub fn fit_decay_rate(
    tau: f64,
    path: &ShiftedPath<'_>,
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    u0_a: &Field,
    u0_b: &Field,
    window: (f64, f64),
) -> Result<DecayFit> {
    spec.require_contraction()?;
    u0_a.check_same_grid(u0_b)?;
    if u0_a == u0_b {
        return Err(Error::Precondition("the two initial data coincide".into()));
    }
    let (w0, w1) = window;
    if !(0.0 <= w0 && w0 < w1) {
        return Err(Error::config(
            "window",
            format!("need 0 <= start < end, got ({w0}, {w1})"),
        ));
    }
    let n_tau = cfg.lattice_index(tau)?;
    let k0 = cfg.lattice_index(w0)?;
    let k1 = cfg.lattice_index(w1)?;
    let driving = path.shift(-cfg.lattice_time(n_tau))?;
    driving.ensure_covers(cfg.lattice_time(n_tau), cfg.lattice_time(n_tau + k1))?;
    let eps = spec.epsilon;
    let z0 = (-eps * driving.value(cfg.lattice_time(n_tau))?).exp();
    let stepper = Stepper::new(spec, *u0_a.grid(), *cfg)?;
    let mut va = u0_a.scaled(z0);
    let mut vb = u0_b.scaled(z0);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut underflow = false;
    for k in 0..=k1 {
        if k >= k0 {
            let d = l2_norm(&va.difference(&vb)?);
            if d == 0.0 {
                underflow = true;
                break;
            }
            xs.push(cfg.lattice_time(k));
            ys.push((d * d).ln());
        }
        if k == k1 {
            break;
        }
        let t = cfg.lattice_time(n_tau + k);
        let z = (-eps * driving.value(t)?).exp();
        va = stepper.step_with_factor(&va, t, z)?;
        vb = stepper.step_with_factor(&vb, t, z)?;
    }
    let alpha3 = spec.nonlinearity.constants().alpha3;
    let slope = if underflow {
        f64::NEG_INFINITY
    } else {
        least_squares_slope(&xs, &ys)
            .ok_or_else(|| Error::Precondition("decay window holds fewer than two samples".into()))?
    };
    Ok(DecayFit {
        slope,
        underflow,
        bound: -(spec.lambda - alpha3),
        window,
        samples: xs.len(),
    })
}

/// Pullback endpoints of an ensemble of initial data at a common horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttractorSample {
    pub tau: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub horizon: f64,
    #[serde(skip)]
    pub members: Vec<Field>,
    /// Largest pairwise L2 distance between members.
    pub diameter: f64,
    pub max_member_norm: f64,
}

fn check_ensemble(ensemble: &[Field]) -> Result<()> {
    let first = ensemble
        .first()
        .ok_or_else(|| Error::config("ensemble", "must not be empty"))?;
    for (i, u) in ensemble.iter().enumerate() {
        first.check_same_grid(u)?;
        if !u.is_finite() {
            return Err(Error::config(format!("ensemble[{i}]"), "member is not finite"));
        }
    }
    Ok(())
}

/// Samples the attractor at `tau` by pulling back every ensemble member over `horizon`.
pub fn approximate_attractor(
    tau: f64,
    path: &ShiftedPath<'_>,
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    ensemble: &[Field],
    horizon: f64,
) -> Result<AttractorSample> {
    check_ensemble(ensemble)?;
    let members = ensemble
        .par_iter()
        .map(|u0| pullback_state(horizon, tau, path, u0, spec, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut diameter: f64 = 0.0;
    for i in 0..members.len() {
        for j in i + 1..members.len() {
            diameter = diameter.max(l2_norm(&members[i].difference(&members[j])?));
        }
    }
    let max_member_norm = members.iter().map(l2_norm).fold(0.0, f64::max);
    Ok(AttractorSample {
        tau,
        epsilon: spec.epsilon,
        seed: path.base().seed(),
        horizon,
        members,
        diameter,
        max_member_norm,
    })
}

/// Value and witnesses of a Hausdorff semidistance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemiDistance {
    pub value: f64,
    /// Member of `a` attaining the maximum (first index on ties).
    pub from: usize,
    /// Nearest member of `b` to `a[from]` (first index on ties).
    pub to: usize,
}

/// `max_{x in a} min_{y in b} ||x - y||` in the chosen norm.
pub fn hausdorff_semidistance(a: &[Field], b: &[Field], which: NormKind) -> Result<SemiDistance> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Precondition("semidistance of an empty set".into()));
    }
    let mut best = SemiDistance {
        value: f64::NEG_INFINITY,
        from: 0,
        to: 0,
    };
    for (i, x) in a.iter().enumerate() {
        let mut nearest = (f64::INFINITY, 0);
        for (j, y) in b.iter().enumerate() {
            let d = norm(&x.difference(y)?, which);
            if d < nearest.0 {
                nearest = (d, j);
            }
        }
        if nearest.0 > best.value {
            best = SemiDistance {
                value: nearest.0,
                from: i,
                to: nearest.1,
            };
        }
    }
    Ok(best)
}

/// One `(epsilon, seed)` cell of the small-noise sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub seed: u64,
    pub dist_l2: f64,
    pub dist_h1: f64,
}

/// Per-epsilon means across seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepMean {
    pub epsilon: f64,
    pub mean_l2: f64,
    pub mean_h1: f64,
}

/// Statistical contract on one column of per-epsilon means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepContract {
    pub inversions: usize,
    /// Smallest-epsilon mean divided by largest-epsilon mean (0 when both vanish).
    pub ratio: f64,
    pub passed: bool,
}

fn sweep_contract(means: &[f64]) -> SweepContract {
    let inversions = count_inversions(means);
    let (first, last) = (means[0], means[means.len() - 1]);
    let ratio = if first == 0.0 {
        if last == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        last / first
    };
    SweepContract {
        inversions,
        ratio,
        passed: inversions <= 1 && ratio <= 0.2,
    }
}

/// Distances from noisy attractor samples to the noise-free sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub means: Vec<SweepMean>,
    pub l2: SweepContract,
    pub h1: SweepContract,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,seed,dist_l2,dist_h1\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.epsilon, r.seed, r.dist_l2, r.dist_h1));
        }
        out
    }
}

/// For each `epsilon` in a strictly decreasing ladder and each path, the L2 and H1
/// semidistances from the `epsilon` attractor sample to the `epsilon = 0` sample.
/// The noise-free sample is computed once.
pub fn upper_semicontinuity_sweep(
    tau: f64,
    paths: &[WienerPath],
    epsilon_ladder: &[f64],
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    ensemble: &[Field],
    horizon: f64,
) -> Result<SweepTable> {
    if paths.is_empty() {
        return Err(Error::config("seeds", "must not be empty"));
    }
    if epsilon_ladder.is_empty() {
        return Err(Error::config("epsilon_ladder", "must not be empty"));
    }
    if epsilon_ladder.iter().any(|e| !(0.0..=1.0).contains(e)) {
        return Err(Error::config("epsilon_ladder", "entries must lie in [0, 1]"));
    }
    if epsilon_ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::config("epsilon_ladder", "must decrease strictly"));
    }
    check_ensemble(ensemble)?;
    let deterministic = spec.with_epsilon(0.0)?;
    let reference = approximate_attractor(tau, &paths[0].view(), &deterministic, cfg, ensemble, horizon)?;
    let cells: Vec<(f64, &WienerPath)> = epsilon_ladder
        .iter()
        .flat_map(|&e| paths.iter().map(move |p| (e, p)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(epsilon, path)| {
            let sample = if epsilon == 0.0 {
                reference.clone()
            } else {
                approximate_attractor(tau, &path.view(), &spec.with_epsilon(epsilon)?, cfg, ensemble, horizon)?
            };
            Ok(SweepRow {
                epsilon,
                seed: path.seed(),
                dist_l2: hausdorff_semidistance(&sample.members, &reference.members, NormKind::L2)?.value,
                dist_h1: hausdorff_semidistance(&sample.members, &reference.members, NormKind::H1)?.value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let means: Vec<SweepMean> = rows
        .chunks(paths.len())
        .map(|chunk| SweepMean {
            epsilon: chunk[0].epsilon,
            mean_l2: mean(&chunk.iter().map(|r| r.dist_l2).collect::<Vec<_>>()),
            mean_h1: mean(&chunk.iter().map(|r| r.dist_h1).collect::<Vec<_>>()),
        })
        .collect();
    let l2 = sweep_contract(&means.iter().map(|m| m.mean_l2).collect::<Vec<_>>());
    let h1 = sweep_contract(&means.iter().map(|m| m.mean_h1).collect::<Vec<_>>());
    Ok(SweepTable { rows, means, l2, h1 })
}

/// Tail norms of a pullback endpoint outside balls of increasing radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailRow {
    pub k: f64,
    pub l2: f64,
    pub h1: f64,
    pub l2_fraction: f64,
    pub h1_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailProfile {
    pub rows: Vec<TailRow>,
    pub full_l2: f64,
    pub full_h1: f64,
    pub non_increasing: bool,
}

impl TailProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,l2_tail,h1_tail,l2_fraction,h1_fraction\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.k, r.l2, r.h1, r.l2_fraction, r.h1_fraction
            ));
        }
        out
    }
}

fn fraction(part: f64, whole: f64) -> f64 {
    if whole == 0.0 {
        0.0
    } else {
        part / whole
    }
}

/// Tail norms of `u(tau; tau - horizon, theta_{-tau} w, u0)` at each radius in `radii`.
#[allow(clippy::too_many_arguments)]
pub fn tail_profile(
    tau: f64,
    path: &ShiftedPath<'_>,
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    u0: &Field,
    horizon: f64,
    radii: &[f64],
) -> Result<TailProfile> {
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("radii", "must increase strictly"));
    }
    let u = pullback_state(horizon, tau, path, u0, spec, cfg)?;
    let (full_l2, full_h1) = (l2_norm(&u), h1_norm(&u));
    let rows = radii
        .iter()
        .map(|&k| {
            let l2 = tail_norm(&u, k, NormKind::L2)?;
            let h1 = tail_norm(&u, k, NormKind::H1)?;
            Ok(TailRow {
                k,
                l2,
                h1,
                l2_fraction: fraction(l2, full_l2),
                h1_fraction: fraction(h1, full_h1),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let non_increasing = rows.windows(2).all(|w| w[1].l2 <= w[0].l2 && w[1].h1 <= w[0].h1);
    Ok(TailProfile {
        rows,
        full_l2,
        full_h1,
        non_increasing,
    })
}

/// One threshold of the truncation diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationRow {
    pub threshold: f64,
    pub rho: f64,
    pub value: f64,
}

/// Conjugated states over the last unit of a pullback run, at every lattice step.
fn last_unit_window(
    tau: f64,
    path: &ShiftedPath<'_>,
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    u0: &Field,
    horizon: f64,
) -> Result<Vec<Field>> {
    let unit = cfg.lattice_index(1.0)?;
    let n_tau = cfg.lattice_index(tau)?;
    if cfg.lattice_index(horizon)? < unit {
        return Err(Error::config("horizon", format!("must be at least 1, got {horizon}")));
    }
    let mut window = Vec::with_capacity(unit as usize + 1);
    pullback_conjugated_observed(horizon, tau, path, u0, spec, cfg, |n, v| {
        if n >= n_tau - unit {
            window.push(v.clone());
        }
        Ok(())
    })?;
    Ok(window)
}

/// Trapezoid rule with uniform step over samples.
fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().fold(0.0, |a, v| a + v)),
    }
}

/// `int_{tau-1}^{tau} e^{rho (s - tau)} h^N sum_{|v| >= M} |v|^{2p-2} ds` for each threshold `M`,
/// with `rho = alpha1 E^{2-p} e^{-(p-2)|w(-tau)|} M^{p-2}` and `E = min_{[-1,0]} z`.
#[allow(clippy::too_many_arguments)]
pub fn truncation_ladder(
    tau: f64,
    path: &ShiftedPath<'_>,
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    u0: &Field,
    horizon: f64,
    thresholds: &[f64],
) -> Result<Vec<TruncationRow>> {
    if thresholds.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::config("thresholds", "must be positive"));
    }
    let c = spec.nonlinearity.constants();
    let (e_min, _) = z_window_bounds(path, spec.epsilon)?;
    let w_tau = path.value(-tau)?;
    let window = last_unit_window(tau, path, spec, cfg, u0, horizon)?;
    let unit = (window.len() - 1) as i64;
    let q = 2.0 * c.p - 2.0;
    Ok(thresholds
        .iter()
        .map(|&m| {
            let rho = c.alpha1 * e_min.powf(2.0 - c.p) * (-(c.p - 2.0) * w_tau.abs()).exp() * m.powf(c.p - 2.0);
            let integrand: Vec<f64> = window
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let s_minus_tau = cfg.lattice_time(i as i64 - unit);
                    (rho * s_minus_tau).exp() * superlevel_measure_integrand(v, m, q)
                })
                .collect();
            TruncationRow {
                threshold: m,
                rho,
                value: trapezoid(&integrand, cfg.dt),
            }
        })
        .collect())
}

/// [`truncation_ladder`] at a single threshold.
#[allow(clippy::too_many_arguments)]
pub fn truncation_diagnostic(
    tau: f64,
    path: &ShiftedPath<'_>,
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    u0: &Field,
    horizon: f64,
    threshold: f64,
) -> Result<f64> {
    Ok(truncation_ladder(tau, path, spec, cfg, u0, horizon, &[threshold])?[0].value)
}

/// Which bounding integral a witness pairs with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundName {
    L1,
    L2,
    L3,
    #[serde(rename = "absorbing_L")]
    AbsorbingL,
}

/// An observed quantity paired with the integral that bounds it up to an unknown constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundWitness {
    pub name: BoundName,
    pub quantity: String,
    pub integral_value: f64,
    pub observed_quantity: f64,
    /// `observed_quantity / integral_value`.
    pub fitted_constant: f64,
}

impl BoundWitness {
    fn new(name: BoundName, quantity: &str, integral_value: f64, observed_quantity: f64) -> Self {
        BoundWitness {
            name,
            quantity: quantity.to_string(),
            integral_value,
            observed_quantity,
            fitted_constant: observed_quantity / integral_value,
        }
    }
}

/// Trapezoid quadrature of `int_{-H}^0 e^{lambda s} e^{-2 eps w(s)} (G(s) + 1) ds` on the
/// path grid, with `G(s)` supplied by the caller.
pub fn absorbing_integral(
    path: &(impl NoisePath + ?Sized),
    lambda: f64,
    epsilon: f64,
    horizon: f64,
    forcing_norm_sq: impl Fn(f64) -> f64,
) -> Result<f64> {
    if !(horizon > 0.0) {
        return Err(Error::config(
            "quadrature_horizon",
            format!("must be positive, got {horizon}"),
        ));
    }
    path.ensure_covers(-horizon, 0.0)?;
    let dt = path.dt();
    let n = (horizon / dt).round() as i64;
    let h = horizon / n as f64;
    let values = (0..=n)
        .map(|k| {
            let s = -(k as f64) * h;
            let w = path.value(s)?;
            Ok((lambda * s - 2.0 * epsilon * w).exp() * (forcing_norm_sq(s) + 1.0))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(trapezoid(&values, h))
}

/// Quadrature of the absorbing-radius integral at one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbsorbingIntegral {
    pub horizon: f64,
    pub integral: f64,
    /// `sqrt(integral)`: the absorbing radius up to its generic constant.
    pub radius: f64,
}

/// `int_{-H}^0 e^{lambda s} e^{-2 eps w(s)} (||g(s + tau)||^2 + 1) ds` with `||g||` on `grid`.
pub fn absorbing_radius(
    tau: f64,
    path: &(impl NoisePath + ?Sized),
    spec: &ProblemSpec,
    grid: Grid,
    quadrature_horizon: f64,
) -> Result<AbsorbingIntegral> {
    let integral = absorbing_integral(path, spec.lambda, spec.epsilon, quadrature_horizon, |s| {
        spec.forcing_norm_sq(grid, s + tau)
    })?;
    Ok(AbsorbingIntegral {
        horizon: quadrature_horizon,
        integral,
        radius: integral.sqrt(),
    })
}

/// Pairs `||u(tau; tau - t, theta_{-tau} w, u0)||` with the absorbing integral `I`;
/// the fitted constant is `||u|| / sqrt(I)`.
#[allow(clippy::too_many_arguments)]
pub fn absorbing_witness(
    tau: f64,
    path: &ShiftedPath<'_>,
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    u0: &Field,
    pullback_horizon: f64,
    quadrature_horizon: f64,
) -> Result<BoundWitness> {
    let u = pullback_state(pullback_horizon, tau, path, u0, spec, cfg)?;
    let a = absorbing_radius(tau, path, spec, *u0.grid(), quadrature_horizon)?;
    let observed = l2_norm(&u);
    Ok(BoundWitness {
        name: BoundName::AbsorbingL,
        quantity: "l2_norm".into(),
        integral_value: a.integral,
        observed_quantity: observed,
        fitted_constant: observed / a.radius,
    })
}

/// Observed window quantities of a pullback run, each paired with the reference integral
/// `z^{-2}(-tau, w) int_{-H}^0 e^{lambda s} z^2(s, w) (||g(s + tau)||^2 + 1) ds`:
///
/// * `sup_h1`: `sup_{[tau-1, tau]} ||v||_{H1}^2`
/// * `energy`: `int_{tau-t}^{tau} e^{lambda(s-tau)} (||v||_{H1}^2 + z^{2-p} ||v||_p^p) ds`
/// * `velocity`: `int_{tau-1}^{tau} e^{lambda(s-tau)} ||v_s||^2 ds`, backward differences
/// * `lp_mass`: `int_{tau-1}^{tau} e^{lambda(s-tau)} z^{4-2p} ||v||_{2p-2}^{2p-2} ds`
#[allow(clippy::too_many_arguments)]
pub fn window_regularity_report(
    tau: f64,
    path: &ShiftedPath<'_>,
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    u0: &Field,
    horizon: f64,
    quadrature_horizon: f64,
) -> Result<Vec<BoundWitness>> {
    let unit = cfg.lattice_index(1.0)?;
    let n_tau = cfg.lattice_index(tau)?;
    let steps = cfg.lattice_index(horizon)?;
    if steps <= unit {
        return Err(Error::config("horizon", format!("must exceed 1, got {horizon}")));
    }
    let p = spec.nonlinearity.constants().p;
    let eps = spec.epsilon;
    let lambda = spec.lambda;
    let dt = cfg.dt;
    let driving = path.shift(-cfg.lattice_time(n_tau))?;
    let n_start = n_tau - steps;

    let mut energy = Vec::with_capacity(steps as usize + 1);
    let mut sup_h1: f64 = 0.0;
    let mut velocity = Vec::with_capacity(unit as usize + 1);
    let mut lp_mass = Vec::with_capacity(unit as usize + 1);
    let mut prev: Option<Field> = None;
    pullback_conjugated_observed(horizon, tau, path, u0, spec, cfg, |n, v| {
        let s_minus_tau = cfg.lattice_time(n - n_tau);
        let weight = (lambda * s_minus_tau).exp();
        let z = (-eps * driving.value(cfg.lattice_time(n))?).exp();
        let h1_sq = h1_norm(v).powi(2);
        energy.push(weight * (h1_sq + z.powf(2.0 - p) * lp_norm(v, p)?.powf(p)));
        if n >= n_tau - unit {
            sup_h1 = sup_h1.max(h1_sq);
            let prev_state = prev.as_ref().expect("window starts after the first step");
            let vs = l2_norm(&v.difference(prev_state)?) / dt;
            velocity.push(weight * vs * vs);
            let q = 2.0 * p - 2.0;
            lp_mass.push(weight * z.powf(4.0 - 2.0 * p) * lp_norm(v, q.max(1.0))?.powf(q));
        }
        if n >= n_tau - unit - 1 {
            prev = Some(v.clone());
        }
        debug_assert!(n >= n_start);
        Ok(())
    })?;

    let integral = absorbing_radius(tau, path, spec, *u0.grid(), quadrature_horizon)?.integral;
    let reference = (2.0 * eps * path.value(-tau)?).exp() * integral;
    Ok(vec![
        BoundWitness::new(BoundName::L1, "sup_h1", reference, sup_h1),
        BoundWitness::new(BoundName::L1, "energy", reference, trapezoid(&energy, dt)),
        BoundWitness::new(BoundName::L3, "velocity", reference, trapezoid(&velocity, dt)),
        BoundWitness::new(BoundName::L2, "lp_mass", reference, trapezoid(&lp_mass, dt)),
    ])
}
