//! Acceptance suite on the desk configuration (1D: L = 8, m = 129, dt = 1e-3).
//!
//! Runs every criterion, prints one PASS/FAIL line each, and exits non-zero
//! when any criterion fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use rdslab_core::attractor::{
    absorbing_radius, absorbing_witness, compute_equilibrium, equilibrium_invariance, fit_decay_rate, tail_profile,
    truncation_ladder, upper_semicontinuity_sweep,
};
use rdslab_core::cocycle::{phi, pullback_state, verify_cocycle_property, CocycleQuery};
use rdslab_core::field::{h1_norm, l2_norm, lp_norm, Field, Grid};
use rdslab_core::model::{canonical_cubic, canonical_forcing, ProblemSpec, ZeroNonlinearity};
use rdslab_core::noise::{sample_path, NoisePath, WienerPath};
use rdslab_core::solver::{spatial_convergence, temporal_convergence, SolverConfig, Stepper};
use rdslab_core::stats::ks_standard_normal;

const L: f64 = 8.0;
const M: usize = 129;
const DT: f64 = 1e-3;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Outcome {
            passed,
            detail: detail.into(),
        }
    }
}

type Check = fn() -> Result<Outcome, rdslab_core::Error>;

fn desk(lambda: f64, alpha3: f64, scale: f64, eps: f64, amplitude: f64, width: f64) -> ProblemSpec {
    ProblemSpec::new(
        lambda,
        eps,
        1,
        L,
        Arc::new(canonical_cubic(alpha3, scale).unwrap()),
        Arc::new(canonical_forcing(amplitude, 0.1, width).unwrap()),
    )
    .unwrap()
}

fn canonical(eps: f64) -> ProblemSpec {
    desk(2.0, 1.0, 1.0, eps, 2.0, 1.0)
}

fn cfg() -> SolverConfig {
    SolverConfig::new(DT)
}

fn grid() -> Grid {
    Grid::new(1, L, M).unwrap()
}

fn bump(g: Grid, amplitude: f64, center: f64, width: f64) -> Field {
    Field::from_fn(g, |x| amplitude * (-((x[0] - center) / width).powi(2)).exp())
}

fn cocycle() -> Result<Outcome, rdslab_core::Error> {
    let spec = canonical(1.0);
    let g = grid();
    let cfg = cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let cases: Vec<(u64, f64, f64, f64, f64, f64)> = (0..20)
        .map(|_| {
            let seed = rng.random_range(0..1_000_000u64);
            let t = rng.random_range(0..=1500) as f64 * DT;
            let s = rng.random_range(0..=1500) as f64 * DT;
            let tau = rng.random_range(-2000..=2000) as f64 * DT;
            let amp = rng.random_range(-2.0..2.0);
            let center = rng.random_range(-3.0..3.0);
            (seed, t, s, tau, amp, center)
        })
        .collect();
    let residuals = cases
        .par_iter()
        .map(|&(seed, t, s, tau, amp, center)| {
            let path = sample_path(seed, -3.0, 6.0, DT)?;
            let u0 = bump(g, amp, center, 1.5);
            let identity = phi(&CocycleQuery {
                t: 0.0,
                tau,
                path: path.view(),
                u0: &u0,
                spec: &spec,
                cfg: &cfg,
            })?;
            let residual = verify_cocycle_property(t, s, tau, &path.view(), &u0, &spec, &cfg)?;
            Ok((identity == u0, residual))
        })
        .collect::<Result<Vec<_>, rdslab_core::Error>>()?;
    let identity = residuals.iter().all(|r| r.0);
    let worst = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(Outcome::new(
        identity && worst <= 1e-10,
        format!("identity bitwise: {identity}; max composition residual {worst:.3e} over 20 cases"),
    ))
}

fn contraction_rate() -> Result<Outcome, rdslab_core::Error> {
    let spec = canonical(1.0);
    let g = grid();
    let cfg = cfg();
    let a = bump(g, 1.5, -1.0, 1.0);
    let b = bump(g, -1.0, 2.0, 2.0);
    let fits = [11u64, 12, 13, 14]
        .par_iter()
        .map(|&seed| {
            let path = sample_path(seed, -1.0, 7.0, DT)?;
            fit_decay_rate(0.0, &path.view(), &spec, &cfg, &a, &b, (1.0, 6.0))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let passed = fits.iter().all(|f| !f.underflow && f.satisfies(0.1));
    let slopes: Vec<String> = fits.iter().map(|f| format!("{:.3}", f.slope)).collect();
    Ok(Outcome::new(
        passed,
        format!("slopes [{}] vs bound -1 + 0.1", slopes.join(", ")),
    ))
}

fn unique_equilibrium() -> Result<Outcome, rdslab_core::Error> {
    let spec = desk(1.5, 1.0, 1.0, 0.5, 2.0, 1.0);
    let g = grid();
    let cfg = cfg();
    let path = sample_path(7, -41.0, 1.0, DT)?;
    let schedule: Vec<f64> = (1..=8).map(|k| 5.0 * k as f64).collect();
    let a = compute_equilibrium(
        0.0,
        &path.view(),
        &spec,
        &cfg,
        &bump(g, 3.0, -2.0, 1.0),
        &schedule,
        1e-6,
    )?;
    let b = compute_equilibrium(
        0.0,
        &path.view(),
        &spec,
        &cfg,
        &bump(g, -2.0, 3.0, 2.0),
        &schedule,
        1e-6,
    )?;
    let distance = l2_norm(&a.state.difference(&b.state)?) / (1.0 + a.l2_norm);
    let monotone = a.tail_decreasing(5) && b.tail_decreasing(5);
    let incs: Vec<String> = a.history.iter().map(|h| format!("{:.1e}", h.increment)).collect();
    Ok(Outcome::new(
        distance <= 1e-6 && monotone && a.converged && b.converged,
        format!(
            "relative distance {distance:.2e}; last-5 decreasing: {monotone}; increments [{}]",
            incs.join(", ")
        ),
    ))
}

fn invariance() -> Result<Outcome, rdslab_core::Error> {
    let spec = canonical(1.0);
    let g = grid();
    let cfg = cfg();
    let u0 = bump(g, 1.0, 0.0, 1.0);
    let results = [21u64, 22, 23, 24]
        .par_iter()
        .map(|&seed| {
            let path = sample_path(seed, -31.0, 3.0, DT)?;
            equilibrium_invariance(0.0, 2.0, &path.view(), &spec, &cfg, &u0, 30.0)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let passed = results.iter().all(|r| r.passes(1e-5));
    let worst = results
        .iter()
        .map(|r| r.residual / (1.0 + r.u_star_norm))
        .fold(0.0, f64::max);
    Ok(Outcome::new(passed, format!("max residual / (1 + |u*|) = {worst:.2e}")))
}

fn regularity() -> Result<Outcome, rdslab_core::Error> {
    let spec = canonical(1.0);
    let cfg = cfg();
    let path = sample_path(31, -31.0, 1.0, DT)?;
    let norms = [grid(), grid().refined()]
        .par_iter()
        .map(|&g| {
            let u = pullback_state(30.0, 0.0, &path.view(), &bump(g, 1.0, 0.0, 1.0), &spec, &cfg)?;
            Ok((h1_norm(&u), lp_norm(&u, 4.0)?))
        })
        .collect::<Result<Vec<_>, rdslab_core::Error>>()?;
    let (h_c, p_c) = norms[0];
    let (h_f, p_f) = norms[1];
    let dh = (h_c - h_f).abs() / h_f;
    let dp = (p_c - p_f).abs() / p_f;
    let finite = [h_c, h_f, p_c, p_f].iter().all(|v| v.is_finite());
    Ok(Outcome::new(
        finite && dh <= 0.01 && dp <= 0.01,
        format!("H1 {h_c:.6} -> {h_f:.6} ({dh:.2e}); L4 {p_c:.6} -> {p_f:.6} ({dp:.2e})"),
    ))
}

fn tail_smallness() -> Result<Outcome, rdslab_core::Error> {
    let spec = desk(10.0, 1.0, 1.0, 1.0, 2.0, 1.0);
    let g = grid();
    let path = sample_path(41, -21.0, 1.0, DT)?;
    let radii = [0.0, L / 4.0, L / 2.0, 3.0 * L / 4.0, L];
    let profile = tail_profile(0.0, &path.view(), &spec, &cfg(), &bump(g, 1.0, 0.0, 1.0), 20.0, &radii)?;
    let half = profile.rows[2];
    Ok(Outcome::new(
        profile.non_increasing && half.l2_fraction <= 1e-4 && half.h1_fraction <= 1e-4,
        format!(
            "k = L/2 fractions: L2 {:.2e}, H1 {:.2e}; non-increasing: {}",
            half.l2_fraction, half.h1_fraction, profile.non_increasing
        ),
    ))
}

fn truncation() -> Result<Outcome, rdslab_core::Error> {
    let spec = desk(2.0, 1.0, 0.1, 0.1, 40.0, 1.0);
    let g = grid();
    let path = sample_path(51, -11.0, 1.0, DT)?;
    let rows = truncation_ladder(
        0.0,
        &path.view(),
        &spec,
        &cfg(),
        &Field::zeros(g),
        10.0,
        &[1.0, 2.0, 4.0, 8.0],
    )?;
    let decreasing = rows.windows(2).all(|w| w[1].value < w[0].value);
    let last = rows[3].value;
    let values: Vec<String> = rows.iter().map(|r| format!("{:.3e}", r.value)).collect();
    Ok(Outcome::new(
        decreasing && last <= 1e-8,
        format!("M = 1, 2, 4, 8 -> [{}]", values.join(", ")),
    ))
}

fn upper_semicontinuity() -> Result<Outcome, rdslab_core::Error> {
    let spec = canonical(1.0);
    let g = grid();
    let paths = (61..69)
        .map(|seed| sample_path(seed, -21.0, 1.0, DT))
        .collect::<Result<Vec<_>, _>>()?;
    let ensemble = vec![bump(g, 1.0, 0.0, 1.0), bump(g, -2.0, 2.0, 1.0), Field::zeros(g)];
    let table = upper_semicontinuity_sweep(0.0, &paths, &[0.5, 0.25, 0.1, 0.05], &spec, &cfg(), &ensemble, 20.0)?;
    let h1: Vec<String> = table.means.iter().map(|m| format!("{:.3e}", m.mean_h1)).collect();
    let l2: Vec<String> = table.means.iter().map(|m| format!("{:.3e}", m.mean_l2)).collect();
    Ok(Outcome::new(
        table.l2.passed && table.h1.passed,
        format!(
            "H1 means [{}] ratio {:.3}; L2 means [{}] ratio {:.3}",
            h1.join(", "),
            table.h1.ratio,
            l2.join(", "),
            table.l2.ratio
        ),
    ))
}

fn deterministic_limit() -> Result<Outcome, rdslab_core::Error> {
    let spec = canonical(0.0);
    let g = grid();
    let cfg = cfg();
    let u0 = bump(g, 1.5, 0.5, 1.0);
    let path = sample_path(71, -6.0, 3.0, DT)?;
    let forward = phi(&CocycleQuery {
        t: 2.0,
        tau: 0.5,
        path: path.view(),
        u0: &u0,
        spec: &spec,
        cfg: &cfg,
    })?;
    let stepper = Stepper::new(&spec, g, cfg)?;
    let reference = stepper.advance_deterministic(&u0, 500, 2500)?;
    let pulled = pullback_state(5.0, 1.0, &path.view(), &u0, &spec, &cfg)?;
    let pulled_ref = stepper.advance_deterministic(&u0, -4000, 1000)?;
    let bitwise = forward == reference && pulled == pulled_ref;
    Ok(Outcome::new(
        bitwise,
        format!("forward and pullback runs bitwise equal: {bitwise}"),
    ))
}

fn scheme_verification() -> Result<Outcome, rdslab_core::Error> {
    let spec = canonical(0.0);
    let g = Grid::new(1, L, 65)?;
    let v0 = bump(g, 1.0, 0.0, 1.5);
    let path = sample_path(81, -1.0, 2.0, 0.01)?;
    let temporal = temporal_convergence(&v0, 0.0, 1.0, &path, &spec, &cfg(), &[0.01, 0.005, 0.0025, 0.00125])?;
    let t_order = temporal.observed_order().unwrap_or(f64::NAN);

    let fine_cfg = SolverConfig::new(1e-4);
    let fine_path = sample_path(81, -1.0, 1.0, 1e-4)?;
    let spatial = spatial_convergence(
        |g| bump(*g, 1.0, 0.0, 1.5),
        Grid::new(1, L, 33)?,
        3,
        0.0,
        0.5,
        &fine_path,
        &spec,
        &fine_cfg,
    )?;
    let s_order = spatial.observed_order().unwrap_or(f64::NAN);

    // eigenmode: one step multiplies sin(pi j / (m - 1)) by 1 / (1 + dt (lambda + mu1))
    let heat = ProblemSpec::new(
        2.0,
        0.0,
        1,
        L,
        Arc::new(ZeroNonlinearity),
        Arc::new(canonical_forcing(0.0, 0.1, 1.0)?),
    )?;
    let gm = grid();
    let h = gm.spacing();
    let mu1 = 4.0 / (h * h) * (std::f64::consts::PI * h / (4.0 * L)).sin().powi(2);
    let mode = Field::from_fn(gm, |x| (std::f64::consts::PI * (x[0] + L) / (2.0 * L)).sin());
    let stepped = Stepper::new(&heat, gm, cfg())?.deterministic_step(&mode, 0.0)?;
    let expected = mode.scaled(1.0 / (1.0 + DT * (2.0 + mu1)));
    let eig_err = l2_norm(&stepped.difference(&expected)?) / l2_norm(&expected);

    let passed = (t_order - 1.0).abs() <= 0.3 && (s_order - 2.0).abs() <= 0.6 && eig_err <= 1e-10;
    Ok(Outcome::new(
        passed,
        format!("temporal order {t_order:.3}, spatial order {s_order:.3}, eigenmode relative error {eig_err:.1e}"),
    ))
}

fn absorbing() -> Result<Outcome, rdslab_core::Error> {
    let spec = canonical(1.0);
    let g = grid();
    let cfg = cfg();
    let path = sample_path(91, -81.0, 1.0, DT)?;
    let i40 = absorbing_radius(0.0, &path, &spec, g, 40.0)?;
    let i80 = absorbing_radius(0.0, &path, &spec, g, 80.0)?;
    let quad_change = (i40.integral - i80.integral).abs() / i80.integral;
    let u0 = bump(g, 2.0, 0.0, 1.0);
    let w20 = absorbing_witness(0.0, &path.view(), &spec, &cfg, &u0, 20.0, 80.0)?;
    let w40 = absorbing_witness(0.0, &path.view(), &spec, &cfg, &u0, 40.0, 80.0)?;
    let c_change = (w20.fitted_constant - w40.fitted_constant).abs() / w40.fitted_constant;
    let bounded = w40.observed_quantity <= w40.fitted_constant * w40.integral_value.sqrt() * (1.0 + 1e-12);
    Ok(Outcome::new(
        quad_change <= 0.01 && c_change <= 0.2 && w40.fitted_constant.is_finite() && bounded,
        format!(
            "integral H=40 {:.6e}, H=80 {:.6e} ({quad_change:.1e}); fitted c {:.4} -> {:.4} ({c_change:.1e})",
            i40.integral, i80.integral, w20.fitted_constant, w40.fitted_constant
        ),
    ))
}

fn noise_statistics() -> Result<Outcome, rdslab_core::Error> {
    let dt = 0.01;
    let increments = (0..10_000u64)
        .into_par_iter()
        .map(|seed| {
            let p = sample_path(seed, -dt, dt, dt)?;
            Ok(p.value(dt)? / dt.sqrt())
        })
        .collect::<Result<Vec<_>, rdslab_core::Error>>()?;
    let ks = ks_standard_normal(&increments);

    let path = sample_path(3, -10.0, 10.0, dt)?;
    let mut exact = true;
    for (s, t) in [(1.5, -2.25), (-3.0, 0.75), (2.0, 2.0)] {
        let composed = path.shift(s)?.shift(t)?;
        let direct = path.shift(s + t)?;
        for k in -200..=200 {
            let r = k as f64 * dt;
            if let (Ok(a), Ok(b)) = (composed.value(r), direct.value(r)) {
                exact &= a.to_bits() == b.to_bits();
            }
        }
    }
    let zero: WienerPath = WienerPath::zero(-1.0, 1.0, dt)?;
    exact &= zero.shift(0.5)?.value(0.25)? == 0.0;
    Ok(Outcome::new(
        ks.passes(0.01) && exact,
        format!(
            "KS D = {:.4}, p = {:.3}; shift group exact: {exact}",
            ks.statistic, ks.p_value
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 12] = [
        ("cocycle identity and composition", cocycle),
        ("contraction rate", contraction_rate),
        ("unique random equilibrium", unique_equilibrium),
        ("equilibrium invariance", invariance),
        ("equilibrium regularity", regularity),
        ("tail smallness", tail_smallness),
        ("truncation diagnostic", truncation),
        ("upper semicontinuity", upper_semicontinuity),
        ("deterministic limit", deterministic_limit),
        ("scheme verification", scheme_verification),
        ("absorbing-set witness", absorbing),
        ("noise statistics", noise_statistics),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        let status = if outcome.passed { "PASS" } else { "FAIL" };
        if !outcome.passed {
            failures += 1;
        }
        println!(
            "criterion {:>2} {status} {name} ({:.1}s): {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            outcome.detail
        );
    }
    println!("acceptance: {} of 12 criteria passed", 12 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
