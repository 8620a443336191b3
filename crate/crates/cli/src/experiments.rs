//! One function per experiment. Each returns its results, named checks, and CSV series.

use std::cell::RefCell;

use serde::Serialize;
use serde_json::{json, Value};

use rdslab_core::attractor::{
    absorbing_radius, absorbing_witness, compute_equilibrium, fit_decay_rate, tail_profile, truncation_ladder,
    upper_semicontinuity_sweep,
};
use rdslab_core::cocycle::{phi, phi_trajectory, pullback_state, verify_cocycle_property, CocycleQuery};
use rdslab_core::field::{h1_norm, l2_norm, lp_norm};
use rdslab_core::model::check_hypotheses;
use rdslab_core::noise::{sample_path, NoisePath};
use rdslab_core::{Field, Grid, PathMetadata, ProblemSpec, SolverConfig, WienerPath};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::RunError;

/// A pass/fail contract evaluated by an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

impl Check {
    fn flag(name: &str, passed: bool) -> Self {
        Check {
            name: name.into(),
            passed,
            value: None,
            threshold: None,
        }
    }

    /// Passes when `value <= threshold`.
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            passed: value <= threshold,
            value: Some(value),
            threshold: Some(threshold),
        }
    }
}

pub struct Outcome {
    pub results: Value,
    pub checks: Vec<Check>,
    /// `(file name, contents)`.
    pub csv: Vec<(String, String)>,
    /// Every noise path the experiment sampled, in sampling order.
    pub noise: Vec<PathMetadata>,
}

fn core(e: rdslab_core::Error) -> RunError {
    RunError::from(e)
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    spec: ProblemSpec,
    grid: Grid,
    solver: SolverConfig,
    ensemble: Vec<Field>,
    sampled: RefCell<Vec<PathMetadata>>,
}

impl Context<'_> {
    fn path(&self, seed: u64) -> Result<WienerPath, RunError> {
        let [lo, hi] = self.cfg.noise.window;
        let path = sample_path(seed, lo, hi, self.cfg.noise.dt)
            .map_err(core)?
            .on_grid(self.solver.dt)
            .map_err(|e| RunError::Config(format!("solver.dt: {e}")))?;
        self.sampled.borrow_mut().push(path.metadata());
        Ok(path)
    }

    fn u0(&self) -> &Field {
        &self.ensemble[0]
    }

    fn p(&self) -> f64 {
        self.spec.nonlinearity.constants().p.max(1.0)
    }

    fn norms(&self, u: &Field) -> Result<Value, RunError> {
        Ok(json!({
            "l2": l2_norm(u),
            "h1": h1_norm(u),
            "lp": lp_norm(u, self.p()).map_err(core)?,
            "p": self.p(),
            "max_abs": u.max_abs(),
        }))
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let spec = cfg.problem_spec()?;
    let grid = cfg.grid()?;
    let ctx = Context {
        cfg,
        spec,
        grid,
        solver: cfg.solver_config(),
        ensemble: cfg.initial_ensemble(grid)?,
        sampled: RefCell::new(Vec::new()),
    };
    ctx.solver
        .validate()
        .map_err(|e| RunError::Config(format!("solver: {e}")))?;
    let mut outcome = match cfg.experiment {
        ExperimentKind::Simulate => simulate(&ctx),
        ExperimentKind::Pullback => pullback(&ctx),
        ExperimentKind::Equilibrium => equilibrium(&ctx),
        ExperimentKind::DecayRate => decay_rate(&ctx),
        ExperimentKind::Tail => tail(&ctx),
        ExperimentKind::Truncation => truncation(&ctx),
        ExperimentKind::UpperSemi => upper_semi(&ctx),
        ExperimentKind::CocycleTest => cocycle_test(&ctx),
        ExperimentKind::CheckHypotheses => hypotheses(&ctx),
        ExperimentKind::Absorbing => absorbing(&ctx),
    }?;
    outcome.noise = ctx.sampled.take();
    Ok(outcome)
}

fn simulate(ctx: &Context<'_>) -> Result<Outcome, RunError> {
    let c = ctx.cfg.simulate.as_ref().expect("resolved");
    let path = ctx.path(ctx.cfg.noise.seed)?;
    let traj = phi_trajectory(&CocycleQuery {
        t: c.horizon,
        tau: c.tau,
        path: path.view(),
        u0: ctx.u0(),
        spec: &ctx.spec,
        cfg: &ctx.solver,
    })
    .map_err(core)?;
    let (t_end, last) = traj.last().expect("at least the initial state");
    let finite = traj.states().iter().all(Field::is_finite);
    Ok(Outcome {
        results: json!({
            "t_start": c.tau,
            "t_end": t_end,
            "stored_states": traj.len(),
            "final": ctx.norms(last)?,
        }),
        checks: vec![Check::flag("finite_states", finite)],
        csv: vec![
            (
                "simulate_norms.csv".into(),
                traj.norms_csv(ctx.p(), &c.tail_radii).map_err(core)?,
            ),
            ("simulate_state.csv".into(), last.to_csv()),
        ],
        noise: vec![],
    })
}

fn pullback(ctx: &Context<'_>) -> Result<Outcome, RunError> {
    let c = ctx.cfg.pullback.as_ref().expect("resolved");
    let path = ctx.path(ctx.cfg.noise.seed)?;
    let u = pullback_state(c.horizon, c.tau, &path.view(), ctx.u0(), &ctx.spec, &ctx.solver).map_err(core)?;
    Ok(Outcome {
        noise: vec![],
        results: json!({ "tau": c.tau, "horizon": c.horizon, "state": ctx.norms(&u)? }),
        checks: vec![Check::flag("finite_state", u.is_finite())],
        csv: vec![("pullback_state.csv".into(), u.to_csv())],
    })
}

fn equilibrium(ctx: &Context<'_>) -> Result<Outcome, RunError> {
    let c = ctx.cfg.equilibrium.as_ref().expect("resolved");
    let path = ctx.path(ctx.cfg.noise.seed)?;
    let r = compute_equilibrium(
        c.tau,
        &path.view(),
        &ctx.spec,
        &ctx.solver,
        ctx.u0(),
        &c.schedule,
        c.tolerance,
    )
    .map_err(core)?;
    let mut history = String::from("t,increment,relative\n");
    for h in &r.history {
        history.push_str(&format!("{},{},{}\n", h.t, h.increment, h.relative));
    }
    let tail_steps = c.monotone_tail.min(r.history.len());
    let checks = vec![
        Check::at_most(
            "converged",
            r.history.last().map_or(f64::INFINITY, |h| h.relative),
            c.tolerance,
        ),
        Check::flag("history_tail_decreasing", r.tail_decreasing(tail_steps)),
        Check::flag("norms_finite", r.h1_norm.is_finite() && r.lp_norm.is_finite()),
    ];
    Ok(Outcome {
        results: serde_json::to_value(&r).expect("serializable"),
        checks,
        csv: vec![
            ("equilibrium_history.csv".into(), history),
            ("equilibrium_state.csv".into(), r.state.to_csv()),
        ],
        noise: vec![],
    })
}

fn decay_rate(ctx: &Context<'_>) -> Result<Outcome, RunError> {
    let c = ctx.cfg.decay_rate.as_ref().expect("resolved");
    let path = ctx.path(ctx.cfg.noise.seed)?;
    let fit = fit_decay_rate(
        c.tau,
        &path.view(),
        &ctx.spec,
        &ctx.solver,
        &ctx.ensemble[0],
        &ctx.ensemble[1],
        (c.window[0], c.window[1]),
    )
    .map_err(core)?;
    Ok(Outcome {
        results: serde_json::to_value(&fit).expect("serializable"),
        checks: vec![Check::at_most("decay_rate", fit.slope, fit.bound + c.tolerance)],
        csv: vec![],
        noise: vec![],
    })
}

fn tail(ctx: &Context<'_>) -> Result<Outcome, RunError> {
    let c = ctx.cfg.tail.as_ref().expect("resolved");
    let radii = c.radii.as_ref().expect("resolved");
    let k = c.check_radius.expect("resolved");
    let path = ctx.path(ctx.cfg.noise.seed)?;
    let profile =
        tail_profile(c.tau, &path.view(), &ctx.spec, &ctx.solver, ctx.u0(), c.horizon, radii).map_err(core)?;
    let row = profile
        .rows
        .iter()
        .find(|r| r.k == k)
        .copied()
        .expect("check radius is one of the radii");
    Ok(Outcome {
        noise: vec![],
        results: serde_json::to_value(&profile).expect("serializable"),
        checks: vec![
            Check::flag("tail_non_increasing", profile.non_increasing),
            Check::at_most("tail_fraction_l2", row.l2_fraction, c.max_fraction),
            Check::at_most("tail_fraction_h1", row.h1_fraction, c.max_fraction),
        ],
        csv: vec![("tail.csv".into(), profile.to_csv())],
    })
}

fn truncation(ctx: &Context<'_>) -> Result<Outcome, RunError> {
    let c = ctx.cfg.truncation.as_ref().expect("resolved");
    let path = ctx.path(ctx.cfg.noise.seed)?;
    let rows = truncation_ladder(
        c.tau,
        &path.view(),
        &ctx.spec,
        &ctx.solver,
        ctx.u0(),
        c.horizon,
        &c.thresholds,
    )
    .map_err(core)?;
    let mut csv = String::from("threshold,rho,value\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{}\n", r.threshold, r.rho, r.value));
    }
    let decreasing = rows.windows(2).all(|w| w[1].value < w[0].value);
    Ok(Outcome {
        noise: vec![],
        results: json!({ "rows": rows }),
        checks: vec![
            Check::flag("strictly_decreasing", decreasing),
            Check::at_most("final_value", rows[rows.len() - 1].value, c.final_max),
        ],
        csv: vec![("truncation.csv".into(), csv)],
    })
}

fn upper_semi(ctx: &Context<'_>) -> Result<Outcome, RunError> {
    let c = ctx.cfg.upper_semi.as_ref().expect("resolved");
    let paths = c
        .seeds
        .as_ref()
        .expect("resolved")
        .iter()
        .map(|&s| ctx.path(s))
        .collect::<Result<Vec<_>, _>>()?;
    let table = upper_semicontinuity_sweep(
        c.tau,
        &paths,
        &c.epsilon_ladder,
        &ctx.spec,
        &ctx.solver,
        &ctx.ensemble,
        c.horizon,
    )
    .map_err(core)?;
    Ok(Outcome {
        noise: vec![],
        results: serde_json::to_value(&table).expect("serializable"),
        checks: vec![
            Check::flag("l2_contract", table.l2.passed),
            Check::flag("h1_contract", table.h1.passed),
        ],
        csv: vec![("upper_semi.csv".into(), table.to_csv())],
    })
}

fn cocycle_test(ctx: &Context<'_>) -> Result<Outcome, RunError> {
    let c = ctx.cfg.cocycle_test.as_ref().expect("resolved");
    let path = ctx.path(ctx.cfg.noise.seed)?;
    let identity = phi(&CocycleQuery {
        t: 0.0,
        tau: c.tau,
        path: path.view(),
        u0: ctx.u0(),
        spec: &ctx.spec,
        cfg: &ctx.solver,
    })
    .map_err(core)?;
    let residual =
        verify_cocycle_property(c.t, c.s, c.tau, &path.view(), ctx.u0(), &ctx.spec, &ctx.solver).map_err(core)?;
    Ok(Outcome {
        results: json!({ "t": c.t, "s": c.s, "tau": c.tau, "residual": residual }),
        checks: vec![
            Check::flag("identity_bitwise", &identity == ctx.u0()),
            Check::at_most("composition_residual", residual, c.tolerance),
        ],
        csv: vec![],
        noise: vec![],
    })
}

fn hypotheses(ctx: &Context<'_>) -> Result<Outcome, RunError> {
    let c = ctx.cfg.check_hypotheses.as_ref().expect("resolved");
    let report = check_hypotheses(&ctx.spec, c.n_samples, c.s_range).map_err(core)?;
    let checks = report
        .checks
        .iter()
        .map(|h| Check {
            name: format!("hypothesis_{}", h.name),
            passed: h.passed,
            value: Some(h.worst_slack),
            threshold: None,
        })
        .collect();
    Ok(Outcome {
        results: serde_json::to_value(&report).expect("serializable"),
        checks,
        csv: vec![],
        noise: vec![],
    })
}

fn absorbing(ctx: &Context<'_>) -> Result<Outcome, RunError> {
    let c = ctx.cfg.absorbing.as_ref().expect("resolved");
    let path = ctx.path(ctx.cfg.noise.seed)?;
    let (h, p) = (c.quadrature_horizon, c.pullback_horizon);
    let short = absorbing_radius(c.tau, &path, &ctx.spec, ctx.grid, h).map_err(core)?;
    let long = absorbing_radius(c.tau, &path, &ctx.spec, ctx.grid, 2.0 * h).map_err(core)?;
    let quad_change = (short.integral - long.integral).abs() / long.integral;
    let w1 = absorbing_witness(c.tau, &path.view(), &ctx.spec, &ctx.solver, ctx.u0(), p, 2.0 * h).map_err(core)?;
    let w2 =
        absorbing_witness(c.tau, &path.view(), &ctx.spec, &ctx.solver, ctx.u0(), 2.0 * p, 2.0 * h).map_err(core)?;
    let c_change = (w1.fitted_constant - w2.fitted_constant).abs() / w2.fitted_constant;
    let bound = w2.fitted_constant * w2.integral_value.sqrt();
    Ok(Outcome {
        results: json!({
            "quadrature": [short, long],
            "witnesses": [w1, w2],
            "path_window": path.window(),
        }),
        checks: vec![
            Check::at_most("quadrature_stability", quad_change, 0.01),
            Check::at_most("fitted_constant_stability", c_change, 0.2),
            Check::at_most("absorption_bound", w2.observed_quantity, bound * (1.0 + 1e-12)),
        ],
        csv: vec![],
        noise: vec![],
    })
}
