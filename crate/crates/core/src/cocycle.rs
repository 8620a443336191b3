//! The cocycle generated by the stochastic equation,
//!
//! ```text
//! phi(t, tau, w, u0) = z^{-1}(t + tau, theta_{-tau} w) v(t + tau; tau, theta_{-tau} w, z(tau, theta_{-tau} w) u0)
//! ```
//!
//! where `v` solves the conjugated equation driven by the shifted path. All
//! times snap to the solver lattice, so the composition identity holds up to
//! the rounding of one conjugate/unconjugate round trip.

use crate::error::{Error, Result};
use crate::field::{l2_norm, Field, Trajectory};
use crate::model::ProblemSpec;
use crate::noise::{NoisePath, ShiftedPath};
use crate::solver::{SolverConfig, Stepper};

/// Arguments of one cocycle evaluation. The noise intensity is `spec.epsilon`.
#[derive(Debug, Clone, Copy)]
pub struct CocycleQuery<'a> {
    pub t: f64,
    pub tau: f64,
    pub path: ShiftedPath<'a>,
    pub u0: &'a Field,
    pub spec: &'a ProblemSpec,
    pub cfg: &'a SolverConfig,
}

/// Lattice index of a non-negative duration.
fn duration_steps(cfg: &SolverConfig, t: f64, name: &str) -> Result<i64> {
    if !(t >= 0.0) {
        return Err(Error::config(name, format!("duration must be >= 0, got {t}")));
    }
    cfg.lattice_index(t)
        .map_err(|_| Error::config(name, format!("{t} is not a multiple of dt = {}", cfg.dt)))
}

/// Scales `v` by `exp(exponent)`.
fn rescale(v: &Field, exponent: f64) -> Field {
    v.scaled(exponent.exp())
}

/// Integrates the conjugated equation driven by `driving` over lattice `[n0, n1]` from `v0`.
fn run_conjugated(
    v0: &Field,
    n0: i64,
    n1: i64,
    driving: &ShiftedPath<'_>,
    spec: &ProblemSpec,
    cfg: &SolverConfig,
) -> Result<Field> {
    let stepper = Stepper::new(spec, *v0.grid(), *cfg)?;
    stepper.advance(v0, n0, n1, driving)
}

/// `phi(t, tau, w, u0)`.
pub fn phi(q: &CocycleQuery<'_>) -> Result<Field> {
    let cfg = q.cfg;
    let steps = duration_steps(cfg, q.t, "t")?;
    let n0 = cfg.lattice_index(q.tau)?;
    if steps == 0 {
        return Ok(q.u0.clone());
    }
    let n1 = n0 + steps;
    let eps = q.spec.epsilon;
    let driving = q.path.shift(-cfg.lattice_time(n0))?;
    driving.ensure_covers(cfg.lattice_time(n0), cfg.lattice_time(n1))?;

    // v0 = z(tau, theta_{-tau} w) u0
    let v0 = rescale(q.u0, -eps * driving.value(cfg.lattice_time(n0))?);
    let v = run_conjugated(&v0, n0, n1, &driving, q.spec, cfg)?;
    // u = z^{-1}(t + tau, theta_{-tau} w) v
    Ok(rescale(&v, eps * driving.value(cfg.lattice_time(n1))?))
}

/// The states `phi(k dt, tau, w, u0)` for `k = 0, stride, 2 stride, ...` and the final one,
/// stamped with the absolute times `tau + k dt`. The final state equals [`phi`] bitwise.
pub fn phi_trajectory(q: &CocycleQuery<'_>) -> Result<Trajectory> {
    let cfg = q.cfg;
    let steps = duration_steps(cfg, q.t, "t")?;
    let n0 = cfg.lattice_index(q.tau)?;
    let n1 = n0 + steps;
    let stride = cfg.store_stride.max(1) as i64;
    let mut traj = Trajectory::new(cfg.store_stride);
    if steps == 0 {
        traj.push(cfg.lattice_time(n0), q.u0.clone())?;
        return Ok(traj);
    }
    let eps = q.spec.epsilon;
    let driving = q.path.shift(-cfg.lattice_time(n0))?;
    driving.ensure_covers(cfg.lattice_time(n0), cfg.lattice_time(n1))?;
    let v0 = rescale(q.u0, -eps * driving.value(cfg.lattice_time(n0))?);
    let stepper = Stepper::new(q.spec, *q.u0.grid(), *cfg)?;
    stepper.advance_observed(&v0, n0, n1, &driving, |n, v| {
        if n == n0 {
            return traj.push(cfg.lattice_time(n), q.u0.clone());
        }
        if (n - n0) % stride == 0 || n == n1 {
            let t = cfg.lattice_time(n);
            traj.push(t, rescale(v, eps * driving.value(t)?))?;
        }
        Ok(())
    })?;
    Ok(traj)
}

/// Runs the conjugated equation for the pullback problem: driving path
/// `theta_{-tau} w`, lattice interval `[tau - t, tau]`, initial datum
/// `z(tau - t, theta_{-tau} w) u0`. Every state (in `v` variables) is passed to
/// `observe(n, v)`; the state at `tau` is returned.
pub(crate) fn pullback_conjugated_observed(
    t: f64,
    tau: f64,
    path: &ShiftedPath<'_>,
    u0: &Field,
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    observe: impl FnMut(i64, &Field) -> Result<()>,
) -> Result<Field> {
    let steps = duration_steps(cfg, t, "t")?;
    let n_tau = cfg.lattice_index(tau)?;
    let n0 = n_tau - steps;
    let eps = spec.epsilon;
    let driving = path.shift(-cfg.lattice_time(n_tau))?;
    driving.ensure_covers(cfg.lattice_time(n0), cfg.lattice_time(n_tau))?;
    path.ensure_covers(-cfg.lattice_time(n_tau), -cfg.lattice_time(n_tau))?;
    let v0 = rescale(u0, -eps * driving.value(cfg.lattice_time(n0))?);
    let stepper = Stepper::new(spec, *u0.grid(), *cfg)?;
    stepper.advance_observed(&v0, n0, n_tau, &driving, observe)
}

/// Pullback state `phi(t, tau - t, theta_{-t} w, u0) = u(tau; tau - t, theta_{-tau} w, u0)`,
/// computed directly in the right-hand form: conjugate with `theta_{-tau} w`, integrate
/// over `[tau - t, tau]`, and unconjugate with `z(-tau, w)`.
pub fn pullback_state(
    t: f64,
    tau: f64,
    path: &ShiftedPath<'_>,
    u0: &Field,
    spec: &ProblemSpec,
    cfg: &SolverConfig,
) -> Result<Field> {
    let steps = duration_steps(cfg, t, "t")?;
    let n_tau = cfg.lattice_index(tau)?;
    if steps == 0 {
        return Ok(u0.clone());
    }
    let eps = spec.epsilon;
    let v = pullback_conjugated_observed(t, tau, path, u0, spec, cfg, |_, _| Ok(()))?;
    // z(-tau, w) = exp(-eps w(-tau))
    let w_tau = path.value(-cfg.lattice_time(n_tau))?;
    let u = rescale(&v, -eps * w_tau);
    debug_assert!({
        let back = rescale(&u, eps * w_tau);
        l2_norm(&back.difference(&v)?) <= 1e-12 * (1.0 + l2_norm(&v))
    });
    Ok(u)
}

/// Pullback state evaluated through [`phi`] with shifted arguments.
pub fn pullback_state_via_phi(
    t: f64,
    tau: f64,
    path: &ShiftedPath<'_>,
    u0: &Field,
    spec: &ProblemSpec,
    cfg: &SolverConfig,
) -> Result<Field> {
    let n_t = duration_steps(cfg, t, "t")?;
    let shifted = path.shift(-cfg.lattice_time(n_t))?;
    let n_tau = cfg.lattice_index(tau)?;
    phi(&CocycleQuery {
        t,
        tau: cfg.lattice_time(n_tau - n_t),
        path: shifted,
        u0,
        spec,
        cfg,
    })
}

/// Relative residual of `phi(t+s, tau, w) = phi(t, tau+s, theta_s w) o phi(s, tau, w)`.
pub fn verify_cocycle_property(
    t: f64,
    s: f64,
    tau: f64,
    path: &ShiftedPath<'_>,
    u0: &Field,
    spec: &ProblemSpec,
    cfg: &SolverConfig,
) -> Result<f64> {
    let nt = duration_steps(cfg, t, "t")?;
    let ns = duration_steps(cfg, s, "s")?;
    let n_tau = cfg.lattice_index(tau)?;
    let (t, s, tau) = (cfg.lattice_time(nt), cfg.lattice_time(ns), cfg.lattice_time(n_tau));
    let whole = phi(&CocycleQuery {
        t: cfg.lattice_time(nt + ns),
        tau,
        path: *path,
        u0,
        spec,
        cfg,
    })?;
    let first = phi(&CocycleQuery {
        t: s,
        tau,
        path: *path,
        u0,
        spec,
        cfg,
    })?;
    let second = phi(&CocycleQuery {
        t,
        tau: cfg.lattice_time(n_tau + ns),
        path: path.shift(s)?,
        u0: &first,
        spec,
        cfg,
    })?;
    Ok(l2_norm(&whole.difference(&second)?) / l2_norm(&whole).max(1.0))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::{canonical_cubic, canonical_forcing};
    use crate::noise::sample_path;

    fn spec(eps: f64) -> ProblemSpec {
        ProblemSpec::new(
            2.0,
            eps,
            1,
            8.0,
            Arc::new(canonical_cubic(1.0, 1.0).unwrap()),
            Arc::new(canonical_forcing(2.0, 0.1, 1.0).unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn identity_axiom_is_bitwise() {
        let sp = spec(1.0);
        let g = sp.grid(33).unwrap();
        let u0 = Field::from_fn(g, |x| (x[0]).cos() * 0.3);
        let path = sample_path(3, -4.0, 4.0, 0.01).unwrap();
        let cfg = SolverConfig::new(0.01);
        let out = phi(&CocycleQuery {
            t: 0.0,
            tau: 1.0,
            path: path.view(),
            u0: &u0,
            spec: &sp,
            cfg: &cfg,
        })
        .unwrap();
        assert_eq!(out, u0);
        assert_eq!(pullback_state(0.0, 1.0, &path.view(), &u0, &sp, &cfg).unwrap(), u0);
    }

    #[test]
    fn zero_durations_give_zero_residual() {
        let sp = spec(1.0);
        let g = sp.grid(33).unwrap();
        let u0 = Field::from_fn(g, |x| (-x[0] * x[0]).exp());
        let path = sample_path(5, -4.0, 4.0, 0.01).unwrap();
        let cfg = SolverConfig::new(0.01);
        let v = path.view();
        assert_eq!(verify_cocycle_property(1.0, 0.0, 0.5, &v, &u0, &sp, &cfg).unwrap(), 0.0);
        assert_eq!(verify_cocycle_property(0.0, 1.0, 0.5, &v, &u0, &sp, &cfg).unwrap(), 0.0);
        let r = verify_cocycle_property(1.0, 1.0, -0.5, &v, &u0, &sp, &cfg).unwrap();
        assert!(r <= 1e-12, "residual {r}");
        assert!(verify_cocycle_property(1.005, 1.0, 0.5, &v, &u0, &sp, &cfg).is_err());
    }

    #[test]
    fn pullback_routes_agree_bitwise() {
        let sp = spec(0.8);
        let g = sp.grid(33).unwrap();
        let u0 = Field::from_fn(g, |x| 1.5 * (-x[0] * x[0] / 4.0).exp());
        let path = sample_path(6, -10.0, 2.0, 0.01).unwrap();
        let cfg = SolverConfig::new(0.01);
        for base in [path.view(), path.shift(-1.0).unwrap()] {
            let a = pullback_state(3.0, 0.7, &base, &u0, &sp, &cfg).unwrap();
            let b = pullback_state_via_phi(3.0, 0.7, &base, &u0, &sp, &cfg).unwrap();
            assert!(a
                .values()
                .iter()
                .zip(b.values())
                .all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn zero_epsilon_is_deterministic_flow() {
        let sp = spec(0.0);
        let g = sp.grid(33).unwrap();
        let u0 = Field::from_fn(g, |x| (-x[0] * x[0]).exp());
        let cfg = SolverConfig::new(0.01);
        let path = sample_path(8, -2.0, 3.0, 0.01).unwrap();
        let out = phi(&CocycleQuery {
            t: 1.0,
            tau: 0.5,
            path: path.view(),
            u0: &u0,
            spec: &sp,
            cfg: &cfg,
        })
        .unwrap();
        let stepper = Stepper::new(&sp, g, cfg).unwrap();
        let det = stepper.advance_deterministic(&u0, 50, 150).unwrap();
        assert_eq!(out, det);
    }

    #[test]
    fn trajectory_ends_at_phi_and_strides_in_time() {
        let sp = spec(0.6);
        let g = sp.grid(33).unwrap();
        let u0 = Field::from_fn(g, |x| (-x[0] * x[0]).exp());
        let path = sample_path(9, -2.0, 3.0, 0.01).unwrap();
        let mut cfg = SolverConfig::new(0.01);
        cfg.store_stride = 7;
        let q = CocycleQuery {
            t: 1.0,
            tau: 0.5,
            path: path.view(),
            u0: &u0,
            spec: &sp,
            cfg: &cfg,
        };
        let traj = phi_trajectory(&q).unwrap();
        assert_eq!(traj.len(), 16);
        assert_eq!(traj.states()[0], u0);
        assert!((traj.times()[1] - 0.57).abs() < 1e-12);
        let (t_end, last) = traj.last().unwrap();
        assert!((t_end - 1.5).abs() < 1e-12);
        assert_eq!(last, &phi(&q).unwrap());
        let at7 = phi(&CocycleQuery { t: 0.07, ..q }).unwrap();
        assert_eq!(traj.states()[1], at7);
    }

    #[test]
    fn window_violation_is_reported_up_front() {
        let sp = spec(1.0);
        let g = sp.grid(17).unwrap();
        let u0 = Field::zeros(g);
        let path = sample_path(1, -1.0, 1.0, 0.01).unwrap();
        let cfg = SolverConfig::new(0.01);
        let err = pullback_state(5.0, 0.0, &path.view(), &u0, &sp, &cfg).unwrap_err();
        assert!(matches!(err, Error::OutOfRange { .. }));
    }
}
