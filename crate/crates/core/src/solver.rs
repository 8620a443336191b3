//! IMEX Euler integration of the conjugated equation
//!
//! ```text
//! dv/dt + lambda v - Delta v = z(t) f(x, v / z(t)) + z(t) g(t, x),   z(t) = exp(-eps w(t))
//! ```
//!
//! on the truncated grid. The linear part is implicit, the reaction and the
//! forcing are explicit with `z` frozen at the left endpoint of each step.
//! Times live on the lattice `t_n = n * dt`, so runs that traverse the same
//! lattice interval execute identical step sequences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{l2_norm, Field, Grid, Trajectory};
use crate::linalg::{ShiftedLaplacian2d, Tridiagonal};
use crate::model::ProblemSpec;
use crate::noise::{snap_to_integer, NoisePath, WienerPath};

const CG_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    /// Relative residual target of the implicit solve.
    pub linear_solver_tol: f64,
    /// Store every `store_stride`-th state of a trajectory.
    pub store_stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: 1e-3,
            linear_solver_tol: 1e-10,
            store_stride: 1,
        }
    }
}

impl SolverConfig {
    pub fn new(dt: f64) -> Self {
        SolverConfig {
            dt,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::config("solver.dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.linear_solver_tol > 0.0) {
            return Err(Error::config(
                "solver.linear_solver_tol",
                format!("must be positive, got {}", self.linear_solver_tol),
            ));
        }
        if self.store_stride == 0 {
            return Err(Error::config("solver.store_stride", "must be >= 1"));
        }
        Ok(())
    }

    /// Lattice index of `t`; errors when `t` is not a multiple of `dt`.
    pub fn lattice_index(&self, t: f64) -> Result<i64> {
        snap_to_integer(t / self.dt)
            .ok_or_else(|| Error::config("time", format!("t = {t} is not a multiple of dt = {}", self.dt)))
    }

    pub fn lattice_time(&self, n: i64) -> f64 {
        n as f64 * self.dt
    }
}

enum Implicit {
    OneD(Tridiagonal),
    TwoD(ShiftedLaplacian2d),
}

/// Reusable time stepper for one `(spec, grid, cfg)` combination.
pub struct Stepper<'a> {
    spec: &'a ProblemSpec,
    cfg: SolverConfig,
    grid: Grid,
    points: Vec<[f64; 2]>,
    implicit: Implicit,
}

impl<'a> Stepper<'a> {
    pub fn new(spec: &'a ProblemSpec, grid: Grid, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        if grid.dimension() != spec.dimension || grid.radius() != spec.domain_radius {
            return Err(Error::GridMismatch(format!(
                "grid {grid:?} does not match spec (dimension {}, radius {})",
                spec.dimension, spec.domain_radius
            )));
        }
        let dt = cfg.dt;
        let h2 = grid.spacing() * grid.spacing();
        let implicit = if grid.dimension() == 1 {
            let n = grid.points_per_axis() - 2;
            Implicit::OneD(Tridiagonal::new(n, 1.0 + dt * (spec.lambda + 2.0 / h2), -dt / h2))
        } else {
            Implicit::TwoD(ShiftedLaplacian2d::new(grid, 1.0 + dt * spec.lambda, dt))
        };
        let points = (0..grid.len()).map(|i| grid.point(i)).collect();
        Ok(Stepper {
            spec,
            cfg,
            grid,
            points,
            implicit,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn point(&self, idx: usize) -> &[f64] {
        &self.points[idx][..self.grid.dimension()]
    }

    fn solve(&self, rhs: Vec<f64>, guess: &Field, t: f64) -> Result<Field> {
        let tol = self.cfg.linear_solver_tol;
        let values = match &self.implicit {
            Implicit::OneD(tri) => {
                let n = rhs.len();
                let b = &rhs[1..n - 1];
                let mut x = b.to_vec();
                tri.solve_in_place(&mut x);
                let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
                let res = tri.residual(&x, b);
                if res > tol * b_norm.max(f64::MIN_POSITIVE) && res > 0.0 {
                    return Err(Error::LinearSolver {
                        iterations: 1,
                        residual: res / b_norm,
                    });
                }
                let mut out = vec![0.0; n];
                out[1..n - 1].copy_from_slice(&x);
                out
            }
            Implicit::TwoD(op) => {
                let mut x = guess.values().to_vec();
                op.solve_cg(&rhs, &mut x, tol, CG_MAX_ITER)?;
                for (i, v) in x.iter_mut().enumerate() {
                    if self.grid.is_boundary(i) {
                        *v = 0.0;
                    }
                }
                x
            }
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { t });
        }
        Ok(Field::from_values_unchecked(self.grid, values))
    }

    /// One step from `t` with the conjugation factor `z = z(t)` supplied by the caller.
    pub fn step_with_factor(&self, v: &Field, t: f64, z: f64) -> Result<Field> {
        v.check_same_grid(&Field::zeros(self.grid))?;
        let dt = self.cfg.dt;
        let f = self.spec.nonlinearity.as_ref();
        let g = self.spec.forcing.as_ref();
        let rhs: Vec<f64> = v
            .values()
            .iter()
            .enumerate()
            .map(|(i, &vi)| {
                if self.grid.is_boundary(i) {
                    0.0
                } else {
                    let x = self.point(i);
                    vi + dt * (z * f.value(x, vi / z) + z * g.value(t, x))
                }
            })
            .collect();
        self.solve(rhs, v, t)
    }

    /// One step of the noise-free equation `dv/dt + lambda v - Delta v = f(x, v) + g(t, x)`.
    pub fn deterministic_step(&self, v: &Field, t: f64) -> Result<Field> {
        v.check_same_grid(&Field::zeros(self.grid))?;
        let dt = self.cfg.dt;
        let f = self.spec.nonlinearity.as_ref();
        let g = self.spec.forcing.as_ref();
        let rhs: Vec<f64> = v
            .values()
            .iter()
            .enumerate()
            .map(|(i, &vi)| {
                if self.grid.is_boundary(i) {
                    0.0
                } else {
                    let x = self.point(i);
                    vi + dt * (f.value(x, vi) + g.value(t, x))
                }
            })
            .collect();
        self.solve(rhs, v, t)
    }

    /// One step from `t` reading `z(t)` off `path`.
    pub fn step(&self, v: &Field, t: f64, path: &(impl NoisePath + ?Sized)) -> Result<Field> {
        path.ensure_covers(t, t + self.cfg.dt)?;
        let z = (-self.spec.epsilon * path.value(t)?).exp();
        self.step_with_factor(v, t, z)
    }

    /// Advances from lattice index `n0` to `n1`, calling `observe(n, state)` for every
    /// state from `n0` through `n1` inclusive.
    pub fn advance_observed(
        &self,
        v0: &Field,
        n0: i64,
        n1: i64,
        path: &(impl NoisePath + ?Sized),
        mut observe: impl FnMut(i64, &Field) -> Result<()>,
    ) -> Result<Field> {
        if n1 < n0 {
            return Err(Error::Precondition(format!("end index {n1} precedes start {n0}")));
        }
        path.ensure_covers(self.cfg.lattice_time(n0), self.cfg.lattice_time(n1))?;
        let eps = self.spec.epsilon;
        let mut v = v0.clone();
        observe(n0, &v)?;
        for n in n0..n1 {
            let t = self.cfg.lattice_time(n);
            let z = (-eps * path.value(t)?).exp();
            v = self.step_with_factor(&v, t, z)?;
            observe(n + 1, &v)?;
        }
        Ok(v)
    }

    /// Advances from lattice index `n0` to `n1` and returns the final state.
    pub fn advance(&self, v0: &Field, n0: i64, n1: i64, path: &(impl NoisePath + ?Sized)) -> Result<Field> {
        self.advance_observed(v0, n0, n1, path, |_, _| Ok(()))
    }

    /// Noise-free counterpart of [`Stepper::advance`].
    pub fn advance_deterministic(&self, v0: &Field, n0: i64, n1: i64) -> Result<Field> {
        let mut v = v0.clone();
        for n in n0..n1 {
            v = self.deterministic_step(&v, self.cfg.lattice_time(n))?;
        }
        Ok(v)
    }

    /// Integrates from `t_start` to `t_end`, storing every `store_stride`-th state and the final one.
    pub fn integrate(
        &self,
        v0: &Field,
        t_start: f64,
        t_end: f64,
        path: &(impl NoisePath + ?Sized),
    ) -> Result<Trajectory> {
        let n0 = self.cfg.lattice_index(t_start)?;
        let n1 = self.cfg.lattice_index(t_end)?;
        if n1 < n0 {
            return Err(Error::Precondition(format!(
                "t_end = {t_end} precedes t_start = {t_start}"
            )));
        }
        let stride = self.cfg.store_stride as i64;
        let mut traj = Trajectory::new(self.cfg.store_stride);
        self.advance_observed(v0, n0, n1, path, |n, v| {
            if (n - n0) % stride == 0 || n == n1 {
                traj.push(self.cfg.lattice_time(n), v.clone())?;
            }
            Ok(())
        })?;
        Ok(traj)
    }

    /// Largest step allowed by the explicit reaction term at state `v`: `0.5 / max |df/ds|`.
    pub fn stable_dt_bound(&self, v: &Field, z: f64) -> f64 {
        let f = self.spec.nonlinearity.as_ref();
        let worst = v
            .values()
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.grid.is_boundary(*i))
            .map(|(i, &vi)| f.ds(self.point(i), vi / z).abs())
            .fold(0.0, f64::max);
        if worst == 0.0 {
            f64::INFINITY
        } else {
            0.5 / worst
        }
    }
}

/// One IMEX Euler step of the conjugated equation from time `t`.
pub fn step(
    v: &Field,
    t: f64,
    path: &(impl NoisePath + ?Sized),
    spec: &ProblemSpec,
    cfg: &SolverConfig,
) -> Result<Field> {
    Stepper::new(spec, *v.grid(), *cfg)?.step(v, t, path)
}

/// Integrates the conjugated equation over `[t_start, t_end]`.
pub fn integrate(
    v0: &Field,
    t_start: f64,
    t_end: f64,
    path: &(impl NoisePath + ?Sized),
    spec: &ProblemSpec,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    Stepper::new(spec, *v0.grid(), *cfg)?.integrate(v0, t_start, t_end, path)
}

/// Successive differences of a refinement ladder and the orders they imply.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    /// Step sizes (time) or grid spacings (space), coarse to fine.
    pub resolutions: Vec<f64>,
    /// `||u_k - u_{k+1}||_{L2}` measured on the coarsest grid.
    pub differences: Vec<f64>,
    /// `differences[k] / differences[k+1]`.
    pub ratios: Vec<f64>,
    /// `log2` of the ratios (the ladders halve the resolution).
    pub orders: Vec<f64>,
}

impl ConvergenceReport {
    fn from_solutions(resolutions: Vec<f64>, solutions: &[Field]) -> Result<Self> {
        let differences = solutions
            .windows(2)
            .map(|w| Ok(l2_norm(&w[0].difference(&w[1])?)))
            .collect::<Result<Vec<_>>>()?;
        let ratios: Vec<f64> = differences.windows(2).map(|w| w[0] / w[1]).collect();
        let orders = ratios.iter().map(|r| r.log2()).collect();
        Ok(ConvergenceReport {
            resolutions,
            differences,
            ratios,
            orders,
        })
    }

    /// Order estimated from the finest pair of differences.
    pub fn observed_order(&self) -> Option<f64> {
        self.orders.last().copied()
    }
}

fn check_halving(ladder: &[f64]) -> Result<()> {
    if ladder.len() < 3 {
        return Err(Error::config("ladder", "need at least three resolutions"));
    }
    for w in ladder.windows(2) {
        if (w[0] / w[1] - 2.0).abs() > 1e-9 {
            return Err(Error::config(
                "ladder",
                format!("ratio must be 2, got {} / {}", w[0], w[1]),
            ));
        }
    }
    Ok(())
}

/// Temporal self-convergence on a dt ladder with ratio 2.
///
/// The path is refined by Brownian bridges to each step size so every run
/// sees the same noise realisation.
pub fn temporal_convergence(
    v0: &Field,
    t_start: f64,
    horizon: f64,
    path: &WienerPath,
    spec: &ProblemSpec,
    base: &SolverConfig,
    dt_ladder: &[f64],
) -> Result<ConvergenceReport> {
    check_halving(dt_ladder)?;
    let solutions = dt_ladder
        .iter()
        .map(|&dt| {
            let cfg = SolverConfig { dt, ..*base };
            let p = path.on_grid(dt)?;
            let stepper = Stepper::new(spec, *v0.grid(), cfg)?;
            let n0 = cfg.lattice_index(t_start)?;
            let n1 = cfg.lattice_index(t_start + horizon)?;
            stepper.advance(v0, n0, n1, &p)
        })
        .collect::<Result<Vec<_>>>()?;
    ConvergenceReport::from_solutions(dt_ladder.to_vec(), &solutions)
}

/// Spatial self-convergence on nested grids `m, 2(m-1)+1, ...`, compared on the coarsest grid.
#[allow(clippy::too_many_arguments)]
pub fn spatial_convergence(
    initial: impl Fn(&Grid) -> Field,
    coarse: Grid,
    levels: usize,
    t_start: f64,
    horizon: f64,
    path: &(impl NoisePath + ?Sized),
    spec: &ProblemSpec,
    cfg: &SolverConfig,
) -> Result<ConvergenceReport> {
    if levels < 3 {
        return Err(Error::config("levels", "need at least three grids"));
    }
    let mut grids = vec![coarse];
    for _ in 1..levels {
        let next = grids.last().unwrap().refined();
        grids.push(next);
    }
    let n0 = cfg.lattice_index(t_start)?;
    let n1 = cfg.lattice_index(t_start + horizon)?;
    let solutions = grids
        .iter()
        .map(|g| {
            let stepper = Stepper::new(spec, *g, *cfg)?;
            stepper.advance(&initial(g), n0, n1, path)?.restrict_to(&coarse)
        })
        .collect::<Result<Vec<_>>>()?;
    ConvergenceReport::from_solutions(grids.iter().map(|g| g.spacing()).collect(), &solutions)
}
