//! TOML experiment configuration, validation, and duration snapping.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use rdslab_core::model::{canonical_cubic, canonical_forcing, Forcing, Nonlinearity, ProblemSpec, ZeroNonlinearity};
use rdslab_core::{Field, Grid, SolverConfig};

use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    Pullback,
    Equilibrium,
    DecayRate,
    Tail,
    Truncation,
    UpperSemi,
    CocycleTest,
    CheckHypotheses,
    Absorbing,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 10] = [
        ExperimentKind::Simulate,
        ExperimentKind::Pullback,
        ExperimentKind::Equilibrium,
        ExperimentKind::DecayRate,
        ExperimentKind::Tail,
        ExperimentKind::Truncation,
        ExperimentKind::UpperSemi,
        ExperimentKind::CocycleTest,
        ExperimentKind::CheckHypotheses,
        ExperimentKind::Absorbing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Pullback => "pullback",
            ExperimentKind::Equilibrium => "equilibrium",
            ExperimentKind::DecayRate => "decay-rate",
            ExperimentKind::Tail => "tail",
            ExperimentKind::Truncation => "truncation",
            ExperimentKind::UpperSemi => "upper-semi",
            ExperimentKind::CocycleTest => "cocycle-test",
            ExperimentKind::CheckHypotheses => "check-hypotheses",
            ExperimentKind::Absorbing => "absorbing",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub spec: SpecConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverSection,
    pub noise: NoiseConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pullback: Option<PullbackConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<EquilibriumConfig>,
    #[serde(default, rename = "decay-rate", skip_serializing_if = "Option::is_none")]
    pub decay_rate: Option<DecayRateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationConfig>,
    #[serde(default, rename = "upper-semi", skip_serializing_if = "Option::is_none")]
    pub upper_semi: Option<UpperSemiConfig>,
    #[serde(default, rename = "cocycle-test", skip_serializing_if = "Option::is_none")]
    pub cocycle_test: Option<CocycleTestConfig>,
    #[serde(default, rename = "check-hypotheses", skip_serializing_if = "Option::is_none")]
    pub check_hypotheses: Option<CheckHypothesesConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub absorbing: Option<AbsorbingConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    pub lambda: f64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "one_dim")]
    pub dimension: usize,
    pub domain_radius: f64,
    pub nonlinearity: NonlinearityConfig,
    pub forcing: ForcingConfig,
}

fn one_dim() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NonlinearityConfig {
    /// `f(s) = alpha3 s - scale s^3`.
    Cubic {
        alpha3: f64,
        scale: f64,
    },
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    pub amplitude: f64,
    pub delta: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub points_per_axis: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// Defaults to `noise.dt`.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_linear_tol")]
    pub linear_solver_tol: f64,
    #[serde(default = "default_stride")]
    pub store_stride: usize,
}

fn default_linear_tol() -> f64 {
    1e-10
}

fn default_stride() -> usize {
    1
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            dt: None,
            linear_solver_tol: default_linear_tol(),
            store_stride: default_stride(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub seed: u64,
    /// `[t_min, t_max]`, containing 0.
    pub window: [f64; 2],
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub members: Vec<InitialDatum>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            members: vec![InitialDatum::Gaussian {
                amplitude: 1.0,
                center: vec![],
                width: 1.0,
            }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialDatum {
    /// `amplitude exp(-|x - center|^2 / width^2)`; a missing center is the origin.
    Gaussian {
        amplitude: f64,
        #[serde(default)]
        center: Vec<f64>,
        width: f64,
    },
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

fn default_directory() -> String {
    "out".into()
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Json, OutputFormat::Csv]
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    /// Start time of the forward run.
    pub tau: f64,
    pub horizon: f64,
    /// Radii of the tail columns in the norms CSV.
    pub tail_radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PullbackConfig {
    pub tau: f64,
    pub horizon: f64,
}

impl Default for PullbackConfig {
    fn default() -> Self {
        PullbackConfig {
            tau: 0.0,
            horizon: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquilibriumConfig {
    pub tau: f64,
    pub schedule: Vec<f64>,
    pub tolerance: f64,
    /// Number of trailing history increments that must decrease.
    pub monotone_tail: usize,
}

impl Default for EquilibriumConfig {
    fn default() -> Self {
        EquilibriumConfig {
            tau: 0.0,
            schedule: (1..=8).map(|k| 5.0 * k as f64).collect(),
            tolerance: 1e-6,
            monotone_tail: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayRateConfig {
    pub tau: f64,
    pub window: [f64; 2],
    pub tolerance: f64,
}

impl Default for DecayRateConfig {
    fn default() -> Self {
        DecayRateConfig {
            tau: 0.0,
            window: [1.0, 6.0],
            tolerance: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TailConfig {
    pub tau: f64,
    pub horizon: f64,
    /// Defaults to `{0, L/4, L/2, 3L/4, L}`.
    pub radii: Option<Vec<f64>>,
    /// Radius at which the tail fraction is checked; defaults to `L/2`.
    pub check_radius: Option<f64>,
    pub max_fraction: f64,
}

impl Default for TailConfig {
    fn default() -> Self {
        TailConfig {
            tau: 0.0,
            horizon: 20.0,
            radii: None,
            check_radius: None,
            max_fraction: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationConfig {
    pub tau: f64,
    pub horizon: f64,
    pub thresholds: Vec<f64>,
    /// Upper bound on the value at the largest threshold.
    pub final_max: f64,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig {
            tau: 0.0,
            horizon: 10.0,
            thresholds: vec![1.0, 2.0, 4.0, 8.0],
            final_max: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UpperSemiConfig {
    pub tau: f64,
    pub horizon: f64,
    /// Defaults to eight consecutive seeds starting at `noise.seed`.
    pub seeds: Option<Vec<u64>>,
    pub epsilon_ladder: Vec<f64>,
}

impl Default for UpperSemiConfig {
    fn default() -> Self {
        UpperSemiConfig {
            tau: 0.0,
            horizon: 20.0,
            seeds: None,
            epsilon_ladder: vec![0.5, 0.25, 0.1, 0.05],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CocycleTestConfig {
    pub t: f64,
    pub s: f64,
    pub tau: f64,
    pub tolerance: f64,
}

impl Default for CocycleTestConfig {
    fn default() -> Self {
        CocycleTestConfig {
            t: 1.0,
            s: 1.0,
            tau: 0.0,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckHypothesesConfig {
    pub n_samples: usize,
    pub s_range: f64,
}

impl Default for CheckHypothesesConfig {
    fn default() -> Self {
        CheckHypothesesConfig {
            n_samples: 201,
            s_range: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AbsorbingConfig {
    pub tau: f64,
    /// The quadrature is also evaluated at twice this horizon.
    pub quadrature_horizon: f64,
    /// The witness is also evaluated at twice this horizon.
    pub pullback_horizon: f64,
}

impl Default for AbsorbingConfig {
    fn default() -> Self {
        AbsorbingConfig {
            tau: 0.0,
            quadrature_horizon: 40.0,
            pullback_horizon: 20.0,
        }
    }
}

/// A duration or time moved onto the step lattice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapEntry {
    pub field: String,
    pub requested: f64,
    pub snapped: f64,
}

#[derive(Debug, Default)]
pub struct Snapper {
    pub entries: Vec<SnapEntry>,
}

impl Snapper {
    pub fn snap(&mut self, field: impl Into<String>, value: &mut f64, dt: f64) {
        let snapped = (*value / dt).round() * dt;
        if (snapped - *value).abs() > 1e-12 * value.abs().max(1.0) {
            let field = field.into();
            log::info!("snapped {field} from {value} to {snapped}");
            self.entries.push(SnapEntry {
                field,
                requested: *value,
                snapped,
            });
        }
        *value = snapped;
    }
}

fn config_error(field: &str, message: impl fmt::Display) -> RunError {
    RunError::Config(format!("{field}: {message}"))
}

/// Parses a TOML document, reporting the path of the offending field on failure.
pub fn parse(text: &str) -> Result<ExperimentConfig, RunError> {
    let de = toml::Deserializer::parse(text).map_err(|e| RunError::Config(e.to_string()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        RunError::Config(format!("{path}: {}", e.into_inner().message()))
    })
}

impl ExperimentConfig {
    pub fn solver_dt(&self) -> f64 {
        self.solver.dt.unwrap_or(self.noise.dt)
    }

    /// Fills defaults for the selected experiment, validates ranges, and snaps every
    /// time and duration onto the lattice of the solver step.
    pub fn resolve(&mut self) -> Result<Vec<SnapEntry>, RunError> {
        if !(self.noise.dt > 0.0) || !self.noise.dt.is_finite() {
            return Err(config_error("noise.dt", "must be positive"));
        }
        let dt = self.solver_dt();
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(config_error("solver.dt", "must be positive"));
        }
        self.solver.dt = Some(dt);
        if self.solver.store_stride == 0 {
            return Err(config_error("solver.store_stride", "must be at least 1"));
        }
        if self.initial.members.is_empty() {
            return Err(config_error("initial.members", "must not be empty"));
        }
        let mut sn = Snapper::default();
        let ndt = self.noise.dt;
        sn.snap("noise.window[0]", &mut self.noise.window[0], ndt);
        sn.snap("noise.window[1]", &mut self.noise.window[1], ndt);
        if !(self.noise.window[0] <= 0.0 && 0.0 <= self.noise.window[1]) {
            return Err(config_error("noise.window", "must contain t = 0"));
        }
        let radius = self.spec.domain_radius;
        match self.experiment {
            ExperimentKind::Simulate => {
                let c = self.simulate.get_or_insert_with(Default::default);
                sn.snap("simulate.tau", &mut c.tau, dt);
                sn.snap("simulate.horizon", &mut c.horizon, dt);
                non_negative("simulate.horizon", c.horizon)?;
            }
            ExperimentKind::Pullback => {
                let c = self.pullback.get_or_insert_with(Default::default);
                sn.snap("pullback.tau", &mut c.tau, dt);
                sn.snap("pullback.horizon", &mut c.horizon, dt);
                non_negative("pullback.horizon", c.horizon)?;
            }
            ExperimentKind::Equilibrium => {
                let c = self.equilibrium.get_or_insert_with(Default::default);
                sn.snap("equilibrium.tau", &mut c.tau, dt);
                for (i, t) in c.schedule.iter_mut().enumerate() {
                    sn.snap(format!("equilibrium.schedule[{i}]"), t, dt);
                }
                if c.schedule.is_empty() || c.schedule.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(config_error(
                        "equilibrium.schedule",
                        "must be non-empty and strictly increasing",
                    ));
                }
                non_negative("equilibrium.schedule[0]", c.schedule[0])?;
                positive("equilibrium.tolerance", c.tolerance)?;
            }
            ExperimentKind::DecayRate => {
                let c = self.decay_rate.get_or_insert_with(Default::default);
                sn.snap("decay-rate.tau", &mut c.tau, dt);
                sn.snap("decay-rate.window[0]", &mut c.window[0], dt);
                sn.snap("decay-rate.window[1]", &mut c.window[1], dt);
                if !(0.0 <= c.window[0] && c.window[0] < c.window[1]) {
                    return Err(config_error("decay-rate.window", "need 0 <= start < end"));
                }
                if self.initial.members.len() < 2 {
                    return Err(config_error("initial.members", "decay-rate needs two initial data"));
                }
            }
            ExperimentKind::Tail => {
                let c = self.tail.get_or_insert_with(Default::default);
                sn.snap("tail.tau", &mut c.tau, dt);
                sn.snap("tail.horizon", &mut c.horizon, dt);
                non_negative("tail.horizon", c.horizon)?;
                let radii = c
                    .radii
                    .get_or_insert_with(|| vec![0.0, radius / 4.0, radius / 2.0, 3.0 * radius / 4.0, radius]);
                if radii.is_empty()
                    || radii.windows(2).any(|w| w[1] <= w[0])
                    || radii.iter().any(|k| !(0.0..=radius).contains(k))
                {
                    return Err(config_error(
                        "tail.radii",
                        "must increase strictly within [0, domain_radius]",
                    ));
                }
                let k = *c.check_radius.get_or_insert(radius / 2.0);
                if !radii.contains(&k) {
                    return Err(config_error("tail.check_radius", "must be one of tail.radii"));
                }
            }
            ExperimentKind::Truncation => {
                let c = self.truncation.get_or_insert_with(Default::default);
                sn.snap("truncation.tau", &mut c.tau, dt);
                sn.snap("truncation.horizon", &mut c.horizon, dt);
                if c.horizon < 1.0 {
                    return Err(config_error("truncation.horizon", "must be at least 1"));
                }
                if c.thresholds.is_empty() || c.thresholds.iter().any(|m| !(*m > 0.0)) {
                    return Err(config_error("truncation.thresholds", "must be non-empty and positive"));
                }
            }
            ExperimentKind::UpperSemi => {
                let seed = self.noise.seed;
                let c = self.upper_semi.get_or_insert_with(Default::default);
                sn.snap("upper-semi.tau", &mut c.tau, dt);
                sn.snap("upper-semi.horizon", &mut c.horizon, dt);
                non_negative("upper-semi.horizon", c.horizon)?;
                let seeds = c.seeds.get_or_insert_with(|| (seed..seed + 8).collect());
                if seeds.is_empty() {
                    return Err(config_error("upper-semi.seeds", "must not be empty"));
                }
                let l = &c.epsilon_ladder;
                if l.is_empty() || l.windows(2).any(|w| w[1] >= w[0]) || l.iter().any(|e| !(0.0..=1.0).contains(e)) {
                    return Err(config_error(
                        "upper-semi.epsilon_ladder",
                        "must decrease strictly within [0, 1]",
                    ));
                }
            }
            ExperimentKind::CocycleTest => {
                let c = self.cocycle_test.get_or_insert_with(Default::default);
                sn.snap("cocycle-test.t", &mut c.t, dt);
                sn.snap("cocycle-test.s", &mut c.s, dt);
                sn.snap("cocycle-test.tau", &mut c.tau, dt);
                non_negative("cocycle-test.t", c.t)?;
                non_negative("cocycle-test.s", c.s)?;
            }
            ExperimentKind::CheckHypotheses => {
                let c = self.check_hypotheses.get_or_insert_with(Default::default);
                if c.n_samples < 2 {
                    return Err(config_error("check-hypotheses.n_samples", "must be at least 2"));
                }
                positive("check-hypotheses.s_range", c.s_range)?;
            }
            ExperimentKind::Absorbing => {
                let c = self.absorbing.get_or_insert_with(Default::default);
                sn.snap("absorbing.tau", &mut c.tau, dt);
                sn.snap("absorbing.quadrature_horizon", &mut c.quadrature_horizon, ndt);
                sn.snap("absorbing.pullback_horizon", &mut c.pullback_horizon, dt);
                positive("absorbing.quadrature_horizon", c.quadrature_horizon)?;
                positive("absorbing.pullback_horizon", c.pullback_horizon)?;
            }
        }
        self.check_window()?;
        Ok(sn.entries)
    }

    /// Interval of the noise path the selected experiment reads.
    pub fn required_window(&self) -> (f64, f64) {
        let span = |pts: &[f64]| {
            let lo = pts.iter().copied().fold(0.0, f64::min);
            let hi = pts.iter().copied().fold(0.0, f64::max);
            (lo, hi)
        };
        match self.experiment {
            ExperimentKind::Simulate => {
                let c = self.simulate.as_ref().expect("resolved");
                span(&[-c.tau, c.horizon])
            }
            ExperimentKind::Pullback => {
                let c = self.pullback.as_ref().expect("resolved");
                span(&[-c.tau, -c.horizon])
            }
            ExperimentKind::Equilibrium => {
                let c = self.equilibrium.as_ref().expect("resolved");
                span(&[-c.tau, -c.schedule[c.schedule.len() - 1]])
            }
            ExperimentKind::DecayRate => {
                let c = self.decay_rate.as_ref().expect("resolved");
                span(&[-c.tau, c.window[1]])
            }
            ExperimentKind::Tail => {
                let c = self.tail.as_ref().expect("resolved");
                span(&[-c.tau, -c.horizon])
            }
            ExperimentKind::Truncation => {
                let c = self.truncation.as_ref().expect("resolved");
                span(&[-c.tau, -c.horizon, -1.0])
            }
            ExperimentKind::UpperSemi => {
                let c = self.upper_semi.as_ref().expect("resolved");
                span(&[-c.tau, -c.horizon])
            }
            ExperimentKind::CocycleTest => {
                let c = self.cocycle_test.as_ref().expect("resolved");
                span(&[-c.tau, c.t + c.s])
            }
            ExperimentKind::CheckHypotheses => (0.0, 0.0),
            ExperimentKind::Absorbing => {
                let c = self.absorbing.as_ref().expect("resolved");
                span(&[-c.tau, -2.0 * c.quadrature_horizon, -2.0 * c.pullback_horizon])
            }
        }
    }

    fn check_window(&self) -> Result<(), RunError> {
        let (lo, hi) = self.required_window();
        let [min, max] = self.noise.window;
        let slack = 1e-9 * self.noise.dt;
        if lo < min - slack || hi > max + slack {
            return Err(config_error(
                "noise.window",
                format!("experiment reads the path on [{lo}, {hi}], outside [{min}, {max}]"),
            ));
        }
        Ok(())
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec, RunError> {
        let s = &self.spec;
        let nonlinearity: Arc<dyn Nonlinearity> = match s.nonlinearity {
            NonlinearityConfig::Cubic { alpha3, scale } => {
                Arc::new(canonical_cubic(alpha3, scale).map_err(prefixed("spec.nonlinearity"))?)
            }
            NonlinearityConfig::Zero => Arc::new(ZeroNonlinearity),
        };
        let f = &s.forcing;
        let forcing: Arc<dyn Forcing> =
            Arc::new(canonical_forcing(f.amplitude, f.delta, f.width).map_err(prefixed("spec.forcing"))?);
        ProblemSpec::new(s.lambda, s.epsilon, s.dimension, s.domain_radius, nonlinearity, forcing)
            .map_err(prefixed("spec"))
    }

    pub fn grid(&self) -> Result<Grid, RunError> {
        Grid::new(self.spec.dimension, self.spec.domain_radius, self.grid.points_per_axis).map_err(prefixed("grid"))
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            dt: self.solver_dt(),
            linear_solver_tol: self.solver.linear_solver_tol,
            store_stride: self.solver.store_stride,
        }
    }

    /// Initial data on `grid`. Members are fixed profiles, so their norms do not depend on
    /// the pullback horizon; each is checked to be finite.
    pub fn initial_ensemble(&self, grid: Grid) -> Result<Vec<Field>, RunError> {
        self.initial
            .members
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let field = format!("initial.members[{i}]");
                let u = match m {
                    InitialDatum::Gaussian {
                        amplitude,
                        center,
                        width,
                    } => {
                        if !(*width > 0.0) {
                            return Err(config_error(&field, "width must be positive"));
                        }
                        if !center.is_empty() && center.len() != grid.dimension() {
                            return Err(config_error(&field, "center must have one entry per dimension"));
                        }
                        let c = |d: usize| center.get(d).copied().unwrap_or(0.0);
                        Field::from_fn(grid, |x| {
                            let r2: f64 = (0..grid.dimension()).map(|d| (x[d] - c(d)).powi(2)).sum();
                            amplitude * (-r2 / (width * width)).exp()
                        })
                    }
                    InitialDatum::Zero => Field::zeros(grid),
                };
                if !u.is_finite() {
                    return Err(config_error(&field, "profile is not finite"));
                }
                Ok(u)
            })
            .collect()
    }
}

fn non_negative(field: &str, v: f64) -> Result<(), RunError> {
    if v >= 0.0 {
        Ok(())
    } else {
        Err(config_error(field, format!("must be >= 0, got {v}")))
    }
}

fn positive(field: &str, v: f64) -> Result<(), RunError> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(config_error(field, format!("must be positive, got {v}")))
    }
}

fn prefixed(prefix: &'static str) -> impl Fn(rdslab_core::Error) -> RunError {
    move |e| match e {
        rdslab_core::Error::Config { field, message } => RunError::Config(format!("{prefix}.{field}: {message}")),
        other => RunError::Config(format!("{prefix}: {other}")),
    }
}
