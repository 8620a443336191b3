//! Numerical laboratory for the stochastic non-autonomous reaction-diffusion
//! equation with multiplicative noise
//!
//! ```text
//! du + (lambda u - Delta u) dt = f(x, u) dt + g(t, x) dt + eps u o dW
//! ```
//!
//! on a truncated box with zero Dirichlet data. The equation is conjugated by
//! `z(t, w) = exp(-eps w(t))` into a pathwise random PDE, integrated with an
//! IMEX Euler scheme, and assembled into a cocycle over the Wiener shift. The
//! [`attractor`] module measures pullback convergence, equilibria, decay
//! rates, tails and the small-noise limit of attractors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attractor;
pub mod cocycle;
pub mod error;
pub mod field;
pub mod linalg;
pub mod model;
pub mod noise;
pub mod solver;
pub mod stats;

pub use attractor::{
    absorbing_integral, absorbing_radius, absorbing_witness, approximate_attractor, compute_equilibrium,
    equilibrium_invariance, fit_decay_rate, hausdorff_semidistance, tail_profile, truncation_diagnostic,
    truncation_ladder, upper_semicontinuity_sweep, window_regularity_report, AbsorbingIntegral, AttractorSample,
    BoundName, BoundWitness, DecayFit, EquilibriumResult, InvarianceResult, SemiDistance, SweepTable, TailProfile,
};
pub use cocycle::{phi, phi_trajectory, pullback_state, pullback_state_via_phi, verify_cocycle_property, CocycleQuery};
pub use error::{Error, Result};
pub use field::{h1_norm, l2_norm, lp_norm, norm, tail_norm, Field, Grid, NormKind, Trajectory};
pub use model::{
    canonical_cubic, canonical_forcing, check_hypotheses, CubicNonlinearity, Forcing, GaussianPulseForcing,
    GrowthConstants, HypothesisReport, Nonlinearity, ProblemSpec, ZeroNonlinearity,
};
pub use noise::{sample_path, z_factor, z_window_bounds, NoisePath, PathMetadata, ShiftedPath, WienerPath};
pub use solver::{ConvergenceReport, SolverConfig, Stepper};
