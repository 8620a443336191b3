//! Fixtures shared by the criterion benchmarks in `benches/`.

use std::sync::Arc;

use rdslab_core::model::{canonical_cubic, canonical_forcing, ProblemSpec};
use rdslab_core::{Field, Grid};

/// The canonical cubic problem with `lambda = 2`, `alpha3 = 1` on `[-radius, radius]^dimension`.
pub fn canonical(dimension: usize, radius: f64, epsilon: f64) -> ProblemSpec {
    ProblemSpec::new(
        2.0,
        epsilon,
        dimension,
        radius,
        Arc::new(canonical_cubic(1.0, 1.0).expect("valid constants")),
        Arc::new(canonical_forcing(2.0, 0.1, 1.0).expect("valid forcing")),
    )
    .expect("valid spec")
}

/// A centred Gaussian bump of unit amplitude and width.
pub fn bump(grid: Grid) -> Field {
    Field::from_fn(grid, |x| {
        let r2: f64 = x[..grid.dimension()].iter().map(|c| c * c).sum();
        (-r2).exp()
    })
}
