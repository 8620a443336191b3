//! Uniform grids on the truncated box `[-L, L]^N`, grid functions with
//! homogeneous Dirichlet boundary values, and the discrete norms used by
//! every diagnostic.
//!
//! Quadratures weight each node by `h^N`. Gradient terms use forward
//! differences; each difference is attributed to the midpoint of its edge,
//! which decides membership in tail regions `|x| >= k`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid with an odd number of points per axis (so `x = 0` is a node).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dimension: usize,
    radius: f64,
    points_per_axis: usize,
    spacing: f64,
}

impl Grid {
    pub fn new(dimension: usize, radius: f64, points_per_axis: usize) -> Result<Self> {
        if !(dimension == 1 || dimension == 2) {
            return Err(Error::config("dimension", format!("must be 1 or 2, got {dimension}")));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::config(
                "domain_radius",
                format!("must be positive, got {radius}"),
            ));
        }
        if points_per_axis < 3 || points_per_axis.is_multiple_of(2) {
            return Err(Error::config(
                "points_per_axis",
                format!("must be odd and >= 3, got {points_per_axis}"),
            ));
        }
        Ok(Grid {
            dimension,
            radius,
            points_per_axis,
            spacing: 2.0 * radius / (points_per_axis - 1) as f64,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dimension as i32)
    }

    /// Coordinate of node `i` along an axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        -self.radius + i as f64 * self.spacing
    }

    /// Axis indices of flat index `idx` (x fastest).
    pub fn indices(&self, idx: usize) -> [usize; 2] {
        let m = self.points_per_axis;
        if self.dimension == 1 {
            [idx, 0]
        } else {
            [idx % m, idx / m]
        }
    }

    /// Coordinates of node `idx`; unused components are 0.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let [i, j] = self.indices(idx);
        if self.dimension == 1 {
            [self.coordinate(i), 0.0]
        } else {
            [self.coordinate(i), self.coordinate(j)]
        }
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let last = self.points_per_axis - 1;
        let [i, j] = self.indices(idx);
        let on = |a: usize| a == 0 || a == last;
        if self.dimension == 1 {
            on(i)
        } else {
            on(i) || on(j)
        }
    }

    /// Grid with `2(m - 1) + 1` points per axis; its even nodes coincide with this grid's nodes.
    pub fn refined(&self) -> Grid {
        Grid::new(self.dimension, self.radius, 2 * (self.points_per_axis - 1) + 1)
            .expect("refinement of a valid grid is valid")
    }

    /// Flat index in `fine` of node `idx` of this grid, when `fine` nests this grid.
    pub fn nested_index(&self, fine: &Grid, idx: usize) -> Option<usize> {
        let ratio = (fine.points_per_axis - 1) / (self.points_per_axis - 1);
        if fine.dimension != self.dimension
            || ratio * (self.points_per_axis - 1) != fine.points_per_axis - 1
            || fine.radius != self.radius
        {
            return None;
        }
        let [i, j] = self.indices(idx);
        Some(i * ratio + j * ratio * fine.points_per_axis)
    }

    /// Axis neighbour strides present on this grid.
    fn strides(&self) -> &'static [usize] {
        if self.dimension == 1 {
            &[1]
        } else {
            &[1, usize::MAX]
        }
    }

    fn stride(&self, s: usize) -> usize {
        if s == usize::MAX {
            self.points_per_axis
        } else {
            s
        }
    }
}

/// Which norm a diagnostic is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    L2,
    H1,
}

/// Grid function with zero boundary values.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Field {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f` at interior nodes; boundary nodes are set to zero.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                if grid.is_boundary(idx) {
                    0.0
                } else {
                    let p = grid.point(idx);
                    f(&p[..grid.dimension])
                }
            })
            .collect();
        Field { grid, values }
    }

    /// Wraps raw values; boundary entries must be zero and all entries finite.
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite field value {v}")));
        }
        if (0..grid.len()).any(|i| grid.is_boundary(i) && values[i] != 0.0) {
            return Err(Error::Domain("boundary values must be zero".into()));
        }
        Ok(Field { grid, values })
    }

    pub(crate) fn from_values_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// `self - other`.
    pub fn difference(&self, other: &Field) -> Result<Field> {
        self.check_same_grid(other)?;
        Ok(Field {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    pub(crate) fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    /// Restriction by injection onto a coarser grid nested in this one.
    pub fn restrict_to(&self, coarse: &Grid) -> Result<Field> {
        let values = (0..coarse.len())
            .map(|idx| {
                coarse
                    .nested_index(&self.grid, idx)
                    .map(|fi| self.values[fi])
                    .ok_or_else(|| Error::GridMismatch("grid is not nested".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Field { grid: *coarse, values })
    }

    /// `max |v|`.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |v|` over nodes adjacent to the boundary; the truncation is adequate when this is tiny.
    pub fn boundary_layer_max(&self) -> f64 {
        let g = &self.grid;
        let last = g.points_per_axis - 1;
        let near = |a: usize| a == 1 || a + 1 == last;
        (0..g.len())
            .filter(|&idx| {
                let [i, j] = g.indices(idx);
                !g.is_boundary(idx) && (near(i) || (g.dimension == 2 && near(j)))
            })
            .fold(0.0, |m, idx| m.max(self.values[idx].abs()))
    }

    /// Euclidean inner product weighted by `h^N`.
    pub fn inner(&self, other: &Field) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self.grid.cell_volume() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>())
    }

    /// CSV with coordinate columns followed by `value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if self.grid.dimension == 1 {
            out.push_str("x,value\n");
        } else {
            out.push_str("x,y,value\n");
        }
        for (idx, v) in self.values.iter().enumerate() {
            let p = self.grid.point(idx);
            if self.grid.dimension == 1 {
                let _ = writeln!(out, "{},{}", p[0], v);
            } else {
                let _ = writeln!(out, "{},{},{}", p[0], p[1], v);
            }
        }
        out
    }
}

fn gradient_terms(field: &Field, mut keep: impl FnMut([f64; 2]) -> bool) -> f64 {
    let g = &field.grid;
    let h = g.spacing;
    let m = g.points_per_axis;
    let v = &field.values;
    let mut sum = 0.0;
    for &s in g.strides() {
        let stride = g.stride(s);
        let axis = usize::from(s != 1);
        for idx in 0..g.len() {
            if g.indices(idx)[axis] + 1 >= m {
                continue;
            }
            let mut mid = g.point(idx);
            mid[axis] += 0.5 * h;
            if keep(mid) {
                let d = (v[idx + stride] - v[idx]) / h;
                sum += d * d;
            }
        }
    }
    sum * g.cell_volume()
}

/// `(h^N sum v_i^2)^{1/2}`.
pub fn l2_norm(field: &Field) -> f64 {
    (field.grid.cell_volume() * field.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// `(h^N sum |v_i|^p)^{1/p}` for `p >= 1`.
pub fn lp_norm(field: &Field, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("Lp norm needs p >= 1, got {p}")));
    }
    let s: f64 = field.values.iter().map(|v| v.abs().powf(p)).sum();
    Ok((field.grid.cell_volume() * s).powf(1.0 / p))
}

/// Discrete H1 norm: `(||v||^2 + ||grad_h v||^2)^{1/2}` with forward differences.
pub fn h1_norm(field: &Field) -> f64 {
    let l2sq = field.grid.cell_volume() * field.values.iter().map(|v| v * v).sum::<f64>();
    (l2sq + gradient_terms(field, |_| true)).sqrt()
}

pub fn norm(field: &Field, which: NormKind) -> f64 {
    match which {
        NormKind::L2 => l2_norm(field),
        NormKind::H1 => h1_norm(field),
    }
}

fn radius_of(p: [f64; 2]) -> f64 {
    p[0].hypot(p[1])
}

/// Norm restricted to the region `|x| >= k`.
///
/// Node terms count when the node satisfies `|x| >= k`; gradient terms count
/// when the midpoint of their edge does.
pub fn tail_norm(field: &Field, k: f64, which: NormKind) -> Result<f64> {
    let g = &field.grid;
    if !(k >= 0.0) || k > g.radius {
        return Err(Error::Domain(format!("tail radius {k} outside [0, {}]", g.radius)));
    }
    let node_sum: f64 = field
        .values
        .iter()
        .enumerate()
        .filter(|(idx, _)| radius_of(g.point(*idx)) >= k)
        .map(|(_, v)| v * v)
        .sum();
    let mut total = g.cell_volume() * node_sum;
    if which == NormKind::H1 {
        total += gradient_terms(field, |mid| radius_of(mid) >= k);
    }
    Ok(total.sqrt())
}

/// Five-point (three-point in 1D) Laplacian with zero Dirichlet data; boundary outputs are zero.
pub fn discrete_laplacian(field: &Field) -> Field {
    let g = &field.grid;
    let inv_h2 = 1.0 / (g.spacing * g.spacing);
    let v = &field.values;
    let values = (0..g.len())
        .map(|idx| {
            if g.is_boundary(idx) {
                return 0.0;
            }
            let mut acc = 0.0;
            for &s in g.strides() {
                let stride = g.stride(s);
                acc += v[idx - stride] - 2.0 * v[idx] + v[idx + stride];
            }
            acc * inv_h2
        })
        .collect();
    Field { grid: *g, values }
}

/// `h^N sum_{|v_i| >= M} |v_i|^q`.
pub fn superlevel_measure_integrand(field: &Field, threshold: f64, q: f64) -> f64 {
    field.grid.cell_volume()
        * field
            .values
            .iter()
            .filter(|v| v.abs() >= threshold)
            .map(|v| v.abs().powf(q))
            .sum::<f64>()
}

/// Time-indexed sequence of states.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Field>,
    stride: usize,
}

impl Trajectory {
    pub fn new(stride: usize) -> Self {
        Trajectory {
            times: Vec::new(),
            states: Vec::new(),
            stride: stride.max(1),
        }
    }

    /// Appends a state; times must increase strictly.
    pub fn push(&mut self, t: f64, state: Field) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(Error::Precondition(format!(
                    "trajectory times must increase: {t} after {last}"
                )));
            }
        }
        self.times.push(t);
        self.states.push(state);
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Field] {
        &self.states
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &Field)> {
        self.times.last().copied().zip(self.states.last())
    }

    /// CSV of `t, L2, H1, Lp` followed by one L2 and one H1 tail column per radius.
    pub fn norms_csv(&self, p: f64, radii: &[f64]) -> Result<String> {
        let mut out = String::from("t,l2,h1,lp");
        for k in radii {
            let _ = write!(out, ",tail_l2_{k},tail_h1_{k}");
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            let _ = write!(out, "{},{},{},{}", t, l2_norm(s), h1_norm(s), lp_norm(s, p)?);
            for &k in radii {
                let _ = write!(
                    out,
                    ",{},{}",
                    tail_norm(s, k, NormKind::L2)?,
                    tail_norm(s, k, NormKind::H1)?
                );
            }
            out.push('\n');
        }
        Ok(out)
    }
}
