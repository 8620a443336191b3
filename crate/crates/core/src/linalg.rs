//! Solvers for the shifted Laplacian `(1 + dt*lambda) I - dt*Delta_h` on interior nodes.

use crate::error::{Error, Result};
use crate::field::Grid;

/// LU factors of a symmetric Toeplitz tridiagonal matrix `tridiag(off, diag, off)`.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    diag: f64,
    off: f64,
    /// Modified super-diagonal of the forward sweep.
    c_prime: Vec<f64>,
    /// Reciprocal pivots.
    inv_pivot: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(n: usize, diag: f64, off: f64) -> Self {
        let mut c_prime = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        let mut prev_c = 0.0;
        for i in 0..n {
            let pivot = if i == 0 { diag } else { diag - off * prev_c };
            inv_pivot[i] = 1.0 / pivot;
            prev_c = off * inv_pivot[i];
            c_prime[i] = prev_c;
        }
        Tridiagonal {
            diag,
            off,
            c_prime,
            inv_pivot,
        }
    }

    pub fn len(&self) -> usize {
        self.c_prime.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c_prime.is_empty()
    }

    /// Solves in place: `x` holds the right-hand side on entry.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(x.len(), n);
        if n == 0 {
            return;
        }
        x[0] *= self.inv_pivot[0];
        for i in 1..n {
            x[i] = (x[i] - self.off * x[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.c_prime[i] * x[i + 1];
        }
    }

    /// `||A x - b||_2`.
    pub fn residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut ax = self.diag * x[i];
                if i > 0 {
                    ax += self.off * x[i - 1];
                }
                if i + 1 < n {
                    ax += self.off * x[i + 1];
                }
                (ax - b[i]).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Matrix-free `A = shift*I - coef*Delta_h` on a 2D grid with zero Dirichlet data.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedLaplacian2d {
    grid: Grid,
    shift: f64,
    coef: f64,
}

impl ShiftedLaplacian2d {
    pub fn new(grid: Grid, shift: f64, coef: f64) -> Self {
        ShiftedLaplacian2d { grid, shift, coef }
    }

    /// `out = A x` on interior nodes; boundary entries of `out` are zero.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let m = self.grid.points_per_axis();
        let inv_h2 = self.coef / (self.grid.spacing() * self.grid.spacing());
        let diag = self.shift + 4.0 * inv_h2;
        out.iter_mut().for_each(|o| *o = 0.0);
        for j in 1..m - 1 {
            for i in 1..m - 1 {
                let k = i + j * m;
                out[k] = diag * x[k] - inv_h2 * (x[k - 1] + x[k + 1] + x[k - m] + x[k + m]);
            }
        }
    }

    /// Conjugate gradients from the initial guess in `x`; stops when `||r|| <= tol * max(||b||, tiny)`.
    pub fn solve_cg(&self, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<usize> {
        let n = b.len();
        let dot = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(p, q)| p * q).sum::<f64>();
        let b_norm = dot(b, b).sqrt();
        if b_norm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            return Ok(0);
        }
        let target = tol * b_norm;
        let mut ax = vec![0.0; n];
        self.apply(x, &mut ax);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        for (i, ri) in r.iter_mut().enumerate() {
            if self.grid.is_boundary(i) {
                *ri = 0.0;
            }
        }
        let mut p = r.clone();
        let mut rr = dot(&r, &r);
        let mut ap = vec![0.0; n];
        for it in 0..max_iter {
            if rr.sqrt() <= target {
                return Ok(it);
            }
            self.apply(&p, &mut ap);
            let alpha = rr / dot(&p, &ap);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
        if rr.sqrt() <= target {
            return Ok(max_iter);
        }
        Err(Error::LinearSolver {
            iterations: max_iter,
            residual: rr.sqrt() / b_norm,
        })
    }
}
