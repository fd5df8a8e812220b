//! One-sided singular sums shared by the fractional operators and the norms.
//!
//! For node `t_j` these compute `∫_0^{t_j} φ_j(s) (t_j - s)^{-γ} ds` cell by
//! cell with the closed-form moments of [`crate::quadrature`]. Right-sided
//! versions are obtained by running the same sums on the time-reversed cells.

use rayon::prelude::*;

use crate::paths::Cells;
use crate::quadrature::{abs_linear_moment, abs_linear_pow_moment, linear_moment, LagTable};

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Integrand {
    /// `x(t_j) - x(s)`
    Increment,
    /// `|x(t_j) - x(s)|`
    AbsIncrement,
    /// `|x(t_j) - x(s)|^p`
    AbsIncrementPow(f64),
    /// `x(s)`
    Value,
}

/// Values of the integrand at the two ends of cell `k` in `u = t_j - s`:
/// `(at u0 = t_j - t_{k+1}, at u1 = t_j - t_k)`.
#[inline]
fn cell_ends(c: &Cells, j: usize, k: usize, kind: Integrand) -> (f64, f64) {
    match kind {
        Integrand::Value => (c.hi[k], c.lo[k]),
        _ => (c.node[j] - c.hi[k], c.node[j] - c.lo[k]),
    }
}

#[inline]
fn cell_integral(a: f64, b: f64, u0: f64, u1: f64, gamma: f64, kind: Integrand) -> f64 {
    match kind {
        Integrand::Increment | Integrand::Value => linear_moment(a, b, u0, u1, gamma),
        Integrand::AbsIncrement => abs_linear_moment(a, b, u0, u1, gamma),
        Integrand::AbsIncrementPow(p) => abs_linear_pow_moment(a, b, u0, u1, gamma, p),
    }
}

/// Left-sided sums at every node; entry 0 is always 0.
pub(crate) fn left_inner(c: &Cells, gamma: f64, kind: Integrand) -> Vec<f64> {
    let n = c.len();
    match c.step {
        Some(h) => {
            let table = LagTable::new(n, gamma);
            let scale = h.powf(1.0 - gamma);
            (0..n)
                .into_par_iter()
                .map(|j| uniform_node(c, j, &table, gamma, kind) * scale)
                .collect()
        }
        None => (0..n)
            .into_par_iter()
            .map(|j| {
                let mut acc = 0.0;
                for k in (0..j).rev() {
                    let (a, b) = cell_ends(c, j, k, kind);
                    let u0 = c.dist(j, k + 1);
                    let u1 = c.dist(j, k);
                    acc += cell_integral(a, b, u0, u1, gamma, kind);
                }
                acc
            })
            .collect(),
    }
}

fn uniform_node(c: &Cells, j: usize, t: &LagTable, gamma: f64, kind: Integrand) -> f64 {
    if j == 0 {
        return 0.0;
    }
    // Adjacent cell (lag 0) may be singular.
    let k0 = j - 1;
    let (a, b) = cell_ends(c, j, k0, kind);
    let mut acc = cell_integral(a, b, 0.0, 1.0, gamma, kind);
    match kind {
        Integrand::Increment | Integrand::Value => {
            for m in 1..j {
                let k = j - 1 - m;
                let (a, b) = cell_ends(c, j, k, kind);
                acc += a * t.p[m] + (b - a) * t.q[m];
            }
        }
        Integrand::AbsIncrement => {
            for m in 1..j {
                let k = j - 1 - m;
                let (a, b) = cell_ends(c, j, k, kind);
                if a * b >= 0.0 {
                    let (a, b) = (a.abs(), b.abs());
                    acc += a * t.p[m] + (b - a) * t.q[m];
                } else {
                    acc += abs_linear_moment(a, b, m as f64, m as f64 + 1.0, gamma);
                }
            }
        }
        Integrand::AbsIncrementPow(p) => {
            for m in 1..j {
                let k = j - 1 - m;
                let (a, b) = cell_ends(c, j, k, kind);
                acc += abs_linear_pow_moment(a, b, m as f64, m as f64 + 1.0, gamma, p);
            }
        }
    }
    acc
}

/// Right-sided sums `∫_{t_j}^T φ_j(s) (s - t_j)^{-γ} ds` at every node.
pub(crate) fn right_inner(c: &Cells, gamma: f64, kind: Integrand) -> Vec<f64> {
    let mut v = left_inner(&c.reversed(), gamma, kind);
    v.reverse();
    v
}
