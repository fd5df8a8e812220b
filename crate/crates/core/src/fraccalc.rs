//! Riemann–Liouville integrals and Weyl–Marchaud derivatives of sampled paths.
//!
//! Right-sided operators return the real magnitude only. The phase factors
//! `(-1)^{-α}` of the right-sided definitions are collected into one overall
//! sign by [`crate::zs::zs_integral`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Result};
use crate::kernel::{left_inner, right_inner, Integrand};
use crate::paths::{Cells, Grid, SampledPath};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Anchored at the left end `a+`.
    Left,
    /// Anchored at the right end `b-`.
    Right,
}

/// Nodal values of a Weyl–Marchaud derivative.
#[derive(Clone, Debug, PartialEq)]
pub struct FracDerivative {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
    pub order: f64,
    pub side: Side,
    /// The constant subtracted from the path before differentiating.
    pub endpoint_value: f64,
}

fn check_integral_order(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        invalid(format!("integration order must lie in (0, 1], got {alpha}"))
    }
}

fn check_derivative_order(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        invalid(format!("derivative order must lie in (0, 1), got {alpha}"))
    }
}

/// `(1/Γ(α)) ∫_0^t f(s) (t - s)^{α-1} ds` at every node.
pub fn rl_integral_left(path: &SampledPath, alpha: f64) -> Result<SampledPath> {
    check_integral_order(alpha)?;
    let cells = Cells::from_path(path);
    let g = gamma(alpha);
    let values = left_inner(&cells, 1.0 - alpha, Integrand::Value)
        .into_iter()
        .map(|v| v / g)
        .collect();
    SampledPath::linear(path.grid().clone(), values)
}

/// `(1/Γ(α)) ∫_t^T f(s) (s - t)^{α-1} ds` at every node.
pub fn rl_integral_right(path: &SampledPath, alpha: f64) -> Result<SampledPath> {
    check_integral_order(alpha)?;
    let cells = Cells::from_path(path);
    let g = gamma(alpha);
    let values = right_inner(&cells, 1.0 - alpha, Integrand::Value)
        .into_iter()
        .map(|v| v / g)
        .collect();
    SampledPath::linear(path.grid().clone(), values)
}

/// Boundary term `num / d^α` with `0/0 = 0` at the anchor.
fn boundary_term(num: f64, d: f64, alpha: f64) -> f64 {
    if d > 0.0 {
        num / d.powf(alpha)
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(num)
    }
}

/// `D^α_{0+}(f - c)(t) = (1/Γ(1-α)) ( (f(t) - c)/t^α + α ∫_0^t (f(t) - f(s))/(t - s)^{1+α} ds )`.
pub fn wm_derivative_left(path: &SampledPath, alpha: f64, f_a_plus: f64) -> Result<FracDerivative> {
    check_derivative_order(alpha)?;
    let cells = Cells::from_path(path);
    let inner = left_inner(&cells, 1.0 + alpha, Integrand::Increment);
    let g = gamma(1.0 - alpha);
    let values = (0..cells.len())
        .map(|j| {
            let d = cells.dist(j, 0);
            let first = boundary_term(cells.node[j] - f_a_plus, d, alpha);
            let v = (first + alpha * inner[j]) / g;
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        })
        .collect();
    Ok(FracDerivative {
        grid: path.grid().clone(),
        values,
        order: alpha,
        side: Side::Left,
        endpoint_value: f_a_plus,
    })
}

/// Real magnitude of `D^α_{T-}(g - c)(t)`:
/// `(1/Γ(1-α)) ( (g(t) - c)/(T - t)^α + α ∫_t^T (g(t) - g(s))/(s - t)^{1+α} ds )`.
pub fn wm_derivative_right(path: &SampledPath, alpha: f64, g_b_minus: f64) -> Result<FracDerivative> {
    check_derivative_order(alpha)?;
    let cells = Cells::from_path(path);
    let n = cells.len();
    let inner = right_inner(&cells, 1.0 + alpha, Integrand::Increment);
    let g = gamma(1.0 - alpha);
    let values = (0..n)
        .map(|j| {
            let d = cells.dist(n - 1, j);
            let first = boundary_term(cells.node[j] - g_b_minus, d, alpha);
            let v = (first + alpha * inner[j]) / g;
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        })
        .collect();
    Ok(FracDerivative {
        grid: path.grid().clone(),
        values,
        order: alpha,
        side: Side::Right,
        endpoint_value: g_b_minus,
    })
}

impl FracDerivative {
    /// As a piecewise-linear path (for chaining operators).
    pub fn to_path(&self) -> Result<SampledPath> {
        SampledPath::linear(self.grid.clone(), self.values.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::make_uniform_grid;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid(n: usize) -> Arc<Grid> {
        Arc::new(make_uniform_grid(1.0, n).unwrap())
    }

    #[test]
    fn rl_left_examples() {
        let g = grid(2048);
        let one = SampledPath::from_fn(g.clone(), |_| 1.0);
        let v = rl_integral_left(&one, 0.5).unwrap();
        assert_relative_eq!(v.last(), 1.0 / gamma(1.5), max_relative = 1e-6);
        let zero = SampledPath::from_fn(g.clone(), |_| 0.0);
        assert!(rl_integral_left(&zero, 0.5).unwrap().values().iter().all(|&x| x == 0.0));
        let s = SampledPath::from_fn(g, |t| t);
        let v = rl_integral_left(&s, 0.5).unwrap();
        assert_relative_eq!(v.last(), 1.0 / gamma(2.5), max_relative = 1e-4);
    }

    #[test]
    fn rl_right_examples() {
        let g = grid(2048);
        let one = SampledPath::from_fn(g.clone(), |_| 1.0);
        assert_relative_eq!(rl_integral_right(&one, 0.5).unwrap().first(), 1.0 / gamma(1.5), max_relative = 1e-6);
        let s = SampledPath::from_fn(g, |t| 1.0 - t);
        assert_relative_eq!(rl_integral_right(&s, 0.5).unwrap().first(), 1.0 / gamma(2.5), max_relative = 1e-4);
    }

    #[test]
    fn rl_order_one_is_antiderivative() {
        let s = SampledPath::from_fn(grid(101), |t| 3.0 * t);
        let v = rl_integral_left(&s, 1.0).unwrap();
        assert_relative_eq!(v.last(), 1.5, max_relative = 1e-13);
    }

    #[test]
    fn wm_left_examples() {
        let g = grid(2048);
        let s = SampledPath::from_fn(g.clone(), |t| t);
        let d = wm_derivative_left(&s, 0.5, 0.0).unwrap();
        assert_relative_eq!(*d.values.last().unwrap(), 2.0 / gamma(0.5), max_relative = 1e-4);
        assert_eq!(d.values[0], 0.0);
        let z = SampledPath::from_fn(g.clone(), |_| 0.0);
        assert!(wm_derivative_left(&z, 0.5, 0.0).unwrap().values.iter().all(|&x| x == 0.0));
        // Γ(1.9)/Γ(1.4) ≈ 1.0839683
        let p = SampledPath::from_fn(g, |t| t.powf(0.9));
        let d = wm_derivative_left(&p, 0.5, 0.0).unwrap();
        let truth = gamma(1.9) / gamma(1.4);
        assert_relative_eq!(truth, 1.083_968_277, max_relative = 1e-9);
        assert_relative_eq!(*d.values.last().unwrap(), truth, max_relative = 1e-3);
    }

    #[test]
    fn wm_left_endpoint_sentinel() {
        let s = SampledPath::from_fn(grid(33), |t| 1.0 + t);
        let d = wm_derivative_left(&s, 0.3, 0.0).unwrap();
        assert_eq!(d.values[0], f64::INFINITY);
        assert!(d.values[1..].iter().all(|v| v.is_finite()));
        let d = wm_derivative_left(&s, 0.3, 1.0).unwrap();
        assert_eq!(d.values[0], 0.0);
    }

    #[test]
    fn wm_right_examples() {
        let g = grid(2048);
        let s = SampledPath::from_fn(g.clone(), |t| t);
        let d = wm_derivative_right(&s, 0.5, 1.0).unwrap();
        for (t, v) in g.times().iter().zip(&d.values).step_by(97) {
            assert_relative_eq!(*v, -(1.0 - t).sqrt() / gamma(1.5), max_relative = 1e-4, epsilon = 1e-12);
        }
        assert_relative_eq!(d.values[0], -1.0 / gamma(1.5), max_relative = 1e-4);
        let c = SampledPath::from_fn(g.clone(), |_| 4.0);
        assert!(wm_derivative_right(&c, 0.5, 4.0).unwrap().values.iter().all(|&x| x == 0.0));
        let r = SampledPath::from_fn(g.clone(), |t| 1.0 - t);
        let d = wm_derivative_right(&r, 0.5, 0.0).unwrap();
        for (t, v) in g.times().iter().zip(&d.values).step_by(97) {
            assert_relative_eq!(*v, (1.0 - t).sqrt() / gamma(1.5), max_relative = 1e-4, epsilon = 1e-12);
        }
    }

    #[test]
    fn invalid_orders() {
        let s = SampledPath::from_fn(grid(9), |t| t);
        assert!(wm_derivative_left(&s, 1.0, 0.0).is_err());
        assert!(wm_derivative_right(&s, 0.0, 0.0).is_err());
        assert!(rl_integral_left(&s, 1.5).is_err());
    }

    fn power_rule_error(n: usize, beta: f64, alpha: f64) -> f64 {
        let g = grid(n);
        let p = SampledPath::from_fn(g.clone(), |t| t.powf(beta));
        let d = wm_derivative_left(&p, alpha, 0.0).unwrap();
        let c = gamma(beta + 1.0) / gamma(beta - alpha + 1.0);
        [0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|&t| {
                let j = g.node_index(t).unwrap();
                ((d.values[j] - c * t.powf(beta - alpha)) / (c * t.powf(beta - alpha))).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn power_rule() {
        for &(beta, alpha) in &[(1.0, 0.5), (1.5, 0.3), (2.0, 0.7), (0.8, 0.4)] {
            assert!(power_rule_error(2049, beta, alpha) < 1e-3, "beta {beta} alpha {alpha}");
        }
    }

    #[test]
    fn refinement_convergence() {
        for &(beta, alpha) in &[(2.0, 0.5), (1.5, 0.3), (3.0, 0.6)] {
            let e1 = power_rule_error(257, beta, alpha);
            let e2 = power_rule_error(513, beta, alpha);
            assert!(e1 / e2 >= 1.5, "beta {beta} alpha {alpha}: {e1} -> {e2}");
        }
    }

    #[test]
    fn inverse_property() {
        let g = grid(2048);
        for alpha in [0.3, 0.5, 0.8] {
            let f = SampledPath::from_fn(g.clone(), |t| (2.0 * t).sin() + t * t);
            let i = rl_integral_left(&f, alpha).unwrap();
            let d = wm_derivative_left(&i, alpha, 0.0).unwrap();
            for j in (64..g.len() - 1).step_by(61) {
                let rel = (d.values[j] - f.values()[j]).abs() / f.values()[j].abs();
                assert!(rel < 1e-2, "alpha {alpha} node {j}: {}", rel);
            }
        }
    }

    proptest! {
        #[test]
        fn linearity(a in proptest::collection::vec(-2.0f64..2.0, 17), b in proptest::collection::vec(-2.0f64..2.0, 17),
                     ca in -3.0f64..3.0, cb in -3.0f64..3.0, alpha in 0.05f64..0.95) {
            let g = grid(17);
            let x = SampledPath::linear(g.clone(), a).unwrap();
            let y = SampledPath::linear(g, b).unwrap();
            let z = x.combine(ca, &y, cb).unwrap();
            let check = |u: &[f64], v: &[f64], w: &[f64]| {
                for i in 0..u.len() {
                    let lin = ca * u[i] + cb * v[i];
                    let scale = (ca * u[i]).abs() + (cb * v[i]).abs() + 1e-300;
                    if (w[i] - lin).abs() > 1e-12 * scale.max(w[i].abs()) + 1e-13 {
                        return false;
                    }
                }
                true
            };
            let (dx, dy, dz) = (
                wm_derivative_left(&x, alpha, 0.0).unwrap(),
                wm_derivative_left(&y, alpha, 0.0).unwrap(),
                wm_derivative_left(&z, alpha, 0.0).unwrap(),
            );
            // skip the anchor node, where a nonzero start is an infinite sentinel
            prop_assert!(check(&dx.values[1..], &dy.values[1..], &dz.values[1..]));
            let (rx, ry, rz) = (
                wm_derivative_right(&x, alpha, 0.0).unwrap(),
                wm_derivative_right(&y, alpha, 0.0).unwrap(),
                wm_derivative_right(&z, alpha, 0.0).unwrap(),
            );
            let last = rx.values.len() - 1;
            prop_assert!(check(&rx.values[..last], &ry.values[..last], &rz.values[..last]));
            let (ix, iy, iz) = (
                rl_integral_left(&x, alpha).unwrap(),
                rl_integral_left(&y, alpha).unwrap(),
                rl_integral_left(&z, alpha).unwrap(),
            );
            prop_assert!(check(ix.values(), iy.values(), iz.values()));
            let (jx, jy, jz) = (
                rl_integral_right(&x, alpha).unwrap(),
                rl_integral_right(&y, alpha).unwrap(),
                rl_integral_right(&z, alpha).unwrap(),
            );
            prop_assert!(check(jx.values(), jy.values(), jz.values()));
        }
    }
}
