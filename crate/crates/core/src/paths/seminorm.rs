//! Hölder and Gagliardo seminorms and the one-sided fractional Sobolev norms.
//!
//! Integrals are exact for the interpolant of the sampled path except for the
//! outer `dt` integral of the double integrals, which is a trapezoid over
//! nodes. Sups are taken over nodes only; for piecewise-linear paths this is
//! exact for the Hölder seminorm and a lower estimate for the `W_∞` sups.

use rayon::prelude::*;
use serde::Serialize;

use super::{guard, Cells, SampledPath};
use crate::error::{invalid, Result};
use crate::kernel::{left_inner, right_inner, Integrand};
use crate::quadrature::abs_linear_moment;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeminormParams {
    pub alpha: f64,
    pub theta: f64,
    pub p: f64,
}

impl SeminormParams {
    pub fn new(alpha: f64, theta: f64, p: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return invalid(format!("alpha must lie in (0, 1], got {alpha}"));
        }
        check_theta(theta)?;
        check_p(p)?;
        Ok(Self { alpha, theta, p })
    }
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        invalid(format!("fractional order must lie in (0, 1), got {theta}"))
    }
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        invalid(format!("exponent must be a finite p >= 1, got {p}"))
    }
}

pub fn sup_norm(path: &SampledPath) -> f64 {
    path.values().iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Largest `|x(t) - x(s)| / (t - s)^alpha` over node pairs.
pub fn holder_seminorm(path: &SampledPath, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return invalid(format!("Hölder order must lie in (0, 1], got {alpha}"));
    }
    let v = path.values();
    let t = path.times();
    let n = v.len();
    let best = match path.grid().step() {
        Some(h) => {
            let w: Vec<f64> = (0..n).map(|m| (m as f64 * h).powf(-alpha)).collect();
            (1..n)
                .into_par_iter()
                .map(|j| {
                    let mut m = 0.0f64;
                    for i in 0..j {
                        m = m.max((v[j] - v[i]).abs() * w[j - i]);
                    }
                    m
                })
                .reduce(|| 0.0, f64::max)
        }
        None => (1..n)
            .into_par_iter()
            .map(|j| {
                let mut m = 0.0f64;
                for i in 0..j {
                    m = m.max((v[j] - v[i]).abs() / (t[j] - t[i]).powf(alpha));
                }
                m
            })
            .reduce(|| 0.0, f64::max),
    };
    Ok(guard(best))
}

/// `( ∬_{[0,T]^2} |x(t) - x(s)|^p / |t - s|^{1 + θp} ds dt )^{1/p}`.
pub fn gagliardo_seminorm(path: &SampledPath, theta: f64, p: f64) -> Result<f64> {
    check_theta(theta)?;
    check_p(p)?;
    if theta * p >= 1.0 {
        log::warn!("theta * p = {} >= 1: the seminorm is infinite for non-constant continuous paths", theta * p);
    }
    let cells = Cells::from_path(path);
    let gamma = 1.0 + theta * p;
    let kind = if p == 1.0 {
        Integrand::AbsIncrement
    } else {
        Integrand::AbsIncrementPow(p)
    };
    let inner = left_inner(&cells, gamma, kind);
    let total = 2.0 * path.grid().trapezoid(&inner);
    Ok(guard(guard(total).powf(1.0 / p)))
}

/// `∫_0^T |f(t)| t^{-θ} dt`, exact for the interpolant.
fn weighted_abs_integral(cells: &Cells, theta: f64) -> f64 {
    (0..cells.len() - 1)
        .map(|k| {
            abs_linear_moment(
                cells.lo[k],
                cells.hi[k],
                cells.times[k],
                cells.times[k + 1],
                theta,
            )
        })
        .sum()
}

/// `||f||_{W^θ_1(0+)} = ∫ |f(t)| t^{-θ} dt + ∫_0^T ∫_0^t |f(t) - f(s)| (t - s)^{-1-θ} ds dt`.
pub fn w1_norm_left(path: &SampledPath, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let cells = Cells::from_path(path);
    let first = weighted_abs_integral(&cells, theta);
    let inner = left_inner(&cells, 1.0 + theta, Integrand::AbsIncrement);
    Ok(guard(first + path.grid().trapezoid(&inner)))
}

/// `||f||_{W^θ_∞(T-)}`: the sum of the two nodal sups.
pub fn winf_norm_right(path: &SampledPath, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let cells = Cells::from_path(path);
    let n = cells.len();
    let t_end = cells.times[n - 1];
    let f_end = cells.hi[n - 2];
    let mut first = 0.0f64;
    for j in 0..n - 1 {
        let d = match cells.step {
            Some(h) => (n - 1 - j) as f64 * h,
            None => t_end - cells.times[j],
        };
        first = first.max((f_end - cells.node[j]).abs() / d.powf(theta));
    }
    let inner = right_inner(&cells, 1.0 + theta, Integrand::AbsIncrement);
    let second = inner.iter().fold(0.0f64, |m, &v| if v.is_nan() { f64::INFINITY } else { m.max(v) });
    Ok(guard(first + second))
}

/// One inequality `lhs <= rhs` evaluated on a concrete path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundPair {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// The right side is infinite so the inequality says nothing.
    pub vacuous: bool,
}

impl BoundPair {
    /// Compare with a relative slack of `1e-12` for rounding.
    pub fn new(lhs: f64, rhs: f64) -> Self {
        let vacuous = rhs.is_infinite();
        let holds = vacuous || lhs <= rhs + 1e-12 * rhs.abs().max(lhs.abs()) + 1e-300;
        Self {
            lhs,
            rhs,
            holds,
            vacuous,
        }
    }

    /// Like [`BoundPair::new`] with an additive Monte Carlo slack.
    pub fn with_slack(lhs: f64, rhs: f64, slack: f64) -> Self {
        let mut b = Self::new(lhs, rhs);
        b.holds = b.vacuous || lhs <= rhs + slack + 1e-12 * rhs.abs();
        b
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderGagliardoReport {
    pub alpha: f64,
    pub eps: f64,
    pub w1: BoundPair,
    pub winf: BoundPair,
    /// Uses the constant `2 ε^{-1} (1+ε)^{-1} T^{1+ε}`, which is what the
    /// double integral over the full square yields.
    pub gagliardo: BoundPair,
    /// The same right side without the factor 2.
    pub gagliardo_rhs_half: f64,
}

impl HolderGagliardoReport {
    pub fn all_hold(&self) -> bool {
        self.w1.holds && self.winf.holds && self.gagliardo.holds
    }
}

/// The three Hölder–Gagliardo comparison inequalities at order `params.alpha`.
pub fn check_holder_gagliardo_bounds(
    path: &SampledPath,
    params: SeminormParams,
    eps: f64,
) -> Result<HolderGagliardoReport> {
    if !(eps > 0.0) {
        return invalid(format!("eps must be positive, got {eps}"));
    }
    let alpha = params.alpha;
    check_theta(alpha)?;
    let t_end = path.grid().t_end();
    let constant = path.values().iter().all(|&v| v == path.first());
    let holder = if alpha + eps > 1.0 {
        // only constants are Hölder of order > 1
        if constant {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        holder_seminorm(path, alpha + eps)?
    };
    let g1 = gagliardo_seminorm(path, alpha, 1.0)?;

    let w1 = BoundPair::new(
        w1_norm_left(path, alpha)?,
        guard(t_end.powf(1.0 - alpha) * sup_norm(path) / (1.0 - alpha) + 0.5 * g1),
    );
    let winf = BoundPair::new(
        winf_norm_right(path, alpha)?,
        guard((1.0 + 1.0 / eps) * t_end.powf(eps) * holder),
    );
    let half = guard(t_end.powf(1.0 + eps) * holder / (eps * (1.0 + eps)));
    let gagliardo = BoundPair::new(g1, guard(2.0 * half));
    Ok(HolderGagliardoReport {
        alpha,
        eps,
        w1,
        winf,
        gagliardo,
        gagliardo_rhs_half: half,
    })
}
