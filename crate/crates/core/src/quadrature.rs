//! Closed-form kernel moments and Gauss–Legendre rules.
//!
//! The singular integrals in this crate all reduce to integrating a linear
//! function against `u^{-gamma}` over a cell `[u0, u1]` with `u0 >= 0`. The
//! two moments
//!
//! ```text
//! m0 = ∫ u^{-γ} du,     m1 = ∫ (u - u0)/(u1 - u0) · u^{-γ} du
//! ```
//!
//! are evaluated with `ln_1p`/`exp_m1` so that narrow cells far from the
//! singularity do not lose digits to cancellation.

use std::sync::OnceLock;

/// `expm1(a L) / a`, continuous at `a = 0`.
fn e_ratio(a: f64, l: f64) -> f64 {
    if a == 0.0 {
        l
    } else {
        (a * l).exp_m1() / a
    }
}

/// `e_ratio(a, l) - e_ratio(b, l)` without cancellation for small `l`.
fn e_ratio_diff(a: f64, b: f64, l: f64) -> f64 {
    if l >= 0.5 {
        return e_ratio(a, l) - e_ratio(b, l);
    }
    let mut sum = 0.0;
    let mut lk = l; // l^k / k!
    let mut ak = 1.0; // a^{k-1}
    let mut bk = 1.0;
    for k in 2..60 {
        lk *= l / k as f64;
        ak *= a;
        bk *= b;
        sum += (ak - bk) * lk;
        // ak - bk can vanish for single k (e.g. a = -b), so bound the tail instead.
        if (ak.abs() + bk.abs()) * lk <= 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// Moments `(m0, m1)` of `u^{-gamma}` on `[u0, u1]`, `0 <= u0 < u1`, `gamma < 2`.
///
/// `m0` is `+inf` when `u0 = 0` and `gamma >= 1`.
pub fn power_moments(u0: f64, u1: f64, gamma: f64) -> (f64, f64) {
    debug_assert!(u0 >= 0.0 && u1 > u0 && gamma < 2.0);
    if u0 == 0.0 {
        let m0 = if gamma >= 1.0 {
            f64::INFINITY
        } else {
            u1.powf(1.0 - gamma) / (1.0 - gamma)
        };
        return (m0, u1.powf(1.0 - gamma) / (2.0 - gamma));
    }
    let r = (u1 - u0) / u0;
    let l = r.ln_1p();
    let scale = u0.powf(1.0 - gamma);
    let m0 = scale * e_ratio(1.0 - gamma, l);
    let m1 = scale * e_ratio_diff(2.0 - gamma, 1.0 - gamma, l) / r;
    (m0, m1)
}

/// `∫ ℓ(u) u^{-gamma} du` on `[u0, u1]` for ℓ linear with `ℓ(u0) = a`, `ℓ(u1) = b`.
///
/// Returns `+inf` (signed by `a`) when the integral diverges at `u0 = 0`.
pub fn linear_moment(a: f64, b: f64, u0: f64, u1: f64, gamma: f64) -> f64 {
    let (m0, m1) = power_moments(u0, u1, gamma);
    if m0.is_infinite() {
        if a == 0.0 {
            return b * m1;
        }
        return f64::INFINITY.copysign(a);
    }
    a * m0 + (b - a) * m1
}

/// `∫ |ℓ(u)| u^{-gamma} du`, splitting the cell where ℓ changes sign.
pub fn abs_linear_moment(a: f64, b: f64, u0: f64, u1: f64, gamma: f64) -> f64 {
    if a * b >= 0.0 {
        return linear_moment(a.abs(), b.abs(), u0, u1, gamma);
    }
    let root = u0 + (u1 - u0) * (a / (a - b));
    if !(root > u0 && root < u1) {
        // Root collapsed onto an endpoint in floating point.
        return linear_moment(a.abs(), b.abs(), u0, u1, gamma).abs();
    }
    linear_moment(a.abs(), 0.0, u0, root, gamma) + linear_moment(0.0, b.abs(), root, u1, gamma)
}

/// `∫ |ℓ(u)|^p u^{-gamma} du` for `p >= 1`.
///
/// The cell touching the singularity is integrated in closed form (it must
/// have `a = 0` to converge when `gamma >= 1`); other cells use Gauss–Legendre
/// on each sign-definite piece.
pub fn abs_linear_pow_moment(a: f64, b: f64, u0: f64, u1: f64, gamma: f64, p: f64) -> f64 {
    if p == 1.0 {
        return abs_linear_moment(a, b, u0, u1, gamma);
    }
    if a == 0.0 && b == 0.0 {
        return 0.0;
    }
    if u0 == 0.0 {
        if a != 0.0 {
            if gamma >= 1.0 {
                return f64::INFINITY;
            }
            return gl_abs_pow(a, b, u0, u1, gamma, p);
        }
        // |b u/u1|^p u^{-gamma}
        let e = p + 1.0 - gamma;
        return b.abs().powf(p) * u1.powf(1.0 - gamma) / e;
    }
    if a * b < 0.0 {
        let root = u0 + (u1 - u0) * (a / (a - b));
        if root > u0 && root < u1 {
            return gl_abs_pow(a, 0.0, u0, root, gamma, p) + gl_abs_pow(0.0, b, root, u1, gamma, p);
        }
    }
    gl_abs_pow(a, b, u0, u1, gamma, p)
}

fn gl_abs_pow(a: f64, b: f64, u0: f64, u1: f64, gamma: f64, p: f64) -> f64 {
    let rule = GaussLegendre::cached16();
    let w = u1 - u0;
    rule.integrate(0.0, 1.0, |v| {
        let u = u0 + v * w;
        (a + (b - a) * v).abs().powf(p) * u.powf(-gamma)
    }) * w
}

/// Per-lag moments on a uniform grid with unit step.
///
/// Lag `m` is the cell `[m, m + 1]`; multiply by `h^{1-gamma}` for step `h`.
#[derive(Clone, Debug)]
pub struct LagTable {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl LagTable {
    pub fn new(len: usize, gamma: f64) -> Self {
        let mut p = Vec::with_capacity(len);
        let mut q = Vec::with_capacity(len);
        for m in 0..len {
            let (a, b) = power_moments(m as f64, m as f64 + 1.0, gamma);
            p.push(a);
            q.push(b);
        }
        Self { p, q }
    }
}

/// Gauss–Legendre rule on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 1 { x } else { p1 };
                let pm = if n == 1 { 1.0 } else { p0 };
                dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            if n == 1 {
                x = 0.0;
                dp = 1.0;
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn cached16() -> &'static Self {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| Self::new(16))
    }

    pub fn cached20() -> &'static Self {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| Self::new(20))
    }

    pub fn cached10() -> &'static Self {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| Self::new(10))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + r * x);
        }
        s * r
    }
}

/// Adaptive Gauss–Legendre: a 10/20-point pair with bisection until the two
/// agree to `tol` (absolute, prorated by length), to rounding level, or the
/// depth limit is reached.
pub fn adaptive_gl(a: f64, b: f64, tol: f64, f: &impl Fn(f64) -> f64) -> f64 {
    fn rec(a: f64, b: f64, tol: f64, f: &impl Fn(f64) -> f64, depth: u32, whole: f64) -> f64 {
        let coarse = GaussLegendre::cached10().integrate(a, b, f);
        let fine = GaussLegendre::cached20().integrate(a, b, f);
        let diff = (fine - coarse).abs();
        if diff <= tol * (b - a) / whole || diff <= 1e-15 * fine.abs() || depth >= 30 {
            return fine;
        }
        let m = 0.5 * (a + b);
        rec(a, m, tol, f, depth + 1, whole) + rec(m, b, tol, f, depth + 1, whole)
    }
    if b <= a {
        return 0.0;
    }
    rec(a, b, tol, f, 0, b - a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn naive_moments(u0: f64, u1: f64, gamma: f64) -> (f64, f64) {
        let m0 = (u1.powf(1.0 - gamma) - u0.powf(1.0 - gamma)) / (1.0 - gamma);
        let i1 = (u1.powf(2.0 - gamma) - u0.powf(2.0 - gamma)) / (2.0 - gamma);
        (m0, (i1 - u0 * m0) / (u1 - u0))
    }

    #[test]
    fn moments_match_naive_on_wide_cells() {
        for &g in &[0.2, 0.5, 1.3, 1.7] {
            let (a, b) = power_moments(0.5, 3.0, g);
            let (na, nb) = naive_moments(0.5, 3.0, g);
            assert_relative_eq!(a, na, max_relative = 1e-13);
            assert_relative_eq!(b, nb, max_relative = 1e-13);
        }
    }

    #[test]
    fn moments_narrow_cell_against_quadrature() {
        let (u0, u1, g) = (1000.0, 1001.0, 1.4);
        let (m0, m1) = power_moments(u0, u1, g);
        let rule = GaussLegendre::new(20);
        let q0 = rule.integrate(u0, u1, |u: f64| u.powf(-g));
        let q1 = rule.integrate(u0, u1, |u: f64| (u - u0) * u.powf(-g));
        assert_relative_eq!(m0, q0, max_relative = 1e-13);
        assert_relative_eq!(m1, q1, max_relative = 1e-12);
    }

    #[test]
    fn gamma_one_is_logarithmic() {
        let (m0, _) = power_moments(1.0, 2.0, 1.0);
        assert_relative_eq!(m0, 2f64.ln(), max_relative = 1e-15);
    }

    #[test]
    fn singular_cell() {
        let (m0, m1) = power_moments(0.0, 1.0, 1.5);
        assert!(m0.is_infinite());
        assert_relative_eq!(m1, 2.0, max_relative = 1e-15);
        assert_eq!(linear_moment(0.0, 1.0, 0.0, 1.0, 1.5), 2.0);
        assert_eq!(linear_moment(1.0, 1.0, 0.0, 1.0, 1.5), f64::INFINITY);
    }

    #[test]
    fn abs_moment_splits_at_root() {
        // |1 - 2u| on [0.5, 1.5] shifted: ℓ(u) = a + (b-a)(u-u0)
        let (a, b, u0, u1, g) = (1.0, -1.0, 1.0, 2.0, 0.7);
        let v = abs_linear_moment(a, b, u0, u1, g);
        let q = adaptive_gl(u0, 1.5, 1e-14, &|u: f64| (1.0 - 2.0 * (u - 1.0)) * u.powf(-g))
            + adaptive_gl(1.5, u1, 1e-14, &|u: f64| (2.0 * (u - 1.0) - 1.0) * u.powf(-g));
        assert_relative_eq!(v, q, max_relative = 1e-12);
    }

    #[test]
    fn pow_moment_adjacent_cell() {
        // ∫_0^h |b u/h|^2 u^{-1.3} du = b^2 h^{-0.3} / 1.7
        let v = abs_linear_pow_moment(0.0, 2.0, 0.0, 0.5, 1.3, 2.0);
        assert_relative_eq!(v, 4.0 * 0.5f64.powf(-0.3) / 1.7, max_relative = 1e-14);
    }

    #[test]
    fn gauss_legendre_exactness() {
        let r = GaussLegendre::new(7);
        // exact for degree 13
        let v = r.integrate(-1.0, 2.0, |x| x.powi(13));
        assert_relative_eq!(v, (2f64.powi(14) - 1.0) / 14.0, max_relative = 1e-13);
        let one = GaussLegendre::new(1);
        assert_relative_eq!(one.integrate(0.0, 2.0, |x| 3.0 * x), 6.0);
    }

    #[test]
    fn adaptive_handles_kinks() {
        let v = adaptive_gl(-1.0, 2.0, 1e-12, &|x: f64| x.abs());
        assert_relative_eq!(v, 2.5, max_relative = 1e-10);
    }

    proptest! {
        #[test]
        fn lag_table_matches_direct(m in 1usize..5000, g in 0.05f64..1.95) {
            let t = LagTable::new(m + 1, g);
            let (a, b) = power_moments(m as f64, m as f64 + 1.0, g);
            prop_assert_eq!(t.p[m], a);
            prop_assert_eq!(t.q[m], b);
            let rule = GaussLegendre::new(20);
            let q0 = rule.integrate(m as f64, m as f64 + 1.0, |u: f64| u.powf(-g));
            prop_assert!((a - q0).abs() <= 1e-12 * q0);
        }

        #[test]
        fn abs_moment_bounds_signed(a in -3.0f64..3.0, b in -3.0f64..3.0, u0 in 0.01f64..2.0, w in 0.01f64..2.0, g in 0.05f64..1.95) {
            let signed = linear_moment(a, b, u0, u0 + w, g);
            let abs = abs_linear_moment(a, b, u0, u0 + w, g);
            prop_assert!(abs >= signed.abs() * (1.0 - 1e-12) - 1e-300);
        }
    }
}
