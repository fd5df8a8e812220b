//! Evaluation functions of locally finite variation.
//!
//! A [`BVFunction`] is
//!
//! ```text
//! f(x) = offset + scale · A(z) + Σ_{loc <= z} size,   z = clamp(x, lo, hi)
//! ```
//!
//! where `A` is a named smooth formula whose derivative is known exactly and
//! the optional clamp window implements truncation. Evaluation is always the
//! right-continuous representative.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature::adaptive_gl;

/// Smooth building blocks with closed-form derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AcFormula {
    #[default]
    Zero,
    Identity,
    Square,
    Sine,
    Cosine,
}

impl AcFormula {
    pub fn value(self, x: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Identity => x,
            Self::Square => x * x,
            Self::Sine => x.sin(),
            Self::Cosine => x.cos(),
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Identity => 1.0,
            Self::Square => 2.0 * x,
            Self::Sine => x.cos(),
            Self::Cosine => -x.sin(),
        }
    }

    /// An antiderivative of `|A'|`.
    fn abs_derivative_primitive(self, x: f64) -> f64 {
        // ∫ |sin| from a zero: 2 per half period plus 1 - cos of the remainder.
        let periodic = |y: f64| {
            let n = (y / PI).floor();
            let r = y - n * PI;
            2.0 * n + 1.0 - r.cos()
        };
        match self {
            Self::Zero => 0.0,
            Self::Identity => x,
            Self::Square => x * x.abs(),
            Self::Sine => periodic(x + 0.5 * PI),
            Self::Cosine => periodic(x),
        }
    }

    /// `∫_a^b |A'|` for `a <= b`, possibly infinite.
    pub fn abs_derivative_integral(self, a: f64, b: f64) -> f64 {
        if self == Self::Zero || b <= a {
            return 0.0;
        }
        if !a.is_finite() || !b.is_finite() {
            return f64::INFINITY;
        }
        self.abs_derivative_primitive(b) - self.abs_derivative_primitive(a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Jump {
    pub loc: f64,
    pub size: f64,
}

/// `f` is Lipschitz on `(-eps, eps)` with the given constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LipschitzWindow {
    pub eps: f64,
    pub constant: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBv {
    #[serde(default)]
    jumps: Vec<Jump>,
    #[serde(default)]
    ac: AcFormula,
    #[serde(default = "one")]
    ac_scale: f64,
    #[serde(default)]
    offset: f64,
    #[serde(default)]
    clamp: Option<[f64; 2]>,
    #[serde(default)]
    lipschitz_window: Option<LipschitzWindow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBv", into = "RawBv")]
pub struct BVFunction {
    jumps: Vec<Jump>,
    ac: AcFormula,
    ac_scale: f64,
    offset: f64,
    clamp: Option<[f64; 2]>,
    lipschitz_window: Option<LipschitzWindow>,
}

impl TryFrom<RawBv> for BVFunction {
    type Error = crate::Error;
    fn try_from(r: RawBv) -> Result<Self> {
        let mut f = Self::new(r.jumps, r.ac, r.ac_scale, r.offset)?;
        if let Some([lo, hi]) = r.clamp {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return invalid("clamp window must be a finite [lo, hi] with lo < hi");
            }
            f.clamp = Some([lo, hi]);
        }
        if let Some(w) = r.lipschitz_window {
            f = f.with_lipschitz_window(w.eps, w.constant)?;
        }
        Ok(f)
    }
}

impl From<BVFunction> for RawBv {
    fn from(f: BVFunction) -> Self {
        RawBv {
            jumps: f.jumps,
            ac: f.ac,
            ac_scale: f.ac_scale,
            offset: f.offset,
            clamp: f.clamp,
            lipschitz_window: f.lipschitz_window,
        }
    }
}

impl BVFunction {
    pub fn new(mut jumps: Vec<Jump>, ac: AcFormula, ac_scale: f64, offset: f64) -> Result<Self> {
        if jumps.iter().any(|j| !j.loc.is_finite() || !j.size.is_finite()) {
            return invalid("jump locations and sizes must be finite");
        }
        if !ac_scale.is_finite() || !offset.is_finite() {
            return invalid("ac_scale and offset must be finite");
        }
        jumps.retain(|j| j.size != 0.0);
        jumps.sort_by(|a, b| a.loc.total_cmp(&b.loc));
        // merge coincident jumps
        let mut merged: Vec<Jump> = Vec::with_capacity(jumps.len());
        for j in jumps {
            match merged.last_mut() {
                Some(last) if last.loc == j.loc => last.size += j.size,
                _ => merged.push(j),
            }
        }
        Ok(Self {
            jumps: merged,
            ac,
            ac_scale,
            offset,
            clamp: None,
            lipschitz_window: None,
        })
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![], AcFormula::Zero, 1.0, c).expect("finite constant")
    }

    /// `1(x >= loc)`.
    pub fn indicator(loc: f64) -> Self {
        Self::staircase(&[(loc, 1.0)])
    }

    pub fn staircase(jumps: &[(f64, f64)]) -> Self {
        let jumps = jumps.iter().map(|&(loc, size)| Jump { loc, size }).collect();
        Self::new(jumps, AcFormula::Zero, 1.0, 0.0).expect("finite jumps")
    }

    pub fn smooth(ac: AcFormula, scale: f64) -> Self {
        Self::new(vec![], ac, scale, 0.0).expect("finite scale")
    }

    pub fn identity() -> Self {
        Self::smooth(AcFormula::Identity, 1.0)
    }

    pub fn square() -> Self {
        Self::smooth(AcFormula::Square, 1.0)
    }

    /// The indicator of `[0, ∞)` made linear on `(-eps, eps)`, so that it is
    /// Lipschitz near the origin with constant `1/(2 eps)`.
    pub fn smoothed_step(eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return invalid("eps must be positive");
        }
        let mut f = Self::new(vec![], AcFormula::Identity, 0.5 / eps, 0.5)?;
        f.clamp = Some([-eps, eps]);
        f.with_lipschitz_window(eps, 0.5 / eps)
    }

    pub fn with_lipschitz_window(mut self, eps: f64, constant: f64) -> Result<Self> {
        if !(eps > 0.0) || !(constant >= 0.0) {
            return invalid("Lipschitz window needs eps > 0 and constant >= 0");
        }
        for j in self.effective_jumps() {
            if j.loc.abs() < eps {
                return invalid(format!(
                    "jump at {} lies inside the declared Lipschitz window (-{eps}, {eps})",
                    j.loc
                ));
            }
        }
        self.lipschitz_window = Some(LipschitzWindow { eps, constant });
        Ok(self)
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn ac(&self) -> AcFormula {
        self.ac
    }

    pub fn ac_scale(&self) -> f64 {
        self.ac_scale
    }

    pub fn clamp(&self) -> Option<[f64; 2]> {
        self.clamp
    }

    pub fn lipschitz_window(&self) -> Option<LipschitzWindow> {
        self.lipschitz_window
    }

    fn window(&self) -> (f64, f64) {
        self.clamp.map_or((f64::NEG_INFINITY, f64::INFINITY), |[a, b]| (a, b))
    }

    /// Jumps that are visible after clamping (a jump at the lower clamp edge
    /// is absorbed into the constant left tail).
    fn effective_jumps(&self) -> impl Iterator<Item = &Jump> {
        let (lo, hi) = self.window();
        self.jumps.iter().filter(move |j| j.loc > lo && j.loc <= hi)
    }

    pub fn has_jumps(&self) -> bool {
        self.effective_jumps().next().is_some()
    }

    pub fn is_constant(&self) -> bool {
        !self.has_jumps() && (self.ac == AcFormula::Zero || self.ac_scale == 0.0)
    }

    /// Right-continuous value.
    pub fn eval(&self, x: f64) -> f64 {
        let z = match self.clamp {
            Some([lo, hi]) => x.clamp(lo, hi),
            None => x,
        };
        let k = self.jumps.partition_point(|j| j.loc <= z);
        let jumps: f64 = self.jumps[..k].iter().map(|j| j.size).sum();
        self.offset + self.ac_scale * self.ac.value(z) + jumps
    }

    /// Derivative of the absolutely continuous part (0 outside the clamp window).
    pub fn ac_derivative(&self, x: f64) -> f64 {
        let (lo, hi) = self.window();
        if x < lo || x > hi {
            0.0
        } else {
            self.ac_scale * self.ac.derivative(x)
        }
    }

    /// `μ_f(a, b]`; either bound may be infinite.
    pub fn total_variation(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = self.window();
        let (a, b) = (a.max(lo), b.min(hi));
        if !(a < b) {
            return 0.0;
        }
        let ac = if self.ac_scale == 0.0 {
            0.0
        } else {
            self.ac_scale.abs() * self.ac.abs_derivative_integral(a, b)
        };
        let jumps: f64 = self
            .jumps
            .iter()
            .filter(|j| j.loc > a && j.loc <= b)
            .map(|j| j.size.abs())
            .sum();
        ac + jumps
    }

    /// Total variation over the whole line.
    pub fn variation(&self) -> f64 {
        self.total_variation(f64::NEG_INFINITY, f64::INFINITY)
    }

    /// `|μ_f|({x})`.
    pub fn atom(&self, x: f64) -> f64 {
        self.effective_jumps()
            .filter(|j| j.loc == x)
            .map(|j| j.size.abs())
            .sum()
    }

    /// `μ_f[a, b]`.
    pub fn mu_closed(&self, a: f64, b: f64) -> f64 {
        self.total_variation(a, b) + self.atom(a)
    }

    /// `∫_{[a,b]} g dμ_f`: atoms exactly, the absolutely continuous part by
    /// adaptive Gauss–Legendre between consecutive atoms.
    pub fn integrate_against_variation(&self, a: f64, b: f64, g: impl Fn(f64) -> f64, tol: f64) -> f64 {
        let atoms: f64 = self
            .effective_jumps()
            .filter(|j| j.loc >= a && j.loc <= b)
            .map(|j| j.size.abs() * g(j.loc))
            .sum();
        if self.ac == AcFormula::Zero || self.ac_scale == 0.0 {
            return atoms;
        }
        let (lo, hi) = self.window();
        let (a, b) = (a.max(lo), b.min(hi));
        if !(a < b) {
            return atoms;
        }
        let density = |y: f64| (self.ac_scale * self.ac.derivative(y)).abs() * g(y);
        atoms + adaptive_gl(a, b, tol, &density)
    }

    /// `f^{(k)}`: constant outside `[-k, k]`.
    pub fn truncate(&self, k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return invalid(format!("truncation level must be positive, got {k}"));
        }
        let mut f = self.clone();
        let (lo, hi) = self.window();
        let (lo, hi) = (lo.max(-k), hi.min(k));
        if !(lo < hi) {
            // window collapses to a point: keep a constant with the same value
            return Ok(Self::constant(self.eval(lo)));
        }
        f.clamp = Some([lo, hi]);
        Ok(f)
    }

    /// `f'` as a function of locally finite variation, available when `f` is
    /// absolutely continuous on the whole line.
    pub fn derivative_function(&self) -> Result<Self> {
        if self.has_jumps() || self.clamp.is_some() {
            return invalid("derivative representation needs a jump-free, untruncated function");
        }
        let s = self.ac_scale;
        Ok(match self.ac {
            AcFormula::Zero => Self::constant(0.0),
            AcFormula::Identity => Self::constant(s),
            AcFormula::Square => Self::smooth(AcFormula::Identity, 2.0 * s),
            AcFormula::Sine => Self::smooth(AcFormula::Cosine, s),
            AcFormula::Cosine => Self::smooth(AcFormula::Sine, -s),
        })
    }
}

/// The variation functions of `f`, anchored at the origin:
/// `f^±(x) = μ_f^±(0, x]` for `x >= 0` and `-μ_f^±(x, 0]` for `x < 0`,
/// so that `f = f(0) + f^+ - f^-`.
#[derive(Clone, Debug)]
pub struct JordanPair {
    f: BVFunction,
    base: f64,
}

pub fn jordan_decompose(f: &BVFunction) -> JordanPair {
    JordanPair {
        f: f.clone(),
        base: f.eval(0.0),
    }
}

impl JordanPair {
    pub fn base(&self) -> f64 {
        self.base
    }

    /// `(μ^+(a, b], μ^-(a, b])` for `a <= b`.
    fn split(&self, a: f64, b: f64) -> (f64, f64) {
        let f = &self.f;
        let (lo, hi) = f.window();
        let (ca, cb) = (a.max(lo), b.min(hi));
        if !(ca < cb) {
            return (0.0, 0.0);
        }
        let mut plus = 0.0;
        let mut minus = 0.0;
        for j in f.jumps.iter().filter(|j| j.loc > ca && j.loc <= cb) {
            if j.size > 0.0 {
                plus += j.size;
            } else {
                minus -= j.size;
            }
        }
        if f.ac != AcFormula::Zero && f.ac_scale != 0.0 {
            let total = f.ac_scale.abs() * f.ac.abs_derivative_integral(ca, cb);
            let net = f.ac_scale * (f.ac.value(cb) - f.ac.value(ca));
            plus += 0.5 * (total + net).max(0.0);
            minus += 0.5 * (total - net).max(0.0);
        }
        (plus, minus)
    }

    pub fn plus(&self, x: f64) -> f64 {
        if x >= 0.0 {
            self.split(0.0, x).0
        } else {
            -self.split(x, 0.0).0
        }
    }

    pub fn minus(&self, x: f64) -> f64 {
        if x >= 0.0 {
            self.split(0.0, x).1
        } else {
            -self.split(x, 0.0).1
        }
    }

    /// `base + plus - minus`.
    pub fn reconstruct(&self, x: f64) -> f64 {
        self.base + self.plus(x) - self.minus(x)
    }
}

/// `d_1(f)`: `V(f)^p`, plus `L^p` for the declared Lipschitz constant when `eps > 0`.
pub fn d1_constant(f: &BVFunction, p: f64, eps: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return invalid(format!("p must be >= 1, got {p}"));
    }
    if !(eps >= 0.0) {
        return invalid(format!("eps must be >= 0, got {eps}"));
    }
    let v = f.variation().powf(p);
    if eps == 0.0 {
        return Ok(v);
    }
    match f.lipschitz_window {
        Some(w) if w.eps >= eps => Ok(v + w.constant.powf(p)),
        Some(w) => invalid(format!(
            "declared Lipschitz window eps = {} is narrower than requested eps = {eps}",
            w.eps
        )),
        None => invalid("eps > 0 needs a declared lipschitz_window"),
    }
}

/// `d_2(p_1)` from the density sup (and, for `eps > 0`, its sup on `|x| > eps/2`).
pub fn d2_constant(q: f64, eps: f64, sup_density: f64, sup_density_outside: f64) -> f64 {
    let base = if eps == 0.0 {
        sup_density
    } else {
        2.0 / eps + sup_density_outside
    };
    base.powf(q / (q + 1.0))
}

// Smooth bump density on (0, 1).
fn bump_unnormalized(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        (-1.0 / (u * (1.0 - u))).exp()
    }
}

fn bump_norm() -> f64 {
    static NORM: OnceLock<f64> = OnceLock::new();
    *NORM.get_or_init(|| 1.0 / adaptive_gl(0.0, 1.0, 1e-19, &bump_unnormalized))
}

/// `φ(u) = C exp(-1/(u(1-u)))` on `(0, 1)`, normalized to unit mass.
pub fn bump_density(u: f64) -> f64 {
    bump_norm() * bump_unnormalized(u)
}

/// `∫_0^v φ`, using the symmetry `φ(u) = φ(1 - u)`.
pub fn bump_cdf(v: f64) -> f64 {
    if v <= 0.0 {
        0.0
    } else if v >= 1.0 {
        1.0
    } else if v <= 0.5 {
        adaptive_gl(0.0, v, 1e-16, &bump_density)
    } else {
        1.0 - adaptive_gl(0.0, 1.0 - v, 1e-16, &bump_density)
    }
}

/// `f_n(x) = E f(x - ξ/n)` with `ξ` distributed with the bump density.
#[derive(Clone, Debug)]
pub struct Mollified {
    f: BVFunction,
    n: f64,
}

pub fn mollify(f: &BVFunction, n: u32) -> Result<Mollified> {
    if n == 0 {
        return invalid("mollification index must be >= 1");
    }
    Ok(Mollified {
        f: f.clone(),
        n: n as f64,
    })
}

impl Mollified {
    /// Points in `(0, 1)` where `u ↦ f(x - u/n)` is not smooth.
    fn breakpoints(&self, x: f64, with_jumps: bool) -> Vec<f64> {
        let mut pts = vec![0.0];
        let mut push = |loc: f64| {
            let u = self.n * (x - loc);
            if u > 0.0 && u < 1.0 {
                pts.push(u);
            }
        };
        if with_jumps {
            for j in self.f.effective_jumps() {
                push(j.loc);
            }
        }
        if let Some([lo, hi]) = self.f.clamp {
            push(lo);
            push(hi);
        }
        pts.push(1.0);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    pub fn value(&self, x: f64) -> f64 {
        let pts = self.breakpoints(x, true);
        let flat = self.f.ac == AcFormula::Zero || self.f.ac_scale == 0.0;
        let mut total = 0.0;
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            let outside = match self.f.clamp {
                Some([lo, hi]) => {
                    let y = x - mid / self.n;
                    y <= lo || y >= hi
                }
                None => false,
            };
            if flat || outside {
                total += self.f.eval(x - mid / self.n) * (bump_cdf(b) - bump_cdf(a));
            } else {
                let g = |u: f64| self.f.eval(x - u / self.n) * bump_density(u);
                total += adaptive_gl(a, b, 1e-14, &g);
            }
        }
        total
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let atoms: f64 = self
            .f
            .effective_jumps()
            .map(|j| j.size * self.n * bump_density(self.n * (x - j.loc)))
            .sum();
        if self.f.ac == AcFormula::Zero || self.f.ac_scale == 0.0 {
            return atoms;
        }
        let pts = self.breakpoints(x, false);
        let mut total = atoms;
        for w in pts.windows(2) {
            let g = |u: f64| self.f.ac_derivative(x - u / self.n) * bump_density(u);
            total += adaptive_gl(w[0], w[1], 1e-14, &g);
        }
        total
    }
}
