//! Zähle–Stieltjes integrals, Riemann–Stieltjes sums and their comparison.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bv::BVFunction;
use crate::error::{invalid, Error, Result};
use crate::fraccalc::{wm_derivative_left, wm_derivative_right};
use crate::paths::{guard, w1_norm_left, winf_norm_right, InterpRule, SampledPath};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TagRule {
    #[default]
    Left,
    Right,
    Midpoint,
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaggedPartition {
    breakpoints: Vec<f64>,
    tags: Vec<f64>,
    rule: TagRule,
}

impl TaggedPartition {
    /// Explicit tags, one per cell.
    pub fn new(breakpoints: Vec<f64>, tags: Vec<f64>) -> Result<Self> {
        Self::validate(&breakpoints, &tags)?;
        Ok(Self {
            breakpoints,
            tags,
            rule: TagRule::Explicit,
        })
    }

    pub fn with_rule(breakpoints: Vec<f64>, rule: TagRule) -> Result<Self> {
        if rule == TagRule::Explicit {
            return invalid("explicit tags need TaggedPartition::new");
        }
        let tags: Vec<f64> = breakpoints
            .windows(2)
            .map(|w| match rule {
                TagRule::Left => w[0],
                TagRule::Right => w[1],
                _ => 0.5 * (w[0] + w[1]),
            })
            .collect();
        Self::validate(&breakpoints, &tags)?;
        Ok(Self {
            breakpoints,
            tags,
            rule,
        })
    }

    fn validate(b: &[f64], tags: &[f64]) -> Result<()> {
        if b.len() < 2 {
            return invalid("a partition needs at least one cell");
        }
        if b[0] != 0.0 {
            return invalid("partition must start at 0");
        }
        if b.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("breakpoints must be strictly increasing");
        }
        if tags.len() != b.len() - 1 {
            return invalid(format!("{} tags for {} cells", tags.len(), b.len() - 1));
        }
        for (i, &xi) in tags.iter().enumerate() {
            if !(xi >= b[i] && xi <= b[i + 1]) {
                return invalid(format!("tag {xi} outside cell [{}, {}]", b[i], b[i + 1]));
            }
        }
        Ok(())
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn tags(&self) -> &[f64] {
        &self.tags
    }

    pub fn rule(&self) -> TagRule {
        self.rule
    }

    pub fn cells(&self) -> usize {
        self.tags.len()
    }

    pub fn mesh(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Grid indices of breakpoints and tags; all must be grid nodes.
    fn indices(&self, path: &SampledPath) -> Result<(Vec<usize>, Vec<usize>)> {
        let grid = path.grid();
        if (self.breakpoints[self.breakpoints.len() - 1] - grid.t_end()).abs() > 1e-12 * grid.t_end() {
            return invalid("partition and grid cover different intervals");
        }
        let find = |t: f64, what: &str| {
            grid.node_index(t)
                .ok_or_else(|| Error::InvalidArgument(format!("{what} {t} is not a grid node")))
        };
        let b = self
            .breakpoints
            .iter()
            .map(|&t| find(t, "breakpoint"))
            .collect::<Result<Vec<_>>>()?;
        let x = self
            .tags
            .iter()
            .map(|&t| find(t, "tag"))
            .collect::<Result<Vec<_>>>()?;
        Ok((b, x))
    }
}

/// Dyadic partition `{k T / 2^n}` with tags by `rule`.
pub fn dyadic_partition(level: u32, t_end: f64, rule: TagRule) -> Result<TaggedPartition> {
    if level > 40 {
        return invalid(format!("dyadic level {level} is too fine"));
    }
    if !(t_end > 0.0) {
        return invalid("partition length must be positive");
    }
    let cells = 1u64 << level;
    let b = (0..=cells)
        .map(|k| t_end * (k as f64 / cells as f64))
        .collect();
    TaggedPartition::with_rule(b, rule)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZSResult {
    pub value: f64,
    pub theta_used: f64,
    pub w1_norm: f64,
    pub winf_norm: f64,
    pub apriori_bound: f64,
}

impl ZSResult {
    pub fn within_bound(&self) -> bool {
        !self.apriori_bound.is_finite() || self.value.abs() <= self.apriori_bound * (1.0 + 1e-12)
    }
}

/// The midpoint of the admissible interval `(1 - β, α)`, clipped to `[0.05, 0.95]`.
pub fn default_theta(alpha: f64, beta: f64) -> f64 {
    (0.5 * (1.0 - beta + alpha)).clamp(0.05, 0.95)
}

/// `(ZS) ∫_0^T f dg` for sampled `f` (integrand) and `g` (integrator).
///
/// Computed as `-∫ D^θ_{0+}(f - f(0)) · D^{1-θ}_{T-}(g - g(T)) dt + f(0) (g(T) - g(0))`,
/// the outer integral by the trapezoid rule on the grid.
pub fn zs_integral(integrand: &SampledPath, integrator: &SampledPath, theta: f64) -> Result<ZSResult> {
    if !integrand.same_grid(integrator) {
        return invalid("integrand and integrator must share a grid");
    }
    if !(theta > 0.0 && theta < 1.0) {
        return invalid(format!("theta must lie in (0, 1), got {theta}"));
    }
    let f0 = integrand.first();
    let (g0, gt) = (integrator.first(), integrator.last());
    let dl = wm_derivative_left(integrand, theta, f0)?;
    let dr = wm_derivative_right(integrator, 1.0 - theta, gt)?;
    let prod: Vec<f64> = dl
        .values
        .iter()
        .zip(&dr.values)
        .map(|(&a, &b)| if a == 0.0 || b == 0.0 { 0.0 } else { a * b })
        .collect();
    let inner = integrand.grid().trapezoid(&prod);
    let value = -inner + f0 * (gt - g0);

    let w1 = w1_norm_left(integrand, theta)?;
    let winf = winf_norm_right(integrator, 1.0 - theta)?;
    // Γ(θ)Γ(1-θ) = π / sin(πθ)
    let bound = if w1 == 0.0 || winf == 0.0 {
        0.0
    } else {
        guard(w1 * winf * (PI * theta).sin() / PI)
    };
    Ok(ZSResult {
        value: if value.is_nan() { f64::INFINITY } else { value },
        theta_used: theta,
        w1_norm: w1,
        winf_norm: winf,
        apriori_bound: bound,
    })
}

/// `Σ f(X(ξ_i)) (Y(t_i) - Y(t_{i-1}))`.
pub fn rs_sum(f: &BVFunction, x: &SampledPath, y: &SampledPath, pi: &TaggedPartition) -> Result<f64> {
    if !x.same_grid(y) {
        return invalid("X and Y must share a grid");
    }
    let (b, tags) = pi.indices(x)?;
    let (xv, yv) = (x.values(), y.values());
    let mut s = 0.0;
    for i in 0..tags.len() {
        s += f.eval(xv[tags[i]]) * (yv[b[i + 1]] - yv[b[i]]);
    }
    Ok(s)
}

/// `ĥX_π`: left-constant on the cells of `π`, with value `X(ξ_1)` at 0.
pub fn interpolate_path(x: &SampledPath, pi: &TaggedPartition) -> Result<SampledPath> {
    let (b, tags) = pi.indices(x)?;
    let xv = x.values();
    let mut out = vec![0.0; x.len()];
    out[0] = xv[tags[0]];
    for i in 0..tags.len() {
        let v = xv[tags[i]];
        for slot in &mut out[b[i] + 1..=b[i + 1]] {
            *slot = v;
        }
    }
    SampledPath::new(x.grid().clone(), out, InterpRule::LeftConstant)
}

/// `h_π = f∘ĥX_π - f∘X` sampled at the grid nodes (piecewise linear).
pub fn interpolation_error_path(f: &BVFunction, x: &SampledPath, pi: &TaggedPartition) -> Result<SampledPath> {
    let hat = interpolate_path(x, pi)?;
    let values = hat
        .values()
        .iter()
        .zip(x.values())
        .map(|(&a, &b)| f.eval(a) - f.eval(b))
        .collect();
    SampledPath::linear(x.grid().clone(), values)
}

/// `||h_π||_{W^θ_1(0+)}`.
pub fn interpolation_error_norm(f: &BVFunction, x: &SampledPath, pi: &TaggedPartition, theta: f64) -> Result<f64> {
    let h = interpolation_error_path(f, x, pi)?;
    if h.values().iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    w1_norm_left(&h, theta)
}

/// `||h_π||_{W^θ_1(0+)} ||Y||_{W^{1-θ}_∞(T-)} / (Γ(θ)Γ(1-θ))`.
///
/// The bound concerns the continuum integrals; on the sampled paths it is
/// meaningful for partitions strictly coarser than the grid, since on the
/// grid itself `h_π` vanishes while the discretization error of the
/// quadrature does not.
pub fn rs_error_bound(f: &BVFunction, x: &SampledPath, y: &SampledPath, pi: &TaggedPartition, theta: f64) -> Result<f64> {
    let h = interpolation_error_norm(f, x, pi, theta)?;
    if h == 0.0 {
        return Ok(0.0);
    }
    let ny = winf_norm_right(y, 1.0 - theta)?;
    if ny == 0.0 {
        return Ok(0.0);
    }
    Ok(guard(h * ny * (PI * theta).sin() / PI))
}

/// Whether `θ` lies in the admissible interval `(1 - β, α)`; logs a warning otherwise.
pub fn check_admissible_theta(theta: f64, alpha: f64, beta: f64) -> bool {
    let ok = theta > 1.0 - beta && theta < alpha;
    if !ok {
        log::warn!("theta = {theta} lies outside the admissible interval ({}, {alpha})", 1.0 - beta);
    }
    ok
}

/// Composite path `f∘X` (piecewise linear between nodes).
pub fn compose(f: &BVFunction, x: &SampledPath) -> SampledPath {
    x.map(|v| f.eval(v)).with_rule(InterpRule::PiecewiseLinear)
}

/// Convenience: `ZS ∫ f(X) dY`.
pub fn zs_composite(f: &BVFunction, x: &SampledPath, y: &SampledPath, theta: f64) -> Result<ZSResult> {
    zs_integral(&compose(f, x), y, theta)
}
