//! Convergence of Riemann–Stieltjes sums and of the interpolation error.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{loglog_slope, mean_se, Check, ExperimentReport, Record};
use crate::bv::BVFunction;
use crate::error::{invalid, Result};
use crate::paths::{make_uniform_grid, sample_path_with_stream, Grid, ProcessKind, SampledPath};
use crate::rng::{Role, Stream};
use crate::zs::{
    check_admissible_theta, default_theta, dyadic_partition, interpolation_error_norm, rs_sum,
    zs_composite, TagRule,
};

/// `"auto"` or a number in `(0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum ThetaChoice {
    #[default]
    Auto,
    Value(f64),
}

impl ThetaChoice {
    pub fn resolve(self, alpha: f64, beta: f64) -> f64 {
        match self {
            Self::Auto => default_theta(alpha, beta),
            Self::Value(t) => t,
        }
    }
}

impl Serialize for ThetaChoice {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Auto => s.serialize_str("auto"),
            Self::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for ThetaChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Self::Value(v)),
            Raw::Str(s) if s == "auto" => Ok(Self::Auto),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("theta must be a number or \"auto\", got {s:?}"))),
        }
    }
}

fn two() -> f64 {
    2.0
}

fn two_levels() -> u32 {
    2
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    /// Law of the evaluated process X (Hölder order H₁).
    pub x: ProcessKind,
    /// Law of the integrator Y (Hölder order H₂), drawn independently of X.
    pub y: ProcessKind,
    /// Use Y = X instead of an independent draw.
    #[serde(default)]
    pub same_path: bool,
    pub f: BVFunction,
    /// Inclusive range of dyadic levels.
    pub levels: [u32; 2],
    pub replicates: usize,
    #[serde(default)]
    pub theta: ThetaChoice,
    #[serde(default)]
    pub tag_rule: TagRule,
    /// Declared Hölder orders; default to the orders of `x` and `y`.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default = "two")]
    pub delta: f64,
    /// Defaults to `0.95 α δ`.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// The reference grid has `2^(levels[1] + reference_levels)` cells.
    #[serde(default = "two_levels")]
    pub reference_levels: u32,
    /// Pass threshold for the mean slope; defaults to `0.7 (H₁ + H₂ - 1)`.
    #[serde(default)]
    pub min_slope: Option<f64>,
    #[serde(default = "unit")]
    pub t_end: f64,
}

impl RateConfig {
    /// The fBm pair setting with defaults elsewhere.
    pub fn fbm(h1: f64, h2: f64, f: BVFunction, levels: [u32; 2], replicates: usize) -> Self {
        Self {
            x: ProcessKind::Fbm { hurst: h1 },
            y: ProcessKind::Fbm { hurst: h2 },
            same_path: false,
            f,
            levels,
            replicates,
            theta: ThetaChoice::Auto,
            tag_rule: TagRule::Left,
            alpha: None,
            beta: None,
            delta: 2.0,
            lambda: None,
            reference_levels: 2,
            min_slope: None,
            t_end: 1.0,
        }
    }

    fn alpha(&self) -> f64 {
        self.alpha.unwrap_or_else(|| self.x.holder_order())
    }

    fn beta(&self) -> f64 {
        let y = if self.same_path { &self.x } else { &self.y };
        self.beta.unwrap_or_else(|| y.holder_order())
    }

    fn lambda(&self) -> f64 {
        self.lambda.unwrap_or(0.95 * self.alpha() * self.delta)
    }

    fn validate(&self) -> Result<()> {
        self.x.validate()?;
        self.y.validate()?;
        check_levels(self.levels)?;
        if self.replicates == 0 {
            return invalid("replicates must be positive");
        }
        check_regularity(self.delta, self.lambda(), self.alpha())?;
        let (a, b) = (self.alpha(), self.beta());
        if a + b <= 1.0 {
            log::warn!("alpha + beta = {} <= 1: outside the regime where the sums converge", a + b);
        }
        let theta = self.theta.resolve(a, b);
        if !(theta > 0.0 && theta < 1.0) {
            return invalid(format!("theta must lie in (0, 1), got {theta}"));
        }
        check_admissible_theta(theta, a, b);
        if !(self.t_end > 0.0) {
            return invalid("t_end must be positive");
        }
        Ok(())
    }
}

fn check_levels(levels: [u32; 2]) -> Result<()> {
    if levels[0] > levels[1] {
        return invalid(format!("empty level range {levels:?}"));
    }
    if levels[1] > 16 {
        return invalid(format!("level {} is too fine for the O(N^2) kernels", levels[1]));
    }
    Ok(())
}

fn check_regularity(delta: f64, lambda: f64, alpha: f64) -> Result<()> {
    if !(delta > 1.0) || !(lambda > 1.0) {
        return invalid(format!("need delta > 1 and lambda > 1, got delta = {delta}, lambda = {lambda}"));
    }
    if lambda >= alpha * delta {
        log::warn!("lambda = {lambda} >= alpha * delta = {}: not available for Gaussian paths", alpha * delta);
    }
    Ok(())
}

fn dyadic_grid(level: u32, t_end: f64) -> Result<Arc<Grid>> {
    Ok(Arc::new(make_uniform_grid(t_end, (1usize << level) + 1)?))
}

fn draw(kind: &ProcessKind, grid: &Arc<Grid>, seed: u64, rep: u64, role: Role) -> Result<SampledPath> {
    sample_path_with_stream(kind, grid, &mut Stream::for_replicate(seed, rep, role))
}

struct RateReplicate {
    reference: f64,
    errors: Vec<f64>,
    slope: Option<f64>,
}

/// `|RS(π_n) - ZS|` over dyadic levels, with ZS on a finer grid as reference.
pub fn rate_experiment(cfg: &RateConfig, seed: u64) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (alpha, beta) = (cfg.alpha(), cfg.beta());
    let theta = cfg.theta.resolve(alpha, beta);
    let top = cfg.levels[1] + cfg.reference_levels;
    let grid = dyadic_grid(top, cfg.t_end)?;
    let levels: Vec<u32> = (cfg.levels[0]..=cfg.levels[1]).collect();
    let partitions = levels
        .iter()
        .map(|&n| dyadic_partition(n, cfg.t_end, cfg.tag_rule))
        .collect::<Result<Vec<_>>>()?;
    let meshes: Vec<f64> = partitions.iter().map(|p| p.mesh()).collect();

    let reps = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| -> Result<Option<RateReplicate>> {
            let x = draw(&cfg.x, &grid, seed, r, Role::Integrand)?;
            let y = if cfg.same_path {
                x.clone()
            } else {
                draw(&cfg.y, &grid, seed, r, Role::Integrator)?
            };
            let reference = zs_composite(&cfg.f, &x, &y, theta)?.value;
            if !reference.is_finite() {
                return Ok(None);
            }
            let errors = partitions
                .iter()
                .map(|p| Ok((rs_sum(&cfg.f, &x, &y, p)? - reference).abs()))
                .collect::<Result<Vec<f64>>>()?;
            let slope = loglog_slope(&meshes, &errors);
            Ok(Some(RateReplicate { reference, errors, slope }))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = ExperimentReport::new("rate", cfg, seed, cfg.replicates);
    let mut slopes = Vec::new();
    let mut max_error = 0.0f64;
    let mut level_errors = vec![Vec::new(); levels.len()];
    for (r, rep) in reps.iter().enumerate() {
        let Some(rep) = rep else {
            report.excluded += 1;
            continue;
        };
        for (i, &e) in rep.errors.iter().enumerate() {
            level_errors[i].push(e);
            max_error = max_error.max(e);
            report.records.push(Record {
                replicate: Some(r as u64),
                level: Some(levels[i]),
                mesh: Some(meshes[i]),
                value: e,
                param: Some(rep.reference),
                ..Default::default()
            });
        }
        slopes.extend(rep.slope);
    }
    let mut mean_errors = Vec::new();
    for (i, errs) in level_errors.iter().enumerate() {
        let (m, se) = mean_se(errs);
        mean_errors.push(m);
        report.records.push(Record {
            level: Some(levels[i]),
            mesh: Some(meshes[i]),
            value: m,
            param: Some(se),
            ..Default::default()
        });
    }

    let (h1, h2) = (cfg.x.holder_order(), if cfg.same_path { cfg.x.holder_order() } else { cfg.y.holder_order() });
    let lambda = cfg.lambda();
    let fbm_prediction = h1 + h2 - 1.0;
    let mean_exponent = lambda / (1.0 + cfg.delta) + beta - 1.0;
    let dyadic_exponent = lambda / (1.0 + cfg.delta) - theta;
    let (mean_slope, slope_se) = mean_se(&slopes);
    report.fitted_rate = (!slopes.is_empty()).then_some(mean_slope);
    report.put("theta", theta);
    report.put("alpha", alpha);
    report.put("beta", beta);
    report.put("lambda", lambda);
    report.put("delta", cfg.delta);
    report.put("predicted_exponent_holder", fbm_prediction);
    report.put("predicted_exponent_mean", mean_exponent);
    report.put("predicted_exponent_dyadic", dyadic_exponent);
    report.put("slope_standard_error", slope_se);
    report.put("replicates_with_slope", slopes.len() as f64);
    report.put("slope_of_mean_error", loglog_slope(&meshes, &mean_errors).unwrap_or(f64::NAN));
    report.put("max_error", max_error);

    let threshold = cfg.min_slope.unwrap_or(0.7 * fbm_prediction);
    report.put("slope_threshold", threshold);
    let kept = cfg.replicates - report.excluded;
    report.checks.push(Check::new(
        "exclusions",
        report.excluded * 20 <= cfg.replicates,
        format!("{} of {} replicates excluded", report.excluded, cfg.replicates),
    ));
    report.checks.push(if kept > 0 && max_error <= 1e-10 {
        Check::new("rate", true, format!("errors below 1e-10 at every level (max {max_error:.3e})"))
    } else if slopes.is_empty() {
        Check::new("rate", false, "no replicate has four levels with positive error")
    } else {
        Check::new(
            "rate",
            mean_slope >= threshold,
            format!("mean slope {mean_slope:.4} over {} replicates, threshold {threshold:.4}", slopes.len()),
        )
    });
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvarianceConfig {
    pub f: BVFunction,
    pub x: ProcessKind,
    #[serde(default)]
    pub y: Option<ProcessKind>,
    pub thetas: Vec<f64>,
    /// The grid has `2^level` cells.
    pub level: u32,
    #[serde(default = "unit")]
    pub t_end: f64,
    /// Relative tolerance between the values at different θ.
    #[serde(default = "invariance_tol")]
    pub tol: f64,
}

fn invariance_tol() -> f64 {
    1e-2
}

/// ZS ∫ f(X) dY for one realization at several θ. `Y = X` unless `y` is set.
pub fn theta_invariance(cfg: &InvarianceConfig, seed: u64) -> Result<ExperimentReport> {
    cfg.x.validate()?;
    if cfg.thetas.len() < 2 {
        return invalid("need at least two theta values");
    }
    check_levels([0, cfg.level])?;
    let grid = dyadic_grid(cfg.level, cfg.t_end)?;
    let x = draw(&cfg.x, &grid, seed, 0, Role::Integrand)?;
    let y = match &cfg.y {
        Some(k) => draw(k, &grid, seed, 0, Role::Integrator)?,
        None => x.clone(),
    };
    let values = cfg
        .thetas
        .iter()
        .map(|&t| zs_composite(&cfg.f, &x, &y, t))
        .collect::<Result<Vec<_>>>()?;
    let mut report = ExperimentReport::new("theta_invariance", cfg, seed, 1);
    let v0 = values[0].value;
    let mut worst = 0.0f64;
    for (t, r) in cfg.thetas.iter().zip(&values) {
        let rel = if r.value == v0 { 0.0 } else { (r.value - v0).abs() / v0.abs() };
        worst = worst.max(rel);
        report.records.push(Record {
            param: Some(*t),
            value: r.value,
            lhs: Some(r.value.abs()),
            rhs: Some(r.apriori_bound),
            holds: Some(r.within_bound()),
            ..Default::default()
        });
    }
    report.put("max_relative_deviation", worst);
    report.checks.push(Check::new(
        "theta_invariance",
        worst <= cfg.tol,
        format!("max relative deviation {worst:.3e}, tolerance {:.1e}", cfg.tol),
    ));
    report.checks.push(Check::new(
        "apriori_bound",
        values.iter().all(|r| r.within_bound()),
        "|value| <= bound at every theta",
    ));
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    pub f: BVFunction,
    pub x: ProcessKind,
    pub levels: [u32; 2],
    #[serde(default = "two_levels")]
    pub reference_levels: u32,
    pub theta: f64,
    #[serde(default = "unit")]
    pub p: f64,
    #[serde(default = "two")]
    pub delta: f64,
    /// Defaults to `0.95 α δ`.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    pub replicates: usize,
    #[serde(default)]
    pub tag_rule: TagRule,
    #[serde(default = "unit")]
    pub t_end: f64,
    /// Pass when the slope reaches this fraction of the predicted exponent.
    #[serde(default = "decay_ratio")]
    pub min_ratio: f64,
}

fn decay_ratio() -> f64 {
    0.8
}

impl DecayConfig {
    fn lambda(&self) -> f64 {
        self.lambda
            .unwrap_or(0.95 * self.alpha.unwrap_or_else(|| self.x.holder_order()) * self.delta)
    }

    /// `1 + λ/(1+δ) - p - θ`.
    pub fn predicted_exponent(&self) -> f64 {
        1.0 + self.lambda() / (1.0 + self.delta) - self.p - self.theta
    }

    fn validate(&self) -> Result<()> {
        self.x.validate()?;
        check_levels(self.levels)?;
        if self.replicates == 0 {
            return invalid("replicates must be positive");
        }
        let alpha = self.alpha.unwrap_or_else(|| self.x.holder_order());
        check_regularity(self.delta, self.lambda(), alpha)?;
        if !(self.p >= 1.0 && self.p <= self.delta) {
            return invalid(format!("need 1 <= p <= delta, got p = {}", self.p));
        }
        let cap = (2.0 - self.p).min(1.0 + self.lambda() / (1.0 + self.delta) - self.p);
        if !(self.theta > 0.0 && self.theta < cap.min(1.0)) {
            return invalid(format!("theta = {} outside (0, {cap})", self.theta));
        }
        Ok(())
    }
}

/// Monte Carlo mean of `||h_π||^p` in `W^θ_1(0+)` over dyadic levels.
pub fn interpolation_decay_check(cfg: &DecayConfig, seed: u64) -> Result<ExperimentReport> {
    cfg.validate()?;
    let grid = dyadic_grid(cfg.levels[1] + cfg.reference_levels, cfg.t_end)?;
    let levels: Vec<u32> = (cfg.levels[0]..=cfg.levels[1]).collect();
    let partitions = levels
        .iter()
        .map(|&n| dyadic_partition(n, cfg.t_end, cfg.tag_rule))
        .collect::<Result<Vec<_>>>()?;
    let meshes: Vec<f64> = partitions.iter().map(|p| p.mesh()).collect();
    let norms = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let x = draw(&cfg.x, &grid, seed, r, Role::Integrand)?;
            partitions
                .iter()
                .map(|p| Ok(interpolation_error_norm(&cfg.f, &x, p, cfg.theta)?.powf(cfg.p)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = ExperimentReport::new("interpolation_decay", cfg, seed, cfg.replicates);
    for (r, row) in norms.iter().enumerate() {
        for (i, &v) in row.iter().enumerate() {
            report.records.push(Record {
                replicate: Some(r as u64),
                level: Some(levels[i]),
                mesh: Some(meshes[i]),
                value: v,
                ..Default::default()
            });
        }
    }
    let mut means = Vec::new();
    for i in 0..levels.len() {
        let col: Vec<f64> = norms.iter().map(|row| row[i]).collect();
        let (m, se) = mean_se(&col);
        means.push(m);
        report.records.push(Record {
            level: Some(levels[i]),
            mesh: Some(meshes[i]),
            value: m,
            param: Some(se),
            ..Default::default()
        });
    }
    let predicted = cfg.predicted_exponent();
    report.put("predicted_exponent", predicted);
    report.put("lambda", cfg.lambda());
    report.fitted_rate = loglog_slope(&meshes, &means);
    let threshold = cfg.min_ratio * predicted;
    report.put("slope_threshold", threshold);
    report.checks.push(if means.iter().all(|&m| m == 0.0) {
        Check::new("decay", true, "interpolation error vanishes at every level")
    } else if !means.iter().all(|m| m.is_finite()) {
        Check::new("decay", false, "divergent norm at some level")
    } else {
        match report.fitted_rate {
            Some(s) => Check::new("decay", s >= threshold, format!("slope {s:.4}, threshold {threshold:.4}")),
            None => Check::new("decay", false, "fewer than four levels with positive mean"),
        }
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::DeterministicPath;

    fn line() -> ProcessKind {
        ProcessKind::Deterministic {
            formula: DeterministicPath::Line,
        }
    }

    #[test]
    fn theta_choice_json() {
        let a: ThetaChoice = serde_json::from_str("\"auto\"").unwrap();
        assert_eq!(a, ThetaChoice::Auto);
        let b: ThetaChoice = serde_json::from_str("0.4").unwrap();
        assert_eq!(b, ThetaChoice::Value(0.4));
        assert!(serde_json::from_str::<ThetaChoice>("\"half\"").is_err());
        assert_eq!(serde_json::to_string(&ThetaChoice::Auto).unwrap(), "\"auto\"");
    }

    #[test]
    fn constant_f_has_no_error() {
        let cfg = RateConfig::fbm(0.75, 0.75, BVFunction::constant(2.0), [4, 7], 4);
        let r = rate_experiment(&cfg, 3).unwrap();
        assert!(r.passed(), "{:?}", r.checks);
        assert!(r.summary_value("max_error").unwrap() < 1e-10);
    }

    #[test]
    fn smooth_deterministic_case_is_first_order() {
        let mut cfg = RateConfig::fbm(0.75, 0.75, BVFunction::identity(), [4, 9], 1);
        cfg.x = line();
        cfg.y = line();
        let r = rate_experiment(&cfg, 0).unwrap();
        let s = r.fitted_rate.unwrap();
        assert!(s >= 0.99, "{s}");
    }

    #[test]
    fn rejects_bad_regularity() {
        let mut cfg = RateConfig::fbm(0.75, 0.75, BVFunction::identity(), [4, 6], 1);
        cfg.delta = 0.9;
        assert!(rate_experiment(&cfg, 0).is_err());
        let cfg = RateConfig::fbm(0.75, 0.75, BVFunction::identity(), [6, 4], 1);
        assert!(rate_experiment(&cfg, 0).is_err());
    }

    #[test]
    fn rate_is_reproducible() {
        let f = BVFunction::indicator(0.2)
            .with_lipschitz_window(0.1, 0.0)
            .unwrap();
        let cfg = RateConfig::fbm(0.75, 0.75, f, [3, 6], 3);
        let a = rate_experiment(&cfg, 11).unwrap();
        let b = rate_experiment(&cfg, 11).unwrap();
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn decay_for_identity_on_a_line() {
        let cfg = DecayConfig {
            f: BVFunction::identity(),
            x: line(),
            levels: [3, 8],
            reference_levels: 2,
            theta: 0.2,
            p: 1.0,
            delta: 2.0,
            lambda: Some(1.4),
            alpha: None,
            replicates: 1,
            tag_rule: TagRule::Left,
            t_end: 1.0,
            min_ratio: 0.8,
        };
        // the left-constant interpolant jumps by one mesh at every breakpoint,
        // so the W^θ_1 norm of the sawtooth decays like mesh^{1-θ}
        let r = interpolation_decay_check(&cfg, 0).unwrap();
        let s = r.fitted_rate.unwrap();
        assert!(s >= 0.7 && s <= 0.85, "{s}");
        assert!(r.passed());
    }

    #[test]
    fn decay_rejects_bad_regime() {
        let cfg = DecayConfig {
            f: BVFunction::identity(),
            x: line(),
            levels: [3, 6],
            reference_levels: 2,
            theta: 0.5,
            p: 1.0,
            delta: 2.0,
            lambda: Some(1.4),
            alpha: None,
            replicates: 1,
            tag_rule: TagRule::Left,
            t_end: 1.0,
            min_ratio: 0.8,
        };
        assert!(interpolation_decay_check(&cfg, 0).is_err());
    }

    #[test]
    fn invariance_on_smooth_paths() {
        let cfg = InvarianceConfig {
            f: BVFunction::square(),
            x: line(),
            y: None,
            thetas: vec![0.3, 0.5, 0.7],
            level: 10,
            t_end: 1.0,
            tol: 1e-2,
        };
        let r = theta_invariance(&cfg, 0).unwrap();
        assert!(r.passed(), "{:?}", r.checks);
    }
}
