//! Monte Carlo experiments.
//!
//! Every experiment takes a config and a seed and returns an
//! [`ExperimentReport`]. Replicate `r` draws from its own RNG streams
//! (see [`crate::rng::Stream::for_replicate`]), replicates run in parallel and
//! are collected in index order, so reports are bit-identical for a given
//! `(config, seed)` whatever the thread count.

mod bounds;
mod calculus;
mod rate;

pub use bounds::{
    composite_gagliardo_bound_check, holder_singular_check, occupation_integral, pathwise_suite,
    singularity_bound_check, sufficient_variability_check, weak_continuity_check, PathSource,
    PathwiseConfig, SingularityConfig, SufficientConfig, WeakContinuityConfig,
};
pub use calculus::{ito_check, mollify_convergence, ItoConfig, MollifyConfig};
pub use rate::{
    interpolation_decay_check, rate_experiment, theta_invariance, DecayConfig, InvarianceConfig,
    RateConfig, ThetaChoice,
};

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// One row of an experiment. Unused columns stay `None`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Record {
    /// Which quantity the row holds, for reports that mix several.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicate: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<u32>,
    /// Sweep parameter (mollification index, σ, probe location, ...).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh: Option<f64>,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lhs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holds: Option<bool>,
}

/// A named pass/fail flag.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub replicates: usize,
    /// Replicates dropped because their reference value was not finite.
    pub excluded: usize,
    pub records: Vec<Record>,
    /// Least-squares slope of log error against log mesh, when defined.
    pub fitted_rate: Option<f64>,
    /// Named reference values (predicted exponents, bound constants, ...).
    pub summary: Vec<(String, f64)>,
    pub checks: Vec<Check>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, config: &impl Serialize, seed: u64, replicates: usize) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.to_string(),
            config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
            seed,
            replicates,
            excluded: 0,
            records: Vec::new(),
            fitted_rate: None,
            summary: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn summary_value(&self, key: &str) -> Option<f64> {
        self.summary.iter().find(|(k, _)| k == key).map(|&(_, v)| v)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn put(&mut self, key: &str, v: f64) {
        self.summary.push((key.to_string(), v));
    }

    /// Records as a CSV table with fixed columns.
    pub fn records_table(&self) -> crate::report::Table {
        use crate::fmt_f64;
        let mut t = crate::report::Table::new(&[
            "label", "replicate", "level", "param", "mesh", "value", "lhs", "rhs", "holds",
        ]);
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        for r in &self.records {
            t.push(vec![
                r.label.clone().unwrap_or_default(),
                r.replicate.map(|v| v.to_string()).unwrap_or_default(),
                r.level.map(|v| v.to_string()).unwrap_or_default(),
                opt(r.param),
                opt(r.mesh),
                fmt_f64(r.value),
                opt(r.lhs),
                opt(r.rhs),
                r.holds.map(|v| v.to_string()).unwrap_or_default(),
            ]);
        }
        t
    }
}

/// Least-squares slope of `ln y` against `ln x` over the pairs with `y > 0`;
/// `None` with fewer than 4 such pairs.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|&(&a, &b)| a > 0.0 && b > 0.0 && b.is_finite())
        .map(|(&a, &b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 4 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Median with infinite values sorted last; `NaN` for an empty slice.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x: Vec<f64> = (1..8).map(|k| 2f64.powi(-k)).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(0.7)).collect();
        assert!((loglog_slope(&x, &y).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn slope_needs_four_positive_points() {
        let x = [0.5, 0.25, 0.125, 0.0625, 0.03125];
        assert!(loglog_slope(&x, &[1.0, 0.5, 0.0, 0.0, 0.1]).is_none());
        assert!(loglog_slope(&x, &[1.0, 0.5, 0.2, 0.0, 0.1]).is_some());
    }

    #[test]
    fn median_and_mean() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&[1.0, f64::INFINITY, f64::INFINITY]), f64::INFINITY);
        let (m, se) = mean_se(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
