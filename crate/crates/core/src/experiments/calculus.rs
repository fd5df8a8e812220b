//! Change of variables and mollification convergence.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{median, Check, ExperimentReport, Record};
use crate::bv::{mollify, BVFunction};
use crate::error::{invalid, Result};
use crate::paths::{gagliardo_seminorm, make_uniform_grid, sample_path_with_stream, ProcessKind, SampledPath};
use crate::rng::{Role, Stream};
use crate::zs::{default_theta, zs_composite};

fn unit() -> f64 {
    1.0
}

fn ito_tol() -> f64 {
    5e-2
}

fn ito_fraction() -> f64 {
    0.9
}

pub(crate) fn list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", items.join(", "))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItoConfig {
    /// Must be absolutely continuous with a derivative representation.
    pub f: BVFunction,
    pub x: ProcessKind,
    /// Grid levels (`2^n` cells); coarser levels subsample the finest path.
    pub levels: Vec<u32>,
    pub replicates: usize,
    /// Defaults to the midpoint of the admissible interval.
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default = "unit")]
    pub t_end: f64,
    /// Residual tolerance at the finest level.
    #[serde(default = "ito_tol")]
    pub tol: f64,
    /// Fraction of replicates that must meet `tol`.
    #[serde(default = "ito_fraction")]
    pub min_fraction: f64,
}

/// Residual `|f(X_T) - f(X_0) - ZS ∫ f'(X) dX|` per level and replicate.
pub fn ito_check(cfg: &ItoConfig, seed: u64) -> Result<ExperimentReport> {
    cfg.x.validate()?;
    let alpha = cfg.x.holder_order();
    if !(alpha > 0.5) {
        return invalid(format!("change of variables needs Hölder order > 1/2, got {alpha}"));
    }
    let fprime = cfg.f.derivative_function()?;
    if cfg.levels.is_empty() || cfg.replicates == 0 {
        return invalid("need at least one level and one replicate");
    }
    let mut levels = cfg.levels.clone();
    levels.sort_unstable();
    levels.dedup();
    let top = *levels.last().unwrap();
    if top > 16 || levels[0] == 0 {
        return invalid(format!("levels must lie in 1..=16, got {levels:?}"));
    }
    let theta = cfg.theta.unwrap_or_else(|| default_theta(alpha, alpha));
    let grid = Arc::new(make_uniform_grid(cfg.t_end, (1usize << top) + 1)?);

    let residuals = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let fine = sample_path_with_stream(&cfg.x, &grid, &mut Stream::for_replicate(seed, r, Role::Integrand))?;
            let exact = cfg.f.eval(fine.last()) - cfg.f.eval(fine.first());
            levels
                .iter()
                .map(|&n| {
                    let x: SampledPath = fine.subsample(1 << (top - n))?;
                    let zs = zs_composite(&fprime, &x, &x, theta)?.value;
                    Ok((exact - zs).abs())
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = ExperimentReport::new("ito", cfg, seed, cfg.replicates);
    report.put("theta", theta);
    for (r, row) in residuals.iter().enumerate() {
        for (i, &v) in row.iter().enumerate() {
            report.records.push(Record {
                replicate: Some(r as u64),
                level: Some(levels[i]),
                mesh: Some(cfg.t_end / (1u64 << levels[i]) as f64),
                value: v,
                ..Default::default()
            });
        }
    }
    let medians: Vec<f64> = (0..levels.len())
        .map(|i| median(&residuals.iter().map(|row| row[i]).collect::<Vec<_>>()))
        .collect();
    for (i, &m) in medians.iter().enumerate() {
        report.records.push(Record {
            level: Some(levels[i]),
            mesh: Some(cfg.t_end / (1u64 << levels[i]) as f64),
            value: m,
            ..Default::default()
        });
    }
    let last = levels.len() - 1;
    let good = residuals.iter().filter(|row| row[last] < cfg.tol).count();
    let frac = good as f64 / cfg.replicates as f64;
    report.put("fraction_within_tol", frac);
    report.put("median_residual_finest", medians[last]);
    report.checks.push(Check::new(
        "residual",
        frac >= cfg.min_fraction,
        format!("{good} of {} replicates below {:.1e} at level {top}", cfg.replicates, cfg.tol),
    ));
    // a median that is already at rounding level cannot keep decreasing
    let decreasing = medians.windows(2).all(|w| w[1] < w[0] || w[0] <= 1e-12);
    report.checks.push(Check::new(
        "median_decreasing",
        decreasing,
        format!("medians {}", list(&medians)),
    ));
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MollifyConfig {
    pub f: BVFunction,
    pub x: ProcessKind,
    pub theta: f64,
    #[serde(default = "unit")]
    pub p: f64,
    pub n_list: Vec<u32>,
    pub replicates: usize,
    /// The grid has `2^level` cells.
    pub level: u32,
    #[serde(default = "unit")]
    pub t_end: f64,
}

/// `[f_n∘X - f∘X]_{θ,p}` per replicate and mollification index.
pub fn mollify_convergence(cfg: &MollifyConfig, seed: u64) -> Result<ExperimentReport> {
    cfg.x.validate()?;
    let alpha = cfg.x.holder_order();
    if !(cfg.theta > 0.0 && cfg.theta < alpha) {
        return invalid(format!("theta must lie in (0, {alpha}), got {}", cfg.theta));
    }
    if cfg.n_list.is_empty() || cfg.replicates == 0 {
        return invalid("need a mollification index and a replicate");
    }
    if cfg.level == 0 || cfg.level > 16 {
        return invalid(format!("level must lie in 1..=16, got {}", cfg.level));
    }
    let mollified = cfg.n_list.iter().map(|&n| mollify(&cfg.f, n)).collect::<Result<Vec<_>>>()?;
    let grid = Arc::new(make_uniform_grid(cfg.t_end, (1usize << cfg.level) + 1)?);

    let values = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let x = sample_path_with_stream(&cfg.x, &grid, &mut Stream::for_replicate(seed, r, Role::Integrand))?;
            let fx: Vec<f64> = x.values().iter().map(|&v| cfg.f.eval(v)).collect();
            mollified
                .iter()
                .map(|m| {
                    let d: Vec<f64> = x.values().iter().zip(&fx).map(|(&v, &w)| m.value(v) - w).collect();
                    if d.iter().all(|&v| v == 0.0) {
                        return Ok(0.0);
                    }
                    gagliardo_seminorm(&SampledPath::linear(grid.clone(), d)?, cfg.theta, cfg.p)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = ExperimentReport::new("mollify", cfg, seed, cfg.replicates);
    for (r, row) in values.iter().enumerate() {
        for (i, &v) in row.iter().enumerate() {
            report.records.push(Record {
                replicate: Some(r as u64),
                param: Some(cfg.n_list[i] as f64),
                value: v,
                ..Default::default()
            });
        }
    }
    let medians: Vec<f64> = (0..cfg.n_list.len())
        .map(|i| median(&values.iter().map(|row| row[i]).collect::<Vec<_>>()))
        .collect();
    for (i, &m) in medians.iter().enumerate() {
        report.records.push(Record {
            param: Some(cfg.n_list[i] as f64),
            value: m,
            ..Default::default()
        });
    }
    let check = if medians.iter().all(|&m| m == 0.0) {
        Check::new("median_decreasing", true, "difference vanishes for every n")
    } else {
        Check::new(
            "median_decreasing",
            medians.iter().all(|m| m.is_finite()) && medians.windows(2).all(|w| w[1] < w[0]),
            format!("medians {}", list(&medians)),
        )
    };
    report.checks.push(check);
    Ok(report)
}
