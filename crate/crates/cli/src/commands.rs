//! Subcommand arguments and dispatch.

use std::sync::Arc;

use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use zsint::bv::{AcFormula, BVFunction};
use zsint::experiments::{
    self, loglog_slope, Check, DecayConfig, ExperimentReport, InvarianceConfig, ItoConfig,
    MollifyConfig, PathSource, PathwiseConfig, RateConfig, Record, SingularityConfig,
    SufficientConfig, WeakContinuityConfig,
};
use zsint::paths::{
    check_holder_gagliardo_bounds, gagliardo_seminorm, holder_seminorm, make_uniform_grid,
    read_csv, sample_path_with_stream, sup_norm, w1_norm_left, winf_norm_right, write_csv,
    CovarianceModel, DeterministicPath, Grid, InterpRule, ProcessKind, SampledPath,
    SeminormParams,
};
use zsint::rng::{Role, Stream};
use zsint::zs::{
    default_theta, dyadic_partition, interpolation_error_norm, rs_error_bound, rs_sum,
    zs_composite, TagRule,
};

use crate::{Cli, CliError, Command, Global};

type R<T> = std::result::Result<T, CliError>;

/// What a command hands to the writer.
pub struct Output {
    pub report: ExperimentReport,
    /// Body of the `.csv` artifact.
    pub csv: String,
    /// Raw config bytes, hashed into the sidecar.
    pub config_bytes: Option<Vec<u8>>,
}

impl Output {
    fn from_report(report: ExperimentReport, config_bytes: Option<Vec<u8>>) -> R<Self> {
        let csv = report.records_table().to_csv_string()?;
        Ok(Self {
            report,
            csv,
            config_bytes,
        })
    }
}

/// Process selection by name, shared by `generate`, `seminorm` and `integrate`.
#[derive(Debug, Clone, Args)]
pub struct ProcessArgs {
    /// fbm, fou, brownian, exponential, or a deterministic path
    /// (zero, one, line, reverse_line, square, sine, sqrt).
    #[arg(long)]
    pub kind: Option<String>,
    /// Hurst index for fbm and fou.
    #[arg(long = "H", default_value_t = 0.75)]
    pub hurst: f64,
    /// Number of grid cells.
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub process: ProcessArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SeminormArgs {
    #[command(flatten)]
    pub process: ProcessArgs,
    /// Read the path from a `t,value` CSV instead of generating it.
    #[arg(long)]
    pub input: Option<std::path::PathBuf>,
    /// Hölder order of the comparison inequalities.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.3)]
    pub theta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Hölder exponent margin of the comparison inequalities.
    #[arg(long, default_value_t = 0.2)]
    pub eps: f64,
}

#[derive(Debug, Clone, Args)]
pub struct IntegrateArgs {
    /// Integrand function: one, zero, identity, square, sine, cosine,
    /// indicator, or an inline JSON function.
    #[arg(long, default_value = "identity")]
    pub f: String,
    /// Jump location of `indicator`.
    #[arg(long, default_value_t = 0.5)]
    pub jump_at: f64,
    /// Evaluated process (same names as `generate --kind`).
    #[arg(long = "X", default_value = "line")]
    pub x: String,
    /// Integrator; omitted means Y = X on the same realization.
    #[arg(long = "Y")]
    pub y: Option<String>,
    #[arg(long = "H", default_value_t = 0.75)]
    pub hurst: f64,
    /// Hurst index of Y (defaults to `--H`).
    #[arg(long = "H2")]
    pub hurst2: Option<f64>,
    /// Defaults to the midpoint of the admissible interval.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Number of grid cells.
    #[arg(long, default_value_t = 2048)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    /// Read X from a `t,value` CSV.
    #[arg(long)]
    pub input: Option<std::path::PathBuf>,
}

pub fn dispatch(cli: &Cli) -> R<Output> {
    let g = &cli.global;
    match &cli.command {
        Command::Generate(a) => generate(g, a),
        Command::Seminorm(a) => seminorm(g, a),
        Command::Integrate(a) => integrate(g, a),
        Command::RsSweep => {
            let (cfg, bytes): (RsSweepConfig, _) = load(g, "rs-sweep")?;
            let seed = seed_for(g, cfg.x.is_random() || cfg.y.is_some_and(|y| y.is_random()))?;
            Output::from_report(rs_sweep(&cfg, seed)?, Some(bytes))
        }
        Command::Rate => {
            let (cfg, bytes): (RateConfig, _) = load(g, "rate")?;
            let seed = seed_for(g, cfg.x.is_random() || cfg.y.is_random())?;
            Output::from_report(experiments::rate_experiment(&cfg, seed)?, Some(bytes))
        }
        Command::Ito => {
            let (cfg, bytes): (ItoConfig, _) = load(g, "ito")?;
            let seed = seed_for(g, cfg.x.is_random())?;
            Output::from_report(experiments::ito_check(&cfg, seed)?, Some(bytes))
        }
        Command::Mollify => {
            let (cfg, bytes): (MollifyConfig, _) = load(g, "mollify")?;
            let seed = seed_for(g, cfg.x.is_random())?;
            Output::from_report(experiments::mollify_convergence(&cfg, seed)?, Some(bytes))
        }
        Command::Bounds => bounds(g),
    }
}

fn load<T: DeserializeOwned>(g: &Global, command: &str) -> R<(T, Vec<u8>)> {
    let path = g
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("`{command}` needs --config <file>")))?;
    let bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let cfg = serde_json::from_slice(&bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok((cfg, bytes))
}

/// The seed, which must be given when anything is random.
fn seed_for(g: &Global, random: bool) -> R<u64> {
    match (g.seed, random) {
        (Some(s), _) => Ok(s),
        (None, false) => Ok(0),
        (None, true) => Err(CliError::Usage("this command is stochastic and needs --seed".into())),
    }
}

fn process_by_name(name: &str, hurst: f64) -> R<ProcessKind> {
    let kind = match name {
        "fbm" => ProcessKind::Fbm { hurst },
        "fou" => ProcessKind::Fou {
            hurst,
            mean_reversion: 1.0,
            scale: 1.0,
        },
        "brownian" => ProcessKind::Custom {
            covariance: CovarianceModel::Brownian,
        },
        "exponential" => ProcessKind::Custom {
            covariance: CovarianceModel::Exponential {
                length_scale: 1.0,
                variance: 1.0,
            },
        },
        other => {
            let formula: DeterministicPath = serde_json::from_value(serde_json::Value::String(other.into()))
                .map_err(|_| CliError::Usage(format!("unknown process `{other}`")))?;
            ProcessKind::Deterministic { formula }
        }
    };
    kind.validate()?;
    Ok(kind)
}

fn function_by_name(name: &str, jump_at: f64) -> R<BVFunction> {
    if name.trim_start().starts_with('{') {
        return serde_json::from_str(name).map_err(|e| CliError::Config(format!("--f: {e}")));
    }
    Ok(match name {
        "one" => BVFunction::constant(1.0),
        "zero" => BVFunction::constant(0.0),
        "identity" => BVFunction::identity(),
        "square" => BVFunction::square(),
        "sine" => BVFunction::smooth(AcFormula::Sine, 1.0),
        "cosine" => BVFunction::smooth(AcFormula::Cosine, 1.0),
        "indicator" => BVFunction::indicator(jump_at),
        other => return Err(CliError::Usage(format!("unknown function `{other}`"))),
    })
}

fn grid(n: usize, t_end: f64) -> R<Arc<Grid>> {
    if n == 0 {
        return Err(CliError::Usage("--n must be positive".into()));
    }
    Ok(Arc::new(make_uniform_grid(t_end, n + 1)?))
}

fn draw(kind: &ProcessKind, grid: &Arc<Grid>, seed: u64, role: Role) -> R<SampledPath> {
    Ok(sample_path_with_stream(kind, grid, &mut Stream::for_replicate(seed, 0, role))?)
}

fn read_path(path: &std::path::Path) -> R<SampledPath> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(read_csv(std::io::BufReader::new(file), InterpRule::PiecewiseLinear)?)
}

fn generate(g: &Global, a: &GenerateArgs) -> R<Output> {
    let p = &a.process;
    let (kind, bytes) = match (&g.config, &p.kind) {
        (Some(_), _) => {
            let (k, b): (ProcessKind, _) = load(g, "generate")?;
            (k, Some(b))
        }
        (None, Some(name)) => (process_by_name(name, p.hurst)?, None),
        (None, None) => return Err(CliError::Usage("`generate` needs --kind or --config".into())),
    };
    let seed = seed_for(g, kind.is_random())?;
    let path = draw(&kind, &grid(p.n, p.t_end)?, seed, Role::Integrand)?;
    let mut report = ExperimentReport::new("generate", &kind, seed, 1);
    report.put("points", path.len() as f64);
    report.put("t_end", p.t_end);
    report.put("first", path.first());
    report.put("last", path.last());
    report.put("sup_norm", sup_norm(&path));
    let mut buf = Vec::new();
    write_csv(&path, &mut buf)?;
    Ok(Output {
        report,
        csv: String::from_utf8(buf).expect("csv writes UTF-8"),
        config_bytes: bytes,
    })
}

fn seminorm(g: &Global, a: &SeminormArgs) -> R<Output> {
    let (path, seed, source) = match (&a.input, &a.process.kind) {
        (Some(file), _) => (read_path(file)?, g.seed.unwrap_or(0), serde_json::json!({ "input": file })),
        (None, Some(name)) => {
            let kind = process_by_name(name, a.process.hurst)?;
            let seed = seed_for(g, kind.is_random())?;
            let path = draw(&kind, &grid(a.process.n, a.process.t_end)?, seed, Role::Integrand)?;
            (path, seed, serde_json::json!({ "process": kind, "n": a.process.n, "t_end": a.process.t_end }))
        }
        (None, None) => return Err(CliError::Usage("`seminorm` needs --input or --kind".into())),
    };
    let params = SeminormParams::new(a.alpha, a.theta, a.p)?;
    let config = serde_json::json!({ "path": source, "params": params, "eps": a.eps });
    let mut report = ExperimentReport::new("seminorm", &config, seed, 1);
    report.put("sup_norm", sup_norm(&path));
    report.put("holder", holder_seminorm(&path, a.alpha)?);
    report.put("gagliardo", gagliardo_seminorm(&path, a.theta, a.p)?);
    report.put("w1_left", w1_norm_left(&path, a.theta)?);
    report.put("winf_right", winf_norm_right(&path, a.theta)?);

    let hg = check_holder_gagliardo_bounds(&path, params, a.eps)?;
    for (name, b) in [("w1", hg.w1), ("winf", hg.winf), ("gagliardo", hg.gagliardo)] {
        report.records.push(Record {
            label: Some(format!("holder_gagliardo_{name}")),
            param: Some(a.alpha),
            value: b.lhs,
            lhs: Some(b.lhs),
            rhs: Some(b.rhs),
            holds: Some(b.holds),
            ..Default::default()
        });
        report.checks.push(Check::new(
            &format!("holder_gagliardo_{name}"),
            b.holds,
            format!("{:.6e} <= {:.6e}", b.lhs, b.rhs),
        ));
    }
    report.put("gagliardo_rhs_half", hg.gagliardo_rhs_half);
    Output::from_report(report, None)
}

fn integrate(g: &Global, a: &IntegrateArgs) -> R<Output> {
    if g.config.is_some() {
        let (cfg, bytes): (InvarianceConfig, _) = load(g, "integrate")?;
        let seed = seed_for(g, cfg.x.is_random() || cfg.y.is_some_and(|y| y.is_random()))?;
        return Output::from_report(experiments::theta_invariance(&cfg, seed)?, Some(bytes));
    }
    let f = function_by_name(&a.f, a.jump_at)?;
    let y_kind = a
        .y
        .as_deref()
        .map(|n| process_by_name(n, a.hurst2.unwrap_or(a.hurst)))
        .transpose()?;
    let (x, x_desc, x_random, alpha) = match &a.input {
        Some(file) => {
            if a.theta.is_none() {
                return Err(CliError::Usage("--input needs an explicit --theta".into()));
            }
            (read_path(file)?, serde_json::json!({ "input": file }), false, 1.0)
        }
        None => {
            let kind = process_by_name(&a.x, a.hurst)?;
            let seed = seed_for(g, kind.is_random() || y_kind.is_some_and(|k| k.is_random()))?;
            let x = draw(&kind, &grid(a.n, a.t_end)?, seed, Role::Integrand)?;
            (x, serde_json::json!(kind), kind.is_random(), kind.holder_order())
        }
    };
    let seed = seed_for(g, x_random || y_kind.is_some_and(|k| k.is_random()))?;
    let y = match &y_kind {
        Some(k) => draw(k, x.grid(), seed, Role::Integrator)?,
        None => x.clone(),
    };
    let beta = y_kind.map_or(alpha, |k| k.holder_order());
    let theta = a.theta.unwrap_or_else(|| default_theta(alpha, beta));
    let config = serde_json::json!({
        "f": f, "x": x_desc, "y": y_kind, "theta": theta, "n": x.len() - 1, "t_end": x.grid().t_end(),
    });
    let res = zs_composite(&f, &x, &y, theta)?;
    let mut report = ExperimentReport::new("integrate", &config, seed, 1);
    report.put("value", res.value);
    report.put("theta", res.theta_used);
    report.put("w1_norm", res.w1_norm);
    report.put("winf_norm", res.winf_norm);
    report.put("apriori_bound", res.apriori_bound);
    report.records.push(Record {
        param: Some(theta),
        mesh: x.grid().step(),
        value: res.value,
        lhs: Some(res.value.abs()),
        rhs: Some(res.apriori_bound),
        holds: Some(res.within_bound()),
        ..Default::default()
    });
    report.checks.push(Check::new(
        "apriori_bound",
        res.within_bound(),
        format!("|{:.6e}| <= {:.6e}", res.value, res.apriori_bound),
    ));
    Output::from_report(report, None)
}

fn one() -> f64 {
    1.0
}

fn two() -> u32 {
    2
}

/// One realization: RS sums over dyadic partitions against a fine ZS reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RsSweepConfig {
    pub f: BVFunction,
    pub x: ProcessKind,
    /// Independent integrator; omitted means Y = X.
    #[serde(default)]
    pub y: Option<ProcessKind>,
    /// Inclusive range of dyadic levels.
    pub levels: [u32; 2],
    #[serde(default = "two")]
    pub reference_levels: u32,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub tag_rule: TagRule,
    #[serde(default = "one")]
    pub t_end: f64,
}

fn rs_sweep(cfg: &RsSweepConfig, seed: u64) -> R<ExperimentReport> {
    let [lo, hi] = cfg.levels;
    if lo > hi || hi + cfg.reference_levels > 16 {
        return Err(CliError::Config(format!(
            "levels must be increasing with levels[1] + reference_levels <= 16, got {:?} + {}",
            cfg.levels, cfg.reference_levels
        )));
    }
    let fine = hi + cfg.reference_levels;
    let grid = Arc::new(make_uniform_grid(cfg.t_end, (1usize << fine) + 1)?);
    let x = draw(&cfg.x, &grid, seed, Role::Integrand)?;
    let y = match &cfg.y {
        Some(k) => draw(k, &grid, seed, Role::Integrator)?,
        None => x.clone(),
    };
    let alpha = cfg.x.holder_order();
    let beta = cfg.y.map_or(alpha, |k| k.holder_order());
    let theta = cfg.theta.unwrap_or_else(|| default_theta(alpha, beta));
    let reference = zs_composite(&cfg.f, &x, &y, theta)?;

    let mut report = ExperimentReport::new("rs_sweep", cfg, seed, 1);
    let (mut meshes, mut errors) = (Vec::new(), Vec::new());
    for level in lo..=hi {
        let pi = dyadic_partition(level, cfg.t_end, cfg.tag_rule)?;
        let err = (rs_sum(&cfg.f, &x, &y, &pi)? - reference.value).abs();
        let bound = rs_error_bound(&cfg.f, &x, &y, &pi, theta)?;
        let norm = interpolation_error_norm(&cfg.f, &x, &pi, theta)?;
        let mesh = pi.mesh();
        report.records.push(Record {
            label: Some("rs_error".into()),
            level: Some(level),
            mesh: Some(mesh),
            value: err,
            lhs: Some(err),
            rhs: Some(bound),
            ..Default::default()
        });
        report.records.push(Record {
            label: Some("interpolation_norm".into()),
            level: Some(level),
            mesh: Some(mesh),
            value: norm,
            ..Default::default()
        });
        meshes.push(mesh);
        errors.push(err);
    }
    report.fitted_rate = loglog_slope(&meshes, &errors);
    report.put("reference", reference.value);
    report.put("theta", theta);
    report.put("apriori_bound", reference.apriori_bound);
    report.put("max_error", errors.iter().cloned().fold(0.0, f64::max));
    report.checks.push(Check::new(
        "reference_finite",
        reference.value.is_finite(),
        format!("ZS reference {:.6e} on 2^{fine} cells", reference.value),
    ));
    Ok(report)
}

fn ten() -> u32 {
    10
}

fn one_rep() -> usize {
    1
}

/// `sufficient` takes its paths from a CSV file or from the law `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SufficientCliConfig {
    pub theta: f64,
    pub alpha: f64,
    pub y_probes: Vec<f64>,
    #[serde(default)]
    pub x: Option<ProcessKind>,
    /// A `t,value` CSV holding one path.
    #[serde(default)]
    pub input: Option<std::path::PathBuf>,
    #[serde(default = "ten")]
    pub level: u32,
    #[serde(default = "one_rep")]
    pub replicates: usize,
    #[serde(default = "one")]
    pub t_end: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum BoundsConfig {
    Pathwise(PathwiseConfig),
    Singularity(SingularityConfig),
    WeakContinuity(WeakContinuityConfig),
    Sufficient(SufficientCliConfig),
    InterpolationDecay(DecayConfig),
}

fn bounds(g: &Global) -> R<Output> {
    let (cfg, bytes): (BoundsConfig, _) = load(g, "bounds")?;
    let report = match &cfg {
        BoundsConfig::Pathwise(c) => experiments::pathwise_suite(c, seed_for(g, c.x.is_random())?)?,
        BoundsConfig::Singularity(c) => experiments::singularity_bound_check(c, seed_for(g, true)?)?,
        BoundsConfig::WeakContinuity(c) => experiments::weak_continuity_check(c, seed_for(g, true)?)?,
        BoundsConfig::InterpolationDecay(c) => {
            experiments::interpolation_decay_check(c, seed_for(g, c.x.is_random())?)?
        }
        BoundsConfig::Sufficient(c) => {
            let (source, random) = match (&c.x, &c.input) {
                (Some(kind), None) => (
                    PathSource::Process {
                        kind: *kind,
                        level: c.level,
                        replicates: c.replicates,
                        t_end: c.t_end,
                    },
                    kind.is_random(),
                ),
                (None, Some(file)) => (PathSource::Path(read_path(file)?), false),
                _ => return Err(CliError::Config("`sufficient` needs exactly one of `x` and `input`".into())),
            };
            let inner = SufficientConfig {
                theta: c.theta,
                alpha: c.alpha,
                y_probes: c.y_probes.clone(),
            };
            experiments::sufficient_variability_check(&source, &inner, seed_for(g, random)?)?
        }
    };
    Output::from_report(report, Some(bytes))
}
