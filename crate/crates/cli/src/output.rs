//! Artifact files and the stdout summary.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use zsint::experiments::ExperimentReport;
use zsint::report::to_json_string;

use crate::commands::Output;
use crate::{CliError, Global};

/// Where a run left its files and what it printed.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub json: PathBuf,
    pub csv: PathBuf,
    pub meta: PathBuf,
    pub plot: Option<PathBuf>,
    pub summary: String,
    pub passed: bool,
}

/// Everything that may differ between identical re-runs lives here.
#[derive(Serialize)]
struct Meta<'a> {
    schema_version: u32,
    version: &'a str,
    unix_time: f64,
    argv: Vec<String>,
    /// sha256 over the config bytes, a NUL, then argv joined by NULs.
    input_sha256: String,
    threads: usize,
    report: &'a str,
    csv: &'a str,
}

fn file_name(p: &Path) -> &str {
    p.file_name().and_then(|s| s.to_str()).unwrap_or_default()
}

pub fn write(g: &Global, argv: &[OsString], out: Output) -> Result<Artifacts, CliError> {
    std::fs::create_dir_all(&g.out)?;
    let stem = format!("{}_seed{}", out.report.experiment, out.report.seed);
    let json = g.out.join(format!("{stem}.json"));
    let csv = g.out.join(format!("{stem}.csv"));
    let meta = g.out.join(format!("{stem}.meta.json"));
    std::fs::write(&json, to_json_string(&out.report)?)?;
    std::fs::write(&csv, &out.csv)?;

    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut h = Sha256::new();
    h.update(out.config_bytes.as_deref().unwrap_or_default());
    h.update([0u8]);
    h.update(argv.join("\0").as_bytes());
    let digest: String = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    let unix_time = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0);
    let m = Meta {
        schema_version: zsint::experiments::SCHEMA_VERSION,
        version: env!("CARGO_PKG_VERSION"),
        unix_time,
        argv,
        input_sha256: digest,
        threads: rayon::current_num_threads(),
        report: file_name(&json),
        csv: file_name(&csv),
    };
    std::fs::write(&meta, serde_json::to_string_pretty(&m).map_err(zsint::Error::from)? + "\n")?;

    let plot = if g.plot {
        let p = g.out.join(format!("{stem}.plot.py"));
        std::fs::write(&p, plot_script(file_name(&csv), out.report.experiment == "generate"))?;
        Some(p)
    } else {
        None
    };

    Ok(Artifacts {
        summary: summary_table(&out.report, &json),
        passed: out.report.passed(),
        json,
        csv,
        meta,
        plot,
    })
}

fn summary_table(r: &ExperimentReport, json: &Path) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<34} {}", "experiment", r.experiment);
    let _ = writeln!(s, "{:<34} {}", "seed", r.seed);
    let _ = writeln!(s, "{:<34} {}", "replicates", r.replicates);
    if r.excluded > 0 {
        let _ = writeln!(s, "{:<34} {}", "excluded", r.excluded);
    }
    if let Some(rate) = r.fitted_rate {
        let _ = writeln!(s, "{:<34} {rate:.6}", "fitted_rate");
    }
    for (k, v) in &r.summary {
        let _ = writeln!(s, "{k:<34} {v:.6e}");
    }
    for c in &r.checks {
        let flag = if c.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "{flag} {:<29} {}", c.name, c.detail);
    }
    let _ = writeln!(s, "{:<34} {}", "report", json.display());
    s
}

/// A standalone matplotlib script for the CSV next to it.
fn plot_script(csv: &str, path: bool) -> String {
    let body = if path {
        r#"ax.plot(t["t"], t["value"], lw=0.8)
ax.set_xlabel("t")
ax.set_ylabel("value")
"#
    } else {
        r#"x_col = "mesh" if t["mesh"].notna().any() else "param"
for label, part in t.groupby(t["label"].fillna("")):
    agg = part[part["replicate"].isna()]
    if agg.empty:
        agg = part.groupby(x_col, as_index=False)["value"].median()
    ax.plot(agg[x_col], agg["value"], "o-", label=label or "value")
if x_col == "mesh":
    ax.set_xscale("log")
    ax.set_yscale("log")
ax.set_xlabel(x_col)
ax.set_ylabel("value")
ax.legend()
"#
    };
    format!(
        "import pandas as pd\nimport matplotlib.pyplot as plt\n\nt = pd.read_csv(\"{csv}\")\nfig, ax = plt.subplots()\n{body}fig.savefig(\"{}.png\", dpi=150)\n",
        csv.trim_end_matches(".csv")
    )
}
