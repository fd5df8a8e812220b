//! Gaussian and deterministic path generators.

use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{Grid, SampledPath};
use crate::error::{invalid, Error, Result};
use crate::rng::Stream;

/// Closed-form deterministic paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeterministicPath {
    Zero,
    One,
    /// `t`
    Line,
    /// `T - t`
    ReverseLine,
    /// `t^2`
    Square,
    /// `sin(2π t / T)`
    Sine,
    /// `sqrt(t)`
    Sqrt,
}

impl DeterministicPath {
    pub fn eval(self, t: f64, t_end: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::One => 1.0,
            Self::Line => t,
            Self::ReverseLine => t_end - t,
            Self::Square => t * t,
            Self::Sine => (std::f64::consts::TAU * t / t_end).sin(),
            Self::Sqrt => t.sqrt(),
        }
    }

    /// Hölder order of the path on a bounded interval.
    pub fn holder_order(self) -> f64 {
        match self {
            Self::Sqrt => 0.5,
            _ => 1.0,
        }
    }
}

/// Covariance functions for the generic Cholesky sampler.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum CovarianceModel {
    /// `min(s, t)`
    Brownian,
    /// `variance · exp(-|t - s| / length_scale)`
    Exponential { length_scale: f64, variance: f64 },
}

impl CovarianceModel {
    pub fn cov(&self, s: f64, t: f64) -> f64 {
        match *self {
            Self::Brownian => s.min(t),
            Self::Exponential {
                length_scale,
                variance,
            } => variance * (-(t - s).abs() / length_scale).exp(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessKind {
    /// Fractional Brownian motion started at 0.
    Fbm { hurst: f64 },
    /// Stationary fractional Ornstein–Uhlenbeck process obtained from fBm by
    /// the Lamperti transform `X_t = scale · e^{-H κ t} B(e^{κ t})`.
    Fou {
        hurst: f64,
        mean_reversion: f64,
        scale: f64,
    },
    Deterministic { formula: DeterministicPath },
    /// Centred Gaussian process with a named covariance.
    Custom { covariance: CovarianceModel },
}

impl ProcessKind {
    pub fn validate(&self) -> Result<()> {
        let check_h = |h: f64| {
            if h > 0.0 && h < 1.0 {
                Ok(())
            } else {
                invalid(format!("Hurst index must lie in (0, 1), got {h}"))
            }
        };
        match *self {
            Self::Fbm { hurst } => check_h(hurst),
            Self::Fou {
                hurst,
                mean_reversion,
                scale,
            } => {
                check_h(hurst)?;
                if !(mean_reversion > 0.0) || !(scale > 0.0) {
                    return invalid("fOU needs positive mean_reversion and scale");
                }
                Ok(())
            }
            Self::Deterministic { .. } => Ok(()),
            Self::Custom { covariance } => match covariance {
                CovarianceModel::Brownian => Ok(()),
                CovarianceModel::Exponential {
                    length_scale,
                    variance,
                } => {
                    if length_scale > 0.0 && variance > 0.0 {
                        Ok(())
                    } else {
                        invalid("exponential covariance needs positive length_scale and variance")
                    }
                }
            },
        }
    }

    /// Hölder order the paths have (almost every order below it for Gaussian kinds).
    pub fn holder_order(&self) -> f64 {
        match *self {
            Self::Fbm { hurst } | Self::Fou { hurst, .. } => hurst,
            Self::Deterministic { formula } => formula.holder_order(),
            Self::Custom { .. } => 0.5,
        }
    }

    pub fn is_random(&self) -> bool {
        !matches!(self, Self::Deterministic { .. })
    }

    /// Upper bound on the marginal density of `X_t`, when one exists.
    pub fn density_bound(&self, t: f64) -> Option<f64> {
        let inv = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        match *self {
            Self::Fbm { hurst } => (t > 0.0).then(|| inv * t.powf(-hurst)),
            Self::Fou { scale, .. } => Some(inv / scale),
            Self::Custom { covariance } => {
                let v = covariance.cov(t, t);
                (v > 0.0).then(|| inv / v.sqrt())
            }
            Self::Deterministic { .. } => None,
        }
    }

    /// Standard deviation of `X_t`.
    pub fn marginal_sd(&self, t: f64) -> Option<f64> {
        match *self {
            Self::Fbm { hurst } => Some(t.powf(hurst)),
            Self::Fou { scale, .. } => Some(scale),
            Self::Custom { covariance } => Some(covariance.cov(t, t).sqrt()),
            Self::Deterministic { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpec {
    pub kind: ProcessKind,
    pub seed: u64,
}

/// One realization on `grid` driven by stream 0 of `spec.seed`.
pub fn sample_path(spec: &ProcessSpec, grid: &Arc<Grid>) -> Result<SampledPath> {
    sample_path_with_stream(&spec.kind, grid, &mut Stream::new(spec.seed, 0))
}

pub fn sample_path_with_stream(
    kind: &ProcessKind,
    grid: &Arc<Grid>,
    rng: &mut Stream,
) -> Result<SampledPath> {
    kind.validate()?;
    let t_end = grid.t_end();
    let values = match *kind {
        ProcessKind::Deterministic { formula } => {
            grid.times().iter().map(|&t| formula.eval(t, t_end)).collect()
        }
        ProcessKind::Fbm { hurst } => {
            let h = uniform_step(grid)?;
            let n = grid.len() - 1;
            let r = |k: usize| {
                let k = k as f64;
                let e = 2.0 * hurst;
                0.5 * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + (k - 1.0).abs().powf(e))
            };
            let scale = h.powf(hurst);
            match circulant_sample(n, r, rng) {
                Some(incr) => {
                    let mut x = Vec::with_capacity(n + 1);
                    x.push(0.0);
                    let mut acc = 0.0;
                    for z in incr {
                        acc += z * scale;
                        x.push(acc);
                    }
                    x
                }
                None => {
                    let cov = |s: f64, t: f64| {
                        let e = 2.0 * hurst;
                        0.5 * (s.powf(e) + t.powf(e) - (t - s).abs().powf(e))
                    };
                    cholesky_sample(grid.times(), cov, rng)?
                }
            }
        }
        ProcessKind::Fou {
            hurst,
            mean_reversion,
            scale,
        } => {
            let h = uniform_step(grid)?;
            let n = grid.len() - 1;
            let cov_tau = move |tau: f64| {
                let k = mean_reversion * tau;
                scale * scale
                    * ((hurst * k).cosh() - 0.5 * (2.0 * (0.5 * k).sinh()).powf(2.0 * hurst))
            };
            match circulant_sample(n + 1, |k| cov_tau(k as f64 * h), rng) {
                Some(x) => x,
                None => cholesky_sample(grid.times(), |s, t| cov_tau((t - s).abs()), rng)?,
            }
        }
        ProcessKind::Custom { covariance } => {
            cholesky_sample(grid.times(), |s, t| covariance.cov(s, t), rng)?
        }
    };
    SampledPath::linear(grid.clone(), values)
}

fn uniform_step(grid: &Grid) -> Result<f64> {
    grid.step().ok_or_else(|| {
        Error::InvalidArgument("Gaussian process sampling needs a uniform grid".into())
    })
}

/// `len` consecutive values of a stationary sequence with autocovariance `r`,
/// by circulant embedding. `None` if the embedding is not positive
/// semidefinite within tolerance.
fn circulant_sample(len: usize, r: impl Fn(usize) -> f64, rng: &mut Stream) -> Option<Vec<f64>> {
    if len == 1 {
        return Some(vec![r(0).sqrt() * rng.normal()]);
    }
    let half = len - 1;
    let m = 2 * half;
    let mut c: Vec<Complex<f64>> = (0..m)
        .map(|j| {
            let lag = if j <= half { j } else { m - j };
            Complex::new(r(lag), 0.0)
        })
        .collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut c);
    let lmax = c.iter().fold(0.0f64, |a, z| a.max(z.re));
    let mut w = Vec::with_capacity(m);
    for z in &c {
        let mut lam = z.re;
        if lam < 0.0 {
            if lam < -1e-10 * lmax {
                return None;
            }
            lam = 0.0;
        }
        let s = (lam / m as f64).sqrt();
        let (a, b) = (rng.normal(), rng.normal());
        w.push(Complex::new(s * a, s * b));
    }
    fft.process(&mut w);
    Some(w[..len].iter().map(|z| z.re).collect())
}

/// Dense Cholesky sampler; nodes with zero variance are pinned to 0.
fn cholesky_sample(times: &[f64], cov: impl Fn(f64, f64) -> f64, rng: &mut Stream) -> Result<Vec<f64>> {
    let active: Vec<usize> = (0..times.len()).filter(|&i| cov(times[i], times[i]) > 0.0).collect();
    let n = active.len();
    let k = DMatrix::from_fn(n, n, |i, j| cov(times[active[i]], times[active[j]]));
    let chol = k
        .cholesky()
        .ok_or_else(|| Error::Generation("covariance matrix is not positive definite".into()))?;
    let mut z = vec![0.0; n];
    rng.fill_normal(&mut z);
    let x = chol.l() * nalgebra::DVector::from_vec(z);
    let mut out = vec![0.0; times.len()];
    for (slot, &i) in active.iter().enumerate() {
        out[i] = x[slot];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::make_uniform_grid;

    fn fbm_cov(s: f64, t: f64, h: f64) -> f64 {
        0.5 * (s.powf(2.0 * h) + t.powf(2.0 * h) - (t - s).abs().powf(2.0 * h))
    }

    /// Sample covariance over the 5×5 probe set, checked within 4 standard errors.
    fn check_covariance(kind: ProcessKind, cov: impl Fn(f64, f64) -> f64, reps: u64) {
        let grid = Arc::new(make_uniform_grid(1.0, 65).unwrap());
        let probes = [8usize, 16, 32, 48, 64];
        let mut samples = vec![[0.0; 5]; reps as usize];
        for r in 0..reps {
            let p = sample_path_with_stream(&kind, &grid, &mut Stream::new(11, r)).unwrap();
            for (i, &k) in probes.iter().enumerate() {
                samples[r as usize][i] = p.values()[k];
            }
        }
        for a in 0..5 {
            for b in 0..5 {
                let prods: Vec<f64> = samples.iter().map(|s| s[a] * s[b]).collect();
                let mean = prods.iter().sum::<f64>() / reps as f64;
                let var = prods.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
                let se = (var / reps as f64).sqrt();
                let truth = cov(grid.times()[probes[a]], grid.times()[probes[b]]);
                assert!(
                    (mean - truth).abs() <= 4.0 * se,
                    "probe ({a},{b}): {mean} vs {truth} (se {se})"
                );
            }
        }
    }

    #[test]
    fn fbm_covariance_h075() {
        check_covariance(ProcessKind::Fbm { hurst: 0.75 }, |s, t| fbm_cov(s, t, 0.75), 10_000);
    }

    #[test]
    fn fbm_covariance_brownian() {
        check_covariance(ProcessKind::Fbm { hurst: 0.5 }, |s, t| s.min(t), 10_000);
    }

    #[test]
    fn fou_covariance() {
        let kind = ProcessKind::Fou {
            hurst: 0.7,
            mean_reversion: 1.5,
            scale: 0.8,
        };
        let cov = |s: f64, t: f64| {
            let k = 1.5 * (t - s).abs();
            0.64 * ((0.7 * k).cosh() - 0.5 * (2.0 * (0.5 * k).sinh()).powf(1.4))
        };
        check_covariance(kind, cov, 10_000);
    }

    #[test]
    fn custom_exponential_covariance() {
        let covariance = CovarianceModel::Exponential {
            length_scale: 0.3,
            variance: 2.0,
        };
        check_covariance(ProcessKind::Custom { covariance }, |s, t| covariance.cov(s, t), 10_000);
    }

    #[test]
    fn brownian_custom_starts_at_zero() {
        let grid = Arc::new(make_uniform_grid(1.0, 9).unwrap());
        let kind = ProcessKind::Custom {
            covariance: CovarianceModel::Brownian,
        };
        let p = sample_path_with_stream(&kind, &grid, &mut Stream::new(0, 0)).unwrap();
        assert_eq!(p.first(), 0.0);
    }

    #[test]
    fn deterministic_paths_are_exact() {
        let grid = Arc::new(make_uniform_grid(1.0, 3).unwrap());
        let spec = ProcessSpec {
            kind: ProcessKind::Deterministic {
                formula: DeterministicPath::Line,
            },
            seed: 0,
        };
        assert_eq!(sample_path(&spec, &grid).unwrap().values(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn sampling_is_bit_reproducible() {
        let grid = Arc::new(make_uniform_grid(1.0, 4097).unwrap());
        let spec = ProcessSpec {
            kind: ProcessKind::Fbm { hurst: 0.75 },
            seed: 7,
        };
        let a = sample_path(&spec, &grid).unwrap();
        let b = sample_path(&spec, &grid).unwrap();
        assert_eq!(a.values(), b.values());
        assert_eq!(a.first(), 0.0);
        let other = sample_path(&ProcessSpec { seed: 8, ..spec }, &grid).unwrap();
        assert_ne!(a.values(), other.values());
    }

    #[test]
    fn nonuniform_grid_is_rejected_for_fbm() {
        let grid = Arc::new(Grid::new(vec![0.0, 0.1, 1.0]).unwrap());
        let spec = ProcessSpec {
            kind: ProcessKind::Fbm { hurst: 0.75 },
            seed: 1,
        };
        assert!(matches!(sample_path(&spec, &grid), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn invalid_hurst_rejected() {
        let grid = Arc::new(make_uniform_grid(1.0, 9).unwrap());
        let spec = ProcessSpec {
            kind: ProcessKind::Fbm { hurst: 1.2 },
            seed: 1,
        };
        assert!(sample_path(&spec, &grid).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = ProcessSpec {
            kind: ProcessKind::Fou {
                hurst: 0.6,
                mean_reversion: 1.0,
                scale: 2.0,
            },
            seed: 3,
        };
        let s = serde_json::to_string(&spec).unwrap();
        let back: ProcessSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
        let bad = r#"{"kind":{"type":"fbm","hurst":0.7,"extra":1},"seed":1}"#;
        assert!(serde_json::from_str::<ProcessSpec>(bad).is_err());
    }
}
