//! Pathwise fractional (Zähle–Stieltjes) integration of discontinuously
//! evaluated Hölder paths.
//!
//! The crate is organised bottom-up:
//!
//! * [`paths`]: grids, sampled paths, Gaussian path generators and the
//!   Hölder, Gagliardo and `W^θ_1(0+)` / `W^θ_∞(T-)` norms;
//! * [`bv`]: functions of locally finite variation, their variation
//!   measures, Jordan decomposition, truncation and mollification;
//! * [`fraccalc`]: Riemann–Liouville integrals and Weyl–Marchaud derivatives;
//! * [`zs`]: the Zähle–Stieltjes integral, Riemann–Stieltjes sums over
//!   tagged partitions and the a-priori error bound;
//! * [`experiments`]: Monte Carlo convergence and bound checks.
//!
//! All singular integrals are evaluated cell by cell in closed form against
//! the path interpolant, so no diagonal cutoff is ever introduced.

pub mod bv;
pub mod error;
pub mod experiments;
pub mod fraccalc;
mod kernel;
pub mod paths;
pub mod quadrature;
pub mod report;
pub mod rng;
pub mod zs;

pub use error::{Error, Result};

/// 17 significant digits, the round-trip precision of `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}
