//! Log-densities, scale estimation and the likelihood-ratio score.
//!
//! The score of a residual vector `r` is the mean log-likelihood ratio between
//! the fitted non-Gaussian density and the zero-mean Gaussian with matching
//! second moment:
//!
//! ```text
//! s(r) = (1/n) Σ_i [ log g(r_i; η̂) - log φ(r_i; σ̂) ],   σ̂² = ‖r‖²/n
//! ```
//!
//! Larger scores mean the residual looks less Gaussian.

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::NoiseFamily;

/// Constant gap `llr_score(Laplace) - laplace_fast_score = ½ln(π/2) - ½`.
pub const LAPLACE_SCORE_OFFSET: f64 = 0.225_791_352_644_727_43 - 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreValue {
    pub value: f64,
    pub sigma_hat: f64,
    pub eta_hat: f64,
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("scale must be positive, got {eta}")))
    }
}

fn t_log_norm(df: f64) -> f64 {
    ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * PI).ln()
}

/// `log g(r; η)` for the given family.
pub fn log_density(family: NoiseFamily, r: f64, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    family.validate()?;
    let z = r / eta;
    Ok(match family {
        NoiseFamily::Laplace => -(2.0 * eta).ln() - z.abs(),
        // symmetric density; -|z| keeps exp() from overflowing
        NoiseFamily::Logistic => -z.abs() - eta.ln() - 2.0 * (-z.abs()).exp().ln_1p(),
        NoiseFamily::ScaledT { df } => t_log_norm(df) - eta.ln() - (df + 1.0) / 2.0 * (z * z / df).ln_1p(),
        NoiseFamily::Gaussian => -0.5 * (2.0 * PI).ln() - eta.ln() - 0.5 * z * z,
    })
}

/// Mean of `log g(r_i; η)` over the vector, with per-family constants hoisted.
pub fn mean_log_density(family: NoiseFamily, residual: &[f64], eta: f64) -> Result<f64> {
    check_eta(eta)?;
    family.validate()?;
    let n = residual.len() as f64;
    let ln_eta = eta.ln();
    let inv = 1.0 / eta;
    let mean = match family {
        NoiseFamily::Laplace => {
            let l1: f64 = residual.iter().map(|r| r.abs()).sum();
            -(2.0 * eta).ln() - l1 * inv / n
        }
        NoiseFamily::Logistic => {
            let s: f64 = residual
                .iter()
                .map(|r| {
                    let a = (r * inv).abs();
                    a + 2.0 * (-a).exp().ln_1p()
                })
                .sum();
            -ln_eta - s / n
        }
        NoiseFamily::ScaledT { df } => {
            let s: f64 = residual.iter().map(|r| (r * r * inv * inv / df).ln_1p()).sum();
            t_log_norm(df) - ln_eta - (df + 1.0) / 2.0 * s / n
        }
        NoiseFamily::Gaussian => {
            let s: f64 = residual.iter().map(|r| r * r).sum();
            -0.5 * (2.0 * PI).ln() - ln_eta - 0.5 * s * inv * inv / n
        }
    };
    Ok(mean)
}

/// Returns `(η̂, σ̂)`.
///
/// `σ̂ = sqrt(‖r‖²/n)` without centering. `η̂` is the Laplace MLE `‖r‖₁/n`, the
/// moment plug-in `√3 σ̂ / π` for Logistic, `σ̂ sqrt((ν-2)/ν)` for scaled-t and
/// `σ̂` for the Gaussian reference.
pub fn fit_scale(family: NoiseFamily, residual: &[f64]) -> Result<(f64, f64)> {
    family.validate()?;
    if residual.is_empty() {
        return Err(Error::DegenerateResidual);
    }
    let n = residual.len() as f64;
    let ss: f64 = residual.iter().map(|r| r * r).sum();
    let sigma = (ss / n).sqrt();
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::DegenerateResidual);
    }
    let eta = match family {
        NoiseFamily::Laplace => residual.iter().map(|r| r.abs()).sum::<f64>() / n,
        NoiseFamily::Logistic => 3f64.sqrt() / PI * sigma,
        NoiseFamily::ScaledT { df } => sigma * ((df - 2.0) / df).sqrt(),
        NoiseFamily::Gaussian => sigma,
    };
    Ok((eta, sigma))
}

/// Mean log-likelihood ratio of the fitted `family` density against the
/// moment-matched zero-mean Gaussian.
pub fn llr_score(family: NoiseFamily, residual: &[f64]) -> Result<ScoreValue> {
    let (eta, sigma) = fit_scale(family, residual)?;
    let non_gaussian = mean_log_density(family, residual, eta)?;
    let gaussian = mean_log_density(NoiseFamily::Gaussian, residual, sigma)?;
    Ok(ScoreValue { value: non_gaussian - gaussian, sigma_hat: sigma, eta_hat: eta })
}

/// `ln(σ̂/η̂) = ln(√n ‖r‖₂ / ‖r‖₁)`, the Laplace score up to a constant.
pub fn laplace_fast_score(residual: &[f64]) -> Result<f64> {
    let (eta, sigma) = fit_scale(NoiseFamily::Laplace, residual)?;
    Ok((sigma / eta).ln())
}
