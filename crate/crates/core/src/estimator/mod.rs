//! System estimation: regression rows, linear restrictions and iterated FGLS.

mod restrictions;
mod rows;
mod sur;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use restrictions::{LinearRestriction, ParameterMap, RestrictionSet};
pub use rows::{block_width, build_rows, rotterdam_names, rotterdam_system, RotterdamRows};
pub use sur::{gls_at, sur_fit, Equation, FitOptions, SystemData, SystemFit};

use crate::error::{Error, Result};
use crate::linalg::spd_log_det;

/// Gaussian system log-likelihood and the criteria derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InformationCriteria {
    pub log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    pub k: usize,
    pub n_obs: usize,
}

impl InformationCriteria {
    /// `None` if `sigma` is not positive definite.
    pub fn from_sigma(sigma: &DMatrix<f64>, n_obs: usize, k: usize) -> Option<Self> {
        let ll = system_loglik(sigma, n_obs).ok()?;
        Some(Self {
            log_likelihood: ll,
            aic: aic(ll, k),
            bic: bic(ll, k, n_obs),
            k,
            n_obs,
        })
    }
}

/// Concentrated log-likelihood `−(NM/2)(1 + ln 2π) − (N/2) ln|Σ̂|` for `M`
/// equations of `N` observations each.
pub fn system_loglik(sigma: &DMatrix<f64>, n_obs: usize) -> Result<f64> {
    let m = sigma.nrows() as f64;
    let n = n_obs as f64;
    let log_det = spd_log_det(sigma).ok_or(Error::SingularCovariance)?;
    Ok(-0.5 * n * m * (1.0 + (2.0 * std::f64::consts::PI).ln()) - 0.5 * n * log_det)
}

/// `2k − 2 ln L`.
pub fn aic(log_likelihood: f64, k: usize) -> f64 {
    2.0 * k as f64 - 2.0 * log_likelihood
}

/// `k ln N − 2 ln L`.
pub fn bic(log_likelihood: f64, k: usize, n_obs: usize) -> f64 {
    k as f64 * (n_obs as f64).ln() - 2.0 * log_likelihood
}

/// `Σ (e_t − e_{t−1})² / Σ e_t²`.
pub fn durbin_watson(residuals: &[f64]) -> Result<f64> {
    if residuals.len() < 2 {
        return Err(Error::invalid("Durbin-Watson needs at least 2 residuals"));
    }
    let ss: f64 = residuals.iter().map(|e| e * e).sum();
    if ss == 0.0 {
        return Err(Error::invalid("Durbin-Watson is undefined for all-zero residuals"));
    }
    let diff: f64 = residuals.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    Ok(diff / ss)
}
