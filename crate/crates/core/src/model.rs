//! Parameter representation and the (sigma^2, mu) -> (lambda, tau) transform.
//!
//! The covariance matrix must be diagonal. A nondiagonal covariance can be
//! handled by a preprocessing rotation: diagonalize `Sigma = U diag(s) U^T`
//! and replace `mu` by `U^T mu`; the norm of the vector is invariant under
//! the rotation, so the ball probability is unchanged. That recipe lives in
//! the documentation on purpose; this layer accepts diagonal input only.

use crate::error::{Error, Result};
use statrs::function::gamma::ln_gamma;

/// User-facing specification of the normal distribution: `N(mu, diag(sigma2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    sigma2: Vec<f64>,
    mu: Vec<f64>,
}

impl ModelParams {
    /// Validates `d >= 1`, strictly positive finite variances and finite means.
    pub fn new(sigma2: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        if sigma2.is_empty() {
            return Err(Error::InvalidOptions("dimension must be at least 1".into()));
        }
        if sigma2.len() != mu.len() {
            return Err(Error::InvalidOptions(format!(
                "sigma2 has {} entries but mu has {}",
                sigma2.len(),
                mu.len()
            )));
        }
        for (i, &s) in sigma2.iter().enumerate() {
            if !s.is_finite() {
                return Err(Error::NonFinite("sigma2"));
            }
            if s <= 0.0 {
                return Err(Error::NonPositiveVariance { index: i, value: s });
            }
        }
        if mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFinite("mu"));
        }
        Ok(Self { sigma2, mu })
    }

    pub fn dim(&self) -> usize {
        self.sigma2.len()
    }

    pub fn sigma2(&self) -> &[f64] {
        &self.sigma2
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }
}

/// Fisher-Bingham natural parameters, sorted so that `lambda[0]` is maximal.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalParams {
    lambda: Vec<f64>,
    tau: Vec<f64>,
    perm: Vec<usize>,
    prefactor_log: f64,
}

impl NaturalParams {
    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// Strictly negative, nonincreasing.
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// Permuted consistently with `lambda`.
    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    /// `perm[k]` is the original (user-order) index of sorted position `k`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Log of the prefactor of the CDF representation:
    /// `prod sqrt(-lambda_i) * pi^(-d/2) * exp(sum tau_i^2 / (4 lambda_i))`.
    pub fn prefactor_log(&self) -> f64 {
        self.prefactor_log
    }
}

/// Transforms `(sigma^2, mu)` into `(lambda, tau)` with
/// `lambda_i = -1/(2 sigma_i^2)` and `tau_i = mu_i / sigma_i^2`, then jointly
/// sorts coordinates by `lambda` descending (ties by `|tau|` descending, then
/// by original index). The prefactor is accumulated in the log domain so that
/// large dimensions do not under- or overflow.
pub fn to_natural(params: &ModelParams) -> Result<NaturalParams> {
    let d = params.dim();
    let mut lambda = vec![0.0; d];
    let mut tau = vec![0.0; d];
    for i in 0..d {
        lambda[i] = -0.5 / params.sigma2[i];
        tau[i] = params.mu[i] / params.sigma2[i];
    }

    let mut perm: Vec<usize> = (0..d).collect();
    perm.sort_by(|&a, &b| {
        lambda[b]
            .partial_cmp(&lambda[a])
            .unwrap()
            .then(tau[b].abs().partial_cmp(&tau[a].abs()).unwrap())
            .then(a.cmp(&b))
    });
    let lambda_sorted: Vec<f64> = perm.iter().map(|&i| lambda[i]).collect();
    let tau_sorted: Vec<f64> = perm.iter().map(|&i| tau[i]).collect();

    let mut prefactor_log = -0.5 * d as f64 * std::f64::consts::PI.ln();
    for i in 0..d {
        prefactor_log += 0.5 * (-lambda_sorted[i]).ln();
        prefactor_log += 0.25 * tau_sorted[i] * tau_sorted[i] / lambda_sorted[i];
    }
    if !prefactor_log.is_finite() {
        return Err(Error::NonFinite("prefactor_log"));
    }

    Ok(NaturalParams {
        lambda: lambda_sorted,
        tau: tau_sorted,
        perm,
        prefactor_log,
    })
}

/// Surface area of the unit sphere `S^{d-1}`: `2 pi^{d/2} / Gamma(d/2)`.
/// For `d = 1` the "sphere" is the two-point set and the value is 2.
pub fn surface_area(d: usize) -> f64 {
    assert!(d >= 1);
    let hd = 0.5 * d as f64;
    (std::f64::consts::LN_2 + hd * std::f64::consts::PI.ln() - ln_gamma(hd)).exp()
}
