//! Closed-form large-radius asymptotics of the Fisher-Bingham integral and
//! its 2d first partials, used as accuracy diagnostics for the continuation
//! (never as initial values: backward integration from asymptotic seeds is
//! numerically unstable).
//!
//! Derivatives are reported as ratios to f so the overflow-prone common
//! exponential factor cancels; f itself is reported through its logarithm.

use crate::error::{Error, Result};
use crate::model::{surface_area, NaturalParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Single top lambda.
    Simple,
    /// m-fold top lambda with all corresponding tau zero.
    DegenerateTauZero,
    /// m-fold top lambda with at least one nonzero corresponding tau.
    DegenerateTauNonzero,
}

/// Asymptotic values of f and all 2d derivatives at a given radius.
#[derive(Debug, Clone)]
pub struct LaplaceEval {
    /// Multiplicity of the top lambda group.
    pub m: usize,
    pub branch: Branch,
    /// `sqrt(tau_1^2 + ... + tau_m^2)` in the degenerate nonzero branch.
    pub gamma: f64,
    /// Asymptotic `log f`.
    pub log_f: f64,
    /// Ratios `(df/dtau_j) / f`.
    pub dtau: Vec<f64>,
    /// Ratios `(df/dlambda_j) / f`.
    pub dlambda: Vec<f64>,
}

/// Counts the top lambda group (within `tie_tol` of the maximum) and picks
/// the asymptotic branch.
pub fn classify(np: &NaturalParams, tie_tol: f64) -> (usize, Branch) {
    let lambda = np.lambda();
    let tau = np.tau();
    let m = lambda
        .iter()
        .take_while(|&&l| lambda[0] - l <= tie_tol)
        .count();
    let branch = if m == 1 {
        Branch::Simple
    } else if tau[..m].iter().all(|t| t.abs() <= tie_tol) {
        Branch::DegenerateTauZero
    } else {
        Branch::DegenerateTauNonzero
    };
    (m, branch)
}

/// Default tie tolerance for classification. The continuation itself never
/// consults this; the Pfaffian system is nonsingular for every r > 0.
pub const DEFAULT_TIE_TOL: f64 = 1e-8;

/// Evaluates the asymptotic branch at radius `r`. Requires the top group to
/// be separated from the rest by more than `tie_tol`.
pub fn asymptotic_eval(np: &NaturalParams, r: f64, tie_tol: f64) -> Result<LaplaceEval> {
    assert!(r > 0.0);
    let lambda = np.lambda();
    let tau = np.tau();
    let d = np.dim();
    let (m, branch) = classify(np, tie_tol);
    if m < d && lambda[m - 1] - lambda[m] <= tie_tol {
        return Err(Error::GroupSeparationTooSmall { m });
    }

    let l1 = lambda[0];
    let r2 = r * r;
    // Shared tail factors over the non-top coordinates.
    let mut tail_log = 0.0;
    for i in m..d {
        tail_log -= 0.5 * (l1 - lambda[i]).ln();
        tail_log -= tau[i] * tau[i] / (4.0 * (lambda[i] - l1));
    }

    let mut dtau = vec![0.0; d];
    let mut dlambda = vec![0.0; d];
    for j in m..d {
        let gap = l1 - lambda[j];
        dtau[j] = tau[j] / (2.0 * gap);
        dlambda[j] = (tau[j] / (2.0 * (lambda[j] - l1))).powi(2) + 1.0 / (2.0 * gap);
    }

    let pi_ln = std::f64::consts::PI.ln();
    let (log_f, gamma) = match branch {
        Branch::Simple => {
            let at1 = (r * tau[0]).abs();
            // log(e^{r tau_1} + e^{-r tau_1}), overflow-safe.
            let sym = at1 + (-2.0 * at1).exp().ln_1p();
            dlambda[0] = r2;
            dtau[0] = r * (r * tau[0]).tanh();
            (
                0.5 * (d as f64 - 1.0) * pi_ln + sym + r2 * l1 + tail_log,
                0.0,
            )
        }
        Branch::DegenerateTauZero => {
            for dl in dlambda.iter_mut().take(m) {
                *dl = r2 / m as f64;
            }
            // dtau[..m] stay zero.
            (
                (m as f64 - 1.0) * r.ln()
                    + surface_area(m).ln()
                    + r2 * l1
                    + 0.5 * (d - m) as f64 * pi_ln
                    + tail_log,
                0.0,
            )
        }
        Branch::DegenerateTauNonzero => {
            let gamma = tau[..m].iter().map(|t| t * t).sum::<f64>().sqrt();
            for j in 0..m {
                if tau[j].abs() > tie_tol {
                    dtau[j] = r * tau[j] / gamma;
                    dlambda[j] = r2 * tau[j] * tau[j] / (gamma * gamma);
                } else {
                    dlambda[j] = r / gamma;
                }
            }
            (
                r2 * l1
                    + r * gamma
                    + 0.5 * (m as f64 - 1.0) * (2.0 * r / gamma).ln()
                    + 0.5 * (d as f64 - 1.0) * pi_ln
                    + tail_log,
                gamma,
            )
        }
    };

    Ok(LaplaceEval {
        m,
        branch,
        gamma,
        log_f,
        dtau,
        dlambda,
    })
}
