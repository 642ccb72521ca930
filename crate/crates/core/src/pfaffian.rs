//! Right-hand sides of the two ODE systems driving the continuation, the
//! gauge transforms between them, and the recovery of the integrand.
//!
//! The state vector holds the 2d first partials of the Fisher-Bingham
//! integral, ordered `(df/dtau_1, ..., df/dtau_d, df/dlambda_1, ...,
//! df/dlambda_d)`. Its radial derivative is `P_r F` where `P_r` is block
//! structured: diagonal blocks `diag(2 r^2 lambda_i + 1)/r` and
//! `diag(2 r^2 lambda_i + 2)/r`, an upper-right block `tau (1,...,1)/r`, a
//! lower-left block `r tau` on the diagonal, and `1/r` off-diagonal entries
//! in the lower-right block. That rank structure makes a matrix-vector
//! product O(d); the dense entrywise construction survives only as a test
//! oracle.
//!
//! For large radii every component decays like `exp(r^2 lambda_1)`, so the
//! integration switches to the rescaled vector
//! `Q = exp(-r^2 lambda_1 - r |tau_1|) D F` with
//! `D = diag(1/r, 1, ..., 1, 1/r^2, 1, ..., 1)`, whose components approach
//! finite nonzero limits. The exponential factor lives exclusively in the
//! log-scale ledger so mantissas stay O(1).

use crate::error::{Error, Result};

/// ODE state for the raw phase: mantissa vector plus log-magnitude ledger
/// plus the running quadrature accumulator (`integral = e^log_scale * c`).
#[derive(Debug, Clone, PartialEq)]
pub struct HgmState {
    pub vec: Vec<f64>,
    pub log_scale: f64,
    pub integral_mantissa: f64,
}

/// ODE state for the rescaled large-radius phase; same ledger convention.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledState {
    pub vec: Vec<f64>,
    pub log_scale: f64,
    pub integral_mantissa: f64,
}

/// Multiplies the state by `e^{-shift}` and absorbs the shift into the
/// ledger; every recoverable quantity is invariant.
pub fn rescale(vec: &mut [f64], integral_mantissa: &mut f64, log_scale: &mut f64, shift: f64) {
    let s = (-shift).exp();
    for v in vec.iter_mut() {
        *v *= s;
    }
    *integral_mantissa *= s;
    *log_scale += shift;
}

impl HgmState {
    pub fn rescaled_by(&mut self, shift: f64) {
        let mut c = self.integral_mantissa;
        rescale(&mut self.vec, &mut c, &mut self.log_scale, shift);
        self.integral_mantissa = c;
    }
}

impl RescaledState {
    pub fn rescaled_by(&mut self, shift: f64) {
        let mut c = self.integral_mantissa;
        rescale(&mut self.vec, &mut c, &mut self.log_scale, shift);
        self.integral_mantissa = c;
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r == 0.0 {
        return Err(Error::SingularRadius);
    }
    Ok(())
}

/// `P_r v` in O(d) using the rank-1-plus-diagonal structure.
pub fn apply_p(lambda: &[f64], tau: &[f64], r: f64, v: &[f64]) -> Result<Vec<f64>> {
    check_radius(r)?;
    let d = lambda.len();
    let mut out = vec![0.0; 2 * d];
    apply_p_into(lambda, tau, r, v, &mut out);
    Ok(out)
}

pub(crate) fn apply_p_into(lambda: &[f64], tau: &[f64], r: f64, v: &[f64], out: &mut [f64]) {
    let d = lambda.len();
    let r2 = r * r;
    let sum_l: f64 = v[d..2 * d].iter().sum();
    for i in 0..d {
        let diag = 2.0 * r2 * lambda[i] + 1.0;
        out[i] = (diag * v[i] + tau[i] * sum_l) / r;
        out[d + i] = (r2 * tau[i] * v[i] + diag * v[d + i] + sum_l) / r;
    }
}

/// Right-hand side of the rescaled system:
/// `(D^{-1} dD/dr - (2 r lambda_1 + |tau_1|) I + D P_r D^{-1}) q`.
pub fn apply_q_rhs(lambda: &[f64], tau: &[f64], r: f64, q: &[f64]) -> Result<Vec<f64>> {
    check_radius(r)?;
    let d = lambda.len();
    let mut out = vec![0.0; 2 * d];
    apply_q_rhs_into(lambda, tau, r, q, &mut out);
    Ok(out)
}

pub(crate) fn apply_q_rhs_into(lambda: &[f64], tau: &[f64], r: f64, q: &[f64], out: &mut [f64]) {
    let d = lambda.len();
    let r2 = r * r;
    // w = D^{-1} q: undo the 1/r and 1/r^2 scalings on slots 0 and d.
    let w0 = q[0] * r;
    let wd = q[d] * r2;
    let mut sum_l = wd;
    for j in 1..d {
        sum_l += q[d + j];
    }
    let drift = 2.0 * r * lambda[0] + tau[0].abs();
    for i in 0..d {
        let diag = 2.0 * r2 * lambda[i] + 1.0;
        let vi = if i == 0 { w0 } else { q[i] };
        let vli = if i == 0 { wd } else { q[d + i] };
        let mut t = (diag * vi + tau[i] * sum_l) / r;
        let mut l = (r2 * tau[i] * vi + diag * vli + sum_l) / r;
        if i == 0 {
            t /= r;
            l /= r2;
            t -= q[0] / r;
            l -= 2.0 * q[d] / r;
        }
        out[i] = t - drift * q[i];
        out[d + i] = l - drift * q[d + i];
    }
}

/// Gauge factor exponent `r^2 lambda_1 + r |tau_1|` relating F and Q:
/// `F = e^{gauge} D^{-1} Q`.
pub fn gauge_exponent(lambda: &[f64], tau: &[f64], r: f64) -> f64 {
    r * r * lambda[0] + r * tau[0].abs()
}

/// Switches representation at radius `r`. The diagonal scaling acts on the
/// mantissa; the exponential factor moves into the ledger, and the integral
/// mantissa is rebased so `e^log_scale * integral_mantissa` is unchanged.
pub fn gauge_f_to_q(lambda: &[f64], tau: &[f64], r: f64, s: &HgmState) -> RescaledState {
    let d = lambda.len();
    let g = gauge_exponent(lambda, tau, r);
    let mut vec = s.vec.clone();
    vec[0] /= r;
    vec[d] /= r * r;
    RescaledState {
        vec,
        log_scale: s.log_scale - g,
        integral_mantissa: s.integral_mantissa * g.exp(),
    }
}

/// Inverse of [`gauge_f_to_q`].
pub fn gauge_q_to_f(lambda: &[f64], tau: &[f64], r: f64, q: &RescaledState) -> HgmState {
    let d = lambda.len();
    let g = gauge_exponent(lambda, tau, r);
    let mut vec = q.vec.clone();
    vec[0] *= r;
    vec[d] *= r * r;
    HgmState {
        vec,
        log_scale: q.log_scale + g,
        integral_mantissa: q.integral_mantissa * (-g).exp(),
    }
}

/// Recovers the integrand `f = r^{-2} sum_i df/dlambda_i` in split-exponent
/// form `(mantissa, log_scale)`.
pub fn recover_f_hgm(r: f64, s: &HgmState) -> (f64, f64) {
    let d = s.vec.len() / 2;
    let sum: f64 = s.vec[d..].iter().sum();
    (sum / (r * r), s.log_scale)
}

/// Same recovery from the rescaled state; the slot-(d+1) diagonal factor is
/// undone and the gauge exponent is reported through the log part.
pub fn recover_f_rescaled(lambda: &[f64], tau: &[f64], r: f64, q: &RescaledState) -> (f64, f64) {
    let d = q.vec.len() / 2;
    let r2 = r * r;
    let mut sum = r2 * q.vec[d];
    for j in 1..d {
        sum += q.vec[d + j];
    }
    (sum / r2, q.log_scale + gauge_exponent(lambda, tau, r))
}

#[cfg(test)]
pub(crate) fn dense_pfaffian(lambda: &[f64], tau: &[f64], r: f64) -> Vec<Vec<f64>> {
    // Entrywise construction from the p_ij formulas; test oracle only.
    let d = lambda.len();
    let r2 = r * r;
    let mut p = vec![vec![0.0; 2 * d]; 2 * d];
    for i in 0..d {
        for j in 0..2 * d {
            let mut rp = 0.0;
            if i == j {
                rp += 2.0 * r2 * lambda[i] + 1.0;
            }
            if j >= d {
                rp += tau[i];
            }
            p[i][j] = rp / r;
        }
        for j in 0..2 * d {
            let mut rp = 0.0;
            if j == i {
                rp += r2 * tau[i];
            }
            if j == i + d {
                rp += 2.0 * r2 * lambda[i] + 2.0;
            } else if j >= d {
                rp += 1.0;
            }
            p[d + i][j] = rp / r;
        }
    }
    p
}
