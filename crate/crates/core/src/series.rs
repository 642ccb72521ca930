//! Power-series evaluation of the Fisher-Bingham integral near r = 0.
//!
//! The integral over the radius-r sphere of `exp(sum lambda_i t_i^2 + sum
//! tau_i t_i)` has the expansion
//!
//! ```text
//! f = r^{d-1} S_{d-1} sum_{alpha,beta} r^{2|alpha+beta|}
//!     (d-2)!! prod_i (2 alpha_i + 2 beta_i - 1)!!
//!     / [ (d-2+2|alpha|+2|beta|)!! alpha! (2 beta)! ]
//!     lambda^alpha tau^{2 beta}
//! ```
//!
//! which converges everywhere but is only practical for r <= 1. The leading
//! term supplies the initial state for the ODE continuation; the full series
//! is kept as a cross-check.

use crate::error::{Error, Result};
use crate::model::{surface_area, NaturalParams};

#[derive(Debug, Clone)]
pub struct SeriesOptions {
    /// Cap on the total degree `|alpha| + |beta|`.
    pub max_total_degree: usize,
    /// Relative truncation tolerance per component.
    pub rel_tol: f64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            max_total_degree: 30,
            rel_tol: 1e-13,
        }
    }
}

/// Leading-term initial state for the ODE continuation, scaled by
/// `r0^{-(d+1)}` so the entries are representable at tiny radii:
/// slot `i` holds `S_{d-1} tau_i / d` (the tau-derivative) and slot `d+i`
/// holds `S_{d-1} / d` (the lambda-derivative). The caller records the
/// magnitude `(d+1) log r0` in its ledger; the truncation error is
/// `O(r0^2)` relative.
pub fn leading_initial_state(np: &NaturalParams, r0: f64) -> Vec<f64> {
    debug_assert!(r0 > 0.0 && r0 < 1.0);
    let d = np.dim();
    let s_over_d = surface_area(d) / d as f64;
    let mut v = vec![0.0; 2 * d];
    for i in 0..d {
        v[i] = s_over_d * np.tau()[i];
        v[d + i] = s_over_d;
    }
    v
}

/// Log of the double factorial `n!!` with the convention `(-1)!! = 1`.
fn ln_double_factorial_table(n_max: usize) -> Vec<f64> {
    let mut t = vec![0.0; n_max + 1];
    for n in 2..=n_max {
        t[n] = t[n - 2] + (n as f64).ln();
    }
    t
}

fn ln_factorial_table(n_max: usize) -> Vec<f64> {
    let mut t = vec![0.0; n_max + 1];
    for n in 2..=n_max {
        t[n] = t[n - 1] + (n as f64).ln();
    }
    t
}

struct Workspace {
    ln_df: Vec<f64>,
    ln_f: Vec<f64>,
    exps: Vec<usize>,
    pow_l: Vec<f64>,
    pow_t: Vec<f64>,
}

/// Evaluates `f` and the 2d-vector of derivatives
/// `(df/dtau_1, ..., df/dtau_d, df/dlambda_1, ..., df/dlambda_d)` by summing
/// total-degree shells of the series until two consecutive shells contribute
/// relative mass below `rel_tol` to every component.
pub fn series_f_and_gradient(
    lambda: &[f64],
    tau: &[f64],
    r: f64,
    opts: &SeriesOptions,
) -> Result<(f64, Vec<f64>)> {
    assert_eq!(lambda.len(), tau.len());
    assert!(r > 0.0);
    let d = lambda.len();
    let sd = surface_area(d);

    let mut ws = Workspace {
        ln_df: ln_double_factorial_table(2 * opts.max_total_degree + d + 2),
        ln_f: ln_factorial_table(2 * opts.max_total_degree + 2),
        exps: vec![0; 2 * d],
        pow_l: vec![1.0; d],
        pow_t: vec![1.0; d],
    };
    let ln_df_d_minus_2 = if d >= 2 { ws.ln_df[d - 2] } else { 0.0 };

    let base_log = (d as f64 - 1.0) * r.ln() + sd.ln();
    let mut f_acc = 0.0f64;
    let mut grad_acc = vec![0.0f64; 2 * d];
    let mut f_shell = 0.0f64;
    let mut grad_shell = vec![0.0f64; 2 * d];
    let mut quiet_shells = 0usize;

    for s in 0..=opts.max_total_degree {
        f_shell = 0.0;
        grad_shell.iter_mut().for_each(|g| *g = 0.0);
        // (d - 2 + 2s)!! with (-1)!! = 1 when d = 1, s = 0.
        let ln_df_denom = match (d + 2 * s).checked_sub(2) {
            Some(n) => ws.ln_df[n],
            None => 0.0,
        };
        let shell_log = base_log + 2.0 * s as f64 * r.ln() - ln_df_denom + ln_df_d_minus_2;
        sum_shell(
            lambda,
            tau,
            shell_log,
            s,
            0,
            &mut ws,
            &mut f_shell,
            &mut grad_shell,
        );
        f_acc += f_shell;
        for (a, g) in grad_acc.iter_mut().zip(&grad_shell) {
            *a += g;
        }

        let mut small = f_shell.abs() <= opts.rel_tol * f_acc.abs();
        if small {
            for i in 0..2 * d {
                let denom = grad_acc[i].abs().max(1e-8 * f_acc.abs());
                if grad_shell[i].abs() > opts.rel_tol * denom {
                    small = false;
                    break;
                }
            }
        }
        if small {
            quiet_shells += 1;
            if quiet_shells >= 2 {
                return Ok((f_acc, grad_acc));
            }
        } else {
            quiet_shells = 0;
        }
    }
    let _ = f_shell;
    Err(Error::NoConvergence {
        max_total_degree: opts.max_total_degree,
    })
}

/// Recursively enumerates multi-indices `(alpha, beta)` with
/// `|alpha| + |beta| = s` and accumulates each monomial's contribution to the
/// shell value and gradient. Positions `0..d` are alpha, `d..2d` are beta.
#[allow(clippy::too_many_arguments)]
fn sum_shell(
    lambda: &[f64],
    tau: &[f64],
    shell_log: f64,
    remaining: usize,
    pos: usize,
    ws: &mut Workspace,
    f_shell: &mut f64,
    grad_shell: &mut [f64],
) {
    let d = lambda.len();
    if pos == 2 * d - 1 {
        ws.exps[pos] = remaining;
        accumulate_term(lambda, tau, shell_log, ws, f_shell, grad_shell);
        return;
    }
    for e in 0..=remaining {
        ws.exps[pos] = e;
        sum_shell(
            lambda,
            tau,
            shell_log,
            remaining - e,
            pos + 1,
            ws,
            f_shell,
            grad_shell,
        );
    }
}

fn accumulate_term(
    lambda: &[f64],
    tau: &[f64],
    shell_log: f64,
    ws: &mut Workspace,
    f_shell: &mut f64,
    grad_shell: &mut [f64],
) {
    let d = lambda.len();
    let (alpha, beta) = ws.exps.split_at(d);

    // Positive part of the coefficient, in logs.
    let mut ln_c = shell_log;
    for i in 0..d {
        let ab2 = 2 * alpha[i] + 2 * beta[i];
        if ab2 >= 2 {
            ln_c += ws.ln_df[ab2 - 1];
        }
        ln_c -= ws.ln_f[alpha[i]];
        ln_c -= ws.ln_f[2 * beta[i]];
    }
    let c = ln_c.exp();
    if c == 0.0 {
        return;
    }

    let mut mono = 1.0f64;
    for i in 0..d {
        ws.pow_l[i] = lambda[i].powi(alpha[i] as i32);
        ws.pow_t[i] = tau[i].powi(2 * beta[i] as i32);
        mono *= ws.pow_l[i] * ws.pow_t[i];
    }
    *f_shell += c * mono;

    for i in 0..d {
        if beta[i] > 0 {
            let mut m = 2.0 * beta[i] as f64 * tau[i].powi(2 * beta[i] as i32 - 1);
            for j in 0..d {
                m *= ws.pow_l[j];
                if j != i {
                    m *= ws.pow_t[j];
                }
            }
            grad_shell[i] += c * m;
        }
        if alpha[i] > 0 {
            let mut m = alpha[i] as f64 * lambda[i].powi(alpha[i] as i32 - 1);
            for j in 0..d {
                m *= ws.pow_t[j];
                if j != i {
                    m *= ws.pow_l[j];
                }
            }
            grad_shell[d + i] += c * m;
        }
    }
}
