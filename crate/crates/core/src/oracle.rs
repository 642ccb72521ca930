//! Independent reference values used to validate the continuation: direct
//! quadrature of the spherical integral in low dimension, Monte Carlo
//! estimation of the ball probability, and closed forms for the chi and
//! exponential-product families.
//!
//! Nothing here shares code with the solver; these are deliberately naive
//! implementations whose only virtue is that they are obviously correct.

use crate::error::{Error, Result};
use crate::model::{to_natural, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::{gamma_lr, ln_gamma};

#[derive(Debug, Clone)]
pub struct McOptions {
    pub n_samples: u64,
    pub seed: u64,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            n_samples: 1_000_000,
            seed: 0,
        }
    }
}

/// Samples per ChaCha stream. Fixing this makes the estimate a pure function
/// of `(params, radius, n_samples, seed)`: shard `s` always uses stream `s`
/// of the seeded generator, independent of how the work is batched.
const SHARD_SIZE: u64 = 1 << 20;

/// Monte Carlo estimate of `P(|X| <= radius)` with `X ~ N(mu, diag(sigma2))`.
/// Returns `(p_hat, standard_error)`. Gaussians come from Box-Muller pairs on
/// a counter-mode generator, so results are reproducible bit-for-bit for a
/// given seed.
pub fn mc_ball_probability(params: &ModelParams, radius: f64, opts: &McOptions) -> (f64, f64) {
    let d = params.dim();
    let sd: Vec<f64> = params.sigma2().iter().map(|s| s.sqrt()).collect();
    let mu = params.mu();
    let r2 = radius * radius;

    let mut hits: u64 = 0;
    let n_shards = opts.n_samples.div_ceil(SHARD_SIZE);
    for shard in 0..n_shards {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(shard);
        let lo = shard * SHARD_SIZE;
        let hi = (lo + SHARD_SIZE).min(opts.n_samples);
        let mut spare: Option<f64> = None;
        for _ in lo..hi {
            let mut norm2 = 0.0;
            for i in 0..d {
                let z = match spare.take() {
                    Some(z) => z,
                    None => {
                        // Box-Muller; u1 in (0, 1] avoids log(0).
                        let u1: f64 = 1.0 - rng.gen::<f64>();
                        let u2: f64 = rng.gen();
                        let rad = (-2.0 * u1.ln()).sqrt();
                        let ang = 2.0 * std::f64::consts::PI * u2;
                        spare = Some(rad * ang.sin());
                        rad * ang.cos()
                    }
                };
                let x = mu[i] + sd[i] * z;
                norm2 += x * x;
            }
            if norm2 <= r2 {
                hits += 1;
            }
        }
    }

    let n = opts.n_samples as f64;
    let p = hits as f64 / n;
    let se = (p * (1.0 - p) / n).sqrt();
    (p, se)
}

/// Direct quadrature of the spherical surface integral
/// `f(r) = int_{|x| = r} exp(sum lambda_i x_i^2 + sum tau_i x_i) dS(x)`
/// for d <= 3. d = 1 is a two-point sum; d = 2 uses the trapezoid rule on
/// the periodic circle (spectral accuracy); d = 3 tensors Simpson in the
/// polar angle with the trapezoid rule in the azimuth. Grids are doubled
/// until successive values agree to a relative 1e-10.
pub fn fb_surface_integral(lambda: &[f64], tau: &[f64], r: f64) -> Result<f64> {
    let d = lambda.len();
    match d {
        1 => {
            let e = lambda[0] * r * r;
            Ok((e + tau[0] * r).exp() + (e - tau[0] * r).exp())
        }
        2 => {
            let g = |theta: f64| {
                let (s, c) = theta.sin_cos();
                let x = r * c;
                let y = r * s;
                (lambda[0] * x * x + lambda[1] * y * y + tau[0] * x + tau[1] * y).exp()
            };
            let mut n = 64usize;
            let mut prev = f64::NAN;
            loop {
                let h = 2.0 * std::f64::consts::PI / n as f64;
                let sum: f64 = (0..n).map(|k| g(k as f64 * h)).sum();
                let val = r * h * sum;
                if (val - prev).abs() <= 1e-10 * val.abs() {
                    return Ok(val);
                }
                prev = val;
                n *= 2;
                if n > 1 << 22 {
                    return Err(Error::NoConvergence {
                        max_total_degree: 0,
                    });
                }
            }
        }
        3 => {
            let g = |phi: f64, theta: f64| {
                let (sp, cp) = phi.sin_cos();
                let (st, ct) = theta.sin_cos();
                let x = r * sp * ct;
                let y = r * sp * st;
                let z = r * cp;
                sp * (lambda[0] * x * x
                    + lambda[1] * y * y
                    + lambda[2] * z * z
                    + tau[0] * x
                    + tau[1] * y
                    + tau[2] * z)
                    .exp()
            };
            let mut n = 32usize;
            let mut prev = f64::NAN;
            loop {
                let hphi = std::f64::consts::PI / n as f64;
                let htheta = 2.0 * std::f64::consts::PI / (2 * n) as f64;
                let mut total = 0.0;
                // Trapezoid over the periodic azimuth at each polar node.
                for j in 0..2 * n {
                    let theta = j as f64 * htheta;
                    // Simpson over phi (n even).
                    let mut simpson = g(0.0, theta) + g(std::f64::consts::PI, theta);
                    for i in 1..n {
                        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                        simpson += w * g(i as f64 * hphi, theta);
                    }
                    total += simpson * hphi / 3.0;
                }
                let val = r * r * htheta * total;
                if (val - prev).abs() <= 1e-10 * val.abs() {
                    return Ok(val);
                }
                prev = val;
                n *= 2;
                if n > 1 << 13 {
                    return Err(Error::NoConvergence {
                        max_total_degree: 0,
                    });
                }
            }
        }
        _ => Err(Error::InvalidOptions(
            "surface quadrature supports d <= 3 only".into(),
        )),
    }
}

/// Ball probability for d <= 3 by radial Simpson quadrature over the
/// surface-integral oracle, with grid doubling to a relative 1e-9.
pub fn quad_ball_probability(params: &ModelParams, radius: f64) -> Result<f64> {
    let np = to_natural(params)?;
    let pre = np.prefactor_log().exp();
    // The d = 1 surface integral tends to 2 at the origin, not 0, and the
    // quadrature handles r = 0 exactly in every dimension.
    let f = |r: f64| -> Result<f64> { fb_surface_integral(np.lambda(), np.tau(), r) };
    let mut n = 64usize;
    let mut prev = f64::NAN;
    loop {
        let h = radius / n as f64;
        let mut s = f(0.0)? + f(radius)?;
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h)?;
        }
        let val = pre * s * h / 3.0;
        if (val - prev).abs() <= 1e-9 * val.abs() {
            return Ok(val);
        }
        prev = val;
        n *= 2;
        if n > 1 << 16 {
            return Err(Error::NoConvergence {
                max_total_degree: 0,
            });
        }
    }
}

/// `P(chi_d <= r)`, i.e. the ball probability of the standard normal, via
/// the regularized lower incomplete gamma function.
pub fn chi_ball_probability(d: usize, r: f64) -> f64 {
    gamma_lr(0.5 * d as f64, 0.5 * r * r)
}

/// Closed-form surface integral for the standard normal:
/// `f(r) = S_{d-1} r^{d-1} e^{-r^2/2}`, written in the log domain.
pub fn chi_surface_integral(d: usize, r: f64) -> f64 {
    (std::f64::consts::LN_2 + 0.5 * d as f64 * std::f64::consts::PI.ln()
        - ln_gamma(0.5 * d as f64)
        + (d as f64 - 1.0) * r.ln()
        - 0.5 * r * r)
        .exp()
}

/// Ball probability of the exponential-product family with `2n` coordinates
/// (`sigma^2` paired as `1/(2k)`), which collapses to `(1 - e^{-r^2})^n`.
pub fn exp_product_probability(n: usize, r: f64) -> f64 {
    (n as f64 * (-(-(r * r)).exp()).ln_1p()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn chi_matches_quadrature_d3() {
        let p = ModelParams::new(vec![1.0; 3], vec![0.0; 3]).unwrap();
        for r in [0.5, 1.0, 2.0] {
            let q = quad_ball_probability(&p, r).unwrap();
            assert_relative_eq!(q, chi_ball_probability(3, r), max_relative = 1e-8);
        }
    }

    #[test]
    fn chi_surface_closed_form_d3() {
        // 4 pi r^2 e^{-r^2/2} at r = 1.
        let expected = 4.0 * std::f64::consts::PI * (-0.5f64).exp();
        assert_relative_eq!(chi_surface_integral(3, 1.0), expected, max_relative = 1e-13);
    }

    #[test]
    fn surface_quadrature_free_case() {
        // lambda = tau = 0 gives the plain surface area.
        let v = fb_surface_integral(&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0], 2.0).unwrap();
        assert_relative_eq!(v, 16.0 * std::f64::consts::PI, max_relative = 1e-9);
        let v = fb_surface_integral(&[0.0, 0.0], &[0.0, 0.0], 3.0).unwrap();
        assert_relative_eq!(v, 6.0 * std::f64::consts::PI, max_relative = 1e-9);
    }

    #[test]
    fn surface_quadrature_d1_exact() {
        let v = fb_surface_integral(&[-0.5], &[0.3], 2.0).unwrap();
        let expected = (-2.0f64 + 0.6).exp() + (-2.0f64 - 0.6).exp();
        assert_relative_eq!(v, expected, max_relative = 1e-14);
    }

    #[test]
    fn quadrature_d1_standard_normal() {
        let p = ModelParams::new(vec![1.0], vec![0.0]).unwrap();
        let q = quad_ball_probability(&p, 1.959964).unwrap();
        assert_relative_eq!(q, 0.95, max_relative = 1e-5);
    }

    #[test]
    fn exp_product_values() {
        assert_relative_eq!(
            exp_product_probability(3, 1.0),
            (1.0 - (-1.0f64).exp()).powi(3),
            max_relative = 1e-14
        );
        assert_relative_eq!(exp_product_probability(3, 1.0), 0.252580, epsilon = 1e-6);
        assert_relative_eq!(exp_product_probability(10, 1.0), 0.010186, epsilon = 1e-6);
    }

    #[test]
    fn mc_is_deterministic_and_batch_invariant() {
        let p = ModelParams::new(vec![1.0, 2.0], vec![0.1, -0.2]).unwrap();
        let o = McOptions {
            n_samples: 50_000,
            seed: 7,
        };
        let (a, _) = mc_ball_probability(&p, 1.5, &o);
        let (b, _) = mc_ball_probability(&p, 1.5, &o);
        assert_eq!(a, b);
    }

    #[test]
    fn mc_agrees_with_chi_cdf() {
        let d = 3;
        let p = ModelParams::new(vec![1.0; d], vec![0.0; d]).unwrap();
        let o = McOptions {
            n_samples: 400_000,
            seed: 42,
        };
        let (est, se) = mc_ball_probability(&p, 1.6, &o);
        let truth = chi_ball_probability(d, 1.6);
        assert!(
            (est - truth).abs() < 5.0 * se,
            "est {est}, truth {truth}, se {se}"
        );
    }

    #[test]
    fn mc_seed_changes_estimate() {
        let p = ModelParams::new(vec![1.0], vec![0.0]).unwrap();
        let mk = |seed| McOptions {
            n_samples: 10_000,
            seed,
        };
        let (a, _) = mc_ball_probability(&p, 1.0, &mk(1));
        let (b, _) = mc_ball_probability(&p, 1.0, &mk(2));
        assert_ne!(a, b);
    }

    #[test]
    fn quadrature_rejects_high_dimension() {
        assert!(fb_surface_integral(&[0.0; 4], &[0.0; 4], 1.0).is_err());
    }
}
