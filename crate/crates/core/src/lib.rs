//! Distribution function of the Euclidean norm of a multivariate normal
//! vector — equivalently, the CDF of a weighted sum of independent
//! noncentral chi-square variables — computed by holonomic continuation of
//! the Fisher-Bingham integral.
//!
//! The integrand `f(r)` (the spherical surface integral of the Gaussian
//! density) satisfies a holonomic system whose 2d first partials close
//! under differentiation in `r`. The solver seeds that system near the
//! origin with a convergent power series, continues it outward with an
//! adaptive embedded Runge-Kutta pair, and carries the quadrature of the
//! ball probability as an extra ODE component. Exponential growth of the
//! raw derivatives is absorbed first by a log-magnitude ledger and, past a
//! switch radius, by a gauge rescaling that keeps every component O(1) all
//! the way to the far tail.
//!
//! Entry points: [`solve_ball_probability`] for `P(|X| <= r)` with
//! `X ~ N(mu, diag(sigma2))`, [`solve_f_trace`] for the integrand and its
//! derivative vector along a radius grid, and [`laplace::asymptotic_eval`]
//! for closed-form large-radius diagnostics.

pub mod error;
pub mod family;
pub mod integrator;
pub mod laplace;
pub mod model;
pub mod oracle;
pub mod pfaffian;
pub mod series;

pub use error::{Error, Result};
pub use family::{mu_ramp, Family};
pub use integrator::{
    solve_ball_probability, solve_f_trace, BallProbResult, SolveOptions, SolveStats, SplitValue,
    TracePoint,
};
pub use laplace::{asymptotic_eval, classify, Branch, LaplaceEval, DEFAULT_TIE_TOL};
pub use model::{surface_area, to_natural, ModelParams, NaturalParams};
pub use pfaffian::{HgmState, RescaledState};
pub use series::{series_f_and_gradient, SeriesOptions};
