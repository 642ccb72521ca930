//! Named variance sequences arising as eigenvalue patterns of classical
//! goodness-of-fit and order-restricted test statistics, parameterized by
//! the dimension.

use crate::error::{Error, Result};
use crate::model::ModelParams;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `sigma_k^2 = (d+1) / (k (k+1))`.
    Hirotsu1,
    /// `sigma_k^2 = 2 (d+2)(d+3) / (k (k+1) (k+2) (k+3))`.
    Hirotsu2,
    /// `sigma_k^2 = 1 / (k (k+1))`.
    AndersonDarling,
    /// Identity covariance.
    Chi,
    /// Pairs `sigma_{2k-1}^2 = sigma_{2k}^2 = 1/(2k)`; requires even `d`.
    /// At `mu = 0` the squared norm is a sum of independent exponentials
    /// with rates `1..d/2`, so `P(|X| <= r) = (1 - e^{-r^2})^{d/2}`.
    ExpProduct,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Hirotsu1,
        Family::Hirotsu2,
        Family::AndersonDarling,
        Family::Chi,
        Family::ExpProduct,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Hirotsu1 => "hirotsu1",
            Family::Hirotsu2 => "hirotsu2",
            Family::AndersonDarling => "anderson-darling",
            Family::Chi => "chi",
            Family::ExpProduct => "exp-product",
        }
    }

    /// Variance sequence in dimension `d`.
    pub fn sigma2(&self, d: usize) -> Result<Vec<f64>> {
        if d == 0 {
            return Err(Error::InvalidOptions("dimension must be at least 1".into()));
        }
        let df = d as f64;
        let seq = |g: &dyn Fn(f64) -> f64| (1..=d).map(|k| g(k as f64)).collect();
        match self {
            Family::Hirotsu1 => Ok(seq(&|k| (df + 1.0) / (k * (k + 1.0)))),
            Family::Hirotsu2 => Ok(seq(&|k| {
                2.0 * (df + 2.0) * (df + 3.0) / (k * (k + 1.0) * (k + 2.0) * (k + 3.0))
            })),
            Family::AndersonDarling => Ok(seq(&|k| 1.0 / (k * (k + 1.0)))),
            Family::Chi => Ok(vec![1.0; d]),
            Family::ExpProduct => {
                if d % 2 != 0 {
                    return Err(Error::InvalidOptions(format!(
                        "exp-product requires even dimension, got {d}"
                    )));
                }
                Ok((1..=d)
                    .map(|i| 1.0 / (2.0 * i.div_ceil(2) as f64))
                    .collect())
            }
        }
    }

    /// `ModelParams` for this family with the given mean vector.
    pub fn params(&self, d: usize, mu: Vec<f64>) -> Result<ModelParams> {
        ModelParams::new(self.sigma2(d)?, mu)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidOptions(format!("unknown family '{s}'")))
    }
}

/// Graded mean vector `mu_k = 0.01 (k - 1)`, the standard noncentral probe.
pub fn mu_ramp(d: usize) -> Vec<f64> {
    (0..d).map(|k| 0.01 * k as f64).collect()
}
