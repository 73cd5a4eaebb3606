//! Logit link and log-likelihoods for the binary and ordered families.

use serde::{Deserialize, Serialize};

use super::{DesignMatrix, ModelError, Result};

/// Logistic CDF `1 / (1 + e^-z)`, evaluated without overflow for large `|z|`.
pub fn logistic_cdf(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^t)`
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `ln F(z)` for the logistic CDF.
pub fn log_logistic_cdf(z: f64) -> f64 {
    -softplus(-z)
}

/// `ln(F(b) - F(a))` for `a < b`.
fn log_logistic_interval(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return log_logistic_cdf(b);
    }
    if b == f64::INFINITY {
        return log_logistic_cdf(-a);
    }
    b + (-(a - b).exp_m1()).ln() - softplus(a) - softplus(b)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Strictly increasing thresholds cutting the latent scale into ordered categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cutpoints(Vec<f64>);

impl Cutpoints {
    pub fn new(tau: Vec<f64>) -> Result<Self> {
        if tau.is_empty() {
            return Err(ModelError::InvalidCutpoints(
                "need at least one cutpoint".into(),
            ));
        }
        if tau.iter().any(|t| !t.is_finite()) {
            return Err(ModelError::InvalidCutpoints("non-finite cutpoint".into()));
        }
        if let Some(w) = tau.windows(2).find(|w| w[0] >= w[1]) {
            return Err(ModelError::InvalidCutpoints(format!(
                "cutpoints not strictly increasing: {} then {}",
                w[0], w[1]
            )));
        }
        Ok(Self(tau))
    }

    /// `tau_0 = first`, `tau_m = tau_{m-1} + exp(log_gaps[m-1])`.
    pub fn from_log_gaps(first: f64, log_gaps: &[f64]) -> Result<Self> {
        let mut tau = Vec::with_capacity(log_gaps.len() + 1);
        tau.push(first);
        let mut t = first;
        for g in log_gaps {
            t += g.exp();
            tau.push(t);
        }
        Self::new(tau)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn categories(&self) -> usize {
        self.0.len() + 1
    }

    /// Lower and upper latent thresholds of category `c`, with infinite ends.
    fn interval(&self, c: usize) -> (f64, f64) {
        let lo = if c == 0 {
            f64::NEG_INFINITY
        } else {
            self.0[c - 1]
        };
        let hi = self.0.get(c).copied().unwrap_or(f64::INFINITY);
        (lo, hi)
    }

    /// `ln P(y = c)` given linear predictor `eta`.
    pub fn log_probability(&self, c: usize, eta: f64) -> f64 {
        let (lo, hi) = self.interval(c);
        log_logistic_interval(lo - eta, hi - eta)
    }

    /// All category probabilities at linear predictor `eta`.
    pub fn probabilities(&self, eta: f64) -> Vec<f64> {
        (0..self.categories())
            .map(|c| self.log_probability(c, eta).exp())
            .collect()
    }
}

/// Binary logit log-likelihood; `x` carries the intercept column.
pub fn binary_loglik(beta: &[f64], x: &DesignMatrix, y: &[bool]) -> Result<f64> {
    if beta.len() != x.ncols() {
        return Err(ModelError::InvalidArgument(format!(
            "{} coefficients for {} design columns",
            beta.len(),
            x.ncols()
        )));
    }
    if y.len() != x.nrows() {
        return Err(ModelError::InvalidArgument(format!(
            "{} responses for {} design rows",
            y.len(),
            x.nrows()
        )));
    }
    Ok(x.rows()
        .zip(y)
        .map(|(row, &yi)| {
            let eta = dot(beta, row);
            if yi {
                log_logistic_cdf(eta)
            } else {
                log_logistic_cdf(-eta)
            }
        })
        .sum())
}

/// Ordered logit log-likelihood; `x` has no intercept column and `y` holds
/// categories `0..tau.categories()`.
pub fn ordered_loglik(
    slopes: &[f64],
    tau: &Cutpoints,
    x: &DesignMatrix,
    y: &[usize],
) -> Result<f64> {
    if slopes.len() != x.ncols() {
        return Err(ModelError::InvalidArgument(format!(
            "{} slopes for {} design columns",
            slopes.len(),
            x.ncols()
        )));
    }
    ordered_loglik_rows(slopes, tau, x.rows(), y)
}

pub(crate) fn ordered_loglik_rows<'a>(
    slopes: &[f64],
    tau: &Cutpoints,
    rows: impl ExactSizeIterator<Item = &'a [f64]>,
    y: &[usize],
) -> Result<f64> {
    if y.len() != rows.len() {
        return Err(ModelError::InvalidArgument(format!(
            "{} responses for {} design rows",
            y.len(),
            rows.len()
        )));
    }
    let c_max = tau.categories();
    let mut total = 0.0;
    for (row, &c) in rows.zip(y) {
        if c >= c_max {
            return Err(ModelError::InvalidArgument(format!(
                "category {c} outside 0..{c_max}"
            )));
        }
        total += tau.log_probability(c, dot(slopes, row));
    }
    Ok(total)
}
