//! Binary and ordered logit models on the latent-variable formulation.
//!
//! The binary model sets `P(y = 1) = F(x'b)` with `F` the logistic CDF. The
//! ordered model observes which interval of strictly increasing cutpoints the
//! latent `y* = x'b + e` falls in, so `P(y = c) = F(tau_c - x'b) - F(tau_{c-1} - x'b)`.
//! Both are fitted by differential evolution (see [`fit`]).

mod fit;
mod likelihood;
mod metrics;
mod spec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::de::DeError;
use crate::survey::SurveyError;

pub use fit::{fit, fit_design, DeSummary, FitOptions, FitResult};
pub use likelihood::{binary_loglik, log_logistic_cdf, logistic_cdf, ordered_loglik, Cutpoints};
pub use metrics::{auc, chi_square_sf, lr_test, percent_correct, LrTest};
pub use spec::{Family, ModelId, ModelSpec, Response};

pub(crate) use likelihood::{dot, ordered_loglik_rows};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid cutpoints: {0}")]
    InvalidCutpoints(String),
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),
    #[error("empty data: {0}")]
    EmptySlice(String),
    #[error("AUC undefined: {0}")]
    UndefinedAuc(String),
    #[error("inconsistent fit: full log-likelihood {full} is below null log-likelihood {null}")]
    InconsistentFit { full: f64, null: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Survey(#[from] SurveyError),
    #[error(transparent)]
    Evolution(#[from] DeError),
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Dense row-major design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn new(nrows: usize, ncols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(ModelError::InvalidArgument(format!(
                "{} values for a {nrows}x{ncols} matrix",
                data.len()
            )));
        }
        Ok(Self { nrows, ncols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(ModelError::InvalidArgument("ragged rows".into()));
        }
        Self::new(rows.len(), ncols, rows.concat())
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.nrows).map(move |i| self.row(i))
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let data = self
            .rows()
            .flat_map(|r| cols.iter().map(move |&c| r[c]))
            .collect();
        Self {
            nrows: self.nrows,
            ncols: cols.len(),
            data,
        }
    }

    /// Drops the leading intercept column.
    pub fn without_intercept(&self) -> Self {
        self.select_columns(&(1..self.ncols).collect::<Vec<_>>())
    }
}

/// Observed response of a design, coded per model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Binary(Vec<bool>),
    /// Categories `0..levels.len()`; `levels[c]` is the integer rating level category `c` stands for.
    Ordered {
        categories: Vec<usize>,
        levels: Vec<u8>,
    },
}

impl Outcome {
    pub fn len(&self) -> usize {
        match self {
            Outcome::Binary(y) => y.len(),
            Outcome::Ordered { categories, .. } => categories.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn category(&self, i: usize) -> usize {
        match self {
            Outcome::Binary(y) => usize::from(y[i]),
            Outcome::Ordered { categories, .. } => categories[i],
        }
    }

    pub fn n_categories(&self) -> usize {
        match self {
            Outcome::Binary(_) => 2,
            Outcome::Ordered { levels, .. } => levels.len(),
        }
    }
}

/// Regression data ready for fitting: `x` always leads with a column of ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub x: DesignMatrix,
    pub outcome: Outcome,
    /// Records of the filtered group removed by listwise deletion.
    pub dropped: usize,
}

impl Design {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Regressor count, excluding the intercept.
    pub fn k(&self) -> usize {
        self.x.ncols().saturating_sub(1)
    }

    /// Same observations with only the intercept column.
    pub fn intercept_only(&self) -> Design {
        Design {
            x: self.x.select_columns(&[0]),
            outcome: self.outcome.clone(),
            dropped: self.dropped,
        }
    }
}

/// Fitted parameters of either family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FittedModel {
    /// Intercept first.
    Binary { beta: Vec<f64> },
    /// No intercept; its role is taken by the cutpoints.
    Ordered {
        slopes: Vec<f64>,
        cutpoints: Cutpoints,
    },
}

impl FittedModel {
    /// Linear predictor for a design row that includes the intercept column.
    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        match self {
            FittedModel::Binary { beta } => dot(beta, row),
            FittedModel::Ordered { slopes, .. } => dot(slopes, &row[1..]),
        }
    }

    /// Binary: 1 when `p >= 0.5`. Ordered: the most probable category.
    pub fn predict(&self, row: &[f64]) -> usize {
        let eta = self.linear_predictor(row);
        match self {
            FittedModel::Binary { .. } => usize::from(logistic_cdf(eta) >= 0.5),
            FittedModel::Ordered { cutpoints, .. } => {
                cutpoints
                    .probabilities(eta)
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |(bi, bp), (i, &p)| {
                        if p > bp {
                            (i, p)
                        } else {
                            (bi, bp)
                        }
                    })
                    .0
            }
        }
    }

    pub fn log_likelihood(&self, design: &Design) -> Result<f64> {
        match (self, &design.outcome) {
            (FittedModel::Binary { beta }, Outcome::Binary(y)) => binary_loglik(beta, &design.x, y),
            (FittedModel::Ordered { slopes, cutpoints }, Outcome::Ordered { categories, .. }) => {
                if slopes.len() != design.k() {
                    return Err(ModelError::InvalidArgument(format!(
                        "{} slopes for {} regressors",
                        slopes.len(),
                        design.k()
                    )));
                }
                ordered_loglik_rows(
                    slopes,
                    cutpoints,
                    design.x.rows().map(|r| &r[1..]),
                    categories,
                )
            }
            _ => Err(ModelError::InvalidArgument(
                "model family does not match the response coding".into(),
            )),
        }
    }

    /// Linear predictor of every design row.
    pub fn scores(&self, design: &Design) -> Vec<f64> {
        design.x.rows().map(|r| self.linear_predictor(r)).collect()
    }
}
