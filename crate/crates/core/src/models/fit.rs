use serde::{Deserialize, Serialize};

use super::{
    auc, lr_test, percent_correct, Cutpoints, Design, Family, FittedModel, ModelError, ModelSpec,
    Outcome, Result,
};
use crate::de::{evolve, DEConfig, MutationStrategy, SearchBounds, StopReason};
use crate::objectives::{Criterion, ModelObjective};
use crate::survey::{design_matrix, Dataset};

/// Search-box settings for model fitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Coefficients and the first cutpoint are searched in `[-bound, bound]`.
    pub coefficient_bound: f64,
    /// Range of `ln(tau_m - tau_{m-1})` for the remaining cutpoints.
    pub log_gap_range: (f64, f64),
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            coefficient_bound: 10.0,
            log_gap_range: (-6.0, 3.0),
        }
    }
}

/// The DE settings a fit ran with, echoed into its report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeSummary {
    pub seed: u64,
    pub strategy: MutationStrategy,
    pub np: usize,
    pub f: f64,
    pub cr: f64,
    pub max_generations: usize,
    pub generations: usize,
    pub null_generations: usize,
    pub evaluations: usize,
    pub stop_reason: StopReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub family: Family,
    pub criterion: Criterion,
    /// Binary: intercept then slopes. Ordered: slopes only.
    pub coefficients: Vec<f64>,
    pub cutpoints: Option<Cutpoints>,
    pub log_likelihood: f64,
    pub null_log_likelihood: f64,
    pub lr_statistic: f64,
    pub lr_p_value: f64,
    pub df: u32,
    pub percent_correct: f64,
    pub auc: Option<f64>,
    pub n: usize,
    pub dropped: usize,
    pub de: DeSummary,
}

impl FitResult {
    pub fn fitted_model(&self) -> FittedModel {
        match &self.cutpoints {
            None => FittedModel::Binary {
                beta: self.coefficients.clone(),
            },
            Some(c) => FittedModel::Ordered {
                slopes: self.coefficients.clone(),
                cutpoints: c.clone(),
            },
        }
    }
}

/// Builds the design for `spec` from `ds` and fits it with default search boxes.
pub fn fit(
    spec: &ModelSpec,
    ds: &Dataset,
    de: &DEConfig,
    criterion: Criterion,
) -> Result<FitResult> {
    let design = design_matrix(ds, spec)?;
    fit_design(spec, &design, de, criterion, &FitOptions::default())
}

/// Fits the full model and its intercept-only (or cutpoints-only) null by DE.
///
/// The null model is always fitted by likelihood. Under [`Criterion::NegAuc`]
/// the AUC search fixes only the direction of the slopes; intercept and scale
/// are then chosen by likelihood along that direction.
pub fn fit_design(
    spec: &ModelSpec,
    design: &Design,
    de: &DEConfig,
    criterion: Criterion,
    opts: &FitOptions,
) -> Result<FitResult> {
    spec.validate()?;
    if design.k() != spec.regressors.len() {
        return Err(ModelError::InvalidArgument(format!(
            "design has {} regressors, specification lists {}",
            design.k(),
            spec.regressors.len()
        )));
    }
    let family = spec.family();

    let full = ModelObjective::new(criterion, design.clone())?;
    if full.family() != family {
        return Err(ModelError::InvalidArgument(
            "response coding does not match the model family".into(),
        ));
    }
    let run = evolve(&full, &full.layout().search_bounds(opts)?, de)?;
    let mut model = full.layout().decode(&run.best)?;
    let mut evaluations = run.evaluations;
    if criterion == Criterion::NegAuc {
        let (calibrated, evals) = calibrate_scale(&model, design, de, opts)?;
        model = calibrated;
        evaluations += evals;
    }

    let null_design = design.intercept_only();
    let null = ModelObjective::new(Criterion::NegLogLikelihood, null_design.clone())?;
    let null_run = evolve(&null, &null.layout().search_bounds(opts)?, de)?;
    evaluations += null_run.evaluations;
    let null_model = null.layout().decode(&null_run.best)?;
    let null_ll = null_model.log_likelihood(&null_design)?;

    let mut full_ll = model.log_likelihood(design)?;
    // The null optimum is a point of the full model; never report a worse one.
    if full_ll < null_ll {
        model = embed_null(&null_model, design.k());
        full_ll = null_ll;
    }

    let df = u32::try_from(design.k())
        .map_err(|_| ModelError::InvalidArgument("too many regressors".into()))?;
    let (lr_statistic, lr_p_value) = if df == 0 {
        (0.0, 1.0)
    } else {
        let t = lr_test(full_ll, null_ll, df)?;
        (t.statistic, t.p_value)
    };

    let auc = match &design.outcome {
        // Scores are linear predictors: same ranking as the fitted probabilities,
        // without ties from saturation at 1.0.
        Outcome::Binary(y) => Some(auc(&model.scores(design), y)?),
        Outcome::Ordered { .. } => None,
    };

    let (coefficients, cutpoints) = match &model {
        FittedModel::Binary { beta } => (beta.clone(), None),
        FittedModel::Ordered { slopes, cutpoints } => (slopes.clone(), Some(cutpoints.clone())),
    };

    Ok(FitResult {
        spec: spec.clone(),
        family,
        criterion,
        coefficients,
        cutpoints,
        log_likelihood: full_ll,
        null_log_likelihood: null_ll,
        lr_statistic,
        lr_p_value,
        df,
        percent_correct: percent_correct(&model, design)?,
        auc,
        n: design.n(),
        dropped: design.dropped,
        de: DeSummary {
            seed: de.seed,
            strategy: de.strategy,
            np: de.np,
            f: de.f,
            cr: de.cr,
            max_generations: de.stop.max_generations,
            generations: run.generations,
            null_generations: null_run.generations,
            evaluations,
            stop_reason: run.stop_reason,
        },
    })
}

fn embed_null(null_model: &FittedModel, k: usize) -> FittedModel {
    match null_model {
        FittedModel::Binary { beta } => {
            let mut b = vec![0.0; k + 1];
            b[0] = beta[0];
            FittedModel::Binary { beta: b }
        }
        FittedModel::Ordered { cutpoints, .. } => FittedModel::Ordered {
            slopes: vec![0.0; k],
            cutpoints: cutpoints.clone(),
        },
    }
}

/// Likelihood-optimal intercept `a` and non-negative scale `c` for
/// `eta = a + c * (x'u)`, with `u` the slope direction scaled to unit max-norm.
fn calibrate_scale(
    model: &FittedModel,
    design: &Design,
    de: &DEConfig,
    opts: &FitOptions,
) -> Result<(FittedModel, usize)> {
    let FittedModel::Binary { beta } = model else {
        return Err(ModelError::Unsupported(
            "AUC criterion needs a binary response".into(),
        ));
    };
    let Outcome::Binary(y) = &design.outcome else {
        return Err(ModelError::Unsupported(
            "AUC criterion needs a binary response".into(),
        ));
    };
    let max_abs = beta[1..].iter().fold(0.0f64, |m, b| m.max(b.abs()));
    let direction: Vec<f64> = if max_abs > 0.0 {
        beta[1..].iter().map(|b| b / max_abs).collect()
    } else {
        vec![0.0; beta.len() - 1]
    };
    let score: Vec<f64> = design
        .x
        .rows()
        .map(|r| super::dot(&direction, &r[1..]))
        .collect();
    let objective = |p: &[f64]| -> f64 {
        score
            .iter()
            .zip(y)
            .map(|(s, &yi)| {
                let eta = p[0] + p[1] * s;
                -super::log_logistic_cdf(if yi { eta } else { -eta })
            })
            .sum()
    };
    let b = opts.coefficient_bound;
    let bounds = SearchBounds::new(vec![-b, 0.0], vec![b, b])?;
    let run = evolve(&objective, &bounds, de)?;
    let (a, c) = (run.best[0], run.best[1]);
    let mut calibrated = Vec::with_capacity(beta.len());
    calibrated.push(a);
    calibrated.extend(direction.iter().map(|u| c * u));
    Ok((FittedModel::Binary { beta: calibrated }, run.evaluations))
}
