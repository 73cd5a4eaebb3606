//! Benchmark functions and statistical fitting criteria exposed as DE objectives.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::de::{Objective, SearchBounds};
use crate::models::{
    auc, Cutpoints, Design, Family, FitOptions, FittedModel, ModelError, ModelSpec, Outcome,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    Sphere,
    Rosenbrock,
    Rastrigin,
}

impl FromStr for Benchmark {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "sphere" => Ok(Benchmark::Sphere),
            "rosenbrock" => Ok(Benchmark::Rosenbrock),
            "rastrigin" => Ok(Benchmark::Rastrigin),
            _ => Err(format!("unknown test function '{s}'")),
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Benchmark::Sphere => "sphere",
            Benchmark::Rosenbrock => "rosenbrock",
            Benchmark::Rastrigin => "rastrigin",
        })
    }
}

/// A closed-form benchmark in a fixed dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestFunction {
    pub kind: Benchmark,
    pub dimension: usize,
}

impl TestFunction {
    pub fn new(kind: Benchmark, dimension: usize) -> Result<Self, ModelError> {
        if dimension == 0 {
            return Err(ModelError::InvalidArgument(
                "dimension must be positive".into(),
            ));
        }
        Ok(Self { kind, dimension })
    }

    pub fn optimum_value(&self) -> f64 {
        0.0
    }

    pub fn optimum_point(&self) -> Vec<f64> {
        match self.kind {
            Benchmark::Rosenbrock => vec![1.0; self.dimension],
            Benchmark::Sphere | Benchmark::Rastrigin => vec![0.0; self.dimension],
        }
    }

    /// Conventional search box for the function.
    pub fn default_bounds(&self) -> SearchBounds {
        let half = match self.kind {
            Benchmark::Rosenbrock => 2.048,
            Benchmark::Sphere | Benchmark::Rastrigin => 5.12,
        };
        SearchBounds::uniform(self.dimension, -half, half).expect("dimension is positive")
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64, ModelError> {
        if x.len() != self.dimension {
            return Err(ModelError::InvalidArgument(format!(
                "{} expects {} components, got {}",
                self.kind,
                self.dimension,
                x.len()
            )));
        }
        Ok(self.value(x))
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self.kind {
            Benchmark::Sphere => x.iter().map(|v| v * v).sum(),
            Benchmark::Rosenbrock => x
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                .sum(),
            Benchmark::Rastrigin => {
                10.0 * x.len() as f64
                    + x.iter()
                        .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
                        .sum::<f64>()
            }
        }
    }
}

impl Objective for TestFunction {
    /// Wrong-length input evaluates to NaN, which the evolution loop reports as an error.
    fn evaluate(&self, x: &[f64]) -> f64 {
        TestFunction::evaluate(self, x).unwrap_or(f64::NAN)
    }
}

/// Which criterion a model fit minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[default]
    NegLogLikelihood,
    NegAuc,
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "loglik" | "likelihood" | "neg_log_likelihood" => Ok(Criterion::NegLogLikelihood),
            "auc" | "neg_auc" => Ok(Criterion::NegAuc),
            _ => Err(format!("unknown criterion '{s}'")),
        }
    }
}

/// How a flat DE vector maps onto model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamLayout {
    /// Intercept followed by slopes.
    Binary { coefficients: usize },
    /// Slopes, then the first cutpoint, then log-gaps between successive cutpoints.
    Ordered { slopes: usize, cutpoints: usize },
}

impl ParamLayout {
    pub fn dim(&self) -> usize {
        match *self {
            ParamLayout::Binary { coefficients } => coefficients,
            ParamLayout::Ordered { slopes, cutpoints } => slopes + cutpoints,
        }
    }

    pub fn decode(&self, params: &[f64]) -> Result<FittedModel, ModelError> {
        if params.len() != self.dim() {
            return Err(ModelError::InvalidArgument(format!(
                "{} parameters for a layout of {}",
                params.len(),
                self.dim()
            )));
        }
        Ok(match *self {
            ParamLayout::Binary { .. } => FittedModel::Binary {
                beta: params.to_vec(),
            },
            ParamLayout::Ordered { slopes, .. } => FittedModel::Ordered {
                slopes: params[..slopes].to_vec(),
                cutpoints: Cutpoints::from_log_gaps(params[slopes], &params[slopes + 1..])?,
            },
        })
    }

    pub fn search_bounds(&self, opts: &FitOptions) -> Result<SearchBounds, ModelError> {
        let b = opts.coefficient_bound;
        if !(b.is_finite() && b > 0.0) {
            return Err(ModelError::InvalidArgument(format!(
                "coefficient bound {b} must be positive"
            )));
        }
        let (mut lower, mut upper) = (vec![-b; self.dim()], vec![b; self.dim()]);
        if let ParamLayout::Ordered { slopes, .. } = *self {
            let (lo, hi) = opts.log_gap_range;
            for j in slopes + 1..self.dim() {
                lower[j] = lo;
                upper[j] = hi;
            }
        }
        Ok(SearchBounds::new(lower, upper)?)
    }
}

/// A model criterion over a fixed design, minimized by DE.
#[derive(Debug, Clone)]
pub struct ModelObjective {
    criterion: Criterion,
    layout: ParamLayout,
    design: Design,
}

impl ModelObjective {
    pub fn new(criterion: Criterion, design: Design) -> Result<Self, ModelError> {
        let k = design.k();
        let layout = match &design.outcome {
            Outcome::Binary(y) => {
                if criterion == Criterion::NegAuc && (y.iter().all(|&v| v) || y.iter().all(|&v| !v))
                {
                    return Err(ModelError::UndefinedAuc(
                        "all responses belong to one class".into(),
                    ));
                }
                ParamLayout::Binary {
                    coefficients: k + 1,
                }
            }
            Outcome::Ordered { levels, .. } => {
                if criterion == Criterion::NegAuc {
                    return Err(ModelError::Unsupported(
                        "AUC criterion needs a binary response".into(),
                    ));
                }
                if levels.len() < 2 {
                    return Err(ModelError::InvalidArgument(
                        "ordered response needs at least two categories".into(),
                    ));
                }
                ParamLayout::Ordered {
                    slopes: k,
                    cutpoints: levels.len() - 1,
                }
            }
        };
        if design.outcome.len() != design.n() {
            return Err(ModelError::InvalidArgument(
                "response length differs from design".into(),
            ));
        }
        Ok(Self {
            criterion,
            layout,
            design,
        })
    }

    pub fn layout(&self) -> ParamLayout {
        self.layout
    }

    pub fn family(&self) -> Family {
        match self.layout {
            ParamLayout::Binary { .. } => Family::BinaryLogit,
            ParamLayout::Ordered { .. } => Family::OrderedLogit,
        }
    }

    pub fn criterion(&self) -> Criterion {
        self.criterion
    }

    pub fn value(&self, params: &[f64]) -> Result<f64, ModelError> {
        let model = self.layout.decode(params)?;
        match self.criterion {
            Criterion::NegLogLikelihood => Ok(-model.log_likelihood(&self.design)?),
            Criterion::NegAuc => match &self.design.outcome {
                Outcome::Binary(y) => Ok(-auc(&model.scores(&self.design), y)?),
                Outcome::Ordered { .. } => Err(ModelError::Unsupported(
                    "AUC criterion needs a binary response".into(),
                )),
            },
        }
    }
}

impl Objective for ModelObjective {
    fn evaluate(&self, x: &[f64]) -> f64 {
        self.value(x).unwrap_or(f64::NAN)
    }
}

/// Wraps `spec`'s criterion over `design` as a DE objective after checking
/// that the two agree.
pub fn make_model_objective(
    criterion: Criterion,
    spec: &ModelSpec,
    design: &Design,
) -> Result<ModelObjective, ModelError> {
    if design.x.ncols() != spec.regressors.len() + 1 {
        return Err(ModelError::InvalidArgument(format!(
            "design has {} columns, specification needs {}",
            design.x.ncols(),
            spec.regressors.len() + 1
        )));
    }
    let objective = ModelObjective::new(criterion, design.clone())?;
    if objective.family() != spec.family() {
        return Err(ModelError::InvalidArgument(
            "response coding does not match the model family".into(),
        ));
    }
    Ok(objective)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{DesignMatrix, ModelId, Response};
    use crate::survey::Question;

    #[test]
    fn benchmark_optima() {
        let s = TestFunction::new(Benchmark::Sphere, 10).unwrap();
        assert_eq!(s.evaluate(&s.optimum_point()).unwrap(), 0.0);
        let r = TestFunction::new(Benchmark::Rosenbrock, 5).unwrap();
        assert_eq!(r.evaluate(&r.optimum_point()).unwrap(), 0.0);
        let g = TestFunction::new(Benchmark::Rastrigin, 4).unwrap();
        assert!(g.evaluate(&g.optimum_point()).unwrap().abs() < 1e-12);
        let s3 = TestFunction::new(Benchmark::Sphere, 3).unwrap();
        assert_eq!(s3.evaluate(&[1.0, 2.0, 2.0]).unwrap(), 9.0);
        assert!(s3.evaluate(&[1.0]).is_err());
        assert!(Objective::evaluate(&s3, &[1.0]).is_nan());
    }

    #[test]
    fn benchmarks_are_non_negative() {
        let pts = [[-3.0, 0.7, 1.9], [0.01, -0.5, 4.0], [2.0, 2.0, -2.0]];
        for kind in [
            Benchmark::Sphere,
            Benchmark::Rosenbrock,
            Benchmark::Rastrigin,
        ] {
            let f = TestFunction::new(kind, 3).unwrap();
            for p in &pts {
                assert!(f.evaluate(p).unwrap() >= 0.0);
            }
        }
    }

    fn spec_k1() -> ModelSpec {
        ModelSpec::new(
            ModelId::Custom,
            Response::Threshold {
                question: Question::Q8,
                threshold: 2.0,
            },
            vec![Question::Q3],
            None,
        )
        .unwrap()
    }

    fn design(y: Vec<bool>, xs: &[f64]) -> Design {
        let rows: Vec<Vec<f64>> = xs.iter().map(|&v| vec![1.0, v]).collect();
        Design {
            x: DesignMatrix::from_rows(&rows).unwrap(),
            outcome: Outcome::Binary(y),
            dropped: 0,
        }
    }

    #[test]
    fn neg_loglik_at_zero() {
        let d = design(
            vec![true, false, false, true, true],
            &[0.0, 1.0, 2.0, 3.0, 0.5],
        );
        let obj = make_model_objective(Criterion::NegLogLikelihood, &spec_k1(), &d).unwrap();
        assert!((obj.value(&[0.0, 0.0]).unwrap() - 5.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn neg_loglik_single_observation() {
        let d = Design {
            x: DesignMatrix::from_rows(&[vec![1.0]]).unwrap(),
            outcome: Outcome::Binary(vec![true]),
            dropped: 0,
        };
        let obj = ModelObjective::new(Criterion::NegLogLikelihood, d).unwrap();
        assert!((obj.value(&[0.5]).unwrap() - 0.474_076_984_180_106_7).abs() < 1e-14);
    }

    #[test]
    fn neg_auc_perfect_ranking() {
        let d = design(vec![false, false, true, true], &[0.0, 1.0, 2.0, 3.0]);
        let obj = make_model_objective(Criterion::NegAuc, &spec_k1(), &d).unwrap();
        assert_eq!(obj.value(&[0.0, 1.0]).unwrap(), -1.0);
        assert_eq!(obj.value(&[0.0, -1.0]).unwrap(), 0.0);
    }

    #[test]
    fn neg_auc_rejects_single_class() {
        let d = design(vec![true, true], &[0.0, 1.0]);
        assert!(matches!(
            make_model_objective(Criterion::NegAuc, &spec_k1(), &d),
            Err(ModelError::UndefinedAuc(_))
        ));
    }

    #[test]
    fn column_count_checked() {
        let d = Design {
            x: DesignMatrix::from_rows(&[vec![1.0]]).unwrap(),
            outcome: Outcome::Binary(vec![true]),
            dropped: 0,
        };
        assert!(make_model_objective(Criterion::NegLogLikelihood, &spec_k1(), &d).is_err());
    }

    #[test]
    fn ordered_layout_decodes_increasing_cutpoints() {
        let layout = ParamLayout::Ordered {
            slopes: 1,
            cutpoints: 3,
        };
        let m = layout.decode(&[0.5, -1.0, 0.0, 0.0]).unwrap();
        match m {
            FittedModel::Ordered { slopes, cutpoints } => {
                assert_eq!(slopes, vec![0.5]);
                assert_eq!(cutpoints.as_slice(), &[-1.0, 0.0, 1.0]);
            }
            _ => unreachable!(),
        }
        let b = layout.search_bounds(&FitOptions::default()).unwrap();
        assert_eq!(b.lower(), &[-10.0, -10.0, -6.0, -6.0]);
    }
}
