//! Fit diagnostics: AUC, likelihood-ratio test, percent correctly predicted.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use super::{Design, FittedModel, ModelError, Result};

/// Slack allowed when the full model's log-likelihood falls below the null's.
pub const LR_TOLERANCE: f64 = 1e-9;

/// Area under the ROC curve as the Mann–Whitney statistic: the fraction of
/// (positive, negative) pairs where the positive scores higher, ties counting ½.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(ModelError::InvalidArgument(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(ModelError::InvalidArgument("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(ModelError::UndefinedAuc(
            "need at least one positive and one negative label".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Twice the Mann–Whitney U, so tied pairs stay integral.
    let mut twice_u = 0u64;
    let mut neg_below = 0u64;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let pos = order[start..end].iter().filter(|&&i| labels[i]).count() as u64;
        let neg = (end - start) as u64 - pos;
        twice_u += 2 * pos * neg_below + pos * neg;
        neg_below += neg;
        start = end;
    }
    Ok(twice_u as f64 / (2 * n_pos * n_neg) as f64)
}

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
pub fn chi_square_sf(x: f64, df: u32) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(f64::from(df) / 2.0, x / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrTest {
    pub statistic: f64,
    pub p_value: f64,
    pub df: u32,
}

/// Likelihood-ratio test of the full model against its nested null.
pub fn lr_test(full_ll: f64, null_ll: f64, df: u32) -> Result<LrTest> {
    if df == 0 {
        return Err(ModelError::InvalidArgument(
            "likelihood-ratio test needs at least one degree of freedom".into(),
        ));
    }
    if !full_ll.is_finite() || !null_ll.is_finite() {
        return Err(ModelError::InvalidArgument(
            "non-finite log-likelihood".into(),
        ));
    }
    if full_ll < null_ll - LR_TOLERANCE {
        return Err(ModelError::InconsistentFit {
            full: full_ll,
            null: null_ll,
        });
    }
    let statistic = (2.0 * (full_ll - null_ll)).max(0.0);
    Ok(LrTest {
        statistic,
        p_value: chi_square_sf(statistic, df),
        df,
    })
}

/// Percentage of observations whose predicted category matches the observed one.
pub fn percent_correct(model: &FittedModel, design: &Design) -> Result<f64> {
    let n = design.n();
    if n == 0 {
        return Err(ModelError::EmptySlice("no observations to predict".into()));
    }
    if design.outcome.len() != n {
        return Err(ModelError::InvalidArgument(
            "response length differs from design".into(),
        ));
    }
    let hits = design
        .x
        .rows()
        .enumerate()
        .filter(|(i, row)| model.predict(row) == design.outcome.category(*i))
        .count();
    Ok(100.0 * hits as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{DesignMatrix, Outcome};

    #[test]
    fn auc_examples() {
        assert_eq!(
            auc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap(),
            1.0
        );
        assert_eq!(auc(&[0.3; 4], &[false, true, false, true]).unwrap(), 0.5);
        assert_eq!(
            auc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap(),
            0.75
        );
        assert!(matches!(
            auc(&[0.1, 0.2], &[true, true]),
            Err(ModelError::UndefinedAuc(_))
        ));
    }

    #[test]
    fn lr_examples() {
        let t = lr_test(-10.0, -10.0, 1).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.p_value, 1.0);
        let t = lr_test(-10.0 + 3.841 / 2.0, -10.0, 1).unwrap();
        assert!((t.p_value - 0.05).abs() < 1e-4);
        assert!(matches!(
            lr_test(-1.0, -1.0, 0),
            Err(ModelError::InvalidArgument(_))
        ));
        assert!(matches!(
            lr_test(-2.0, -1.0, 2),
            Err(ModelError::InconsistentFit { .. })
        ));
        assert!(lr_test(-1.0 - 1e-10, -1.0, 2).is_ok());
    }

    #[test]
    fn chi_square_tail_reference_points() {
        // exp(-x/2) for two degrees of freedom
        for x in [0.5, 2.0, 7.3] {
            assert!((chi_square_sf(x, 2) - (-x / 2.0f64).exp()).abs() < 1e-14);
        }
    }

    fn intercept_design(y: Vec<bool>) -> Design {
        let n = y.len();
        Design {
            x: DesignMatrix::new(n, 1, vec![1.0; n]).unwrap(),
            outcome: Outcome::Binary(y),
            dropped: 0,
        }
    }

    #[test]
    fn majority_class_prediction() {
        let d = intercept_design(vec![true, false, false, false]);
        let model = FittedModel::Binary {
            beta: vec![(0.25f64 / 0.75).ln()],
        };
        assert_eq!(percent_correct(&model, &d).unwrap(), 75.0);
    }

    #[test]
    fn single_miss_and_empty() {
        let model = FittedModel::Binary { beta: vec![3.0] };
        assert_eq!(
            percent_correct(&model, &intercept_design(vec![false])).unwrap(),
            0.0
        );
        assert!(matches!(
            percent_correct(&model, &intercept_design(vec![])),
            Err(ModelError::EmptySlice(_))
        ));
    }

    #[test]
    fn perfect_separation_is_fully_correct() {
        let d = Design {
            x: DesignMatrix::from_rows(&[
                vec![1.0, -2.0],
                vec![1.0, -1.0],
                vec![1.0, 1.0],
                vec![1.0, 2.0],
            ])
            .unwrap(),
            outcome: Outcome::Binary(vec![false, false, true, true]),
            dropped: 0,
        };
        let model = FittedModel::Binary {
            beta: vec![0.0, 5.0],
        };
        assert_eq!(percent_correct(&model, &d).unwrap(), 100.0);
    }
}
