use proptest::prelude::*;

use peerde::de::{evolve, SearchBounds};
use peerde::models::{auc, binary_loglik, lr_test, ordered_loglik, Cutpoints, DesignMatrix};
use peerde::survey::{median_profile, threshold_report, AssessmentRecord};
use peerde::{
    DEConfig, Dataset, MutationStrategy, Question, Rating, RespondentGroup, Sex, StoppingRule,
};

fn strategy() -> impl Strategy<Value = MutationStrategy> {
    prop::sample::select(MutationStrategy::ALL.to_vec())
}

fn rating() -> impl Strategy<Value = Rating> {
    (0u8..=6).prop_map(|s| Rating::from_half_steps(s).unwrap())
}

fn dataset() -> impl Strategy<Value = Dataset> {
    prop::collection::vec(
        (
            prop::sample::select(vec![
                RespondentGroup::ElementaryChild,
                RespondentGroup::UniversityStudent,
                RespondentGroup::Parent,
            ]),
            prop::array::uniform8(prop::option::weighted(0.85, rating())),
            prop::sample::select(vec![Sex::Female, Sex::Male, Sex::Undeclared]),
            10u8..=22,
        ),
        1..60,
    )
    .prop_map(|rows| {
        let records = rows
            .into_iter()
            .enumerate()
            .map(|(i, (group, ratings, sex, age))| AssessmentRecord {
                respondent_id: format!("r{i}"),
                group,
                subject_id: format!("s{}", i % 7),
                subject_age: age,
                ratings,
                sex,
                own_child: false,
            })
            .collect();
        Dataset::new(records, "prop").unwrap()
    })
}

fn scored() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    prop::collection::vec((-20i32..20, any::<bool>()), 2..80)
        .prop_filter("both classes", |v| {
            v.iter().any(|p| p.1) && v.iter().any(|p| !p.1)
        })
        .prop_map(|v| v.into_iter().map(|(s, l)| (f64::from(s) / 4.0, l)).unzip())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn de_history_is_monotone_and_best_in_bounds(
        strategy in strategy(),
        seed in any::<u64>(),
        np in 6usize..24,
        dim in 1usize..5,
    ) {
        let bounds = SearchBounds::uniform(dim, -3.0, 2.0).unwrap();
        let cfg = DEConfig { np, strategy, stop: StoppingRule::generations(30), seed, ..DEConfig::default() };
        let f = |x: &[f64]| x.iter().map(|v| (v - 0.5).powi(2) + v.sin()).sum::<f64>();
        let r = evolve(&f, &bounds, &cfg).unwrap();
        prop_assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(bounds.contains(&r.best));
        prop_assert_eq!(r.history.len(), 31);
        prop_assert_eq!(r.evaluations, np * 31);
        prop_assert_eq!(*r.history.last().unwrap(), r.best_fitness);
    }

    #[test]
    fn auc_is_rank_invariant((scores, labels) in scored()) {
        let a = auc(&scores, &labels).unwrap();
        let shifted: Vec<f64> = scores.iter().map(|s| 3.0 * s + 1.0).collect();
        let exp: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
        prop_assert_eq!(a, auc(&shifted, &labels).unwrap());
        prop_assert_eq!(a, auc(&exp, &labels).unwrap());
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        prop_assert!((auc(&neg, &labels).unwrap() - (1.0 - a)).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn two_category_ordered_equals_binary(
        rows in prop::collection::vec(prop::collection::vec(-4.0f64..4.0, 2), 1..40),
        slopes in prop::collection::vec(-3.0f64..3.0, 2),
        tau in -5.0f64..5.0,
        seed in any::<u64>(),
    ) {
        let y: Vec<usize> = (0..rows.len()).map(|i| ((seed >> (i % 64)) & 1) as usize).collect();
        let x = DesignMatrix::from_rows(&rows).unwrap();
        let with_one: Vec<Vec<f64>> = rows.iter().map(|r| vec![1.0, r[0], r[1]]).collect();
        let x1 = DesignMatrix::from_rows(&with_one).unwrap();
        let beta = [-tau, slopes[0], slopes[1]];
        let yb: Vec<bool> = y.iter().map(|&c| c == 1).collect();
        let lo = ordered_loglik(&slopes, &Cutpoints::new(vec![tau]).unwrap(), &x, &y).unwrap();
        let lb = binary_loglik(&beta, &x1, &yb).unwrap();
        prop_assert!((lo - lb).abs() <= 1e-12 * lb.abs().max(1.0));
    }

    #[test]
    fn lr_statistic_is_a_valid_test(null in -500.0f64..-1.0, gain in 0.0f64..50.0, df in 1u32..10) {
        let t = lr_test(null + gain, null, df).unwrap();
        prop_assert!(t.statistic >= 0.0);
        prop_assert!((0.0..=1.0).contains(&t.p_value));
    }

    #[test]
    fn threshold_series_never_increase(ds in dataset()) {
        for q in Question::RATED {
            if let Ok(r) = threshold_report(&ds, q, None) {
                prop_assert!(r.entries.windows(2).all(|w| w[1].count <= w[0].count));
                prop_assert!(r.entries.iter().all(|e| e.n == r.n));
            }
        }
    }

    #[test]
    fn medians_lie_on_the_quarter_grid(ds in dataset()) {
        for m in median_profile(&ds, None, None).medians {
            if let Some(v) = m.median {
                prop_assert!((0.0..=3.0).contains(&v));
                prop_assert_eq!((v * 4.0).fract(), 0.0);
            }
        }
    }

    #[test]
    fn rating_text_round_trip(r in rating()) {
        prop_assert_eq!(r.to_string().parse::<Rating>().unwrap(), r);
        prop_assert_eq!(Rating::snap(r.value()), r);
    }

    #[test]
    fn snap_stays_on_grid(v in -10.0f64..10.0) {
        let r = Rating::snap(v);
        prop_assert!((0.0..=3.0).contains(&r.value()));
        if (0.0..=3.0).contains(&v) {
            prop_assert!((r.value() - v).abs() <= 0.25);
        }
    }
}
