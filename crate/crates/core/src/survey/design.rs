use super::{Dataset, Result, Sex, SurveyError};
use crate::models::{Design, DesignMatrix, ModelSpec, Outcome, Response};

/// Regression design for `spec`: a leading column of ones, then one column
/// per regressor in order. Records missing any used answer are dropped.
///
/// Ordered responses are coded by integer level (half steps rounded down) and
/// renumbered over the levels actually observed.
pub fn design_matrix(ds: &Dataset, spec: &ModelSpec) -> Result<Design> {
    let k = spec.regressors.len();
    let mut data = Vec::new();
    let mut binary = Vec::new();
    let mut levels_seen = Vec::new();
    let mut filtered = 0usize;

    for r in ds.filtered(spec.group) {
        filtered += 1;
        let response = match spec.response {
            Response::Threshold {
                question,
                threshold,
            } => r.rating(question).map(|v| (v.value() >= threshold, 0)),
            Response::Ordered { question } => r.rating(question).map(|v| (false, v.level())),
            Response::Female => Some((r.sex == Sex::Female, 0)),
        };
        let Some((flag, level)) = response else {
            continue;
        };
        let Some(xs) = spec
            .regressors
            .iter()
            .map(|&q| r.value(q))
            .collect::<Option<Vec<f64>>>()
        else {
            continue;
        };
        data.push(1.0);
        data.extend(xs);
        binary.push(flag);
        levels_seen.push(level);
    }

    let n = binary.len();
    let dropped = filtered - n;
    if n == 0 {
        return Err(SurveyError::EmptyDesign(format!(
            "no complete records for {} ({filtered} in group, all dropped)",
            spec.id
        )));
    }

    let outcome = match spec.response {
        Response::Ordered { .. } => {
            let mut levels = levels_seen.clone();
            levels.sort_unstable();
            levels.dedup();
            match levels.len() {
                1 => {
                    return Err(SurveyError::DegenerateResponse(format!(
                        "every response is level {}",
                        levels[0]
                    )))
                }
                2 => {
                    return Err(SurveyError::DegenerateResponse(
                        "ordered response has only two observed levels; use a binary coding".into(),
                    ))
                }
                _ => {}
            }
            let categories = levels_seen
                .iter()
                .map(|l| levels.binary_search(l).expect("level was collected"))
                .collect();
            Outcome::Ordered { categories, levels }
        }
        _ => {
            if binary.iter().all(|&b| b) || binary.iter().all(|&b| !b) {
                return Err(SurveyError::DegenerateResponse(format!(
                    "every response is {}",
                    u8::from(binary[0])
                )));
            }
            Outcome::Binary(binary)
        }
    };

    Ok(Design {
        x: DesignMatrix::new(n, k + 1, data).expect("row width is k + 1"),
        outcome,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelId;
    use crate::survey::testutil::record;
    use crate::survey::{AssessmentRecord, Question, Rating};

    fn spec(response: Response, regressors: Vec<Question>) -> ModelSpec {
        ModelSpec::new(ModelId::Custom, response, regressors, None).unwrap()
    }

    fn q8_binary() -> Response {
        Response::Threshold {
            question: Question::Q8,
            threshold: 2.0,
        }
    }

    fn set(r: &mut AssessmentRecord, q: Question, v: f64) {
        r.ratings[q.rating_index().unwrap()] = Some(Rating::from_value(v).unwrap());
    }

    #[test]
    fn single_row_layout() {
        let mut r = record("a", "s", 1.0);
        set(&mut r, Question::Q2, 2.0);
        set(&mut r, Question::Q3, 0.5);
        let mut other = record("b", "s", 3.0);
        set(&mut other, Question::Q2, 2.0);
        set(&mut other, Question::Q3, 0.5);
        let ds = Dataset::new(vec![r, other], "t").unwrap();
        let d = design_matrix(&ds, &spec(q8_binary(), vec![Question::Q2, Question::Q3])).unwrap();
        assert_eq!(d.x.row(0), &[1.0, 2.0, 0.5]);
        assert_eq!(d.outcome, Outcome::Binary(vec![false, true]));
    }

    #[test]
    fn threshold_coding() {
        let ds = Dataset::new(vec![record("a", "s", 1.5), record("b", "s", 3.0)], "t").unwrap();
        let d = design_matrix(&ds, &spec(q8_binary(), vec![])).unwrap();
        assert_eq!(d.outcome, Outcome::Binary(vec![false, true]));
        assert_eq!(d.x.ncols(), 1);
    }

    #[test]
    fn listwise_deletion_can_empty_the_design() {
        let recs: Vec<_> = (0..3)
            .map(|i| {
                let mut r = record(&format!("r{i}"), "s", f64::from(i));
                r.ratings[2] = None;
                r
            })
            .collect();
        let ds = Dataset::new(recs, "t").unwrap();
        let err = design_matrix(&ds, &spec(q8_binary(), vec![Question::Q3])).unwrap_err();
        assert!(matches!(err, SurveyError::EmptyDesign(_)));
    }

    #[test]
    fn dropped_rows_are_counted() {
        let mut recs: Vec<_> = (0..4)
            .map(|i| record(&format!("r{i}"), "s", f64::from(i % 4)))
            .collect();
        recs[1].ratings[2] = None;
        let ds = Dataset::new(recs, "t").unwrap();
        let d = design_matrix(&ds, &spec(q8_binary(), vec![Question::Q3])).unwrap();
        assert_eq!(d.n() + d.dropped, 4);
        assert_eq!(d.dropped, 1);
    }

    #[test]
    fn constant_response_is_degenerate() {
        let ds = Dataset::new(vec![record("a", "s", 3.0), record("b", "s", 2.5)], "t").unwrap();
        assert!(matches!(
            design_matrix(&ds, &spec(q8_binary(), vec![])),
            Err(SurveyError::DegenerateResponse(_))
        ));
    }

    #[test]
    fn ordered_levels_are_renumbered() {
        let values = [0.5, 1.5, 3.0, 3.0, 1.0];
        let recs: Vec<_> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| record(&format!("r{i}"), "s", v))
            .collect();
        let ds = Dataset::new(recs, "t").unwrap();
        let d = design_matrix(
            &ds,
            &spec(
                Response::Ordered {
                    question: Question::Q6,
                },
                vec![Question::Q9],
            ),
        )
        .unwrap();
        assert_eq!(
            d.outcome,
            Outcome::Ordered {
                categories: vec![0, 1, 2, 2, 1],
                levels: vec![0, 1, 3]
            }
        );
        assert_eq!(d.x.row(0), &[1.0, 0.0]);
    }
}
