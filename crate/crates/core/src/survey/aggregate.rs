//! Threshold shares, median profiles and per-respondent workload.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{Dataset, Question, Rating, RespondentGroup, Result, Sex, SurveyError};

/// Cumulative cutoffs reported for every question.
pub const THRESHOLDS: [f64; 4] = [1.5, 2.0, 2.5, 3.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdEntry {
    pub threshold: f64,
    /// Applicable answers at or above the threshold.
    pub count: usize,
    /// Applicable answers.
    pub n: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub question: Question,
    pub group: Option<RespondentGroup>,
    pub n: usize,
    pub entries: Vec<ThresholdEntry>,
}

fn rated_question(q: Question) -> Result<usize> {
    q.rating_index()
        .ok_or_else(|| SurveyError::InvalidQuestion(format!("{q} is not a rated question")))
}

fn applicable(ds: &Dataset, q: usize, group: Option<RespondentGroup>) -> Vec<Rating> {
    ds.filtered(group).filter_map(|r| r.ratings[q]).collect()
}

/// Share of applicable answers to `question` rated at or above `threshold`.
pub fn threshold_breakdown(
    ds: &Dataset,
    question: Question,
    group: Option<RespondentGroup>,
    threshold: f64,
) -> Result<ThresholdEntry> {
    let qi = rated_question(question)?;
    if !THRESHOLDS.contains(&threshold) {
        return Err(SurveyError::InvalidThreshold(threshold));
    }
    let ratings = applicable(ds, qi, group);
    if ratings.is_empty() {
        return Err(SurveyError::EmptySlice(format!(
            "no applicable answers to {question}"
        )));
    }
    let count = ratings.iter().filter(|r| r.value() >= threshold).count();
    Ok(ThresholdEntry {
        threshold,
        count,
        n: ratings.len(),
        fraction: count as f64 / ratings.len() as f64,
    })
}

/// [`threshold_breakdown`] at every cutoff in [`THRESHOLDS`].
pub fn threshold_report(
    ds: &Dataset,
    question: Question,
    group: Option<RespondentGroup>,
) -> Result<ThresholdReport> {
    let entries = THRESHOLDS
        .iter()
        .map(|&t| threshold_breakdown(ds, question, group, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(ThresholdReport {
        question,
        group,
        n: entries[0].n,
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuestionMedian {
    pub question: Question,
    /// Absent when the question has no applicable answers.
    pub median: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedianProfile {
    pub group: Option<RespondentGroup>,
    pub sex: Option<Sex>,
    pub medians: Vec<QuestionMedian>,
}

fn median(mut steps: Vec<u8>) -> Option<f64> {
    if steps.is_empty() {
        return None;
    }
    steps.sort_unstable();
    let m = steps.len() / 2;
    let twice = if steps.len() % 2 == 1 {
        2 * u16::from(steps[m])
    } else {
        u16::from(steps[m - 1]) + u16::from(steps[m])
    };
    // `twice` counts quarter steps.
    Some(f64::from(twice) / 4.0)
}

/// Median rating of each of Q1–Q8 for a group and, optionally, one subject sex.
pub fn median_profile(
    ds: &Dataset,
    group: Option<RespondentGroup>,
    sex: Option<Sex>,
) -> MedianProfile {
    let records: Vec<_> = ds
        .filtered(group)
        .filter(|r| sex.is_none_or(|s| r.sex == s))
        .collect();
    let medians = Question::RATED
        .iter()
        .enumerate()
        .map(|(qi, &question)| {
            let steps: Vec<u8> = records
                .iter()
                .filter_map(|r| r.ratings[qi].map(Rating::half_steps))
                .collect();
            QuestionMedian {
                question,
                n: steps.len(),
                median: median(steps),
            }
        })
        .collect();
    MedianProfile {
        group,
        sex,
        medians,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RespondentStats {
    pub respondents: usize,
    pub assessments: usize,
    pub mean: f64,
    pub min: usize,
    pub max: usize,
}

/// How many subjects each respondent assessed: mean, min and max.
pub fn respondent_stats(ds: &Dataset, group: Option<RespondentGroup>) -> Result<RespondentStats> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in ds.filtered(group) {
        *counts.entry(r.respondent_id.as_str()).or_default() += 1;
    }
    if counts.is_empty() {
        return Err(SurveyError::EmptySlice(
            "no respondents in selection".into(),
        ));
    }
    let assessments: usize = counts.values().sum();
    Ok(RespondentStats {
        respondents: counts.len(),
        assessments,
        mean: assessments as f64 / counts.len() as f64,
        min: *counts.values().min().expect("non-empty"),
        max: *counts.values().max().expect("non-empty"),
    })
}
