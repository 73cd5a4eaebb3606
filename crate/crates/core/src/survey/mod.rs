//! Peer-assessment questionnaire: records, ingestion, aggregation, design matrices.
//!
//! Each record is one respondent's assessment of one subject on questions
//! Q1–Q8 (ratings on the half-step grid 0, 0.5, ..., 3) plus the subject's
//! sex (Q9). Any rating may be marked not applicable; Q1 carries an explicit
//! N/A flag in the CSV layout.

mod aggregate;
mod design;
mod io;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use aggregate::{
    median_profile, respondent_stats, threshold_breakdown, threshold_report, MedianProfile,
    QuestionMedian, RespondentStats, ThresholdEntry, ThresholdReport, THRESHOLDS,
};
pub use design::design_matrix;
pub use io::{export_csv, ingest, IngestReport, Rejection, HEADER};

pub const MIN_AGE: u8 = 10;
pub const MAX_AGE: u8 = 22;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurveyError {
    #[error("invalid rating {0}")]
    InvalidRating(String),
    #[error("invalid sex '{0}'")]
    InvalidSex(String),
    #[error("invalid age {0}")]
    InvalidAge(String),
    #[error("invalid group '{0}'")]
    InvalidGroup(String),
    #[error("invalid flag {column}: '{value}'")]
    InvalidFlag { column: &'static str, value: String },
    #[error("invalid own_child: only parents assess their own children")]
    OwnChildNotParent,
    #[error("invalid q1: q1_na is set but a rating is present")]
    ConflictingNotApplicable,
    #[error("missing identifier in {0}")]
    MissingId(&'static str),
    #[error("duplicate assessment of subject '{subject}' by respondent '{respondent}'")]
    DuplicateAssessment { respondent: String, subject: String },
    #[error("malformed row: {0}")]
    Malformed(String),
    #[error("bad header: {0}")]
    Header(String),
    #[error("invalid question {0}")]
    InvalidQuestion(String),
    #[error("invalid threshold {0}")]
    InvalidThreshold(f64),
    #[error("empty selection: {0}")]
    EmptySlice(String),
    #[error("empty design: {0}")]
    EmptyDesign(String),
    #[error("degenerate response: {0}")]
    DegenerateResponse(String),
    #[error("I/O error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, SurveyError>;

/// A rating on the half-step grid, stored as a count of half steps (0..=6).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rating(u8);

impl Rating {
    pub const MAX_STEPS: u8 = 6;
    pub const MIN: Rating = Rating(0);
    pub const MAX: Rating = Rating(Self::MAX_STEPS);

    pub fn from_half_steps(steps: u8) -> Result<Self> {
        if steps > Self::MAX_STEPS {
            return Err(SurveyError::InvalidRating(format!("{} half steps", steps)));
        }
        Ok(Self(steps))
    }

    /// Accepts only exact grid values.
    pub fn from_value(v: f64) -> Result<Self> {
        let doubled = v * 2.0;
        if !v.is_finite() || doubled.fract() != 0.0 || !(0.0..=6.0).contains(&doubled) {
            return Err(SurveyError::InvalidRating(v.to_string()));
        }
        Ok(Self(doubled as u8))
    }

    /// Nearest grid point to `v`, clamped into [0, 3]. Halves round away from zero.
    pub fn snap(v: f64) -> Self {
        let steps = (v * 2.0).round().clamp(0.0, f64::from(Self::MAX_STEPS));
        Self(steps as u8)
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub fn half_steps(self) -> u8 {
        self.0
    }

    pub fn step_down(self) -> Self {
        Self(self.0.saturating_sub(1))
    }

    pub fn step_up(self) -> Self {
        Self((self.0 + 1).min(Self::MAX_STEPS))
    }

    /// Integer level 0–3 with half steps rounded down.
    pub fn level(self) -> u8 {
        self.0 / 2
    }
}

impl fmt::Display for Rating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1}", self.value())
    }
}

impl FromStr for Rating {
    type Err = SurveyError;

    fn from_str(s: &str) -> Result<Self> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| SurveyError::InvalidRating(format!("'{s}'")))?;
        Self::from_value(v).map_err(|_| SurveyError::InvalidRating(format!("'{s}'")))
    }
}

impl Serialize for Rating {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Rating {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Rating::from_value(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RespondentGroup {
    ElementaryChild,
    UniversityStudent,
    Parent,
}

impl RespondentGroup {
    pub const ALL: [RespondentGroup; 3] = [
        RespondentGroup::ElementaryChild,
        RespondentGroup::UniversityStudent,
        RespondentGroup::Parent,
    ];

    /// Code used in CSV files.
    pub fn code(self) -> &'static str {
        match self {
            RespondentGroup::ElementaryChild => "child",
            RespondentGroup::UniversityStudent => "student",
            RespondentGroup::Parent => "parent",
        }
    }
}

impl FromStr for RespondentGroup {
    type Err = SurveyError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "child" => Ok(RespondentGroup::ElementaryChild),
            "student" => Ok(RespondentGroup::UniversityStudent),
            "parent" => Ok(RespondentGroup::Parent),
            other => Err(SurveyError::InvalidGroup(other.to_string())),
        }
    }
}

impl fmt::Display for RespondentGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Subject's sex as reported on Q9.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sex {
    #[serde(rename = "F")]
    Female,
    #[serde(rename = "M")]
    Male,
    #[serde(rename = "U")]
    Undeclared,
}

impl Sex {
    pub fn code(self) -> &'static str {
        match self {
            Sex::Female => "F",
            Sex::Male => "M",
            Sex::Undeclared => "U",
        }
    }
}

impl FromStr for Sex {
    type Err = SurveyError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "F" => Ok(Sex::Female),
            "M" => Ok(Sex::Male),
            "U" => Ok(Sex::Undeclared),
            other => Err(SurveyError::InvalidSex(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Question {
    Q1,
    Q2,
    Q3,
    Q4,
    Q5,
    Q6,
    Q7,
    Q8,
    Q9,
}

impl Question {
    /// The eight rated questions.
    pub const RATED: [Question; 8] = [
        Question::Q1,
        Question::Q2,
        Question::Q3,
        Question::Q4,
        Question::Q5,
        Question::Q6,
        Question::Q7,
        Question::Q8,
    ];

    /// Zero-based index into a record's ratings; `None` for Q9.
    pub fn rating_index(self) -> Option<usize> {
        match self {
            Question::Q9 => None,
            q => Some(q as usize),
        }
    }
}

impl fmt::Display for Question {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}", *self as usize + 1)
    }
}

impl FromStr for Question {
    type Err = SurveyError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let digits = t.strip_prefix(['Q', 'q']).unwrap_or(t);
        match digits.parse::<usize>() {
            Ok(n @ 1..=8) => Ok(Question::RATED[n - 1]),
            Ok(9) => Ok(Question::Q9),
            _ => Err(SurveyError::InvalidQuestion(s.to_string())),
        }
    }
}

/// One respondent's assessment of one subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentRecord {
    pub respondent_id: String,
    pub group: RespondentGroup,
    pub subject_id: String,
    pub subject_age: u8,
    /// Q1–Q8; `None` is a not-applicable answer.
    pub ratings: [Option<Rating>; 8],
    pub sex: Sex,
    pub own_child: bool,
}

impl AssessmentRecord {
    pub fn rating(&self, q: Question) -> Option<Rating> {
        q.rating_index().and_then(|i| self.ratings[i])
    }

    /// Numeric value of a question as a regressor: the rating, or the female
    /// indicator for Q9. `None` when not applicable.
    pub fn value(&self, q: Question) -> Option<f64> {
        match q {
            Question::Q9 => Some(if self.sex == Sex::Female { 1.0 } else { 0.0 }),
            _ => self.rating(q).map(Rating::value),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.respondent_id.trim().is_empty() {
            return Err(SurveyError::MissingId("respondent_id"));
        }
        if self.subject_id.trim().is_empty() {
            return Err(SurveyError::MissingId("subject_id"));
        }
        if !(MIN_AGE..=MAX_AGE).contains(&self.subject_age) {
            return Err(SurveyError::InvalidAge(self.subject_age.to_string()));
        }
        if self.own_child && self.group != RespondentGroup::Parent {
            return Err(SurveyError::OwnChildNotParent);
        }
        Ok(())
    }
}

/// Validated, immutable collection of assessments.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Dataset {
    records: Vec<AssessmentRecord>,
    pub provenance: String,
}

impl Dataset {
    pub fn new(records: Vec<AssessmentRecord>, provenance: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            r.validate()?;
            if !seen.insert((r.respondent_id.as_str(), r.subject_id.as_str())) {
                return Err(SurveyError::DuplicateAssessment {
                    respondent: r.respondent_id.clone(),
                    subject: r.subject_id.clone(),
                });
            }
        }
        Ok(Self {
            records,
            provenance: provenance.into(),
        })
    }

    pub fn records(&self) -> &[AssessmentRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records from `group`, or all records when `group` is `None`.
    pub fn filtered(
        &self,
        group: Option<RespondentGroup>,
    ) -> impl Iterator<Item = &AssessmentRecord> {
        self.records
            .iter()
            .filter(move |r| group.is_none_or(|g| r.group == g))
    }
}
