//! CSV layout for assessment records.
//!
//! Header (exact, in order):
//! `respondent_id,group,subject_id,age,q1,q1_na,q2,q3,q4,q5,q6,q7,q8,q9,own_child`.
//! Ratings are grid literals; an empty rating cell is not applicable, and for
//! Q1 that is stated by `q1_na = 1`.

use std::collections::HashSet;
use std::io::{Read, Write};

use serde::Serialize;

use super::{AssessmentRecord, Dataset, Rating, RespondentGroup, Result, Sex, SurveyError};

pub const HEADER: [&str; 15] = [
    "respondent_id",
    "group",
    "subject_id",
    "age",
    "q1",
    "q1_na",
    "q2",
    "q3",
    "q4",
    "q5",
    "q6",
    "q7",
    "q8",
    "q9",
    "own_child",
];

/// A row that failed validation, by 1-based line number in the input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestReport {
    pub dataset: Dataset,
    pub rejections: Vec<Rejection>,
}

fn parse_flag(column: &'static str, s: &str) -> Result<bool> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(SurveyError::InvalidFlag {
            column,
            value: other.to_string(),
        }),
    }
}

fn parse_rating(column: &str, s: &str) -> Result<Option<Rating>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<Rating>()
        .map(Some)
        .map_err(|_| SurveyError::InvalidRating(format!("in {column}: '{s}'")))
}

fn parse_row(row: &csv::StringRecord) -> Result<AssessmentRecord> {
    if row.len() != HEADER.len() {
        return Err(SurveyError::Malformed(format!(
            "expected {} fields, found {}",
            HEADER.len(),
            row.len()
        )));
    }
    let f = |i: usize| row.get(i).unwrap_or("");

    let group: RespondentGroup = f(1).parse()?;
    let age = f(3)
        .parse::<i64>()
        .ok()
        .and_then(|a| u8::try_from(a).ok())
        .ok_or_else(|| SurveyError::InvalidAge(format!("'{}'", f(3))))?;

    let q1_na = parse_flag("q1_na", f(5))?;
    let q1 = parse_rating("q1", f(4))?;
    let q1 = match (q1, q1_na) {
        (Some(_), true) => return Err(SurveyError::ConflictingNotApplicable),
        (None, false) => {
            return Err(SurveyError::InvalidRating(
                "in q1: empty but q1_na is 0".into(),
            ))
        }
        (r, _) => r,
    };
    let mut ratings = [None; 8];
    ratings[0] = q1;
    for (k, slot) in ratings.iter_mut().enumerate().skip(1) {
        *slot = parse_rating(HEADER[k + 5], f(k + 5))?;
    }
    let sex: Sex = f(13).parse()?;
    let own_child = parse_flag("own_child", f(14))?;

    let record = AssessmentRecord {
        respondent_id: f(0).to_string(),
        group,
        subject_id: f(2).to_string(),
        subject_age: age,
        ratings,
        sex,
        own_child,
    };
    record.validate()?;
    Ok(record)
}

/// Reads assessment records, keeping every valid row and reporting the rest.
///
/// Fails outright only for I/O errors or a missing or wrong header.
pub fn ingest<R: Read>(input: R, provenance: impl Into<String>) -> Result<IngestReport> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);

    let mut rows = reader.records();
    let header = match rows.next() {
        None => return Err(SurveyError::Header("input is empty".into())),
        Some(h) => h.map_err(|e| SurveyError::Io(e.to_string()))?,
    };
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(SurveyError::Header(format!(
            "expected '{}', found '{}'",
            HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut records = Vec::new();
    let mut rejections = Vec::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for row in rows {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                if let csv::ErrorKind::Io(_) = e.kind() {
                    return Err(SurveyError::Io(e.to_string()));
                }
                let line = e.position().map_or(0, |p| p.line());
                rejections.push(Rejection {
                    line,
                    reason: SurveyError::Malformed(e.to_string()).to_string(),
                });
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        match parse_row(&row) {
            Ok(rec) => {
                if seen.insert((rec.respondent_id.clone(), rec.subject_id.clone())) {
                    records.push(rec);
                } else {
                    rejections.push(Rejection {
                        line,
                        reason: SurveyError::DuplicateAssessment {
                            respondent: rec.respondent_id,
                            subject: rec.subject_id,
                        }
                        .to_string(),
                    });
                }
            }
            Err(e) => rejections.push(Rejection {
                line,
                reason: e.to_string(),
            }),
        }
    }

    Ok(IngestReport {
        dataset: Dataset::new(records, provenance)?,
        rejections,
    })
}

/// Writes `ds` in the layout [`ingest`] reads.
pub fn export_csv<W: Write>(ds: &Dataset, out: W) -> Result<()> {
    let io = |e: csv::Error| SurveyError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER).map_err(io)?;
    for r in ds.records() {
        let cell = |x: Option<Rating>| x.map_or_else(String::new, |v| v.to_string());
        let age = r.subject_age.to_string();
        let q1 = cell(r.ratings[0]);
        let q1_na = if r.ratings[0].is_none() { "1" } else { "0" };
        let rest: Vec<String> = r.ratings[1..].iter().map(|x| cell(*x)).collect();
        let mut fields: Vec<&str> = vec![
            &r.respondent_id,
            r.group.code(),
            &r.subject_id,
            &age,
            &q1,
            q1_na,
        ];
        fields.extend(rest.iter().map(String::as_str));
        fields.push(r.sex.code());
        fields.push(if r.own_child { "1" } else { "0" });
        w.write_record(&fields).map_err(io)?;
    }
    w.flush().map_err(|e| SurveyError::Io(e.to_string()))
}
