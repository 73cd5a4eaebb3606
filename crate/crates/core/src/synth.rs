//! Synthetic assessment studies with known ground truth.
//!
//! Every subject has a true HIU rating and receives one self-report, one
//! report from a parent and several from peers (other subjects). Self-reports
//! are shifted down with some probability, parents shift down or up, and peers
//! see the truth through Gaussian noise snapped to the rating grid. Comparing
//! each estimator with the truth shows how much the biased reporters lose.

use std::collections::BTreeMap;
use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::survey::{
    AssessmentRecord, Dataset, Question, Rating, RespondentGroup, Sex, SurveyError, MAX_AGE,
    MIN_AGE,
};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("invalid bias: {0}")]
    InvalidBias(String),
    #[error("incomplete study: {0}")]
    IncompleteStudy(String),
    #[error(transparent)]
    Survey(#[from] SurveyError),
    #[error("I/O error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, SynthError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationProfile {
    pub n_subjects: usize,
    /// Probability of each grid value 0, 0.5, ..., 3 as a subject's true rating.
    pub truth_weights: [f64; 7],
    /// Probabilities of F, M, U.
    pub sex_mix: [f64; 3],
    /// Inclusive range of peer reports per subject.
    pub peers_per_subject: (usize, usize),
    /// Spread of Q1–Q7 around each reporter's Q8 rating.
    pub item_noise_sd: f64,
    pub age_range: (u8, u8),
}

impl Default for PopulationProfile {
    fn default() -> Self {
        Self {
            n_subjects: 300,
            truth_weights: [1.0 / 7.0; 7],
            sex_mix: [0.49, 0.49, 0.02],
            peers_per_subject: (5, 5),
            item_noise_sd: 0.5,
            age_range: (MIN_AGE, MAX_AGE),
        }
    }
}

fn check_weights(name: &str, w: &[f64]) -> Result<()> {
    if w.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(SynthError::InvalidProfile(format!(
            "{name} has a negative or non-finite weight"
        )));
    }
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(SynthError::InvalidProfile(format!(
            "{name} sums to {total}, not 1"
        )));
    }
    Ok(())
}

impl PopulationProfile {
    pub fn validate(&self) -> Result<()> {
        check_weights("truth_weights", &self.truth_weights)?;
        check_weights("sex_mix", &self.sex_mix)?;
        let (lo, hi) = self.peers_per_subject;
        if lo < 1 || lo > hi {
            return Err(SynthError::InvalidProfile(format!(
                "peers per subject range [{lo}, {hi}] must satisfy 1 <= min <= max"
            )));
        }
        if self.n_subjects <= hi {
            return Err(SynthError::InvalidProfile(format!(
                "{} subjects cannot supply {hi} distinct peers each",
                self.n_subjects
            )));
        }
        if !(self.item_noise_sd.is_finite() && self.item_noise_sd >= 0.0) {
            return Err(SynthError::InvalidProfile(
                "item noise sd must be >= 0".into(),
            ));
        }
        let (a, b) = self.age_range;
        if a > b || a < MIN_AGE || b > MAX_AGE {
            return Err(SynthError::InvalidProfile(format!("age range [{a}, {b}]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReporterBias {
    pub self_underreport_prob: f64,
    pub parent_under_prob: f64,
    pub parent_over_prob: f64,
    /// In rating units.
    pub peer_noise_sd: f64,
    /// Size of a biased shift, in half steps.
    pub shift_steps: u8,
}

impl Default for ReporterBias {
    fn default() -> Self {
        Self {
            self_underreport_prob: 0.365,
            parent_under_prob: 0.357,
            parent_over_prob: 0.348,
            peer_noise_sd: 0.5,
            shift_steps: 1,
        }
    }
}

impl ReporterBias {
    /// Unbiased, noiseless reporters.
    pub fn none() -> Self {
        Self {
            self_underreport_prob: 0.0,
            parent_under_prob: 0.0,
            parent_over_prob: 0.0,
            peer_noise_sd: 0.0,
            shift_steps: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("self_underreport_prob", self.self_underreport_prob),
            ("parent_under_prob", self.parent_under_prob),
            ("parent_over_prob", self.parent_over_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SynthError::InvalidBias(format!(
                    "{name} = {p} outside [0, 1]"
                )));
            }
        }
        if self.parent_under_prob + self.parent_over_prob > 1.0 {
            return Err(SynthError::InvalidBias(
                "parental under- and over-report probabilities exceed 1".into(),
            ));
        }
        if !(self.peer_noise_sd.is_finite() && self.peer_noise_sd >= 0.0) {
            return Err(SynthError::InvalidBias("peer noise sd must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntheticStudy {
    pub dataset: Dataset,
    pub ground_truth: BTreeMap<String, Rating>,
    pub seed: u64,
}

fn shift(r: Rating, steps: u8, up: bool) -> Rating {
    (0..steps).fold(r, |acc, _| if up { acc.step_up() } else { acc.step_down() })
}

fn gaussian(sd: f64) -> Option<Normal<f64>> {
    (sd > 0.0).then(|| Normal::new(0.0, sd).expect("sd checked positive"))
}

fn jitter<R: Rng>(v: Rating, noise: Option<&Normal<f64>>, rng: &mut R) -> Rating {
    match noise {
        Some(n) => Rating::snap(v.value() + n.sample(rng)),
        None => v,
    }
}

/// Subject `i`'s identifier; zero-padded so identifiers sort by index.
pub fn subject_id(i: usize) -> String {
    format!("s{i:05}")
}

/// Draws a full study. One random stream per seed; identical inputs give identical output.
pub fn generate(
    profile: &PopulationProfile,
    bias: &ReporterBias,
    seed: u64,
) -> Result<SyntheticStudy> {
    profile.validate()?;
    bias.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth_dist = WeightedIndex::new(profile.truth_weights)
        .map_err(|e| SynthError::InvalidProfile(e.to_string()))?;
    let sex_dist = WeightedIndex::new(profile.sex_mix)
        .map_err(|e| SynthError::InvalidProfile(e.to_string()))?;
    let peer_noise = gaussian(bias.peer_noise_sd);
    let item_noise = gaussian(profile.item_noise_sd);
    const SEXES: [Sex; 3] = [Sex::Female, Sex::Male, Sex::Undeclared];

    let n = profile.n_subjects;
    let subjects: Vec<(Rating, Sex, u8)> = (0..n)
        .map(|_| {
            let truth = Rating::from_half_steps(truth_dist.sample(&mut rng) as u8)
                .expect("weight index is on the grid");
            let sex = SEXES[sex_dist.sample(&mut rng)];
            let age = rng.random_range(profile.age_range.0..=profile.age_range.1);
            (truth, sex, age)
        })
        .collect();

    let mut records = Vec::new();
    let mut report = |respondent: String,
                      group: RespondentGroup,
                      subject: usize,
                      q8: Rating,
                      own_child: bool,
                      rng: &mut ChaCha8Rng| {
        let (_, sex, age) = subjects[subject];
        let mut ratings = [None; 8];
        for slot in ratings.iter_mut().take(7) {
            *slot = Some(jitter(q8, item_noise.as_ref(), rng));
        }
        ratings[7] = Some(q8);
        records.push(AssessmentRecord {
            respondent_id: respondent,
            group,
            subject_id: subject_id(subject),
            subject_age: age,
            ratings,
            sex,
            own_child,
        });
    };

    for (i, &(truth, _, _)) in subjects.iter().enumerate() {
        let self_q8 = if rng.random::<f64>() < bias.self_underreport_prob {
            shift(truth, bias.shift_steps, false)
        } else {
            truth
        };
        report(
            subject_id(i),
            RespondentGroup::ElementaryChild,
            i,
            self_q8,
            false,
            &mut rng,
        );

        let u: f64 = rng.random();
        let parent_q8 = if u < bias.parent_under_prob {
            shift(truth, bias.shift_steps, false)
        } else if u < bias.parent_under_prob + bias.parent_over_prob {
            shift(truth, bias.shift_steps, true)
        } else {
            truth
        };
        report(
            format!("p{i:05}"),
            RespondentGroup::Parent,
            i,
            parent_q8,
            true,
            &mut rng,
        );

        let k = rng.random_range(profile.peers_per_subject.0..=profile.peers_per_subject.1);
        for j in index::sample(&mut rng, n - 1, k) {
            let peer = if j >= i { j + 1 } else { j };
            let q8 = jitter(truth, peer_noise.as_ref(), &mut rng);
            report(
                subject_id(peer),
                RespondentGroup::ElementaryChild,
                i,
                q8,
                false,
                &mut rng,
            );
        }
    }

    let ground_truth = subjects
        .iter()
        .enumerate()
        .map(|(i, s)| (subject_id(i), s.0))
        .collect();
    Ok(SyntheticStudy {
        dataset: Dataset::new(records, format!("synthetic seed={seed}"))?,
        ground_truth,
        seed,
    })
}

/// Mean absolute error of each estimator against the truth, over subjects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorErrors {
    pub subjects: usize,
    pub self_report: f64,
    pub parent: f64,
    pub peer_median: f64,
}

#[derive(Default)]
struct SubjectReports {
    self_q8: Option<f64>,
    parent_q8: Option<f64>,
    peer_q8: Vec<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Compares self, parent and peer-median Q8 estimates with the ground truth.
///
/// A record is a self-report when respondent and subject coincide, a parent
/// report when it comes from the parent group, and a peer report otherwise.
pub fn estimator_errors(study: &SyntheticStudy) -> Result<EstimatorErrors> {
    let mut by_subject: BTreeMap<&str, SubjectReports> = BTreeMap::new();
    for r in study.dataset.records() {
        let Some(q8) = r.rating(Question::Q8).map(Rating::value) else {
            continue;
        };
        let entry = by_subject.entry(r.subject_id.as_str()).or_default();
        if r.respondent_id == r.subject_id {
            entry.self_q8 = Some(q8);
        } else if r.group == RespondentGroup::Parent {
            entry.parent_q8 = Some(q8);
        } else {
            entry.peer_q8.push(q8);
        }
    }
    if study.ground_truth.is_empty() {
        return Err(SynthError::IncompleteStudy("no subjects".into()));
    }

    let (mut e_self, mut e_parent, mut e_peer) = (0.0, 0.0, 0.0);
    for (id, truth) in &study.ground_truth {
        let t = truth.value();
        let reports = by_subject
            .remove(id.as_str())
            .ok_or_else(|| SynthError::IncompleteStudy(format!("subject {id} has no reports")))?;
        let missing =
            |kind: &str| SynthError::IncompleteStudy(format!("subject {id} has no {kind} report"));
        e_self += (reports.self_q8.ok_or_else(|| missing("self"))? - t).abs();
        e_parent += (reports.parent_q8.ok_or_else(|| missing("parent"))? - t).abs();
        if reports.peer_q8.is_empty() {
            return Err(missing("peer"));
        }
        e_peer += (median(reports.peer_q8) - t).abs();
    }
    let n = study.ground_truth.len() as f64;
    Ok(EstimatorErrors {
        subjects: study.ground_truth.len(),
        self_report: e_self / n,
        parent: e_parent / n,
        peer_median: e_peer / n,
    })
}

/// Seed of replication `r` in a run started from `seed`.
pub fn replication_seed(seed: u64, r: usize) -> u64 {
    seed.wrapping_add(r as u64)
}

/// Generates and scores `reps` independent studies, in parallel.
pub fn replicate(
    profile: &PopulationProfile,
    bias: &ReporterBias,
    reps: usize,
    seed: u64,
) -> Result<Vec<EstimatorErrors>> {
    (0..reps)
        .into_par_iter()
        .map(|r| estimator_errors(&generate(profile, bias, replication_seed(seed, r))?))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WinRates {
    pub replications: usize,
    /// Share of replications where the peer median has strictly lower error than self-reports.
    pub peer_over_self: f64,
    pub peer_over_parent: f64,
}

impl WinRates {
    pub fn from_errors(errors: &[EstimatorErrors]) -> Self {
        let n = errors.len();
        let share = |f: &dyn Fn(&EstimatorErrors) -> bool| {
            if n == 0 {
                0.0
            } else {
                errors.iter().filter(|e| f(e)).count() as f64 / n as f64
            }
        };
        Self {
            replications: n,
            peer_over_self: share(&|e| e.peer_median < e.self_report),
            peer_over_parent: share(&|e| e.peer_median < e.parent),
        }
    }
}

/// Writes `subject_id,true_rating` rows.
pub fn export_truth_csv<W: Write>(study: &SyntheticStudy, out: W) -> Result<()> {
    let io = |e: csv::Error| SynthError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["subject_id", "true_rating"]).map_err(io)?;
    for (id, r) in &study.ground_truth {
        w.write_record([id.as_str(), &r.to_string()]).map_err(io)?;
    }
    w.flush().map_err(|e| SynthError::Io(e.to_string()))
}
