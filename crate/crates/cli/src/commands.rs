use std::fmt::Write as _;
use std::fs::File;
use std::path::{Path, PathBuf};

use peerde::de::{evolve, RunResult};
use peerde::models::{fit_design, FitOptions, FitResult, Outcome, Response};
use peerde::objectives::Benchmark;
use peerde::survey::{
    design_matrix, export_csv, ingest, median_profile, respondent_stats, threshold_report,
    IngestReport, MedianProfile, Rejection, RespondentStats, SurveyError, ThresholdReport,
};
use peerde::synth::{
    export_truth_csv, generate, replicate, replication_seed, EstimatorErrors, PopulationProfile,
    ReporterBias, WinRates,
};
use peerde::{
    Criterion, DEConfig, ModelId, ModelSpec, MutationStrategy, Question, RespondentGroup, Sex,
    StoppingRule, TestFunction,
};
use serde::Serialize;

use crate::config::Settings;
use crate::error::CliError;
use crate::output::{Manifest, OutDir};
use crate::{
    Cli, Command, DeArgs, ExportArgs, FitArgs, OptimizeArgs, ReportArgs, SimulateArgs, SynthArgs,
};

type Result<T> = std::result::Result<T, CliError>;

/// Runs one command and returns the JSON document it wrote.
pub fn run(cli: Cli) -> Result<String> {
    let mut s = Settings::load(cli.config.as_deref())?;
    s.record("config", &s.source().map(Path::to_path_buf));
    let seed = s.value("seed", cli.seed, 0u64)?;
    let out = OutDir::new(s.value("out", cli.out, PathBuf::from("."))?);
    match cli.command {
        Command::Optimize(a) => optimize(a, s, seed, &out),
        Command::Report(a) => report(a, s, seed, &out),
        Command::Fit(a) => fit(a, s, seed, &out),
        Command::Simulate(a) => simulate(a, s, seed, &out),
        Command::ExportFixture(a) => export_fixture(a, s, seed, &out),
    }
}

fn parse<T: std::str::FromStr>(what: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse()
        .map_err(|e| CliError::usage(format!("{what}: {e}")))
}

fn resolve_de(
    s: &mut Settings,
    a: &DeArgs,
    np: usize,
    gens: usize,
    stagnation: usize,
    seed: u64,
) -> Result<DEConfig> {
    let defaults = DEConfig::default();
    let np = s.value("np", a.np, np)?;
    let f = s.value("f", a.f, defaults.f)?;
    let cr = s.value("cr", a.cr, defaults.cr)?;
    let strategy: MutationStrategy = parse(
        "strategy",
        &s.value(
            "strategy",
            a.strategy.clone(),
            defaults.strategy.name().to_string(),
        )?,
    )?;
    let max_generations = s.value("gens", a.gens, gens)?;
    let target_fitness = s.optional("target", a.target)?;
    if target_fitness.is_some_and(f64::is_nan) {
        return Err(CliError::usage("--target must be a number"));
    }
    let stagnation = s.value("stagnation", a.stagnation, stagnation)?;
    let config = DEConfig {
        np,
        f,
        cr,
        strategy,
        stop: StoppingRule {
            max_generations,
            target_fitness,
            stagnation_generations: (stagnation > 0).then_some(stagnation),
        },
        seed,
    };
    config.validate()?;
    Ok(config)
}

#[derive(Serialize)]
struct OptimizeResult {
    function: String,
    dimension: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    optimum_value: f64,
    error: f64,
    run: RunResult,
}

fn optimize(a: OptimizeArgs, mut s: Settings, seed: u64, out: &OutDir) -> Result<String> {
    let kind: Benchmark = parse("--fn", &s.value("fn", a.function, "sphere".to_string())?)?;
    let dim = s.value("dim", a.dim, 10usize)?;
    let func = TestFunction::new(kind, dim)?;
    let de = resolve_de(&mut s, &a.de, 40, 1000, 0, seed)?;
    let bounds = func.default_bounds();
    let run = evolve(&func, &bounds, &de)?;

    let mut csv = String::from("generation,best_fitness\n");
    for (g, v) in run.history.iter().enumerate() {
        writeln!(csv, "{g},{v}").expect("writing to a String");
    }
    out.write("convergence.csv", csv.as_bytes())?;

    let result = OptimizeResult {
        function: kind.to_string(),
        dimension: dim,
        lower: bounds.lower().to_vec(),
        upper: bounds.upper().to_vec(),
        optimum_value: func.optimum_value(),
        error: run.best_fitness - func.optimum_value(),
        run,
    };
    out.write_json(
        "optimize.json",
        &Manifest::new("optimize", s.echo(), seed),
        &result,
    )
}

fn load_survey(path: &Path) -> Result<IngestReport> {
    let file = File::open(path).map_err(|e| CliError::io(path.display(), e))?;
    let report = ingest(file, path.display().to_string())?;
    if report.dataset.is_empty() {
        return Err(CliError::EmptyData(format!(
            "{}: no valid rows ({} rejected)",
            path.display(),
            report.rejections.len()
        )));
    }
    Ok(report)
}

fn parse_group(raw: Option<String>) -> Result<Option<RespondentGroup>> {
    raw.map(|g| parse::<RespondentGroup>("--group", &g))
        .transpose()
}

#[derive(Serialize)]
struct Slice {
    group: Option<RespondentGroup>,
    thresholds: Vec<ThresholdReport>,
    /// Questions without any applicable answer in this slice.
    unanswered: Vec<Question>,
    medians: Vec<MedianProfile>,
    respondents: RespondentStats,
}

#[derive(Serialize)]
struct ReportResult {
    input: PathBuf,
    records: usize,
    rejections: Vec<Rejection>,
    slices: Vec<Slice>,
}

fn report(a: ReportArgs, mut s: Settings, seed: u64, out: &OutDir) -> Result<String> {
    let input: PathBuf = s.required("input", a.input)?;
    let group = parse_group(s.optional("group", a.group)?)?;
    let ingested = load_survey(&input)?;
    let ds = &ingested.dataset;

    let groups = match group {
        Some(g) => vec![Some(g)],
        None => vec![
            None,
            Some(RespondentGroup::ElementaryChild),
            Some(RespondentGroup::UniversityStudent),
            Some(RespondentGroup::Parent),
        ],
    };
    let mut slices = Vec::new();
    for g in groups {
        let respondents = match respondent_stats(ds, g) {
            Ok(r) => r,
            Err(SurveyError::EmptySlice(_)) if group.is_none() => continue,
            Err(e) => return Err(e.into()),
        };
        let mut thresholds = Vec::new();
        let mut unanswered = Vec::new();
        for q in Question::RATED {
            match threshold_report(ds, q, g) {
                Ok(r) => thresholds.push(r),
                Err(SurveyError::EmptySlice(_)) => unanswered.push(q),
                Err(e) => return Err(e.into()),
            }
        }
        let medians = [
            None,
            Some(Sex::Female),
            Some(Sex::Male),
            Some(Sex::Undeclared),
        ]
        .into_iter()
        .map(|sex| median_profile(ds, g, sex))
        .collect();
        slices.push(Slice {
            group: g,
            thresholds,
            unanswered,
            medians,
            respondents,
        });
    }

    let result = ReportResult {
        input,
        records: ds.len(),
        rejections: ingested.rejections,
        slices,
    };
    out.write_json(
        "report.json",
        &Manifest::new("report", s.echo(), seed),
        &result,
    )
}

fn model_spec(a: &FitArgs, s: &mut Settings) -> Result<ModelSpec> {
    let id: ModelId = parse(
        "--model",
        &s.value("model", a.model.clone(), "M1".to_string())?,
    )?;
    let threshold = s.optional("threshold", a.threshold)?;
    let group = parse_group(s.optional("group", a.group.clone())?)?;
    let response = s.optional("response", a.response.clone())?;
    let regressors = s.optional("regressors", a.regressors.clone())?;

    let spec = if id == ModelId::Custom {
        let response =
            response.ok_or_else(|| CliError::usage("a custom model needs --response"))?;
        let regressors = regressors
            .unwrap_or_default()
            .iter()
            .map(|q| parse::<Question>("--regressors", q))
            .collect::<Result<Vec<_>>>()?;
        let response = if response.eq_ignore_ascii_case("female") {
            if threshold.is_some() {
                return Err(CliError::usage(
                    "--threshold does not apply to the female response",
                ));
            }
            Response::Female
        } else {
            let question = parse::<Question>("--response", &response)?;
            match threshold {
                Some(threshold) => Response::Threshold {
                    question,
                    threshold,
                },
                None => Response::Ordered { question },
            }
        };
        ModelSpec::new(ModelId::Custom, response, regressors, group)?
    } else {
        if response.is_some() || regressors.is_some() {
            return Err(CliError::usage(
                "--response and --regressors apply only to --model custom",
            ));
        }
        let mut spec = ModelSpec::catalog(id)?;
        if let Some(t) = threshold {
            if matches!(spec.response, Response::Female) {
                return Err(CliError::usage(format!(
                    "{id} already has a binary response"
                )));
            }
            spec = spec.with_binary_response(t)?;
        }
        if group.is_some() {
            spec.group = group;
        }
        spec
    };
    Ok(spec)
}

#[derive(Serialize)]
struct FitDocument {
    input: PathBuf,
    rejected_rows: usize,
    fit: FitResult,
}

fn fit(a: FitArgs, mut s: Settings, seed: u64, out: &OutDir) -> Result<String> {
    let input: PathBuf = s.required("input", a.input.clone())?;
    let spec = model_spec(&a, &mut s)?;
    let criterion: Criterion = parse(
        "--criterion",
        &s.value("criterion", a.criterion.clone(), "loglik".to_string())?,
    )?;
    let opts = FitOptions {
        coefficient_bound: s.value(
            "coef-bound",
            a.coef_bound,
            FitOptions::default().coefficient_bound,
        )?,
        ..FitOptions::default()
    };

    let ingested = load_survey(&input)?;
    let design = design_matrix(&ingested.dataset, &spec)?;
    let dim = match &design.outcome {
        Outcome::Binary(_) => design.k() + 1,
        Outcome::Ordered { .. } => design.k() + design.outcome.n_categories() - 1,
    };
    let de = resolve_de(&mut s, &a.de, (10 * dim).max(20), 2000, 100, seed)?;
    let result = fit_design(&spec, &design, &de, criterion, &opts)?;

    let doc = FitDocument {
        input,
        rejected_rows: ingested.rejections.len(),
        fit: result,
    };
    out.write_json("fit.json", &Manifest::new("fit", s.echo(), seed), &doc)
}

fn resolve_synth(a: &SynthArgs, s: &mut Settings) -> Result<(PopulationProfile, ReporterBias)> {
    let dp = PopulationProfile::default();
    let db = ReporterBias::default();
    let peers = s.value("peers", a.peers, dp.peers_per_subject.0)?;
    let weights = s.optional("truth-weights", a.truth_weights.clone())?;
    let truth_weights = match weights {
        None => dp.truth_weights,
        Some(w) => {
            let w: [f64; 7] = w.try_into().map_err(|w: Vec<f64>| {
                CliError::usage(format!("--truth-weights needs 7 values, got {}", w.len()))
            })?;
            let total: f64 = w.iter().sum();
            if !(total.is_finite() && total > 0.0) {
                return Err(CliError::usage("--truth-weights must have a positive sum"));
            }
            w.map(|x| x / total)
        }
    };
    let profile = PopulationProfile {
        n_subjects: s.value("subjects", a.subjects, dp.n_subjects)?,
        truth_weights,
        peers_per_subject: (peers, peers),
        item_noise_sd: s.value("item-noise", a.item_noise, dp.item_noise_sd)?,
        ..dp
    };

    let bias_zero = s.value("bias-zero", a.bias_zero.then_some(true), false)?;
    let self_under = s.optional("self-under", a.self_under)?;
    let parent_under = s.optional("parent-under", a.parent_under)?;
    let parent_over = s.optional("parent-over", a.parent_over)?;
    if bias_zero && (self_under.is_some() || parent_under.is_some() || parent_over.is_some()) {
        return Err(CliError::usage(
            "--bias-zero cannot be combined with explicit mis-report probabilities",
        ));
    }
    let zero = |v: f64| if bias_zero { 0.0 } else { v };
    let bias = ReporterBias {
        self_underreport_prob: self_under.unwrap_or(zero(db.self_underreport_prob)),
        parent_under_prob: parent_under.unwrap_or(zero(db.parent_under_prob)),
        parent_over_prob: parent_over.unwrap_or(zero(db.parent_over_prob)),
        peer_noise_sd: s.value("noise", a.noise, db.peer_noise_sd)?,
        shift_steps: s.value("shift-steps", a.shift_steps, db.shift_steps)?,
    };
    profile.validate()?;
    bias.validate()?;
    Ok((profile, bias))
}

#[derive(Serialize)]
struct Replication {
    replication: usize,
    seed: u64,
    errors: EstimatorErrors,
}

#[derive(Serialize)]
struct MeanErrors {
    self_report: f64,
    parent: f64,
    peer_median: f64,
}

#[derive(Serialize)]
struct SimulateResult {
    profile: PopulationProfile,
    bias: ReporterBias,
    win_rates: WinRates,
    mean_errors: MeanErrors,
    replications: Vec<Replication>,
}

fn simulate(a: SimulateArgs, mut s: Settings, seed: u64, out: &OutDir) -> Result<String> {
    let reps = s.value("reps", a.reps, 100usize)?;
    if reps < 1 {
        return Err(CliError::usage("--reps must be at least 1"));
    }
    let (profile, bias) = resolve_synth(&a.synth, &mut s)?;
    let errors = replicate(&profile, &bias, reps, seed)?;

    let mean = |f: fn(&EstimatorErrors) -> f64| errors.iter().map(f).sum::<f64>() / reps as f64;
    let mean_errors = MeanErrors {
        self_report: mean(|e| e.self_report),
        parent: mean(|e| e.parent),
        peer_median: mean(|e| e.peer_median),
    };
    let mut csv = String::from("replication,seed,self_mae,parent_mae,peer_median_mae\n");
    let replications: Vec<Replication> = errors
        .iter()
        .enumerate()
        .map(|(r, e)| {
            let seed = replication_seed(seed, r);
            writeln!(
                csv,
                "{r},{seed},{},{},{}",
                e.self_report, e.parent, e.peer_median
            )
            .expect("writing to a String");
            Replication {
                replication: r,
                seed,
                errors: *e,
            }
        })
        .collect();
    out.write("replications.csv", csv.as_bytes())?;

    let result = SimulateResult {
        profile,
        bias,
        win_rates: WinRates::from_errors(&errors),
        mean_errors,
        replications,
    };
    out.write_json(
        "simulate.json",
        &Manifest::new("simulate", s.echo(), seed),
        &result,
    )
}

#[derive(Serialize)]
struct ExportResult {
    profile: PopulationProfile,
    bias: ReporterBias,
    records: usize,
    subjects: usize,
    dataset: PathBuf,
    truth: PathBuf,
}

fn export_fixture(a: ExportArgs, mut s: Settings, seed: u64, out: &OutDir) -> Result<String> {
    let (profile, bias) = resolve_synth(&a.synth, &mut s)?;
    let study = generate(&profile, &bias, seed)?;

    let mut data = Vec::new();
    export_csv(&study.dataset, &mut data)?;
    let dataset = out.write("fixture.csv", &data)?;
    let mut truth = Vec::new();
    export_truth_csv(&study, &mut truth)?;
    let truth = out.write("truth.csv", &truth)?;

    let result = ExportResult {
        profile,
        bias,
        records: study.dataset.len(),
        subjects: study.ground_truth.len(),
        dataset,
        truth,
    };
    out.write_json(
        "export-fixture.json",
        &Manifest::new("export-fixture", s.echo(), seed),
        &result,
    )
}
