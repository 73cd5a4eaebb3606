//! Generational differential evolution over a box-bounded search space.
//!
//! One generation forms a trial vector for every member of the current
//! population (mutation, bound repair, binomial crossover), evaluates all
//! trials, then replaces each target by its trial when the trial is no worse.
//! All random draws happen serially on a single seeded stream before the
//! trials are evaluated, so evaluation may run in parallel without affecting
//! the result.

use std::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Best-fitness changes at or below this size do not reset the stagnation window.
pub const STAGNATION_EPSILON: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeError {
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("objective returned non-finite value {value} at {params:?}")]
    NonFiniteFitness { params: Vec<f64>, value: f64 },
    #[error("individual has no fitness value")]
    Unevaluated,
}

pub type Result<T> = std::result::Result<T, DeError>;

/// Per-dimension box constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(DeError::InvalidBounds(
                "dimension must be at least 1".into(),
            ));
        }
        if lower.len() != upper.len() {
            return Err(DeError::InvalidBounds(format!(
                "lower has {} components, upper has {}",
                lower.len(),
                upper.len()
            )));
        }
        for (j, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(DeError::InvalidBounds(format!("non-finite bound at {j}")));
            }
            if lo > hi {
                return Err(DeError::InvalidBounds(format!(
                    "lower[{j}] = {lo} exceeds upper[{j}] = {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same `[lo, hi]` interval in every one of `dim` dimensions.
    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    /// Clips every out-of-range component onto the bound it violates.
    pub fn repair(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub params: Vec<f64>,
    pub fitness: Option<f64>,
}

impl Individual {
    pub fn new(params: Vec<f64>) -> Self {
        Self {
            params,
            fitness: None,
        }
    }

    pub fn evaluated(params: Vec<f64>, fitness: f64) -> Self {
        Self {
            params,
            fitness: Some(fitness),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub members: Vec<Individual>,
    pub generation: usize,
}

impl Population {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Index of the member with the lowest fitness; unevaluated members are skipped.
    /// Ties resolve to the lowest index.
    pub fn best_index(&self) -> Option<usize> {
        self.members
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.fitness.map(|f| (i, f)))
            .fold(None, |acc: Option<(usize, f64)>, (i, f)| match acc {
                Some((_, bf)) if bf <= f => acc,
                _ => Some((i, f)),
            })
            .map(|(i, _)| i)
    }

    pub fn best_fitness(&self) -> Option<f64> {
        self.best_index().and_then(|i| self.members[i].fitness)
    }
}

/// The five classic DE mutation schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MutationStrategy {
    /// `v = x_r1 + F (x_r2 - x_r3)`
    #[default]
    Rand1,
    /// `v = x_best + F (x_r1 - x_r2)`
    Best1,
    /// `v = x_i + F (x_best - x_i) + F (x_r1 - x_r2)`
    RandToBest1,
    /// `v = x_best + F (x_r1 - x_r2) + F (x_r3 - x_r4)`
    Best2,
    /// `v = x_r1 + F (x_r2 - x_r3) + F (x_r4 - x_r5)`
    Rand2,
}

impl MutationStrategy {
    pub const ALL: [MutationStrategy; 5] = [
        MutationStrategy::Rand1,
        MutationStrategy::Best1,
        MutationStrategy::RandToBest1,
        MutationStrategy::Best2,
        MutationStrategy::Rand2,
    ];

    /// Number of distinct random member indices a single mutation draws.
    pub fn random_indices(self) -> usize {
        match self {
            MutationStrategy::Rand1 => 3,
            MutationStrategy::Best1 | MutationStrategy::RandToBest1 => 2,
            MutationStrategy::Best2 => 4,
            MutationStrategy::Rand2 => 5,
        }
    }

    /// Smallest population that can supply the random indices while excluding the target.
    pub fn min_population(self) -> usize {
        self.random_indices() + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            MutationStrategy::Rand1 => "rand1",
            MutationStrategy::Best1 => "best1",
            MutationStrategy::RandToBest1 => "rand_to_best1",
            MutationStrategy::Best2 => "best2",
            MutationStrategy::Rand2 => "rand2",
        }
    }
}

impl fmt::Display for MutationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MutationStrategy {
    type Err = DeError;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "rand1" | "derand1" => Ok(MutationStrategy::Rand1),
            "best1" | "debest1" => Ok(MutationStrategy::Best1),
            "randtobest1" | "derandtobest1" | "currenttobest1" => Ok(MutationStrategy::RandToBest1),
            "best2" | "debest2" => Ok(MutationStrategy::Best2),
            "rand2" | "derand2" => Ok(MutationStrategy::Rand2),
            _ => Err(DeError::InvalidConfig(format!("unknown strategy '{s}'"))),
        }
    }
}

/// When the evolution loop stops. `max_generations` is always enforced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub max_generations: usize,
    pub target_fitness: Option<f64>,
    pub stagnation_generations: Option<usize>,
}

impl StoppingRule {
    pub fn generations(max_generations: usize) -> Self {
        Self {
            max_generations,
            target_fitness: None,
            stagnation_generations: None,
        }
    }
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self::generations(1000)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DEConfig {
    pub np: usize,
    pub f: f64,
    pub cr: f64,
    pub strategy: MutationStrategy,
    pub stop: StoppingRule,
    pub seed: u64,
}

impl Default for DEConfig {
    fn default() -> Self {
        Self {
            np: 40,
            f: 0.8,
            cr: 0.9,
            strategy: MutationStrategy::Rand1,
            stop: StoppingRule::default(),
            seed: 0,
        }
    }
}

impl DEConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=2.0).contains(&self.f) {
            return Err(DeError::InvalidConfig(format!(
                "scaling factor F = {} outside [0, 2]",
                self.f
            )));
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return Err(DeError::InvalidConfig(format!(
                "crossover rate CR = {} outside [0, 1]",
                self.cr
            )));
        }
        let min = self.strategy.min_population();
        if self.np < min {
            return Err(DeError::InvalidConfig(format!(
                "population size {} below minimum {min} for strategy {}",
                self.np, self.strategy
            )));
        }
        if self.stop.stagnation_generations == Some(0) {
            return Err(DeError::InvalidConfig(
                "stagnation window must be at least one generation".into(),
            ));
        }
        if matches!(self.stop.target_fitness, Some(t) if t.is_nan()) {
            return Err(DeError::InvalidConfig("target fitness is NaN".into()));
        }
        Ok(())
    }

    /// The generator every run with this configuration draws from.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// A function to minimize. Implementations must be deterministic and
/// callable from several threads at once.
pub trait Objective: Sync {
    fn evaluate(&self, x: &[f64]) -> f64;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn evaluate(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// Draws `np` members uniformly inside `bounds`, component by component.
pub fn populate<R: Rng + ?Sized>(bounds: &SearchBounds, np: usize, rng: &mut R) -> Population {
    let members = (0..np)
        .map(|_| {
            let params = bounds
                .lower
                .iter()
                .zip(&bounds.upper)
                .map(|(lo, hi)| {
                    let r: f64 = rng.random();
                    lo + r * (hi - lo)
                })
                .collect();
            Individual::new(params)
        })
        .collect();
    Population {
        members,
        generation: 0,
    }
}

/// Builds the generation-0 population for `config`, drawing from the
/// configuration's seeded stream exactly as [`evolve`] does.
pub fn initialize(bounds: &SearchBounds, config: &DEConfig) -> Result<Population> {
    config.validate()?;
    Ok(populate(bounds, config.np, &mut config.rng()))
}

/// Draws `count` pairwise distinct indices from `0..np`, all different from `exclude`.
pub fn draw_indices<R: Rng + ?Sized>(
    np: usize,
    exclude: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if exclude >= np {
        return Err(DeError::InvalidArgument(format!(
            "target index {exclude} out of range for population of {np}"
        )));
    }
    if count > np - 1 {
        return Err(DeError::InvalidConfig(format!(
            "cannot draw {count} distinct indices excluding the target from {np} members"
        )));
    }
    Ok(index::sample(rng, np - 1, count)
        .into_iter()
        .map(|k| if k >= exclude { k + 1 } else { k })
        .collect())
}

/// Applies a strategy's linear combination to already chosen vectors.
///
/// `picks` holds `x_r1, x_r2, ...` in order and must contain at least
/// `strategy.random_indices()` vectors.
pub fn combine(
    strategy: MutationStrategy,
    f: f64,
    target: &[f64],
    best: &[f64],
    picks: &[&[f64]],
) -> Result<Vec<f64>> {
    let need = strategy.random_indices();
    if picks.len() < need {
        return Err(DeError::InvalidArgument(format!(
            "strategy {strategy} needs {need} vectors, got {}",
            picks.len()
        )));
    }
    let d = target.len();
    if best.len() != d || picks.iter().any(|p| p.len() != d) {
        return Err(DeError::InvalidArgument("vector dimensions differ".into()));
    }
    let v = (0..d)
        .map(|j| {
            let p = |k: usize| picks[k][j];
            match strategy {
                MutationStrategy::Rand1 => p(0) + f * (p(1) - p(2)),
                MutationStrategy::Best1 => best[j] + f * (p(0) - p(1)),
                MutationStrategy::RandToBest1 => {
                    target[j] + f * (best[j] - target[j]) + f * (p(0) - p(1))
                }
                MutationStrategy::Best2 => best[j] + f * (p(0) - p(1)) + f * (p(2) - p(3)),
                MutationStrategy::Rand2 => p(0) + f * (p(1) - p(2)) + f * (p(3) - p(4)),
            }
        })
        .collect();
    Ok(v)
}

/// Forms the (unrepaired) mutant for `target_index`.
pub fn mutate<R: Rng + ?Sized>(
    pop: &Population,
    target_index: usize,
    best_index: usize,
    config: &DEConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    mutate_traced(pop, target_index, best_index, config, rng).map(|(v, _)| v)
}

fn mutate_traced<R: Rng + ?Sized>(
    pop: &Population,
    target_index: usize,
    best_index: usize,
    config: &DEConfig,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<usize>)> {
    if best_index >= pop.len() {
        return Err(DeError::InvalidArgument(format!(
            "best index {best_index} out of range"
        )));
    }
    let idx = draw_indices(
        pop.len(),
        target_index,
        config.strategy.random_indices(),
        rng,
    )?;
    let picks: Vec<&[f64]> = idx
        .iter()
        .map(|&k| pop.members[k].params.as_slice())
        .collect();
    let v = combine(
        config.strategy,
        config.f,
        &pop.members[target_index].params,
        &pop.members[best_index].params,
        &picks,
    )?;
    Ok((v, idx))
}

/// Output of binomial crossover: the trial vector and the position that was
/// forced to come from the mutant.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossover {
    pub trial: Vec<f64>,
    pub j_rand: usize,
}

/// Binomial crossover: component `j` comes from the mutant when a fresh
/// uniform draw `r` in `[0, 1)` satisfies `r <= cr`, or when `j == j_rand`.
pub fn crossover<R: Rng + ?Sized>(
    target: &[f64],
    mutant: &[f64],
    cr: f64,
    rng: &mut R,
) -> Result<Crossover> {
    if target.len() != mutant.len() {
        return Err(DeError::InvalidArgument(format!(
            "target has {} components, mutant has {}",
            target.len(),
            mutant.len()
        )));
    }
    if target.is_empty() {
        return Err(DeError::InvalidArgument("empty vectors".into()));
    }
    let j_rand = rng.random_range(0..target.len());
    let trial = target
        .iter()
        .zip(mutant)
        .enumerate()
        .map(|(j, (&x, &v))| {
            let r: f64 = rng.random();
            if r <= cr || j == j_rand {
                v
            } else {
                x
            }
        })
        .collect();
    Ok(Crossover { trial, j_rand })
}

fn finite_fitness(ind: &Individual) -> Result<f64> {
    match ind.fitness {
        None => Err(DeError::Unevaluated),
        Some(v) if !v.is_finite() => Err(DeError::NonFiniteFitness {
            params: ind.params.clone(),
            value: v,
        }),
        Some(v) => Ok(v),
    }
}

/// Greedy selection: the trial replaces the target when it is no worse.
pub fn select(target: Individual, trial: Individual) -> Result<Individual> {
    let ft = finite_fitness(&target)?;
    let fu = finite_fitness(&trial)?;
    Ok(if fu <= ft { trial } else { target })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxGenerations,
    TargetReached,
    Stagnation,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::MaxGenerations => "max generations",
            StopReason::TargetReached => "target reached",
            StopReason::Stagnation => "stagnation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub best: Vec<f64>,
    pub best_fitness: f64,
    /// Best fitness in the population after each generation, starting with generation 0.
    pub history: Vec<f64>,
    pub generations: usize,
    pub evaluations: usize,
    pub stop_reason: StopReason,
}

/// Hooks into the evolution loop; every method defaults to a no-op.
pub trait EvolutionObserver {
    /// Called with the random indices drawn for one mutation.
    fn on_mutation(&mut self, _target: usize, _indices: &[usize]) {}
    /// Called once for generation 0 and after every completed generation.
    fn on_generation(&mut self, _population: &Population) {}
}

impl EvolutionObserver for () {}

fn evaluate_all<O: Objective + ?Sized>(objective: &O, vectors: &[Vec<f64>]) -> Result<Vec<f64>> {
    let values: Vec<f64> = vectors.par_iter().map(|x| objective.evaluate(x)).collect();
    for (x, &v) in vectors.iter().zip(&values) {
        if !v.is_finite() {
            return Err(DeError::NonFiniteFitness {
                params: x.clone(),
                value: v,
            });
        }
    }
    Ok(values)
}

/// Runs DE to completion and returns the best member found.
pub fn evolve<O: Objective + ?Sized>(
    objective: &O,
    bounds: &SearchBounds,
    config: &DEConfig,
) -> Result<RunResult> {
    evolve_observed(objective, bounds, config, &mut ())
}

pub fn evolve_observed<O, Obs>(
    objective: &O,
    bounds: &SearchBounds,
    config: &DEConfig,
    observer: &mut Obs,
) -> Result<RunResult>
where
    O: Objective + ?Sized,
    Obs: EvolutionObserver + ?Sized,
{
    config.validate()?;
    let mut rng = config.rng();
    let mut pop = populate(bounds, config.np, &mut rng);

    let initial: Vec<Vec<f64>> = pop.members.iter().map(|m| m.params.clone()).collect();
    let values = evaluate_all(objective, &initial)?;
    for (m, v) in pop.members.iter_mut().zip(values) {
        m.fitness = Some(v);
    }
    let mut evaluations = config.np;
    observer.on_generation(&pop);

    let mut history = vec![pop.best_fitness().ok_or(DeError::Unevaluated)?];
    let mut last_improvement = 0usize;
    let mut stop_reason = StopReason::MaxGenerations;

    for gen in 1..=config.stop.max_generations {
        let best = pop.best_index().ok_or(DeError::Unevaluated)?;

        let mut trials = Vec::with_capacity(config.np);
        for i in 0..config.np {
            let (mut mutant, idx) = mutate_traced(&pop, i, best, config, &mut rng)?;
            observer.on_mutation(i, &idx);
            bounds.repair(&mut mutant);
            let Crossover { trial, .. } =
                crossover(&pop.members[i].params, &mutant, config.cr, &mut rng)?;
            trials.push(trial);
        }

        let values = evaluate_all(objective, &trials)?;
        evaluations += config.np;

        let members = std::mem::take(&mut pop.members);
        pop.members = members
            .into_iter()
            .zip(trials.into_iter().zip(values))
            .map(|(target, (params, fit))| select(target, Individual::evaluated(params, fit)))
            .collect::<Result<_>>()?;
        pop.generation = gen;
        observer.on_generation(&pop);

        let current = pop.best_fitness().ok_or(DeError::Unevaluated)?;
        let previous = *history.last().expect("history starts non-empty");
        if previous - current > STAGNATION_EPSILON {
            last_improvement = gen;
        }
        history.push(current);

        if matches!(config.stop.target_fitness, Some(t) if current <= t) {
            stop_reason = StopReason::TargetReached;
            break;
        }
        if matches!(config.stop.stagnation_generations, Some(n) if gen - last_improvement >= n) {
            stop_reason = StopReason::Stagnation;
            break;
        }
    }

    let best = &pop.members[pop.best_index().ok_or(DeError::Unevaluated)?];
    Ok(RunResult {
        best: best.params.clone(),
        best_fitness: best.fitness.ok_or(DeError::Unevaluated)?,
        generations: pop.generation,
        history,
        evaluations,
        stop_reason,
    })
}
