//! Differential evolution and the peer-assessment measurement pipeline built on it.
//!
//! * [`de`] – generational differential evolution with five mutation strategies.
//! * [`objectives`] – benchmark functions and model-fitting criteria as DE objectives.
//! * [`survey`] – questionnaire records, CSV ingestion, aggregation and design matrices.
//! * [`models`] – binary and ordered logit models, the M1–M6 catalog, diagnostics.
//! * [`synth`] – synthetic populations with known ground truth and biased reporters.

pub mod de;
pub mod models;
pub mod objectives;
pub mod survey;
pub mod synth;

pub use de::{
    evolve, DEConfig, MutationStrategy, Objective, RunResult, SearchBounds, StopReason,
    StoppingRule,
};
pub use models::{fit, FitResult, ModelError, ModelId, ModelSpec};
pub use objectives::{Criterion, TestFunction};
pub use survey::{Dataset, Question, Rating, RespondentGroup, Sex};
