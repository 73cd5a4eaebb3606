use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ModelError, Result};
use crate::survey::{Question, RespondentGroup, THRESHOLDS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelId {
    M1,
    M2,
    M3,
    M4,
    M5,
    M6,
    Custom,
}

impl ModelId {
    pub const CATALOG: [ModelId; 6] = [
        ModelId::M1,
        ModelId::M2,
        ModelId::M3,
        ModelId::M4,
        ModelId::M5,
        ModelId::M6,
    ];
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelId::M1 => "M1",
            ModelId::M2 => "M2",
            ModelId::M3 => "M3",
            ModelId::M4 => "M4",
            ModelId::M5 => "M5",
            ModelId::M6 => "M6",
            ModelId::Custom => "custom",
        };
        f.write_str(s)
    }
}

impl FromStr for ModelId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "M1" => Ok(ModelId::M1),
            "M2" => Ok(ModelId::M2),
            "M3" => Ok(ModelId::M3),
            "M4" => Ok(ModelId::M4),
            "M5" => Ok(ModelId::M5),
            "M6" => Ok(ModelId::M6),
            "CUSTOM" => Ok(ModelId::Custom),
            _ => Err(ModelError::InvalidSpec(format!("unknown model '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    BinaryLogit,
    OrderedLogit,
}

/// How the dependent variable is coded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "encoding")]
pub enum Response {
    /// `y = 1` when the rating is at or above `threshold`.
    Threshold { question: Question, threshold: f64 },
    /// Integer levels 0–3, half-steps rounded down.
    Ordered { question: Question },
    /// `y = 1` when the subject's sex (Q9) is female.
    Female,
}

impl Response {
    pub fn question(&self) -> Question {
        match *self {
            Response::Threshold { question, .. } | Response::Ordered { question } => question,
            Response::Female => Question::Q9,
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Response::Ordered { .. } => Family::OrderedLogit,
            _ => Family::BinaryLogit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub id: ModelId,
    pub response: Response,
    pub regressors: Vec<Question>,
    /// `None` keeps every respondent group.
    pub group: Option<RespondentGroup>,
}

impl ModelSpec {
    pub fn new(
        id: ModelId,
        response: Response,
        regressors: Vec<Question>,
        group: Option<RespondentGroup>,
    ) -> Result<Self> {
        let spec = Self {
            id,
            response,
            regressors,
            group,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Default definition of a catalog model.
    ///
    /// M1/M4 explain Q6 by Q3, Q4, Q5, Q7; M2/M5 explain Q7 by the remaining
    /// questions including sex; M3/M6 relate the subject being female to Q8.
    /// M1–M3 use children's answers, M4–M6 parents'.
    pub fn catalog(id: ModelId) -> Result<Self> {
        use Question::*;
        let children = Some(RespondentGroup::ElementaryChild);
        let parents = Some(RespondentGroup::Parent);
        let q6_regressors = vec![Q3, Q4, Q5, Q7];
        let q7_regressors = vec![Q1, Q2, Q3, Q4, Q5, Q6, Q8, Q9];
        let (response, regressors, group) = match id {
            ModelId::M1 => (Response::Ordered { question: Q6 }, q6_regressors, children),
            ModelId::M2 => (Response::Ordered { question: Q7 }, q7_regressors, children),
            ModelId::M3 => (Response::Female, vec![Q8], children),
            ModelId::M4 => (Response::Ordered { question: Q6 }, q6_regressors, parents),
            ModelId::M5 => (Response::Ordered { question: Q7 }, q7_regressors, parents),
            ModelId::M6 => (Response::Female, vec![Q8], parents),
            ModelId::Custom => {
                return Err(ModelError::InvalidSpec(
                    "custom models have no catalog definition".into(),
                ))
            }
        };
        Self::new(id, response, regressors, group)
    }

    /// Recodes an ordered response as binary at `threshold`.
    pub fn with_binary_response(mut self, threshold: f64) -> Result<Self> {
        if let Response::Ordered { question } = self.response {
            self.response = Response::Threshold {
                question,
                threshold,
            };
        }
        self.validate()?;
        Ok(self)
    }

    pub fn family(&self) -> Family {
        self.response.family()
    }

    pub fn validate(&self) -> Result<()> {
        let rq = self.response.question();
        if self.regressors.contains(&rq) {
            return Err(ModelError::InvalidSpec(format!(
                "response {rq} also listed as a regressor"
            )));
        }
        for (i, q) in self.regressors.iter().enumerate() {
            if self.regressors[..i].contains(q) {
                return Err(ModelError::InvalidSpec(format!(
                    "regressor {q} listed twice"
                )));
            }
        }
        match self.response {
            Response::Threshold {
                question,
                threshold,
            } => {
                if question == Question::Q9 {
                    return Err(ModelError::InvalidSpec(
                        "Q9 is coded by sex; use the female response".into(),
                    ));
                }
                if !THRESHOLDS.contains(&threshold) {
                    return Err(ModelError::InvalidSpec(format!(
                        "threshold {threshold} not one of {THRESHOLDS:?}"
                    )));
                }
            }
            Response::Ordered {
                question: Question::Q9,
            } => {
                return Err(ModelError::InvalidSpec(
                    "Q9 cannot be an ordered response".into(),
                ));
            }
            _ => {}
        }
        Ok(())
    }
}
