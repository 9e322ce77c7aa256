use serde::{Deserialize, Serialize};

use super::{Harness, Score};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CriterionVerdict {
    pub criterion_id: String,
    pub passed: bool,
    pub evidence: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bottleneck {
    Llm,
    Tool,
}

impl Bottleneck {
    /// The larger share wins; a tie is attributed to the model.
    pub fn classify(llm_time_ms: u64, tool_time_ms: u64) -> Self {
        if tool_time_ms > llm_time_ms {
            Bottleneck::Tool
        } else {
            Bottleneck::Llm
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Audit {
    pub llm_time_ms: u64,
    pub tool_time_ms: u64,
    pub dominant_bottleneck: Bottleneck,
}

impl Audit {
    pub fn new(llm_time_ms: u64, tool_time_ms: u64) -> Self {
        Audit {
            llm_time_ms,
            tool_time_ms,
            dominant_bottleneck: Bottleneck::classify(llm_time_ms, tool_time_ms),
        }
    }
}

/// The evaluator's structured diagnosis of one worker run.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub criterion_verdicts: Vec<CriterionVerdict>,
    pub state_verified: bool,
    /// First step whose observation disagrees with ground truth. A value one
    /// past the last step means only the claimed final state disagreed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_divergence: Option<u32>,
    pub audit: Audit,
    pub score: Score,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ReportError {
    #[error("score passes but criterion {0:?} failed")]
    PassWithFailedCriterion(String),
    #[error("score passes but state verification failed")]
    PassWithUnverifiedState,
    #[error("state verification failed without a divergence step")]
    MissingDivergence,
    #[error("divergence step reported although state verified")]
    SpuriousDivergence,
    #[error("returned score differs from report score")]
    ScoreMismatch,
}

impl EvaluationReport {
    pub fn check_invariants(&self) -> Result<(), ReportError> {
        if self.score.passed() {
            if let Some(v) = self.criterion_verdicts.iter().find(|v| !v.passed) {
                return Err(ReportError::PassWithFailedCriterion(v.criterion_id.clone()));
            }
            if !self.state_verified {
                return Err(ReportError::PassWithUnverifiedState);
            }
        }
        match (self.state_verified, self.first_divergence) {
            (false, None) => Err(ReportError::MissingDivergence),
            (true, Some(_)) => Err(ReportError::SpuriousDivergence),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Improved,
    Regressed,
}

/// One iteration of the harness evolution loop.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iteration: u32,
    pub task_id: String,
    /// The harness that was executed in this iteration.
    pub harness: Harness,
    pub report: EvaluationReport,
    pub score: Score,
    pub verdict: Verdict,
}
