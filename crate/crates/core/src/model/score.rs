//! Two-tier scores with a criteria-fraction middle tier.
//!
//! Ordering is lexicographic on (passed, criteria_fraction, -total_time_ms):
//! a passing run beats any failing run, more satisfied criteria beat fewer,
//! and less wall time breaks remaining ties. The running best in both loops
//! starts from [`MIN_SCORE`], which is `None` and therefore below every
//! constructible score.

use std::cmp::Ordering;

use serde::{Deserialize, Deserializer, Serialize};

use super::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Score {
    passed: bool,
    criteria_fraction: Rational,
    total_time_ms: u64,
}

/// The −∞ sentinel. Not a representable [`Score`].
pub const MIN_SCORE: Option<Score> = None;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ScoreError {
    #[error("criteria_fraction {0} outside [0,1]")]
    FractionOutOfRange(Rational),
    #[error("passed={passed} inconsistent with criteria_fraction {fraction}")]
    PassedMismatch { passed: bool, fraction: Rational },
    #[error("time budget must be positive")]
    ZeroBudget,
}

impl Score {
    /// `passed` is derived: true iff every criterion held.
    pub fn new(criteria_fraction: Rational, total_time_ms: u64) -> Result<Self, ScoreError> {
        if criteria_fraction.is_negative() || criteria_fraction > Rational::ONE {
            return Err(ScoreError::FractionOutOfRange(criteria_fraction));
        }
        Ok(Score {
            passed: criteria_fraction == Rational::ONE,
            criteria_fraction,
            total_time_ms,
        })
    }

    pub fn passing(total_time_ms: u64) -> Self {
        Score::new(Rational::ONE, total_time_ms).unwrap()
    }

    pub fn passed(&self) -> bool {
        self.passed
    }

    pub fn criteria_fraction(&self) -> Rational {
        self.criteria_fraction
    }

    pub fn total_time_ms(&self) -> u64 {
        self.total_time_ms
    }
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> Ordering {
        self.passed
            .cmp(&other.passed)
            .then(self.criteria_fraction.cmp(&other.criteria_fraction))
            .then(other.total_time_ms.cmp(&self.total_time_ms))
    }
}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Deserialize)]
struct RawScore {
    passed: bool,
    criteria_fraction: Rational,
    total_time_ms: u64,
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawScore::deserialize(deserializer)?;
        let s = Score::new(raw.criteria_fraction, raw.total_time_ms)
            .map_err(serde::de::Error::custom)?;
        if s.passed != raw.passed {
            return Err(serde::de::Error::custom(ScoreError::PassedMismatch {
                passed: raw.passed,
                fraction: raw.criteria_fraction,
            }));
        }
        Ok(s)
    }
}

/// Total order over scores and the sentinel. `None` is [`MIN_SCORE`].
pub fn compare_scores(a: Option<&Score>, b: Option<&Score>) -> Ordering {
    a.cmp(&b)
}

/// Maps a score into `[0,1]`, preserving the pass/fail tier:
/// `0.9·fraction + (passed ? 0.1·max(0, 1 − time/budget) : 0)`.
pub fn scalarize(score: Option<&Score>, time_budget_ms: u64) -> Result<Rational, ScoreError> {
    if time_budget_ms == 0 {
        return Err(ScoreError::ZeroBudget);
    }
    let Some(s) = score else {
        return Ok(Rational::ZERO);
    };
    let base = Rational::new(9, 10) * s.criteria_fraction;
    if !s.passed {
        return Ok(base);
    }
    let remaining = (Rational::ONE
        - Rational::new(s.total_time_ms as i128, time_budget_ms as i128))
    .max(Rational::ZERO);
    Ok(base + Rational::new(1, 10) * remaining)
}

/// Serde adapter writing `MIN_SCORE` as the string `"MIN_SCORE"`.
pub mod min_score_serde {
    use super::Score;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    const SENTINEL: &str = "MIN_SCORE";

    pub fn serialize<S: Serializer>(v: &Option<Score>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(score) => score.serialize(s),
            None => s.serialize_str(SENTINEL),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Sentinel(String),
        Score(Score),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Score>, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Score(s) => Ok(Some(s)),
            Repr::Sentinel(t) if t == SENTINEL => Ok(None),
            Repr::Sentinel(t) => Err(serde::de::Error::custom(format!(
                "expected score or {SENTINEL}, got {t:?}"
            ))),
        }
    }
}
