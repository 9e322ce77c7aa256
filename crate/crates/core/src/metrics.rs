//! Adaptation metrics over inner-loop histories: convergence speed, final
//! pass rate, and the spread of convergence speed across tasks.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::inner::{run_inner_loop, select_best, InnerError, InnerRunResult};
use crate::model::{digest, scalarize, Blueprint, HistoryEntry, Rational, Score, Task};
use crate::seed::derive_seed;

const NOT_REACHED: &str = "NOT_REACHED";

/// Iterations needed to reach a threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Convergence {
    Reached(u32),
    NotReached,
}

impl Convergence {
    /// Iteration count with `NOT_REACHED` mapped to `cap`.
    pub fn or_cap(self, cap: u32) -> u32 {
        match self {
            Convergence::Reached(k) => k,
            Convergence::NotReached => cap,
        }
    }
}

impl fmt::Display for Convergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Convergence::Reached(k) => write!(f, "{k}"),
            Convergence::NotReached => f.write_str(NOT_REACHED),
        }
    }
}

impl Serialize for Convergence {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Convergence::Reached(k) => s.serialize_u32(*k),
            Convergence::NotReached => s.serialize_str(NOT_REACHED),
        }
    }
}

impl<'de> Deserialize<'de> for Convergence {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            N(u32),
            S(String),
        }
        match Repr::deserialize(d)? {
            Repr::N(k) if k > 0 => Ok(Convergence::Reached(k)),
            Repr::S(s) if s == NOT_REACHED => Ok(Convergence::NotReached),
            _ => Err(serde::de::Error::custom(
                "expected a positive integer or NOT_REACHED",
            )),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("empty_aggregate: nothing to aggregate")]
    EmptyAggregate,
    #[error("train_test_overlap: {0:?} appear in both training and test sets")]
    TrainTestOverlap(Vec<String>),
    #[error("threshold {0} outside [0,1]")]
    BadThreshold(Rational),
    #[error("time budget must be positive")]
    ZeroBudget,
    #[error("task {task_id}: {source}")]
    Inner {
        task_id: String,
        #[source]
        source: InnerError,
    },
}

impl MetricsError {
    pub fn code(&self) -> String {
        match self {
            MetricsError::EmptyAggregate => "empty_aggregate".into(),
            MetricsError::TrainTestOverlap(_) => "train_test_overlap".into(),
            MetricsError::BadThreshold(_) | MetricsError::ZeroBudget => "config_invalid".into(),
            MetricsError::Inner { source, .. } => source.code(),
        }
    }
}

/// Scalarized running best after each iteration.
pub fn best_scalar_series(
    history: &[HistoryEntry],
    budget_ms: u64,
) -> Result<Vec<Rational>, MetricsError> {
    let mut best: Option<Score> = None;
    history
        .iter()
        .map(|e| {
            if Some(e.score) > best {
                best = Some(e.score);
            }
            scalarize(best.as_ref(), budget_ms).map_err(|_| MetricsError::ZeroBudget)
        })
        .collect()
}

/// Smallest `k` whose best-so-far score scalarizes to at least
/// `threshold`.
pub fn convergence_speed(
    history: &[HistoryEntry],
    threshold: Rational,
    budget_ms: u64,
) -> Result<Convergence, MetricsError> {
    if threshold.is_negative() || threshold > Rational::ONE {
        return Err(MetricsError::BadThreshold(threshold));
    }
    let series = best_scalar_series(history, budget_ms)?;
    Ok(series
        .iter()
        .position(|s| *s >= threshold)
        .map_or(Convergence::NotReached, |i| {
            Convergence::Reached(i as u32 + 1)
        }))
}

/// Fraction of runs whose best score passed.
pub fn final_performance(results: &[InnerRunResult]) -> Result<Rational, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::EmptyAggregate);
    }
    let passed = results
        .iter()
        .filter(|r| r.best_score.is_some_and(|s| s.passed()))
        .count();
    Ok(Rational::new(passed as i128, results.len() as i128))
}

/// Population variance of reached convergence speeds, with unreached
/// runs counted separately rather than imputed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Robustness {
    /// `None` when no run reached the threshold; rendered as `UNDEFINED`.
    #[serde(with = "undefined_serde")]
    pub variance: Option<Rational>,
    pub not_reached_count: u32,
}

mod undefined_serde {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(r) => r.serialize(s),
            None => s.serialize_str("UNDEFINED"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        let text = String::deserialize(d)?;
        if text == "UNDEFINED" {
            return Ok(None);
        }
        text.parse().map(Some).map_err(serde::de::Error::custom)
    }
}

pub fn robustness(speeds: &[Convergence]) -> Robustness {
    let reached: Vec<Rational> = speeds
        .iter()
        .filter_map(|s| match s {
            Convergence::Reached(k) => Some(Rational::from_integer(*k as i128)),
            Convergence::NotReached => None,
        })
        .collect();
    let not_reached_count = (speeds.len() - reached.len()) as u32;
    let variance = Rational::mean(reached.iter().copied()).map(|mean| {
        Rational::mean(reached.iter().map(|&x| (x - mean) * (x - mean))).expect("nonempty")
    });
    Robustness {
        variance,
        not_reached_count,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub task_id: String,
    pub iterations_to_threshold: Convergence,
    pub final_pass: bool,
    pub best_scalar_by_iteration: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportMetrics {
    /// Mean over reached tasks; `None` when none reached.
    pub mean_convergence_speed: Option<Rational>,
    pub final_performance: Rational,
    pub robustness: Robustness,
    pub variance_kind: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportProvenance {
    pub blueprint_digest: String,
    pub seed: u64,
    #[serde(rename = "K")]
    pub k: u32,
    pub threshold: Rational,
    pub train_task_ids: Vec<String>,
    pub test_task_ids: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaTestReport {
    pub metrics: ReportMetrics,
    pub per_task: Vec<ConvergenceRecord>,
    pub provenance: ReportProvenance,
}

impl MetaTestReport {
    /// Plot data for one task: `iteration best_scalar` per line, six
    /// decimal places.
    pub fn series_text(record: &ConvergenceRecord) -> String {
        record
            .best_scalar_by_iteration
            .iter()
            .enumerate()
            .map(|(i, s)| format!("{} {}\n", i + 1, s.to_fixed(6)))
            .collect()
    }
}

/// Builds the report from per-task histories, one per test task in
/// order. The report depends on nothing else, so regenerating it from
/// the same logs reproduces it byte for byte.
pub fn report_from_histories(
    blueprint: &Blueprint,
    train_task_ids: &[String],
    histories: &[(String, Vec<HistoryEntry>)],
    k: u32,
    seed: u64,
    threshold: Rational,
) -> Result<MetaTestReport, MetricsError> {
    if histories.is_empty() {
        return Err(MetricsError::EmptyAggregate);
    }
    let budget = blueprint.evaluator_config.time_budget_ms;
    let mut per_task = Vec::with_capacity(histories.len());
    for (task_id, history) in histories {
        per_task.push(ConvergenceRecord {
            task_id: task_id.clone(),
            iterations_to_threshold: convergence_speed(history, threshold, budget)?,
            final_pass: select_best(history).1.is_some_and(|s| s.passed()),
            best_scalar_by_iteration: best_scalar_series(history, budget)?,
        });
    }
    let passed = per_task.iter().filter(|r| r.final_pass).count();
    let speeds: Vec<Convergence> = per_task.iter().map(|r| r.iterations_to_threshold).collect();
    let mean_convergence_speed = Rational::mean(speeds.iter().filter_map(|s| match s {
        Convergence::Reached(k) => Some(Rational::from_integer(*k as i128)),
        Convergence::NotReached => None,
    }));
    Ok(MetaTestReport {
        metrics: ReportMetrics {
            mean_convergence_speed,
            final_performance: Rational::new(passed as i128, per_task.len() as i128),
            robustness: robustness(&speeds),
            variance_kind: "population".into(),
        },
        per_task,
        provenance: ReportProvenance {
            blueprint_digest: digest(blueprint),
            seed,
            k,
            threshold,
            train_task_ids: train_task_ids.to_vec(),
            test_task_ids: histories.iter().map(|(id, _)| id.clone()).collect(),
        },
    })
}

/// Runs the inner loop on each test task. Task `i` uses the seed derived
/// from `(seed, i)` and the blueprint with its K replaced by `k`.
pub fn run_test_tasks(
    blueprint: &Blueprint,
    test_tasks: &[Task],
    k: u32,
    seed: u64,
) -> Result<Vec<(Task, u64, InnerRunResult)>, MetricsError> {
    let mut bp = blueprint.clone();
    bp.loop_config.k = k;
    test_tasks
        .iter()
        .enumerate()
        .map(|(i, task)| {
            let task_seed = derive_seed(seed, &[i as u64]);
            run_inner_loop(task, &bp, task_seed)
                .map(|r| (task.clone(), task_seed, r))
                .map_err(|source| MetricsError::Inner {
                    task_id: task.id.clone(),
                    source,
                })
        })
        .collect()
}

/// Rejects test sets that share ids with the training set, then checks
/// the test set is nonempty.
pub fn check_split(train_task_ids: &[String], test_tasks: &[Task]) -> Result<(), MetricsError> {
    let train: BTreeSet<&str> = train_task_ids.iter().map(String::as_str).collect();
    let overlap: Vec<String> = test_tasks
        .iter()
        .filter(|t| train.contains(t.id.as_str()))
        .map(|t| t.id.clone())
        .collect();
    if !overlap.is_empty() {
        return Err(MetricsError::TrainTestOverlap(overlap));
    }
    if test_tasks.is_empty() {
        return Err(MetricsError::EmptyAggregate);
    }
    Ok(())
}

/// Evaluates `blueprint` on held-out tasks with `k` iterations each.
/// Task `i` runs with the seed derived from `(seed, i)`.
pub fn meta_test_report(
    blueprint: &Blueprint,
    train_task_ids: &[String],
    test_tasks: &[Task],
    k: u32,
    seed: u64,
    threshold: Rational,
) -> Result<MetaTestReport, MetricsError> {
    check_split(train_task_ids, test_tasks)?;
    if threshold.is_negative() || threshold > Rational::ONE {
        return Err(MetricsError::BadThreshold(threshold));
    }
    let runs = run_test_tasks(blueprint, test_tasks, k, seed)?;
    let histories: Vec<(String, Vec<HistoryEntry>)> = runs
        .into_iter()
        .map(|(t, _, r)| (t.id, r.history))
        .collect();
    let mut bp = blueprint.clone();
    bp.loop_config.k = k;
    report_from_histories(&bp, train_task_ids, &histories, k, seed, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn robustness_examples() {
        use Convergence::*;
        let r = robustness(&[Reached(3), Reached(3), Reached(3)]);
        assert_eq!((r.variance, r.not_reached_count), (Some(Rational::ZERO), 0));
        let r = robustness(&[Reached(2), Reached(4)]);
        assert_eq!((r.variance, r.not_reached_count), (Some(Rational::ONE), 0));
        let r = robustness(&[Reached(2), NotReached, Reached(4)]);
        assert_eq!((r.variance, r.not_reached_count), (Some(Rational::ONE), 1));
        let r = robustness(&[NotReached, NotReached]);
        assert_eq!((r.variance, r.not_reached_count), (None, 2));
    }

    #[test]
    fn convergence_serializes_sentinel() {
        assert_eq!(
            serde_json::to_string(&Convergence::NotReached).unwrap(),
            "\"NOT_REACHED\""
        );
        assert_eq!(
            serde_json::to_string(&Convergence::Reached(3)).unwrap(),
            "3"
        );
    }
}
