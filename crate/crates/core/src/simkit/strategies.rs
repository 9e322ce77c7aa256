//! Reference evolution strategies over a [`HarnessSpace`]. Each one is a
//! pure function of (history, best harness, seed), and none proposes a
//! harness already present in the history.

use std::collections::BTreeSet;

use super::search::{next_exhaustive, next_hill_climb, next_random, Fallback, LastMove};
use super::HarnessSpace;
use crate::model::blueprint::STRATEGY_PARAM_FALLBACK;
use crate::model::{EvolutionStrategy, Harness, HistoryEntry, Scalar, StrategyKind, Violation};
use crate::protocol::{AgentError, Evolution, EvolveRequest, Proposal};

fn seen_indices(space: &HarnessSpace, history: &[HistoryEntry]) -> BTreeSet<usize> {
    history
        .iter()
        .filter_map(|e| space.index_of_harness(&e.harness))
        .collect()
}

fn materialize(
    space: &HarnessSpace,
    index: Option<usize>,
    template: &Harness,
) -> Proposal<Harness> {
    match index {
        Some(i) => Proposal::Next(space.harness_at(i, template)),
        None => Proposal::SpaceExhausted,
    }
}

/// Next unseen harness in enumeration order.
pub fn evolve_exhaustive(
    space: &HarnessSpace,
    history: &[HistoryEntry],
    best: &Harness,
) -> Proposal<Harness> {
    let seen = seen_indices(space, history);
    materialize(space, next_exhaustive(&space.grid(), &seen), best)
}

/// Seeded uniform draw among unseen harnesses.
pub fn evolve_random(
    space: &HarnessSpace,
    history: &[HistoryEntry],
    best: &Harness,
    seed: u64,
) -> Proposal<Harness> {
    let seen = seen_indices(space, history);
    materialize(space, next_random(&space.grid(), &seen, seed), best)
}

/// Single-field mutation of `best` in field order tools, depth, tier,
/// style, skipping anything already tried.
pub fn evolve_hill_climb(
    space: &HarnessSpace,
    history: &[HistoryEntry],
    best: &Harness,
    seed: u64,
    fallback: Fallback,
) -> Proposal<Harness> {
    let grid = space.grid();
    let seen = seen_indices(space, history);
    let Some(best_coords) = space.project(best).and_then(|p| space.coords(&p)) else {
        return materialize(space, next_exhaustive(&grid, &seen), best);
    };
    let last = history.last().map(|e| LastMove {
        coords: space.project(&e.harness).and_then(|p| space.coords(&p)),
        verdict: e.verdict,
    });
    materialize(
        space,
        next_hill_climb(&grid, &best_coords, last.as_ref(), &seen, fallback, seed),
        best,
    )
}

/// A builtin evolution agent as configured by a blueprint strategy.
#[derive(Clone, Debug)]
pub struct BuiltinEvolution {
    kind: StrategyKind,
    space: HarnessSpace,
    fallback: Fallback,
}

impl BuiltinEvolution {
    pub fn new(kind: StrategyKind, space: HarnessSpace, fallback: Fallback) -> Self {
        assert!(
            kind != StrategyKind::External,
            "external strategies are not builtin"
        );
        BuiltinEvolution {
            kind,
            space,
            fallback,
        }
    }

    pub fn from_strategy(strategy: &EvolutionStrategy) -> Result<Self, Violation> {
        if strategy.kind == StrategyKind::External {
            return Err(Violation::new(
                "evolution_strategy.kind",
                "external strategies are not builtin",
            ));
        }
        let space = HarnessSpace::from_params(&strategy.params)?;
        let fallback = match strategy.params.get(STRATEGY_PARAM_FALLBACK) {
            None => Fallback::Enumeration,
            Some(Scalar::Text(s)) => Fallback::from_name(s).ok_or_else(|| {
                Violation::new(
                    "evolution_strategy.params.fallback",
                    format!("unknown fallback {s:?}"),
                )
            })?,
            Some(other) => {
                return Err(Violation::new(
                    "evolution_strategy.params.fallback",
                    format!("expected a name, got {other}"),
                ))
            }
        };
        Ok(Self::new(strategy.kind, space, fallback))
    }

    pub fn space(&self) -> &HarnessSpace {
        &self.space
    }

    pub fn propose(
        &self,
        history: &[HistoryEntry],
        best: &Harness,
        seed: u64,
    ) -> Proposal<Harness> {
        match self.kind {
            StrategyKind::Random => evolve_random(&self.space, history, best, seed),
            StrategyKind::HillClimb => {
                evolve_hill_climb(&self.space, history, best, seed, self.fallback)
            }
            StrategyKind::Exhaustive => evolve_exhaustive(&self.space, history, best),
            StrategyKind::External => unreachable!("rejected in constructor"),
        }
    }
}

impl Evolution for BuiltinEvolution {
    fn evolve(&mut self, request: &EvolveRequest<'_>) -> Result<Proposal<Harness>, AgentError> {
        Ok(self.propose(request.history, request.best, request.seed))
    }
}
