//! Finite blueprint spaces and the builtin meta-evolution strategies.
//!
//! A meta space varies four blueprint fields, in this field order:
//! initial harness, strategy kind, strategy params, K. Every other field
//! comes from the template blueprint.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::search::{climb_from, mutated_field, next_exhaustive, Fallback, Grid};
use super::templates;
use crate::meta::MetaHistoryEntry;
use crate::model::{Blueprint, Harness, Scalar, StrategyKind, Verdict, Violation};
use crate::protocol::{AgentError, MetaEvolution, MetaEvolveRequest, Proposal};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaSpace {
    pub template: Blueprint,
    pub initial_harnesses: Vec<Harness>,
    pub kinds: Vec<StrategyKind>,
    pub params: Vec<BTreeMap<String, Scalar>>,
    #[serde(rename = "K")]
    pub k_values: Vec<u32>,
}

impl MetaSpace {
    /// The 12-point reference space: {minimal, rich} initial harness ×
    /// {random, hill_climb, exhaustive} × default params × K ∈ {8, 16}.
    pub fn reference() -> Self {
        MetaSpace {
            template: templates::blueprint(StrategyKind::Random, templates::minimal_harness(), 8),
            initial_harnesses: vec![templates::minimal_harness(), templates::rich_harness()],
            kinds: vec![
                StrategyKind::Random,
                StrategyKind::HillClimb,
                StrategyKind::Exhaustive,
            ],
            params: vec![BTreeMap::new()],
            k_values: vec![8, 16],
        }
    }

    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        for (name, len) in [
            ("initial_harnesses", self.initial_harnesses.len()),
            ("kinds", self.kinds.len()),
            ("params", self.params.len()),
            ("K", self.k_values.len()),
        ] {
            if len == 0 {
                out.push(Violation::new(name, "at least one value required"));
            }
        }
        if self.kinds.contains(&StrategyKind::External) {
            out.push(Violation::new(
                "kinds",
                "external strategies cannot be enumerated",
            ));
        }
        if out.is_empty() {
            for i in 0..self.size() {
                if let Err(v) = self.blueprint_at(i).validate() {
                    out.extend(
                        v.into_iter()
                            .map(|v| Violation::new(format!("point[{i}].{}", v.path), v.message)),
                    );
                }
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    pub(crate) fn grid(&self) -> Grid {
        Grid::new(vec![
            self.initial_harnesses.len(),
            self.kinds.len(),
            self.params.len(),
            self.k_values.len(),
        ])
    }

    pub fn size(&self) -> usize {
        self.grid().size()
    }

    fn coords(&self, bp: &Blueprint) -> Option<Vec<usize>> {
        Some(vec![
            self.initial_harnesses
                .iter()
                .position(|h| *h == bp.initial_harness)?,
            self.kinds
                .iter()
                .position(|k| *k == bp.evolution_strategy.kind)?,
            self.params
                .iter()
                .position(|p| *p == bp.evolution_strategy.params)?,
            self.k_values.iter().position(|k| *k == bp.loop_config.k)?,
        ])
    }

    pub fn index_of(&self, bp: &Blueprint) -> Option<usize> {
        self.coords(bp).map(|c| self.grid().encode(&c))
    }

    fn materialize(&self, coords: &[usize], template: &Blueprint) -> Blueprint {
        let mut bp = template.clone();
        bp.initial_harness = self.initial_harnesses[coords[0]].clone();
        bp.evolution_strategy.kind = self.kinds[coords[1]];
        bp.evolution_strategy.command = None;
        bp.evolution_strategy.params = self.params[coords[2]].clone();
        bp.loop_config.k = self.k_values[coords[3]];
        bp
    }

    pub fn blueprint_at(&self, index: usize) -> Blueprint {
        self.materialize(&self.grid().decode(index), &self.template)
    }

    pub fn enumerate(&self) -> impl Iterator<Item = Blueprint> + '_ {
        (0..self.size()).map(|i| self.blueprint_at(i))
    }

    fn seen(&self, meta_history: &[MetaHistoryEntry]) -> BTreeSet<usize> {
        meta_history
            .iter()
            .filter_map(|e| self.index_of(&e.blueprint))
            .collect()
    }
}

pub fn meta_evolve_exhaustive(
    space: &MetaSpace,
    meta_history: &[MetaHistoryEntry],
    best: &Blueprint,
) -> Proposal<Blueprint> {
    let grid = space.grid();
    match next_exhaustive(&grid, &space.seen(meta_history)) {
        Some(i) => Proposal::Next(space.materialize(&grid.decode(i), best)),
        None => Proposal::SpaceExhausted,
    }
}

/// Single-field mutation of `best` over the fields initial harness,
/// kind, params, K, skipping blueprints already run.
///
/// The field cursor continues after the field whose mutation produced the
/// last round, whether that round improved or regressed; with no such
/// mutation it starts at the first field. After a kind switch pays off,
/// the climber therefore tunes the new kind's params before touching the
/// kind again.
pub fn meta_evolve_hill_climb(
    space: &MetaSpace,
    meta_history: &[MetaHistoryEntry],
    best: &Blueprint,
    seed: u64,
) -> Proposal<Blueprint> {
    let grid = space.grid();
    let seen = space.seen(meta_history);
    let next = match space.coords(best) {
        None => next_exhaustive(&grid, &seen),
        Some(best_coords) => {
            let start = meta_history
                .split_last()
                .and_then(|(last, earlier)| {
                    let coords = space.coords(&last.blueprint)?;
                    let base = match last.verdict {
                        Verdict::Regressed => best_coords.clone(),
                        Verdict::Improved => space.coords(&earliest_best(earlier)?.blueprint)?,
                    };
                    mutated_field(&base, &coords)
                })
                .map_or(0, |f| (f + 1) % grid.fields());
            climb_from(
                &grid,
                &best_coords,
                start,
                &seen,
                Fallback::Enumeration,
                seed,
            )
        }
    };
    match next {
        Some(i) => Proposal::Next(space.materialize(&grid.decode(i), best)),
        None => Proposal::SpaceExhausted,
    }
}

fn earliest_best(meta_history: &[MetaHistoryEntry]) -> Option<&MetaHistoryEntry> {
    meta_history
        .iter()
        .fold(None, |b: Option<&MetaHistoryEntry>, e| match b {
            Some(b) if e.meta_score <= b.meta_score => Some(b),
            _ => Some(e),
        })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetaStrategy {
    HillClimb,
    Exhaustive,
}

impl MetaStrategy {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "hill_climb" => Some(MetaStrategy::HillClimb),
            "exhaustive" => Some(MetaStrategy::Exhaustive),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BuiltinMetaEvolution {
    strategy: MetaStrategy,
    space: MetaSpace,
}

impl BuiltinMetaEvolution {
    pub fn new(strategy: MetaStrategy, space: MetaSpace) -> Self {
        BuiltinMetaEvolution { strategy, space }
    }
}

impl MetaEvolution for BuiltinMetaEvolution {
    fn meta_evolve(
        &mut self,
        request: &MetaEvolveRequest<'_>,
    ) -> Result<Proposal<Blueprint>, AgentError> {
        Ok(match self.strategy {
            MetaStrategy::HillClimb => meta_evolve_hill_climb(
                &self.space,
                request.meta_history,
                request.best,
                request.seed,
            ),
            MetaStrategy::Exhaustive => {
                meta_evolve_exhaustive(&self.space, request.meta_history, request.best)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_space_has_twelve_valid_points() {
        let s = MetaSpace::reference();
        assert_eq!(s.size(), 12);
        assert_eq!(s.validate(), Ok(()));
        assert_eq!(s.blueprint_at(0), s.template);
        for (i, bp) in s.enumerate().enumerate() {
            assert_eq!(s.index_of(&bp), Some(i));
        }
    }

    #[test]
    fn exhaustive_with_empty_history_is_first_point() {
        let s = MetaSpace::reference();
        assert_eq!(
            meta_evolve_exhaustive(&s, &[], &s.template),
            Proposal::Next(s.blueprint_at(0))
        );
    }

    #[test]
    fn hill_climb_without_history_mutates_initial_harness() {
        let s = MetaSpace::reference();
        let Proposal::Next(bp) = meta_evolve_hill_climb(&s, &[], &s.template, 0) else {
            panic!()
        };
        assert_eq!(bp.initial_harness, templates::rich_harness());
        assert_eq!(bp.evolution_strategy.kind, StrategyKind::Random);
    }
}
