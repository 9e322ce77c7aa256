//! Search primitives shared by the harness-level and blueprint-level
//! strategies. A space is a mixed-radix grid; the first field is the most
//! significant digit of the enumeration index.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::Verdict;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Grid {
    radices: Vec<usize>,
}

impl Grid {
    pub fn new(radices: Vec<usize>) -> Self {
        assert!(radices.iter().all(|r| *r > 0), "empty field");
        Grid { radices }
    }

    pub fn size(&self) -> usize {
        self.radices.iter().product()
    }

    pub fn encode(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(&self.radices)
            .fold(0, |acc, (c, r)| acc * r + c)
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut coords = vec![0; self.radices.len()];
        for (slot, r) in coords.iter_mut().zip(&self.radices).rev() {
            *slot = index % r;
            index /= r;
        }
        coords
    }

    /// Single-field neighbors: the next value up, then the next value down.
    pub fn neighbors(&self, coords: &[usize], field: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::with_capacity(2);
        let c = coords[field];
        if c + 1 < self.radices[field] {
            let mut n = coords.to_vec();
            n[field] = c + 1;
            out.push(n);
        }
        if c > 0 {
            let mut n = coords.to_vec();
            n[field] = c - 1;
            out.push(n);
        }
        out
    }

    pub fn fields(&self) -> usize {
        self.radices.len()
    }
}

/// What a hill climber does once every single-field neighbor of the best
/// point has been tried.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fallback {
    /// Next unseen point in enumeration order.
    Enumeration,
    /// Seeded uniform draw among unseen points.
    Random,
}

impl Fallback {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "enumeration" => Some(Fallback::Enumeration),
            "random" => Some(Fallback::Random),
            _ => None,
        }
    }
}

pub(crate) fn next_exhaustive(grid: &Grid, seen: &BTreeSet<usize>) -> Option<usize> {
    (0..grid.size()).find(|i| !seen.contains(i))
}

pub(crate) fn next_random(grid: &Grid, seen: &BTreeSet<usize>, seed: u64) -> Option<usize> {
    let unseen: Vec<usize> = (0..grid.size()).filter(|i| !seen.contains(i)).collect();
    if unseen.is_empty() {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Some(unseen[rng.random_range(0..unseen.len())])
}

/// The most recent history entry as seen by the climber.
pub(crate) struct LastMove {
    /// Grid coordinates of the executed point, if it lies in the space.
    pub coords: Option<Vec<usize>>,
    pub verdict: Verdict,
}

/// Field whose single mutation of `best` produced `coords`, if exactly one
/// field differs.
pub(crate) fn mutated_field(best: &[usize], coords: &[usize]) -> Option<usize> {
    let mut diff = best
        .iter()
        .zip(coords)
        .enumerate()
        .filter(|(_, (a, b))| a != b);
    let first = diff.next()?.0;
    diff.next().is_none().then_some(first)
}

/// One hill-climbing proposal from `best`.
///
/// Fields are tried in order starting at a cursor: field 0 after an
/// improvement (or with no history), otherwise the field after the one
/// whose mutation just regressed. Within a field the upward neighbor comes
/// first. Points already in history are skipped.
pub(crate) fn next_hill_climb(
    grid: &Grid,
    best: &[usize],
    last: Option<&LastMove>,
    seen: &BTreeSet<usize>,
    fallback: Fallback,
    seed: u64,
) -> Option<usize> {
    let n = grid.fields();
    let start = match last {
        Some(LastMove {
            coords: Some(c),
            verdict: Verdict::Regressed,
        }) => mutated_field(best, c).map_or(0, |f| (f + 1) % n),
        _ => 0,
    };
    climb_from(grid, best, start, seen, fallback, seed)
}

/// Tries the unseen single-field neighbors of `best`, fields in cyclic
/// order from `start`, then falls back.
pub(crate) fn climb_from(
    grid: &Grid,
    best: &[usize],
    start: usize,
    seen: &BTreeSet<usize>,
    fallback: Fallback,
    seed: u64,
) -> Option<usize> {
    let n = grid.fields();
    for offset in 0..n {
        let field = (start + offset) % n;
        for cand in grid.neighbors(best, field) {
            let idx = grid.encode(&cand);
            if !seen.contains(&idx) {
                return Some(idx);
            }
        }
    }
    match fallback {
        Fallback::Enumeration => next_exhaustive(grid, seen),
        Fallback::Random => next_random(grid, seen, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_decode_round_trip() {
        let g = Grid::new(vec![7, 3, 2, 2]);
        assert_eq!(g.size(), 84);
        for i in 0..g.size() {
            assert_eq!(g.encode(&g.decode(i)), i);
        }
        assert_eq!(g.decode(0), vec![0, 0, 0, 0]);
        assert_eq!(g.decode(1), vec![0, 0, 0, 1]);
        assert_eq!(g.decode(4), vec![0, 1, 0, 0]);
        assert_eq!(g.decode(12), vec![1, 0, 0, 0]);
    }

    #[test]
    fn neighbors_up_then_down() {
        let g = Grid::new(vec![7, 3, 2, 2]);
        assert_eq!(
            g.neighbors(&[0, 1, 0, 0], 1),
            vec![vec![0, 2, 0, 0], vec![0, 0, 0, 0]]
        );
        assert_eq!(g.neighbors(&[6, 0, 0, 0], 0), vec![vec![5, 0, 0, 0]]);
        assert_eq!(g.neighbors(&[0, 0, 1, 0], 2), vec![vec![0, 0, 0, 0]]);
    }

    #[test]
    fn climber_moves_to_next_field_after_regression() {
        let g = Grid::new(vec![7, 3, 2, 2]);
        let best = vec![2, 0, 0, 0];
        let tried = vec![3, 0, 0, 0];
        let seen = BTreeSet::from([g.encode(&best), g.encode(&tried)]);
        let last = LastMove {
            coords: Some(tried),
            verdict: Verdict::Regressed,
        };
        let next =
            next_hill_climb(&g, &best, Some(&last), &seen, Fallback::Enumeration, 0).unwrap();
        assert_eq!(g.decode(next), vec![2, 1, 0, 0]);

        // After an improvement the cursor restarts at the first field.
        let last = LastMove {
            coords: Some(best.clone()),
            verdict: Verdict::Improved,
        };
        let next =
            next_hill_climb(&g, &best, Some(&last), &seen, Fallback::Enumeration, 0).unwrap();
        assert_eq!(g.decode(next), vec![1, 0, 0, 0]);
    }

    #[test]
    fn climber_falls_back_when_neighborhood_exhausted() {
        let g = Grid::new(vec![2, 2]);
        let best = vec![0, 0];
        let seen = BTreeSet::from([0, 1, 2]);
        assert_eq!(
            next_hill_climb(&g, &best, None, &seen, Fallback::Enumeration, 0),
            Some(3)
        );
        let all = BTreeSet::from([0, 1, 2, 3]);
        assert_eq!(
            next_hill_climb(&g, &best, None, &all, Fallback::Random, 9),
            None
        );
    }

    #[test]
    fn random_never_repeats_and_is_seeded() {
        let g = Grid::new(vec![5, 4]);
        let mut seen = BTreeSet::new();
        let mut order = Vec::new();
        for k in 0..20u64 {
            let i = next_random(&g, &seen, k).unwrap();
            assert!(seen.insert(i));
            order.push(i);
        }
        assert_eq!(next_random(&g, &seen, 0), None);
        let mut seen2 = BTreeSet::new();
        for (k, expected) in order.iter().enumerate() {
            let i = next_random(&g, &seen2, k as u64).unwrap();
            assert_eq!(i, *expected);
            seen2.insert(i);
        }
    }
}
