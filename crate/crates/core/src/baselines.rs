//! Reference implementations: exhaustive expansion, an index over every
//! pairwise crossing, and a linear scan.

use rayon::prelude::*;

use crate::costpoly::{intersections_within, DEFAULT_N_MAX, ROOT_TOLERANCE};
use crate::error::{Error, Result};
use crate::lattice::{CharacterizedFeatureSet, FeatureSet, FeatureUniverse};
use crate::learner::Learner;
use crate::polydom::{skyline_at, PolyDomIndex};

/// Default cap on the universe size for exhaustive expansion.
pub const EXPAND_ALL_GUARD: usize = 20;

/// Characterizes every subset of the universe, sorted by mask.
pub fn naive_expand_all<L: Learner + ?Sized>(
    universe: &FeatureUniverse,
    learner: &L,
    guard: usize,
) -> Result<Vec<CharacterizedFeatureSet>> {
    if universe.len() > guard {
        return Err(Error::UniverseTooLarge {
            got: universe.len(),
            max: guard,
        });
    }
    let all: Vec<FeatureSet> = (0..1u32 << universe.len()).map(FeatureSet::from_mask).collect();
    if learner.concurrent_training_safe() {
        all.par_iter().map(|&f| universe.characterize(learner, f)).collect()
    } else {
        all.iter().map(|&f| universe.characterize(learner, f)).collect()
    }
}

/// Index with a breakpoint at every pairwise crossing and the skyline
/// recomputed in every range.
pub fn index_all(candidates: &[CharacterizedFeatureSet]) -> Result<PolyDomIndex> {
    index_all_within(candidates, DEFAULT_N_MAX)
}

pub fn index_all_within(candidates: &[CharacterizedFeatureSet], n_max: f64) -> Result<PolyDomIndex> {
    if candidates.is_empty() {
        return Err(Error::invalid("cannot index an empty candidate set"));
    }
    let mut points = Vec::new();
    for (i, a) in candidates.iter().enumerate() {
        for b in &candidates[i + 1..] {
            match intersections_within(&a.cost, &b.cost, n_max) {
                Ok(rs) => points.extend(rs),
                Err(Error::IdenticalCurves) => {}
                Err(e) => return Err(e),
            }
        }
    }
    let total = points.len();
    points.sort_by(f64::total_cmp);
    points.dedup_by(|b, a| *b - *a <= ROOT_TOLERANCE);

    let mut edges = vec![0.0];
    edges.extend(&points);
    edges.push(n_max.max(points.last().copied().unwrap_or(0.0) + 1.0));
    let skylines = edges
        .windows(2)
        .map(|w| skyline_at(candidates, 0.5 * (w[0] + w[1])).into_iter().cloned().collect())
        .collect();
    PolyDomIndex::from_parts(points, skylines, total)
}

/// Result of a linear scan; `probes` counts candidate evaluations.
#[derive(Debug, Clone, Copy)]
pub struct Lookup<'a> {
    pub entry: &'a CharacterizedFeatureSet,
    pub probes: usize,
}

/// Most accurate candidate within `budget` at size `n`; ties go to the
/// cheaper one, then the smaller mask.
pub fn naive_lookup(candidates: &[CharacterizedFeatureSet], n: f64, budget: f64) -> Result<Lookup<'_>> {
    let mut best: Option<(&CharacterizedFeatureSet, f64)> = None;
    for c in candidates {
        let cost = c.cost.eval(n);
        if cost > budget {
            continue;
        }
        let better = match best {
            None => true,
            Some((b, bc)) => c
                .accuracy
                .total_cmp(&b.accuracy)
                .then(bc.total_cmp(&cost))
                .then(b.features.cmp(&c.features))
                .is_gt(),
        };
        if better {
            best = Some((c, cost));
        }
    }
    best.map(|(entry, _)| Lookup {
        entry,
        probes: candidates.len(),
    })
    .ok_or(Error::NoFeasibleModel { n, budget })
}
