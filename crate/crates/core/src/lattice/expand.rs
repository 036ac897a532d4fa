//! Bidirectional layer-by-layer expansion of the feature-set lattice.
//!
//! Each round expands the next layer from the top (children of sets expanded
//! from the top) and then from the bottom (parents of sets expanded from the
//! bottom). A set is skipped when it lies strictly between an expanded subset
//! `Fi` and an expanded superset `Fk` with `alpha * (a(Fi) - e) >= a(Fk)`:
//! under relaxed monotonicity it is then dominated by `Fi`.
//!
//! A larger alpha prunes more from the top, which can remove the superset
//! a smaller alpha would have used to skip a middle node. The expansion for
//! alpha is therefore the union of the single runs for every `alpha' >=
//! alpha`. Runs only change where one of their comparisons flips, so the
//! union is found by sweeping `alpha'` down through those flip points with
//! every trained model cached.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;
use rayon::prelude::*;

use super::{candidate_set_with, CharacterizedFeatureSet, FeatureSet, FeatureUniverse, PruningParams, MAX_FEATURES};
use crate::error::{Error, Result};
use crate::learner::{Learner, TrainedModel};

/// Pairs whose gap exceeds this many features are not enumerated by the
/// covering pass; the per-node sandwich test still catches those sets.
const COVERING_MAX_GAP: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpandOptions {
    pub pruning: PruningParams,
    /// Run the covering pass after every round.
    pub covering: bool,
    /// Train a layer's nodes concurrently when the learner allows it.
    pub parallel: bool,
    /// Abandon the run once this instant has passed.
    pub deadline: Option<Instant>,
}

impl ExpandOptions {
    pub fn new(pruning: PruningParams) -> Self {
        Self {
            pruning,
            covering: true,
            parallel: true,
            deadline: None,
        }
    }
}

/// Expanded (characterized) sets, addressable by mask.
#[derive(Debug, Clone, Default)]
pub struct ExpandedSets {
    universe_size: usize,
    index: HashMap<FeatureSet, usize>,
    sets: Vec<CharacterizedFeatureSet>,
}

impl ExpandedSets {
    pub fn new(universe_size: usize) -> Self {
        Self {
            universe_size,
            ..Self::default()
        }
    }

    pub fn from_sets(universe_size: usize, sets: impl IntoIterator<Item = CharacterizedFeatureSet>) -> Self {
        let mut out = Self::new(universe_size);
        for s in sets {
            out.insert(s);
        }
        out
    }

    pub fn insert(&mut self, set: CharacterizedFeatureSet) {
        match self.index.get(&set.features) {
            Some(&i) => self.sets[i] = set,
            None => {
                self.index.insert(set.features, self.sets.len());
                self.sets.push(set);
            }
        }
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn contains(&self, f: FeatureSet) -> bool {
        self.index.contains_key(&f)
    }

    pub fn get(&self, f: FeatureSet) -> Option<&CharacterizedFeatureSet> {
        self.index.get(&f).map(|&i| &self.sets[i])
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Sets in insertion (expansion) order.
    pub fn iter(&self) -> impl Iterator<Item = &CharacterizedFeatureSet> {
        self.sets.iter()
    }

    pub fn masks(&self) -> BTreeSet<FeatureSet> {
        self.index.keys().copied().collect()
    }

    /// Sets sorted by mask.
    pub fn to_sorted_vec(&self) -> Vec<CharacterizedFeatureSet> {
        let mut v = self.sets.clone();
        v.sort_by_key(|c| c.features);
        v
    }

    /// Largest `a - e` over expanded strict subsets of `f`, with the subset
    /// attaining it (smallest mask on ties).
    fn best_strict_subset(&self, f: FeatureSet, e: f64) -> Option<(f64, FeatureSet)> {
        let score = |c: &CharacterizedFeatureSet| (c.accuracy - e, c.features);
        let better = |x: (f64, FeatureSet), y: (f64, FeatureSet)| {
            if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) {
                y
            } else {
                x
            }
        };
        if (1usize << f.len()) < self.sets.len() {
            f.subsets()
                .filter(|&s| s != f)
                .filter_map(|s| self.get(s))
                .map(score)
                .reduce(better)
        } else {
            self.sets
                .iter()
                .filter(|c| c.features.is_strict_subset_of(f))
                .map(score)
                .reduce(better)
        }
    }

    /// Smallest accuracy over expanded strict supersets of `f`.
    fn worst_strict_superset(&self, f: FeatureSet) -> Option<f64> {
        let missing = FeatureSet::full(self.universe_size).difference(f);
        if (1usize << missing.len()) < self.sets.len() {
            missing
                .subsets()
                .filter(|s| !s.is_empty())
                .filter_map(|s| self.get(f.union(s)))
                .map(|c| c.accuracy)
                .reduce(f64::min)
        } else {
            self.sets
                .iter()
                .filter(|c| f.is_strict_subset_of(c.features))
                .map(|c| c.accuracy)
                .reduce(f64::min)
        }
    }
}

/// Start of the alpha sweep; every comparison with a positive left side
/// holds here.
const ALPHA_CEILING: f64 = 1e12;

/// Collects, over the comparisons `alpha * lower >= upper` that held in a
/// run, the largest alpha at which one of them would fail.
#[derive(Debug, Default)]
struct FlipPoints {
    next: Option<f64>,
}

impl FlipPoints {
    fn record(&mut self, lower: f64, upper: f64) {
        if lower.is_nan() || lower <= 0.0 {
            return;
        }
        let mut x = upper / lower;
        while x * lower >= upper {
            x = x.next_down();
        }
        while x.next_up() * lower < upper {
            x = x.next_up();
        }
        self.next = Some(self.next.map_or(x, |n| n.max(x)));
    }
}

/// `(max a(Fi) - e, min a(Fk), Fi)` over expanded strict subsets and
/// supersets.
fn sandwich_bounds(f: FeatureSet, expanded: &ExpandedSets, params: &PruningParams) -> Option<(f64, f64, FeatureSet)> {
    let (lower, witness) = expanded.best_strict_subset(f, params.e)?;
    Some((lower, expanded.worst_strict_superset(f)?, witness))
}

/// Whether `f` lies strictly between expanded sets `Fi ⊂ f ⊂ Fk` with
/// `alpha * (a(Fi) - e) >= a(Fk)`. With `e = 0` this is the plain sandwich
/// test.
pub fn is_sandwiched(f: FeatureSet, expanded: &ExpandedSets, params: &PruningParams) -> bool {
    sandwich_bounds(f, expanded, params).is_some_and(|(lower, upper, _)| params.alpha * lower >= upper)
}

/// Emits `(set, lower)` for every unexpanded set strictly between the two.
fn between(lower: FeatureSet, upper: FeatureSet, out: &mut impl FnMut(FeatureSet, FeatureSet), expanded: &ExpandedSets) {
    let gap = upper.difference(lower);
    if gap.len() < 2 || gap.len() > COVERING_MAX_GAP {
        return;
    }
    for s in gap.subsets().filter(|&s| !s.is_empty() && s != gap) {
        let f = lower.union(s);
        if !expanded.contains(f) {
            out(f, lower);
        }
    }
}

/// Unexpanded sets that the covering argument rules out, given the current
/// top and bottom frontiers.
///
/// From the bottom: if the top-frontier supersets of `Fi` that it dominates
/// jointly cover the universe, or if `Fi` dominates every top-frontier set
/// containing it, everything strictly between `Fi` and those sets is pruned.
/// From the top, symmetrically, with intersections in place of unions.
pub fn covering_prunable(
    frontier_top: &BTreeSet<FeatureSet>,
    frontier_bottom: &BTreeSet<FeatureSet>,
    expanded: &ExpandedSets,
    params: &PruningParams,
) -> BTreeSet<FeatureSet> {
    let mut out = BTreeSet::new();
    covering_pass(
        frontier_top,
        frontier_bottom,
        expanded,
        params,
        &mut HashSet::new(),
        &mut FlipPoints::default(),
        &mut |f, _| {
            out.insert(f);
        },
    );
    out
}

/// Pairs already in `done` have had their interior emitted in an earlier
/// round and are skipped.
fn covering_pass(
    frontier_top: &BTreeSet<FeatureSet>,
    frontier_bottom: &BTreeSet<FeatureSet>,
    expanded: &ExpandedSets,
    params: &PruningParams,
    done: &mut HashSet<(FeatureSet, FeatureSet)>,
    flips: &mut FlipPoints,
    out: &mut impl FnMut(FeatureSet, FeatureSet),
) {
    let full = FeatureSet::full(expanded.universe_size());
    let acc = |f: FeatureSet| expanded.get(f).map(|c| c.accuracy);
    let mut holds = |lo: FeatureSet, hi: FeatureSet| match (acc(lo), acc(hi)) {
        (Some(a_lo), Some(a_hi)) if params.alpha * (a_lo - params.e) >= a_hi => {
            flips.record(a_lo - params.e, a_hi);
            true
        }
        _ => false,
    };

    for &lo in frontier_bottom {
        let above: Vec<FeatureSet> = frontier_top.iter().copied().filter(|&hi| lo.is_strict_subset_of(hi)).collect();
        let family: Vec<FeatureSet> = above.iter().copied().filter(|&hi| holds(lo, hi)).collect();
        if family.is_empty() {
            continue;
        }
        let covers = family.iter().fold(FeatureSet::EMPTY, |u, &f| u.union(f)) == full;
        if covers || family.len() == above.len() {
            for &hi in &family {
                if done.insert((lo, hi)) {
                    between(lo, hi, out, expanded);
                }
            }
        }
    }

    for &hi in frontier_top {
        let below: Vec<FeatureSet> = frontier_bottom.iter().copied().filter(|&lo| lo.is_strict_subset_of(hi)).collect();
        let family: Vec<FeatureSet> = below.iter().copied().filter(|&lo| holds(lo, hi)).collect();
        if family.is_empty() {
            continue;
        }
        let disjoint = family.iter().fold(full, |i, &f| i.intersection(f)).is_empty();
        if disjoint || family.len() == below.len() {
            for &lo in &family {
                if done.insert((lo, hi)) {
                    between(lo, hi, out, expanded);
                }
            }
        }
    }
}

/// Result of one lattice expansion.
#[derive(Debug, Clone)]
pub struct Expansion {
    pub expanded: ExpandedSets,
    pub rounds: usize,
    /// Sets skipped because the sandwich test held when they were reached.
    pub sandwiched: usize,
    /// Sets ruled out in bulk by the covering pass.
    pub covered: usize,
    /// Single runs merged into `expanded`.
    pub runs: usize,
    /// Expanded subsets that the skipped sets of the run at the requested
    /// alpha were measured against.
    pub witnesses: BTreeSet<FeatureSet>,
}

impl Expansion {
    pub fn count(&self) -> usize {
        self.expanded.len()
    }

    /// Candidate set under `alpha`. A witness only gives way to exact
    /// dominance: the sets it stood in for are already within `alpha` of it,
    /// and a second `alpha` step would compound.
    pub fn candidates(&self, alpha: f64) -> Vec<CharacterizedFeatureSet> {
        candidate_set_with(&self.expanded.to_sorted_vec(), alpha, &self.witnesses)
    }
}

enum Direction {
    Top,
    Bottom,
}

struct Expander<'a, L: ?Sized> {
    universe: &'a FeatureUniverse,
    learner: &'a L,
    opts: ExpandOptions,
    cache: Option<&'a Mutex<HashMap<FeatureSet, TrainedModel>>>,
}

impl<L: Learner + ?Sized> Expander<'_, L> {
    fn train_one(&self, f: FeatureSet) -> Result<CharacterizedFeatureSet> {
        if let Some(cache) = self.cache {
            if let Some(hit) = cache.lock().expect("cache poisoned").get(&f).cloned() {
                return Ok(CharacterizedFeatureSet {
                    features: f,
                    accuracy: hit.accuracy,
                    cost: self.universe.cost_of(f),
                    model: hit.handle,
                });
            }
        }
        let c = self.universe.characterize(self.learner, f)?;
        if let Some(cache) = self.cache {
            cache.lock().expect("cache poisoned").insert(
                f,
                TrainedModel {
                    handle: c.model.clone(),
                    accuracy: c.accuracy,
                },
            );
        }
        Ok(c)
    }

    fn train_layer(&self, todo: &[FeatureSet]) -> Result<Vec<CharacterizedFeatureSet>> {
        let results: Vec<Result<CharacterizedFeatureSet>> =
            if self.opts.parallel && self.learner.concurrent_training_safe() && todo.len() > 1 {
                todo.par_iter().map(|&f| self.train_one(f)).collect()
            } else {
                todo.iter().map(|&f| self.train_one(f)).collect()
            };
        results.into_iter().collect()
    }

    fn timed_out(&self) -> bool {
        self.opts.deadline.is_some_and(|d| Instant::now() >= d)
    }

    /// Returns `None` if the deadline passed before the lattice was exhausted.
    fn check(&self) -> Result<()> {
        let n = self.universe.len();
        if n > MAX_FEATURES {
            return Err(Error::UniverseTooLarge { got: n, max: MAX_FEATURES });
        }
        if self.learner.num_features() != n {
            return Err(Error::invalid(format!(
                "learner knows {} features but the universe has {n}",
                self.learner.num_features()
            )));
        }
        Ok(())
    }

    /// One run at `self.opts.pruning`. Comparisons that held are recorded in
    /// `flips`.
    fn run(&self, flips: &mut FlipPoints) -> Result<Option<Expansion>> {
        let n = self.universe.len();
        let params = self.opts.pruning;
        let mut expanded = ExpandedSets::new(n);
        let mut pruned = FixedBitSet::with_capacity(1 << n);
        let mut covered_pairs = HashSet::new();
        let mut witnesses = BTreeSet::new();
        let mut frontier_top = BTreeSet::new();
        let mut frontier_bottom = BTreeSet::new();
        let mut active_top: BTreeSet<FeatureSet> = BTreeSet::from([FeatureSet::full(n)]);
        let mut active_bottom: BTreeSet<FeatureSet> = BTreeSet::from([FeatureSet::EMPTY]);
        let (mut rounds, mut sandwiched, mut covered) = (0, 0, 0);

        while !active_top.is_empty() || !active_bottom.is_empty() {
            if self.timed_out() {
                return Ok(None);
            }
            rounds += 1;
            let mut next_top = BTreeSet::new();
            let mut next_bottom = BTreeSet::new();
            for dir in [Direction::Top, Direction::Bottom] {
                let active = match dir {
                    Direction::Top => &active_top,
                    Direction::Bottom => &active_bottom,
                };
                // Nodes in one layer are pairwise incomparable, so their
                // sandwich verdicts do not depend on each other.
                let mut todo = Vec::new();
                for &f in active {
                    if expanded.contains(f) || pruned.contains(f.mask() as usize) {
                        continue;
                    }
                    let bounds = sandwich_bounds(f, &expanded, &params);
                    if let Some((lower, upper, witness)) = bounds.filter(|(l, u, _)| params.alpha * l >= *u) {
                        flips.record(lower, upper);
                        witnesses.insert(witness);
                        pruned.insert(f.mask() as usize);
                        sandwiched += 1;
                    } else {
                        todo.push(f);
                    }
                }
                for c in self.train_layer(&todo)? {
                    let f = c.features;
                    expanded.insert(c);
                    match dir {
                        Direction::Top => {
                            next_top.extend(f.children());
                            for p in f.parents(n) {
                                frontier_top.remove(&p);
                            }
                            frontier_top.insert(f);
                        }
                        Direction::Bottom => {
                            next_bottom.extend(f.parents(n));
                            for ch in f.children() {
                                frontier_bottom.remove(&ch);
                            }
                            frontier_bottom.insert(f);
                        }
                    }
                }
            }
            if self.opts.covering {
                let mut newly = Vec::new();
                covering_pass(&frontier_top, &frontier_bottom, &expanded, &params, &mut covered_pairs, flips, &mut |f, w| {
                    newly.push((f, w))
                });
                for (f, witness) in newly {
                    if !pruned.put(f.mask() as usize) {
                        covered += 1;
                        witnesses.insert(witness);
                    }
                }
            }
            active_top = next_top;
            active_bottom = next_bottom;
        }
        Ok(Some(Expansion {
            expanded,
            rounds,
            sandwiched,
            covered,
            runs: 1,
            witnesses,
        }))
    }

    /// Sweeps alpha down from the ceiling and hands `on_stop` the union of
    /// all runs at or above each alpha of the descending `stops`. Returns
    /// false if the deadline cut the sweep short.
    fn sweep(&self, stops: &[f64], mut on_stop: impl FnMut(f64, Expansion)) -> Result<bool> {
        let mut alpha = ALPHA_CEILING.max(stops[0]);
        let mut union = ExpandedSets::new(self.universe.len());
        let mut runs = 0;
        let mut k = 0;
        loop {
            let mut flips = FlipPoints::default();
            let single = Expander {
                opts: ExpandOptions {
                    pruning: PruningParams { alpha, ..self.opts.pruning },
                    ..self.opts
                },
                ..*self
            };
            let Some(run) = single.run(&mut flips)? else {
                return Ok(false);
            };
            runs += 1;
            for c in run.expanded.iter() {
                if !union.contains(c.features) {
                    union.insert(c.clone());
                }
            }
            // Every stop above the next flip point would repeat this run.
            while k < stops.len() && flips.next.is_none_or(|x| x < stops[k]) {
                on_stop(
                    stops[k],
                    Expansion {
                        expanded: union.clone(),
                        runs,
                        ..run.clone()
                    },
                );
                k += 1;
            }
            let saturated = union.len() == 1 << self.universe.len();
            match flips.next {
                Some(next) if k < stops.len() && !saturated => alpha = next,
                Some(_) if k < stops.len() => {
                    for &stop in &stops[k..] {
                        on_stop(stop, Expansion { expanded: union.clone(), runs, ..run.clone() });
                    }
                    return Ok(true);
                }
                _ => return Ok(true),
            }
        }
    }
}

/// Expands the lattice over `universe` and returns every characterized set.
/// The empty set and the full universe are always expanded.
pub fn expand_enumerate<L: Learner + ?Sized>(
    universe: &FeatureUniverse,
    learner: &L,
    opts: &ExpandOptions,
) -> Result<Expansion> {
    let cache = Mutex::new(HashMap::new());
    let expander = Expander {
        universe,
        learner,
        opts: ExpandOptions { deadline: None, ..*opts },
        cache: Some(&cache),
    };
    expander.check()?;
    // A run that reaches every set already is the union.
    let single = expander.run(&mut FlipPoints::default())?.expect("no deadline was set");
    if single.count() == 1 << universe.len() {
        return Ok(single);
    }
    let mut out = None;
    expander.sweep(&[opts.pruning.alpha], |_, e| out = Some(e))?;
    Ok(out.expect("a sweep without deadline reaches every stop"))
}

/// A single bidirectional run at `opts.pruning.alpha`, without merging the
/// runs for larger alphas.
pub fn expand_single<L: Learner + ?Sized>(universe: &FeatureUniverse, learner: &L, opts: &ExpandOptions) -> Result<Expansion> {
    let expander = Expander {
        universe,
        learner,
        opts: ExpandOptions { deadline: None, ..*opts },
        cache: None,
    };
    expander.check()?;
    Ok(expander.run(&mut FlipPoints::default())?.expect("no deadline was set"))
}

/// Outcome of [`expand_progressive`].
#[derive(Debug, Clone)]
pub struct ProgressiveOutcome {
    /// Smallest alpha whose expansion finished within the budget.
    pub alpha: f64,
    pub expansion: Expansion,
    /// `(alpha, expanded count)` for every completed run, in schedule order.
    pub completed: Vec<(f64, usize)>,
    /// Distinct learner calls across all runs.
    pub trainings: usize,
}

/// Runs the expansion for each alpha of a descending schedule until the
/// wall-clock budget runs out, reusing every trained model across runs.
/// Returns `None` if not even the first alpha completes.
pub fn expand_progressive<L: Learner + ?Sized>(
    universe: &FeatureUniverse,
    learner: &L,
    schedule: &[f64],
    e: f64,
    covering: bool,
    budget: Duration,
) -> Result<Option<ProgressiveOutcome>> {
    if schedule.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::invalid("alpha schedule must be descending"));
    }
    if schedule.is_empty() {
        return Err(Error::invalid("alpha schedule is empty"));
    }
    for &alpha in schedule {
        PruningParams::new(alpha, e)?;
    }
    let cache = Mutex::new(HashMap::new());
    let expander = Expander {
        universe,
        learner,
        opts: ExpandOptions {
            pruning: PruningParams::new(schedule[0], e)?,
            covering,
            parallel: true,
            deadline: Some(Instant::now() + budget),
        },
        cache: Some(&cache),
    };
    expander.check()?;
    let mut best: Option<ProgressiveOutcome> = None;
    expander.sweep(schedule, |alpha, expansion| {
        let mut completed = best.take().map(|b| b.completed).unwrap_or_default();
        completed.push((alpha, expansion.count()));
        best = Some(ProgressiveOutcome {
            alpha,
            expansion,
            completed,
            trainings: 0,
        });
    })?;
    let trainings = cache.lock().expect("cache poisoned").len();
    Ok(best.map(|b| ProgressiveOutcome { trainings, ..b }))
}

#[cfg(test)]
mod tests {
    use super::super::toy::{set, universe, Toy};
    use super::*;
    use crate::costpoly::CostPolynomial;
    use crate::learner::{sample_synthetic_config, Combiner, NoisyOracle};

    fn expand(alpha: f64, e: f64, covering: bool) -> Expansion {
        let mut opts = ExpandOptions::new(PruningParams::new(alpha, e).unwrap());
        opts.covering = covering;
        expand_enumerate(&universe(), &Toy, &opts).unwrap()
    }

    #[test]
    fn toy_alpha_one_expands_fourteen() {
        let masks = expand(1.0, 0.0, true).expanded.masks();
        assert_eq!(masks.len(), 14);
        assert!(!masks.contains(&set(&[2, 3])));
        assert!(!masks.contains(&set(&[3, 4])));
    }

    #[test]
    fn toy_alpha_one_point_one_expands_eleven() {
        let masks = expand(1.1, 0.0, true).expanded.masks();
        let mut want: BTreeSet<FeatureSet> = [
            vec![],
            vec![1],
            vec![2],
            vec![3],
            vec![4],
            vec![1, 2],
            vec![1, 2, 3],
            vec![1, 2, 4],
            vec![1, 3, 4],
            vec![2, 3, 4],
        ]
        .iter()
        .map(|v| set(v))
        .collect();
        want.insert(FeatureSet::full(4));
        assert_eq!(masks, want);
    }

    #[test]
    fn covering_pass_never_changes_the_result() {
        for alpha in [1.0, 1.05, 1.1, 1.3] {
            assert_eq!(expand(alpha, 0.0, true).expanded.masks(), expand(alpha, 0.0, false).expanded.masks());
        }
        for seed in 0..10 {
            let cfg = sample_synthetic_config(9, 0.6, Combiner::TopK(1), seed).unwrap();
            let u = cfg.universe();
            let mut on = ExpandOptions::new(PruningParams::new(1.2, 0.0).unwrap());
            let a = expand_enumerate(&u, &cfg.oracle(), &on).unwrap();
            on.covering = false;
            let b = expand_enumerate(&u, &cfg.oracle(), &on).unwrap();
            assert_eq!(a.expanded.masks(), b.expanded.masks());
        }
    }

    #[test]
    fn single_feature_universe_expands_both_nodes() {
        let u = FeatureUniverse::new(vec!["only".into()], vec![CostPolynomial::constant(3.0).unwrap()]).unwrap();
        let cfg = sample_synthetic_config(1, 1.0, Combiner::TopK(1), 0).unwrap();
        let ex = expand_enumerate(&u, &cfg.oracle(), &ExpandOptions::new(PruningParams::exact())).unwrap();
        assert_eq!(ex.count(), 2);
    }

    #[test]
    fn sandwich_examples() {
        let u = universe();
        let mk = |sets: &[&[usize]]| {
            ExpandedSets::from_sets(4, sets.iter().map(|s| u.characterize(&Toy, set(s)).unwrap()))
        };
        let ex = mk(&[&[3], &[2, 3, 4]]);
        assert!(is_sandwiched(set(&[2, 3]), &ex, &PruningParams::exact()));

        let ex = mk(&[&[1], &[1, 2, 4]]);
        assert!(!is_sandwiched(set(&[1, 2]), &ex, &PruningParams::new(1.1, 0.0).unwrap()));

        let empty = ExpandedSets::new(4);
        assert!(!is_sandwiched(set(&[1, 2]), &empty, &PruningParams::exact()));

        // Tolerance e makes the test stricter.
        let ex = mk(&[&[3], &[2, 3, 4]]);
        assert!(!is_sandwiched(set(&[2, 3]), &ex, &PruningParams::new(1.0, 0.01).unwrap()));
    }

    /// Brute-force oracle: every set strictly between `lo` and some member of
    /// `family`, minus the expanded ones.
    fn sandwiched_between(lo: FeatureSet, family: &[FeatureSet], expanded: &ExpandedSets) -> BTreeSet<FeatureSet> {
        FeatureSet::full(4)
            .subsets()
            .filter(|f| lo.is_strict_subset_of(*f) && family.iter().any(|hi| f.is_strict_subset_of(*hi)))
            .filter(|f| !expanded.contains(*f))
            .collect()
    }

    #[test]
    fn covering_examples() {
        let u = universe();
        let ex = ExpandedSets::from_sets(
            4,
            [&[3][..], &[1, 2, 3], &[2, 3, 4]].iter().map(|s| u.characterize(&Toy, set(s)).unwrap()),
        );
        // f3 (0.75) with f1f2f3 (0.86) and f2f3f4 (0.75); alpha chosen so both hold.
        let params = PruningParams::new(1.2, 0.0).unwrap();
        let bottom = BTreeSet::from([set(&[3])]);
        let top = BTreeSet::from([set(&[1, 2, 3]), set(&[2, 3, 4])]);
        let got = covering_prunable(&top, &bottom, &ex, &params);
        let want = sandwiched_between(set(&[3]), &[set(&[1, 2, 3]), set(&[2, 3, 4])], &ex);
        assert_eq!(got, want);
        assert_eq!(got.len(), 3);

        // At alpha = 1 only f2f3f4 is dominated by f3. The bottom rule fails
        // (no cover, not all supersets), the top rule holds since f3 is the
        // only frontier subset of f2f3f4.
        let got = covering_prunable(&top, &bottom, &ex, &PruningParams::exact());
        assert_eq!(got, BTreeSet::from([set(&[2, 3]), set(&[3, 4])]));

        // Large e defeats every pair.
        let big_e = PruningParams::new(1.2, 0.5).unwrap();
        assert!(covering_prunable(&top, &bottom, &ex, &big_e).is_empty());
    }

    #[test]
    fn alpha_and_e_monotonicity_on_synthetic() {
        for seed in 0..8 {
            let cfg = sample_synthetic_config(8, 0.6, Combiner::TopK(1), seed).unwrap();
            let u = cfg.universe();
            let noisy = NoisyOracle::new(cfg.oracle(), 0.03, seed);
            let run = |alpha: f64, e: f64| {
                expand_enumerate(&u, &noisy, &ExpandOptions::new(PruningParams::new(alpha, e).unwrap()))
                    .unwrap()
                    .expanded
                    .masks()
            };
            let (lo, hi) = (run(1.0, 0.03), run(1.2, 0.03));
            assert!(hi.is_subset(&lo), "alpha seed {seed}");
            let (tight, loose) = (run(1.1, 0.0), run(1.1, 0.03));
            assert!(tight.is_subset(&loose), "e seed {seed}");
            for m in [&lo, &hi, &tight, &loose] {
                assert!(m.contains(&FeatureSet::EMPTY) && m.contains(&FeatureSet::full(8)));
            }
        }
    }

    #[test]
    fn training_failure_names_the_set() {
        struct Failing;
        impl Learner for Failing {
            fn num_features(&self) -> usize {
                4
            }
            fn train(&self, f: FeatureSet) -> Result<TrainedModel> {
                if f.len() == 3 {
                    Err(Error::invalid("boom"))
                } else {
                    Toy.train(f)
                }
            }
        }
        let err = expand_enumerate(&universe(), &Failing, &ExpandOptions::new(PruningParams::exact())).unwrap_err();
        assert!(matches!(err, Error::TrainingFailed { features, .. } if features.len() == 3));
    }

    #[test]
    fn progressive_reuses_models() {
        let cfg = sample_synthetic_config(8, 0.6, Combiner::TopK(1), 3).unwrap();
        let u = cfg.universe();
        let out = expand_progressive(&u, &cfg.oracle(), &[2.0, 1.5, 1.2, 1.0], 0.0, true, Duration::from_secs(60))
            .unwrap()
            .unwrap();
        assert_eq!(out.alpha, 1.0);
        assert_eq!(out.completed.len(), 4);
        // Every model is trained once; the last (smallest alpha) run subsumes the rest.
        assert_eq!(out.trainings, out.expansion.count());
        assert!(out.completed.windows(2).all(|w| w[0].1 <= w[1].1));
    }
}
