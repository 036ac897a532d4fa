//! The poly-dom index: cost-sorted skylines stored only at the item sizes
//! where the skyline actually changes.
//!
//! Construction sweeps `n` upward from 0 keeping the candidate curves sorted
//! by cost. Only adjacent curves can cross next, so a priority queue of
//! adjacent-pair crossings drives the sweep. At each crossing the two curves
//! swap, and the skyline is recomputed only if the crossing is interesting.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::costpoly::{intersections_within, CostPolynomial, DEFAULT_N_MAX, ROOT_TOLERANCE};
use crate::error::{Error, Result};
use crate::lattice::{CharacterizedFeatureSet, FeatureSet};

/// An online request: item size and extraction budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryBudget {
    pub n: u64,
    pub c: f64,
}

impl QueryBudget {
    pub fn new(n: u64, c: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("item size must be at least 1"));
        }
        if c.is_nan() || c < 0.0 {
            return Err(Error::invalid(format!("budget must be nonnegative, got {c}")));
        }
        Ok(Self { n, c })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IndexStats {
    /// Stored breakpoints.
    pub t_int: usize,
    /// Longest stored skyline.
    pub t_cand: usize,
    /// Crossings the sweep visited (all pairwise crossings for the
    /// index-everything baseline).
    pub total_intersections: usize,
}

/// Sorted breakpoints plus one cost-sorted skyline per half-open range.
/// `skylines[0]` covers `n < breakpoints[0]`; `skylines[i]` covers
/// `[breakpoints[i-1], breakpoints[i])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyDomIndex {
    pub breakpoints: Vec<f64>,
    pub skylines: Vec<Vec<CharacterizedFeatureSet>>,
    #[serde(default)]
    pub stats: IndexStats,
}

/// A query result with the number of comparisons the two binary searches
/// made.
#[derive(Debug, Clone, Copy)]
pub struct QueryAnswer<'a> {
    pub entry: &'a CharacterizedFeatureSet,
    pub range: usize,
    pub probes: usize,
}

/// One crossing visited by the sweep. `cheaper_after` is the curve that is
/// cheaper once the sweep has passed `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitedPoint {
    pub n: f64,
    pub cheaper_after: FeatureSet,
    pub cheaper_before: FeatureSet,
    /// Candidate indices sorted by cost just before the crossing.
    pub order_before: Vec<usize>,
    /// Position of `cheaper_before` in `order_before`.
    pub position: usize,
    pub interesting: bool,
}

/// Skyline at size `n`: candidates sorted by cost (ties: higher accuracy,
/// then smaller mask), keeping each one whose accuracy beats every cheaper
/// one.
pub fn skyline_at(candidates: &[CharacterizedFeatureSet], n: f64) -> Vec<&CharacterizedFeatureSet> {
    let mut sorted: Vec<(f64, &CharacterizedFeatureSet)> = candidates.iter().map(|c| (c.cost.eval(n), c)).collect();
    sorted.sort_by(|(ca, a), (cb, b)| {
        ca.total_cmp(cb)
            .then(b.accuracy.total_cmp(&a.accuracy))
            .then(a.features.cmp(&b.features))
    });
    walk_skyline(sorted.into_iter().map(|(_, c)| c))
}

fn walk_skyline<'a>(sorted: impl Iterator<Item = &'a CharacterizedFeatureSet>) -> Vec<&'a CharacterizedFeatureSet> {
    let mut best = f64::NEG_INFINITY;
    let mut out = Vec::new();
    for c in sorted {
        if c.accuracy > best {
            best = c.accuracy;
            out.push(c);
        }
    }
    out
}

/// Whether swapping the adjacent curves at `position` and `position + 1` of
/// `order_before` changes the skyline.
///
/// Curve 2 sits at `position` (cheaper before the crossing), Curve 1 right
/// above it. Let `m` be the best accuracy strictly below the pair. The
/// skyline changes iff both curves were on it (then Curve 1 must be the more
/// accurate one, and it now hides Curve 2), or only Curve 2 was and Curve 1
/// beats `m`, so it surfaces once it becomes the cheaper of the two.
pub fn classify_intersection(order_before: &[usize], position: usize, accuracy: &[f64], masks: &[FeatureSet]) -> Result<bool> {
    let (c2, c1) = (order_before[position], order_before[position + 1]);
    if accuracy[c1] == accuracy[c2] {
        return Err(Error::AccuracyTie { a: masks[c1], b: masks[c2] });
    }
    Ok(classify(order_before, position, accuracy))
}

fn classify<T: PartialOrd + Copy>(order: &[usize], position: usize, score: &[T]) -> bool {
    let (c2, c1) = (order[position], order[position + 1]);
    let below = order[..position].iter().map(|&i| score[i]).fold(None, |m: Option<T>, s| match m {
        Some(m) if m >= s => Some(m),
        _ => Some(s),
    });
    let beats_below = |s: T| below.is_none_or(|m| s > m);
    let on2 = beats_below(score[c2]);
    let on1 = beats_below(score[c1]) && score[c1] > score[c2];
    match (on1, on2) {
        (true, true) => true,
        (false, true) => beats_below(score[c1]),
        _ => false,
    }
}

#[derive(Debug, PartialEq)]
struct Crossing {
    n: f64,
    lower: usize,
    upper: usize,
}

impl Eq for Crossing {}

impl Ord for Crossing {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n
            .total_cmp(&other.n)
            .then(self.lower.cmp(&other.lower))
            .then(self.upper.cmp(&other.upper))
    }
}

impl PartialOrd for Crossing {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// First size beyond `after` where `upper` becomes strictly cheaper than
/// `lower`. Tangential touches are skipped.
fn next_swap(lower: &CostPolynomial, upper: &CostPolynomial, after: f64, n_max: f64) -> Option<f64> {
    let roots = intersections_within(lower, upper, n_max).ok()?;
    let roots: Vec<f64> = roots.into_iter().filter(|&r| r > after + ROOT_TOLERANCE).collect();
    for (i, &r) in roots.iter().enumerate() {
        let next = roots.get(i + 1).copied().unwrap_or(n_max);
        let probe = if next > r { 0.5 * (r + next) } else { r + 1.0 };
        if upper.eval(probe) < lower.eval(probe) {
            return Some(r);
        }
    }
    None
}

/// Accuracy ranks with exact ties broken toward the smaller mask.
fn accuracy_ranks(candidates: &[CharacterizedFeatureSet]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..candidates.len()).collect();
    idx.sort_by(|&a, &b| {
        candidates[a]
            .accuracy
            .total_cmp(&candidates[b].accuracy)
            .then(candidates[b].features.cmp(&candidates[a].features))
    });
    let mut rank = vec![0; candidates.len()];
    for (r, i) in idx.into_iter().enumerate() {
        rank[i] = r;
    }
    rank
}

struct Sweep {
    index: PolyDomIndex,
    visited: Vec<VisitedPoint>,
}

fn sweep(candidates: &[CharacterizedFeatureSet], n_max: f64, trace: bool) -> Result<Sweep> {
    if candidates.is_empty() {
        return Err(Error::invalid("cannot index an empty candidate set"));
    }
    let ranks = accuracy_ranks(candidates);
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (&candidates[a], &candidates[b]);
        ca.cost
            .cmp_coeffs(&cb.cost)
            .then(cb.accuracy.total_cmp(&ca.accuracy))
            .then(ca.features.cmp(&cb.features))
    });
    let mut pos = vec![0; order.len()];
    for (p, &i) in order.iter().enumerate() {
        pos[i] = p;
    }
    let skyline_of = |order: &[usize]| -> Vec<CharacterizedFeatureSet> {
        walk_skyline(order.iter().map(|&i| &candidates[i])).into_iter().cloned().collect()
    };
    let masks = |s: &[CharacterizedFeatureSet]| s.iter().map(|c| c.features).collect::<Vec<_>>();

    let mut queue = BinaryHeap::new();
    let push = |queue: &mut BinaryHeap<Reverse<Crossing>>, order: &[usize], p: usize, after: f64| {
        if p + 1 < order.len() {
            let (lower, upper) = (order[p], order[p + 1]);
            if let Some(n) = next_swap(&candidates[lower].cost, &candidates[upper].cost, after, n_max) {
                queue.push(Reverse(Crossing { n, lower, upper }));
            }
        }
    };
    for p in 0..order.len().saturating_sub(1) {
        push(&mut queue, &order, p, 0.0);
    }

    let mut breakpoints = Vec::new();
    let mut skylines = vec![skyline_of(&order)];
    let mut visited = Vec::new();
    let mut total = 0;
    // Crossings within the root tolerance of each other form one group; the
    // skyline is recomputed once, after the whole group has been applied.
    let mut group: Option<(f64, bool)> = None;

    let flush = |group: (f64, bool), order: &[usize], breakpoints: &mut Vec<f64>, skylines: &mut Vec<Vec<CharacterizedFeatureSet>>| {
        if group.1 {
            let sky = skyline_of(order);
            if masks(&sky) != masks(skylines.last().expect("initial skyline")) {
                breakpoints.push(group.0);
                skylines.push(sky);
            }
        }
    };

    while let Some(Reverse(Crossing { n, lower, upper })) = queue.pop() {
        let p = pos[lower];
        if p + 1 >= order.len() || order[p + 1] != upper {
            continue;
        }
        total += 1;
        match group {
            Some(g) if n > g.0 + ROOT_TOLERANCE => {
                flush(g, &order, &mut breakpoints, &mut skylines);
                group = Some((n, false));
            }
            None => group = Some((n, false)),
            _ => {}
        }
        let interesting = classify(&order, p, &ranks);
        if trace {
            visited.push(VisitedPoint {
                n,
                cheaper_after: candidates[upper].features,
                cheaper_before: candidates[lower].features,
                order_before: order.clone(),
                position: p,
                interesting,
            });
        }
        if let Some(g) = group.as_mut() {
            g.1 |= interesting;
        }
        order.swap(p, p + 1);
        pos[upper] = p;
        pos[lower] = p + 1;
        if p > 0 {
            push(&mut queue, &order, p - 1, n);
        }
        push(&mut queue, &order, p, n);
        push(&mut queue, &order, p + 1, n);
    }
    if let Some(g) = group {
        flush(g, &order, &mut breakpoints, &mut skylines);
    }

    let stats = IndexStats {
        t_int: breakpoints.len(),
        t_cand: skylines.iter().map(Vec::len).max().unwrap_or(0),
        total_intersections: total,
    };
    Ok(Sweep {
        index: PolyDomIndex {
            breakpoints,
            skylines,
            stats,
        },
        visited,
    })
}

impl PolyDomIndex {
    /// Builds the index over `candidates` for sizes up to the default `N_MAX`.
    pub fn build(candidates: &[CharacterizedFeatureSet]) -> Result<Self> {
        Self::build_within(candidates, DEFAULT_N_MAX)
    }

    pub fn build_within(candidates: &[CharacterizedFeatureSet], n_max: f64) -> Result<Self> {
        Ok(sweep(candidates, n_max, false)?.index)
    }

    /// Builds the index and also returns every crossing the sweep visited.
    pub fn build_traced(candidates: &[CharacterizedFeatureSet], n_max: f64) -> Result<(Self, Vec<VisitedPoint>)> {
        let s = sweep(candidates, n_max, true)?;
        Ok((s.index, s.visited))
    }

    /// Assembles an index from precomputed ranges.
    pub fn from_parts(breakpoints: Vec<f64>, skylines: Vec<Vec<CharacterizedFeatureSet>>, total_intersections: usize) -> Result<Self> {
        let stats = IndexStats {
            t_int: breakpoints.len(),
            t_cand: skylines.iter().map(Vec::len).max().unwrap_or(0),
            total_intersections,
        };
        let index = Self {
            breakpoints,
            skylines,
            stats,
        };
        index.validate()?;
        Ok(index)
    }

    /// Checks the structural invariants, e.g. after loading from JSON.
    pub fn validate(&self) -> Result<()> {
        if self.skylines.len() != self.breakpoints.len() + 1 {
            return Err(Error::invalid("index needs exactly one more skyline than breakpoints"));
        }
        if self.breakpoints.iter().any(|b| !(b.is_finite() && *b > 0.0)) || self.breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("breakpoints must be positive and strictly increasing"));
        }
        for (i, sky) in self.skylines.iter().enumerate() {
            if sky.is_empty() {
                return Err(Error::invalid(format!("skyline {i} is empty")));
            }
            if sky.windows(2).any(|w| w[0].accuracy >= w[1].accuracy) {
                return Err(Error::invalid(format!("skyline {i} is not accuracy-increasing")));
            }
        }
        Ok(())
    }

    pub fn stats(&self) -> IndexStats {
        self.stats
    }

    /// Breakpoints plus total skyline entries.
    pub fn size(&self) -> usize {
        self.breakpoints.len() + self.skylines.iter().map(Vec::len).sum::<usize>()
    }

    /// Upper bound on the comparisons a query makes.
    pub fn probe_bound(&self) -> usize {
        let log2_ceil = |x: usize| if x <= 1 { 0 } else { (usize::BITS - (x - 1).leading_zeros()) as usize };
        log2_ceil(self.breakpoints.len() + 1) + log2_ceil(self.stats.t_cand) + 2
    }

    pub fn query(&self, q: QueryBudget) -> Result<QueryAnswer<'_>> {
        self.query_size(q.n as f64, q.c)
    }

    /// Most accurate stored model whose cost at size `n` is within `c`.
    pub fn query_size(&self, n: f64, c: f64) -> Result<QueryAnswer<'_>> {
        let mut probes = 0;
        let range = partition(self.breakpoints.len(), &mut probes, |i| self.breakpoints[i] <= n);
        let sky = &self.skylines[range];
        let k = partition(sky.len(), &mut probes, |i| sky[i].cost.eval(n) <= c);
        match k.checked_sub(1) {
            Some(i) => Ok(QueryAnswer {
                entry: &sky[i],
                range,
                probes,
            }),
            None => Err(Error::NoFeasibleModel { n, budget: c }),
        }
    }
}

/// Number of leading indices in `0..len` satisfying a monotone predicate.
fn partition(len: usize, probes: &mut usize, pred: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0, len);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        *probes += 1;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
pub(crate) mod fig4 {
    //! Four candidate curves with the crossing pattern of the worked example:
    //! F1 = 3n + 10, F2 = n + 12, F3 = n + 20, F4 = 30.
    use super::*;
    use crate::learner::ModelHandle;

    pub fn candidate(mask: u32, accuracy: f64, coeffs: &[f64]) -> CharacterizedFeatureSet {
        CharacterizedFeatureSet {
            features: FeatureSet::from_mask(mask),
            accuracy,
            cost: CostPolynomial::new(coeffs.to_vec()).unwrap(),
            model: ModelHandle {
                id: format!("m{mask}"),
                feature_set: FeatureSet::from_mask(mask),
            },
        }
    }

    pub fn candidates() -> Vec<CharacterizedFeatureSet> {
        vec![
            candidate(1, 0.7, &[10.0, 3.0]),
            candidate(2, 0.76, &[12.0, 1.0]),
            candidate(4, 0.65, &[20.0, 1.0]),
            candidate(8, 0.8, &[30.0]),
        ]
    }
}
