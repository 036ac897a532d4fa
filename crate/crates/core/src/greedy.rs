//! Greedy feature-addition sequences and anytime retrieval.
//!
//! For each lambda, features are added one at a time, picking the largest
//! `delta_accuracy - lambda * delta_cost` with costs evaluated at a reference
//! item size. All prefixes of all sequences form a cost-sorted skyline. At
//! query time the skyline picks a sequence, which is then executed feature by
//! feature against the actual budget.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{CharacterizedFeatureSet, FeatureSet, FeatureUniverse};
use crate::learner::{Learner, ModelHandle};

/// The lambda grid used by default.
pub const DEFAULT_LAMBDAS: [f64; 12] = [0.0, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0];

/// Relative slack under which two gains count as tied.
const GAIN_TIE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyParams {
    pub lambdas: Vec<f64>,
    pub reference_size: f64,
}

impl GreedyParams {
    pub fn new(lambdas: Vec<f64>, reference_size: f64) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::invalid("at least one lambda is required"));
        }
        if lambdas.iter().any(|l| !l.is_finite()) {
            return Err(Error::invalid("lambdas must be finite"));
        }
        if !(reference_size > 0.0 && reference_size.is_finite()) {
            return Err(Error::invalid("reference size must be positive"));
        }
        Ok(Self {
            lambdas,
            reference_size,
        })
    }
}

/// How a sequence picks its next feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Largest `delta_accuracy - lambda * delta_cost`.
    Lambda(f64),
    /// Largest accuracy gain, ignoring cost.
    Accuracy,
    /// Cheapest feature at the reference size, ignoring accuracy.
    Cost,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Lambda(l) => write!(f, "lambda={l}"),
            Strategy::Accuracy => f.write_str("accuracy"),
            Strategy::Cost => f.write_str("cost"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceStep {
    pub feature: usize,
    pub prefix: CharacterizedFeatureSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedySequence {
    pub strategy: Strategy,
    pub steps: Vec<SequenceStep>,
}

/// A skyline entry: the first `length` steps of `sequence`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrefixEntry {
    pub sequence: usize,
    pub length: usize,
    pub cost: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedySequenceIndex {
    pub universe: FeatureUniverse,
    pub reference_size: f64,
    pub baseline: CharacterizedFeatureSet,
    pub sequences: Vec<GreedySequence>,
    pub skyline: Vec<PrefixEntry>,
    /// Learner calls made while building.
    pub trainings: usize,
}

/// What [`GreedySequenceIndex::query_anytime`] extracted and returns.
#[derive(Debug, Clone, PartialEq)]
pub struct AnytimeAnswer<'a> {
    pub prefix: &'a CharacterizedFeatureSet,
    pub extracted: Vec<usize>,
    pub spent: f64,
    /// The skyline entry that chose the sequence.
    pub pick: PrefixEntry,
    pub probes: usize,
}

impl AnytimeAnswer<'_> {
    pub fn model(&self) -> &ModelHandle {
        &self.prefix.model
    }
}

struct Builder<'a, L: ?Sized> {
    universe: &'a FeatureUniverse,
    learner: &'a L,
    reference_size: f64,
    cache: HashMap<FeatureSet, CharacterizedFeatureSet>,
    trainings: usize,
}

impl<L: Learner + ?Sized> Builder<'_, L> {
    fn characterize(&mut self, f: FeatureSet) -> Result<CharacterizedFeatureSet> {
        if let Some(c) = self.cache.get(&f) {
            return Ok(c.clone());
        }
        let c = self.universe.characterize(self.learner, f)?;
        self.trainings += 1;
        self.cache.insert(f, c.clone());
        Ok(c)
    }

    fn feature_cost(&self, i: usize) -> f64 {
        self.universe.costs[i].eval(self.reference_size)
    }

    fn sequence(&mut self, strategy: Strategy, baseline: &CharacterizedFeatureSet) -> Result<GreedySequence> {
        let n = self.universe.len();
        let mut current = baseline.clone();
        let mut steps = Vec::with_capacity(n);
        while current.features.len() < n {
            let remaining: Vec<usize> = (0..n).filter(|&i| !current.features.contains(i)).collect();
            let mut best: Option<(usize, CharacterizedFeatureSet, f64, f64)> = None;
            for i in remaining {
                let dcost = self.feature_cost(i);
                if strategy == Strategy::Cost {
                    // Accuracy plays no part, so only the winner is trained.
                    if best.as_ref().is_none_or(|b| dcost < b.3) {
                        best = Some((i, current.clone(), 0.0, dcost));
                    }
                    continue;
                }
                let next = self.characterize(current.features.with(i))?;
                let dacc = next.accuracy - current.accuracy;
                let gain = match strategy {
                    Strategy::Lambda(l) => dacc - l * dcost,
                    _ => dacc,
                };
                let better = match &best {
                    None => true,
                    Some((_, _, g, c)) => {
                        let tie = (gain - g).abs() <= GAIN_TIE * gain.abs().max(g.abs()).max(1.0);
                        if tie {
                            dcost < *c
                        } else {
                            gain > *g
                        }
                    }
                };
                if better {
                    best = Some((i, next, gain, dcost));
                }
            }
            let (feature, mut prefix, _, _) = best.expect("at least one feature remains");
            if strategy == Strategy::Cost {
                prefix = self.characterize(current.features.with(feature))?;
            }
            current = prefix.clone();
            steps.push(SequenceStep { feature, prefix });
        }
        Ok(GreedySequence { strategy, steps })
    }

    fn finish(mut self, strategies: &[Strategy]) -> Result<GreedySequenceIndex> {
        if self.universe.is_empty() {
            return Err(Error::invalid("greedy sequences need at least one feature"));
        }
        let baseline = self.characterize(FeatureSet::EMPTY)?;
        let sequences = strategies
            .iter()
            .map(|&s| self.sequence(s, &baseline))
            .collect::<Result<Vec<_>>>()?;
        let skyline = prefix_skyline(&sequences, &baseline, self.reference_size);
        Ok(GreedySequenceIndex {
            universe: self.universe.clone(),
            reference_size: self.reference_size,
            baseline,
            sequences,
            skyline,
            trainings: self.trainings,
        })
    }
}

fn prefix_skyline(sequences: &[GreedySequence], baseline: &CharacterizedFeatureSet, n: f64) -> Vec<PrefixEntry> {
    let mut all = vec![PrefixEntry {
        sequence: 0,
        length: 0,
        cost: baseline.cost.eval(n),
        accuracy: baseline.accuracy,
    }];
    for (s, seq) in sequences.iter().enumerate() {
        for (k, step) in seq.steps.iter().enumerate() {
            all.push(PrefixEntry {
                sequence: s,
                length: k + 1,
                cost: step.prefix.cost.eval(n),
                accuracy: step.prefix.accuracy,
            });
        }
    }
    all.sort_by(|a, b| {
        a.cost
            .total_cmp(&b.cost)
            .then(b.accuracy.total_cmp(&a.accuracy))
            .then(a.sequence.cmp(&b.sequence))
            .then(a.length.cmp(&b.length))
    });
    let mut best = f64::NEG_INFINITY;
    all.into_iter()
        .filter(|e| {
            let keep = e.accuracy > best;
            best = best.max(e.accuracy);
            keep
        })
        .collect()
}

/// One sequence per lambda.
pub fn build_sequences<L: Learner + ?Sized>(universe: &FeatureUniverse, learner: &L, params: &GreedyParams) -> Result<GreedySequenceIndex> {
    let strategies: Vec<Strategy> = params.lambdas.iter().map(|&l| Strategy::Lambda(l)).collect();
    builder(universe, learner, params.reference_size).finish(&strategies)
}

/// A single accuracy-greedy sequence.
pub fn greedy_acc<L: Learner + ?Sized>(universe: &FeatureUniverse, learner: &L, reference_size: f64) -> Result<GreedySequenceIndex> {
    builder(universe, learner, reference_size).finish(&[Strategy::Accuracy])
}

/// A single cost-greedy sequence.
pub fn greedy_cost<L: Learner + ?Sized>(universe: &FeatureUniverse, learner: &L, reference_size: f64) -> Result<GreedySequenceIndex> {
    builder(universe, learner, reference_size).finish(&[Strategy::Cost])
}

fn builder<'a, L: Learner + ?Sized>(universe: &'a FeatureUniverse, learner: &'a L, reference_size: f64) -> Builder<'a, L> {
    Builder {
        universe,
        learner,
        reference_size,
        cache: HashMap::new(),
        trainings: 0,
    }
}

impl GreedySequenceIndex {
    /// Distinct feature sets appearing as nonempty prefixes.
    pub fn unique_prefixes(&self) -> usize {
        self.sequences
            .iter()
            .flat_map(|s| s.steps.iter().map(|st| st.prefix.features))
            .collect::<HashSet<_>>()
            .len()
    }

    pub fn prefix(&self, sequence: usize, length: usize) -> &CharacterizedFeatureSet {
        match length {
            0 => &self.baseline,
            k => &self.sequences[sequence].steps[k - 1].prefix,
        }
    }

    /// Skyline length plus every stored prefix.
    pub fn size(&self) -> usize {
        self.skyline.len() + self.sequences.iter().map(|s| s.steps.len()).sum::<usize>()
    }

    /// Anytime retrieval charging the fitted cost curves at `n`.
    pub fn query_anytime(&self, n: f64, budget: f64) -> AnytimeAnswer<'_> {
        self.query_anytime_with(n, budget, |f, n| self.universe.costs[f].eval(n))
    }

    /// Anytime retrieval with a caller-supplied per-feature cost
    /// `charge(feature, n)`, e.g. measured extraction times.
    pub fn query_anytime_with(&self, n: f64, budget: f64, mut charge: impl FnMut(usize, f64) -> f64) -> AnytimeAnswer<'_> {
        let mut probes = 0;
        let (mut lo, mut hi) = (0, self.skyline.len());
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            probes += 1;
            if self.skyline[mid].cost <= budget {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let pick = self.skyline[lo.saturating_sub(1)];
        let seq = &self.sequences[pick.sequence];
        let mut spent = 0.0;
        let mut extracted = Vec::new();
        for step in &seq.steps {
            let c = charge(step.feature, n);
            if spent + c > budget {
                break;
            }
            spent += c;
            extracted.push(step.feature);
        }
        AnytimeAnswer {
            prefix: self.prefix(pick.sequence, extracted.len()),
            extracted,
            spent,
            pick,
            probes,
        }
    }
}
