//! Synthetic accuracy oracle: per-feature accuracies combined by the top-k
//! noisy-or rule, with cost curves sampled from fixed coefficient boxes.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Learner, ModelHandle, TrainedModel};
use crate::costpoly::CostPolynomial;
use crate::error::{Error, Result};
use crate::lattice::{FeatureSet, FeatureUniverse, MAX_FEATURES};

/// Accuracy of the featureless baseline.
pub const BASELINE_ACCURACY: f64 = 0.5;

/// How many of a set's most accurate features the combiner uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combiner {
    TopK(usize),
    All,
}

impl fmt::Display for Combiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Combiner::TopK(k) => write!(f, "{k}"),
            Combiner::All => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for Combiner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "all" => Ok(Combiner::All),
            other => match other.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(Combiner::TopK(k)),
                _ => Err(Error::invalid(format!("combiner parameter must be >= 1 or 'inf', got {other:?}"))),
            },
        }
    }
}

impl Serialize for Combiner {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Combiner::TopK(k) => s.serialize_u64(*k as u64),
            Combiner::All => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Combiner {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(usize),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(0) => Err(serde::de::Error::custom("combiner parameter must be >= 1")),
            Raw::Num(k) => Ok(Combiner::TopK(k)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticFeature {
    pub accuracy: f64,
    pub helpful: bool,
    pub cost: CostPolynomial,
}

/// A reproducible synthetic workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub num_features: usize,
    pub p: f64,
    pub k: Combiner,
    pub seed: u64,
    pub features: Vec<SyntheticFeature>,
}

impl SyntheticConfig {
    pub fn universe(&self) -> FeatureUniverse {
        FeatureUniverse::new(
            (0..self.num_features).map(|i| format!("f{i}")).collect(),
            self.features.iter().map(|f| f.cost.clone()).collect(),
        )
        .expect("synthetic configs respect the universe cap")
    }

    pub fn oracle(&self) -> SyntheticOracle<'_> {
        SyntheticOracle { config: self }
    }

    pub fn accuracy(&self, features: FeatureSet) -> f64 {
        accuracy_combiner(features, self)
    }
}

/// Top-k noisy-or: `1 - prod(1 - a(f))` over the `k` most accurate members.
/// The empty set scores the random baseline of 0.5.
pub fn accuracy_combiner(features: FeatureSet, config: &SyntheticConfig) -> f64 {
    if features.is_empty() {
        return BASELINE_ACCURACY;
    }
    let mut accs: Vec<f64> = features.iter().map(|i| config.features[i].accuracy).collect();
    accs.sort_by(|a, b| b.total_cmp(a));
    let take = match config.k {
        Combiner::TopK(k) => k.min(accs.len()),
        Combiner::All => accs.len(),
    };
    1.0 - accs[..take].iter().map(|a| 1.0 - a).product::<f64>()
}

/// Samples per-feature costs `a0 + a1 n + a2 n^2` with `a0 in [0,100]`,
/// `a1 in [0,(100-a0)/10]`, `a2 in [0,(100-a0-a1)/4]`, and accuracies from
/// `U[0.7,0.8]` (helpful, probability `p`) or `U[0.5,0.6]`.
pub fn sample_synthetic_config(num_features: usize, p: f64, k: Combiner, seed: u64) -> Result<SyntheticConfig> {
    if num_features == 0 {
        return Err(Error::invalid("need at least one feature"));
    }
    if num_features > MAX_FEATURES {
        return Err(Error::UniverseTooLarge {
            got: num_features,
            max: MAX_FEATURES,
        });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("helpful probability {p} is outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = (0..num_features)
        .map(|_| {
            let a0 = rng.gen_range(0.0..=100.0);
            let a1 = rng.gen_range(0.0..=(100.0 - a0) / 10.0);
            let a2 = rng.gen_range(0.0..=(100.0 - a0 - a1) / 4.0);
            let helpful = rng.gen_bool(p);
            let accuracy = if helpful {
                rng.gen_range(0.7..=0.8)
            } else {
                rng.gen_range(0.5..=0.6)
            };
            SyntheticFeature {
                accuracy,
                helpful,
                cost: CostPolynomial::new(vec![a0, a1, a2]).expect("sampled coefficients are nonnegative"),
            }
        })
        .collect();
    Ok(SyntheticConfig {
        num_features,
        p,
        k,
        seed,
        features,
    })
}

/// Learner that ignores data and returns the combiner value.
#[derive(Debug, Clone, Copy)]
pub struct SyntheticOracle<'a> {
    config: &'a SyntheticConfig,
}

impl Learner for SyntheticOracle<'_> {
    fn num_features(&self) -> usize {
        self.config.num_features
    }

    fn train(&self, features: FeatureSet) -> Result<TrainedModel> {
        Ok(TrainedModel {
            handle: ModelHandle {
                id: format!("synthetic-{:x}", features.mask()),
                feature_set: features,
            },
            accuracy: accuracy_combiner(features, self.config),
        })
    }

    fn concurrent_training_safe(&self) -> bool {
        true
    }
}

/// Wraps a learner and subtracts a deterministic `U[0, e]` penalty from the
/// accuracy of every nonempty set. For any `F ⊂ G` the wrapped accuracies
/// then satisfy `a(F) <= a(G) + e` whenever the inner learner is monotone.
#[derive(Debug, Clone)]
pub struct NoisyOracle<L> {
    inner: L,
    e: f64,
    seed: u64,
}

impl<L: Learner> NoisyOracle<L> {
    pub fn new(inner: L, e: f64, seed: u64) -> Self {
        Self { inner, e, seed }
    }

    fn penalty(&self, features: FeatureSet) -> f64 {
        if features.is_empty() {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (u64::from(features.mask()) << 16));
        rng.gen_range(0.0..=self.e)
    }
}

impl<L: Learner> Learner for NoisyOracle<L> {
    fn num_features(&self) -> usize {
        self.inner.num_features()
    }

    fn train(&self, features: FeatureSet) -> Result<TrainedModel> {
        let mut model = self.inner.train(features)?;
        model.accuracy = (model.accuracy - self.penalty(features)).clamp(0.0, 1.0);
        Ok(model)
    }

    fn concurrent_training_safe(&self) -> bool {
        self.inner.concurrent_training_safe()
    }
}
