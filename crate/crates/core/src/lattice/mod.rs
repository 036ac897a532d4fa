//! Feature-set lattice: characterization, dominance, bidirectional expansion
//! with sandwich/covering pruning, and candidate-set construction.

mod candidates;
mod expand;
mod feature_set;

pub use candidates::{candidate_set, candidate_set_with};
pub use expand::{
    covering_prunable, expand_enumerate, expand_progressive, expand_single, is_sandwiched, ExpandOptions, Expansion, ExpandedSets,
    ProgressiveOutcome,
};
pub use feature_set::{FeatureSet, MAX_FEATURES};

use serde::{Deserialize, Serialize};

use crate::costpoly::{cost_dominates, CostPolynomial};
use crate::error::{Error, Result};
use crate::learner::{Learner, ModelHandle};

/// Named features with their individual cost curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureUniverse {
    pub names: Vec<String>,
    pub costs: Vec<CostPolynomial>,
}

impl FeatureUniverse {
    pub fn new(names: Vec<String>, costs: Vec<CostPolynomial>) -> Result<Self> {
        if names.len() != costs.len() {
            return Err(Error::invalid("feature names and cost curves differ in length"));
        }
        if names.len() > MAX_FEATURES {
            return Err(Error::UniverseTooLarge {
                got: names.len(),
                max: MAX_FEATURES,
            });
        }
        Ok(Self { names, costs })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn full(&self) -> FeatureSet {
        FeatureSet::full(self.len())
    }

    /// Aggregate cost of extracting every feature in `features`.
    pub fn cost_of(&self, features: FeatureSet) -> CostPolynomial {
        CostPolynomial::sum(features.iter().map(|i| &self.costs[i]))
    }

    /// Trains `learner` on `features` and attaches the summed cost curve.
    pub fn characterize<L: Learner + ?Sized>(&self, learner: &L, features: FeatureSet) -> Result<CharacterizedFeatureSet> {
        let trained = learner.train(features).map_err(|e| match e {
            e @ Error::TrainingFailed { .. } => e,
            other => Error::TrainingFailed {
                features,
                reason: other.to_string(),
            },
        })?;
        if !(0.0..=1.0).contains(&trained.accuracy) {
            return Err(Error::TrainingFailed {
                features,
                reason: format!("accuracy {} is outside [0, 1]", trained.accuracy),
            });
        }
        Ok(CharacterizedFeatureSet {
            features,
            accuracy: trained.accuracy,
            cost: self.cost_of(features),
            model: trained.handle,
        })
    }
}

/// A feature set with its model, accuracy estimate and cost curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "CharacterizedRecord", from = "CharacterizedRecord")]
pub struct CharacterizedFeatureSet {
    pub features: FeatureSet,
    pub accuracy: f64,
    pub cost: CostPolynomial,
    pub model: ModelHandle,
}

#[derive(Serialize, Deserialize)]
struct CharacterizedRecord {
    mask: u32,
    accuracy: f64,
    cost: CostPolynomial,
    model_id: String,
}

impl From<CharacterizedFeatureSet> for CharacterizedRecord {
    fn from(c: CharacterizedFeatureSet) -> Self {
        Self {
            mask: c.features.mask(),
            accuracy: c.accuracy,
            cost: c.cost,
            model_id: c.model.id,
        }
    }
}

impl From<CharacterizedRecord> for CharacterizedFeatureSet {
    fn from(r: CharacterizedRecord) -> Self {
        let features = FeatureSet::from_mask(r.mask);
        Self {
            features,
            accuracy: r.accuracy,
            cost: r.cost,
            model: ModelHandle {
                id: r.model_id,
                feature_set: features,
            },
        }
    }
}

/// Accuracy slack `alpha >= 1` and monotonicity tolerance `e in [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruningParams {
    pub alpha: f64,
    pub e: f64,
}

impl PruningParams {
    pub fn new(alpha: f64, e: f64) -> Result<Self> {
        if !(alpha >= 1.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be >= 1, got {alpha}")));
        }
        if !(0.0..=1.0).contains(&e) {
            return Err(Error::invalid(format!("e must lie in [0, 1], got {e}")));
        }
        Ok(Self { alpha, e })
    }

    pub fn exact() -> Self {
        Self { alpha: 1.0, e: 0.0 }
    }
}

impl Default for PruningParams {
    fn default() -> Self {
        Self::exact()
    }
}

/// `a` dominates `b`: never costlier at any size, and `alpha * a(a) >= a(b)`.
pub fn dominates(a: &CharacterizedFeatureSet, b: &CharacterizedFeatureSet, alpha: f64) -> bool {
    alpha * a.accuracy >= b.accuracy && cost_dominates(&a.cost, &b.cost)
}
