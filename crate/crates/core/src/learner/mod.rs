//! The black-box learner abstraction and its built-in implementations.
//!
//! A [`Learner`] turns a feature set into a trained model plus an accuracy
//! estimate. Costs are not the learner's business: they come from the
//! [`FeatureUniverse`](crate::lattice::FeatureUniverse) and are attached when a
//! set is characterized.

mod dataset;
mod linear;
mod synthetic;

pub use dataset::{Dataset, Item};
pub use linear::{train_linear, LinearLearner, LinearModel, LinearParams};
pub use synthetic::{accuracy_combiner, sample_synthetic_config, Combiner, NoisyOracle, SyntheticConfig, SyntheticFeature, SyntheticOracle};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lattice::FeatureSet;

/// Opaque reference to a trained model.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelHandle {
    pub id: String,
    pub feature_set: FeatureSet,
}

/// What a learner returns for one feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub handle: ModelHandle,
    pub accuracy: f64,
}

/// A learner that can be trained on any subset of the feature universe.
///
/// Implementations must be deterministic in the feature set so lattice
/// pruning decisions are reproducible. The empty set must yield a
/// featureless baseline model.
pub trait Learner: Sync {
    fn num_features(&self) -> usize;

    fn train(&self, features: FeatureSet) -> Result<TrainedModel>;

    /// Whether `train` may be called from several threads at once.
    fn concurrent_training_safe(&self) -> bool {
        false
    }
}

impl<L: Learner + ?Sized> Learner for &L {
    fn num_features(&self) -> usize {
        (**self).num_features()
    }
    fn train(&self, features: FeatureSet) -> Result<TrainedModel> {
        (**self).train(features)
    }
    fn concurrent_training_safe(&self) -> bool {
        (**self).concurrent_training_safe()
    }
}

impl<L: Learner + ?Sized> Learner for Box<L> {
    fn num_features(&self) -> usize {
        (**self).num_features()
    }
    fn train(&self, features: FeatureSet) -> Result<TrainedModel> {
        (**self).train(features)
    }
    fn concurrent_training_safe(&self) -> bool {
        (**self).concurrent_training_safe()
    }
}
