//! Minimal one-vs-rest linear classifier trained by SGD on the hinge loss
//! with an L1 penalty, plus the stratified cross-validation wrapper that
//! turns it into a [`Learner`].

use std::collections::HashMap;
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, Item, Learner, ModelHandle, TrainedModel};
use crate::error::{Error, Result};
use crate::lattice::FeatureSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub epochs: usize,
    pub l1: f64,
    pub learning_rate: f64,
    pub folds: usize,
    pub seed: u64,
}

impl Default for LinearParams {
    fn default() -> Self {
        Self {
            epochs: 30,
            l1: 1e-4,
            learning_rate: 0.05,
            folds: 5,
            seed: 0,
        }
    }
}

/// A trained one-vs-rest linear model over a subset of the features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub features: Vec<usize>,
    pub labels: Vec<i64>,
    means: Vec<f64>,
    scales: Vec<f64>,
    /// One weight row per label; empty rows mean the model is constant.
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

impl LinearModel {
    fn standardized(&self, item: &Item) -> Vec<f64> {
        self.features
            .iter()
            .enumerate()
            .map(|(j, &f)| (item.values[f] - self.means[j]) / self.scales[j])
            .collect()
    }

    pub fn predict(&self, item: &Item) -> i64 {
        let x = self.standardized(item);
        let best = self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.iter().zip(&x).map(|(w, x)| w * x).sum::<f64>() + b)
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.labels[best]
    }

    pub fn accuracy<'a>(&self, items: impl IntoIterator<Item = &'a Item>) -> f64 {
        let (mut hit, mut total) = (0usize, 0usize);
        for item in items {
            total += 1;
            hit += usize::from(self.predict(item) == item.label);
        }
        if total == 0 {
            0.0
        } else {
            hit as f64 / total as f64
        }
    }
}

fn majority_label(items: &[&Item], labels: &[i64]) -> i64 {
    let mut counts = vec![0usize; labels.len()];
    for item in items {
        if let Ok(k) = labels.binary_search(&item.label) {
            counts[k] += 1;
        }
    }
    let best = counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(k, _)| k)
        .unwrap_or(0);
    labels[best]
}

fn constant_model(label: i64, features: &[usize]) -> LinearModel {
    LinearModel {
        features: features.to_vec(),
        labels: vec![label],
        means: vec![0.0; features.len()],
        scales: vec![1.0; features.len()],
        weights: vec![Vec::new()],
        biases: vec![0.0],
    }
}

fn fit_items(features: &[usize], items: &[&Item], labels: &[i64], params: &LinearParams, seed: u64) -> LinearModel {
    let present: Vec<i64> = labels
        .iter()
        .copied()
        .filter(|l| items.iter().any(|i| i.label == *l))
        .collect();
    if features.is_empty() || present.len() < 2 {
        return constant_model(majority_label(items, labels), features);
    }

    let d = features.len();
    let n = items.len() as f64;
    let mut means = vec![0.0; d];
    let mut scales = vec![0.0; d];
    for (j, &f) in features.iter().enumerate() {
        means[j] = items.iter().map(|i| i.values[f]).sum::<f64>() / n;
        let var = items.iter().map(|i| (i.values[f] - means[j]).powi(2)).sum::<f64>() / n;
        scales[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
    }
    let xs: Vec<Vec<f64>> = items
        .iter()
        .map(|i| {
            features
                .iter()
                .enumerate()
                .map(|(j, &f)| (i.values[f] - means[j]) / scales[j])
                .collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut weights = vec![vec![0.0; d]; present.len()];
    let mut biases = vec![0.0; present.len()];
    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        let eta = params.learning_rate / (1.0 + epoch as f64).sqrt();
        for &r in &order {
            let x = &xs[r];
            for (k, label) in present.iter().enumerate() {
                let y = if items[r].label == *label { 1.0 } else { -1.0 };
                let w = &mut weights[k];
                let margin = y * (w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + biases[k]);
                if margin < 1.0 {
                    for (wj, xj) in w.iter_mut().zip(x) {
                        *wj += eta * y * xj;
                    }
                    biases[k] += eta * y;
                }
                // Truncated-gradient L1 step.
                let shrink = eta * params.l1;
                for wj in w.iter_mut() {
                    *wj = wj.signum() * (wj.abs() - shrink).max(0.0);
                }
            }
        }
    }
    LinearModel {
        features: features.to_vec(),
        labels: present,
        means,
        scales,
        weights,
        biases,
    }
}

fn check_inputs(features: FeatureSet, items: &[&Item]) -> Result<()> {
    if items.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for item in items {
        if features.iter().any(|f| !item.values[f].is_finite()) {
            return Err(Error::TrainingFailed {
                features,
                reason: format!("item {} has a non-finite feature value", item.id),
            });
        }
    }
    Ok(())
}

/// Trains a linear model on all training items of `dataset` using only
/// `features`.
pub fn train_linear(features: FeatureSet, dataset: &Dataset, epochs: usize, l1: f64) -> Result<LinearModel> {
    let items: Vec<&Item> = dataset.train_items().collect();
    check_inputs(features, &items)?;
    if dataset.label_cardinality() < 2 {
        return Err(Error::TrainingFailed {
            features,
            reason: "dataset has a single label".into(),
        });
    }
    let params = LinearParams {
        epochs,
        l1,
        ..LinearParams::default()
    };
    let feats: Vec<usize> = features.iter().collect();
    Ok(fit_items(&feats, &items, dataset.labels(), &params, params.seed ^ u64::from(features.mask())))
}

/// Stratified fold assignment: items of each label are shuffled and dealt
/// round-robin.
fn stratified_folds(items: &[&Item], labels: &[i64], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; items.len()];
    let mut next = 0;
    for label in labels {
        let mut idx: Vec<usize> = (0..items.len()).filter(|&i| items[i].label == *label).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    assignment
}

/// [`Learner`] backed by the linear classifier, with accuracy estimated by
/// stratified k-fold cross-validation on the training split.
pub struct LinearLearner<'a> {
    dataset: &'a Dataset,
    params: LinearParams,
    train: Vec<&'a Item>,
    folds: Vec<usize>,
    models: Mutex<HashMap<FeatureSet, LinearModel>>,
}

impl<'a> LinearLearner<'a> {
    pub fn new(dataset: &'a Dataset, params: LinearParams) -> Result<Self> {
        let train: Vec<&Item> = dataset.train_items().collect();
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if params.folds < 2 {
            return Err(Error::invalid("cross-validation needs at least 2 folds"));
        }
        let k = params.folds.min(train.len());
        let folds = stratified_folds(&train, dataset.labels(), k, params.seed);
        Ok(Self {
            dataset,
            params: LinearParams { folds: k, ..params },
            train,
            folds,
            models: Mutex::new(HashMap::new()),
        })
    }

    /// The model trained on the full training split for `handle`, if any.
    pub fn model(&self, handle: &ModelHandle) -> Option<LinearModel> {
        self.models.lock().expect("model registry poisoned").get(&handle.feature_set).cloned()
    }

    fn cross_validate(&self, feats: &[usize], seed: u64) -> f64 {
        let labels = self.dataset.labels();
        let mut hits = 0usize;
        for fold in 0..self.params.folds {
            let mut held = Vec::new();
            let mut fit = Vec::new();
            for (&item, &f) in self.train.iter().zip(&self.folds) {
                if f == fold {
                    held.push(item);
                } else {
                    fit.push(item);
                }
            }
            if fit.is_empty() || held.is_empty() {
                continue;
            }
            let model = fit_items(feats, &fit, labels, &self.params, seed.wrapping_add(fold as u64));
            hits += held.iter().filter(|i| model.predict(i) == i.label).count();
        }
        hits as f64 / self.train.len() as f64
    }
}

impl Learner for LinearLearner<'_> {
    fn num_features(&self) -> usize {
        self.dataset.num_features()
    }

    fn train(&self, features: FeatureSet) -> Result<TrainedModel> {
        check_inputs(features, &self.train)?;
        if self.dataset.label_cardinality() < 2 {
            return Err(Error::TrainingFailed {
                features,
                reason: "dataset has a single label".into(),
            });
        }
        let feats: Vec<usize> = features.iter().collect();
        let seed = self.params.seed ^ (u64::from(features.mask()) << 20);
        let accuracy = self.cross_validate(&feats, seed);
        let model = fit_items(&feats, &self.train, self.dataset.labels(), &self.params, seed);
        self.models.lock().expect("model registry poisoned").insert(features, model);
        Ok(TrainedModel {
            handle: ModelHandle {
                id: format!("linear-{:x}", features.mask()),
                feature_set: features,
            },
            accuracy,
        })
    }

    fn concurrent_training_safe(&self) -> bool {
        true
    }
}
