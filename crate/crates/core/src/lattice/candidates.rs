use std::collections::BTreeSet;

use super::{dominates, CharacterizedFeatureSet, FeatureSet};

/// Drops every set dominated by another one under `alpha`.
///
/// Sets are visited cheapest-first (lexicographic cost coefficients, which
/// pointwise cost dominance respects), then by decreasing accuracy, then by
/// mask. A set survives unless an already retained set dominates it, so a
/// later set can only dominate an earlier one when they tie on cost, and then
/// the earlier one dominates it back and it is dropped. Exact ties keep the
/// smaller mask.
pub fn candidate_set(expanded: &[CharacterizedFeatureSet], alpha: f64) -> Vec<CharacterizedFeatureSet> {
    candidate_set_with(expanded, alpha, &BTreeSet::new())
}

/// As [`candidate_set`], but sets in `protected` are only dropped when a
/// retained set dominates them with alpha 1.
pub fn candidate_set_with(
    expanded: &[CharacterizedFeatureSet],
    alpha: f64,
    protected: &BTreeSet<FeatureSet>,
) -> Vec<CharacterizedFeatureSet> {
    let mut order: Vec<&CharacterizedFeatureSet> = expanded.iter().collect();
    order.sort_by(|a, b| {
        a.cost
            .cmp_coeffs(&b.cost)
            .then(b.accuracy.total_cmp(&a.accuracy))
            .then(a.features.cmp(&b.features))
    });
    let mut kept: Vec<&CharacterizedFeatureSet> = Vec::new();
    for c in order {
        let a = if protected.contains(&c.features) { 1.0 } else { alpha };
        if !kept.iter().any(|k| dominates(k, c, a)) {
            kept.push(c);
        }
    }
    let mut out: Vec<CharacterizedFeatureSet> = kept.into_iter().cloned().collect();
    out.sort_by_key(|c| c.features);
    out
}
