use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::costpoly::quantile;
use crate::error::{Error, Result};
use crate::lattice::{CharacterizedFeatureSet, FeatureSet};

/// Fraction of violations the recommended tolerance should cover by default.
pub const DEFAULT_COVERAGE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceStats {
    /// `|Fj| - |Fi|`.
    pub distance: usize,
    pub pairs: usize,
    pub violations: usize,
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
    pub max: f64,
}

/// Violations `max(0, a(Fi) - a(Fj))` over comparable pairs `Fi ⊂ Fj`.
/// Statistics are over the strictly positive violations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub pairs: usize,
    pub violations: Vec<f64>,
    pub max_violation: f64,
    /// `(value, fraction of violations <= value)`, one point per distinct value.
    pub cdf: Vec<(f64, f64)>,
    pub per_distance: Vec<DistanceStats>,
    pub coverage: f64,
    /// Smallest `e` at or above which `coverage` of the violations fall.
    pub recommended_e: f64,
}

fn quantile_or_zero(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        quantile(&mut values.to_vec(), q)
    }
}

pub fn monotonicity_analysis(sets: &[CharacterizedFeatureSet], coverage: f64) -> Result<MonotonicityReport> {
    if !(coverage > 0.0 && coverage <= 1.0) {
        return Err(Error::invalid(format!("coverage must lie in (0, 1], got {coverage}")));
    }
    let acc: HashMap<FeatureSet, f64> = sets.iter().map(|c| (c.features, c.accuracy)).collect();
    let mut pairs = 0;
    let mut violations = Vec::new();
    let mut by_distance: BTreeMap<usize, (usize, Vec<f64>)> = BTreeMap::new();
    for c in sets {
        let sub_count = 1usize << c.features.len();
        let mut visit = |lower: FeatureSet, a_lower: f64| {
            pairs += 1;
            let d = c.features.len() - lower.len();
            let slot = by_distance.entry(d).or_default();
            slot.0 += 1;
            let v = a_lower - c.accuracy;
            if v > 0.0 {
                violations.push(v);
                slot.1.push(v);
            }
        };
        if sub_count <= acc.len() {
            for s in c.features.subsets().filter(|&s| s != c.features) {
                if let Some(&a) = acc.get(&s) {
                    visit(s, a);
                }
            }
        } else {
            for o in sets.iter().filter(|o| o.features.is_strict_subset_of(c.features)) {
                visit(o.features, o.accuracy);
            }
        }
    }
    if pairs == 0 {
        return Err(Error::invalid("need at least two comparable feature sets"));
    }
    violations.sort_by(f64::total_cmp);

    let mut cdf: Vec<(f64, f64)> = Vec::new();
    for (i, &v) in violations.iter().enumerate() {
        let frac = (i + 1) as f64 / violations.len() as f64;
        match cdf.last_mut() {
            Some(last) if last.0 == v => last.1 = frac,
            _ => cdf.push((v, frac)),
        }
    }
    let per_distance = by_distance
        .into_iter()
        .map(|(distance, (count, vs))| DistanceStats {
            distance,
            pairs: count,
            violations: vs.len(),
            median: quantile_or_zero(&vs, 0.5),
            p25: quantile_or_zero(&vs, 0.25),
            p75: quantile_or_zero(&vs, 0.75),
            max: vs.iter().copied().fold(0.0, f64::max),
        })
        .collect();
    Ok(MonotonicityReport {
        pairs,
        max_violation: violations.last().copied().unwrap_or(0.0),
        recommended_e: quantile_or_zero(&violations, coverage),
        violations,
        cdf,
        per_distance,
        coverage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::naive_expand_all;
    use crate::lattice::FeatureUniverse;
    use crate::learner::{sample_synthetic_config, Combiner, Learner, ModelHandle, NoisyOracle, TrainedModel};
    use crate::costpoly::CostPolynomial;

    #[test]
    fn exact_oracle_has_no_violations() {
        let cfg = sample_synthetic_config(6, 0.6, Combiner::TopK(2), 3).unwrap();
        let sets = naive_expand_all(&cfg.universe(), &cfg.oracle(), 20).unwrap();
        let r = monotonicity_analysis(&sets, DEFAULT_COVERAGE).unwrap();
        assert_eq!(r.pairs, 3usize.pow(6) - 2usize.pow(6));
        assert!(r.violations.is_empty());
        assert_eq!(r.recommended_e, 0.0);
    }

    #[test]
    fn injected_noise_is_bounded() {
        let cfg = sample_synthetic_config(7, 0.6, Combiner::TopK(1), 5).unwrap();
        let noisy = NoisyOracle::new(cfg.oracle(), 0.05, 1);
        let sets = naive_expand_all(&cfg.universe(), &noisy, 20).unwrap();
        let r = monotonicity_analysis(&sets, DEFAULT_COVERAGE).unwrap();
        assert!(!r.violations.is_empty());
        assert!(r.max_violation <= 0.05);
        assert!(r.recommended_e <= r.max_violation);
        assert_eq!(r.cdf.last().unwrap().1, 1.0);
        assert!(r.cdf.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
    }

    /// Accuracy grows slowly with size but odd-sized sets lose a flat 0.05,
    /// so violations shrink as the distance between the pair grows.
    struct Shrinking;

    impl Learner for Shrinking {
        fn num_features(&self) -> usize {
            8
        }
        fn train(&self, f: FeatureSet) -> crate::error::Result<TrainedModel> {
            let k = f.len() as f64;
            let dip = if f.len() % 2 == 1 { 0.05 } else { 0.0 };
            Ok(TrainedModel {
                handle: ModelHandle {
                    id: String::new(),
                    feature_set: f,
                },
                accuracy: 0.5 + 0.004 * k - dip,
            })
        }
    }

    #[test]
    fn per_distance_medians_shrink() {
        let u = FeatureUniverse::new((0..8).map(|i| format!("x{i}")).collect(), vec![CostPolynomial::zero(); 8]).unwrap();
        let sets = naive_expand_all(&u, &Shrinking, 20).unwrap();
        let r = monotonicity_analysis(&sets, DEFAULT_COVERAGE).unwrap();
        let medians: Vec<f64> = r.per_distance.iter().filter(|d| d.violations > 0).map(|d| d.median).collect();
        assert!(medians.len() >= 3);
        assert!(medians.windows(2).all(|w| w[0] >= w[1]), "{medians:?}");
    }

    #[test]
    fn rejects_incomparable_input() {
        let cfg = sample_synthetic_config(3, 0.6, Combiner::TopK(1), 0).unwrap();
        let u = cfg.universe();
        let a = u.characterize(&cfg.oracle(), FeatureSet::from_mask(1)).unwrap();
        let b = u.characterize(&cfg.oracle(), FeatureSet::from_mask(2)).unwrap();
        assert!(monotonicity_analysis(&[a, b], 0.95).is_err());
    }
}
