use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::CostPolynomial;
use crate::error::{Error, Result};

/// One timing observation of a feature extractor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSample {
    pub size: u64,
    pub elapsed: f64,
}

/// Nearest-rank quantile of `values`; `q = 1.0` is the maximum.
pub fn quantile(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let rank = (q * values.len() as f64).ceil() as usize;
    values[rank.clamp(1, values.len()) - 1]
}

/// Per-size quantile of the samples, keyed by size.
pub(crate) fn per_size_quantile(samples: &[CostSample], q: f64) -> BTreeMap<u64, f64> {
    let mut groups: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for s in samples {
        groups.entry(s.size).or_default().push(s.elapsed);
    }
    groups
        .into_iter()
        .map(|(size, mut v)| (size, quantile(&mut v, q)))
        .collect()
}

/// Fits a degree-`degree` cost curve to the per-size `q`-quantile of the
/// samples by least squares. Negative coefficients are dropped from the model
/// and the remaining terms refit until all are nonnegative.
pub fn fit(samples: &[CostSample], degree: usize, q: f64) -> Result<CostPolynomial> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::invalid(format!("quantile {q} is outside (0, 1]")));
    }
    if let Some(s) = samples.iter().find(|s| s.size == 0 || !s.elapsed.is_finite() || s.elapsed < 0.0) {
        return Err(Error::invalid(format!("bad timing sample {s:?}")));
    }
    let points = per_size_quantile(samples, q);
    if points.len() < degree + 1 {
        return Err(Error::InsufficientSamples {
            degree,
            needed: degree + 1,
            got: points.len(),
        });
    }

    // Sizes are rescaled to [0, 1] so the Vandermonde columns stay well conditioned.
    let scale = *points.keys().last().expect("nonempty") as f64;
    let xs: Vec<f64> = points.keys().map(|&s| s as f64 / scale).collect();
    let ys = DVector::from_iterator(points.len(), points.values().copied());

    let mut active: Vec<usize> = (0..=degree).collect();
    let mut scaled = vec![0.0; degree + 1];
    while !active.is_empty() {
        let design = DMatrix::from_fn(xs.len(), active.len(), |r, c| xs[r].powi(active[c] as i32));
        let solution = least_squares(design, &ys)?;
        if solution.iter().all(|&c| c >= 0.0) {
            scaled.iter_mut().for_each(|c| *c = 0.0);
            for (&term, &c) in active.iter().zip(solution.iter()) {
                scaled[term] = c;
            }
            break;
        }
        active = active
            .iter()
            .zip(solution.iter())
            .filter(|(_, &c)| c >= 0.0)
            .map(|(&t, _)| t)
            .collect();
    }

    let coeffs = scaled
        .iter()
        .enumerate()
        .map(|(i, &c)| c / scale.powi(i as i32))
        .collect();
    CostPolynomial::new(coeffs)
}

fn least_squares(design: DMatrix<f64>, ys: &DVector<f64>) -> Result<DVector<f64>> {
    let cols = design.ncols();
    let svd = design.svd(true, true);
    let max_sv = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-12 * max_sv.max(f64::MIN_POSITIVE))
        .count();
    if rank < cols {
        return Err(Error::DegenerateFit);
    }
    svd.solve(ys, 0.0).map_err(|_| Error::DegenerateFit)
}
