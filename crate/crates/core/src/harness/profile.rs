use std::collections::BTreeMap;
use std::io::Read;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::costpoly::{fit, CostPolynomial, CostSample};
use crate::error::{Error, Result};
use crate::lattice::FeatureUniverse;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    pub degree: usize,
    pub quantile: f64,
    /// Raise the constant term until the curve covers every per-size
    /// quantile it was fitted to.
    pub envelope: bool,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            degree: 2,
            quantile: 1.0,
            envelope: true,
        }
    }
}

/// A fitted curve and how far it sits from the observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureProfile {
    pub feature: String,
    pub cost: CostPolynomial,
    /// Root mean square of `sample - fitted` over all raw samples.
    pub rmse: f64,
    /// Largest `sample - fitted`; at most 0 means the curve covers every sample.
    pub max_excess: f64,
    pub samples: usize,
}

#[derive(Debug, Deserialize)]
struct TimingRow {
    feature: String,
    size: u64,
    elapsed_ms: f64,
}

/// Reads `feature,size,elapsed_ms` rows, grouped by feature in first-seen
/// order.
pub fn read_timings<R: Read>(reader: R) -> Result<Vec<(String, Vec<CostSample>)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<CostSample>> = BTreeMap::new();
    for row in rdr.deserialize() {
        let row: TimingRow = row?;
        if !groups.contains_key(&row.feature) {
            order.push(row.feature.clone());
        }
        groups.entry(row.feature).or_default().push(CostSample {
            size: row.size,
            elapsed: row.elapsed_ms,
        });
    }
    Ok(order
        .into_iter()
        .map(|f| {
            let samples = groups.remove(&f).unwrap_or_default();
            (f, samples)
        })
        .collect())
}

/// Fits one curve per feature.
pub fn profile_costs(timings: &[(String, Vec<CostSample>)], opts: &ProfileOptions) -> Result<Vec<FeatureProfile>> {
    timings
        .iter()
        .map(|(name, samples)| {
            let mut cost = fit(samples, opts.degree, opts.quantile).map_err(|e| match e {
                Error::InsufficientSamples { .. } => e,
                other => Error::invalid(format!("feature {name}: {other}")),
            })?;
            if opts.envelope {
                let lift = crate::costpoly::per_size_quantile(samples, opts.quantile)
                    .into_iter()
                    .map(|(n, y)| y - cost.eval(n as f64))
                    .fold(0.0, f64::max);
                if lift > 0.0 {
                    let mut c = cost.coeffs().to_vec();
                    if c.is_empty() {
                        c.push(0.0);
                    }
                    // Nudge past rounding so the check `sample <= cost` holds.
                    c[0] += lift * (1.0 + 1e-12) + f64::EPSILON;
                    cost = CostPolynomial::new(c)?;
                }
            }
            let residuals: Vec<f64> = samples.iter().map(|s| s.elapsed - cost.eval(s.size as f64)).collect();
            let rmse = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
            Ok(FeatureProfile {
                feature: name.clone(),
                cost,
                rmse,
                max_excess: residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                samples: samples.len(),
            })
        })
        .collect()
}

/// Times `extract(size)` for each size, `repetitions` times, in milliseconds.
pub fn time_extractor(sizes: &[u64], repetitions: usize, mut extract: impl FnMut(u64)) -> Vec<CostSample> {
    let mut out = Vec::with_capacity(sizes.len() * repetitions);
    for &size in sizes {
        for _ in 0..repetitions {
            let start = Instant::now();
            extract(size);
            out.push(CostSample {
                size,
                elapsed: start.elapsed().as_secs_f64() * 1e3,
            });
        }
    }
    out
}

/// Turns profiles into a feature universe.
pub fn universe_from_profiles(profiles: &[FeatureProfile]) -> Result<FeatureUniverse> {
    FeatureUniverse::new(
        profiles.iter().map(|p| p.feature.clone()).collect(),
        profiles.iter().map(|p| p.cost.clone()).collect(),
    )
}
