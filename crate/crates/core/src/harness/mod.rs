//! Experiment driver, cost profiling, monotonicity measurement and file I/O.

mod experiment;
mod monotonicity;
mod profile;

pub use experiment::{
    default_budgets, load_dataset, run_experiment, AccuracyPoint, Algorithm, AlgorithmResult, ConfigSource, ExperimentSpec, MetricRow, MetricsReport,
    DEFAULT_SIZES,
};
pub use monotonicity::{monotonicity_analysis, DistanceStats, MonotonicityReport, DEFAULT_COVERAGE};
pub use profile::{profile_costs, read_timings, time_extractor, universe_from_profiles, FeatureProfile, ProfileOptions};

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::Result;
use crate::learner::{sample_synthetic_config, Combiner, SyntheticConfig};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Samples a synthetic configuration and writes it to `out`.
pub fn gen_synthetic(num_features: usize, p: f64, k: Combiner, seed: u64, out: &Path) -> Result<SyntheticConfig> {
    let config = sample_synthetic_config(num_features, p, k, seed)?;
    write_json(out, &config)?;
    Ok(config)
}
