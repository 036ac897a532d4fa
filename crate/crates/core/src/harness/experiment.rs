use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{index_all, naive_expand_all, naive_lookup, EXPAND_ALL_GUARD};
use crate::error::{Error, Result};
use crate::greedy::{build_sequences, greedy_acc, greedy_cost, GreedyParams, GreedySequenceIndex, DEFAULT_LAMBDAS};
use crate::lattice::{expand_enumerate, CharacterizedFeatureSet, ExpandOptions, FeatureUniverse, PruningParams};
use crate::learner::{
    sample_synthetic_config, Combiner, Dataset, Learner, LinearLearner, LinearParams, NoisyOracle, SyntheticConfig,
};
use crate::polydom::PolyDomIndex;

use super::{read_json, write_json};

pub const DEFAULT_SIZES: [u64; 9] = [1, 10, 25, 50, 100, 200, 300, 400, 500];

/// Half-decade steps from 1 to 10^8.
pub fn default_budgets() -> Vec<f64> {
    (0..=16).map(|i| 10f64.powf(i as f64 / 2.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    PolyDom,
    PolyDomIndexAll,
    NaiveLookup,
    NaiveExpandAll,
    Greedy,
    GreedyAcc,
    GreedyCost,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::PolyDom,
        Algorithm::PolyDomIndexAll,
        Algorithm::NaiveLookup,
        Algorithm::NaiveExpandAll,
        Algorithm::Greedy,
        Algorithm::GreedyAcc,
        Algorithm::GreedyCost,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::PolyDom => "poly-dom",
            Algorithm::PolyDomIndexAll => "poly-dom-index-all",
            Algorithm::NaiveLookup => "naive-lookup",
            Algorithm::NaiveExpandAll => "naive-expand-all",
            Algorithm::Greedy => "greedy",
            Algorithm::GreedyAcc => "greedy-acc",
            Algorithm::GreedyCost => "greedy-cost",
        }
    }

    fn uses_candidates(self) -> bool {
        matches!(self, Algorithm::PolyDom | Algorithm::PolyDomIndexAll | Algorithm::NaiveLookup)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown algorithm {s:?}")))
    }
}

/// Where feature costs and accuracies come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConfigSource {
    /// A fresh synthetic config per seed.
    Synthetic { num_features: usize, p: f64, k: Combiner },
    /// One saved synthetic config, reused for every seed.
    SyntheticFile { path: PathBuf },
    /// Tabular data with a feature-universe JSON giving names and costs.
    Dataset {
        data: PathBuf,
        split: Option<PathBuf>,
        costs: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub source: ConfigSource,
    pub algorithms: Vec<Algorithm>,
    pub alpha: f64,
    pub e: f64,
    pub covering: bool,
    pub lambdas: Vec<f64>,
    pub budgets: Vec<f64>,
    pub sizes: Vec<u64>,
    pub seeds: Vec<u64>,
    /// Size the greedy gains are evaluated at. Defaults to the median
    /// training-item size, or the median grid size for synthetic sources.
    pub reference_size: Option<f64>,
    /// Superset penalty `U[0, noise]` applied to the learner.
    pub noise: f64,
    pub expand_all_guard: usize,
    /// Cross-check algorithms against each other before writing results.
    pub check_oracles: bool,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            source: ConfigSource::Synthetic {
                num_features: 10,
                p: 0.6,
                k: Combiner::TopK(1),
            },
            algorithms: vec![Algorithm::PolyDom, Algorithm::Greedy, Algorithm::GreedyAcc, Algorithm::GreedyCost],
            alpha: 1.2,
            e: 0.0,
            covering: true,
            lambdas: DEFAULT_LAMBDAS.to_vec(),
            budgets: default_budgets(),
            sizes: DEFAULT_SIZES.to_vec(),
            seeds: vec![0],
            reference_size: None,
            noise: 0.0,
            expand_all_guard: EXPAND_ALL_GUARD,
            check_oracles: true,
            out: None,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::invalid("at least one algorithm is required"));
        }
        if self.budgets.is_empty() || self.budgets.iter().any(|b| b.is_nan() || *b < 0.0) {
            return Err(Error::invalid("budgets must be a nonempty list of nonnegative numbers"));
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(Error::invalid("sizes must be a nonempty list of positive integers"));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("at least one seed is required"));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::invalid(format!("noise {} is outside [0, 1]", self.noise)));
        }
        PruningParams::new(self.alpha, self.e)?;
        if let Some(r) = self.reference_size {
            GreedyParams::new(self.lambdas.clone(), r)?;
        } else if self.lambdas.is_empty() && self.algorithms.contains(&Algorithm::Greedy) {
            return Err(Error::invalid("at least one lambda is required"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyPoint {
    pub size: u64,
    pub budget: f64,
    /// `None` when nothing fits the budget.
    pub accuracy: Option<f64>,
    pub mask: Option<u32>,
    pub probes: usize,
}

/// Deterministic measurements of one algorithm on one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmResult {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub expanded_count: usize,
    pub index_size: usize,
    pub points: Vec<AccuracyPoint>,
}

impl AlgorithmResult {
    pub fn probes_mean(&self) -> f64 {
        self.points.iter().map(|p| p.probes as f64).sum::<f64>() / self.points.len().max(1) as f64
    }

    pub fn probes_max(&self) -> usize {
        self.points.iter().map(|p| p.probes).max().unwrap_or(0)
    }
}

/// One line of `metrics.csv` or `timing.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub algorithm: String,
    pub metric: String,
    pub size: Option<u64>,
    pub budget: Option<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub version: String,
    pub spec: ExperimentSpec,
    /// The synthetic configs used, one per seed.
    pub configs: Vec<SyntheticConfig>,
    pub results: Vec<AlgorithmResult>,
    /// Means over seeds, in long format.
    #[serde(skip)]
    pub rows: Vec<MetricRow>,
    /// Wall-clock measurements; kept out of `run.json` so it stays
    /// reproducible.
    #[serde(skip)]
    pub timings: Vec<MetricRow>,
}

impl MetricsReport {
    pub fn result(&self, algorithm: Algorithm, seed: u64) -> Option<&AlgorithmResult> {
        self.results.iter().find(|r| r.algorithm == algorithm && r.seed == seed)
    }

    /// Writes `metrics.csv`, `timing.csv` and `run.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_rows(&dir.join("metrics.csv"), &self.rows)?;
        write_rows(&dir.join("timing.csv"), &self.timings)?;
        write_json(&dir.join("run.json"), self)
    }
}

fn write_rows(path: &Path, rows: &[MetricRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs every requested algorithm for every seed, queries the full
/// size x budget grid, and writes results when `spec.out` is set.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<MetricsReport> {
    spec.validate()?;
    let mut configs = Vec::new();
    let mut results = Vec::new();
    let mut timings = Vec::new();
    match &spec.source {
        ConfigSource::Synthetic { num_features, p, k } => {
            for &seed in &spec.seeds {
                let cfg = sample_synthetic_config(*num_features, *p, *k, seed).map_err(|e| e.at_stage("config"))?;
                let reference = spec.reference_size.unwrap_or_else(|| median_size(&spec.sizes));
                run_seed(spec, seed, &cfg.universe(), &cfg.oracle(), reference, &mut results, &mut timings)?;
                configs.push(cfg);
            }
        }
        ConfigSource::SyntheticFile { path } => {
            let cfg: SyntheticConfig = read_json(path).map_err(|e| e.at_stage("config"))?;
            for &seed in &spec.seeds {
                let reference = spec.reference_size.unwrap_or_else(|| median_size(&spec.sizes));
                run_seed(spec, seed, &cfg.universe(), &cfg.oracle(), reference, &mut results, &mut timings)?;
            }
            configs.push(cfg);
        }
        ConfigSource::Dataset { data, split, costs } => {
            let (dataset, universe) = load_dataset(data, split.as_deref(), costs)?;
            let reference = match spec.reference_size {
                Some(r) => r,
                None => dataset.median_train_size().map(|s| s.max(1) as f64).ok_or(Error::EmptyDataset)?,
            };
            for &seed in &spec.seeds {
                let learner = LinearLearner::new(&dataset, LinearParams { seed, ..LinearParams::default() })
                    .map_err(|e| e.at_stage("learner"))?;
                run_seed(spec, seed, &universe, &learner, reference, &mut results, &mut timings)?;
            }
        }
    }
    let report = MetricsReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        spec: spec.clone(),
        configs,
        rows: aggregate(&results),
        results,
        timings,
    };
    if let Some(dir) = &spec.out {
        report.write(dir).map_err(|e| e.at_stage("write"))?;
    }
    Ok(report)
}

/// Loads a dataset and the feature universe JSON describing its columns.
pub fn load_dataset(data: &Path, split: Option<&Path>, costs: &Path) -> Result<(Dataset, FeatureUniverse)> {
    let dataset = Dataset::from_csv_paths(data, split).map_err(|e| e.at_stage("dataset"))?;
    let universe: FeatureUniverse = read_json(costs).map_err(|e| e.at_stage("costs"))?;
    let universe = FeatureUniverse::new(universe.names, universe.costs).map_err(|e| e.at_stage("costs"))?;
    if universe.names != dataset.feature_names {
        return Err(Error::invalid(format!(
            "cost file features {:?} do not match dataset columns {:?}",
            universe.names, dataset.feature_names
        ))
        .at_stage("costs"));
    }
    Ok((dataset, universe))
}

fn median_size(sizes: &[u64]) -> f64 {
    let mut s = sizes.to_vec();
    s.sort_unstable();
    s[s.len() / 2] as f64
}

struct Timer<'a> {
    rows: &'a mut Vec<MetricRow>,
    seed: u64,
}

impl Timer<'_> {
    fn time<T>(&mut self, algorithm: Algorithm, metric: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f()?;
        self.rows.push(MetricRow {
            algorithm: algorithm.name().to_string(),
            metric: format!("{metric}_ms[seed={}]", self.seed),
            size: None,
            budget: None,
            value: start.elapsed().as_secs_f64() * 1e3,
        });
        Ok(out)
    }
}

fn run_seed<L: Learner + ?Sized>(
    spec: &ExperimentSpec,
    seed: u64,
    universe: &FeatureUniverse,
    learner: &L,
    reference: f64,
    results: &mut Vec<AlgorithmResult>,
    timings: &mut Vec<MetricRow>,
) -> Result<()> {
    if spec.noise > 0.0 {
        let noisy = NoisyOracle::new(learner, spec.noise, seed);
        return run_seed_with(spec, seed, universe, &noisy, reference, results, timings);
    }
    run_seed_with(spec, seed, universe, learner, reference, results, timings)
}

fn grid(spec: &ExperimentSpec) -> impl Iterator<Item = (u64, f64)> + '_ {
    spec.sizes.iter().flat_map(|&n| spec.budgets.iter().map(move |&b| (n, b)))
}

fn point(size: u64, budget: f64, hit: Option<(&CharacterizedFeatureSet, usize)>, probes: usize) -> AccuracyPoint {
    AccuracyPoint {
        size,
        budget,
        accuracy: hit.map(|(c, _)| c.accuracy),
        mask: hit.map(|(c, _)| c.features.mask()),
        probes: hit.map_or(probes, |(_, p)| p),
    }
}

fn feasible<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::NoFeasibleModel { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn run_seed_with<L: Learner + ?Sized>(
    spec: &ExperimentSpec,
    seed: u64,
    universe: &FeatureUniverse,
    learner: &L,
    reference: f64,
    results: &mut Vec<AlgorithmResult>,
    timings: &mut Vec<MetricRow>,
) -> Result<()> {
    let mut timer = Timer { rows: timings, seed };
    let wants = |a: Algorithm| spec.algorithms.contains(&a);
    let mut out: BTreeMap<Algorithm, AlgorithmResult> = BTreeMap::new();

    let lattice = if spec.algorithms.iter().any(|a| a.uses_candidates()) {
        let mut opts = ExpandOptions::new(PruningParams::new(spec.alpha, spec.e)?);
        opts.covering = spec.covering;
        let expansion = timer
            .time(Algorithm::PolyDom, "expand", || expand_enumerate(universe, learner, &opts))
            .map_err(|e| e.at_stage("expand"))?;
        let candidates = expansion.candidates(spec.alpha);
        Some((expansion.count(), candidates))
    } else {
        None
    };

    if let Some((expanded, candidates)) = &lattice {
        if wants(Algorithm::PolyDom) {
            let index = timer
                .time(Algorithm::PolyDom, "build", || PolyDomIndex::build(candidates))
                .map_err(|e| e.at_stage("index"))?;
            let points = timer.time(Algorithm::PolyDom, "query", || {
                grid(spec)
                    .map(|(n, b)| Ok(point(n, b, feasible(index.query_size(n as f64, b))?.map(|a| (a.entry, a.probes)), 0)))
                    .collect::<Result<Vec<_>>>()
            })?;
            out.insert(Algorithm::PolyDom, result(Algorithm::PolyDom, seed, *expanded, index.size(), points));
        }
        if wants(Algorithm::PolyDomIndexAll) {
            let index = timer
                .time(Algorithm::PolyDomIndexAll, "build", || index_all(candidates))
                .map_err(|e| e.at_stage("index-all"))?;
            let points = grid(spec)
                .map(|(n, b)| Ok(point(n, b, feasible(index.query_size(n as f64, b))?.map(|a| (a.entry, a.probes)), 0)))
                .collect::<Result<Vec<_>>>()?;
            out.insert(
                Algorithm::PolyDomIndexAll,
                result(Algorithm::PolyDomIndexAll, seed, *expanded, index.size(), points),
            );
        }
        if wants(Algorithm::NaiveLookup) {
            let points = lookup_points(spec, candidates)?;
            out.insert(
                Algorithm::NaiveLookup,
                result(Algorithm::NaiveLookup, seed, *expanded, candidates.len(), points),
            );
        }
    }

    if wants(Algorithm::NaiveExpandAll) {
        let all = timer
            .time(Algorithm::NaiveExpandAll, "expand", || naive_expand_all(universe, learner, spec.expand_all_guard))
            .map_err(|e| e.at_stage("expand-all"))?;
        let points = lookup_points(spec, &all)?;
        out.insert(
            Algorithm::NaiveExpandAll,
            result(Algorithm::NaiveExpandAll, seed, all.len(), all.len(), points),
        );
    }

    for algorithm in [Algorithm::Greedy, Algorithm::GreedyAcc, Algorithm::GreedyCost] {
        if !wants(algorithm) {
            continue;
        }
        let index = timer
            .time(algorithm, "build", || -> Result<GreedySequenceIndex> {
                match algorithm {
                    Algorithm::Greedy => build_sequences(universe, learner, &GreedyParams::new(spec.lambdas.clone(), reference)?),
                    Algorithm::GreedyAcc => greedy_acc(universe, learner, reference),
                    _ => greedy_cost(universe, learner, reference),
                }
            })
            .map_err(|e| e.at_stage(algorithm.name()))?;
        let points = grid(spec)
            .map(|(n, b)| {
                let a = index.query_anytime(n as f64, b);
                point(n, b, Some((a.prefix, a.probes)), 0)
            })
            .collect();
        out.insert(algorithm, result(algorithm, seed, index.trainings, index.size(), points));
    }

    if spec.check_oracles {
        check_oracles(&out, spec.alpha, reference).map_err(|e| e.at_stage("oracle-check"))?;
    }
    results.extend(out.into_values());
    Ok(())
}

fn lookup_points(spec: &ExperimentSpec, sets: &[CharacterizedFeatureSet]) -> Result<Vec<AccuracyPoint>> {
    grid(spec)
        .map(|(n, b)| Ok(point(n, b, feasible(naive_lookup(sets, n as f64, b))?.map(|l| (l.entry, l.probes)), sets.len())))
        .collect()
}

fn result(algorithm: Algorithm, seed: u64, expanded_count: usize, index_size: usize, points: Vec<AccuracyPoint>) -> AlgorithmResult {
    AlgorithmResult {
        algorithm,
        seed,
        expanded_count,
        index_size,
        points,
    }
}

/// Cross-algorithm agreements that hold by construction.
fn check_oracles(out: &BTreeMap<Algorithm, AlgorithmResult>, alpha: f64, reference: f64) -> Result<()> {
    let pairs = |a: Algorithm, b: Algorithm| out.get(&a).zip(out.get(&b));
    let mismatch = |what: &str, p: &AccuracyPoint, q: &AccuracyPoint| {
        Err(Error::OracleMismatch(format!(
            "{what} at size {} budget {}: {:?} vs {:?}",
            p.size, p.budget, p.accuracy, q.accuracy
        )))
    };
    if let Some((pd, naive)) = pairs(Algorithm::PolyDom, Algorithm::NaiveLookup) {
        for (p, q) in pd.points.iter().zip(&naive.points) {
            if p.accuracy != q.accuracy {
                return mismatch("poly-dom and naive lookup disagree", p, q);
            }
        }
    }
    if let Some((pd, all)) = pairs(Algorithm::PolyDom, Algorithm::PolyDomIndexAll) {
        for (p, q) in pd.points.iter().zip(&all.points) {
            if p.accuracy != q.accuracy {
                return mismatch("poly-dom and index-all disagree", p, q);
            }
        }
    }
    if let Some((pd, all)) = pairs(Algorithm::PolyDom, Algorithm::NaiveExpandAll) {
        for (p, q) in pd.points.iter().zip(&all.points) {
            let ok = match (p.accuracy, q.accuracy) {
                (Some(a), Some(best)) => a * alpha >= best,
                (None, None) | (Some(_), None) => true,
                (None, Some(_)) => false,
            };
            if !ok {
                return mismatch("poly-dom misses the alpha-relaxed optimum", p, q);
            }
        }
    }
    for greedy in [Algorithm::Greedy, Algorithm::GreedyAcc, Algorithm::GreedyCost] {
        if let Some((g, all)) = pairs(greedy, Algorithm::NaiveExpandAll) {
            for (p, q) in g.points.iter().zip(&all.points) {
                if p.size as f64 != reference {
                    continue;
                }
                if let (Some(a), Some(best)) = (p.accuracy, q.accuracy) {
                    if a > best {
                        return mismatch("greedy beats the exhaustive optimum", p, q);
                    }
                }
            }
        }
    }
    Ok(())
}

/// (algorithm, metric, size, budget bits)
type MetricKey = (Algorithm, &'static str, Option<u64>, Option<u64>);

/// Means over seeds in long format.
fn aggregate(results: &[AlgorithmResult]) -> Vec<MetricRow> {
    let mut sums: BTreeMap<MetricKey, (f64, usize, Option<f64>)> = BTreeMap::new();
    let mut add = |a: Algorithm, m: &'static str, size: Option<u64>, budget: Option<f64>, v: f64| {
        let slot = sums.entry((a, m, size, budget.map(f64::to_bits))).or_insert((0.0, 0, budget));
        slot.0 += v;
        slot.1 += 1;
    };
    for r in results {
        add(r.algorithm, "expanded_count", None, None, r.expanded_count as f64);
        add(r.algorithm, "index_size", None, None, r.index_size as f64);
        add(r.algorithm, "probes_mean", None, None, r.probes_mean());
        add(r.algorithm, "probes_max", None, None, r.probes_max() as f64);
        for p in &r.points {
            if let Some(acc) = p.accuracy {
                add(r.algorithm, "accuracy", Some(p.size), Some(p.budget), acc);
            }
        }
    }
    let mut rows: Vec<MetricRow> = sums
        .into_iter()
        .map(|((a, m, size, _), (sum, count, budget))| MetricRow {
            algorithm: a.name().to_string(),
            metric: m.to_string(),
            size,
            budget,
            value: sum / count as f64,
        })
        .collect();
    // Bit order is not numeric order for budgets; restore it.
    rows.sort_by(|x, y| {
        (Algorithm::from_str(&x.algorithm).ok(), &x.metric, x.size)
            .cmp(&(Algorithm::from_str(&y.algorithm).ok(), &y.metric, y.size))
            .then(x.budget.unwrap_or(0.0).total_cmp(&y.budget.unwrap_or(0.0)))
    });
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(algorithms: Vec<Algorithm>, alpha: f64, k: Combiner) -> ExperimentSpec {
        ExperimentSpec {
            source: ConfigSource::Synthetic {
                num_features: 6,
                p: 0.6,
                k,
            },
            algorithms,
            alpha,
            sizes: vec![1, 50, 200, 500],
            seeds: vec![0, 1],
            ..ExperimentSpec::default()
        }
    }

    #[test]
    fn all_algorithms_pass_oracle_checks() {
        let spec = small(Algorithm::ALL.to_vec(), 1.0, Combiner::TopK(1));
        let r = run_experiment(&spec).unwrap();
        assert_eq!(r.results.len(), 14);
        assert_eq!(r.configs.len(), 2);
        for seed in [0, 1] {
            assert_eq!(r.result(Algorithm::NaiveExpandAll, seed).unwrap().expanded_count, 64);
            let pd = r.result(Algorithm::PolyDom, seed).unwrap();
            assert!(pd.expanded_count <= 64);
            assert_eq!(pd.points.len(), 4 * default_budgets().len());
        }
    }

    #[test]
    fn huge_budget_gives_the_best_model_everywhere() {
        let spec = ExperimentSpec {
            budgets: vec![1e300],
            ..small(Algorithm::ALL.to_vec(), 1.0, Combiner::TopK(1))
        };
        let r = run_experiment(&spec).unwrap();
        for seed in [0, 1] {
            let best = r.result(Algorithm::NaiveExpandAll, seed).unwrap().points[0].accuracy.unwrap();
            for res in r.results.iter().filter(|x| x.seed == seed) {
                for p in &res.points {
                    assert_eq!(p.accuracy, Some(best), "{}", res.algorithm);
                }
            }
        }
    }

    #[test]
    fn worst_case_combiner_expands_everything() {
        let spec = small(vec![Algorithm::PolyDom], 1.0, Combiner::All);
        let r = run_experiment(&spec).unwrap();
        assert!(r.results.iter().all(|x| x.expanded_count == 64));
    }

    #[test]
    fn outputs_are_byte_identical_across_runs() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = small(Algorithm::ALL.to_vec(), 1.2, Combiner::TopK(2));
        spec.out = Some(dir.path().to_path_buf());
        let read = || ["metrics.csv", "run.json"].map(|f| std::fs::read(dir.path().join(f)).unwrap());
        run_experiment(&spec).unwrap();
        let first = read();
        run_experiment(&spec).unwrap();
        assert!(first == read());
        let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        assert!(csv.starts_with("algorithm,metric,size,budget,value\n"));
        assert!(csv.contains("poly-dom,expanded_count,,,"));
    }

    #[test]
    fn spec_json_fills_defaults() {
        let spec: ExperimentSpec = serde_json::from_str(r#"{"algorithms":["poly-dom","greedy-cost"],"alpha":1.0}"#).unwrap();
        assert_eq!(spec.algorithms, vec![Algorithm::PolyDom, Algorithm::GreedyCost]);
        assert_eq!(spec.lambdas.len(), 12);
        assert_eq!(spec.budgets, default_budgets());
    }

    #[test]
    fn rejects_empty_algorithms_and_budgets() {
        let mut spec = ExperimentSpec {
            algorithms: vec![],
            ..ExperimentSpec::default()
        };
        assert!(run_experiment(&spec).unwrap_err().is_validation());
        spec.algorithms = vec![Algorithm::PolyDom];
        spec.budgets.clear();
        assert!(run_experiment(&spec).unwrap_err().is_validation());
    }

    #[test]
    fn failing_stage_is_named() {
        let spec = ExperimentSpec {
            expand_all_guard: 4,
            ..small(vec![Algorithm::NaiveExpandAll], 1.0, Combiner::TopK(1))
        };
        let err = run_experiment(&spec).unwrap_err();
        assert!(err.to_string().starts_with("expand-all:"), "{err}");
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
            assert_eq!(serde_json::to_string(&a).unwrap(), format!("\"{}\"", a.name()));
        }
    }
}
