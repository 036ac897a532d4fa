use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use polydom_core::baselines::{naive_expand_all, EXPAND_ALL_GUARD};
use polydom_core::costpoly::DEFAULT_N_MAX;
use polydom_core::greedy::{build_sequences, greedy_acc, greedy_cost, GreedyParams, GreedySequenceIndex, DEFAULT_LAMBDAS};
use polydom_core::harness::{
    gen_synthetic, load_dataset, monotonicity_analysis, profile_costs, read_json, read_timings, run_experiment, universe_from_profiles,
    write_json, ConfigSource, ExperimentSpec, ProfileOptions, DEFAULT_COVERAGE,
};
use polydom_core::lattice::{expand_enumerate, CharacterizedFeatureSet, ExpandOptions, FeatureUniverse, PruningParams};
use polydom_core::learner::{Combiner, Dataset, Learner, LinearLearner, LinearParams, NoisyOracle, SyntheticConfig};
use polydom_core::polydom::PolyDomIndex;
use polydom_core::{Error, Result};
use serde_json::json;

#[derive(Parser)]
#[command(name = "polydom", version, about = "Build and query cost-sensitive model indexes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic workload and write it as JSON.
    GenSynthetic {
        #[arg(long, default_value_t = 10)]
        features: usize,
        /// Probability that a feature is helpful.
        #[arg(long, default_value_t = 0.6)]
        p: f64,
        /// Combiner: top-k noisy-or, or `inf` for all features.
        #[arg(long, default_value = "1")]
        k: Combiner,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit cost polynomials to a `feature,size,elapsed_ms` timing CSV.
    ProfileCosts {
        #[arg(long)]
        timings: PathBuf,
        #[arg(long, default_value_t = 2)]
        degree: usize,
        #[arg(long, default_value_t = 1.0)]
        quantile: f64,
        /// Keep the plain least-squares fit instead of lifting it over the samples.
        #[arg(long)]
        no_envelope: bool,
        /// Where to write the feature universe.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Expand the lattice and build a poly-dom index.
    Build {
        /// Prebuilt candidate list; skips expansion.
        #[arg(long, conflicts_with_all = ["config", "data"])]
        candidates: Option<PathBuf>,
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        pruning: PruningArgs,
        #[arg(long, default_value_t = DEFAULT_N_MAX)]
        nmax: f64,
        /// Also write the candidate set here.
        #[arg(long)]
        candidates_out: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build greedy feature sequences.
    GreedyBuild {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LAMBDAS)]
        lambdas: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Variant::Lambda)]
        variant: Variant,
        /// Size the gains are evaluated at; defaults to the median training
        /// item size, or 100 for synthetic workloads.
        #[arg(long)]
        reference_size: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Look up the best model within budget in a poly-dom index.
    Query {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        budget: f64,
    },
    /// Walk a greedy index under a budget.
    GreedyQuery {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        budget: f64,
    },
    /// Run algorithms over a size x budget grid and write metrics.
    RunExperiment(ExperimentArgs),
    /// Measure monotonicity violations over the whole lattice.
    Monotonicity {
        /// Characterized sets to analyse instead of expanding a source.
        #[arg(long, conflicts_with_all = ["config", "data"])]
        sets: Option<PathBuf>,
        #[command(flatten)]
        source: SourceArgs,
        /// Superset penalty U[0, noise] applied to the learner.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Fraction of violations the recommended tolerance must cover.
        #[arg(long, default_value_t = DEFAULT_COVERAGE)]
        target: f64,
        #[arg(long, default_value_t = EXPAND_ALL_GUARD)]
        guard: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Lambda,
    Acc,
    Cost,
}

#[derive(Args)]
struct SourceArgs {
    /// Synthetic config JSON.
    #[arg(long, conflicts_with = "data")]
    config: Option<PathBuf>,
    /// Tabular data CSV.
    #[arg(long, requires = "costs")]
    data: Option<PathBuf>,
    /// Test-split id list for `--data`.
    #[arg(long, requires = "data")]
    split: Option<PathBuf>,
    /// Feature universe JSON for `--data`.
    #[arg(long, requires = "data")]
    costs: Option<PathBuf>,
    /// Learner seed for `--data`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PruningArgs {
    #[arg(long, default_value_t = 1.2)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    e: f64,
    #[arg(long)]
    no_covering: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment spec JSON; flags below override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    features: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    k: Option<Combiner>,
    #[arg(long, conflicts_with = "features")]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<String>>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    e: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    budgets: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    reference_size: Option<f64>,
    #[arg(long)]
    no_oracle_checks: bool,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

enum Source {
    Synthetic(SyntheticConfig),
    Data { dataset: Dataset, universe: FeatureUniverse, seed: u64 },
}

impl Source {
    fn load(args: &SourceArgs) -> Result<Self> {
        match (&args.config, &args.data, &args.costs) {
            (Some(path), _, _) => Ok(Source::Synthetic(read_json(path)?)),
            (None, Some(data), Some(costs)) => {
                let (dataset, universe) = load_dataset(data, args.split.as_deref(), costs)?;
                Ok(Source::Data {
                    dataset,
                    universe,
                    seed: args.seed,
                })
            }
            _ => Err(Error::Invalid("pass --config, or --data with --costs".into())),
        }
    }

    fn reference_size(&self) -> f64 {
        match self {
            Source::Synthetic(_) => 100.0,
            Source::Data { dataset, .. } => dataset.median_train_size().unwrap_or(1).max(1) as f64,
        }
    }

    fn with_learner<T>(&self, noise: f64, f: impl FnOnce(&FeatureUniverse, &dyn Learner) -> Result<T>) -> Result<T> {
        let seed = match self {
            Source::Synthetic(c) => c.seed,
            Source::Data { seed, .. } => *seed,
        };
        let run = |u: &FeatureUniverse, l: &dyn Learner| {
            if noise > 0.0 {
                f(u, &NoisyOracle::new(l, noise, seed))
            } else {
                f(u, l)
            }
        };
        match self {
            Source::Synthetic(cfg) => run(&cfg.universe(), &cfg.oracle()),
            Source::Data { dataset, universe, seed } => {
                let learner = LinearLearner::new(
                    dataset,
                    LinearParams {
                        seed: *seed,
                        ..LinearParams::default()
                    },
                )?;
                run(universe, &learner)
            }
        }
    }
}

fn emit(value: &serde_json::Value, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => write_json(path, value),
        None => {
            let mut stdout = io::stdout().lock();
            serde_json::to_writer_pretty(&mut stdout, value)?;
            writeln!(stdout)?;
            Ok(())
        }
    }
}

fn summary(value: serde_json::Value) -> Result<()> {
    emit(&value, None)
}

fn entry_json(c: &CharacterizedFeatureSet, n: u64) -> serde_json::Value {
    json!({
        "mask": c.features.mask(),
        "features": c.features.iter().collect::<Vec<_>>(),
        "accuracy": c.accuracy,
        "cost": c.cost.eval(n as f64),
        "model_id": c.model.id,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenSynthetic {
            features,
            p,
            k,
            seed,
            out,
        } => {
            let cfg = gen_synthetic(features, p, k, seed, &out)?;
            summary(json!({ "out": out, "helpful": cfg.features.iter().filter(|f| f.helpful).count() }))
        }
        Command::ProfileCosts {
            timings,
            degree,
            quantile,
            no_envelope,
            out,
        } => {
            let samples = read_timings(File::open(&timings)?)?;
            let opts = ProfileOptions {
                degree,
                quantile,
                envelope: !no_envelope,
            };
            let profiles = profile_costs(&samples, &opts)?;
            let universe = universe_from_profiles(&profiles)?;
            if let Some(out) = &out {
                write_json(out, &universe)?;
            }
            summary(serde_json::to_value(&profiles)?)
        }
        Command::Build {
            candidates,
            source,
            pruning,
            nmax,
            candidates_out,
            out,
        } => {
            let (cands, expanded) = match candidates {
                Some(path) => (read_json::<Vec<CharacterizedFeatureSet>>(&path)?, None),
                None => {
                    let mut opts = ExpandOptions::new(PruningParams::new(pruning.alpha, pruning.e)?);
                    opts.covering = !pruning.no_covering;
                    Source::load(&source)?.with_learner(0.0, |u, l| {
                        let expansion = expand_enumerate(u, l, &opts)?;
                        Ok((
                            expansion.candidates(pruning.alpha),
                            Some(expansion.count()),
                        ))
                    })?
                }
            };
            if let Some(path) = &candidates_out {
                write_json(path, &cands)?;
            }
            let index = PolyDomIndex::build_within(&cands, nmax)?;
            write_json(&out, &index)?;
            let stats = index.stats();
            summary(json!({
                "expanded": expanded,
                "candidates": cands.len(),
                "breakpoints": stats.t_int,
                "longest_skyline": stats.t_cand,
                "intersections": stats.total_intersections,
                "index_size": index.size(),
            }))
        }
        Command::GreedyBuild {
            source,
            lambdas,
            variant,
            reference_size,
            out,
        } => {
            let src = Source::load(&source)?;
            let reference = reference_size.unwrap_or_else(|| src.reference_size());
            let index = src.with_learner(0.0, |u, l| match variant {
                Variant::Lambda => build_sequences(u, l, &GreedyParams::new(lambdas.clone(), reference)?),
                Variant::Acc => greedy_acc(u, l, reference),
                Variant::Cost => greedy_cost(u, l, reference),
            })?;
            write_json(&out, &index)?;
            summary(json!({
                "sequences": index.sequences.len(),
                "unique_prefixes": index.unique_prefixes(),
                "skyline": index.skyline.len(),
                "trainings": index.trainings,
            }))
        }
        Command::Query { index, n, budget } => {
            let index: PolyDomIndex = read_json(&index)?;
            index.validate()?;
            let q = polydom_core::polydom::QueryBudget::new(n, budget)?;
            let answer = index.query(q)?;
            let mut v = entry_json(answer.entry, n);
            v["probes"] = json!(answer.probes);
            summary(v)
        }
        Command::GreedyQuery { index, n, budget } => {
            let index: GreedySequenceIndex = read_json(&index)?;
            polydom_core::polydom::QueryBudget::new(n, budget)?;
            let answer = index.query_anytime(n as f64, budget);
            let mut v = entry_json(answer.prefix, n);
            v["extracted"] = json!(answer.extracted);
            v["spent"] = json!(answer.spent);
            v["probes"] = json!(answer.probes);
            summary(v)
        }
        Command::RunExperiment(args) => {
            let spec = experiment_spec(args)?;
            let report = run_experiment(&spec)?;
            summary(json!({
                "out": spec.out,
                "results": report.results.len(),
                "rows": report.rows.len(),
            }))
        }
        Command::Monotonicity {
            sets,
            source,
            noise,
            target,
            guard,
            out,
        } => {
            let sets = match sets {
                Some(path) => read_json::<Vec<CharacterizedFeatureSet>>(&path)?,
                None => Source::load(&source)?.with_learner(noise, |u, l| naive_expand_all(u, l, guard))?,
            };
            let report = monotonicity_analysis(&sets, target)?;
            emit(&serde_json::to_value(&report)?, out.as_deref())
        }
    }
}

fn experiment_spec(a: ExperimentArgs) -> Result<ExperimentSpec> {
    let mut spec = match &a.spec {
        Some(path) => read_json(path)?,
        None => ExperimentSpec::default(),
    };
    if let Some(path) = a.config {
        spec.source = ConfigSource::SyntheticFile { path };
    } else if a.features.is_some() || a.p.is_some() || a.k.is_some() {
        let (mut n, mut p, mut k) = (10, 0.6, Combiner::TopK(1));
        if let ConfigSource::Synthetic {
            num_features,
            p: p0,
            k: k0,
        } = spec.source
        {
            (n, p, k) = (num_features, p0, k0);
        }
        spec.source = ConfigSource::Synthetic {
            num_features: a.features.unwrap_or(n),
            p: a.p.unwrap_or(p),
            k: a.k.unwrap_or(k),
        };
    }
    if let Some(names) = a.algorithms {
        spec.algorithms = names.iter().map(|s| s.parse()).collect::<Result<_>>()?;
    }
    spec.alpha = a.alpha.unwrap_or(spec.alpha);
    spec.e = a.e.unwrap_or(spec.e);
    spec.lambdas = a.lambdas.unwrap_or(spec.lambdas);
    spec.budgets = a.budgets.unwrap_or(spec.budgets);
    spec.sizes = a.sizes.unwrap_or(spec.sizes);
    spec.seeds = a.seeds.unwrap_or(spec.seeds);
    spec.noise = a.noise.unwrap_or(spec.noise);
    spec.reference_size = a.reference_size.or(spec.reference_size);
    if a.no_oracle_checks {
        spec.check_oracles = false;
    }
    spec.out = Some(a.out);
    Ok(spec)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
