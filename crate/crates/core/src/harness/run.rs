use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::export;
use super::params::{param_reduction, ParamReduction};
use crate::astar::{astar_prune, CostMode, SearchOptions};
use crate::baselines::{global_prune, local_prune, random_experiment, DistributionSummary};
use crate::error::{Error, Result};
use crate::heads::Geometry;
use crate::oracle::{EvalCounter, Evaluator};
use crate::solution::{PruneSolution, StopReason, Strategy, ZeroBudgetSummary};

pub const REPORT_FILE: &str = "report.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const MASK_FILE: &str = "mask.csv";
pub const COSTS_FILE: &str = "costs.csv";
pub const DISTRIBUTION_FILE: &str = "distribution.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const BUDGET_HISTOGRAM_FILE: &str = "budget_histogram.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const METADATA_FILE: &str = "metadata.json";

/// Files written by one run. Optional entries depend on the strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub report: PathBuf,
    pub trace: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    pub costs: Option<PathBuf>,
    pub distribution: Option<PathBuf>,
    pub histogram: Option<PathBuf>,
    pub manifest: PathBuf,
    pub metadata: PathBuf,
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSummary {
    pub budget_used: f64,
    pub budget_remaining: Option<f64>,
    pub pruned: usize,
    pub compression: f64,
    pub final_accuracy: f64,
    pub zero_budget: ZeroBudgetSummary,
    pub searches: u64,
    pub candidates: u64,
    pub stop: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSummary {
    pub trials: usize,
    pub pruned_min: usize,
    pub pruned_median: f64,
    pub pruned_p95: usize,
    pub pruned_max: usize,
    pub pruned_mode: usize,
}

/// Deterministic run record: everything needed to assemble a results table
/// across runs. Wall-clock times live in the metadata file instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub strategy: Strategy,
    pub cost_mode: CostMode,
    pub budget: Option<f64>,
    pub seed: u64,
    pub config_hash: String,
    pub oracle_hash: String,
    pub geometry: Geometry,
    pub baseline_accuracy: f64,
    pub evaluations: EvalCounter,
    pub solution: Option<SolutionSummary>,
    pub random: Option<RandomSummary>,
    pub parameters: Option<ParamReduction>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Metadata {
    version: String,
    started_unix: u64,
    finished_unix: u64,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_solution_files(dir: &Path, solution: &PruneSolution, artifacts: &mut RunArtifacts) -> Result<()> {
    std::fs::write(&artifacts.report, solution.to_json()?).map_err(|e| Error::io(&artifacts.report, e))?;
    let trace = dir.join(TRACE_FILE);
    export::write_trace(solution, create(&trace)?)?;
    let mask = dir.join(MASK_FILE);
    export::write_mask_matrix(solution, create(&mask)?)?;
    let costs = dir.join(COSTS_FILE);
    export::write_sorted_costs(solution, create(&costs)?)?;
    artifacts.trace = Some(trace);
    artifacts.mask = Some(mask);
    artifacts.costs = Some(costs);
    Ok(())
}

fn summarize_solution(s: &PruneSolution) -> SolutionSummary {
    let remaining = s.budget.remaining();
    SolutionSummary {
        budget_used: s.budget.charged(),
        budget_remaining: remaining.is_finite().then_some(remaining),
        pruned: s.pruned.len(),
        compression: s.compression(),
        final_accuracy: s.final_accuracy,
        zero_budget: s.zero_budget_summary(),
        searches: s.evaluations.computed,
        candidates: s.evaluations.candidates,
        stop: match &s.stop {
            StopReason::BudgetExhausted => "budget_exhausted".into(),
            StopReason::SearchSpaceEmpty => "search_space_empty".into(),
            StopReason::OverBudget { .. } => "over_budget".into(),
            StopReason::Aborted { message } => format!("aborted: {message}"),
        },
    }
}

/// Builds the oracle, runs the configured strategy and writes every
/// artifact under `config.out`. With `record_table`, the evaluations made
/// during the run are also dumped as a table-oracle file.
///
/// If the oracle fails mid-search, the partial report is still written and
/// the error is returned.
pub fn run(config: &RunConfig, record_table: Option<&Path>) -> Result<RunArtifacts> {
    let started = unix_now();
    let evaluator = config.oracle.build()?;
    if let Some(g) = config.geometry {
        if g != evaluator.geometry() {
            return Err(Error::Config(vec![format!(
                "geometry: config says {g} but the oracle reports {}",
                evaluator.geometry()
            )]));
        }
    }
    let dir = &config.out;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut artifacts = RunArtifacts {
        report: dir.join(REPORT_FILE),
        trace: None,
        mask: None,
        costs: None,
        distribution: None,
        histogram: None,
        manifest: dir.join(MANIFEST_FILE),
        metadata: dir.join(METADATA_FILE),
        table: None,
    };

    let outcome = execute(config, &evaluator, dir, &mut artifacts);

    if let Some(path) = record_table {
        evaluator.to_table().save(path)?;
        artifacts.table = Some(path.to_path_buf());
    }
    let (solution, random) = match outcome {
        Ok(v) => v,
        Err(Error::Aborted { source, partial }) => {
            write_solution_files(dir, &partial, &mut artifacts)?;
            return Err(Error::Aborted { source, partial });
        }
        Err(e) => return Err(e),
    };

    let parameters = match (&config.model_dims, &solution) {
        (Some(d), Some(s)) => Some(param_reduction(d, s.pruned.len())?),
        _ => None,
    };
    let manifest = Manifest {
        strategy: config.strategy,
        cost_mode: config.cost_mode,
        budget: config.budget.is_finite().then_some(config.budget),
        seed: config.seed,
        config_hash: config.hash()?,
        oracle_hash: config.oracle.hash()?,
        geometry: evaluator.geometry(),
        baseline_accuracy: evaluator.baseline(),
        evaluations: evaluator.counter(),
        solution: solution.as_ref().map(summarize_solution),
        random: random.as_ref().map(|d| RandomSummary {
            trials: d.trials,
            pruned_min: d.pruned_min,
            pruned_median: d.pruned_median,
            pruned_p95: d.pruned_p95,
            pruned_max: d.pruned_max,
            pruned_mode: d.mode(),
        }),
        parameters,
    };
    write_json(&artifacts.manifest, &manifest)?;
    write_json(
        &artifacts.metadata,
        &Metadata {
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: started,
            finished_unix: unix_now(),
        },
    )?;
    Ok(artifacts)
}

type Outcome = (Option<PruneSolution>, Option<DistributionSummary>);

fn execute(config: &RunConfig, evaluator: &Evaluator, dir: &Path, artifacts: &mut RunArtifacts) -> Result<Outcome> {
    let options = SearchOptions {
        mode: config.cost_mode,
        workers: config.workers,
    };
    let solution = match config.strategy {
        Strategy::Astar => astar_prune(evaluator, config.budget, options)?,
        Strategy::Local => local_prune(evaluator, config.budget, options)?,
        Strategy::Global => global_prune(evaluator, config.budget, options)?,
        Strategy::Random => {
            let summary = random_experiment(evaluator, config.budget, config.trials, config.seed, config.workers)?;
            write_json(&artifacts.report, &summary)?;
            let distribution = dir.join(DISTRIBUTION_FILE);
            export::write_trials(&summary, create(&distribution)?)?;
            let histogram = dir.join(HISTOGRAM_FILE);
            export::write_histogram(&summary, create(&histogram)?)?;
            export::write_budget_histogram(&summary, create(&dir.join(BUDGET_HISTOGRAM_FILE))?)?;
            artifacts.distribution = Some(distribution);
            artifacts.histogram = Some(histogram);
            return Ok((None, Some(summary)));
        }
    };
    write_solution_files(dir, &solution, artifacts)?;
    Ok((Some(solution), None))
}

pub fn load_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Results-table CSV across run directories, one row per run.
pub fn summarize(dirs: &[PathBuf]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "run",
        "strategy",
        "budget_given",
        "budget_used",
        "budget_remaining",
        "zero_budget_heads",
        "zero_budget_compression",
        "zero_budget_accuracy",
        "heads_pruned",
        "compression",
        "accuracy",
        "searches",
        "params_remaining",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for dir in dirs {
        let m = load_manifest(dir)?;
        let mut row = vec![dir.display().to_string(), m.strategy.to_string(), opt(m.budget)];
        match &m.solution {
            Some(s) => row.extend([
                s.budget_used.to_string(),
                opt(s.budget_remaining),
                s.zero_budget.heads_at_zero.to_string(),
                format!("{:.2}", s.zero_budget.compression_at_zero),
                s.zero_budget.accuracy_at_zero.to_string(),
                s.pruned.to_string(),
                format!("{:.2}", s.compression),
                s.final_accuracy.to_string(),
                s.searches.to_string(),
            ]),
            None => {
                let heads = m.random.as_ref().map(|r| r.pruned_mode.to_string()).unwrap_or_default();
                row.extend([
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    heads,
                    String::new(),
                    String::new(),
                    m.evaluations.computed.to_string(),
                ]);
            }
        }
        row.push(m.parameters.map(|p| p.remaining.to_string()).unwrap_or_default());
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Invariant(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
