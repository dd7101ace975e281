//! Repeated runs over a (function, dimension, algorithm) grid, with CSV,
//! JSONL and TOML outputs.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tfwa_core::baselines::{run_algorithm, Algorithm, BaselineConfig};
use tfwa_core::benchfns::{BenchmarkProblem, FunctionKind};
use tfwa_core::explosion::{PathWhitening, UpdateOrder};
use tfwa_core::swarm::{RunResult, SwarmConfig, TraceRecord};

use crate::stats::{mean, median, std_dev};
use crate::{Error, Result};

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CONFIG_FILE: &str = "config.toml";
pub const TRACE_DIR: &str = "traces";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: Vec<String>,
    pub dims: Vec<usize>,
    pub algos: Vec<String>,
    pub reps: usize,
    /// Evaluation budget per run is `budget_multiplier · dim`.
    pub budget_multiplier: usize,
    /// Seed of every problem instance; run `r` uses `base_seed + r`.
    pub base_seed: u64,
    pub out_dir: PathBuf,
    pub rotated: bool,
    pub shifted: bool,
    /// Worker threads; `None` uses every core.
    pub workers: Option<usize>,
    /// Whiten the step-size path with `C⁻¹` instead of `C^{-1/2}`.
    pub literal_psigma: bool,
    /// Update the evolution paths before the shape matrix.
    pub paths_first: bool,
    pub write_traces: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            suite: FunctionKind::ALL.iter().map(|k| k.name().to_string()).collect(),
            dims: vec![10],
            algos: vec![Algorithm::Tfwa.name().to_string()],
            reps: 30,
            budget_multiplier: 10_000,
            base_seed: 0,
            out_dir: PathBuf::from("results"),
            rotated: true,
            shifted: true,
            workers: None,
            literal_psigma: false,
            paths_first: false,
            write_traces: true,
        }
    }
}

/// One (function, dimension, algorithm, repetition) cell of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Job {
    pub function: FunctionKind,
    pub dim: usize,
    pub algo: Algorithm,
    pub rep: usize,
}

impl ExperimentConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn swarm_config(&self, dim: usize, rep: usize) -> SwarmConfig {
        let mut cfg = SwarmConfig::for_dim(dim);
        cfg.budget = self.budget_multiplier * dim;
        cfg.seed = self.run_seed(rep);
        if self.literal_psigma {
            cfg.explosion.whitening = PathWhitening::Inverse;
        }
        if self.paths_first {
            cfg.explosion.order = UpdateOrder::PathsFirst;
        }
        cfg
    }

    pub fn run_seed(&self, rep: usize) -> u64 {
        self.base_seed.wrapping_add(rep as u64)
    }

    /// Resolves every name and checks every setting, returning the sorted,
    /// de-duplicated job list.
    pub fn jobs(&self) -> Result<Vec<Job>> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.suite.is_empty() || self.dims.is_empty() || self.algos.is_empty() {
            return bad("suite, dims and algos must all be non-empty".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        let functions = self
            .suite
            .iter()
            .map(|s| s.parse::<FunctionKind>().map_err(|e| Error::Config(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let algos = self
            .algos
            .iter()
            .map(|s| s.parse::<Algorithm>().map_err(|e| Error::Config(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        for &dim in &self.dims {
            if dim < 2 {
                return bad(format!("dimension must be at least 2, got {dim}"));
            }
            self.swarm_config(dim, 0)
                .validate()
                .map_err(|e| Error::Config(format!("dim {dim}: {e}")))?;
        }
        let mut jobs = Vec::new();
        for &function in &functions {
            for &dim in &self.dims {
                for &algo in &algos {
                    jobs.extend((0..self.reps).map(|rep| Job { function, dim, algo, rep }));
                }
            }
        }
        jobs.sort_by(|a, b| job_key(a).cmp(&job_key(b)));
        jobs.dedup();
        Ok(jobs)
    }
}

fn job_key(j: &Job) -> (&'static str, usize, &'static str, usize) {
    (j.function.name(), j.dim, j.algo.name(), j.rep)
}

/// One line of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub problem: String,
    pub dim: usize,
    pub algo: String,
    pub rep: usize,
    pub seed: u64,
    pub best_gap: f64,
    pub evals: usize,
    pub generations: u64,
    pub restarts: usize,
}

/// One line of the summary CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub problem: String,
    pub dim: usize,
    pub algo: String,
    pub runs: usize,
    pub mean_gap: f64,
    pub std_gap: f64,
    pub median_gap: f64,
    pub min_gap: f64,
    pub max_gap: f64,
}

/// One line of a trace JSONL file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub gen: u64,
    pub fw: usize,
    pub gap: f64,
    pub df: Option<f64>,
    pub scale: f64,
    pub restart: bool,
}

impl From<&TraceRecord> for TraceLine {
    fn from(r: &TraceRecord) -> Self {
        Self { gen: r.gen, fw: r.fw, gap: r.gap, df: r.df, scale: r.scale, restart: r.restart }
    }
}

pub fn problem_for(config: &ExperimentConfig, function: FunctionKind, dim: usize) -> Result<BenchmarkProblem> {
    Ok(BenchmarkProblem::new(function, dim, config.base_seed, config.rotated, config.shifted)?)
}

/// Runs a single job and returns the full result.
pub fn run_job(config: &ExperimentConfig, job: &Job) -> Result<RunResult> {
    let problem = problem_for(config, job.function, job.dim)?;
    let swarm = config.swarm_config(job.dim, job.rep);
    Ok(run_algorithm(job.algo, &problem, &swarm, &BaselineConfig::default())?)
}

pub fn trace_file_name(job: &Job) -> String {
    format!("{}_d{}_{}_r{:03}.jsonl", job.function.name(), job.dim, job.algo.name(), job.rep)
}

pub fn write_trace(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for rec in trace {
        serde_json::to_writer(&mut w, &TraceLine::from(rec))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceLine>> {
    let text = fs::read_to_string(path)?;
    text.lines().map(|l| Ok(serde_json::from_str(l)?)).collect()
}

/// Runs every job (in parallel) and writes the results CSV, the summary
/// CSV, the config echo and, if enabled, one trace per run into
/// `out_dir`. Rows come back in (problem, dim, algo, rep) order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let jobs = config.jobs()?;
    let out = &config.out_dir;
    fs::create_dir_all(out)?;
    let trace_dir = out.join(TRACE_DIR);
    if config.write_traces {
        fs::create_dir_all(&trace_dir)?;
    }
    fs::write(out.join(CONFIG_FILE), config.to_toml()?)?;

    let work = || -> Result<Vec<ResultRow>> {
        jobs.par_iter()
            .map(|job| {
                let result = run_job(config, job)?;
                if config.write_traces {
                    write_trace(&trace_dir.join(trace_file_name(job)), &result.trace)?;
                }
                Ok(ResultRow {
                    problem: job.function.name().to_string(),
                    dim: job.dim,
                    algo: job.algo.name().to_string(),
                    rep: job.rep,
                    seed: config.run_seed(job.rep),
                    best_gap: result.best_fitness,
                    evals: result.evals_used,
                    generations: result.generations,
                    restarts: result.restarts,
                })
            })
            .collect()
    };
    let rows = match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(work)?,
        None => work()?,
    };

    write_csv(&out.join(RESULTS_FILE), &rows)?;
    write_csv(&out.join(SUMMARY_FILE), &summarize(&rows))?;
    Ok(rows)
}

/// Per (problem, dim, algo) statistics of the final gaps.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(&str, usize, &str), Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups.entry((&r.problem, r.dim, &r.algo)).or_default().push(r.best_gap);
    }
    groups
        .into_iter()
        .map(|((problem, dim, algo), gaps)| SummaryRow {
            problem: problem.to_string(),
            dim,
            algo: algo.to_string(),
            runs: gaps.len(),
            mean_gap: mean(&gaps),
            std_gap: std_dev(&gaps),
            median_gap: median(&gaps),
            min_gap: gaps.iter().copied().fold(f64::INFINITY, f64::min),
            max_gap: gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
        .collect()
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| Ok(row?)).collect()
}

/// Final gaps keyed by `problem_d{dim}`, for a single algorithm.
pub fn samples_by_function(rows: &[ResultRow], algo: &str) -> BTreeMap<String, Vec<f64>> {
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.algo == algo) {
        out.entry(function_key(&r.problem, r.dim)).or_default().push(r.best_gap);
    }
    out
}

pub fn function_key(problem: &str, dim: usize) -> String {
    format!("{problem}_d{dim}")
}

/// The distinct algorithm names in `rows`, sorted.
pub fn algorithms(rows: &[ResultRow]) -> Vec<String> {
    let mut names: Vec<String> = rows.iter().map(|r| r.algo.clone()).collect();
    names.sort();
    names.dedup();
    names
}
