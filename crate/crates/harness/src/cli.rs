//! The `tfwa` command line: `run`, `compare` and `rank`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::experiment::{self, ExperimentConfig, ResultRow};
use crate::stats::{self, DEFAULT_ALPHA};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "tfwa", version, about = "Student's t fireworks optimizer benchmark harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run repeated seeded experiments and write results, summary and traces.
    Run(RunArgs),
    /// Win/lose/tie of one results file against another.
    Compare(CompareArgs),
    /// Average rank of every algorithm across result files.
    Rank(RankArgs),
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub suite: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub algos: Option<Vec<String>>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Budget per run is this times the dimension.
    #[arg(long = "budget-mult")]
    pub budget_mult: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Whiten the step-size path with C⁻¹ instead of C^{-1/2}.
    #[arg(long)]
    pub literal_psigma: bool,
    /// Update the evolution paths before the shape matrix.
    #[arg(long)]
    pub paths_first: bool,
    #[arg(long)]
    pub no_rotation: bool,
    #[arg(long)]
    pub no_shift: bool,
    #[arg(long)]
    pub no_traces: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Algorithm to take from A (needed if A holds several).
    #[arg(long)]
    pub algo_a: Option<String>,
    /// Algorithm to take from B (needed if B holds several).
    #[arg(long)]
    pub algo_b: Option<String>,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub inputs: Vec<PathBuf>,
}

impl RunArgs {
    /// The config file (or defaults) with every given flag applied.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_toml_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.suite {
            c.suite = v.clone();
        }
        if let Some(v) = &self.dims {
            c.dims = v.clone();
        }
        if let Some(v) = &self.algos {
            c.algos = v.clone();
        }
        if let Some(v) = self.reps {
            c.reps = v;
        }
        if let Some(v) = self.budget_mult {
            c.budget_multiplier = v;
        }
        if let Some(v) = self.seed {
            c.base_seed = v;
        }
        if let Some(v) = &self.out {
            c.out_dir = v.clone();
        }
        if self.workers.is_some() {
            c.workers = self.workers;
        }
        c.literal_psigma |= self.literal_psigma;
        c.paths_first |= self.paths_first;
        c.rotated &= !self.no_rotation;
        c.shifted &= !self.no_shift;
        c.write_traces &= !self.no_traces;
        Ok(c)
    }
}

/// Parses `args`, runs the command and maps the outcome to an exit code:
/// 0 on success, 2 for usage or config errors, 1 otherwise.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli, &mut io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                _ => 1,
            })
        }
    }
}

pub fn execute<W: Write>(cli: &Cli, out: &mut W) -> Result<()> {
    match &cli.command {
        Command::Run(args) => run(args, out),
        Command::Compare(args) => compare(args, out),
        Command::Rank(args) => rank(args, out),
    }
}

fn run<W: Write>(args: &RunArgs, out: &mut W) -> Result<()> {
    let config = args.resolve()?;
    let rows = experiment::run_experiment(&config)?;
    for s in experiment::summarize(&rows) {
        writeln!(
            out,
            "{:<22} d={:<3} {:<15} mean {:.4e}  std {:.4e}  median {:.4e}",
            s.problem, s.dim, s.algo, s.mean_gap, s.std_gap, s.median_gap
        )?;
    }
    writeln!(out, "wrote {} runs to {}", rows.len(), config.out_dir.display())?;
    Ok(())
}

fn load(path: &Path) -> Result<Vec<ResultRow>> {
    experiment::read_results(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn pick_algo(rows: &[ResultRow], wanted: Option<&String>, path: &Path) -> Result<String> {
    let names = experiment::algorithms(rows);
    match wanted {
        Some(name) if names.contains(name) => Ok(name.clone()),
        Some(name) => Err(Error::Config(format!("{}: no rows for algorithm {name}", path.display()))),
        None if names.len() == 1 => Ok(names[0].clone()),
        None => Err(Error::Config(format!(
            "{} holds several algorithms {names:?}; pick one",
            path.display()
        ))),
    }
}

fn compare<W: Write>(args: &CompareArgs, out: &mut W) -> Result<()> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", args.alpha)));
    }
    let rows_a = load(&args.a)?;
    let rows_b = load(&args.b)?;
    let algo_a = pick_algo(&rows_a, args.algo_a.as_ref(), &args.a)?;
    let algo_b = pick_algo(&rows_b, args.algo_b.as_ref(), &args.b)?;
    let a = experiment::samples_by_function(&rows_a, &algo_a);
    let b = experiment::samples_by_function(&rows_b, &algo_b);
    let cell = stats::win_lose_tie(&a, &b, args.alpha)?;

    writeln!(out, "{algo_a} vs {algo_b} (alpha = {})", args.alpha)?;
    for (name, xs) in &a {
        let ys = &b[name];
        let p = stats::wilcoxon_rank_sum(xs, ys)?.p_value;
        let verdict = match stats::verdict(xs, ys, args.alpha)? {
            Some(true) => "win",
            Some(false) => "lose",
            None => "tie",
        };
        writeln!(
            out,
            "{name:<26} {:.4e} {:.4e}  p = {p:.3e}  {verdict}",
            stats::mean(xs),
            stats::mean(ys)
        )?;
    }
    writeln!(out, "win/lose/tie: {}/{}/{}", cell.win, cell.lose, cell.tie)?;
    Ok(())
}

fn rank<W: Write>(args: &RankArgs, out: &mut W) -> Result<()> {
    let mut rows = Vec::new();
    for path in &args.inputs {
        rows.extend(load(path)?);
    }
    let mut gaps: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for r in &rows {
        gaps.entry(experiment::function_key(&r.problem, r.dim))
            .or_default()
            .entry(r.algo.clone())
            .or_default()
            .push(r.best_gap);
    }
    let table = gaps
        .into_iter()
        .map(|(f, by_algo)| (f, by_algo.into_iter().map(|(a, g)| (a, stats::mean(&g))).collect()))
        .collect();
    let ranks = stats::average_rank(&table)?;
    let mut ordered: Vec<_> = ranks.into_iter().collect();
    ordered.sort_by(|x, y| x.1.total_cmp(&y.1).then_with(|| x.0.cmp(&y.0)));
    for (algo, r) in ordered {
        writeln!(out, "{algo:<15} {r:.3}")?;
    }
    Ok(())
}
