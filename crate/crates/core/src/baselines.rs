//! Reference strategies for comparison runs.
//!
//! - `gaussian_limit`: the same swarm with df frozen at 10⁸, i.e. Gaussian
//!   explosions with CMA-style updates.
//! - `uniform_fwa`: fireworks exploding uniformly in a hypercube whose
//!   half-width grows by 1.2 on success and shrinks by 0.9 on failure.
//! - `random_search`: uniform sampling over the whole box.
//!
//! All of them share the budget accounting and trace format of
//! [`crate::swarm`].

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};

use crate::swarm::{initial_mean, run, tournament_loses, RunResult, SwarmConfig, TraceRecord, Tracked};
use crate::{Error, Problem, Result, SeededRng};

/// Degrees of freedom used to emulate a Gaussian.
pub const GAUSSIAN_DF: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Tfwa,
    GaussianLimit,
    UniformFwa,
    RandomSearch,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Tfwa,
        Algorithm::GaussianLimit,
        Algorithm::UniformFwa,
        Algorithm::RandomSearch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Tfwa => "tfwa",
            Algorithm::GaussianLimit => "gaussian-limit",
            Algorithm::UniformFwa => "uniform-fwa",
            Algorithm::RandomSearch => "random-search",
        }
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
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == key)
            .ok_or_else(|| Error::InvalidParameter(alloc::format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    /// Initial hypercube half-width; `None` means `(ub - lb) / 2`.
    pub amplitude_init: Option<f64>,
    pub amplitude_decay: f64,
    pub amplitude_growth: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self { amplitude_init: None, amplitude_decay: 0.9, amplitude_growth: 1.2 }
    }
}

/// Runs `algo` with the shared swarm settings.
pub fn run_algorithm<P: Problem + ?Sized>(
    algo: Algorithm,
    problem: &P,
    config: &SwarmConfig,
    baseline: &BaselineConfig,
) -> Result<RunResult> {
    match algo {
        Algorithm::Tfwa => run(problem, config),
        Algorithm::GaussianLimit => gaussian_limit_run(problem, config),
        Algorithm::UniformFwa => uniform_fwa_run(problem, config, baseline),
        Algorithm::RandomSearch => random_search_run(problem, config),
    }
}

/// The swarm with df fixed at [`GAUSSIAN_DF`] and df adaptation disabled.
pub fn gaussian_limit_run<P: Problem + ?Sized>(problem: &P, config: &SwarmConfig) -> Result<RunResult> {
    let mut cfg = config.clone();
    cfg.df_init = GAUSSIAN_DF;
    cfg.explosion.adapt_df = false;
    run(problem, &cfg)
}

#[derive(Debug, Clone)]
struct UniformFirework {
    mean: DVector<f64>,
    fitness: f64,
    prev_fitness: f64,
    amplitude: f64,
    improvement: f64,
}

impl UniformFirework {
    fn new(mean: DVector<f64>, fitness: f64, amplitude: f64) -> Self {
        Self { mean, fitness, prev_fitness: fitness, amplitude, improvement: 0.0 }
    }
}

/// Uniform hypercube sample around `center`, clipped to the box.
pub fn hypercube_spark<R: Rng + ?Sized>(
    center: &DVector<f64>,
    amplitude: f64,
    bounds: (f64, f64),
    rng: &mut R,
) -> DVector<f64> {
    center.map(|c| (c + rng.random_range(-amplitude..=amplitude)).clamp(bounds.0, bounds.1))
}

/// Amplitude after one generation: grown on success, shrunk otherwise,
/// always within `(0, ub - lb]`.
pub fn next_amplitude(amplitude: f64, improved: bool, baseline: &BaselineConfig, range: f64) -> f64 {
    let a = if improved { amplitude * baseline.amplitude_growth } else { amplitude * baseline.amplitude_decay };
    a.clamp(f64::MIN_POSITIVE, range)
}

/// Fireworks with uniform hypercube explosions and elitist moves, under the
/// same budget and loser-out tournament as the t-swarm.
pub fn uniform_fwa_run<P: Problem + ?Sized>(
    problem: &P,
    config: &SwarmConfig,
    baseline: &BaselineConfig,
) -> Result<RunResult> {
    config.validate()?;
    let tracked = Tracked::new(problem);
    let mut rng = SeededRng::seed_from_u64(config.seed);
    let bounds = problem.bounds();
    let range = bounds.1 - bounds.0;
    let a0 = baseline.amplitude_init.unwrap_or(range / 2.0).clamp(f64::MIN_POSITIVE, range);
    let lambda = config.sparks_per_firework;
    let n = config.n_fireworks;
    let g_max = config.max_generations();
    let f_star = problem.optimum_value().unwrap_or(0.0);

    let mut fireworks = Vec::with_capacity(n);
    for _ in 0..n {
        let mean = initial_mean(problem.dim(), bounds, &mut rng);
        let f = tracked.evaluate(&mean)?;
        fireworks.push(UniformFirework::new(mean, f, a0));
    }

    let mut trace = Vec::new();
    let mut best_history = Vec::new();
    let mut generation = 0u64;
    let mut restarts = 0;
    while tracked.evals() + n * lambda <= config.budget {
        generation += 1;
        for fw in fireworks.iter_mut() {
            let mut best: Option<(f64, DVector<f64>)> = None;
            for _ in 0..lambda {
                let x = hypercube_spark(&fw.mean, fw.amplitude, bounds, &mut rng);
                let f = tracked.evaluate(&x)?;
                if best.as_ref().map_or(true, |b| f < b.0) {
                    best = Some((f, x));
                }
            }
            let (f, x) = best.expect("lambda >= 2");
            fw.prev_fitness = fw.fitness;
            let improved = f < fw.fitness;
            if improved {
                fw.fitness = f;
                fw.mean = x;
            }
            fw.amplitude = next_amplitude(fw.amplitude, improved, baseline, range);
        }

        let global_best = fireworks.iter().map(|fw| fw.fitness).fold(f64::INFINITY, f64::min);
        let mut restarted = vec![false; n];
        for (i, fw) in fireworks.iter_mut().enumerate() {
            let (cur, prev) = (fw.fitness, fw.prev_fitness);
            let loses = tournament_loses(&mut fw.improvement, cur, prev, cur, generation, g_max, global_best, config.eps);
            if loses && tracked.evals() < config.budget {
                let mean = initial_mean(problem.dim(), bounds, &mut rng);
                let f = tracked.evaluate(&mean)?;
                *fw = UniformFirework::new(mean, f, a0);
                restarted[i] = true;
                restarts += 1;
            }
        }

        for (i, fw) in fireworks.iter().enumerate() {
            trace.push(TraceRecord {
                gen: generation,
                fw: i,
                gap: fw.fitness - f_star,
                df: None,
                scale: fw.amplitude,
                restart: restarted[i],
            });
        }
        best_history.push(tracked.best_fitness());
    }

    let (best_fitness, best_position) = tracked.best().expect("initial means were evaluated");
    Ok(RunResult {
        best_position,
        best_fitness,
        evals_used: tracked.evals(),
        generations: generation,
        restarts,
        best_history,
        trace,
    })
}

/// Uniform sampling over the box in batches of `n_fireworks · λ`.
pub fn random_search_run<P: Problem + ?Sized>(problem: &P, config: &SwarmConfig) -> Result<RunResult> {
    config.validate()?;
    let tracked = Tracked::new(problem);
    let mut rng = SeededRng::seed_from_u64(config.seed);
    let bounds = problem.bounds();
    let batch = config.n_fireworks * config.sparks_per_firework;
    let f_star = problem.optimum_value().unwrap_or(0.0);

    let mut trace = Vec::new();
    let mut best_history = Vec::new();
    let mut generation = 0u64;
    while tracked.evals() + batch <= config.budget {
        generation += 1;
        for _ in 0..batch {
            let x = DVector::from_fn(problem.dim(), |_, _| rng.random_range(bounds.0..=bounds.1));
            tracked.evaluate(&x)?;
        }
        let best = tracked.best_fitness();
        trace.push(TraceRecord {
            gen: generation,
            fw: 0,
            gap: best - f_star,
            df: None,
            scale: bounds.1 - bounds.0,
            restart: false,
        });
        best_history.push(best);
    }

    let (best_fitness, best_position) = tracked
        .best()
        .ok_or_else(|| Error::InvalidParameter("budget too small for a single batch".into()))?;
    Ok(RunResult {
        best_position,
        best_fitness,
        evals_used: tracked.evals(),
        generations: generation,
        restarts: 0,
        best_history,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::FnProblem;

    #[test]
    fn algorithm_names() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!("gaussian_limit".parse::<Algorithm>().unwrap(), Algorithm::GaussianLimit);
        assert!("lotfwa".parse::<Algorithm>().is_err());
    }

    #[test]
    fn amplitude_decay_law() {
        let b = BaselineConfig::default();
        let mut a = 50.0;
        for _ in 0..7 {
            a = next_amplitude(a, false, &b, 200.0);
        }
        assert!((a - 50.0 * 0.9f64.powi(7)).abs() < 1e-12);
        assert_eq!(next_amplitude(190.0, true, &b, 200.0), 200.0);
        assert!(next_amplitude(f64::MIN_POSITIVE, false, &b, 200.0) > 0.0);
    }

    #[test]
    fn hypercube_support() {
        let mut rng = SeededRng::seed_from_u64(1);
        let c = DVector::from_vec(vec![95.0, 0.0, -99.0]);
        for _ in 0..1000 {
            let x = hypercube_spark(&c, 10.0, (-100.0, 100.0), &mut rng);
            for (xi, ci) in x.iter().zip(c.iter()) {
                assert!((xi - ci).abs() <= 10.0 && (-100.0..=100.0).contains(xi));
            }
        }
    }

    #[test]
    fn flat_objective_never_moves_uniform_fireworks() {
        let p = FnProblem::new(3, -100.0, 100.0, |_: &DVector<f64>| 1.0);
        let mut cfg = SwarmConfig::for_dim(3);
        cfg.budget = 3_000;
        let r = uniform_fwa_run(&p, &cfg, &BaselineConfig::default()).unwrap();
        assert!(r.evals_used <= cfg.budget);
        // first generation: no strict improvement, so the amplitude decays
        assert!((r.trace[0].scale - 100.0 * 0.9).abs() < 1e-12);
    }

    #[test]
    fn random_search_respects_budget() {
        let p = FnProblem::new(4, -5.0, 5.0, |x: &DVector<f64>| x.norm_squared());
        let mut cfg = SwarmConfig::for_dim(4);
        cfg.budget = 1_000;
        let r = random_search_run(&p, &cfg).unwrap();
        assert!(r.evals_used <= 1_000);
        assert!(r.best_history.windows(2).all(|w| w[1] <= w[0]));
    }
}
