//! Multi-firework driver: synchronous generations of explosions followed by
//! the loser-out tournament, under a fixed evaluation budget.

use alloc::vec;
use alloc::vec::Vec;
use core::cell::{Cell, RefCell};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};

use crate::explosion::{explode, ExplosionConfig, FireworkState, StrategyParams};
use crate::{Error, Problem, Result, SeededRng};

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmConfig {
    pub n_fireworks: usize,
    /// Per-firework multiplicative df growth factor; one entry per firework.
    pub df_factors: Vec<f64>,
    pub df_init: f64,
    pub sparks_per_firework: usize,
    /// Maximum number of objective evaluations, not counting the initial
    /// evaluation of each firework's mean.
    pub budget: usize,
    /// Minimum per-generation improvement the tournament registers.
    pub eps: f64,
    pub seed: u64,
    pub explosion: ExplosionConfig,
}

impl SwarmConfig {
    /// Defaults for a `dim`-dimensional problem: two fireworks with df
    /// factors 1.05 and 10, df 5, `10·dim/2` sparks each and a budget of
    /// `10000·dim` evaluations.
    pub fn for_dim(dim: usize) -> Self {
        let n_fireworks = 2;
        Self {
            n_fireworks,
            df_factors: vec![1.05, 10.0],
            df_init: 5.0,
            sparks_per_firework: (10 * dim / n_fireworks).max(2),
            budget: 10_000 * dim,
            eps: 1e-6,
            seed: 0,
            explosion: ExplosionConfig::adaptive(),
        }
    }

    /// Sets the firework count, cycling the default factors `[1.05, 10]`.
    pub fn with_fireworks(mut self, n: usize, dim: usize) -> Self {
        self.n_fireworks = n;
        self.df_factors = (0..n).map(|i| if i % 2 == 0 { 1.05 } else { 10.0 }).collect();
        self.sparks_per_firework = (10 * dim / n.max(1)).max(2);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidParameter(msg));
        if self.n_fireworks == 0 {
            return bad("need at least one firework".into());
        }
        if self.df_factors.len() != self.n_fireworks {
            return bad(alloc::format!(
                "{} df factors for {} fireworks",
                self.df_factors.len(),
                self.n_fireworks
            ));
        }
        if self.df_factors.iter().any(|f| f.is_nan() || *f <= 1.0) {
            return bad("df factors must exceed 1".into());
        }
        if self.df_init.is_nan() || self.df_init <= 0.0 {
            return bad("initial df must be positive".into());
        }
        if self.sparks_per_firework < 2 {
            return bad("need at least 2 sparks per firework".into());
        }
        if self.budget < self.n_fireworks * (self.sparks_per_firework + 1) {
            return bad(alloc::format!("budget {} too small for one generation", self.budget));
        }
        if self.eps.is_nan() || self.eps < 0.0 {
            return bad("eps must be non-negative".into());
        }
        Ok(())
    }

    /// Last generation index reachable within the budget.
    pub fn max_generations(&self) -> u64 {
        ((self.budget.saturating_sub(self.n_fireworks)) / (self.n_fireworks * self.sparks_per_firework)) as u64
    }
}

/// One firework's state after a generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub gen: u64,
    pub fw: usize,
    /// The firework's own best fitness (since its last restart) minus the
    /// known optimum.
    pub gap: f64,
    /// `None` for strategies without a t-distribution.
    pub df: Option<f64>,
    pub scale: f64,
    /// The firework was restarted in this generation; the other fields
    /// describe the fresh firework.
    pub restart: bool,
}

/// Receives trace records as a run progresses.
pub trait TraceSink {
    fn record(&mut self, rec: &TraceRecord);
}

impl TraceSink for Vec<TraceRecord> {
    fn record(&mut self, rec: &TraceRecord) {
        self.push(*rec);
    }
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _: &TraceRecord) {}
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub best_position: DVector<f64>,
    pub best_fitness: f64,
    pub evals_used: usize,
    pub generations: u64,
    pub restarts: usize,
    /// Swarm best-so-far fitness after each generation.
    pub best_history: Vec<f64>,
    pub trace: Vec<TraceRecord>,
}

impl RunResult {
    /// `best_fitness` minus the problem's optimum (or itself if unknown).
    pub fn gap<P: Problem + ?Sized>(&self, problem: &P) -> f64 {
        self.best_fitness - problem.optimum_value().unwrap_or(0.0)
    }
}

/// Counts evaluations and remembers the best point ever evaluated.
#[derive(Debug)]
pub(crate) struct Tracked<'a, P: ?Sized> {
    inner: &'a P,
    evals: Cell<usize>,
    best: RefCell<Option<(f64, DVector<f64>)>>,
}

impl<'a, P: Problem + ?Sized> Tracked<'a, P> {
    pub(crate) fn new(inner: &'a P) -> Self {
        Self { inner, evals: Cell::new(0), best: RefCell::new(None) }
    }

    pub(crate) fn evals(&self) -> usize {
        self.evals.get()
    }

    pub(crate) fn best(&self) -> Option<(f64, DVector<f64>)> {
        self.best.borrow().clone()
    }

    pub(crate) fn best_fitness(&self) -> f64 {
        self.best.borrow().as_ref().map_or(f64::INFINITY, |b| b.0)
    }
}

impl<P: Problem + ?Sized> Problem for Tracked<'_, P> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn bounds(&self) -> (f64, f64) {
        self.inner.bounds()
    }

    fn evaluate(&self, x: &DVector<f64>) -> Result<f64> {
        let f = self.inner.evaluate(x)?;
        self.evals.set(self.evals.get() + 1);
        let mut best = self.best.borrow_mut();
        if best.as_ref().map_or(true, |b| f < b.0) {
            *best = Some((f, x.clone()));
        }
        Ok(f)
    }

    fn optimum_value(&self) -> Option<f64> {
        self.inner.optimum_value()
    }
}

/// Mean drawn uniformly from `[lb/2, ub/2]^d`.
pub(crate) fn initial_mean<R: Rng + ?Sized>(dim: usize, bounds: (f64, f64), rng: &mut R) -> DVector<f64> {
    let (lo, hi) = (bounds.0 / 2.0, bounds.1 / 2.0);
    DVector::from_fn(dim, |_, _| rng.random_range(lo..=hi))
}

/// Loser-out decision shared by every multi-firework strategy.
///
/// `current` and `previous` are the firework's fitness this and last
/// generation; `improvement` is updated when the firework gained more than
/// `eps`. The firework loses when even sustaining that improvement for the
/// remaining `g_max - g` generations would not bring `own_best` down to
/// `global_best`.
#[allow(clippy::too_many_arguments)]
pub fn tournament_loses(
    improvement: &mut f64,
    current: f64,
    previous: f64,
    own_best: f64,
    g: u64,
    g_max: u64,
    global_best: f64,
    eps: f64,
) -> bool {
    if current < previous - eps {
        *improvement = previous - current;
    }
    let remaining = g_max.saturating_sub(g) as f64;
    *improvement * remaining < own_best - global_best
}

/// Tournament check for one t-firework; updates its `improvement`.
pub fn loser_out_check(fw: &mut FireworkState, g: u64, g_max: u64, global_best: f64, eps: f64) -> bool {
    let (current, previous, own_best) = (fw.last_gen_best, fw.prev_gen_best, fw.best_fitness);
    tournament_loses(&mut fw.improvement, current, previous, own_best, g, g_max, global_best, eps)
}

/// A fresh firework at a random mean; costs one evaluation.
///
/// The df factor is carried over from `fw`; everything else is reset.
pub fn restart_firework<P, R>(fw: &FireworkState, problem: &P, df_init: f64, rng: &mut R) -> Result<FireworkState>
where
    P: Problem + ?Sized,
    R: Rng + ?Sized,
{
    let mean = initial_mean(problem.dim(), problem.bounds(), rng);
    let f = problem.evaluate(&mean)?;
    Ok(FireworkState::new(mean, f, problem.bounds(), df_init, fw.df_factor))
}

/// Live swarm state; advance it with [`Swarm::step`].
#[derive(Debug)]
pub struct Swarm<'a, P: Problem + ?Sized, R> {
    problem: Tracked<'a, P>,
    config: SwarmConfig,
    params: StrategyParams,
    fireworks: Vec<FireworkState>,
    rng: R,
    generation: u64,
    g_max: u64,
    restarts: usize,
    best_history: Vec<f64>,
}

/// Places `config.n_fireworks` fireworks and evaluates their means.
pub fn init_swarm<'a, P, R>(problem: &'a P, config: &SwarmConfig, mut rng: R) -> Result<Swarm<'a, P, R>>
where
    P: Problem + ?Sized,
    R: Rng,
{
    config.validate()?;
    let params = StrategyParams::derive(config.sparks_per_firework, problem.dim())?;
    let problem = Tracked::new(problem);
    let bounds = problem.bounds();
    let mut fireworks = Vec::with_capacity(config.n_fireworks);
    for &factor in &config.df_factors {
        let mean = initial_mean(problem.dim(), bounds, &mut rng);
        let f = problem.evaluate(&mean)?;
        fireworks.push(FireworkState::new(mean, f, bounds, config.df_init, factor));
    }
    Ok(Swarm {
        problem,
        g_max: config.max_generations(),
        config: config.clone(),
        params,
        fireworks,
        rng,
        generation: 0,
        restarts: 0,
        best_history: Vec::new(),
    })
}

impl<'a, P: Problem + ?Sized, R: Rng> Swarm<'a, P, R> {
    pub fn fireworks(&self) -> &[FireworkState] {
        &self.fireworks
    }

    pub fn evals_used(&self) -> usize {
        self.problem.evals()
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn best_fitness(&self) -> f64 {
        self.problem.best_fitness()
    }

    pub fn params(&self) -> &StrategyParams {
        &self.params
    }

    /// Whether a full generation still fits in the budget.
    pub fn can_step(&self) -> bool {
        self.evals_used() + self.config.n_fireworks * self.config.sparks_per_firework <= self.config.budget
    }

    fn restart(&mut self, i: usize) -> Result<()> {
        self.fireworks[i] = restart_firework(&self.fireworks[i], &self.problem, self.config.df_init, &mut self.rng)?;
        self.restarts += 1;
        Ok(())
    }

    /// One synchronous generation: every firework explodes, then losers are
    /// restarted. Returns the restart flag of each firework.
    #[allow(clippy::needless_range_loop)] // `restart` borrows all of `self`
    pub fn step<S: TraceSink + ?Sized>(&mut self, sink: &mut S) -> Result<Vec<bool>> {
        self.generation += 1;
        let n = self.fireworks.len();
        let mut restarted = vec![false; n];

        for i in 0..n {
            match explode(&mut self.fireworks[i], &self.params, &self.config.explosion, &self.problem, &mut self.rng) {
                Ok(_) => {}
                Err(Error::DegenerateState(_)) => {
                    if self.evals_used() < self.config.budget {
                        self.restart(i)?;
                        restarted[i] = true;
                    }
                }
                Err(e) => return Err(e),
            }
        }

        let global_best = self
            .fireworks
            .iter()
            .map(|fw| fw.last_gen_best)
            .fold(f64::INFINITY, f64::min);
        for i in 0..n {
            if restarted[i] {
                continue;
            }
            let loses = loser_out_check(&mut self.fireworks[i], self.generation, self.g_max, global_best, self.config.eps);
            if loses && self.evals_used() < self.config.budget {
                self.restart(i)?;
                restarted[i] = true;
            }
        }

        let f_star = self.problem.optimum_value().unwrap_or(0.0);
        for (i, fw) in self.fireworks.iter().enumerate() {
            sink.record(&TraceRecord {
                gen: self.generation,
                fw: i,
                gap: fw.best_fitness - f_star,
                df: Some(fw.df),
                scale: fw.scale,
                restart: restarted[i],
            });
        }
        self.best_history.push(self.best_fitness());
        Ok(restarted)
    }

    pub fn finish(self, trace: Vec<TraceRecord>) -> RunResult {
        let (best_fitness, best_position) = self.problem.best().expect("initial means were evaluated");
        RunResult {
            best_position,
            best_fitness,
            evals_used: self.problem.evals(),
            generations: self.generation,
            restarts: self.restarts,
            best_history: self.best_history,
            trace,
        }
    }
}

/// Runs the swarm until the budget cannot fit another generation.
pub fn run<P: Problem + ?Sized>(problem: &P, config: &SwarmConfig) -> Result<RunResult> {
    let mut trace = Vec::new();
    let mut swarm = init_swarm(problem, config, SeededRng::seed_from_u64(config.seed))?;
    while swarm.can_step() {
        swarm.step(&mut trace)?;
    }
    Ok(swarm.finish(trace))
}

/// Like [`run`], but streams trace records to `sink` instead of keeping them
/// in the result.
pub fn run_with_sink<P, S>(problem: &P, config: &SwarmConfig, sink: &mut S) -> Result<RunResult>
where
    P: Problem + ?Sized,
    S: TraceSink + ?Sized,
{
    let mut swarm = init_swarm(problem, config, SeededRng::seed_from_u64(config.seed))?;
    while swarm.can_step() {
        swarm.step(sink)?;
    }
    Ok(swarm.finish(Vec::new()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchfns::make_problem;

    fn state_with(best: f64, last: f64, prev: f64, improvement: f64) -> FireworkState {
        let mut fw = FireworkState::new(DVector::zeros(2), best, (-1.0, 1.0), 5.0, 1.05);
        fw.best_fitness = best;
        fw.last_gen_best = last;
        fw.prev_gen_best = prev;
        fw.improvement = improvement;
        fw
    }

    #[test]
    fn tournament_examples() {
        // no improvement can never close a positive gap
        let mut fw = state_with(5.0, 5.0, 5.0, 0.0);
        assert!(loser_out_check(&mut fw, 10, 20, 0.0, 1e-6));

        let mut fw = state_with(5.0, 5.0, 5.0, 0.1);
        assert!(!loser_out_check(&mut fw, 100, 200, 0.0, 1e-6));

        let mut fw = state_with(5.0, 5.0, 5.0, 0.01);
        assert!(loser_out_check(&mut fw, 100, 200, 0.0, 1e-6));
    }

    #[test]
    fn tournament_registers_improvement() {
        let mut fw = state_with(5.0, 5.0, 6.0, 0.0);
        assert!(!loser_out_check(&mut fw, 1, 11, 0.0, 1e-6));
        assert_eq!(fw.improvement, 1.0);
        // below eps: keeps the old value
        let mut fw = state_with(5.0, 5.0, 5.0 + 1e-9, 0.25);
        loser_out_check(&mut fw, 1, 11, 0.0, 1e-6);
        assert_eq!(fw.improvement, 0.25);
    }

    #[test]
    fn leader_never_loses() {
        let mut fw = state_with(1.0, 1.0, 1.0, 0.0);
        assert!(!loser_out_check(&mut fw, 5, 5, 1.0, 1e-6));
    }

    #[test]
    fn init_places_means_in_half_box() {
        let p = make_problem("sphere", 6, 1, true, true).unwrap();
        let cfg = SwarmConfig::for_dim(6);
        let swarm = init_swarm(&p, &cfg, SeededRng::seed_from_u64(3)).unwrap();
        assert_eq!(swarm.evals_used(), 2);
        for fw in swarm.fireworks() {
            assert!(fw.mean.iter().all(|v| (-50.0..=50.0).contains(v)));
            assert_eq!(fw.scale, 200.0);
            assert_eq!(fw.path_c, DVector::zeros(6));
            assert_eq!(fw.path_s, DVector::zeros(6));
            assert_eq!(fw.df, 5.0);
        }
        assert_eq!(swarm.fireworks()[1].df_factor, 10.0);
    }

    #[test]
    fn restart_resets_state() {
        let p = make_problem("sphere", 4, 1, false, true).unwrap();
        let tracked = Tracked::new(&p);
        let mut fw = state_with(0.1, 0.2, 0.3, 0.5);
        fw.df = 4000.0;
        fw.gen_count = 77;
        let fresh = restart_firework(&fw, &tracked, 5.0, &mut SeededRng::seed_from_u64(0)).unwrap();
        assert_eq!(tracked.evals(), 1);
        assert_eq!(fresh.df, 5.0);
        assert_eq!(fresh.gen_count, 0);
        assert_eq!(fresh.improvement, 0.0);
        assert_eq!(fresh.df_factor, 1.05);
        assert!(fresh.mean.iter().all(|v| (-50.0..=50.0).contains(v)));
    }

    #[test]
    fn config_validation() {
        let mut c = SwarmConfig::for_dim(10);
        assert_eq!(c.sparks_per_firework, 50);
        assert_eq!(c.budget, 100_000);
        assert!(c.validate().is_ok());
        c.df_factors.pop();
        assert!(c.validate().is_err());
        let mut c = SwarmConfig::for_dim(10);
        c.budget = 50;
        assert!(c.validate().is_err());
        let c = SwarmConfig::for_dim(10).with_fireworks(3, 10);
        assert_eq!(c.df_factors, vec![1.05, 10.0, 1.05]);
        assert_eq!(c.sparks_per_firework, 33);
    }

    #[test]
    fn max_generations_from_budget() {
        let c = SwarmConfig::for_dim(10);
        assert_eq!(c.max_generations(), (100_000 - 2) / 100);
    }
}
