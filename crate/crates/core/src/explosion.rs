//! One generation of t-distributed explosion for a single firework.
//!
//! A firework samples `λ` sparks from `T(m, scale²·C, df)`, ranks them, fuses
//! the rank weights with the natural-gradient weights `(d+df+2)/(df+s)`, and
//! then moves its mean, shape matrix, evolution paths and step size in the
//! manner of CMA-ES. Its degrees of freedom grow whenever the generation's
//! best spark beats the previous generation's best.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
// unused when std is linked (its inherent float methods take precedence)
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::natgrad::natgrad_weight;
use crate::tdist::TDistribution;
use crate::{Error, Problem, Result};

/// Upper bound on the degrees of freedom (2³⁰).
pub const DF_CAP: f64 = 1_073_741_824.0;

/// Normalized log-rank weights for `λ` sparks sorted best first.
///
/// `w_i = max(ln(0.5 + λ/2) - ln(1 + i), 0)`, then divided by the sum.
pub fn rank_weights(lambda: usize) -> Result<Vec<f64>> {
    if lambda < 2 {
        return Err(Error::InvalidParameter(alloc::format!(
            "need at least 2 sparks per firework, got {lambda}"
        )));
    }
    let top = (0.5 + lambda as f64 / 2.0).ln();
    let mut w: Vec<f64> = (0..lambda)
        .map(|i| (top - ((1 + i) as f64).ln()).max(0.0))
        .collect();
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= sum);
    Ok(w)
}

/// Static strategy constants for a given `(λ, dim)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyParams {
    pub lambda: usize,
    pub dim: usize,
    /// Normalized rank weights (sum to one).
    pub raw_weights: Vec<f64>,
    pub mu_eff: f64,
    pub c_c: f64,
    pub c_s: f64,
    pub c_1: f64,
    pub c_mu: f64,
    /// Step-size damping; equal to `c_s`.
    pub c_n: f64,
}

/// The per-generation constants that depend on the firework's state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicParams {
    pub c_cn: f64,
    pub c_sn: f64,
    /// Stall indicator: 1 while the step-size path is not too long, else 0.
    pub h: f64,
    pub c_1a: f64,
}

impl StrategyParams {
    pub fn derive(lambda: usize, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let raw_weights = rank_weights(lambda)?;
        let mu_eff = mu_eff(&raw_weights);
        let n = dim as f64;

        let c_c = (4.0 + mu_eff / n) / (4.0 + n + 2.0 * mu_eff / n);
        let c_s = (2.0 + mu_eff) / (n + mu_eff + 5.0);
        let c_1 = 2.0 / ((n + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1).min(2.0 * (mu_eff + 1.0 / mu_eff - 2.0) / (mu_eff + (n + 2.0).powi(2)));

        Ok(Self { lambda, dim, raw_weights, mu_eff, c_c, c_s, c_1, c_mu, c_n: c_s })
    }

    /// `gen_count` is the number of completed generations the path has
    /// accumulated over.
    pub fn dynamic(&self, scale: f64, path_s: &DVector<f64>, gen_count: u64) -> DynamicParams {
        let n = self.dim as f64;
        let c_cn = (self.c_c * (2.0 - self.c_c) * self.mu_eff).sqrt() / scale;
        let c_sn = (self.c_s * (2.0 - self.c_s) * self.mu_eff).sqrt() / scale;

        let exponent = (2 * gen_count + 1).min(i32::MAX as u64) as i32;
        let norm = n * (1.0 - (1.0 - self.c_s).powi(exponent));
        let h = if path_s.norm_squared() / norm <= 2.0 + 4.0 / (n + 1.0) { 1.0 } else { 0.0 };

        let c_1a = self.c_1 * (1.0 - (1.0 - h * h) * self.c_c * (2.0 - self.c_c));
        DynamicParams { c_cn, c_sn, h, c_1a }
    }
}

/// `(Σw)² / Σw²`.
pub fn mu_eff(weights: &[f64]) -> f64 {
    let sum: f64 = weights.iter().sum();
    let sq: f64 = weights.iter().map(|w| w * w).sum();
    sum * sum / sq
}

/// Degree-of-freedom update after a generation whose best spark scored `fit`
/// against the previous generation's best `f_best`.
///
/// On improvement `df` grows to `max(df·factor, df + 1)`, capped at
/// [`DF_CAP`]; otherwise it is unchanged.
pub fn adjust_degree_of_freedom(df: f64, fit: f64, f_best: f64, factor: f64) -> f64 {
    if fit < f_best {
        (df * factor).max(df + 1.0).min(DF_CAP)
    } else {
        df
    }
}

/// Resamples each coordinate outside `[lb, ub]` uniformly inside it.
pub fn repair_bounds<R: Rng + ?Sized>(mut x: DVector<f64>, lb: f64, ub: f64, rng: &mut R) -> DVector<f64> {
    for v in x.iter_mut() {
        if !(*v >= lb && *v <= ub) {
            *v = rng.random_range(lb..=ub);
        }
    }
    x
}

/// Symmetrizes `c` and raises eigenvalues below `1e-12·max(1, tr/d)` to that
/// floor. Matrices already above the floor are returned symmetrized but
/// otherwise untouched.
pub fn regularize_covariance(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !c.is_square() {
        return Err(Error::DegenerateState("shape matrix is not square".into()));
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateState("non-finite shape matrix entry".into()));
    }
    let d = c.nrows();
    let sym = (c + c.transpose()) * 0.5;
    let floor = 1e-12 * (sym.trace() / d as f64).max(1.0);

    let eig = SymmetricEigen::new(sym.clone());
    if eig.eigenvalues.iter().all(|&l| l >= floor) {
        return Ok(sym);
    }
    if eig.eigenvalues.iter().all(|&l| l <= floor) {
        return Err(Error::DegenerateState("all shape eigenvalues collapsed".into()));
    }
    let clamped = eig.eigenvalues.map(|l| l.max(floor));
    let out = &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
    Ok((&out + out.transpose()) * 0.5)
}

/// How the step-size path whitens the mean shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PathWhitening {
    /// `C^{-1/2}(m' - m)`.
    #[default]
    InverseSqrt,
    /// `C^{-1}(m' - m)`, as the update is printed in the original pseudocode.
    Inverse,
}

/// Order of the shape and path updates within a generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateOrder {
    /// Shape matrix first, using last generation's `p_c` and a stall
    /// indicator computed from last generation's `p_s`.
    #[default]
    Literal,
    /// CMA-ES order: paths first, then the shape matrix with the new `p_c`.
    PathsFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExplosionConfig {
    /// Grow the degrees of freedom on improvement. Off freezes `df`.
    pub adapt_df: bool,
    pub whitening: PathWhitening,
    pub order: UpdateOrder,
}

impl ExplosionConfig {
    pub fn adaptive() -> Self {
        Self { adapt_df: true, ..Self::default() }
    }
}

/// Full adaptive state of one firework.
#[derive(Debug, Clone, PartialEq)]
pub struct FireworkState {
    pub mean: DVector<f64>,
    /// Shape matrix `C`; sparks are drawn with scale matrix `scale²·C`.
    pub shape: DMatrix<f64>,
    pub df: f64,
    pub df_factor: f64,
    pub path_c: DVector<f64>,
    pub path_s: DVector<f64>,
    /// Global step size.
    pub scale: f64,
    /// Best spark fitness of the most recent generation (the mean's fitness
    /// before the first generation).
    pub last_gen_best: f64,
    /// `last_gen_best` as it was one generation earlier.
    pub prev_gen_best: f64,
    pub best_fitness: f64,
    pub best_position: DVector<f64>,
    /// Last recorded per-generation improvement, used by the tournament.
    pub improvement: f64,
    /// Generations since the last (re)start.
    pub gen_count: u64,
}

impl FireworkState {
    /// Fresh firework at `mean` with identity shape and step size `ub - lb`.
    pub fn new(mean: DVector<f64>, mean_fitness: f64, bounds: (f64, f64), df: f64, df_factor: f64) -> Self {
        let d = mean.len();
        Self {
            best_position: mean.clone(),
            mean,
            shape: DMatrix::identity(d, d),
            df,
            df_factor,
            path_c: DVector::zeros(d),
            path_s: DVector::zeros(d),
            scale: bounds.1 - bounds.0,
            last_gen_best: mean_fitness,
            prev_gen_best: mean_fitness,
            best_fitness: mean_fitness,
            improvement: 0.0,
            gen_count: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spark {
    pub position: DVector<f64>,
    pub fitness: f64,
}

/// Result of one explosion. Sparks are sorted best first.
#[derive(Debug, Clone, PartialEq)]
pub struct Explosion {
    pub sparks: Vec<Spark>,
    /// Fused weights `w''` aligned with `sparks`.
    pub weights: Vec<f64>,
    /// Natural-gradient weights `w'` aligned with `sparks`.
    pub natural_weights: Vec<f64>,
}

impl Explosion {
    pub fn best(&self) -> &Spark {
        &self.sparks[0]
    }
}

/// Runs one generation and updates `state` in place.
///
/// `state` is only modified when the whole update succeeds. Objective errors
/// are propagated; a shape matrix or step size that can no longer be used
/// yields [`Error::DegenerateState`], after which the caller should restart
/// the firework.
pub fn explode<P, R>(
    state: &mut FireworkState,
    params: &StrategyParams,
    config: &ExplosionConfig,
    problem: &P,
    rng: &mut R,
) -> Result<Explosion>
where
    P: Problem + ?Sized,
    R: Rng + ?Sized,
{
    let d = state.dim();
    if params.dim != d || problem.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: params.dim.max(problem.dim()) });
    }
    let lambda = params.lambda;
    let (lb, ub) = problem.bounds();
    let dist = TDistribution::new(DVector::zeros(d), state.shape.clone(), state.df)
        .map_err(|e| Error::DegenerateState(alloc::format!("shape matrix rejected: {e}")))?;

    let mut drawn = Vec::with_capacity(lambda);
    for _ in 0..lambda {
        let y = dist.sample_one(rng);
        let s = dist.mahalanobis(&y);
        let x = repair_bounds(&state.mean + &y * state.scale, lb, ub, rng);
        let f = problem.evaluate(&x)?;
        drawn.push((Spark { position: x, fitness: f }, s));
    }
    drawn.sort_by(|a, b| a.0.fitness.total_cmp(&b.0.fitness));
    let (sparks, dists): (Vec<Spark>, Vec<f64>) = drawn.into_iter().unzip();

    let natural: Vec<f64> = dists.iter().map(|&s| natgrad_weight(s, d, state.df)).collect();
    let mut fused: Vec<f64> = params.raw_weights.iter().zip(&natural).map(|(w, wn)| w * wn).collect();
    let total: f64 = fused.iter().sum();
    fused.iter_mut().for_each(|w| *w /= total);
    let fused_sum: f64 = fused.iter().sum();

    let old_mean = &state.mean;
    let mut new_mean = DVector::zeros(d);
    for (spark, &w) in sparks.iter().zip(&fused) {
        new_mean.axpy(w, &spark.position, 1.0);
    }
    let shift = &new_mean - old_mean;

    let whitened = match config.whitening {
        PathWhitening::InverseSqrt => inverse_sqrt(&state.shape)? * &shift,
        PathWhitening::Inverse => dist.scale_inverse() * &shift,
    };

    let scale = state.scale;
    let (dynamic, path_c, path_s) = match config.order {
        UpdateOrder::Literal => {
            let dy = params.dynamic(scale, &state.path_s, state.gen_count);
            let pc = &state.path_c * (1.0 - params.c_c) + &shift * (dy.c_cn * dy.h);
            let ps = &state.path_s * (1.0 - params.c_s) + &whitened * dy.c_sn;
            (dy, pc, ps)
        }
        UpdateOrder::PathsFirst => {
            let c_sn = (params.c_s * (2.0 - params.c_s) * params.mu_eff).sqrt() / scale;
            let ps = &state.path_s * (1.0 - params.c_s) + &whitened * c_sn;
            let dy = params.dynamic(scale, &ps, state.gen_count + 1);
            let pc = &state.path_c * (1.0 - params.c_c) + &shift * (dy.c_cn * dy.h);
            (dy, pc, ps)
        }
    };
    let rank_one_path = match config.order {
        UpdateOrder::Literal => &state.path_c,
        UpdateOrder::PathsFirst => &path_c,
    };

    let mut shape = &state.shape * (1.0 - dynamic.c_1a - params.c_mu * fused_sum);
    shape.syger(params.c_1, rank_one_path, rank_one_path, 1.0);
    let inv_scale2 = 1.0 / (scale * scale);
    for (spark, &w) in sparks.iter().zip(&fused) {
        if w > 0.0 {
            let dx = &spark.position - old_mean;
            shape.syger(w * params.c_mu * inv_scale2, &dx, &dx, 1.0);
        }
    }
    shape.fill_upper_triangle_with_lower_triangle();
    let shape = regularize_covariance(&shape)?;

    let growth = (params.c_n / 2.0 * (path_s.norm_squared() / d as f64 - 1.0)).min(1.0);
    let new_scale = scale * growth.exp();
    if !(new_scale > 0.0 && new_scale.is_finite()) {
        return Err(Error::DegenerateState(alloc::format!("step size became {new_scale}")));
    }
    if new_mean.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateState("non-finite mean".into()));
    }

    let gen_best = sparks[0].fitness;
    let df = if config.adapt_df {
        adjust_degree_of_freedom(state.df, gen_best, state.last_gen_best, state.df_factor)
    } else {
        state.df
    };

    state.mean = new_mean;
    state.shape = shape;
    state.path_c = path_c;
    state.path_s = path_s;
    state.scale = new_scale;
    state.df = df;
    state.prev_gen_best = state.last_gen_best;
    state.last_gen_best = gen_best;
    if gen_best < state.best_fitness {
        state.best_fitness = gen_best;
        state.best_position = sparks[0].position.clone();
    }
    state.gen_count += 1;

    Ok(Explosion { sparks, weights: fused, natural_weights: natural })
}

fn inverse_sqrt(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(c.clone());
    if eig.eigenvalues.iter().any(|&l| l.is_nan() || l <= 0.0) {
        return Err(Error::DegenerateState("shape matrix lost positive-definiteness".into()));
    }
    let d = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose())
}
