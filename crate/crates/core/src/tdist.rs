//! Multivariate Student's t distribution.
//!
//! `T(mean, scale, df)` with density
//!
//! ```text
//! p(x) = Γ((df+d)/2) / Γ(df/2) · |scale|^{-1/2} / (df·π)^{d/2} · (1 + s/df)^{-(df+d)/2}
//! s    = (x - mean)ᵀ scale⁻¹ (x - mean)
//! ```
//!
//! `scale` is not the covariance: for `df > 2` the covariance is
//! `df / (df - 2) · scale`, otherwise it does not exist. `df = 1` is the
//! Cauchy distribution and `df → ∞` the Gaussian.

use core::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
// unused when std is linked (its inherent float methods take precedence)
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::{Error, Result};

/// Absolute asymmetry tolerated in a scale matrix, relative to its largest entry.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct TDistribution {
    mean: DVector<f64>,
    scale: DMatrix<f64>,
    df: f64,
    chol: Cholesky<f64, Dyn>,
    lower: DMatrix<f64>,
    chi2: ChiSquared<f64>,
}

impl TDistribution {
    /// Validates the parameters and caches the Cholesky factor of `scale`.
    ///
    /// The scale matrix is symmetrized as `(S + Sᵀ)/2` before factorization;
    /// asymmetry beyond [`SYMMETRY_TOL`] is rejected, as is any matrix that
    /// is not positive-definite. No jitter is added.
    pub fn new(mean: DVector<f64>, scale: DMatrix<f64>, df: f64) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if scale.nrows() != d || scale.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: if scale.nrows() != d { scale.nrows() } else { scale.ncols() },
            });
        }
        if !df.is_finite() || df <= 0.0 {
            return Err(Error::InvalidParameter(alloc::format!(
                "degrees of freedom must be positive and finite, got {df}"
            )));
        }
        if mean.iter().chain(scale.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite mean or scale entry".into()));
        }

        let magnitude = scale.amax().max(1.0);
        let asym = (&scale - scale.transpose()).amax();
        if asym > SYMMETRY_TOL * magnitude {
            return Err(Error::NotSymmetric(asym));
        }
        let scale = (&scale + scale.transpose()) * 0.5;
        let chol = Cholesky::new(scale.clone()).ok_or(Error::NotPositiveDefinite)?;
        let chi2 = ChiSquared::new(df)
            .map_err(|e| Error::InvalidParameter(alloc::format!("chi-squared({df}): {e}")))?;

        let lower = chol.l();
        Ok(Self { mean, scale, df, chol, lower, chi2 })
    }

    /// Standard distribution: zero mean, identity scale.
    pub fn standard(dim: usize, df: f64) -> Result<Self> {
        Self::new(DVector::zeros(dim), DMatrix::identity(dim, dim), df)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn scale(&self) -> &DMatrix<f64> {
        &self.scale
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    /// Lower-triangular `L` with `L Lᵀ = scale`.
    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn scale_inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }

    pub fn ln_det_scale(&self) -> f64 {
        2.0 * self.lower.diagonal().iter().map(|v| v.ln()).sum::<f64>()
    }

    /// One draw `mean + L z √(df/u)` with `z ~ N(0, I)` and `u ~ χ²(df)`.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let d = self.dim();
        let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let u = self.chi2.sample(rng);
        let ratio = (self.df / u).sqrt();
        let mut x = &self.lower * z * ratio;
        x += &self.mean;
        x
    }

    /// `n` independent draws, one per row.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> DMatrix<f64> {
        let d = self.dim();
        let mut out = DMatrix::zeros(n, d);
        for i in 0..n {
            let x = self.sample_one(rng);
            out.row_mut(i).copy_from(&x.transpose());
        }
        out
    }

    /// Squared Mahalanobis distance `(x - mean)ᵀ scale⁻¹ (x - mean)`.
    pub fn mahalanobis(&self, x: &DVector<f64>) -> f64 {
        let diff = x - &self.mean;
        let w = self
            .lower
            .solve_lower_triangular(&diff)
            .expect("cholesky factor has a positive diagonal");
        w.norm_squared()
    }

    pub fn log_density(&self, x: &DVector<f64>) -> f64 {
        let d = self.dim() as f64;
        let v = self.df;
        let s = self.mahalanobis(x);
        ln_gamma_ratio(v / 2.0, d / 2.0)
            - 0.5 * self.ln_det_scale()
            - 0.5 * d * (v * PI).ln()
            - 0.5 * (d + v) * (s / v).ln_1p()
    }

    /// Mean and, when `df > 2`, the covariance `df/(df-2) · scale`.
    pub fn moments(&self) -> (DVector<f64>, Option<DMatrix<f64>>) {
        let cov = (self.df > 2.0).then(|| &self.scale * (self.df / (self.df - 2.0)));
        (self.mean.clone(), cov)
    }
}

/// `ln Γ(a + h) - ln Γ(a)`.
///
/// Above `a = 1e6` the two log-gamma values are ~1e7 and their difference
/// loses too many digits, so the Stirling series difference is used instead.
pub fn ln_gamma_ratio(a: f64, h: f64) -> f64 {
    if a > 1e6 {
        (a - 0.5) * (h / a).ln_1p() + h * (a + h).ln() - h - h / (12.0 * a * (a + h))
    } else {
        libm::lgamma(a + h) - libm::lgamma(a)
    }
}
