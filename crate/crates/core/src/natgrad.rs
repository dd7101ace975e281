//! Fisher information of the multivariate t and the natural-gradient
//! coefficients that drive the explosion weights.
//!
//! Parameters are packed as `θ = (μ, vech(Σ))`, where `vech` stacks the lower
//! triangle column by column. For a `vech` coordinate `(i, j)` the direction
//! `∂Σ/∂θ` is `E_ij + E_ji` off the diagonal and `E_ii` on it.
//!
//! The closed form is
//!
//! ```text
//! F_μμ      = (d+v)/(d+v+2) · Σ⁻¹
//! F_ΣΣ(k,l) = a · tr(Σ⁻¹ D_k Σ⁻¹ D_l) + b · tr(Σ⁻¹ D_k) · tr(Σ⁻¹ D_l)
//! a = (d+v) / (2(d+v+2)),   b = -1 / (2(d+v+2))
//! ```
//!
//! with zero μ/Σ cross terms. [`fisher_monte_carlo`] estimates the same
//! matrix from score outer products and is the oracle for the closed form.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::tdist::TDistribution;

/// Closed-form Fisher information blocks of `T(μ, Σ, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherBlocks {
    /// `(d+v)/(d+v+2) · Σ⁻¹`.
    pub mean_block: DMatrix<f64>,
    /// Coefficient of `tr(Σ⁻¹ D_k Σ⁻¹ D_l)` in the Σ block.
    pub a: f64,
    /// Coefficient of `tr(Σ⁻¹ D_k) tr(Σ⁻¹ D_l)` in the Σ block.
    pub b: f64,
}

impl FisherBlocks {
    pub fn dim(&self) -> usize {
        self.mean_block.nrows()
    }

    /// Σ block expanded over the `vech` basis.
    pub fn scale_block(&self) -> DMatrix<f64> {
        // mean_block = 2a · Σ⁻¹
        let inv = &self.mean_block / (2.0 * self.a);
        let d = self.dim();
        let dirs: Vec<DMatrix<f64>> = vech_pairs(d)
            .map(|(i, j)| &inv * vech_direction(d, i, j))
            .collect();
        let p = dirs.len();
        DMatrix::from_fn(p, p, |k, l| {
            self.a * (&dirs[k] * &dirs[l]).trace() + self.b * dirs[k].trace() * dirs[l].trace()
        })
    }

    /// The full `(d + d(d+1)/2)²` matrix with zero cross blocks.
    pub fn full(&self) -> DMatrix<f64> {
        let d = self.dim();
        let p = d + vech_len(d);
        let mut out = DMatrix::zeros(p, p);
        out.view_mut((0, 0), (d, d)).copy_from(&self.mean_block);
        out.view_mut((d, d), (p - d, p - d)).copy_from(&self.scale_block());
        out
    }
}

/// Number of free entries of a symmetric `d×d` matrix.
pub fn vech_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// `(row, col)` of each `vech` coordinate, lower triangle in column order.
pub fn vech_pairs(d: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..d).flat_map(move |j| (j..d).map(move |i| (i, j)))
}

fn vech_direction(d: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, d);
    m[(i, j)] = 1.0;
    m[(j, i)] = 1.0;
    m
}

pub fn fisher_closed_form(dist: &TDistribution) -> FisherBlocks {
    let d = dist.dim() as f64;
    let v = dist.df();
    let mean_block = dist.scale_inverse() * ((d + v) / (d + v + 2.0));
    FisherBlocks {
        mean_block,
        a: (d + v) / (2.0 * (d + v + 2.0)),
        b: -1.0 / (2.0 * (d + v + 2.0)),
    }
}

/// Score `∇_θ ln p(x)` in the `(μ, vech Σ)` packing.
pub fn score(dist: &TDistribution, scale_inv: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let d = dist.dim();
    let v = dist.df();
    let diff = x - dist.mean();
    let r = scale_inv * &diff;
    let s = diff.dot(&r);
    let k = (d as f64 + v) / (v + s);

    let mut g = DVector::zeros(d + vech_len(d));
    g.rows_mut(0, d).copy_from(&(&r * k));
    for (idx, (i, j)) in vech_pairs(d).enumerate() {
        let (tr, quad) = if i == j {
            (scale_inv[(i, i)], r[i] * r[i])
        } else {
            (2.0 * scale_inv[(i, j)], 2.0 * r[i] * r[j])
        };
        g[d + idx] = -0.5 * tr + 0.5 * k * quad;
    }
    g
}

/// Monte-Carlo estimate of `E[∇ln p ∇ln pᵀ]` from `n` draws.
pub fn fisher_monte_carlo<R: Rng + ?Sized>(
    dist: &TDistribution,
    n: usize,
    rng: &mut R,
) -> DMatrix<f64> {
    let d = dist.dim();
    let p = d + vech_len(d);
    let inv = dist.scale_inverse();
    let mut acc = DMatrix::zeros(p, p);
    for _ in 0..n {
        let x = dist.sample_one(rng);
        let g = score(dist, &inv, &x);
        acc.syger(1.0, &g, &g, 1.0);
    }
    // syger only fills the lower triangle
    acc.fill_upper_triangle_with_lower_triangle();
    acc / n as f64
}

/// Spark weight `(d + v + 2) / (v + s)`: the scalar that multiplies
/// `(x - μ)` in the mean natural gradient.
pub fn natgrad_weight(s: f64, d: usize, df: f64) -> f64 {
    (d as f64 + df + 2.0) / (df + s)
}

/// `F_μ⁻¹ ∇_μ ln p(x) = (d+v+2)/(s+v) · (x - μ)`.
pub fn mean_natural_gradient(dist: &TDistribution, x: &DVector<f64>) -> DVector<f64> {
    let s = dist.mahalanobis(x);
    (x - dist.mean()) * natgrad_weight(s, dist.dim(), dist.df())
}

/// `F_Σ⁻¹ ∇_Σ ln p(x) = (d+v+2)/(d+v) · ((d+v)/(v+s) (x-μ)(x-μ)ᵀ - Σ)`,
/// under the approximation that drops the `tr·tr` term of the Σ block.
pub fn scale_natural_gradient(dist: &TDistribution, x: &DVector<f64>) -> DMatrix<f64> {
    let d = dist.dim() as f64;
    let v = dist.df();
    let s = dist.mahalanobis(x);
    let diff = x - dist.mean();
    let outer = &diff * diff.transpose();
    (outer * ((d + v) / (v + s)) - dist.scale()) * ((d + v + 2.0) / (d + v))
}

/// Relative Frobenius residuals of the two reweighted second moments
///
/// ```text
/// r1: E[(x-μ)(x-μ)ᵀ / (1+s/v)²] = v² / ((d+v)(d+v+2)) · Σ
/// r2: E[(x-μ)(x-μ)ᵀ / (1+s/v)]  = v / (d+v) · Σ
/// ```
///
/// estimated from `n` draws.
pub fn moment_identity_residuals<R: Rng + ?Sized>(
    dist: &TDistribution,
    n: usize,
    rng: &mut R,
) -> (f64, f64) {
    let d = dist.dim();
    let v = dist.df();
    let df = d as f64;
    let mut m1 = DMatrix::zeros(d, d);
    let mut m2 = DMatrix::zeros(d, d);
    for _ in 0..n {
        let x = dist.sample_one(rng);
        let s = dist.mahalanobis(&x);
        let diff = x - dist.mean();
        let w = 1.0 / (1.0 + s / v);
        m1.syger(w * w, &diff, &diff, 1.0);
        m2.syger(w, &diff, &diff, 1.0);
    }
    m1.fill_upper_triangle_with_lower_triangle();
    m2.fill_upper_triangle_with_lower_triangle();
    let nf = n as f64;
    let e1 = dist.scale() * (v * v / ((df + v) * (df + v + 2.0)));
    let e2 = dist.scale() * (v / (df + v));
    let r1 = (m1 / nf - &e1).norm() / e1.norm();
    let r2 = (m2 / nf - &e2).norm() / e2.norm();
    (r1, r2)
}
