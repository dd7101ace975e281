//! Seeded shifted/rotated benchmark functions.
//!
//! Every instance evaluates its base function at `z = R(x - o)`, so the
//! optimum sits at the shift `o` with value 0. Shifts are drawn uniformly
//! from `[lb/2, ub/2]^d` and rotations are Haar-distributed (QR of a Gaussian
//! matrix with the sign of `R`'s diagonal folded into `Q`, determinant forced
//! to +1).

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{E, PI};
use core::fmt;
use core::str::FromStr;

use nalgebra::{DMatrix, DVector};
// unused when std is linked (its inherent float methods take precedence)
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use crate::{Error, Problem, Result, SeededRng};

/// Lunacek bi-Rastrigin: centre of the first funnel.
const LUNACEK_MU0: f64 = 2.5;
/// Lunacek bi-Rastrigin: depth offset of the second funnel.
const LUNACEK_DEPTH: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FunctionKind {
    Sphere,
    Elliptic,
    Rosenbrock,
    Ackley,
    Rastrigin,
    Griewank,
    LunacekBiRastrigin,
}

impl FunctionKind {
    pub const ALL: [FunctionKind; 7] = [
        FunctionKind::Sphere,
        FunctionKind::Elliptic,
        FunctionKind::Rosenbrock,
        FunctionKind::Ackley,
        FunctionKind::Rastrigin,
        FunctionKind::Griewank,
        FunctionKind::LunacekBiRastrigin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FunctionKind::Sphere => "sphere",
            FunctionKind::Elliptic => "elliptic",
            FunctionKind::Rosenbrock => "rosenbrock",
            FunctionKind::Ackley => "ackley",
            FunctionKind::Rastrigin => "rastrigin",
            FunctionKind::Griewank => "griewank",
            FunctionKind::LunacekBiRastrigin => "lunacek_bi_rastrigin",
        }
    }

    /// Base function at an already transformed point `z` (optimum at 0).
    pub fn eval_base(self, z: &DVector<f64>) -> f64 {
        let d = z.len();
        let n = d as f64;
        match self {
            FunctionKind::Sphere => z.norm_squared(),
            FunctionKind::Elliptic => {
                let denom = (d.max(2) - 1) as f64;
                z.iter()
                    .enumerate()
                    .map(|(i, v)| 10f64.powf(6.0 * i as f64 / denom) * v * v)
                    .sum()
            }
            FunctionKind::Rosenbrock => {
                // optimum moved from (1,…,1) to the origin
                let y: Vec<f64> = z.iter().map(|v| v + 1.0).collect();
                y.windows(2)
                    .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (w[0] - 1.0).powi(2))
                    .sum()
            }
            FunctionKind::Ackley => {
                let sq = z.norm_squared() / n;
                let cs = z.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n;
                -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E
            }
            FunctionKind::Rastrigin => rastrigin(z),
            FunctionKind::Griewank => {
                let sum = z.norm_squared() / 4000.0;
                let prod: f64 = z
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
                    .product();
                sum - prod + 1.0
            }
            FunctionKind::LunacekBiRastrigin => {
                let s = 1.0 - 1.0 / (2.0 * (n + 20.0).sqrt() - 8.2);
                let mu1 = -((LUNACEK_MU0 * LUNACEK_MU0 - LUNACEK_DEPTH) / s).sqrt();
                let first: f64 = z.iter().map(|v| v * v).sum();
                let second: f64 = z.iter().map(|v| (v + LUNACEK_MU0 - mu1).powi(2)).sum();
                let funnels = first.min(LUNACEK_DEPTH * n + s * second);
                let ripples = 10.0 * (n - z.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>());
                funnels + ripples
            }
        }
    }
}

fn rastrigin(z: &DVector<f64>) -> f64 {
    z.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos() + 10.0).sum()
}

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FunctionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        FunctionKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::UnknownFunction(String::from(s)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkProblem {
    pub kind: FunctionKind,
    pub dim: usize,
    pub lb: f64,
    pub ub: f64,
    pub shift: DVector<f64>,
    pub rotation: DMatrix<f64>,
    pub f_star: f64,
}

impl BenchmarkProblem {
    /// Deterministic instance on `[-100, 100]^dim`.
    ///
    /// The shift and rotation are drawn from the same seeded stream whatever
    /// the flags, so toggling one does not change the other.
    pub fn new(kind: FunctionKind, dim: usize, seed: u64, rotated: bool, shifted: bool) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(alloc::format!("benchmark dimension must be ≥ 2, got {dim}")));
        }
        let (lb, ub) = (-100.0, 100.0);
        let mut rng = SeededRng::seed_from_u64(seed);
        let shift = DVector::from_fn(dim, |_, _| rng.random_range(lb / 2.0..=ub / 2.0));
        let rotation = random_rotation(dim, &mut rng);
        Ok(Self {
            kind,
            dim,
            lb,
            ub,
            shift: if shifted { shift } else { DVector::zeros(dim) },
            rotation: if rotated { rotation } else { DMatrix::identity(dim, dim) },
            f_star: 0.0,
        })
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// Optimal point and value.
    pub fn optimum(&self) -> (DVector<f64>, f64) {
        (self.shift.clone(), self.f_star)
    }

    pub fn transform(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.rotation * (x - &self.shift)
    }
}

/// [`BenchmarkProblem::new`] by function name.
pub fn make_problem(name: &str, dim: usize, seed: u64, rotated: bool, shifted: bool) -> Result<BenchmarkProblem> {
    BenchmarkProblem::new(name.parse()?, dim, seed, rotated, shifted)
}

/// Haar-random rotation: QR of a Gaussian matrix, `Q·sign(diag R)`, with
/// the first column negated if needed so that `det = +1`.
pub fn random_rotation<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.clone().lu().determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

impl Problem for BenchmarkProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn bounds(&self) -> (f64, f64) {
        (self.lb, self.ub)
    }

    fn evaluate(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Objective("non-finite input".into()));
        }
        Ok(self.kind.eval_base(&self.transform(x)) + self.f_star)
    }

    fn optimum_value(&self) -> Option<f64> {
        Some(self.f_star)
    }
}
