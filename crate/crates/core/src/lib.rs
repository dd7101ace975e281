//! Student's t fireworks algorithm (TFWA).
//!
//! A multi-population derivative-free minimizer. Each firework maintains a
//! multivariate Student's t search distribution whose mean and shape matrix
//! are updated with rank weights fused with natural-gradient weights, whose
//! degrees of freedom grow while the firework keeps improving, and which is
//! restarted by a loser-out tournament once it can no longer catch the
//! leader.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, statistics and
//! the command line live in the `tfwa-harness` crate.
//!
//! ```
//! use tfwa_core::benchfns::{BenchmarkProblem, FunctionKind};
//! use tfwa_core::swarm::{run, SwarmConfig};
//!
//! let problem = BenchmarkProblem::new(FunctionKind::Sphere, 4, 7, true, true).unwrap();
//! let mut config = SwarmConfig::for_dim(4);
//! config.budget = 4_000;
//! let result = run(&problem, &config).unwrap();
//! assert!(result.evals_used <= config.budget + config.n_fireworks);
//! assert!(result.best_fitness < 1e-3);
//! ```
#![no_std]
#![warn(missing_debug_implementations, rust_2018_idioms)]

extern crate alloc;
#[cfg(test)]
#[macro_use]
extern crate std;

pub mod baselines;
pub mod benchfns;
mod error;
pub mod explosion;
pub mod natgrad;
pub mod problem;
pub mod swarm;
pub mod tdist;

pub use error::{Error, Result};
pub use problem::Problem;

/// Random stream used wherever the crate seeds its own generator.
pub type SeededRng = rand_chacha::ChaCha8Rng;
