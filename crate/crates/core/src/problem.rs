//! The objective interface shared by the swarm and the baselines.

use nalgebra::DVector;

use crate::Result;

/// A box-constrained minimization problem.
pub trait Problem {
    fn dim(&self) -> usize;

    /// Per-coordinate search bounds `(lb, ub)`.
    fn bounds(&self) -> (f64, f64);

    fn evaluate(&self, x: &DVector<f64>) -> Result<f64>;

    /// Known optimal value, used to report fitness gaps. `None` means gaps are
    /// reported as raw fitness.
    fn optimum_value(&self) -> Option<f64> {
        None
    }
}

/// Wraps a closure as a [`Problem`].
#[derive(Debug, Clone)]
pub struct FnProblem<F> {
    dim: usize,
    lb: f64,
    ub: f64,
    f: F,
}

impl<F> FnProblem<F>
where
    F: Fn(&DVector<f64>) -> f64,
{
    pub fn new(dim: usize, lb: f64, ub: f64, f: F) -> Self {
        Self { dim, lb, ub, f }
    }
}

impl<F> Problem for FnProblem<F>
where
    F: Fn(&DVector<f64>) -> f64,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn bounds(&self) -> (f64, f64) {
        (self.lb, self.ub)
    }

    fn evaluate(&self, x: &DVector<f64>) -> Result<f64> {
        Ok((self.f)(x))
    }
}

impl<P: Problem + ?Sized> Problem for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn bounds(&self) -> (f64, f64) {
        (**self).bounds()
    }

    fn evaluate(&self, x: &DVector<f64>) -> Result<f64> {
        (**self).evaluate(x)
    }

    fn optimum_value(&self) -> Option<f64> {
        (**self).optimum_value()
    }
}
