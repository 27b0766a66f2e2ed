//! Finite-difference steppers for the linear periodic-cell problem and the
//! nonlinear problem on a truncated line, plus a residual evaluator for
//! candidate sub- and supersolutions.

pub mod cell;
pub mod line;
pub mod residual;
pub mod tridiag;

pub use cell::{step_linear_cell, CellGrid, DriftSign, LinearCellStepper};
pub use line::{step_nonlinear_line, LineGrid, NonlinearLineStepper};
pub use residual::{residual, Candidate, ResidualField, ResidualGrid};

use crate::scalar::Real;

/// Node values at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T> {
    pub values: Vec<T>,
    pub time: T,
}

impl<T: Real> StateVector<T> {
    pub fn constant(n: usize, value: T, time: T) -> Self {
        StateVector {
            values: vec![value; n],
            time,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
