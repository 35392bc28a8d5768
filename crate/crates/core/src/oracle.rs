//! Closed-form reference solutions.

use crate::error::{invalid, Result};
use crate::matrix::SymMatrix;
use crate::operator::OperatorSpec;
use crate::scalar::Real;

/// One-dimensional obstacle profile on `[0, 1]`: `u'' = χ_{u>0}`, `u(0) = 0`, `u(1) = b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oracle1D<T> {
    pub b: T,
    /// Free boundary position `1 − √(2b)`; negative when `b > 1/2`.
    pub a: T,
}

pub fn oracle_1d<T: Real>(b: T) -> Result<Oracle1D<T>> {
    if !(b >= T::zero() && b.is_finite()) {
        return invalid(format!("boundary value b={b} must be nonnegative"));
    }
    Ok(Oracle1D { b, a: T::one() - (T::lit(2.0) * b).sqrt() })
}

impl<T: Real> Oracle1D<T> {
    /// False when `b > 1/2`: the solution is then positive on all of `(0, 1]`.
    pub fn has_free_boundary(&self) -> bool {
        self.a >= T::zero()
    }

    pub fn eval(&self, x: T) -> T {
        let half = T::lit(0.5);
        if self.has_free_boundary() {
            let d = (x - self.a).max(T::zero());
            half * d * d
        } else {
            // Unconstrained u'' = 1 with the same end values.
            half * x * x + (self.b - half) * x
        }
    }

    pub fn derivative(&self, x: T) -> T {
        if self.has_free_boundary() {
            (x - self.a).max(T::zero())
        } else {
            x + self.b - T::lit(0.5)
        }
    }
}

/// Half-space solution `u = x₁² / (2c)` with `c = F(e₁ e₁ᵀ)`, whose coincidence set is exactly `Π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfspaceOracle<T> {
    pub coefficient: T,
}

pub fn halfspace_oracle<T: Real>(spec: &OperatorSpec<T>, n: usize) -> Result<HalfspaceOracle<T>> {
    let c = spec.halfspace_coefficient(n)?;
    if c <= T::zero() {
        return invalid(format!("F(e1 e1^T) = {c} is not positive"));
    }
    Ok(HalfspaceOracle { coefficient: c })
}

impl<T: Real> HalfspaceOracle<T> {
    pub fn eval(&self, x: &[T]) -> T {
        x[0] * x[0] / (T::lit(2.0) * self.coefficient)
    }

    pub fn hessian(&self, n: usize) -> SymMatrix<T> {
        let mut e1 = vec![T::zero(); n];
        e1[0] = T::one();
        SymMatrix::outer(&e1).scale(T::one() / self.coefficient)
    }
}

/// `u(x) = ½ xᵀ H x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticProbe<T> {
    pub hessian: SymMatrix<T>,
}

pub fn quadratic_probe<T: Real>(hessian: SymMatrix<T>) -> QuadraticProbe<T> {
    QuadraticProbe { hessian }
}

impl<T: Real> QuadraticProbe<T> {
    pub fn eval(&self, x: &[T]) -> T {
        T::lit(0.5) * self.hessian.quad_form(x)
    }
}
