//! Dirichlet data on the outer boundary. Every preset vanishes on `Π`.

use crate::error::{invalid, Result};
use crate::grid::{GridDomain, NodeRole};
use crate::oracle::{halfspace_oracle, oracle_1d};
use crate::operator::OperatorSpec;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryPreset<T> {
    /// `g ≡ 0`.
    Zero,
    /// Trace of `x₁² / (2c)`.
    Halfspace { coefficient: T },
    /// `c · dist(x̂, A_w)²` with `x̂` the radial projection onto the sphere and
    /// `A_w` the arcs of the sphere within angle `w` of `Π`.
    Contact { amplitude: T, width: T },
    /// One-dimensional obstacle profile in `x₁` with `u(1) = b`, for half-box grids.
    Section1D { b: T },
}

impl<T: Real> BoundaryPreset<T> {
    pub fn halfspace(spec: &OperatorSpec<T>, n: usize) -> Result<Self> {
        Ok(BoundaryPreset::Halfspace { coefficient: halfspace_oracle(spec, n)?.coefficient })
    }

    pub fn contact(amplitude: T, width: T) -> Result<Self> {
        if !(amplitude > T::zero()) {
            return invalid(format!("contact amplitude {amplitude} must be positive"));
        }
        if !(width > T::zero() && width < T::FRAC_PI_2()) {
            return invalid(format!("contact arc width {width} must lie in (0, pi/2)"));
        }
        Ok(BoundaryPreset::Contact { amplitude, width })
    }

    pub fn name(&self) -> &'static str {
        match self {
            BoundaryPreset::Zero => "zero",
            BoundaryPreset::Halfspace { .. } => "halfspace",
            BoundaryPreset::Contact { .. } => "contact",
            BoundaryPreset::Section1D { .. } => "section1d",
        }
    }

    /// True when the preset can produce negative values.
    pub fn may_be_negative(&self) -> bool {
        false
    }

    /// Evaluates the data formula at a point, without role checks.
    pub fn eval_point(&self, x: &[T], radius: T) -> T {
        if x[0] <= T::zero() {
            return T::zero();
        }
        match *self {
            BoundaryPreset::Zero => T::zero(),
            BoundaryPreset::Halfspace { coefficient } => x[0] * x[0] / (T::lit(2.0) * coefficient),
            BoundaryPreset::Contact { amplitude, width } => {
                let norm = x.iter().map(|&v| v * v).sum::<T>().sqrt();
                let angle = (x[0] / norm).min(T::one()).asin();
                if angle <= width {
                    T::zero()
                } else {
                    let chord = T::lit(2.0) * radius * (T::lit(0.5) * (angle - width)).sin();
                    amplitude * chord * chord
                }
            }
            BoundaryPreset::Section1D { b } => oracle_1d(b).map(|o| o.eval(x[0])).unwrap_or(T::zero()),
        }
    }
}

/// Boundary value at a Π or outer-boundary node.
pub fn boundary_preset_eval<T: Real>(preset: &BoundaryPreset<T>, grid: &GridDomain<T>, node: usize) -> Result<T> {
    match grid.role(node) {
        NodeRole::PiBoundary => Ok(T::zero()),
        NodeRole::OuterBoundary => Ok(preset.eval_point(&grid.coords(node), grid.radius())),
        role => invalid(format!("node {node} has role {role:?}; boundary data lives on Π and the outer boundary")),
    }
}
