//! Admissible fully nonlinear operators `F` acting on symmetric matrices.
//!
//! Every operator here is uniformly elliptic, positively homogeneous of degree one
//! and (except the minimal Pucci operator) convex: the Laplacian, the two Pucci
//! extremal operators and finite Bellman families `max_k trace(A_k X)`.

mod properties;

pub use properties::{
    check_convexity, check_ellipticity, check_homogeneity, convexity_defect, ellipticity_increment,
    homogeneity_defect, EllipticityReport, PropertyReport,
};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::matrix::SymMatrix;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorKind {
    #[serde(rename = "laplacian")]
    Laplacian,
    #[serde(rename = "pucci+")]
    PucciPlus,
    #[serde(rename = "pucci-")]
    PucciMinus,
    #[serde(rename = "bellman")]
    Bellman,
}

impl OperatorKind {
    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::Laplacian => "laplacian",
            OperatorKind::PucciPlus => "pucci+",
            OperatorKind::PucciMinus => "pucci-",
            OperatorKind::Bellman => "bellman",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "laplacian" | "laplace" => Some(OperatorKind::Laplacian),
            "pucci+" | "pucci_plus" | "pucci-plus" => Some(OperatorKind::PucciPlus),
            "pucci-" | "pucci_minus" | "pucci-minus" => Some(OperatorKind::PucciMinus),
            "bellman" => Some(OperatorKind::Bellman),
            _ => None,
        }
    }
}

impl std::fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Description of `F` with its ellipticity constants `0 < lambda ≤ big_lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec<T> {
    kind: OperatorKind,
    lambda: T,
    big_lambda: T,
    family: Vec<SymMatrix<T>>,
}

impl<T: Real> OperatorSpec<T> {
    /// Validating constructor. `family` must be empty unless `kind` is `Bellman`.
    pub fn new(kind: OperatorKind, lambda: T, big_lambda: T, family: Vec<SymMatrix<T>>) -> Result<Self> {
        if !(lambda > T::zero() && lambda.is_finite() && big_lambda.is_finite()) {
            return invalid(format!("ellipticity constant lambda={lambda} must be positive and finite"));
        }
        if lambda > big_lambda {
            return invalid(format!("lambda={lambda} exceeds Lambda={big_lambda}"));
        }
        match kind {
            OperatorKind::Laplacian if lambda != T::one() || big_lambda != T::one() => {
                return invalid("the Laplacian has lambda = Lambda = 1");
            }
            OperatorKind::Bellman => {
                let Some(first) = family.first() else {
                    return invalid("a Bellman operator needs a nonempty matrix family");
                };
                let n = first.dim();
                let slack = T::lit(1e-12).max(T::epsilon() * T::lit(64.0)) * big_lambda;
                for (k, a) in family.iter().enumerate() {
                    if a.dim() != n {
                        return invalid(format!("family member {k} has dimension {} != {n}", a.dim()));
                    }
                    let eig = a.eigenvalues();
                    let (lo, hi) = (eig[0], eig[eig.len() - 1]);
                    if lo < lambda - slack || hi > big_lambda + slack {
                        return invalid(format!(
                            "family member {k} has spectrum [{lo}, {hi}] outside [{lambda}, {big_lambda}]"
                        ));
                    }
                }
            }
            _ if !family.is_empty() => {
                return invalid(format!("a matrix family is only meaningful for bellman, not {kind}"));
            }
            _ => {}
        }
        Ok(Self { kind, lambda, big_lambda, family })
    }

    pub fn laplacian() -> Self {
        Self { kind: OperatorKind::Laplacian, lambda: T::one(), big_lambda: T::one(), family: Vec::new() }
    }

    pub fn pucci_plus(lambda: T, big_lambda: T) -> Result<Self> {
        Self::new(OperatorKind::PucciPlus, lambda, big_lambda, Vec::new())
    }

    pub fn pucci_minus(lambda: T, big_lambda: T) -> Result<Self> {
        Self::new(OperatorKind::PucciMinus, lambda, big_lambda, Vec::new())
    }

    pub fn bellman(lambda: T, big_lambda: T, family: Vec<SymMatrix<T>>) -> Result<Self> {
        Self::new(OperatorKind::Bellman, lambda, big_lambda, family)
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn big_lambda(&self) -> T {
        self.big_lambda
    }

    pub fn family(&self) -> &[SymMatrix<T>] {
        &self.family
    }

    /// Dimension fixed by the operator itself (only Bellman families carry one).
    pub fn fixed_dim(&self) -> Option<usize> {
        self.family.first().map(SymMatrix::dim)
    }

    /// Evaluates `F(X)` exactly (no discretization).
    pub fn eval(&self, x: &SymMatrix<T>) -> Result<T> {
        if let Some(n) = self.fixed_dim() {
            if n != x.dim() {
                return invalid(format!("operator acts on {n}×{n} matrices, got {0}×{0}", x.dim()));
            }
        }
        Ok(match self.kind {
            OperatorKind::Laplacian => x.trace(),
            OperatorKind::PucciPlus => pucci(&x.eigenvalues(), self.big_lambda, self.lambda),
            OperatorKind::PucciMinus => pucci(&x.eigenvalues(), self.lambda, self.big_lambda),
            OperatorKind::Bellman => self
                .family
                .iter()
                .map(|a| a.dot(x))
                .fold(T::neg_infinity(), T::max),
        })
    }

    /// `F(e₁ e₁ᵀ)`, the coefficient of the half-space profile `x₁² / (2c)`.
    pub fn halfspace_coefficient(&self, n: usize) -> Result<T> {
        let mut e1 = vec![T::zero(); self.fixed_dim().unwrap_or(n)];
        e1[0] = T::one();
        self.eval(&SymMatrix::outer(&e1))
    }
}

/// `pos_weight · Σ eig⁺ − neg_weight · Σ eig⁻`.
fn pucci<T: Real>(eig: &[T], pos_weight: T, neg_weight: T) -> T {
    eig.iter().fold(T::zero(), |acc, &e| {
        if e > T::zero() {
            acc + pos_weight * e
        } else {
            acc + neg_weight * e
        }
    })
}

/// Evaluates `F(X)`; free-function form of [`OperatorSpec::eval`].
pub fn eval_operator<T: Real>(spec: &OperatorSpec<T>, x: &SymMatrix<T>) -> Result<T> {
    spec.eval(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pp() -> OperatorSpec<f64> {
        OperatorSpec::pucci_plus(1.0, 2.0).unwrap()
    }

    #[test]
    fn pucci_plus_examples() {
        assert_eq!(pp().eval(&SymMatrix::identity(2)).unwrap(), 4.0);
        assert_eq!(pp().eval(&SymMatrix::diag(&[1.0, -1.0])).unwrap(), 1.0);
    }

    #[test]
    fn bellman_example() {
        let fam = vec![SymMatrix::diag(&[1.0, 1.0]), SymMatrix::diag(&[2.0, 0.5])];
        let spec = OperatorSpec::bellman(0.5, 2.0, fam).unwrap();
        assert_eq!(spec.eval(&SymMatrix::diag(&[1.0, 0.0])).unwrap(), 2.0);
    }

    #[test]
    fn bellman_dimension_mismatch() {
        let spec = OperatorSpec::bellman(1.0, 1.0, vec![SymMatrix::identity(2)]).unwrap();
        assert!(matches!(spec.eval(&SymMatrix::identity(3)), Err(crate::Error::InvalidArgument(_))));
    }

    #[test]
    fn construction_invariants() {
        assert!(OperatorSpec::pucci_plus(2.0, 1.0).is_err());
        assert!(OperatorSpec::pucci_plus(0.0, 1.0).is_err());
        assert!(OperatorSpec::new(OperatorKind::Laplacian, 1.0, 2.0, vec![]).is_err());
        assert!(OperatorSpec::bellman(1.0, 2.0, vec![]).is_err());
        // diag(3, 1) has an eigenvalue above Lambda = 2.
        assert!(OperatorSpec::bellman(1.0, 2.0, vec![SymMatrix::diag(&[3.0, 1.0])]).is_err());
        assert!(OperatorSpec::pucci_plus(1.0, 2.0).map(|_| ()).is_ok());
    }

    #[test]
    fn halfspace_coefficients() {
        assert_eq!(OperatorSpec::<f64>::laplacian().halfspace_coefficient(2).unwrap(), 1.0);
        assert_eq!(pp().halfspace_coefficient(2).unwrap(), 2.0);
        let pm = OperatorSpec::pucci_minus(1.0, 2.0).unwrap();
        assert_eq!(pm.halfspace_coefficient(3).unwrap(), 1.0);
    }

    fn sym2() -> impl Strategy<Value = SymMatrix<f64>> {
        (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64)
            .prop_map(|(a, b, c)| SymMatrix::from_row_major(2, &[a, b, b, c]).unwrap())
    }

    proptest! {
        #[test]
        fn pucci_plus_dominates_minus(x in sym2()) {
            let pm = OperatorSpec::pucci_minus(1.0, 2.0).unwrap();
            prop_assert!(pp().eval(&x).unwrap() >= pm.eval(&x).unwrap() - 1e-12);
        }

        #[test]
        fn scaled_identity_family_is_scaled_trace(x in sym2(), c in 0.5..3.0f64) {
            let spec = OperatorSpec::bellman(c, c, vec![SymMatrix::identity(2) * c]).unwrap();
            let got = spec.eval(&x).unwrap();
            prop_assert!((got - c * x.trace()).abs() <= 1e-12 * (1.0 + got.abs()));
        }

        #[test]
        fn degenerate_monotone(x in sym2(), v in (-2.0..2.0f64, -2.0..2.0f64)) {
            let n = SymMatrix::outer(&[v.0, v.1]);
            for spec in [pp(), OperatorSpec::pucci_minus(1.0, 2.0).unwrap(), OperatorSpec::laplacian()] {
                prop_assert!(spec.eval(&(x + n)).unwrap() >= spec.eval(&x).unwrap() - 1e-12);
            }
        }

        #[test]
        fn positively_homogeneous(x in sym2(), t in 0.01..50.0f64) {
            for spec in [pp(), OperatorSpec::pucci_minus(1.0, 2.0).unwrap()] {
                let fx = spec.eval(&x).unwrap();
                let ftx = spec.eval(&(x * t)).unwrap();
                prop_assert!((ftx - t * fx).abs() <= 1e-12 * (1.0 + (t * fx).abs()));
            }
        }
    }
}
