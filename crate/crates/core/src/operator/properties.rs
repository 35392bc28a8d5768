//! Seeded randomized checks of the structural conditions on `F`.
//!
//! Ellipticity uses `‖N‖ = λ_max(N)` for `N ≥ 0`. Under that norm a trace-type
//! operator with spectral bounds `[λ, Λ]` satisfies `λ‖N‖ ≤ F(A+N) − F(A) ≤ nΛ‖N‖`,
//! so the check validates against the effective pair `(λ, nΛ)` and reports the
//! observed ratio range alongside it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{OperatorKind, OperatorSpec};
use crate::error::Result;
use crate::matrix::SymMatrix;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipticityReport<T> {
    pub pass: bool,
    pub trials: usize,
    /// Largest observed `(F(A+N) − F(A)) / ‖N‖`.
    pub worst_ratio: T,
    /// Smallest observed ratio.
    pub min_ratio: T,
    pub lower_bound: T,
    pub upper_bound: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport<T> {
    pub pass: bool,
    pub trials: usize,
    pub failures: usize,
    /// Largest defect seen (positive means the property was violated by that much).
    pub worst_defect: T,
}

fn slack<T: Real>(base: f64) -> T {
    T::lit(base).max(T::epsilon() * T::lit(256.0))
}

fn sample_dim<T: Real>(spec: &OperatorSpec<T>, n: usize) -> usize {
    spec.fixed_dim().unwrap_or(n)
}

fn random_sym<T: Real>(rng: &mut ChaCha8Rng, n: usize, amp: f64) -> SymMatrix<T> {
    let mut m = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            m.set(i, j, T::lit(rng.gen_range(-amp..amp)));
        }
    }
    m
}

/// Random positive semidefinite matrix: rank one a third of the time, `B Bᵀ` otherwise.
fn random_psd<T: Real>(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix<T> {
    if rng.gen_bool(1.0 / 3.0) {
        let v: Vec<T> = (0..n).map(|_| T::lit(rng.gen_range(-1.5..1.5))).collect();
        return SymMatrix::outer(&v);
    }
    let mut acc = SymMatrix::zeros(n);
    for _ in 0..n {
        let v: Vec<T> = (0..n).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect();
        acc = acc + SymMatrix::outer(&v);
    }
    acc
}

/// `(F(A+N) − F(A), ‖N‖)` for one explicit sample.
pub fn ellipticity_increment<T: Real>(
    spec: &OperatorSpec<T>,
    a: &SymMatrix<T>,
    n: &SymMatrix<T>,
) -> Result<(T, T)> {
    let diff = spec.eval(&(*a + *n))? - spec.eval(a)?;
    Ok((diff, n.max_eigenvalue().max(T::zero())))
}

/// `F(tX) − tF(X)`.
pub fn homogeneity_defect<T: Real>(spec: &OperatorSpec<T>, x: &SymMatrix<T>, t: T) -> Result<T> {
    Ok(spec.eval(&(*x * t))? - t * spec.eval(x)?)
}

/// `F(θX + (1−θ)Y) − θF(X) − (1−θ)F(Y)`; nonpositive for convex `F`.
pub fn convexity_defect<T: Real>(
    spec: &OperatorSpec<T>,
    x: &SymMatrix<T>,
    y: &SymMatrix<T>,
    theta: T,
) -> Result<T> {
    let mix = *x * theta + *y * (T::one() - theta);
    Ok(spec.eval(&mix)? - theta * spec.eval(x)? - (T::one() - theta) * spec.eval(y)?)
}

/// Samples `trials` pairs `(A, N ≥ 0)` in dimension `n` (the family dimension for Bellman).
pub fn check_ellipticity<T: Real>(
    spec: &OperatorSpec<T>,
    n: usize,
    trials: usize,
    rng_seed: u64,
) -> Result<EllipticityReport<T>> {
    let n = sample_dim(spec, n);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let lower = spec.lambda();
    let upper = spec.big_lambda() * T::from_count(n);
    let tol = slack::<T>(1e-9);
    let mut pass = true;
    let (mut worst, mut least) = (T::neg_infinity(), T::infinity());
    for _ in 0..trials.max(1) {
        let a = random_sym(&mut rng, n, 2.0);
        let m = random_psd(&mut rng, n);
        let (diff, norm) = ellipticity_increment(spec, &a, &m)?;
        if diff < lower * norm - tol || diff > upper * norm + tol {
            pass = false;
        }
        if norm > tol {
            let ratio = diff / norm;
            worst = worst.max(ratio);
            least = least.min(ratio);
        }
    }
    Ok(EllipticityReport { pass, trials: trials.max(1), worst_ratio: worst, min_ratio: least, lower_bound: lower, upper_bound: upper })
}

/// Checks `F(tX) = tF(X)` for `t > 0`; the Laplacian is also checked for `t < 0`.
pub fn check_homogeneity<T: Real>(
    spec: &OperatorSpec<T>,
    n: usize,
    trials: usize,
    rng_seed: u64,
) -> Result<PropertyReport<T>> {
    let n = sample_dim(spec, n);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let tol = slack::<T>(1e-12);
    let mut report = PropertyReport { pass: true, trials: trials.max(1), failures: 0, worst_defect: T::zero() };
    for k in 0..report.trials {
        let x = random_sym(&mut rng, n, 3.0);
        let mut t = if k == 0 { 1.0 } else { rng.gen_range(-3.0f64..3.0).exp() };
        if spec.kind() == OperatorKind::Laplacian && rng.gen_bool(0.5) {
            t = -t;
        }
        let t = T::lit(t);
        let defect = homogeneity_defect(spec, &x, t)?.abs();
        let scale = T::one() + (t * spec.eval(&x)?).abs();
        report.worst_defect = report.worst_defect.max(defect / scale);
        if defect > tol * scale {
            report.failures += 1;
            report.pass = false;
        }
    }
    Ok(report)
}

/// Checks `F(θX + (1−θ)Y) ≤ θF(X) + (1−θ)F(Y) + 1e−12` on random triples.
pub fn check_convexity<T: Real>(
    spec: &OperatorSpec<T>,
    n: usize,
    trials: usize,
    rng_seed: u64,
) -> Result<PropertyReport<T>> {
    let n = sample_dim(spec, n);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let tol = slack::<T>(1e-12);
    let mut report = PropertyReport { pass: true, trials: trials.max(1), failures: 0, worst_defect: T::neg_infinity() };
    for _ in 0..report.trials {
        let x = random_sym(&mut rng, n, 3.0);
        let y = random_sym(&mut rng, n, 3.0);
        let theta = T::lit(rng.gen_range(0.0..=1.0));
        let defect = convexity_defect(spec, &x, &y, theta)?;
        report.worst_defect = report.worst_defect.max(defect);
        if defect > tol {
            report.failures += 1;
            report.pass = false;
        }
    }
    Ok(report)
}
