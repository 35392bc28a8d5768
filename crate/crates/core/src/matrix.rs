//! Small symmetric matrices (n ≤ 3) stored by their upper triangle.

use std::ops::{Add, Mul, Sub};

use crate::error::{invalid, Result};
use crate::scalar::Real;

pub const MAX_DIM: usize = 3;

// Upper-triangle slot for (i, j), i ≤ j, row-major over the 3×3 triangle.
const SLOT: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMatrix<T> {
    n: usize,
    upper: [T; 6],
}

impl<T: Real> SymMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&n), "dimension {n} outside 1..=3");
        Self { n, upper: [T::zero(); 6] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![T::one(); n])
    }

    pub fn diag(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds from a full row-major `n×n` array; the input must be symmetric.
    pub fn from_row_major(n: usize, rows: &[T]) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&n) {
            return invalid(format!("matrix dimension {n} outside 1..=3"));
        }
        if rows.len() != n * n {
            return invalid(format!("expected {} entries for a {n}×{n} matrix, got {}", n * n, rows.len()));
        }
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let (a, b) = (rows[i * n + j], rows[j * n + i]);
                let scale = T::one() + a.abs().max(b.abs());
                if (a - b).abs() > T::lit(1e-12) * scale {
                    return invalid(format!("matrix not symmetric at ({i},{j})"));
                }
                m.set(i, j, a);
            }
        }
        Ok(m)
    }

    /// Rank-one matrix `v vᵀ`.
    pub fn outer(v: &[T]) -> Self {
        let mut m = Self::zeros(v.len());
        for i in 0..v.len() {
            for j in i..v.len() {
                m.set(i, j, v[i] * v[j]);
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        debug_assert!(i < self.n && j < self.n);
        self.upper[SLOT[i][j]]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.n && j < self.n);
        self.upper[SLOT[i][j]] = v;
    }

    pub fn to_row_major(&self) -> Vec<T> {
        let n = self.n;
        (0..n * n).map(|k| self.get(k / n, k % n)).collect()
    }

    pub fn trace(&self) -> T {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// `trace(self · other)`, the Frobenius inner product.
    pub fn dot(&self, other: &Self) -> T {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let mut s = T::zero();
        for i in 0..self.n {
            s = s + self.get(i, i) * other.get(i, i);
            for j in i + 1..self.n {
                s = s + T::lit(2.0) * self.get(i, j) * other.get(i, j);
            }
        }
        s
    }

    /// Quadratic form `vᵀ A v`.
    pub fn quad_form(&self, v: &[T]) -> T {
        let mut s = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                s = s + v[i] * self.get(i, j) * v[j];
            }
        }
        s
    }

    pub fn scale(&self, t: T) -> Self {
        let mut m = *self;
        m.upper.iter_mut().for_each(|x| *x = *x * t);
        m
    }

    fn zip(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let mut m = *self;
        for (x, &y) in m.upper.iter_mut().zip(other.upper.iter()) {
            *x = f(*x, y);
        }
        m
    }

    /// Eigenvalues in ascending order: closed form for n ≤ 2, cyclic Jacobi rotations for n = 3.
    pub fn eigenvalues(&self) -> Vec<T> {
        match self.n {
            1 => vec![self.get(0, 0)],
            2 => {
                let (a, b, c) = (self.get(0, 0), self.get(0, 1), self.get(1, 1));
                let half = T::lit(0.5);
                let mean = half * (a + c);
                let rad = (half * (a - c)).hypot(b);
                vec![mean - rad, mean + rad]
            }
            _ => jacobi_eigenvalues(self),
        }
    }

    pub fn max_eigenvalue(&self) -> T {
        *self.eigenvalues().last().expect("nonempty spectrum")
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues()[0]
    }
}

impl<T: Real> Add for SymMatrix<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.zip(&rhs, |a, b| a + b)
    }
}

impl<T: Real> Sub for SymMatrix<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.zip(&rhs, |a, b| a - b)
    }
}

impl<T: Real> Mul<T> for SymMatrix<T> {
    type Output = Self;
    fn mul(self, t: T) -> Self {
        self.scale(t)
    }
}

fn jacobi_eigenvalues<T: Real>(m: &SymMatrix<T>) -> Vec<T> {
    let n = m.dim();
    let mut a = [[T::zero(); MAX_DIM]; MAX_DIM];
    for (i, row) in a.iter_mut().enumerate().take(n) {
        for (j, x) in row.iter_mut().enumerate().take(n) {
            *x = m.get(i, j);
        }
    }
    let frob = a.iter().flatten().map(|&x| x * x).sum::<T>().sqrt();
    let tol = T::lit(1e-13).max(T::epsilon() * T::lit(16.0)) * frob;

    for _sweep in 0..64 {
        let mut off = T::zero();
        for i in 0..n {
            for j in i + 1..n {
                off = off + a[i][j] * a[i][j];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (T::lit(2.0) * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<T> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    eig
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_by_two_closed_form() {
        let m = SymMatrix::from_row_major(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let e = m.eigenvalues();
        assert_abs_diff_eq!(e[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e[1], 3.0, epsilon = 1e-15);
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        // Tridiagonal (2,-1) matrix: eigenvalues 2 - sqrt(2), 2, 2 + sqrt(2).
        let m = SymMatrix::from_row_major(3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]).unwrap();
        let e = m.eigenvalues();
        let s = 2f64.sqrt();
        for (got, want) in e.iter().zip([2.0 - s, 2.0, 2.0 + s]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        assert!(SymMatrix::from_row_major(2, &[1.0, 2.0, 0.0, 1.0]).is_err());
        assert!(SymMatrix::<f64>::from_row_major(2, &[1.0, 2.0, 0.0]).is_err());
    }

    #[test]
    fn dot_is_trace_of_product() {
        let a = SymMatrix::from_row_major(2, &[1.0, 2.0, 2.0, 3.0]).unwrap();
        let b = SymMatrix::from_row_major(2, &[4.0, -1.0, -1.0, 5.0]).unwrap();
        // trace([[1,2],[2,3]]·[[4,-1],[-1,5]]) = (4 - 2) + (-2 + 15) = 15
        assert_eq!(a.dot(&b), 15.0);
        assert_eq!(SymMatrix::outer(&[1.0, 1.0]).quad_form(&[1.0, -1.0]), 0.0);
    }

    #[test]
    fn works_in_single_precision() {
        let m = SymMatrix::<f32>::diag(&[3.0, -1.0, 2.0]);
        assert_eq!(m.eigenvalues(), vec![-1.0, 2.0, 3.0]);
    }
}
