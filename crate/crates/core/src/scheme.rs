//! Monotone wide-stencil discretization `F_h` of `F(D²u)`.
//!
//! `F_h` is written as an extremum over finitely many linear stencils ("variants"),
//! each a nonnegative combination of directional second differences:
//!
//! * Laplacian: one variant, the axis frame with unit weights.
//! * Bellman: one variant per family member `A_k = Σ μ_{k,j} v_j v_jᵀ` with `μ ≥ 0`.
//! * Pucci: per frame, `Λ s⁺ − λ s⁻ = max(Λ s, λ s)`, so one variant per frame and sign
//!   pattern; `M⁺` takes the max over variants, `M⁻` the min.
//!
//! Nonnegative weights make every variant, and hence the extremum, nondecreasing in the
//! neighbor values and nonincreasing in the center value.

use crate::error::{invalid, Error, Result};
use crate::grid::{GridDomain, NodeRole, ScalarField};
use crate::matrix::SymMatrix;
use crate::operator::{OperatorKind, OperatorSpec};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Max,
    Min,
}

#[derive(Debug, Clone)]
struct Variant<T> {
    // (flat neighbor offset, weight / |d|²)
    terms: Vec<(isize, T)>,
    diag: T,
}

/// `F_h` compiled against one grid.
#[derive(Debug, Clone)]
pub struct DiscreteOperator<T> {
    extremum: Extremum,
    variants: Vec<Variant<T>>,
}

/// Writes `a` as `Σ μ_j v_j v_jᵀ` over the grid directions with `μ_j ≥ 0`.
///
/// With the diagonal frame, `[[a, b], [b, c]] = (a−|b|) e₁e₁ᵀ + (c−|b|) e₂e₂ᵀ + 2|b| v±v±ᵀ`,
/// which needs diagonal dominance; with the axis frame only, `a` must be diagonal.
pub fn decompose_over_frames<T: Real>(grid: &GridDomain<T>, a: &SymMatrix<T>) -> Result<Vec<(usize, T)>> {
    let n = grid.dim();
    if a.dim() != n {
        return invalid(format!("matrix dimension {} does not match grid dimension {n}", a.dim()));
    }
    let scale = (0..n).map(|i| a.get(i, i).abs()).fold(T::one(), T::max);
    let tol = T::lit(1e-12).max(T::epsilon() * T::lit(64.0)) * scale;
    let has_diag = grid.frames().len() > 1;
    let mut weights: Vec<(usize, T)> = (0..n).map(|k| (k, a.get(k, k))).collect();
    if has_diag {
        let b = a.get(0, 1);
        let (dir, w) = if b >= T::zero() { (n, b) } else { (n + 1, -b) };
        weights[0].1 = weights[0].1 - w;
        weights[1].1 = weights[1].1 - w;
        weights.push((dir, T::lit(2.0) * w));
    } else {
        for i in 0..n {
            for j in i + 1..n {
                if a.get(i, j).abs() > tol {
                    return invalid(format!(
                        "matrix with off-diagonal entry ({i},{j}) = {} is not representable on the axis frame",
                        a.get(i, j)
                    ));
                }
            }
        }
    }
    for (dir, w) in &mut weights {
        if *w < -tol {
            return invalid(format!(
                "matrix is not representable with nonnegative weights over the grid frames (direction {dir} weight {w})"
            ));
        }
        *w = w.max(T::zero());
    }
    weights.retain(|&(_, w)| w > T::zero());
    Ok(weights)
}

impl<T: Real> DiscreteOperator<T> {
    pub fn new(spec: &OperatorSpec<T>, grid: &GridDomain<T>) -> Result<Self> {
        let h2 = grid.h() * grid.h();
        let make = |weights: &[(usize, T)]| {
            let terms: Vec<(isize, T)> = weights
                .iter()
                .map(|&(dir, w)| {
                    let d2 = T::from_i64(grid.directions()[dir].norm2).expect("small integer") * h2;
                    (grid.dir_offset(dir), w / d2)
                })
                .collect();
            let diag = terms.iter().map(|&(_, c)| T::lit(2.0) * c).sum();
            Variant { terms, diag }
        };
        let n = grid.dim();
        let (extremum, variants) = match spec.kind() {
            OperatorKind::Laplacian => {
                let w: Vec<(usize, T)> = (0..n).map(|k| (k, T::one())).collect();
                (Extremum::Max, vec![make(&w)])
            }
            OperatorKind::Bellman => {
                let mut vs = Vec::new();
                for a in spec.family() {
                    vs.push(make(&decompose_over_frames(grid, a)?));
                }
                (Extremum::Max, vs)
            }
            OperatorKind::PucciPlus | OperatorKind::PucciMinus => {
                let mut vs = Vec::new();
                for frame in grid.frames() {
                    for pattern in 0..(1usize << frame.len()) {
                        let w: Vec<(usize, T)> = frame
                            .iter()
                            .enumerate()
                            .map(|(i, &dir)| {
                                let big = pattern >> i & 1 == 1;
                                (dir, if big { spec.big_lambda() } else { spec.lambda() })
                            })
                            .collect();
                        vs.push(make(&w));
                    }
                }
                let ext = if spec.kind() == OperatorKind::PucciPlus { Extremum::Max } else { Extremum::Min };
                (ext, vs)
            }
        };
        Ok(Self { extremum, variants })
    }

    pub fn extremum(&self) -> Extremum {
        self.extremum
    }

    pub fn variant_count(&self) -> usize {
        self.variants.len()
    }

    /// Stencil of variant `k`: `(offset, coefficient)` pairs applied at `node ± offset`, and `D`.
    pub(crate) fn variant_terms(&self, k: usize) -> (&[(isize, T)], T) {
        let v = &self.variants[k];
        (&v.terms, v.diag)
    }

    /// `L_k u` at `node` for variant `k`. `node` must be interior.
    #[inline]
    pub fn variant_value(&self, values: &[T], node: usize, k: usize) -> T {
        let (s, d) = self.linear_parts(values, node, k);
        s - d * values[node]
    }

    /// `(S, D)` with `L_k u = S − D·u(node)`; `D > 0`.
    #[inline]
    pub fn linear_parts(&self, values: &[T], node: usize, k: usize) -> (T, T) {
        let v = &self.variants[k];
        let mut s = T::zero();
        for &(off, c) in &v.terms {
            let fwd = values[(node as isize + off) as usize];
            let bwd = values[(node as isize - off) as usize];
            s = s + c * (fwd + bwd);
        }
        (s, v.diag)
    }

    /// True when `a` is strictly better than `b` for this extremum beyond the tie tolerance.
    #[inline]
    fn strictly_better(&self, a: T, b: T) -> bool {
        let tie = T::lit(1e-14) * (T::one() + a.abs().max(b.abs()));
        match self.extremum {
            Extremum::Max => a > b + tie,
            Extremum::Min => a < b - tie,
        }
    }

    /// Optimal variant at `node`; `prev` is kept unless another variant is strictly better.
    pub fn best_variant(&self, values: &[T], node: usize, prev: usize) -> (usize, T) {
        let mut best = prev.min(self.variants.len() - 1);
        let mut best_val = self.variant_value(values, node, best);
        for k in 0..self.variants.len() {
            if k == best {
                continue;
            }
            let val = self.variant_value(values, node, k);
            if self.strictly_better(val, best_val) {
                best = k;
                best_val = val;
            }
        }
        (best, best_val)
    }

    /// `F_h(u)` at an interior node.
    pub fn apply(&self, values: &[T], node: usize) -> T {
        let mut acc = self.variant_value(values, node, 0);
        for k in 1..self.variants.len() {
            let v = self.variant_value(values, node, k);
            acc = match self.extremum {
                Extremum::Max => acc.max(v),
                Extremum::Min => acc.min(v),
            };
        }
        acc
    }
}

/// Evaluates `F_h(u)` at one node, compiling the operator for `grid` first.
pub fn discrete_operator<T: Real>(
    spec: &OperatorSpec<T>,
    field: &ScalarField<T>,
    grid: &GridDomain<T>,
    node: usize,
) -> Result<T> {
    if grid.role(node) != NodeRole::Interior {
        return Err(Error::StencilViolation { node, neighbor: node });
    }
    Ok(DiscreteOperator::new(spec, grid)?.apply(field.values(), node))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    fn grid() -> GridDomain<f64> {
        build_grid(2, 1.0 / 16.0, 1.0).unwrap()
    }

    #[test]
    fn half_square_is_one_for_laplacian() {
        let g = grid();
        let u = ScalarField::from_fn(&g, |x| 0.5 * x[0] * x[0]);
        let op = DiscreteOperator::new(&OperatorSpec::laplacian(), &g).unwrap();
        for &node in g.interior_nodes() {
            assert!((op.apply(u.values(), node) - 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn pucci_plus_on_radial_and_saddle_quadratics() {
        let g = grid();
        let pp = OperatorSpec::pucci_plus(1.0, 2.0).unwrap();
        let op = DiscreteOperator::new(&pp, &g).unwrap();
        let bowl = ScalarField::from_fn(&g, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]));
        let saddle = ScalarField::from_fn(&g, |x| 0.5 * (x[0] * x[0] - x[1] * x[1]));
        let node = g.index_of([5, -3, 0]).unwrap();
        assert!((op.apply(bowl.values(), node) - 4.0).abs() < 1e-11);
        assert!((op.apply(saddle.values(), node) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn decomposition_rules() {
        let g = grid();
        let a = SymMatrix::from_row_major(2, &[1.5, 0.5, 0.5, 1.5]).unwrap();
        let w = decompose_over_frames(&g, &a).unwrap();
        assert_eq!(w, vec![(0, 1.0), (1, 1.0), (2, 1.0)]);
        let b = SymMatrix::from_row_major(2, &[1.0, -0.25, -0.25, 2.0]).unwrap();
        assert_eq!(decompose_over_frames(&g, &b).unwrap(), vec![(0, 0.75), (1, 1.75), (3, 0.5)]);
        let bad = SymMatrix::from_row_major(2, &[1.0, 1.5, 1.5, 3.0]).unwrap();
        assert!(decompose_over_frames(&g, &bad).is_err());
        let g3 = build_grid(3, 1.0 / 8.0, 1.0).unwrap();
        assert!(decompose_over_frames(&g3, &SymMatrix::from_row_major(3, &[1.0, 0.1, 0.0, 0.1, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap()).is_err());
    }

    #[test]
    fn bellman_exact_on_any_quadratic() {
        let g = grid();
        let fam = vec![
            SymMatrix::identity(2),
            SymMatrix::diag(&[2.0, 1.0]),
            SymMatrix::from_row_major(2, &[1.5, 0.5, 0.5, 1.5]).unwrap(),
        ];
        let spec = OperatorSpec::bellman(1.0, 2.0, fam).unwrap();
        let op = DiscreteOperator::new(&spec, &g).unwrap();
        let hess = SymMatrix::from_row_major(2, &[0.3, -0.7, -0.7, -1.1]).unwrap();
        let u = ScalarField::from_fn(&g, |x| 0.5 * hess.quad_form(x));
        let exact = spec.eval(&hess).unwrap();
        for &node in g.interior_nodes() {
            assert!((op.apply(u.values(), node) - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn non_interior_node_is_a_stencil_violation() {
        let g = grid();
        let u = ScalarField::zeros(&g);
        let pi = g.index_of([0, 0, 0]).unwrap();
        assert!(discrete_operator(&OperatorSpec::laplacian(), &u, &g, pi).is_err());
    }

    #[test]
    fn ties_keep_previous_variant() {
        let g = grid();
        let op = DiscreteOperator::new(&OperatorSpec::pucci_plus(1.0, 2.0).unwrap(), &g).unwrap();
        let u = ScalarField::zeros(&g);
        let node = g.interior_nodes()[10];
        for prev in 0..op.variant_count() {
            assert_eq!(op.best_variant(u.values(), node, prev).0, prev);
        }
    }
}
