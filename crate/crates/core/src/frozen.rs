//! Exact solves of the frozen-policy problem.
//!
//! With the variant fixed at every node, `L_p u = rhs` is a linear system whose matrix is a
//! nonsingular M-matrix (positive diagonal `D`, nonpositive couplings, weak diagonal dominance
//! with a boundary connection). The obstacle `u ≥ 0` is handled by a primal-dual active-set
//! iteration, which terminates finitely for M-matrices. Each step is one sparse LU solve.

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};

use crate::error::{Error, Result};
use crate::grid::{GridDomain, NodeRole};
use crate::scalar::Real;
use crate::scheme::DiscreteOperator;

const NOT_INTERIOR: usize = usize::MAX;

/// Sparsity pattern covering every variant's stencil, factorized symbolically once.
pub(crate) struct FrozenSystem {
    row_of: Vec<usize>,
    nodes: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    // Per row, (column, position in the value array), sorted by column.
    slots: Vec<Vec<(usize, usize)>>,
    symbolic: SymbolicLu<usize>,
}

impl FrozenSystem {
    pub(crate) fn new<T: Real>(grid: &GridDomain<T>, op: &DiscreteOperator<T>) -> Result<Self> {
        let nodes = grid.interior_nodes().to_vec();
        let mut row_of = vec![NOT_INTERIOR; grid.len()];
        for (r, &idx) in nodes.iter().enumerate() {
            row_of[idx] = r;
        }
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        let mut cols = Vec::new();
        for (r, &idx) in nodes.iter().enumerate() {
            cols.clear();
            cols.push(r);
            for k in 0..op.variant_count() {
                let (terms, _) = op.variant_terms(k);
                for &(off, _) in terms {
                    for nb in [idx as isize + off, idx as isize - off] {
                        let c = row_of[nb as usize];
                        if c != NOT_INTERIOR {
                            cols.push(c);
                        }
                    }
                }
            }
            cols.sort_unstable();
            cols.dedup();
            pairs.extend(cols.iter().map(|&c| (c, r)));
        }
        pairs.sort_unstable();

        let n = nodes.len();
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(pairs.len());
        let mut slots = vec![Vec::new(); n];
        for (pos, &(c, r)) in pairs.iter().enumerate() {
            col_ptr[c + 1] += 1;
            row_idx.push(r);
            slots[r].push((c, pos));
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        let pattern = SymbolicSparseColMatRef::new_checked(n, n, &col_ptr, None, &row_idx);
        let symbolic = SymbolicLu::try_new(pattern)
            .map_err(|e| Error::DegenerateData(format!("symbolic factorization failed: {e:?}")))?;
        Ok(Self { row_of, nodes, col_ptr, row_idx, slots, symbolic })
    }

    fn slot(&self, r: usize, c: usize) -> usize {
        let row = &self.slots[r];
        row[row.binary_search_by_key(&c, |&(col, _)| col).expect("column in pattern")].1
    }

    /// Solves `L_p u = rhs` on inactive nodes with `u = 0` on `active`, writing interior values.
    fn solve_linear<T: Real>(
        &self,
        op: &DiscreteOperator<T>,
        policy: &[usize],
        active: &[bool],
        rhs: &[T],
        values: &mut [T],
    ) -> Result<()> {
        let mut entries = vec![0.0f64; self.row_idx.len()];
        let mut b = Mat::<f64>::zeros(self.nodes.len(), 1);
        for (r, &idx) in self.nodes.iter().enumerate() {
            if active[r] {
                entries[self.slot(r, r)] = 1.0;
                continue;
            }
            let (terms, diag) = op.variant_terms(policy[idx]);
            entries[self.slot(r, r)] += diag.to_f64_lossy();
            let mut acc = -rhs[idx].to_f64_lossy();
            for &(off, c) in terms {
                let c = c.to_f64_lossy();
                for nb in [idx as isize + off, idx as isize - off] {
                    let nb = nb as usize;
                    match self.row_of[nb] {
                        NOT_INTERIOR => acc += c * values[nb].to_f64_lossy(),
                        // Active unknowns are zero: no coupling, so the identity block decouples.
                        col if active[col] => {}
                        col => entries[self.slot(r, col)] -= c,
                    }
                }
            }
            b[(r, 0)] = acc;
        }
        let pattern = SymbolicSparseColMatRef::new_checked(
            self.nodes.len(),
            self.nodes.len(),
            &self.col_ptr,
            None,
            &self.row_idx,
        );
        let matrix = SparseColMatRef::new(pattern, &entries);
        let lu = Lu::try_new_with_symbolic(self.symbolic.clone(), matrix)
            .map_err(|e| Error::DegenerateData(format!("frozen-policy matrix is singular: {e:?}")))?;
        let x = lu.solve(&b);
        for (r, &idx) in self.nodes.iter().enumerate() {
            let v = x[(r, 0)];
            if !v.is_finite() {
                return Err(Error::DegenerateData(format!("non-finite frozen-policy solution at node {idx}")));
            }
            // Pivoting leaves rounding noise on the identity rows; pin them exactly.
            values[idx] = if active[r] { T::zero() } else { T::lit(v) };
        }
        Ok(())
    }

    /// Solves the frozen-policy problem exactly: the linear equation when `project` is false,
    /// otherwise the complementarity system `min(u, rhs − L_p u) = 0` by primal-dual active sets.
    /// Nodes flagged in `pinned` (indexed by grid node) are held at zero in the linear case.
    /// Returns the number of linear solves.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn solve<T: Real>(
        &self,
        grid: &GridDomain<T>,
        op: &DiscreteOperator<T>,
        policy: &[usize],
        rhs: &[T],
        values: &mut [T],
        project: bool,
        pinned: Option<&[bool]>,
        max_solves: usize,
    ) -> Result<usize> {
        debug_assert!(self.nodes.iter().all(|&i| grid.role(i) == NodeRole::Interior));
        let n = self.nodes.len();
        // Multiplier of the obstacle, scaled to solution units: (rhs − L_p u) / D.
        let multiplier = |values: &[T], r: usize| {
            let idx = self.nodes[r];
            let (s, d) = op.linear_parts(values, idx, policy[idx]);
            (rhs[idx] - (s - d * values[idx])) / d
        };
        let mut active: Vec<bool> = if project {
            (0..n).map(|r| multiplier(values, r) - values[self.nodes[r]] > T::zero()).collect()
        } else {
            self.nodes.iter().map(|&idx| pinned.is_some_and(|p| p[idx])).collect()
        };
        let mut solves = 0;
        loop {
            self.solve_linear(op, policy, &active, rhs, values)?;
            solves += 1;
            if !project {
                return Ok(solves);
            }
            let next: Vec<bool> = (0..n)
                .map(|r| {
                    let u = values[self.nodes[r]];
                    if active[r] {
                        multiplier(values, r) > T::zero()
                    } else {
                        u < T::zero()
                    }
                })
                .collect();
            if next == active || solves >= max_solves {
                return Ok(solves);
            }
            active = next;
        }
    }
}
