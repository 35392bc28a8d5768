//! Multilinear interpolation and the quadratic rescaling `u_r(x) = u(rx) / r²`.

use crate::error::{invalid, Error, Result};
use crate::grid::{GridDomain, NodeRole, ScalarField, Shape};
use crate::scalar::Real;

fn contains_closed<T: Real>(grid: &GridDomain<T>, x: &[T]) -> bool {
    let tol = T::lit(1e-12) * grid.radius();
    if x[0] < -tol {
        return false;
    }
    match grid.shape() {
        Shape::HalfBall { radius } => {
            let r2: T = x.iter().map(|&v| v * v).sum();
            r2.sqrt() <= radius + tol
        }
        Shape::HalfBox { depth, half_width } => {
            x[0] <= depth + tol && x[1..].iter().all(|v| v.abs() <= half_width + tol)
        }
    }
}

/// Bilinear (n = 2) or trilinear (n = 3) interpolation of `field` at `x`.
///
/// Cell corners that are exterior are dropped and the remaining weights renormalized,
/// which only happens in cells cut by a curved outer boundary.
pub fn interpolate<T: Real>(grid: &GridDomain<T>, field: &ScalarField<T>, x: &[T]) -> Result<T> {
    let n = grid.dim();
    if x.len() != n {
        return invalid(format!("point has {} coordinates, grid dimension is {n}", x.len()));
    }
    let violation = || Error::DomainViolation(x.iter().map(|v| v.to_f64_lossy()).collect());
    if !contains_closed(grid, x) {
        return Err(violation());
    }
    let dims = grid.dims();
    let mut base = [0i64; 3];
    let mut frac = [T::zero(); 3];
    for k in 0..n {
        let s = x[k] / grid.h();
        let lo_lim = if k == 0 { 0 } else { -((dims[k] as i64 - 1) / 2) };
        let hi_lim = if k == 0 { dims[0] as i64 - 1 } else { (dims[k] as i64 - 1) / 2 };
        let mut b = s.floor().to_i64().ok_or_else(violation)?;
        b = b.clamp(lo_lim, hi_lim - 1);
        base[k] = b;
        frac[k] = (s - T::from_i64(b).expect("small integer")).max(T::zero()).min(T::one());
    }
    let mut acc = T::zero();
    let mut wsum = T::zero();
    for corner in 0..(1usize << n) {
        let mut w = T::one();
        let mut idx = base;
        for k in 0..n {
            if corner >> k & 1 == 1 {
                idx[k] += 1;
                w = w * frac[k];
            } else {
                w = w * (T::one() - frac[k]);
            }
        }
        if w == T::zero() {
            continue;
        }
        let Some(node) = grid.index_of(idx) else { continue };
        if grid.role(node) == NodeRole::Exterior {
            continue;
        }
        acc = acc + w * field.get(node);
        wsum = wsum + w;
    }
    if wsum <= T::zero() {
        return Err(violation());
    }
    Ok(acc / wsum)
}

/// Samples `v(x) = u(r x) / r²` on every non-exterior node of `target`.
pub fn restrict_and_rescale<T: Real>(
    field: &ScalarField<T>,
    grid: &GridDomain<T>,
    r: T,
    target: &GridDomain<T>,
) -> Result<ScalarField<T>> {
    if !(r > T::zero() && r <= T::one()) {
        return invalid(format!("scale r={r} must lie in (0, 1]"));
    }
    if target.dim() != grid.dim() {
        return invalid("source and target grids differ in dimension");
    }
    if r * target.radius() > grid.radius() * (T::one() + T::lit(1e-12)) {
        return invalid(format!(
            "r·(target radius) = {} exceeds the source radius {}",
            r * target.radius(),
            grid.radius()
        ));
    }
    let r2 = r * r;
    let mut values = vec![T::nan(); target.len()];
    for (idx, v) in values.iter_mut().enumerate() {
        if target.role(idx) == NodeRole::Exterior {
            continue;
        }
        let y: Vec<T> = target.coords(idx).into_iter().map(|c| c * r).collect();
        *v = interpolate(grid, field, &y)? / r2;
    }
    ScalarField::from_values(target, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn identity_rescale() {
        let g = build_grid(2, 1.0f64 / 16.0, 1.0).unwrap();
        let u = ScalarField::from_fn(&g, |x: &[f64]| x[0].sin() + x[1] * x[1]);
        let v = restrict_and_rescale(&u, &g, 1.0, &g).unwrap();
        assert_eq!(u.sup_distance(&v), 0.0);
    }

    #[test]
    fn cubic_rescale_at_boundary_point() {
        let g = build_grid(2, 1.0f64 / 16.0, 1.0).unwrap();
        let u = ScalarField::from_fn(&g, |x: &[f64]| x[0].powi(3));
        let v = restrict_and_rescale(&u, &g, 0.5, &g).unwrap();
        let at = g.index_of([16, 0, 0]).unwrap();
        assert!((v.get(at) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn halfspace_profile_is_scale_invariant_up_to_interpolation() {
        let g = build_grid(2, 1.0 / 32.0, 1.0).unwrap();
        let u = ScalarField::from_fn(&g, |x| 0.5 * x[0] * x[0]);
        for r in [0.5, 0.25, 0.125] {
            let v = restrict_and_rescale(&u, &g, r, &g).unwrap();
            // Linear interpolation error of x²/2 is at most h²/8, amplified by 1/r².
            let bound = g.h() * g.h() / 8.0 / (r * r) + 1e-12;
            assert!(v.sup_distance(&u) <= bound, "r={r}");
        }
    }

    #[test]
    fn rejects_bad_scales_and_points() {
        let g = build_grid(2, 1.0 / 16.0, 1.0).unwrap();
        let small = build_grid(2, 1.0 / 16.0, 0.5).unwrap();
        let u = ScalarField::zeros(&g);
        assert!(restrict_and_rescale(&u, &g, 1.5, &g).is_err());
        assert!(restrict_and_rescale(&u, &small, 1.0, &g).is_err());
        assert!(matches!(interpolate(&g, &u, &[0.9, 0.9]), Err(Error::DomainViolation(_))));
        assert!(matches!(interpolate(&g, &u, &[-0.1, 0.0]), Err(Error::DomainViolation(_))));
    }
}
