//! Regularity quantities measured on discrete solutions.
//!
//! Balls are `B⁺(z, r) = {x : |x − z| ≤ r, x₁ ≥ 0}` intersected with the non-exterior
//! nodes of the grid; membership is decided by node centers, so every sup and volume carries
//! an `O(h)` discretization error at the sphere.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::{GridDomain, NodeRole, Phase, PhaseField, ScalarField};
use crate::operator::OperatorSpec;
use crate::oracle::halfspace_oracle;
use crate::rescale::{interpolate, restrict_and_rescale};
use crate::scalar::Real;

const MEMBERSHIP_SLACK: f64 = 1e-9;

fn dist2<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

fn check_point<T: Real>(grid: &GridDomain<T>, z: &[T]) -> Result<()> {
    if z.len() != grid.dim() {
        return invalid(format!("point has {} coordinates, grid dimension is {}", z.len(), grid.dim()));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return invalid("point has non-finite coordinates");
    }
    Ok(())
}

/// Non-exterior nodes with centers in `B⁺(z, r)`, in flat-index order.
fn ball_nodes<'a, T: Real>(grid: &'a GridDomain<T>, z: &'a [T], r: T) -> impl Iterator<Item = usize> + 'a {
    let r2 = r * r * (T::one() + T::lit(MEMBERSHIP_SLACK));
    (0..grid.len()).filter(move |&idx| grid.role(idx) != NodeRole::Exterior && dist2(&grid.coords(idx), z) <= r2)
}

/// `max |u|` over the nodes in `B⁺(z, r)`.
pub fn sup_ball<T: Real>(grid: &GridDomain<T>, field: &ScalarField<T>, z: &[T], r: T) -> Result<T> {
    check_point(grid, z)?;
    if !(r > T::zero()) {
        return invalid(format!("radius {r} must be positive"));
    }
    let mut found = false;
    let mut sup = T::zero();
    for idx in ball_nodes(grid, z, r) {
        found = true;
        sup = sup.max(field.get(idx).abs());
    }
    if !found {
        return invalid(format!("ball of radius {r} around {z:?} contains no grid node"));
    }
    Ok(sup)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SEntry<T> {
    pub j: usize,
    pub r: T,
    pub s: T,
}

/// Dyadic suprema `S_j = sup_{B⁺(z, 2^{-j})} |u|` and the smallest constant `C₀` for which
/// `S_{j+1} ≤ max{S_j / 4, C₀ M 2^{-2j}}` holds at every resolved `j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct STable<T> {
    pub center: Vec<T>,
    pub entries: Vec<SEntry<T>>,
    /// `M = sup |u|` over the whole grid.
    pub m: T,
    /// `None` when `M = 0` while some step needs the second branch (no finite constant).
    pub c0_min: Option<T>,
    /// Indices `j` at which the quarter-decay branch fails and `C₀` is needed.
    pub binding_steps: Vec<usize>,
}

impl<T: Real> STable<T> {
    /// Checks the two-branch inequality for a given `(C₀, M)`.
    pub fn holds_with(&self, c0: T, m: T) -> bool {
        self.entries.windows(2).all(|w| {
            let bound = (w[0].s / T::lit(4.0)).max(c0 * m * dyadic::<T>(w[0].j).powi(2));
            w[1].s <= bound * (T::one() + T::lit(1e-12))
        })
    }
}

fn dyadic<T: Real>(j: usize) -> T {
    T::lit(0.5).powi(j as i32)
}

pub fn s_table<T: Real>(grid: &GridDomain<T>, field: &ScalarField<T>, z: &[T], j_max: usize) -> Result<STable<T>> {
    check_point(grid, z)?;
    let two_h = T::lit(2.0) * grid.h();
    if dyadic::<T>(j_max) < two_h * (T::one() - T::lit(MEMBERSHIP_SLACK)) {
        return invalid(format!("2^-{j_max} is below the resolved scale 2h = {two_h}"));
    }
    let entries = (0..=j_max)
        .map(|j| {
            let r = dyadic(j);
            Ok(SEntry { j, r, s: sup_ball(grid, field, z, r)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let m = field.values().iter().filter(|v| !v.is_nan()).fold(T::zero(), |a, &v| a.max(v.abs()));

    let mut binding_steps = Vec::new();
    let mut needed = T::zero();
    let mut finite = true;
    for w in entries.windows(2) {
        if w[1].s <= w[0].s / T::lit(4.0) {
            continue;
        }
        binding_steps.push(w[0].j);
        let scale = m * dyadic::<T>(w[0].j).powi(2);
        if scale > T::zero() {
            needed = needed.max(w[1].s / scale);
        } else {
            finite = false;
        }
    }
    Ok(STable { center: z.to_vec(), entries, m, c0_min: finite.then_some(needed), binding_steps })
}

/// `V_r = #{Ω⁻ nodes in B⁺(z, r)} · hⁿ / rⁿ` for each radius.
pub fn density_vr<T: Real>(grid: &GridDomain<T>, phase: &PhaseField, z: &[T], radii: &[T]) -> Result<Vec<(T, T)>> {
    check_point(grid, z)?;
    let hn = grid.h().powi(grid.dim() as i32);
    radii
        .iter()
        .map(|&r| {
            if !(r > T::zero()) {
                return invalid(format!("radius {r} must be positive"));
            }
            let count = ball_nodes(grid, z, r).filter(|&idx| phase.get(idx) == Phase::OmegaMinus).count();
            Ok((r, T::from_count(count) * hn / r.powi(grid.dim() as i32)))
        })
        .collect()
}

/// Dyadic radii `r_max, r_max/2, …` down to `r_min`.
pub fn dyadic_radii<T: Real>(r_min: T, r_max: T) -> Vec<T> {
    let mut out = Vec::new();
    let mut r = r_max;
    while r >= r_min * (T::one() - T::lit(MEMBERSHIP_SLACK)) {
        out.push(r);
        r = r * T::lit(0.5);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthFit<T> {
    /// Least-squares slope of `log S(r)` against `log r`.
    pub alpha: T,
    /// Root-mean-square residual of the fit in log units.
    pub fit_residual: T,
    /// `(r, S(r))` over the dyadic radii, zeros included.
    pub samples: Vec<(T, T)>,
    /// Radii where `S(r) = 0`, excluded from the fit.
    pub zero_radii: Vec<T>,
}

pub fn growth_exponent<T: Real>(
    grid: &GridDomain<T>,
    field: &ScalarField<T>,
    z: &[T],
    r_min: T,
    r_max: T,
) -> Result<GrowthFit<T>> {
    if !(r_min > T::zero() && r_max >= T::lit(8.0) * r_min * (T::one() - T::lit(MEMBERSHIP_SLACK))) {
        return invalid(format!("need 0 < r_min and r_max/r_min ≥ 8, got [{r_min}, {r_max}]"));
    }
    let samples = dyadic_radii(r_min, r_max)
        .into_iter()
        .map(|r| Ok((r, sup_ball(grid, field, z, r)?)))
        .collect::<Result<Vec<_>>>()?;
    let zero_radii: Vec<T> = samples.iter().filter(|(_, s)| *s <= T::zero()).map(|&(r, _)| r).collect();
    let pts: Vec<(T, T)> = samples.iter().filter(|(_, s)| *s > T::zero()).map(|&(r, s)| (r.ln(), s.ln())).collect();
    if pts.len() < 2 {
        return Err(Error::DegenerateData(format!(
            "S(r) vanishes at {} of {} radii; the log-log fit needs two positive samples",
            zero_radii.len(),
            samples.len()
        )));
    }
    let k = T::from_count(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<T>() / k;
    let my = pts.iter().map(|p| p.1).sum::<T>() / k;
    let sxx = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<T>();
    let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<T>();
    let alpha = sxy / sxx;
    let rss = pts.iter().map(|p| (p.1 - my - alpha * (p.0 - mx)).powi(2)).sum::<T>();
    Ok(GrowthFit { alpha, fit_residual: (rss / k).sqrt(), samples, zero_radii })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NondegeneracyReport<T> {
    pub x0: Vec<T>,
    pub u_x0: T,
    /// `(r, [sup_{B⁺(x0,r)} u − u(x0)] / r²)`.
    pub quotients: Vec<(T, T)>,
    pub q_min: T,
    /// Barrier coefficient `1 / (2nΛ)`.
    pub threshold: T,
    /// `q_min ≥ threshold / 2`.
    pub pass: bool,
}

/// Non-degeneracy quotient at `x0`, which must lie in the closure of `{u > eps_u}`: some node
/// within one cell diagonal of `x0` must exceed `eps_u`.
pub fn nondegeneracy_quotient<T: Real>(
    grid: &GridDomain<T>,
    field: &ScalarField<T>,
    x0: &[T],
    radii: &[T],
    spec: &OperatorSpec<T>,
    eps_u: T,
) -> Result<NondegeneracyReport<T>> {
    check_point(grid, x0)?;
    if radii.is_empty() {
        return invalid("no radii supplied");
    }
    let n = grid.dim();
    let reach = grid.h() * T::from_count(n).sqrt();
    if !ball_nodes(grid, x0, reach).any(|idx| field.get(idx) > eps_u) {
        return invalid(format!("x0 = {x0:?} lies inside the coincidence set"));
    }
    let u_x0 = interpolate(grid, field, x0)?;
    let quotients = radii
        .iter()
        .map(|&r| {
            if r + x0.iter().map(|&v| v * v).sum::<T>().sqrt() > grid.radius() * (T::one() + T::lit(MEMBERSHIP_SLACK)) {
                return invalid(format!("ball of radius {r} around {x0:?} leaves the domain"));
            }
            let sup = ball_nodes(grid, x0, r).fold(T::neg_infinity(), |m, idx| m.max(field.get(idx)));
            Ok((r, (sup - u_x0) / (r * r)))
        })
        .collect::<Result<Vec<_>>>()?;
    let q_min = quotients.iter().fold(T::infinity(), |m, &(_, q)| m.min(q));
    let threshold = (T::lit(2.0) * T::from_count(n) * spec.big_lambda()).recip();
    Ok(NondegeneracyReport { x0: x0.to_vec(), u_x0, quotients, q_min, threshold, pass: q_min >= T::lit(0.5) * threshold })
}

/// Midpoints of axis edges joining an `Ω±` node to a `Λ` node, ordered by the lower flat index
/// of the edge and then by axis.
pub fn free_boundary_points<T: Real>(grid: &GridDomain<T>, phase: &PhaseField) -> Vec<Vec<T>> {
    let n = grid.dim();
    let mut out = Vec::new();
    for idx in 0..grid.len() {
        let here = phase.get(idx);
        if here == Phase::Boundary {
            continue;
        }
        for axis in 0..n {
            let Some(nb) = grid.neighbor(idx, axis, 1) else { continue };
            let there = phase.get(nb);
            let crossing = (here.is_omega() && there == Phase::Lambda) || (here == Phase::Lambda && there.is_omega());
            if crossing {
                let (a, b) = (grid.coords(idx), grid.coords(nb));
                out.push(a.iter().zip(&b).map(|(&p, &q)| T::lit(0.5) * (p + q)).collect());
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangencyEntry<T> {
    pub r: T,
    /// `max x₁/|x|` over free-boundary points with `0 < |x| ≤ r`; 0 when there are none.
    pub t: T,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeClearance<T> {
    pub eps: T,
    /// Largest supplied radius `r` such that no free-boundary point lies in `K_ε ∩ B_r`,
    /// with `K_ε = {x₁ > ε |x'|}`.
    pub clear_radius: Option<T>,
    /// Free-boundary points inside the clear ball (outside the cone).
    pub points_in_clear_ball: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangencyProfile<T> {
    pub entries: Vec<TangencyEntry<T>>,
    pub cones: Vec<ConeClearance<T>>,
}

impl<T: Real> TangencyProfile<T> {
    pub fn at(&self, r: T) -> Option<T> {
        self.entries.iter().find(|e| (e.r - r).abs() <= T::lit(1e-12) * r.max(T::one())).map(|e| e.t)
    }
}

/// Tangency profile of free-boundary points relative to the origin. `radii` are sorted
/// internally; the largest ball must contain at least one point.
pub fn tangency_profile<T: Real>(points: &[Vec<T>], radii: &[T], eps_list: &[T]) -> Result<TangencyProfile<T>> {
    if radii.is_empty() || radii.iter().any(|&r| !(r > T::zero())) {
        return invalid("radii must be positive and nonempty");
    }
    let mut sorted = radii.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite radii"));
    let norms: Vec<(T, &Vec<T>)> = points.iter().map(|p| (p.iter().map(|&v| v * v).sum::<T>().sqrt(), p)).collect();
    let inside = |r: T| norms.iter().filter(move |(d, _)| *d > T::zero() && *d <= r * (T::one() + T::lit(MEMBERSHIP_SLACK)));
    let largest = *sorted.last().expect("nonempty");
    if inside(largest).next().is_none() {
        return Err(Error::DegenerateData(format!("no free-boundary point within radius {largest}")));
    }
    let entries = sorted
        .iter()
        .map(|&r| {
            let mut t = T::zero();
            let mut count = 0;
            for (d, p) in inside(r) {
                t = t.max(p[0] / *d);
                count += 1;
            }
            TangencyEntry { r, t, points: count }
        })
        .collect();
    let cones = eps_list
        .iter()
        .map(|&eps| {
            let in_cone = |p: &Vec<T>| p[0] > eps * p[1..].iter().map(|&v| v * v).sum::<T>().sqrt();
            let mut clear_radius = None;
            let mut points_in_clear_ball = 0;
            for &r in &sorted {
                if inside(r).any(|(_, p)| in_cone(p)) {
                    break;
                }
                clear_radius = Some(r);
                points_in_clear_ball = inside(r).count();
            }
            ConeClearance { eps, clear_radius, points_in_clear_ball }
        })
        .collect();
    Ok(TangencyProfile { entries, cones })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupEntry<T> {
    pub r: T,
    /// `sup |u_r − x₁²/(2c)|` on the target grid.
    pub distance: T,
    /// `sup |u_r − u_{r_prev}|` against the previous scale in the list.
    pub cauchy_increment: Option<T>,
}

/// Sup-distances of the rescalings `u_r(x) = u(r x)/r²` to the half-space profile.
pub fn blowup_sequence<T: Real>(
    grid: &GridDomain<T>,
    field: &ScalarField<T>,
    spec: &OperatorSpec<T>,
    r_list: &[T],
    target: &GridDomain<T>,
) -> Result<Vec<BlowupEntry<T>>> {
    if r_list.is_empty() {
        return invalid("no blow-up scales supplied");
    }
    if r_list.windows(2).any(|w| !(w[1] < w[0])) {
        return invalid("blow-up scales must be strictly decreasing");
    }
    let r_min = *r_list.last().expect("nonempty");
    if r_min * target.radius() < T::lit(4.0) * grid.h() * (T::one() - T::lit(MEMBERSHIP_SLACK)) {
        return invalid(format!("smallest scale {r_min} resolves fewer than 4 source cells"));
    }
    let oracle = halfspace_oracle(spec, grid.dim())?;
    let reference = ScalarField::from_fn(target, |x| oracle.eval(x));
    let mut out: Vec<BlowupEntry<T>> = Vec::with_capacity(r_list.len());
    let mut previous: Option<ScalarField<T>> = None;
    for &r in r_list {
        let scaled = restrict_and_rescale(field, grid, r, target)?;
        let distance = scaled.sup_distance(&reference);
        let cauchy_increment = previous.as_ref().map(|p| scaled.sup_distance(p));
        out.push(BlowupEntry { r, distance, cauchy_increment });
        previous = Some(scaled);
    }
    Ok(out)
}

/// Grid evidence that the origin is a contact point of the free boundary with `Π`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContactReport<T> {
    pub is_contact: bool,
    /// Coincidence nodes in the first layer off `Π` within `r_max / 2`.
    pub lambda_near_pi: usize,
    /// Positive-phase nodes within `r_max / 2`.
    pub omega_nearby: usize,
    /// `u(h e₁)`.
    pub probe_value: T,
    /// `h² / (2 F(e₁e₁ᵀ))`, the half-space value at `h e₁`.
    pub halfspace_value: T,
}

/// The origin counts as a contact point when the coincidence set reaches the first layer off
/// `Π` near the origin, the positive phase is present nearby, and `u(h e₁)` matches the
/// half-space value within a factor in `[1/2, 3/2]`. A zero value means the origin is covered
/// by the coincidence set; a linear profile exceeds the bound at fine `h`.
pub fn detect_contact<T: Real>(
    grid: &GridDomain<T>,
    field: &ScalarField<T>,
    phase: &PhaseField,
    spec: &OperatorSpec<T>,
    r_max: T,
) -> Result<ContactReport<T>> {
    let n = grid.dim();
    let origin = vec![T::zero(); n];
    let h = grid.h();
    let mut lambda_near_pi = 0;
    let mut omega_nearby = 0;
    for idx in ball_nodes(grid, &origin, T::lit(0.5) * r_max) {
        let p = phase.get(idx);
        if p.is_omega() {
            omega_nearby += 1;
        }
        if p == Phase::Lambda && grid.multi_index(idx)[0] == 1 {
            lambda_near_pi += 1;
        }
    }
    let probe = grid
        .index_of([1, 0, 0])
        .filter(|&i| grid.role(i) == NodeRole::Interior)
        .ok_or_else(|| Error::InvalidArgument("grid has no interior node at h·e1".into()))?;
    let probe_value = field.get(probe);
    let halfspace_value = h * h / (T::lit(2.0) * spec.halfspace_coefficient(n)?);
    let matched = (probe_value - halfspace_value).abs() <= T::lit(0.5) * halfspace_value;
    Ok(ContactReport {
        is_contact: lambda_near_pi > 0 && omega_nearby > 0 && matched,
        lambda_near_pi,
        omega_nearby,
        probe_value,
        halfspace_value,
    })
}

/// Which diagnostics to compute and at which scales. Radii are in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRequest<T> {
    pub center: Vec<T>,
    /// Deepest dyadic level; `None` picks the largest `j` with `2^{-j} ≥ 2h`.
    pub j_max: Option<usize>,
    pub density_radii: Vec<T>,
    pub growth_r_min: T,
    pub growth_r_max: T,
    pub nondeg_samples: usize,
    pub nondeg_seed: u64,
    pub eps_u: T,
    pub tangency_radii: Vec<T>,
    pub cone_eps: Vec<T>,
    pub blowup_scales: Vec<T>,
    /// Spacing of the radius-one target grid for the blow-up rescalings.
    pub blowup_target_h: T,
}

impl<T: Real> DiagnosticsRequest<T> {
    /// Scales used by the experiments on a half-ball of radius 1 with spacing `h`. The growth
    /// fit runs over `[min(4h, R/32), R/4]` so that the radius ratio is at least 8.
    pub fn standard(grid: &GridDomain<T>, eps_u: T) -> Self {
        let h = grid.h();
        let quarter = T::lit(0.25) * grid.radius();
        let mut tangency_radii = dyadic_radii(T::lit(4.0) * h, quarter);
        tangency_radii.extend([T::lit(0.1), T::lit(0.4)].map(|r| r * grid.radius()));
        tangency_radii.sort_by(|a, b| a.partial_cmp(b).expect("finite radii"));
        tangency_radii.dedup_by(|a, b| (*a - *b).abs() <= T::lit(1e-12));
        Self {
            center: vec![T::zero(); grid.dim()],
            j_max: None,
            density_radii: dyadic_radii(T::lit(4.0) * h, T::lit(0.5) * grid.radius()),
            growth_r_min: (T::lit(4.0) * h).min(quarter / T::lit(8.0)),
            growth_r_max: quarter,
            nondeg_samples: 20,
            nondeg_seed: 0x5eed,
            eps_u,
            tangency_radii,
            cone_eps: vec![T::one()],
            blowup_scales: [0.5, 0.25, 0.125, 0.0625].map(T::lit).to_vec(),
            blowup_target_h: h,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NondegeneracySummary<T> {
    pub threshold: T,
    pub q_min: T,
    pub pass: bool,
    pub samples: Vec<NondegeneracyReport<T>>,
}

/// Everything [`run_diagnostics`] measures. Field order is the serialized key order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport<T> {
    pub center: Vec<T>,
    pub s_table: STable<T>,
    pub v_table: Vec<(T, T)>,
    pub max_density: T,
    pub growth_exponent: Option<GrowthFit<T>>,
    pub growth_error: Option<String>,
    pub nondeg_quotient: Option<NondegeneracySummary<T>>,
    pub contact: Option<ContactReport<T>>,
    pub free_boundary_point_count: usize,
    pub tangency_profile: Option<TangencyProfile<T>>,
    pub tangency_error: Option<String>,
    pub blowup_metrics: Vec<BlowupEntry<T>>,
    pub blowup_error: Option<String>,
}

/// Nodes in the closure of the positive phase whose balls of radius `4h` stay in the domain.
fn nondeg_candidates<T: Real>(grid: &GridDomain<T>, phase: &PhaseField, margin: T) -> Vec<usize> {
    let n = grid.dim();
    grid.interior_nodes()
        .iter()
        .copied()
        .filter(|&idx| {
            let p = phase.get(idx);
            let closure = p == Phase::OmegaPlus
                || (p == Phase::Lambda
                    && (0..n).any(|k| {
                        [-1, 1].iter().any(|&s| {
                            grid.neighbor(idx, k, s).is_some_and(|nb| phase.get(nb) == Phase::OmegaPlus)
                        })
                    }));
            let norm = grid.coords(idx).iter().map(|&v| v * v).sum::<T>().sqrt();
            closure && norm + margin <= grid.radius()
        })
        .collect()
}

pub fn run_diagnostics<T: Real>(
    spec: &OperatorSpec<T>,
    grid: &GridDomain<T>,
    field: &ScalarField<T>,
    phase: &PhaseField,
    req: &DiagnosticsRequest<T>,
) -> Result<DiagnosticsReport<T>> {
    use rand::seq::index::sample;
    use rand::SeedableRng;

    let h = grid.h();
    let j_max = match req.j_max {
        Some(j) => j,
        None => {
            let mut j = 0;
            while dyadic::<T>(j + 1) >= T::lit(2.0) * h * (T::one() - T::lit(MEMBERSHIP_SLACK)) {
                j += 1;
            }
            j
        }
    };
    let s_table = s_table(grid, field, &req.center, j_max)?;
    let v_table = density_vr(grid, phase, &req.center, &req.density_radii)?;
    let max_density = v_table.iter().fold(T::zero(), |m, &(_, v)| m.max(v));

    let (growth_exponent, growth_error) =
        match growth_exponent(grid, field, &req.center, req.growth_r_min, req.growth_r_max) {
            Ok(fit) => (Some(fit), None),
            Err(e @ Error::DegenerateData(_)) => (None, Some(e.to_string())),
            Err(e) => return Err(e),
        };

    let margin = T::lit(4.0) * h;
    let candidates = nondeg_candidates(grid, phase, margin);
    let nondeg_quotient = if candidates.is_empty() || req.nondeg_samples == 0 {
        None
    } else {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(req.nondeg_seed);
        let mut picks = sample(&mut rng, candidates.len(), req.nondeg_samples.min(candidates.len())).into_vec();
        picks.sort_unstable();
        let samples = picks
            .into_iter()
            .map(|i| {
                let x0 = grid.coords(candidates[i]);
                let room = grid.radius() - x0.iter().map(|&v| v * v).sum::<T>().sqrt();
                let radii = dyadic_radii(margin, room.min(T::lit(0.25) * grid.radius()))
                    .into_iter()
                    .filter(|&r| r >= margin * (T::one() - T::lit(MEMBERSHIP_SLACK)))
                    .collect::<Vec<_>>();
                let radii = if radii.is_empty() { vec![margin] } else { radii };
                nondegeneracy_quotient(grid, field, &x0, &radii, spec, req.eps_u)
            })
            .collect::<Result<Vec<_>>>()?;
        let threshold = samples[0].threshold;
        let q_min = samples.iter().fold(T::infinity(), |m, s| m.min(s.q_min));
        let pass = samples.iter().all(|s| s.pass);
        Some(NondegeneracySummary { threshold, q_min, pass, samples })
    };

    let origin_center = req.center.iter().all(|v| *v == T::zero());
    let r_max = req.tangency_radii.iter().fold(T::zero(), |m, &r| m.max(r));
    let contact = if origin_center && r_max > T::zero() {
        Some(detect_contact(grid, field, phase, spec, r_max)?)
    } else {
        None
    };
    let fb = free_boundary_points(grid, phase);
    let (tangency_profile, tangency_error) = match tangency_profile(&fb, &req.tangency_radii, &req.cone_eps) {
        Ok(t) => (Some(t), None),
        Err(e @ (Error::DegenerateData(_) | Error::InvalidArgument(_))) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };

    let (blowup_metrics, blowup_error) = if req.blowup_scales.is_empty() {
        (Vec::new(), None)
    } else {
        let target = GridDomain::new(
            grid.dim(),
            req.blowup_target_h,
            crate::grid::Shape::HalfBall { radius: T::one() },
            grid.frame_set(),
        )?;
        match blowup_sequence(grid, field, spec, &req.blowup_scales, &target) {
            Ok(m) => (m, None),
            Err(e @ (Error::InvalidArgument(_) | Error::DomainViolation(_))) => (Vec::new(), Some(e.to_string())),
            Err(e) => return Err(e),
        }
    };

    Ok(DiagnosticsReport {
        center: req.center.clone(),
        s_table,
        v_table,
        max_density,
        growth_exponent,
        growth_error,
        nondeg_quotient,
        contact,
        free_boundary_point_count: fb.len(),
        tangency_profile,
        tangency_error,
        blowup_metrics,
        blowup_error,
    })
}
