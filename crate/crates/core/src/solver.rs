//! Discrete solutions of `F(D²u) = χ_Ω` on the half-ball with `u = 0` on `Π`.
//!
//! * [`solve_positive`]: the nonnegative regime as a discrete complementarity problem
//!   `min(u, 1 − F_h(u)) = 0`, solved by Howard policy iteration. Each frozen-policy
//!   obstacle problem is solved either exactly (active sets plus sparse LU, the default)
//!   or by projected relaxation sweeps.
//! * [`solve_two_phase`]: experimental active-set iteration for the no-sign problem,
//!   alternating `F_h(u) = χ_{Ω^m}` solves with relabeling of the coincidence set.

use serde::Serialize;

use crate::boundary::{boundary_preset_eval, BoundaryPreset};
use crate::error::{invalid, Result};
use crate::frozen::FrozenSystem;
use crate::grid::{classify_phase, gradient_norm, GridDomain, NodeRole, PhaseField, ScalarField};
use crate::rescale::interpolate;
use crate::operator::{OperatorKind, OperatorSpec};
use crate::scalar::Real;
use crate::scheme::DiscreteOperator;

/// How each frozen-policy problem is solved inside the policy iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerSolver {
    /// Primal-dual active sets with a sparse LU per step; `sweeps_used` counts LU solves.
    #[default]
    ActiveSet,
    /// Projected Gauss–Seidel/SOR sweeps in colored order; `sweeps_used` counts sweeps.
    Sweeps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig<T> {
    pub tol_residual: T,
    pub max_sweeps: usize,
    pub policy_max_iters: usize,
    /// Phase-update damping for the two-phase iteration, in `(0, 1]`.
    pub damping: T,
    pub phase_max_iters: usize,
    /// Coincidence threshold on `|u|`; `None` means `eps_u_factor · h²`.
    pub eps_u: Option<T>,
    /// Coincidence threshold on `|∇_h u|`; `None` means `10 h`.
    pub eps_g: Option<T>,
    pub inner: InnerSolver,
    /// Seed active-set solves with the solution on the grid of spacing `2h` (applied
    /// recursively while `R/(2h) ≥ 16`) instead of the Laplacian warm start.
    pub coarse_start: bool,
    /// Over-relaxation factor in `(0, 2)` for sweeps; `None` picks `2 / (1 + 2.7 h / R)` for
    /// the Laplacian and 1 otherwise (mixed-frame policies give nonsymmetric matrices, for which
    /// over-relaxation can diverge).
    pub relaxation: Option<T>,
    pub warm_start_sweeps: usize,
    pub boundary: BoundaryPreset<T>,
}

/// Default `eps_u = EPS_U_FACTOR · h²`.
pub const EPS_U_FACTOR: f64 = 1e-2;
/// Default `eps_g = EPS_G_FACTOR · h`.
pub const EPS_G_FACTOR: f64 = 10.0;

impl<T: Real> SolveConfig<T> {
    pub fn new(boundary: BoundaryPreset<T>) -> Self {
        Self {
            tol_residual: T::lit(1e-10),
            max_sweeps: 200_000,
            policy_max_iters: 100,
            damping: T::lit(0.5),
            phase_max_iters: 50,
            eps_u: None,
            eps_g: None,
            inner: InnerSolver::ActiveSet,
            coarse_start: true,
            relaxation: None,
            warm_start_sweeps: 100,
            boundary,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual > T::zero()) {
            return invalid(format!("tol_residual={} must be positive", self.tol_residual));
        }
        if !(self.damping > T::zero() && self.damping <= T::one()) {
            return invalid(format!("damping={} must lie in (0, 1]", self.damping));
        }
        if let Some(w) = self.relaxation {
            if !(w > T::zero() && w < T::lit(2.0)) {
                return invalid(format!("relaxation={w} must lie in (0, 2)"));
            }
        }
        if self.max_sweeps == 0 || self.policy_max_iters == 0 {
            return invalid("sweep and policy budgets must be positive");
        }
        Ok(())
    }

    pub fn eps_u_for(&self, h: T) -> T {
        self.eps_u.unwrap_or(T::lit(EPS_U_FACTOR) * h * h)
    }

    pub fn eps_g_for(&self, h: T) -> T {
        self.eps_g.unwrap_or(T::lit(EPS_G_FACTOR) * h)
    }

    fn relaxation_for(&self, spec: &OperatorSpec<T>, grid: &GridDomain<T>) -> T {
        self.relaxation.unwrap_or_else(|| match spec.kind() {
            OperatorKind::Laplacian => T::lit(2.0) / (T::one() + T::lit(2.7) * grid.h() / grid.radius()),
            _ => T::one(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    Positive,
    TwoPhase,
}

#[derive(Debug, Clone)]
pub struct SolveResult<T> {
    pub mode: SolveMode,
    pub field: ScalarField<T>,
    pub phase: PhaseField,
    /// Complementarity residual (positive mode) or PDE residual `|χ_Ω − F_h(u)|` (two-phase).
    pub residual: T,
    /// Relaxation sweeps or sparse LU solves, depending on [`InnerSolver`].
    pub sweeps_used: usize,
    pub policy_iters: usize,
    pub converged: bool,
    /// Nonlinear residual after each policy iteration.
    pub residual_history: Vec<T>,
    /// Outer relabeling iterations (two-phase mode only).
    pub phase_iters: usize,
    /// Phase set preceding the final one when the two-phase iteration did not settle.
    pub previous_phase: Option<PhaseField>,
}

/// Mutable solve state shared by both modes.
struct Workspace<'a, T> {
    grid: &'a GridDomain<T>,
    op: DiscreteOperator<T>,
    values: Vec<T>,
    policy: Vec<usize>,
    // Interior nodes in colored order: nodes sharing (i₁ mod 2, …, i_n mod 2).
    order: Vec<usize>,
    omega: T,
    sweeps: usize,
    inner: InnerSolver,
    frozen: Option<FrozenSystem>,
    // Nodes held at zero in unprojected solves (the current coincidence set, two-phase mode).
    pinned: Option<Vec<bool>>,
}

impl<'a, T: Real> Workspace<'a, T> {
    fn new(spec: &OperatorSpec<T>, grid: &'a GridDomain<T>, cfg: &SolveConfig<T>) -> Result<Self> {
        let op = DiscreteOperator::new(spec, grid)?;
        let mut values = vec![T::nan(); grid.len()];
        for (idx, v) in values.iter_mut().enumerate() {
            match grid.role(idx) {
                NodeRole::Exterior => {}
                NodeRole::Interior => *v = T::zero(),
                _ => *v = boundary_preset_eval(&cfg.boundary, grid, idx)?,
            }
        }
        let colors = 1usize << grid.dim();
        let mut order = Vec::with_capacity(grid.interior_nodes().len());
        for color in 0..colors {
            order.extend(grid.interior_nodes().iter().copied().filter(|&idx| {
                let i = grid.multi_index(idx);
                (0..grid.dim()).map(|k| ((i[k].rem_euclid(2)) as usize) << k).sum::<usize>() == color
            }));
        }
        Ok(Self {
            grid,
            op,
            values,
            policy: vec![0; grid.len()],
            order,
            omega: cfg.relaxation_for(spec, grid),
            sweeps: 0,
            inner: cfg.inner,
            frozen: None,
            pinned: None,
        })
    }

    /// Unconstrained Laplacian smoothing of the boundary data.
    fn warm_start(&mut self, sweeps: usize, clip: bool) {
        let n = self.grid.dim();
        let axis: Vec<isize> = (0..n).map(|k| self.grid.dir_offset(k)).collect();
        for _ in 0..sweeps {
            for &idx in &self.order {
                let mut s = T::zero();
                for &off in &axis {
                    s = s + self.values[(idx as isize + off) as usize] + self.values[(idx as isize - off) as usize];
                }
                self.values[idx] = s / T::from_count(2 * n);
            }
        }
        if clip {
            for &idx in &self.order {
                self.values[idx] = self.values[idx].max(T::zero());
            }
        }
    }

    /// One relaxation sweep with the frozen policy; returns the max pre-update residual.
    fn sweep(&mut self, rhs: &[T], project: bool) -> T {
        let mut worst = T::zero();
        let omega = self.omega;
        for &idx in &self.order {
            if self.is_pinned(idx) {
                self.values[idx] = T::zero();
                continue;
            }
            let (s, d) = self.op.linear_parts(&self.values, idx, self.policy[idx]);
            let u = self.values[idx];
            let eq = rhs[idx] - (s - d * u);
            let res = if project { u.min(eq).abs() } else { eq.abs() };
            worst = worst.max(res);
            let target = (s - rhs[idx]) / d;
            let mut next = u + omega * (target - u);
            if project {
                next = next.max(T::zero());
            }
            self.values[idx] = next;
        }
        self.sweeps += 1;
        worst
    }

    /// Relaxes the frozen-policy problem until its residual drops below `tol` or stalls.
    fn relax(&mut self, rhs: &[T], project: bool, tol: T, budget: usize) -> bool {
        let mut best = T::infinity();
        let mut since_best = 0usize;
        while self.sweeps < budget {
            let res = self.sweep(rhs, project);
            if res <= tol {
                return true;
            }
            if res < best * T::lit(0.999) {
                best = res;
                since_best = 0;
            } else {
                since_best += 1;
                // Rounding floor: the residual no longer decreases.
                if since_best > 200 {
                    return false;
                }
            }
        }
        false
    }

    /// Re-selects the optimal variant at every node; returns the number of changes.
    fn update_policy(&mut self) -> usize {
        let mut changed = 0;
        for &idx in &self.order {
            let (k, _) = self.op.best_variant(&self.values, idx, self.policy[idx]);
            if k != self.policy[idx] {
                self.policy[idx] = k;
                changed += 1;
            }
        }
        changed
    }

    fn is_pinned(&self, idx: usize) -> bool {
        self.pinned.as_ref().is_some_and(|p| p[idx])
    }

    fn residual(&self, rhs: &[T], project: bool) -> T {
        self.order.iter().filter(|&&idx| !self.is_pinned(idx)).fold(T::zero(), |m, &idx| {
            let eq = rhs[idx] - self.op.apply(&self.values, idx);
            let r = if project { self.values[idx].min(eq).abs() } else { eq.abs() };
            m.max(r)
        })
    }

    /// Solves the current frozen-policy problem.
    fn frozen_solve(&mut self, rhs: &[T], project: bool, cfg: &SolveConfig<T>) -> Result<()> {
        match self.inner {
            InnerSolver::Sweeps => {
                self.relax(rhs, project, cfg.tol_residual * T::lit(0.25), cfg.max_sweeps);
            }
            InnerSolver::ActiveSet => {
                if self.frozen.is_none() {
                    self.frozen = Some(FrozenSystem::new(self.grid, &self.op)?);
                }
                let sys = self.frozen.as_ref().expect("frozen system built above");
                let budget = cfg.max_sweeps.saturating_sub(self.sweeps).max(1);
                let pinned = self.pinned.as_deref();
                self.sweeps +=
                    sys.solve(self.grid, &self.op, &self.policy, rhs, &mut self.values, project, pinned, budget)?;
            }
        }
        Ok(())
    }

    /// Howard iteration: returns (residual, policy iterations, residual history).
    fn policy_iterate(&mut self, rhs: &[T], project: bool, cfg: &SolveConfig<T>) -> Result<(T, usize, Vec<T>)> {
        let tol = cfg.tol_residual;
        let mut history = Vec::new();
        self.update_policy();
        let mut residual = self.residual(rhs, project);
        let mut iters = 0;
        while iters < cfg.policy_max_iters && self.sweeps < cfg.max_sweeps {
            iters += 1;
            self.frozen_solve(rhs, project, cfg)?;
            let changed = self.update_policy();
            residual = self.residual(rhs, project);
            history.push(residual);
            if residual <= tol || (changed == 0 && self.sweeps >= cfg.max_sweeps) {
                break;
            }
            if changed == 0 {
                if self.inner == InnerSolver::ActiveSet {
                    // Exact solve with a stable policy: the residual is at its rounding floor.
                    break;
                }
                // Policy is stable but the frozen solve stalled above tolerance.
                let stalled = !self.relax(rhs, project, tol * T::lit(0.25), cfg.max_sweeps);
                residual = self.residual(rhs, project);
                history.push(residual);
                if stalled || residual <= tol {
                    break;
                }
            }
        }
        Ok((residual, iters, history))
    }
}

/// Nonnegative solution of the discrete obstacle problem `min(u, 1 − F_h(u)) = 0`.
pub fn solve_positive<T: Real>(
    spec: &OperatorSpec<T>,
    grid: &GridDomain<T>,
    cfg: &SolveConfig<T>,
) -> Result<SolveResult<T>> {
    solve_positive_seeded(spec, grid, cfg, None)
}

/// Smallest `R/h` at which a coarse-grid seed is still computed.
const COARSE_START_MIN_RESOLUTION: f64 = 16.0;

/// Interior values interpolated from the solution on the `2h` grid, plus its LU solve count.
fn coarse_seed<T: Real>(
    spec: &OperatorSpec<T>,
    grid: &GridDomain<T>,
    cfg: &SolveConfig<T>,
) -> Result<Option<(Vec<T>, usize)>> {
    if !cfg.coarse_start || cfg.inner != InnerSolver::ActiveSet {
        return Ok(None);
    }
    let h2 = grid.h() * T::lit(2.0);
    if (grid.radius() / h2).to_f64_lossy() < COARSE_START_MIN_RESOLUTION {
        return Ok(None);
    }
    let Ok(coarse) = GridDomain::new(grid.dim(), h2, grid.shape(), grid.frame_set()) else {
        return Ok(None);
    };
    let coarse_result = solve_positive(spec, &coarse, cfg)?;
    let mut seed = vec![T::zero(); grid.len()];
    for &idx in grid.interior_nodes() {
        let v = interpolate(&coarse, &coarse_result.field, &grid.coords(idx)).unwrap_or(T::zero());
        seed[idx] = v.max(T::zero());
    }
    Ok(Some((seed, coarse_result.sweeps_used)))
}

pub fn solve_positive_seeded<T: Real>(
    spec: &OperatorSpec<T>,
    grid: &GridDomain<T>,
    cfg: &SolveConfig<T>,
    seed: Option<&[T]>,
) -> Result<SolveResult<T>> {
    cfg.validate()?;
    let mut ws = Workspace::new(spec, grid, cfg)?;
    if let Some(idx) = (0..grid.len()).find(|&i| ws.values[i] < T::zero()) {
        return invalid(format!("boundary data is negative at node {idx}; the positive solver needs g ≥ 0"));
    }
    let coarse = if seed.is_none() { coarse_seed(spec, grid, cfg)? } else { None };
    match seed.or(coarse.as_ref().map(|(v, _)| v.as_slice())) {
        Some(values) => {
            for &idx in grid.interior_nodes() {
                ws.values[idx] = values[idx].max(T::zero());
            }
        }
        None => ws.warm_start(cfg.warm_start_sweeps, true),
    }
    let rhs = vec![T::one(); grid.len()];
    let (residual, policy_iters, residual_history) = ws.policy_iterate(&rhs, true, cfg)?;
    let field = ScalarField::from_values(grid, ws.values)?;
    let phase = classify_phase(grid, &field, cfg.eps_u_for(grid.h()), cfg.eps_g_for(grid.h()));
    Ok(SolveResult {
        mode: SolveMode::Positive,
        field,
        phase,
        residual,
        sweeps_used: ws.sweeps + coarse.map_or(0, |(_, n)| n),
        policy_iters,
        converged: residual <= cfg.tol_residual,
        residual_history,
        phase_iters: 0,
        previous_phase: None,
    })
}

/// Experimental active-set iteration for the no-sign problem.
///
/// Starts from `Ω⁰ = all interior nodes` and solves `F_h(u) = 1` on `Ω^m` with `u = 0` held on
/// `Λ^m`; the residual is measured on `Ω^m`. An `Ω^m` node is proposed for `Λ^{m+1}` when
/// `u ≤ eps_u`, `|∇_h u| ≤ eps_g` and pinning it to zero would leave `F_h(u) ≤ 1` there, so
/// shallow negative pockets are absorbed while steep negative phases persist. A `Λ^m` node is
/// proposed to stay while `F_h(u) ≤ 1`, the sign condition on the obstacle multiplier. A node flips only once its proposal has
/// accumulated weight `damping·(2 − damping)` under the update `w ← (1−d)w + d`, i.e.
/// after two consecutive proposals for `d < 1` and immediately for `d = 1`.
pub fn solve_two_phase<T: Real>(
    spec: &OperatorSpec<T>,
    grid: &GridDomain<T>,
    cfg: &SolveConfig<T>,
) -> Result<SolveResult<T>> {
    cfg.validate()?;
    let mut ws = Workspace::new(spec, grid, cfg)?;
    ws.warm_start(cfg.warm_start_sweeps, false);
    let (eps_u, eps_g) = (cfg.eps_u_for(grid.h()), cfg.eps_g_for(grid.h()));
    let d = cfg.damping;
    let threshold = d * (T::lit(2.0) - d) - T::lit(1e-12);

    let mut in_lambda = vec![false; grid.len()];
    let mut weight = vec![T::zero(); grid.len()];
    let mut rhs = vec![T::one(); grid.len()];
    let mut previous: Option<Vec<bool>> = None;
    let mut total_policy = 0;
    let mut history = Vec::new();
    let mut residual = T::infinity();
    let mut settled = false;
    let mut phase_iters = 0;

    while phase_iters < cfg.phase_max_iters && ws.sweeps < cfg.max_sweeps {
        phase_iters += 1;
        let (res, iters, hist) = ws.policy_iterate(&rhs, false, cfg)?;
        residual = res;
        total_policy += iters;
        history.extend(hist);

        let field = ScalarField::from_values(grid, ws.values.clone())?;
        let mut flips = 0;
        let mut pending = 0;
        let snapshot = in_lambda.clone();
        for &idx in grid.interior_nodes() {
            let proposal = if in_lambda[idx] {
                ws.op.apply(&ws.values, idx) <= T::one()
            } else {
                field.get(idx) <= eps_u && gradient_norm(grid, &field, idx) <= eps_g && {
                    // Only propose pinning when the pinned node would keep F_h(u) ≤ 1.
                    let u = std::mem::replace(&mut ws.values[idx], T::zero());
                    let admissible = ws.op.apply(&ws.values, idx) <= T::one();
                    ws.values[idx] = u;
                    admissible
                }
            };
            if proposal == in_lambda[idx] {
                weight[idx] = T::zero();
                continue;
            }
            weight[idx] = (T::one() - d) * weight[idx] + d;
            if weight[idx] >= threshold {
                in_lambda[idx] = proposal;
                weight[idx] = T::zero();
                flips += 1;
            } else {
                pending += 1;
            }
        }
        if flips == 0 && pending == 0 {
            settled = true;
            break;
        }
        previous = Some(snapshot);
        for &idx in grid.interior_nodes() {
            rhs[idx] = if in_lambda[idx] { T::zero() } else { T::one() };
            if in_lambda[idx] {
                ws.values[idx] = T::zero();
            }
        }
        ws.pinned = Some(in_lambda.clone());
    }

    let field = ScalarField::from_values(grid, ws.values)?;
    let phase = two_phase_labels(grid, &field, &in_lambda);
    let converged = settled && residual <= cfg.tol_residual;
    let previous_phase = if settled { None } else { previous.map(|p| two_phase_labels(grid, &field, &p)) };
    Ok(SolveResult {
        mode: SolveMode::TwoPhase,
        field,
        phase,
        residual,
        sweeps_used: ws.sweeps,
        policy_iters: total_policy,
        converged,
        residual_history: history,
        phase_iters,
        previous_phase,
    })
}

fn two_phase_labels<T: Real>(grid: &GridDomain<T>, field: &ScalarField<T>, in_lambda: &[bool]) -> PhaseField {
    use crate::grid::Phase;
    let mut labels = vec![Phase::Boundary; grid.len()];
    for &idx in grid.interior_nodes() {
        labels[idx] = if in_lambda[idx] {
            Phase::Lambda
        } else if field.get(idx) > T::zero() {
            Phase::OmegaPlus
        } else {
            Phase::OmegaMinus
        };
    }
    PhaseField::from_labels(labels)
}

/// `max |min(u, 1 − F_h(u))|` over interior nodes.
pub fn complementarity_residual<T: Real>(
    spec: &OperatorSpec<T>,
    grid: &GridDomain<T>,
    field: &ScalarField<T>,
) -> Result<T> {
    let op = DiscreteOperator::new(spec, grid)?;
    Ok(grid.interior_nodes().iter().fold(T::zero(), |m, &idx| {
        let eq = T::one() - op.apply(field.values(), idx);
        m.max(field.get(idx).min(eq).abs())
    }))
}

/// Relative tolerance on the probe value when calibrating the contact amplitude.
pub const CALIBRATION_RTOL: f64 = 1e-6;
const CALIBRATION_MAX_STEPS: usize = 60;

/// Outcome of [`calibrate_contact_amplitude`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContactCalibration<T> {
    pub amplitude: T,
    /// `u(h e₁)` at the calibrated amplitude.
    pub probe_value: T,
    /// `h² / (2 F(e₁e₁ᵀ))`, the half-space value the probe is matched to.
    pub target: T,
    pub solves: usize,
}

fn coarse_calibration<T: Real>(
    spec: &OperatorSpec<T>,
    grid: &GridDomain<T>,
    cfg: &SolveConfig<T>,
    width: T,
) -> Result<Option<T>> {
    let h2 = grid.h() * T::lit(2.0);
    if (grid.radius() / h2).to_f64_lossy() < COARSE_START_MIN_RESOLUTION {
        return Ok(None);
    }
    let Ok(coarse) = GridDomain::new(grid.dim(), h2, grid.shape(), grid.frame_set()) else {
        return Ok(None);
    };
    Ok(Some(calibrate_contact_amplitude(spec, &coarse, cfg, width)?.amplitude))
}

/// Finds the critical amplitude of the contact preset: the positive phase touches `Π`
/// exactly at the origin, detected by the vanishing discrete normal derivative
/// `u(h e₁) = h² / (2 F(e₁e₁ᵀ))`.
///
/// Below the critical amplitude the origin sits inside the coincidence set; above it the
/// positive phase meets `Π` along a segment. `u(h e₁)` is nondecreasing in the amplitude by
/// discrete comparison, so a sign change brackets a unique root.
pub fn calibrate_contact_amplitude<T: Real>(
    spec: &OperatorSpec<T>,
    grid: &GridDomain<T>,
    cfg: &SolveConfig<T>,
    width: T,
) -> Result<ContactCalibration<T>> {
    let probe = grid
        .index_of([1, 0, 0])
        .filter(|&i| grid.role(i) == NodeRole::Interior)
        .ok_or_else(|| crate::Error::InvalidArgument("grid has no interior node at h·e1".into()))?;
    let coefficient = spec.halfspace_coefficient(grid.dim())?;
    let h = grid.h();
    let target = h * h / (T::lit(2.0) * coefficient);
    let mut solves = 0;
    let mut previous: Option<Vec<T>> = None;
    // Each solve is seeded with the previous one; the discrete solution is unique, so the seed
    // only changes the iteration count.
    let mut eval = |c: T| -> Result<T> {
        let mut local = cfg.clone();
        local.boundary = BoundaryPreset::contact(c, width)?;
        solves += 1;
        let result = solve_positive_seeded(spec, grid, &local, previous.as_deref())?;
        let value = result.field.get(probe);
        previous = Some(result.field.into_values());
        Ok(value)
    };

    // Start from the amplitude calibrated on the 2h grid when there is one, else from c = 1,
    // and bracket the root by geometric steps.
    let (c0, factor) = match coarse_calibration(spec, grid, cfg, width)? {
        Some(c) => (c, T::lit(1.05)),
        None => (T::one(), T::lit(2.0)),
    };
    let (mut lo, mut hi) = (c0, c0);
    let (mut g_lo, mut g_hi);
    let g1 = eval(c0)? - target;
    let step = if g1 < T::zero() { factor } else { factor.recip() };
    let mut g_prev = g1;
    let mut bracketed = false;
    (g_lo, g_hi) = (g1, g1);
    for _ in 0..40 {
        let c = if g1 < T::zero() { hi * step } else { lo * step };
        let g = eval(c)? - target;
        if g1 < T::zero() {
            (lo, g_lo) = (hi, g_prev);
            (hi, g_hi) = (c, g);
            bracketed = g >= T::zero();
        } else {
            (hi, g_hi) = (lo, g_prev);
            (lo, g_lo) = (c, g);
            bracketed = g < T::zero();
        }
        if bracketed {
            break;
        }
        g_prev = g;
    }
    if !bracketed {
        return Err(crate::Error::DegenerateData("contact amplitude bracket not found".into()));
    }
    // Illinois regula falsi on g(c) = u(h e₁) − target over the bracket [lo, hi].
    let tol = target * T::lit(CALIBRATION_RTOL);
    let mut last_side = 0i8;
    let (mut best, mut best_g) = if g_hi.abs() < g_lo.abs() { (hi, g_hi) } else { (lo, g_lo) };
    for _ in 0..CALIBRATION_MAX_STEPS {
        if best_g.abs() <= tol || hi - lo <= T::lit(1e-12) * hi {
            break;
        }
        let mut c = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
        if !(c > lo && c < hi) {
            c = T::lit(0.5) * (lo + hi);
        }
        let g = eval(c)? - target;
        if g.abs() < best_g.abs() {
            best = c;
            best_g = g;
        }
        if g >= T::zero() {
            hi = c;
            g_hi = g;
            if last_side == 1 {
                g_lo = g_lo * T::lit(0.5);
            }
            last_side = 1;
        } else {
            lo = c;
            g_lo = g;
            if last_side == -1 {
                g_hi = g_hi * T::lit(0.5);
            }
            last_side = -1;
        }
    }
    let (hi, probe_value) = (best, best_g + target);
    Ok(ContactCalibration { amplitude: hi, probe_value, target, solves })
}
