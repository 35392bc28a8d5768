//! Uniform Cartesian grids over the half-ball `B⁺ = {|x| < R, x₁ > 0}` (or a half-box),
//! node classification, node-indexed fields and phase labels.
//!
//! The lattice is `x = h·i` with `i₁ ∈ 0..=N₁` and `|i_k| ≤ N_k` for `k ≥ 2`, so the flat
//! boundary `Π = {x₁ = 0}` is the grid plane `i₁ = 0`. Flat indices are row-major with
//! `i₁` slowest.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

pub const MIN_RESOLUTION: f64 = 8.0;
pub const MAX_RESOLUTION: f64 = 4096.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Interior,
    PiBoundary,
    OuterBoundary,
    Exterior,
}

/// Region covered by the grid. Both shapes have their flat face on `Π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape<T> {
    /// `{|x| < radius, x₁ > 0}`.
    HalfBall { radius: T },
    /// `{0 < x₁ < depth, |x_k| < half_width for k ≥ 2}`.
    HalfBox { depth: T, half_width: T },
}

/// Which orthonormal frames the discrete operator may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameSet {
    /// `{e₁, …, e_n}` only.
    Axis,
    /// Axis frame plus `{(1,1)/√2, (1,−1)/√2}`; two-dimensional grids only.
    AxisAndDiagonal,
}

impl FrameSet {
    pub fn default_for(n: usize) -> Self {
        if n == 2 {
            FrameSet::AxisAndDiagonal
        } else {
            FrameSet::Axis
        }
    }
}

/// Lattice direction `d = h·offset`; the unit vector is `offset / |offset|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Direction {
    pub offset: [i64; 3],
    pub norm2: i64,
}

impl Direction {
    fn new(offset: [i64; 3]) -> Self {
        Self { offset, norm2: offset.iter().map(|o| o * o).sum() }
    }

    pub fn unit<T: Real>(&self, n: usize) -> Vec<T> {
        let len = T::from_i64(self.norm2).expect("small integer").sqrt();
        self.offset[..n].iter().map(|&o| T::from_i64(o).expect("small integer") / len).collect()
    }
}

#[derive(Debug, Clone)]
pub struct GridDomain<T> {
    n: usize,
    h: T,
    shape: Shape<T>,
    // Lattice half-extents: i₁ ∈ 0..=extent[0], |i_k| ≤ extent[k].
    extent: [i64; 3],
    dims: [usize; 3],
    strides: [usize; 3],
    roles: Vec<NodeRole>,
    interior: Vec<usize>,
    directions: Vec<Direction>,
    dir_offsets: Vec<isize>,
    frames: Vec<Vec<usize>>,
}

fn cells_for<T: Real>(length: T, h: T, what: &str) -> Result<i64> {
    let ratio = length / h;
    let rounded = ratio.round();
    if !(ratio.is_finite() && rounded >= T::one()) || (ratio - rounded).abs() > T::lit(1e-12) * ratio.max(T::one()) {
        return invalid(format!("spacing h={h} does not divide the {what} {length}"));
    }
    rounded.to_i64().ok_or_else(|| Error::InvalidArgument(format!("{what}/h too large")))
}

/// Builds the classified half-ball grid with the default frame set, enforcing `8 ≤ R/h ≤ 4096`.
pub fn build_grid<T: Real>(n: usize, h: T, radius: T) -> Result<GridDomain<T>> {
    let ratio = (radius / h).to_f64_lossy();
    if !(MIN_RESOLUTION - 1e-9..=MAX_RESOLUTION + 1e-9).contains(&ratio) {
        return invalid(format!("radius/h = {ratio} outside [{MIN_RESOLUTION}, {MAX_RESOLUTION}]"));
    }
    GridDomain::new(n, h, Shape::HalfBall { radius }, FrameSet::default_for(n))
}

impl<T: Real> GridDomain<T> {
    /// Lower-level constructor: checks only that `h` divides the extents, not the resolution bounds.
    pub fn new(n: usize, h: T, shape: Shape<T>, frames: FrameSet) -> Result<Self> {
        if !(2..=3).contains(&n) {
            return invalid(format!("dimension n={n} must be 2 or 3"));
        }
        if !(h > T::zero() && h.is_finite()) {
            return invalid(format!("spacing h={h} must be positive"));
        }
        if frames == FrameSet::AxisAndDiagonal && n != 2 {
            return invalid("the diagonal frame is only available for n = 2");
        }
        let mut extent = [0i64; 3];
        match shape {
            Shape::HalfBall { radius } => {
                let c = cells_for(radius, h, "radius")?;
                extent[..n].fill(c);
            }
            Shape::HalfBox { depth, half_width } => {
                extent[0] = cells_for(depth, h, "depth")?;
                let w = cells_for(half_width, h, "half width")?;
                extent[1..n].fill(w);
            }
        }
        if extent[..n].iter().any(|&e| e > 1 << 14) {
            return invalid("grid too fine");
        }
        let mut dims = [1usize; 3];
        dims[0] = extent[0] as usize + 1;
        for k in 1..n {
            dims[k] = 2 * extent[k] as usize + 1;
        }
        let strides = [dims[1] * dims[2], dims[2], 1];

        let mut directions = Vec::new();
        let mut frames_idx = Vec::new();
        let axis: Vec<usize> = (0..n)
            .map(|k| {
                let mut o = [0i64; 3];
                o[k] = 1;
                directions.push(Direction::new(o));
                directions.len() - 1
            })
            .collect();
        frames_idx.push(axis);
        if frames == FrameSet::AxisAndDiagonal {
            directions.push(Direction::new([1, 1, 0]));
            directions.push(Direction::new([1, -1, 0]));
            frames_idx.push(vec![n, n + 1]);
        }
        let dir_offsets = directions
            .iter()
            .map(|d| (0..3).map(|k| d.offset[k] as isize * strides[k] as isize).sum())
            .collect();

        let mut grid = Self {
            n,
            h,
            shape,
            extent,
            dims,
            strides,
            roles: Vec::new(),
            interior: Vec::new(),
            directions,
            dir_offsets,
            frames: frames_idx,
        };
        grid.classify();
        Ok(grid)
    }

    fn inside(&self, i: &[i64; 3], open: bool) -> bool {
        if i[0] < 0 {
            return false;
        }
        match self.shape {
            Shape::HalfBall { .. } => {
                let r2: i64 = i.iter().map(|k| k * k).sum();
                let big = self.extent[0] * self.extent[0];
                if open {
                    r2 < big
                } else {
                    r2 <= big
                }
            }
            Shape::HalfBox { .. } => (0..self.n).all(|k| {
                let lo = if k == 0 { 0 } else { -self.extent[k] };
                let hi = self.extent[k];
                if open {
                    (k == 0 || i[k] > lo) && i[k] < hi
                } else {
                    i[k] >= lo && i[k] <= hi
                }
            }),
        }
    }

    fn classify(&mut self) {
        let total = self.len();
        let mut roles = Vec::with_capacity(total);
        let mut interior = Vec::new();
        for idx in 0..total {
            let i = self.multi_index(idx);
            let role = if !self.inside(&i, false) {
                NodeRole::Exterior
            } else if i[0] == 0 {
                if self.inside(&i, true) {
                    NodeRole::PiBoundary
                } else {
                    NodeRole::OuterBoundary
                }
            } else if self.inside(&i, true) && self.stencil_closed(&i) {
                NodeRole::Interior
            } else {
                NodeRole::OuterBoundary
            };
            if role == NodeRole::Interior {
                interior.push(idx);
            }
            roles.push(role);
        }
        self.roles = roles;
        self.interior = interior;
    }

    fn stencil_closed(&self, i: &[i64; 3]) -> bool {
        self.directions.iter().all(|d| {
            [1i64, -1].iter().all(|&s| {
                let j = [i[0] + s * d.offset[0], i[1] + s * d.offset[1], i[2] + s * d.offset[2]];
                self.inside(&j, false)
            })
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn h(&self) -> T {
        self.h
    }

    pub fn shape(&self) -> Shape<T> {
        self.shape
    }

    /// Radius of the half-ball, or the depth of a half-box.
    pub fn radius(&self) -> T {
        match self.shape {
            Shape::HalfBall { radius } => radius,
            Shape::HalfBox { depth, .. } => depth,
        }
    }

    /// Total lattice nodes, every role included.
    #[inline]
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    pub fn role(&self, idx: usize) -> NodeRole {
        self.roles[idx]
    }

    pub fn roles(&self) -> &[NodeRole] {
        &self.roles
    }

    /// Interior nodes in flat-index order.
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    pub fn count(&self, role: NodeRole) -> usize {
        self.roles.iter().filter(|&&r| r == role).count()
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn frame_set(&self) -> FrameSet {
        if self.frames.len() > 1 {
            FrameSet::AxisAndDiagonal
        } else {
            FrameSet::Axis
        }
    }

    /// Frames as lists of indices into [`Self::directions`]; frame 0 is the axis frame.
    pub fn frames(&self) -> &[Vec<usize>] {
        &self.frames
    }

    #[inline]
    pub(crate) fn dir_offset(&self, dir: usize) -> isize {
        self.dir_offsets[dir]
    }

    #[inline]
    pub fn multi_index(&self, idx: usize) -> [i64; 3] {
        let i0 = idx / self.strides[0];
        let rem = idx % self.strides[0];
        let i1 = rem / self.strides[1];
        let i2 = rem % self.strides[1];
        [i0 as i64, i1 as i64 - self.extent[1], i2 as i64 - self.extent[2]]
    }

    pub fn index_of(&self, i: [i64; 3]) -> Option<usize> {
        if i[0] < 0 || i[0] > self.extent[0] {
            return None;
        }
        let mut idx = i[0] as usize * self.strides[0];
        for k in 1..3 {
            if i[k].abs() > self.extent[k] {
                return None;
            }
            idx += (i[k] + self.extent[k]) as usize * self.strides[k];
        }
        Some(idx)
    }

    /// Coordinates of a node (`n` entries).
    pub fn coords(&self, idx: usize) -> Vec<T> {
        let i = self.multi_index(idx);
        i[..self.n].iter().map(|&k| T::from_i64(k).expect("small integer") * self.h).collect()
    }

    /// Nearest lattice node to a point (may be exterior or off-lattice → `None`).
    pub fn nearest_node(&self, x: &[T]) -> Option<usize> {
        let mut i = [0i64; 3];
        for (k, &xk) in x.iter().enumerate().take(self.n) {
            i[k] = (xk / self.h).round().to_i64()?;
        }
        self.index_of(i)
    }

    /// Flat index of `node + s·direction`, if it stays on the lattice.
    pub fn neighbor(&self, node: usize, dir: usize, sign: i64) -> Option<usize> {
        let i = self.multi_index(node);
        let o = self.directions[dir].offset;
        self.index_of([i[0] + sign * o[0], i[1] + sign * o[1], i[2] + sign * o[2]])
    }
}

/// Real value per lattice node. Exterior nodes carry `NaN` and are never read by stencils.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    /// Samples `f` at every non-exterior node.
    pub fn from_fn(grid: &GridDomain<T>, f: impl Fn(&[T]) -> T) -> Self {
        let values = (0..grid.len())
            .map(|idx| if grid.role(idx) == NodeRole::Exterior { T::nan() } else { f(&grid.coords(idx)) })
            .collect();
        Self { values }
    }

    pub fn zeros(grid: &GridDomain<T>) -> Self {
        Self::from_fn(grid, |_| T::zero())
    }

    pub fn from_values(grid: &GridDomain<T>, mut values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return invalid(format!("field has {} values, grid has {} nodes", values.len(), grid.len()));
        }
        for (idx, v) in values.iter_mut().enumerate() {
            if grid.role(idx) == NodeRole::Exterior {
                *v = T::nan();
            } else if !v.is_finite() {
                return invalid(format!("non-finite value at node {idx}"));
            }
        }
        Ok(Self { values })
    }

    #[inline]
    pub fn get(&self, idx: usize) -> T {
        self.values[idx]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `max |u − v|` over non-exterior nodes.
    pub fn sup_distance(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }
}

/// Three-point second difference `(u(x+d) − 2u(x) + u(x−d)) / |d|²` along a lattice vector.
pub fn second_difference<T: Real>(
    grid: &GridDomain<T>,
    field: &ScalarField<T>,
    node: usize,
    offset: [i64; 3],
) -> Result<T> {
    let i = grid.multi_index(node);
    let mut vals = [T::zero(); 2];
    for (slot, s) in [1i64, -1].into_iter().enumerate() {
        let j = [i[0] + s * offset[0], i[1] + s * offset[1], i[2] + s * offset[2]];
        let nb = grid.index_of(j).ok_or(Error::StencilViolation { node, neighbor: usize::MAX })?;
        if grid.role(nb) == NodeRole::Exterior {
            return Err(Error::StencilViolation { node, neighbor: nb });
        }
        vals[slot] = field.get(nb);
    }
    let norm2: i64 = offset.iter().map(|o| o * o).sum();
    let d2 = T::from_i64(norm2).expect("small integer") * grid.h() * grid.h();
    Ok((vals[0] - T::lit(2.0) * field.get(node) + vals[1]) / d2)
}

/// Central-difference gradient magnitude at an interior node.
pub fn gradient_norm<T: Real>(grid: &GridDomain<T>, field: &ScalarField<T>, node: usize) -> T {
    let two_h = T::lit(2.0) * grid.h();
    (0..grid.dim())
        .map(|k| {
            let fwd = field.get((node as isize + grid.dir_offset(k)) as usize);
            let bwd = field.get((node as isize - grid.dir_offset(k)) as usize);
            let g = (fwd - bwd) / two_h;
            g * g
        })
        .sum::<T>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Phase {
    #[serde(rename = "OMEGA_PLUS")]
    OmegaPlus,
    #[serde(rename = "OMEGA_MINUS")]
    OmegaMinus,
    #[serde(rename = "LAMBDA")]
    Lambda,
    #[serde(rename = "BOUNDARY")]
    Boundary,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::OmegaPlus => "OMEGA_PLUS",
            Phase::OmegaMinus => "OMEGA_MINUS",
            Phase::Lambda => "LAMBDA",
            Phase::Boundary => "BOUNDARY",
        }
    }

    /// Inverse of [`Phase::name`].
    pub fn from_name(s: &str) -> Option<Self> {
        [Phase::OmegaPlus, Phase::OmegaMinus, Phase::Lambda, Phase::Boundary].into_iter().find(|p| p.name() == s)
    }

    pub fn is_omega(self) -> bool {
        matches!(self, Phase::OmegaPlus | Phase::OmegaMinus)
    }
}

/// Per-node phase labels; every non-interior node is `Boundary`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseField {
    labels: Vec<Phase>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PhaseCounts {
    pub omega_plus: usize,
    pub omega_minus: usize,
    pub lambda: usize,
    pub boundary: usize,
}

impl PhaseField {
    pub fn from_labels(labels: Vec<Phase>) -> Self {
        Self { labels }
    }

    #[inline]
    pub fn get(&self, idx: usize) -> Phase {
        self.labels[idx]
    }

    pub fn labels(&self) -> &[Phase] {
        &self.labels
    }

    pub fn counts(&self) -> PhaseCounts {
        let mut c = PhaseCounts::default();
        for p in &self.labels {
            match p {
                Phase::OmegaPlus => c.omega_plus += 1,
                Phase::OmegaMinus => c.omega_minus += 1,
                Phase::Lambda => c.lambda += 1,
                Phase::Boundary => c.boundary += 1,
            }
        }
        c
    }

    /// Nodes whose labels differ.
    pub fn diff(&self, other: &Self) -> Vec<usize> {
        self.labels.iter().zip(&other.labels).enumerate().filter(|(_, (a, b))| a != b).map(|(i, _)| i).collect()
    }
}

/// Labels interior nodes: `Lambda` iff `|u| ≤ eps_u` and `|∇_h u| ≤ eps_g`, otherwise
/// `OmegaMinus` for `u < 0` and `OmegaPlus` for `u ≥ 0`.
pub fn classify_phase<T: Real>(grid: &GridDomain<T>, field: &ScalarField<T>, eps_u: T, eps_g: T) -> PhaseField {
    let mut labels = vec![Phase::Boundary; grid.len()];
    for &idx in grid.interior_nodes() {
        let u = field.get(idx);
        labels[idx] = if u.abs() <= eps_u && gradient_norm(grid, field, idx) <= eps_g {
            Phase::Lambda
        } else if u >= T::zero() {
            Phase::OmegaPlus
        } else {
            Phase::OmegaMinus
        };
    }
    PhaseField { labels }
}
