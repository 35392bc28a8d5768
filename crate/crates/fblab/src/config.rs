//! Strict TOML experiment configuration.
//!
//! ```toml
//! seed = 7
//!
//! [operator]
//! kind = "pucci+"
//! lambda = 1.0
//! big_lambda = 2.0
//!
//! [grid]
//! n = 2
//! h = "1/64"
//!
//! [boundary]
//! preset = "contact"
//! amplitude = "critical"
//! ```
//!
//! Unknown keys anywhere are rejected. The config hash is the SHA-256 of the canonical
//! re-serialization, so comments and formatting do not affect it.

use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use fblab_core::diagnostics::DiagnosticsRequest;
use fblab_core::solver::EPS_U_FACTOR;
use fblab_core::{
    build_grid, calibrate_contact_amplitude, BoundaryPreset, ContactCalibration, FrameSet, GridDomain64,
    InnerSolver, OperatorKind, OperatorSpec64, Shape, SolveConfig64, SymMatrix,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Used when the command line gives no output directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub operator: OperatorSection,
    pub grid: GridSection,
    #[serde(default)]
    pub solve: SolveSection,
    pub boundary: BoundarySection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    pub kind: OperatorKind,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default = "one")]
    pub big_lambda: f64,
    /// Bellman matrices, each in row-major order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub family: Vec<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

/// Grid spacing written either as a number or as a fraction such as `"1/64"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Spacing {
    Value(f64),
    Text(String),
}

impl Spacing {
    pub fn value(&self) -> Result<f64> {
        match self {
            Spacing::Value(v) => Ok(*v),
            Spacing::Text(s) => parse_fraction(s),
        }
    }
}

/// Parses `"0.25"` or `"1/64"`.
pub fn parse_fraction(s: &str) -> Result<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().with_context(|| format!("bad numerator in {s:?}"))?;
            let den: f64 = den.trim().parse().with_context(|| format!("bad denominator in {s:?}"))?;
            num / den
        }
        None => s.parse().with_context(|| format!("bad number {s:?}"))?,
    };
    ensure!(v.is_finite() && v > 0.0, "spacing {s:?} must be a positive number");
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    #[default]
    HalfBall,
    HalfBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FramesKind {
    /// Axis and diagonal frames in two dimensions, axis frame in three.
    #[default]
    Default,
    Axis,
    AxisAndDiagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "two")]
    pub n: usize,
    pub h: Spacing,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default)]
    pub shape: ShapeKind,
    /// Half-box extent in `x₁`; defaults to `radius`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<f64>,
    /// Half-box half-width in the tangential directions; defaults to `radius / 4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default)]
    pub frames: FramesKind,
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    #[default]
    Positive,
    TwoPhase,
}

/// Solver overrides; missing values keep the library defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    #[serde(default)]
    pub mode: ModeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<InnerSolver>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coarse_start: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_sweeps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy_max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warm_start_sweeps: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeKeyword {
    /// The smallest amplitude at which the positive phase reaches the origin.
    Critical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Value(f64),
    Keyword(AmplitudeKeyword),
}

impl Default for Amplitude {
    fn default() -> Self {
        Amplitude::Keyword(AmplitudeKeyword::Critical)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySection {
    // Empty struct variants so that unknown keys next to the tag are still rejected.
    Zero {},
    Halfspace {},
    Contact {
        #[serde(default)]
        amplitude: Amplitude,
        #[serde(default = "default_width")]
        width: f64,
    },
    Section1d {
        b: f64,
    },
}

fn default_width() -> f64 {
    std::f64::consts::FRAC_PI_6
}

/// Overrides for [`DiagnosticsRequest::standard`]; radii are physical lengths.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_radii: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_r_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_r_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nondeg_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tangency_radii: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cone_eps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup_scales: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup_target_h: Option<f64>,
}

impl LabConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: LabConfig = toml::from_str(text).context("invalid configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    /// Hex SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn h(&self) -> Result<f64> {
        self.grid.h.value()
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(matches!(self.grid.n, 2 | 3), "grid.n must be 2 or 3, got {}", self.grid.n);
        let radius = self.grid.radius;
        ensure!(radius.is_finite() && radius > 0.0, "grid.radius must be positive");
        self.operator_spec()?;
        self.grid_domain()?;
        if let BoundarySection::Contact { amplitude: Amplitude::Value(a), width } = &self.boundary {
            BoundaryPreset::contact(*a, *width)?;
        }
        if let BoundarySection::Contact { width, .. } = &self.boundary {
            ensure!(*width > 0.0 && *width < std::f64::consts::FRAC_PI_2, "contact width must lie in (0, pi/2)");
        }
        if let BoundarySection::Section1d { b } = &self.boundary {
            ensure!(b.is_finite() && *b >= 0.0, "section1d b must be nonnegative");
        }
        let d = &self.diagnostics;
        if let Some(c) = &d.center {
            ensure!(c.len() == self.grid.n, "diagnostics.center must have {} coordinates", self.grid.n);
            ensure!(c[0] >= 0.0 && c.iter().map(|v| v * v).sum::<f64>().sqrt() <= radius, "diagnostics.center lies outside the domain");
        }
        let radii = [&d.density_radii, &d.tangency_radii].into_iter().flatten().flatten();
        let scalars = [d.growth_r_min, d.growth_r_max].into_iter().flatten();
        for r in radii.copied().chain(scalars) {
            ensure!(r > 0.0 && r <= radius, "diagnostic radius {r} lies outside (0, {radius}]");
        }
        for &s in d.blowup_scales.iter().flatten() {
            ensure!(s > 0.0 && s <= 1.0, "blow-up scale {s} lies outside (0, 1]");
        }
        if let (Some(lo), Some(hi)) = (d.growth_r_min, d.growth_r_max) {
            ensure!(lo < hi, "diagnostics.growth_r_min must be below growth_r_max");
        }
        self.solve_config_with(None)?.validate()?;
        Ok(())
    }

    pub fn operator_spec(&self) -> Result<OperatorSpec64> {
        let o = &self.operator;
        let family = o
            .family
            .iter()
            .map(|rows| {
                let k = (rows.len() as f64).sqrt().round() as usize;
                ensure!(k * k == rows.len(), "family matrices must be square, got {} entries", rows.len());
                Ok(SymMatrix::from_row_major(k, rows)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(OperatorSpec64::new(o.kind, o.lambda, o.big_lambda, family)?)
    }

    pub fn grid_domain(&self) -> Result<GridDomain64> {
        let g = &self.grid;
        let h = g.h.value()?;
        let frames = match g.frames {
            FramesKind::Default => FrameSet::default_for(g.n),
            FramesKind::Axis => FrameSet::Axis,
            FramesKind::AxisAndDiagonal => FrameSet::AxisAndDiagonal,
        };
        let grid = match g.shape {
            ShapeKind::HalfBall if g.frames == FramesKind::Default => build_grid(g.n, h, g.radius)?,
            ShapeKind::HalfBall => GridDomain64::new(g.n, h, Shape::HalfBall { radius: g.radius }, frames)?,
            ShapeKind::HalfBox => {
                let shape = Shape::HalfBox {
                    depth: g.depth.unwrap_or(g.radius),
                    half_width: g.half_width.unwrap_or(0.25 * g.radius),
                };
                GridDomain64::new(g.n, h, shape, frames)?
            }
        };
        Ok(grid)
    }

    /// Solver settings; a critical contact amplitude is replaced by `amplitude` when given.
    fn solve_config_with(&self, amplitude: Option<f64>) -> Result<SolveConfig64> {
        let boundary = match &self.boundary {
            BoundarySection::Zero {} => BoundaryPreset::Zero,
            BoundarySection::Halfspace {} => BoundaryPreset::halfspace(&self.operator_spec()?, self.grid.n)?,
            BoundarySection::Contact { amplitude: a, width } => {
                let a = match a {
                    Amplitude::Value(v) => *v,
                    Amplitude::Keyword(AmplitudeKeyword::Critical) => amplitude.unwrap_or(1.0),
                };
                BoundaryPreset::Contact { amplitude: a, width: *width }
            }
            BoundarySection::Section1d { b } => BoundaryPreset::Section1D { b: *b },
        };
        let s = &self.solve;
        let mut cfg = SolveConfig64::new(boundary);
        macro_rules! apply {
            ($($field:ident),*) => {
                $(if let Some(v) = s.$field { cfg.$field = v; })*
            };
        }
        apply!(inner, coarse_start, tol_residual, max_sweeps, policy_max_iters, damping, phase_max_iters, warm_start_sweeps);
        cfg.eps_u = s.eps_u;
        cfg.eps_g = s.eps_g;
        cfg.relaxation = s.relaxation;
        Ok(cfg)
    }

    /// Solver settings for `grid`, running the amplitude calibration when it is requested.
    pub fn solve_config(
        &self,
        spec: &OperatorSpec64,
        grid: &GridDomain64,
    ) -> Result<(SolveConfig64, Option<ContactCalibration<f64>>)> {
        match &self.boundary {
            BoundarySection::Contact { amplitude: Amplitude::Keyword(AmplitudeKeyword::Critical), width } => {
                let base = self.solve_config_with(None)?;
                let cal = calibrate_contact_amplitude(spec, grid, &base, *width)
                    .context("contact amplitude calibration failed")?;
                Ok((self.solve_config_with(Some(cal.amplitude))?, Some(cal)))
            }
            _ => Ok((self.solve_config_with(None)?, None)),
        }
    }

    pub fn diagnostics_request(&self, grid: &GridDomain64, eps_u: f64) -> DiagnosticsRequest<f64> {
        let mut req = DiagnosticsRequest::standard(grid, eps_u);
        req.nondeg_seed = self.seed;
        let d = self.diagnostics.clone();
        if let Some(v) = d.center {
            req.center = v;
        }
        req.j_max = d.j_max.or(req.j_max);
        macro_rules! apply {
            ($($field:ident),*) => {
                $(if let Some(v) = d.$field { req.$field = v; })*
            };
        }
        apply!(density_radii, growth_r_min, growth_r_max, nondeg_samples, tangency_radii, cone_eps, blowup_scales, blowup_target_h);
        req
    }

    /// Copy with a different grid spacing, as used by sweeps.
    pub fn with_spacing(&self, h: Spacing) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.grid.h = h;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn preset_name(&self) -> &'static str {
        match self.boundary {
            BoundarySection::Zero {} => "zero",
            BoundarySection::Halfspace {} => "halfspace",
            BoundarySection::Contact { .. } => "contact",
            BoundarySection::Section1d { .. } => "section1d",
        }
    }

    /// Coincidence threshold used by the solver at spacing `h`.
    pub fn eps_u_for(&self, h: f64) -> f64 {
        self.solve.eps_u.unwrap_or(EPS_U_FACTOR * h * h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
seed = 11

[operator]
kind = "bellman"
lambda = 1.0
big_lambda = 2.0
family = [[1.0, 0.0, 0.0, 1.0], [2.0, 0.0, 0.0, 1.0], [1.5, 0.5, 0.5, 1.5]]

[grid]
n = 2
h = "1/32"
radius = 1.0

[solve]
mode = "two_phase"
inner = "sweeps"
tol_residual = 1e-9

[boundary]
preset = "contact"
amplitude = 0.8
width = 0.5

[diagnostics]
tangency_radii = [0.125, 0.25]
cone_eps = [0.5, 1.0]
"#;

    #[test]
    fn round_trip_is_identical() {
        let cfg = LabConfig::parse(FULL).unwrap();
        let again = LabConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash(), again.hash());
    }

    #[test]
    fn hash_ignores_formatting_but_not_values() {
        let a = LabConfig::parse(FULL).unwrap();
        let b = LabConfig::parse(&FULL.replace("seed = 11", "# comment\nseed    =   11")).unwrap();
        let c = LabConfig::parse(&FULL.replace("seed = 11", "seed = 12")).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for bad in [
            FULL.replace("seed = 11", "seed = 11\ncolour = 3"),
            FULL.replace("n = 2", "n = 2\nspacing = 0.1"),
            FULL.replace("width = 0.5", "width = 0.5\nb = 0.1"),
            FULL.replace("mode = \"two_phase\"", "mode = \"two_phase\"\nfast = true"),
            FULL.replace("cone_eps", "cone_epsilon"),
            FULL.replace("amplitude = 0.8\nwidth = 0.5", "").replace("\"contact\"", "\"zero\"\nwidth = 0.5"),
        ] {
            assert!(LabConfig::parse(&bad).is_err(), "accepted:\n{bad}");
        }
    }

    #[test]
    fn unknown_presets_and_operators_are_rejected() {
        assert!(LabConfig::parse(&FULL.replace("\"contact\"", "\"wedge\"")).is_err());
        assert!(LabConfig::parse(&FULL.replace("\"bellman\"", "\"isaacs\"")).is_err());
    }

    #[test]
    fn defaults_fill_missing_sections() {
        let cfg = LabConfig::parse(
            "[operator]\nkind = \"laplacian\"\n[grid]\nh = 0.0625\n[boundary]\npreset = \"contact\"\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, DEFAULT_SEED);
        assert_eq!(cfg.grid.n, 2);
        assert_eq!(cfg.solve.mode, ModeKind::Positive);
        assert_eq!(
            cfg.boundary,
            BoundarySection::Contact { amplitude: Amplitude::Keyword(AmplitudeKeyword::Critical), width: default_width() }
        );
    }

    #[test]
    fn spacing_fractions() {
        assert_eq!(parse_fraction("1/64").unwrap(), 1.0 / 64.0);
        assert_eq!(parse_fraction(" 0.25 ").unwrap(), 0.25);
        assert!(parse_fraction("1/0").is_err());
        assert!(parse_fraction("-1/8").is_err());
        assert!(parse_fraction("abc").is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(LabConfig::parse(&FULL.replace("\"1/32\"", "\"1/3\"")).is_err());
        assert!(LabConfig::parse(&FULL.replace("amplitude = 0.8", "amplitude = -0.8")).is_err());
        assert!(LabConfig::parse(&FULL.replace("[0.125, 0.25]", "[0.125, 2.0]")).is_err());
        assert!(LabConfig::parse(&FULL.replace("big_lambda = 2.0", "big_lambda = 0.5")).is_err());
        assert!(LabConfig::parse("[operator]\nkind = \"laplacian\"\n").is_err());
    }

    #[test]
    fn overrides_reach_the_solver_and_request() {
        let cfg = LabConfig::parse(FULL).unwrap();
        let grid = cfg.grid_domain().unwrap();
        let (solve, cal) = cfg.solve_config(&cfg.operator_spec().unwrap(), &grid).unwrap();
        assert!(cal.is_none());
        assert_eq!(solve.inner, InnerSolver::Sweeps);
        assert_eq!(solve.tol_residual, 1e-9);
        assert_eq!(solve.boundary, BoundaryPreset::Contact { amplitude: 0.8, width: 0.5 });
        let req = cfg.diagnostics_request(&grid, 1e-6);
        assert_eq!(req.tangency_radii, vec![0.125, 0.25]);
        assert_eq!(req.nondeg_seed, 11);
    }
}
