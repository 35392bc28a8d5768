//! The four subcommands. Each returns an [`Outcome`] or an error; `main` maps these to
//! exit codes 0 (converged), 2 (diverged) and 1 (configuration or input error).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, ensure, Context, Result};
use fblab_core::export::{field_csv, field_pgm, fmt_real, phase_csv, table_csv, to_json};
use fblab_core::grid::PhaseCounts;
use fblab_core::{
    build_grid, halfspace_oracle, oracle_1d, run_diagnostics, solve_positive, solve_two_phase, ContactCalibration,
    DiagnosticsReport64, GridDomain64, NodeRole, OperatorSpec64, Phase, PhaseField, ScalarField, ScalarField64,
    SolveMode, SolveResult64,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{BoundarySection, LabConfig, ModeKind, Spacing};
use crate::manifest::{sha256_hex, write_artifacts, RunManifest};

pub const THREADS_ENV: &str = "FBLAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Converged,
    Diverged,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Converged => 0,
            Outcome::Diverged => 2,
        }
    }
}

/// A finished solve together with everything needed to interpret it.
pub struct SolveRun {
    pub spec: OperatorSpec64,
    pub grid: GridDomain64,
    pub result: SolveResult64,
    pub calibration: Option<ContactCalibration<f64>>,
    pub eps_u: f64,
}

impl SolveRun {
    pub fn outcome(&self) -> Outcome {
        if self.result.converged {
            Outcome::Converged
        } else {
            Outcome::Diverged
        }
    }
}

pub fn solve(cfg: &LabConfig) -> Result<SolveRun> {
    let spec = cfg.operator_spec()?;
    let grid = cfg.grid_domain()?;
    let (solve_cfg, calibration) = cfg.solve_config(&spec, &grid)?;
    let result = match cfg.solve.mode {
        ModeKind::Positive => solve_positive(&spec, &grid, &solve_cfg)?,
        ModeKind::TwoPhase => solve_two_phase(&spec, &grid, &solve_cfg)?,
    };
    let eps_u = solve_cfg.eps_u_for(grid.h());
    Ok(SolveRun { spec, grid, result, calibration, eps_u })
}

#[derive(Serialize)]
struct Summary<'a> {
    config_hash: &'a str,
    operator: &'static str,
    preset: &'static str,
    mode: SolveMode,
    n: usize,
    h: f64,
    radius: f64,
    calibration: Option<ContactCalibration<f64>>,
    converged: bool,
    residual: f64,
    sweeps_used: usize,
    policy_iters: usize,
    phase_iters: usize,
    eps_u: f64,
    phase_counts: PhaseCounts,
}

/// Solves and writes `field.csv`, `field.pgm`, `phase.csv`, `summary.json` and `manifest.json`.
pub fn solve_into(cfg: &LabConfig, dir: &Path) -> Result<SolveRun> {
    let run = solve(cfg)?;
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let hash = cfg.hash();
    let r = &run.result;
    let summary = Summary {
        config_hash: &hash,
        operator: run.spec.kind().name(),
        preset: cfg.preset_name(),
        mode: r.mode,
        n: run.grid.dim(),
        h: run.grid.h(),
        radius: run.grid.radius(),
        calibration: run.calibration,
        converged: r.converged,
        residual: r.residual,
        sweeps_used: r.sweeps_used,
        policy_iters: r.policy_iters,
        phase_iters: r.phase_iters,
        eps_u: run.eps_u,
        phase_counts: r.phase.counts(),
    };
    let mut manifest = RunManifest::new(hash.clone());
    write_artifacts(
        dir,
        &mut manifest,
        &[
            ("field.csv", field_csv(&run.grid, &r.field)),
            ("field.pgm", field_pgm(&run.grid, &r.field)),
            ("phase.csv", phase_csv(&run.grid, &r.phase)),
            ("summary.json", to_json(&summary)?),
        ],
    )?;
    manifest.save(dir)?;
    Ok(run)
}

pub fn cmd_solve(cfg: &LabConfig, dir: &Path) -> Result<Outcome> {
    let run = solve_into(cfg, dir)?;
    let r = &run.result;
    eprintln!(
        "{} on h={}: converged={} residual={:.3e} solves/sweeps={} policy iterations={}",
        run.spec.kind(),
        run.grid.h(),
        r.converged,
        r.residual,
        r.sweeps_used,
        r.policy_iters
    );
    Ok(run.outcome())
}

/// Re-reads a solve result after checking it belongs to `cfg`.
pub fn load_result(cfg: &LabConfig, dir: &Path) -> Result<(GridDomain64, ScalarField64, PhaseField)> {
    ensure!(dir.is_dir(), "result directory {} does not exist", dir.display());
    let manifest = RunManifest::load(dir)?;
    let hash = cfg.hash();
    ensure!(
        manifest.config_hash == hash,
        "stale results in {}: manifest config hash {} does not match {}",
        dir.display(),
        manifest.config_hash,
        hash
    );
    for name in ["field.csv", "phase.csv"] {
        let bytes = std::fs::read(dir.join(name)).with_context(|| format!("cannot read {name}"))?;
        let entry = manifest.entry(name).ok_or_else(|| anyhow!("{name} is not listed in the manifest"))?;
        ensure!(entry.sha256 == sha256_hex(&bytes), "{name} was modified after the solve");
    }
    let grid = cfg.grid_domain()?;
    let mut values = vec![f64::NAN; grid.len()];
    read_node_column(&grid, &dir.join("field.csv"), "value", |idx, cell| {
        values[idx] = cell.parse().with_context(|| format!("bad value {cell:?}"))?;
        Ok(())
    })?;
    let mut labels = vec![Phase::Boundary; grid.len()];
    read_node_column(&grid, &dir.join("phase.csv"), "phase", |idx, cell| {
        labels[idx] = Phase::from_name(cell).ok_or_else(|| anyhow!("unknown phase label {cell:?}"))?;
        Ok(())
    })?;
    let field = ScalarField::from_values(&grid, values)?;
    Ok((grid, field, PhaseField::from_labels(labels)))
}

/// Walks a node table written by the exporters, checking coordinates against `grid`.
fn read_node_column(
    grid: &GridDomain64,
    path: &Path,
    column: &str,
    mut store: impl FnMut(usize, &str) -> Result<()>,
) -> Result<()> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let n = grid.dim();
    let header = reader.headers()?.clone();
    ensure!(header.len() == n + 1 && &header[n] == column, "unexpected header in {}", path.display());
    let mut records = reader.records();
    for idx in (0..grid.len()).filter(|&i| grid.role(i) != NodeRole::Exterior) {
        let record = records.next().ok_or_else(|| anyhow!("{} has too few rows", path.display()))??;
        for (k, x) in grid.coords(idx).into_iter().enumerate() {
            let c: f64 = record[k].parse()?;
            ensure!((c - x).abs() <= 1e-9, "{} does not match the configured grid", path.display());
        }
        store(idx, &record[n]).with_context(|| format!("in {}", path.display()))?;
    }
    ensure!(records.next().is_none(), "{} has too many rows", path.display());
    Ok(())
}

fn blowup_csv(report: &DiagnosticsReport64) -> String {
    let mut out = String::from("r,distance,cauchy_increment\n");
    for e in &report.blowup_metrics {
        let inc = e.cauchy_increment.map(fmt_real).unwrap_or_default();
        let _ = writeln!(out, "{},{},{}", fmt_real(e.r), fmt_real(e.distance), inc);
    }
    out
}

/// Runs the diagnostics on a loaded result and adds their artifacts to the manifest in `dir`.
pub fn diagnose_into(
    cfg: &LabConfig,
    dir: &Path,
    spec: &OperatorSpec64,
    grid: &GridDomain64,
    field: &ScalarField64,
    phase: &PhaseField,
) -> Result<DiagnosticsReport64> {
    let eps_u = cfg.eps_u_for(grid.h());
    let req = cfg.diagnostics_request(grid, eps_u);
    let report = run_diagnostics(spec, grid, field, phase, &req)?;
    let s_rows: Vec<(f64, f64)> = report.s_table.entries.iter().map(|e| (e.r, e.s)).collect();
    let t_rows: Vec<(f64, f64)> =
        report.tangency_profile.iter().flat_map(|t| t.entries.iter().map(|e| (e.r, e.t))).collect();
    let mut manifest = RunManifest::load(dir)?;
    write_artifacts(
        dir,
        &mut manifest,
        &[
            ("diagnostics.json", to_json(&report)?),
            ("s_table.csv", table_csv(&s_rows)),
            ("v_table.csv", table_csv(&report.v_table)),
            ("tangency_profile.csv", table_csv(&t_rows)),
            ("blowup_metrics.csv", blowup_csv(&report)),
        ],
    )?;
    manifest.save(dir)?;
    Ok(report)
}

pub fn cmd_diagnose(cfg: &LabConfig, dir: &Path) -> Result<DiagnosticsReport64> {
    let (grid, field, phase) = load_result(cfg, dir)?;
    let spec = cfg.operator_spec()?;
    let report = diagnose_into(cfg, dir, &spec, &grid, &field, &phase)?;
    match &report.growth_exponent {
        Some(fit) => eprintln!("growth exponent {:.4}", fit.alpha),
        None => eprintln!("growth exponent unavailable: {}", report.growth_error.as_deref().unwrap_or("")),
    }
    eprintln!("free boundary points: {}", report.free_boundary_point_count);
    Ok(report)
}

/// Parses `"1/32,1/64,0.0078125"`.
pub fn parse_h_list(s: &str) -> Result<Vec<Spacing>> {
    let items: Vec<&str> = s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    ensure!(!items.is_empty(), "the spacing list is empty");
    items
        .into_iter()
        .map(|t| {
            crate::config::parse_fraction(t)?;
            Ok(Spacing::Text(t.to_string()))
        })
        .collect()
}

/// Worker count: `FBLAB_THREADS` when set, otherwise the available parallelism.
pub fn worker_count() -> usize {
    let available = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    match std::env::var(THREADS_ENV).ok().and_then(|s| s.trim().parse::<usize>().ok()) {
        Some(k) if k > 0 => k,
        _ => available,
    }
}

/// One row of `sweep.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub h: f64,
    pub converged: bool,
    pub sup_error: Option<f64>,
    pub fb_location_error: Option<f64>,
    pub growth_exponent: Option<f64>,
    pub tangency: Vec<Option<f64>>,
    pub observed_order: Option<f64>,
}

/// Radii (as fractions of the domain radius) whose tangency values are tabulated.
pub const SWEEP_TANGENCY_RADII: [f64; 2] = [0.1, 0.4];

/// `sup |u − oracle|` over non-exterior nodes for presets with a closed-form solution.
pub fn oracle_sup_error(cfg: &LabConfig, run: &SolveRun) -> Result<Option<f64>> {
    let grid = &run.grid;
    let exact = match &cfg.boundary {
        BoundarySection::Halfspace {} => {
            let o = halfspace_oracle(&run.spec, grid.dim())?;
            ScalarField::from_fn(grid, |x| o.eval(x))
        }
        BoundarySection::Section1d { b } => {
            let o = oracle_1d(*b)?;
            ScalarField::from_fn(grid, |x| o.eval(x[0]))
        }
        _ => return Ok(None),
    };
    Ok(Some(run.result.field.sup_distance(&exact)))
}

/// Distance from the last coincidence node on the `x₁` axis to the one-dimensional free boundary.
pub fn fb_location_error(cfg: &LabConfig, grid: &GridDomain64, phase: &PhaseField) -> Result<Option<f64>> {
    let BoundarySection::Section1d { b } = &cfg.boundary else { return Ok(None) };
    let a = oracle_1d(*b)?.a;
    let mut located = 0.0f64;
    let mut i = 1;
    while let Some(idx) = grid.index_of([i, 0, 0]) {
        if grid.role(idx) == NodeRole::Interior && phase.get(idx) == Phase::Lambda {
            located = located.max(i as f64 * grid.h());
        }
        i += 1;
    }
    Ok(Some((located - a).abs()))
}

fn member_dir(out: &Path, h: &Spacing) -> PathBuf {
    let label = match h {
        Spacing::Value(v) => format!("{v}"),
        Spacing::Text(t) => t.replace('/', "-"),
    };
    out.join(format!("h_{label}"))
}

fn sweep_member(cfg: &LabConfig, dir: &Path) -> Result<SweepRow> {
    let run = solve_into(cfg, dir)?;
    let report = diagnose_into(cfg, dir, &run.spec, &run.grid, &run.result.field, &run.result.phase)?;
    let radius = run.grid.radius();
    Ok(SweepRow {
        h: run.grid.h(),
        converged: run.result.converged,
        sup_error: oracle_sup_error(cfg, &run)?,
        fb_location_error: fb_location_error(cfg, &run.grid, &run.result.phase)?,
        growth_exponent: report.growth_exponent.as_ref().map(|f| f.alpha),
        tangency: SWEEP_TANGENCY_RADII
            .iter()
            .map(|&s| report.tangency_profile.as_ref().and_then(|t| t.at(s * radius)))
            .collect(),
        observed_order: None,
    })
}

fn cell(v: Option<f64>) -> String {
    v.filter(|x| x.is_finite()).map(fmt_real).unwrap_or_default()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("h,converged,sup_error_vs_oracle,fb_location_error,growth_exponent");
    for r in SWEEP_TANGENCY_RADII {
        let _ = write!(out, ",T({r})");
    }
    out.push_str(",observed_order\n");
    for row in rows {
        let _ = write!(
            out,
            "{},{},{},{},{}",
            fmt_real(row.h),
            row.converged,
            cell(row.sup_error),
            cell(row.fb_location_error),
            cell(row.growth_exponent)
        );
        for t in &row.tangency {
            let _ = write!(out, ",{}", cell(*t));
        }
        let _ = writeln!(out, ",{}", cell(row.observed_order));
    }
    out
}

/// Fills `observed_order` from the location error for one-dimensional runs and the sup error otherwise.
pub fn fill_observed_orders(rows: &mut [SweepRow]) {
    for k in 1..rows.len() {
        let err = |r: &SweepRow| r.fb_location_error.or(r.sup_error);
        if let (Some(e0), Some(e1)) = (err(&rows[k - 1]), err(&rows[k])) {
            rows[k].observed_order = Some((e0 / e1).ln() / (rows[k - 1].h / rows[k].h).ln());
        }
    }
}

/// Runs solve and diagnose for every spacing, in parallel, each in its own subdirectory, then
/// writes `sweep.csv` and a manifest in `out`. Failed members are reported and yield `Diverged`.
pub fn cmd_sweep(cfg: &LabConfig, hs: &[Spacing], out: &Path) -> Result<(Outcome, Vec<SweepRow>)> {
    if hs.is_empty() {
        bail!("the spacing list is empty");
    }
    let members: Vec<LabConfig> = hs.iter().map(|h| cfg.with_spacing(h.clone())).collect::<Result<_>>()?;
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(worker_count()).build()?;
    let results: Vec<Result<SweepRow>> = pool.install(|| {
        members.par_iter().zip(hs.par_iter()).map(|(m, h)| sweep_member(m, &member_dir(out, h))).collect()
    });
    let mut outcome = Outcome::Converged;
    let mut rows = Vec::new();
    for (res, h) in results.into_iter().zip(hs) {
        match res {
            Ok(row) => {
                if !row.converged {
                    outcome = Outcome::Diverged;
                }
                rows.push(row);
            }
            Err(e) => {
                eprintln!("member h={h:?} failed: {e:#}");
                outcome = Outcome::Diverged;
            }
        }
    }
    rows.sort_by(|a, b| b.h.total_cmp(&a.h));
    fill_observed_orders(&mut rows);
    let mut manifest = RunManifest::new(cfg.hash());
    write_artifacts(out, &mut manifest, &[("sweep.csv", sweep_csv(&rows))])?;
    manifest.save(out)?;
    Ok((outcome, rows))
}

/// Text printed by `fblab oracle`: the half-space coefficient and the one-dimensional free boundaries.
pub fn oracle_report(spec: &OperatorSpec64, n: usize, bs: &[f64]) -> Result<String> {
    let o = halfspace_oracle(spec, n)?;
    let mut out = String::new();
    writeln!(out, "operator {} lambda {} Lambda {} n {n}", spec.kind(), spec.lambda(), spec.big_lambda())?;
    writeln!(out, "c = {}", fmt_real(o.coefficient))?;
    for &b in bs {
        let one_d = oracle_1d(b)?;
        if one_d.has_free_boundary() {
            writeln!(out, "b = {}  a = {}", fmt_real(b), fmt_real(one_d.a))?;
        } else {
            writeln!(out, "b = {}  a = none (positive on (0, 1])", fmt_real(b))?;
        }
    }
    Ok(out)
}

/// Writes the half-space oracle on the half-ball of radius 1 with spacing `h`.
pub fn dump_oracle(spec: &OperatorSpec64, n: usize, h: f64, dir: &Path) -> Result<()> {
    let o = halfspace_oracle(spec, n)?;
    let grid = build_grid(n, h, 1.0)?;
    let field = ScalarField::from_fn(&grid, |x| o.eval(x));
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("halfspace.csv"), field_csv(&grid, &field))?;
    std::fs::write(dir.join("halfspace.pgm"), field_pgm(&grid, &field))?;
    Ok(())
}
