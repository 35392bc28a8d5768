//! Text artifacts: CSV tables, PGM (P2) images and JSON with fixed float formatting.
//!
//! Every writer is a pure function of its input, so equal fields give equal bytes.

use std::fmt::Write as _;
use std::io;

use serde::Serialize;

use crate::grid::{GridDomain, NodeRole, PhaseField, ScalarField};
use crate::scalar::Real;

/// Floats are written with 17 significant digits, e.g. `1.2500000000000000e-1`.
pub fn fmt_real<T: Real>(v: T) -> String {
    format!("{:.16e}", v.to_f64_lossy())
}

fn coord_header(n: usize) -> String {
    (1..=n).map(|k| format!("x{k}")).collect::<Vec<_>>().join(",")
}

fn coord_cells<T: Real>(grid: &GridDomain<T>, idx: usize, out: &mut String) {
    for x in grid.coords(idx) {
        out.push_str(&fmt_real(x));
        out.push(',');
    }
}

/// `x1,x2[,x3],value`, one row per non-exterior node in flat-index order (last axis fastest).
pub fn field_csv<T: Real>(grid: &GridDomain<T>, field: &ScalarField<T>) -> String {
    let mut out = format!("{},value\n", coord_header(grid.dim()));
    for idx in 0..grid.len() {
        if grid.role(idx) == NodeRole::Exterior {
            continue;
        }
        coord_cells(grid, idx, &mut out);
        out.push_str(&fmt_real(field.get(idx)));
        out.push('\n');
    }
    out
}

/// `x1,x2[,x3],phase` with the label names, same row order as [`field_csv`].
pub fn phase_csv<T: Real>(grid: &GridDomain<T>, phase: &PhaseField) -> String {
    let mut out = format!("{},phase\n", coord_header(grid.dim()));
    for idx in 0..grid.len() {
        if grid.role(idx) == NodeRole::Exterior {
            continue;
        }
        coord_cells(grid, idx, &mut out);
        out.push_str(phase.get(idx).name());
        out.push('\n');
    }
    out
}

/// Two-column table with header `r,value`.
pub fn table_csv<T: Real>(rows: &[(T, T)]) -> String {
    let mut out = String::from("r,value\n");
    for &(r, v) in rows {
        let _ = writeln!(out, "{},{}", fmt_real(r), fmt_real(v));
    }
    out
}

/// Plain PGM (P2). Columns run over `x₂` ascending, rows over `x₁` descending, so `Π` is the
/// bottom row; for `n = 3` the slice `x₃ = 0` is drawn. Exterior pixels are 0 and values map
/// affinely onto `1..=255` via `gray = 1 + round(254 (v − vmin) / (vmax − vmin))`, with
/// `vmin`/`vmax` recorded in comment lines (a constant field maps to 1).
pub fn field_pgm<T: Real>(grid: &GridDomain<T>, field: &ScalarField<T>) -> String {
    let dims = grid.dims();
    let half = (dims[1] as i64 - 1) / 2;
    let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut pixels = Vec::with_capacity(dims[0] * dims[1]);
    for i1 in (0..dims[0] as i64).rev() {
        for i2 in -half..=half {
            let idx = grid.index_of([i1, i2, 0]).expect("slice node on lattice");
            let v = (grid.role(idx) != NodeRole::Exterior).then(|| field.get(idx).to_f64_lossy());
            if let Some(v) = v {
                vmin = vmin.min(v);
                vmax = vmax.max(v);
            }
            pixels.push(v);
        }
    }
    if !vmin.is_finite() {
        (vmin, vmax) = (0.0, 0.0);
    }
    let span = vmax - vmin;
    let mut out = String::new();
    let _ = writeln!(out, "P2");
    let _ = writeln!(out, "# gray = 1 + round(254 * (value - vmin) / (vmax - vmin)); exterior = 0");
    let _ = writeln!(out, "# vmin {vmin:.16e}");
    let _ = writeln!(out, "# vmax {vmax:.16e}");
    let _ = writeln!(out, "{} {}", dims[1], dims[0]);
    let _ = writeln!(out, "255");
    for row in pixels.chunks(dims[1]) {
        let line: Vec<String> = row
            .iter()
            .map(|p| match p {
                None => "0".to_string(),
                Some(v) if span > 0.0 => (1 + (254.0 * (v - vmin) / span).round() as u32).to_string(),
                Some(_) => "1".to_string(),
            })
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Pretty-printed JSON whose floats use [`fmt_real`]; non-finite floats become `null`.
pub fn to_json<S: Serialize + ?Sized>(value: &S) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloatFormatter::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

#[derive(Default)]
struct FixedFloatFormatter {
    inner: serde_json::ser::PrettyFormatter<'static>,
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.inner.$name(w $(, $arg)*)
        })*
    };
}

impl serde_json::ser::Formatter for FixedFloatFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write!(w, "{:.16e}", f64::from(value))
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        end_object_key();
        begin_object_value();
        end_object_value();
    }
}
