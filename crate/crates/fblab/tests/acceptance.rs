//! Acceptance gate: runs criteria 1 to 12 and prints one line per criterion.
//!
//! A criterion is `PASS`, `FAIL`, or `FAIL (unattainable)` when its statement is contradicted by
//! mathematics rather than by the implementation; `SOFT FAIL` marks the experimental two-phase
//! gate. The process fails on any plain `FAIL`.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use fblab::commands::{fb_location_error, solve, SolveRun};
use fblab::LabConfig;
use fblab_core::diagnostics::free_boundary_points;
use fblab_core::operator::{check_convexity, check_ellipticity, check_homogeneity};
use fblab_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Fail,
    Unattainable,
    SoftFail,
}

struct Verdict {
    status: Status,
    detail: String,
}

impl Verdict {
    fn from(ok: bool, detail: String) -> Self {
        Self { status: if ok { Status::Pass } else { Status::Fail }, detail }
    }
}

fn operators() -> Vec<OperatorSpec64> {
    vec![
        OperatorSpec::laplacian(),
        OperatorSpec::pucci_plus(1.0, 2.0).unwrap(),
        OperatorSpec::pucci_minus(1.0, 2.0).unwrap(),
        OperatorSpec::bellman(
            1.0,
            2.0,
            vec![
                SymMatrix::identity(2),
                SymMatrix::diag(&[2.0, 1.0]),
                SymMatrix::from_row_major(2, &[1.5, 0.5, 0.5, 1.5]).unwrap(),
            ],
        )
        .unwrap(),
    ]
}

fn config(text: &str) -> LabConfig {
    LabConfig::parse(text).expect("acceptance configuration parses")
}

fn contact_config(kind: &str, h: &str) -> LabConfig {
    let constants = if kind == "laplacian" { "" } else { "lambda = 1.0\nbig_lambda = 2.0\n" };
    config(&format!(
        "[operator]\nkind = \"{kind}\"\n{constants}[grid]\nh = \"{h}\"\n[boundary]\npreset = \"contact\"\namplitude = \"critical\"\n"
    ))
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut convexity_only_failures = Vec::new();
    let mut other_failures = Vec::new();
    for (seed, spec) in operators().iter().enumerate() {
        let seed = seed as u64;
        let ell = check_ellipticity(spec, 2, 1000, 100 + seed).unwrap();
        let hom = check_homogeneity(spec, 2, 1000, 200 + seed).unwrap();
        let conv = check_convexity(spec, 2, 1000, 300 + seed).unwrap();
        notes.push(format!(
            "{} ratio [{:.3}, {:.3}] in [{}, {}]",
            spec.kind(),
            ell.min_ratio,
            ell.worst_ratio,
            ell.lower_bound,
            ell.upper_bound
        ));
        if !ell.pass || !hom.pass {
            other_failures.push(spec.kind().name());
        }
        if !conv.pass {
            if spec.kind() == OperatorKind::PucciMinus {
                convexity_only_failures.push(format!("pucci- convexity fails {}/1000", conv.failures));
            } else {
                other_failures.push(spec.kind().name());
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let mut detail = format!("{}; {elapsed:.2}s", notes.join("; "));
    let status = if !other_failures.is_empty() || elapsed >= 5.0 {
        detail.push_str(&format!("; failing: {other_failures:?}"));
        Status::Fail
    } else if !convexity_only_failures.is_empty() {
        detail.push_str(&format!(
            "; {} (the minimal Pucci operator is concave, not convex, so its convexity check cannot pass)",
            convexity_only_failures.join(", ")
        ));
        Status::Unattainable
    } else {
        Status::Pass
    };
    Verdict { status, detail }
}

fn frame_hessian(a: f64, b: f64, diagonal: bool) -> SymMatrix64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (v, w) = if diagonal { ([s, s], [s, -s]) } else { ([1.0, 0.0], [0.0, 1.0]) };
    SymMatrix::outer(&v).scale(a) + SymMatrix::outer(&w).scale(b)
}

fn criterion_2() -> Verdict {
    let g = build_grid(2, 1.0 / 64.0, 1.0).unwrap();
    let values = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];
    let (mut worst, mut probes) = (0.0f64, 0);
    for spec in operators() {
        let op = DiscreteOperator::new(&spec, &g).unwrap();
        for &a in &values {
            for &b in &values {
                for diagonal in [false, true] {
                    let hess = frame_hessian(a, b, diagonal);
                    let exact = spec.eval(&hess).unwrap();
                    let probe = quadratic_probe(hess);
                    let u = ScalarField::from_fn(&g, |x| probe.eval(x));
                    for &node in g.interior_nodes() {
                        worst = worst.max((op.apply(u.values(), node) - exact).abs());
                    }
                    probes += 1;
                }
            }
        }
    }
    Verdict::from(worst <= 1e-10, format!("{probes} probes, max deviation {worst:.2e}"))
}

fn criterion_3() -> Verdict {
    let g = build_grid(2, 1.0 / 16.0, 1.0).unwrap();
    let ops: Vec<DiscreteOperator<f64>> = operators().iter().map(|s| DiscreteOperator::new(s, &g).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = f64::INFINITY;
    let trials = 10_000;
    for _ in 0..trials {
        let values: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let op = &ops[rng.gen_range(0..ops.len())];
        let node = g.interior_nodes()[rng.gen_range(0..g.interior_nodes().len())];
        let dir = rng.gen_range(0..g.directions().len());
        let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
        let nb = g.neighbor(node, dir, sign).unwrap();
        let delta = rng.gen_range(1e-8..1.0);
        let base = op.apply(&values, node);
        let mut bumped = values;
        bumped[nb] += delta;
        worst = worst.min(op.apply(&bumped, node) - base);
    }
    Verdict::from(worst >= -1e-12, format!("{trials} perturbations, smallest change {worst:.3e}"))
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let g = build_grid(2, 1.0 / 64.0, 1.0).unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    for spec in [OperatorSpec::laplacian(), OperatorSpec::pucci_plus(1.0, 2.0).unwrap()] {
        let cfg = SolveConfig::new(BoundaryPreset::halfspace(&spec, 2).unwrap());
        let r = solve_positive(&spec, &g, &cfg).unwrap();
        let oracle = halfspace_oracle(&spec, 2).unwrap();
        let err = r.field.sup_distance(&ScalarField::from_fn(&g, |x| oracle.eval(x)));
        let res = complementarity_residual(&spec, &g, &r.field).unwrap();
        ok &= r.converged && res <= 1e-10 && err <= 1e-8;
        notes.push(format!("{}: residual {res:.1e}, sup error {err:.1e}", spec.kind()));
    }
    let elapsed = start.elapsed().as_secs_f64();
    Verdict::from(ok && elapsed < 60.0, format!("{}; {elapsed:.2}s", notes.join("; ")))
}

fn criterion_5() -> Verdict {
    let mut errors = Vec::new();
    let mut ok = true;
    for h in ["1/32", "1/64", "1/128"] {
        let cfg = config(&format!(
            "[operator]\nkind = \"laplacian\"\n[grid]\nh = \"{h}\"\nshape = \"half_box\"\nframes = \"axis\"\n\
             [boundary]\npreset = \"section1d\"\nb = 0.125\n"
        ));
        let run = solve(&cfg).unwrap();
        let err = fb_location_error(&cfg, &run.grid, &run.result.phase).unwrap().unwrap();
        ok &= run.result.converged && err <= 2.0 * run.grid.h();
        errors.push(err);
    }
    // Halving h must shrink the error by at least a factor 1.5/2; rounding-level errors count as zero.
    let ratios_ok = errors.windows(2).all(|w| w[1] <= 0.75 * w[0] + 1e-12);
    Verdict::from(ok && ratios_ok, format!("location errors {errors:?} (a = 0.5)"))
}

struct ContactRun {
    run: SolveRun,
    report: DiagnosticsReport64,
}

fn contact_run(kind: &str, h: &str) -> ContactRun {
    let cfg = contact_config(kind, h);
    let run = solve(&cfg).unwrap();
    let req = cfg.diagnostics_request(&run.grid, run.eps_u);
    let report = run_diagnostics(&run.spec, &run.grid, &run.result.field, &run.result.phase, &req).unwrap();
    ContactRun { run, report }
}

fn criterion_6(runs: &[ContactRun]) -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for c in runs {
        let alpha = c.report.growth_exponent.as_ref().map(|f| f.alpha).unwrap_or(f64::NAN);
        ok &= c.run.result.converged && (1.8..=2.2).contains(&alpha) && c.report.max_density == 0.0;
        notes.push(format!("{}: alpha {alpha:.3}, max V {}", c.run.spec.kind(), c.report.max_density));
    }
    Verdict::from(ok, notes.join("; "))
}

fn criterion_7(runs: &[ContactRun]) -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for c in runs {
        let n = c.run.grid.dim() as f64;
        let bound = 0.5 / (2.0 * n * c.run.spec.big_lambda());
        match &c.report.nondeg_quotient {
            Some(q) => {
                ok &= q.samples.len() == 20 && q.q_min >= bound;
                notes.push(format!("{}: q_min {:.3} >= {bound} over {} nodes", c.run.spec.kind(), q.q_min, q.samples.len()));
            }
            None => {
                ok = false;
                notes.push(format!("{}: no samples", c.run.spec.kind()));
            }
        }
    }
    Verdict::from(ok, notes.join("; "))
}

fn criterion_8(runs: &[ContactRun]) -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for c in runs {
        let s = &c.report.s_table;
        let finite = s.c0_min.is_some_and(|c0| c0.is_finite() && s.holds_with(c0, s.m));
        ok &= finite;
        let c0 = s.c0_min.map_or("none".to_string(), |c| format!("{c:.4}"));
        notes.push(format!("{}: C0 = {c0}, M = {:.4}, levels {}", c.run.spec.kind(), s.m, s.entries.len()));
    }
    Verdict::from(ok, notes.join("; "))
}

fn criterion_9(runs: &[ContactRun]) -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for c in runs {
        let h = c.run.grid.h();
        let Some(t) = &c.report.tangency_profile else {
            ok = false;
            notes.push(format!("{}: {}", c.run.spec.kind(), c.report.tangency_error.as_deref().unwrap_or("")));
            continue;
        };
        let (t01, t04, t4h) = (t.at(0.1), t.at(0.4), t.at(4.0 * h));
        let cone = t.cones.iter().find(|k| k.eps == 1.0).and_then(|k| k.clear_radius);
        let trend = matches!((t01, t04, t4h), (Some(a), Some(b), Some(c)) if a < b && c <= 0.5 * b);
        let clear = cone.is_some_and(|r| r >= 4.0 * h);
        ok &= trend && clear;
        notes.push(format!(
            "{}: T(4h) {:.3}, T(0.1) {:.3}, T(0.4) {:.3}, cone clear radius {:?}",
            c.run.spec.kind(),
            t4h.unwrap_or(f64::NAN),
            t01.unwrap_or(f64::NAN),
            t04.unwrap_or(f64::NAN),
            cone
        ));
    }
    Verdict::from(ok, notes.join("; "))
}

fn criterion_10(runs: &[ContactRun]) -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for c in runs {
        let m = &c.report.blowup_metrics;
        let scales: Vec<f64> = m.iter().map(|e| e.r).collect();
        let d: Vec<f64> = m.iter().map(|e| e.distance).collect();
        let expected = scales == [0.5, 0.25, 0.125, 0.0625];
        let decreasing = d.windows(2).all(|w| w[1] <= w[0]);
        let last = d.last().copied().unwrap_or(f64::INFINITY);
        ok &= expected && decreasing && last <= 0.1;
        notes.push(format!("{}: distances {:?}", c.run.spec.kind(), d.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()));
    }
    Verdict::from(ok, notes.join("; "))
}

fn run_cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_fblab")).args(args).output().map(|o| o.status.success()).unwrap_or(false)
}

fn criterion_11() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("contact.toml");
    std::fs::write(&cfg_path, contact_config("pucci+", "1/32").to_toml()).unwrap();
    let cfg = cfg_path.to_str().unwrap();
    let mut manifests = Vec::new();
    for name in ["first", "second"] {
        let dir = tmp.path().join(name);
        let d = dir.to_str().unwrap();
        if !(run_cli(&["solve", "-c", cfg, "-o", d]) && run_cli(&["diagnose", "-c", cfg, "-r", d])) {
            return Verdict::from(false, format!("{name} run failed"));
        }
        manifests.push(fblab::manifest::RunManifest::load(&dir).unwrap());
    }
    let same = manifests[0].files == manifests[1].files && manifests[0].config_hash == manifests[1].config_hash;
    let bytes_equal = manifests[0].files.iter().all(|f| {
        let read = |run: &str| std::fs::read(Path::new(tmp.path()).join(run).join(&f.name)).unwrap();
        read("first") == read("second")
    });
    Verdict::from(same && bytes_equal, format!("{} artifacts compared by SHA-256 and bytes", manifests[0].files.len()))
}

fn criterion_12() -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for kind in ["laplacian", "pucci+"] {
        let cfg = contact_config(kind, "1/64");
        let run = solve(&cfg).unwrap();
        let mut two_cfg = cfg.clone();
        two_cfg.solve.mode = fblab::config::ModeKind::TwoPhase;
        let two = solve(&two_cfg).unwrap();
        let fb = free_boundary_points(&run.grid, &run.result.phase);
        let h = run.grid.h();
        let diff = run.result.phase.diff(&two.result.phase);
        let outside = diff
            .iter()
            .filter(|&&idx| {
                let x = run.grid.coords(idx);
                !fb.iter().any(|p| p.iter().zip(&x).all(|(a, b)| (a - b).abs() <= h * (1.0 + 1e-9)))
            })
            .count();
        ok &= two.result.converged && outside == 0;
        notes.push(format!(
            "{kind}: converged {}, {} differing labels, {outside} outside the band",
            two.result.converged,
            diff.len()
        ));
    }
    Verdict { status: if ok { Status::Pass } else { Status::SoftFail }, detail: notes.join("; ") }
}

fn main() {
    let start = Instant::now();
    // The heavy contact runs go first, on their own threads.
    let (fine, coarse) = std::thread::scope(|s| {
        let fine: Vec<_> = ["laplacian", "pucci+"].map(|k| s.spawn(move || contact_run(k, "1/128"))).into();
        let coarse: Vec<_> = ["laplacian", "pucci+"].map(|k| s.spawn(move || contact_run(k, "1/64"))).into();
        let join = |v: Vec<std::thread::ScopedJoinHandle<'_, ContactRun>>| {
            v.into_iter().map(|t| t.join().expect("contact run")).collect::<Vec<_>>()
        };
        (join(fine), join(coarse))
    });

    let verdicts: Vec<(&str, Verdict)> = vec![
        ("operator property suite", criterion_1()),
        ("scheme exactness on quadratics", criterion_2()),
        ("monotonicity", criterion_3()),
        ("half-space oracle reproduction", criterion_4()),
        ("1D free boundary location", criterion_5()),
        ("growth exponent and density (h=1/128)", criterion_6(&fine)),
        ("nondegeneracy quotient (h=1/128)", criterion_7(&fine)),
        ("dyadic sup table constant (h=1/128)", criterion_8(&fine)),
        ("tangency profile and cone (h=1/128)", criterion_9(&fine)),
        ("blow-up convergence (h=1/64)", criterion_10(&coarse)),
        ("reproducibility", criterion_11()),
        ("two-phase agreement (soft)", criterion_12()),
    ];

    let mut failed = 0;
    for (i, (name, v)) in verdicts.iter().enumerate() {
        let label = match v.status {
            Status::Pass => "PASS",
            Status::Fail => {
                failed += 1;
                "FAIL"
            }
            Status::Unattainable => "FAIL (unattainable)",
            Status::SoftFail => "SOFT FAIL",
        };
        println!("criterion {:>2} {label}: {name}: {}", i + 1, v.detail);
    }
    println!("acceptance finished in {:.1}s", start.elapsed().as_secs_f64());
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
