//! Acceptance suite: one PASS/FAIL line per criterion. Any failure makes
//! the process exit nonzero.

mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use num_complex::Complex;
use num_rational::Ratio;
use rand::Rng;
use subharm::geometry::{
    line_intersection_length, locate_square, projections_cover_period, Family, PeriodCell, Side,
};
use subharm::laplace::{green_square, solve_dirichlet};
use subharm::pipeline::{load_models, RunConfig, RunReport};
use subharm::verify::{discretization_tolerance, stream_rng, RADII_FACTORS};
use subharm::{Coord, Rational};

const EMPTY_STRIP_H: f64 = 1.0 / 256.0;
const EMPTY_STRIP_TOL: f64 = 1e-6;
const EMPTY_STRIP_SECONDS: f64 = 30.0;
const GREEN_H: f64 = 1.0 / 512.0;
const GREEN_PROBES: usize = 20;
const GREEN_POLE_DISTANCE: f64 = 0.1;
const GREEN_SECONDS: f64 = 60.0;
const WOS_WALKS: usize = 1_000_000;
const WOS_SHELL: f64 = 1e-8;
const WOS_PROBES: [(f64, f64); 5] = [(0.5, 0.68), (0.5, 1.0), (0.1, 1.32), (0.125, 0.2), (0.28, 0.05)];
const CONSTANT_DRIFT: f64 = 0.01;
const MIN_SAMPLES: usize = 10_000;
const COVERING_LEVELS: u32 = 6;
const COVERING_LINES: usize = 10_000;
const COVERING_SECONDS: f64 = 1.0;
const DECAY_LEVELS: u32 = 4;
const DECAY_LINES: usize = 256;
const C_DRIFT: f64 = 0.05;
const RADII: usize = 50;
const MAJORANT_LEVELS: u32 = 3;

struct Verdict {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_subharm")
}

fn cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(binary()).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn read_report(path: &Path) -> RunReport {
    serde_json::from_str(&fs::read_to_string(path).expect("report written")).expect("report parses")
}

/// `run` into `dir`; returns the exit code and the report.
fn run(config: &str, dir: &Path) -> (i32, RunReport) {
    let (code, err) = cli(&["run", "--config", config, "--out", dir.to_str().unwrap()]);
    assert!(dir.join("report.json").exists(), "run failed with {code}: {err}");
    (code, read_report(&dir.join("report.json")))
}

fn check<'a>(report: &'a RunReport, name: &str) -> &'a subharm::verify::CheckRecord {
    report
        .checks
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("report has no check {name}"))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

fn empty_strip() -> Verdict {
    let clock = Instant::now();
    let f = solve_dirichlet(&PeriodCell::empty(Side::Upper), EMPTY_STRIP_H, RunConfig::default().solve_options())
        .expect("empty strip solves");
    let secs = clock.elapsed().as_secs_f64();
    let g = f.grid();
    let mut err: f64 = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            err = err.max((f.node(i, j) - common::empty_strip(g.y(j))).abs());
        }
    }
    Verdict {
        id: 1,
        title: "oracle: squares-free strip reproduces 3y/4",
        pass: err <= EMPTY_STRIP_TOL && secs <= EMPTY_STRIP_SECONDS,
        detail: format!("max node error {err:.2e} <= {EMPTY_STRIP_TOL:.0e} at h = 1/256, {secs:.1} s <= {EMPTY_STRIP_SECONDS} s"),
    }
}

fn green_oracle() -> Verdict {
    let clock = Instant::now();
    let (center, half) = (Complex::new(0.0, 1.0), 0.3);
    let g = green_square(center, half, GREEN_H, RunConfig::default().solve_options()).expect("green solves");
    let mut rng = stream_rng(0, "acceptance/green");
    let tol = 5.0 * GREEN_H * GREEN_H;
    let (mut worst, mut probes) = (f64::INFINITY, 0);
    while probes < GREEN_PROBES {
        let d = Complex::new(half * (2.0 * rng.gen::<f64>() - 1.0), half * (2.0 * rng.gen::<f64>() - 1.0));
        if d.norm() < GREEN_POLE_DISTANCE {
            continue;
        }
        probes += 1;
        let (series, tail) = common::green_series(2.0 * half, d.re + half, d.im + half, half, half, 400);
        worst = worst.min(tol + tail - (g.value(center + d) - series).abs());
    }
    let secs = clock.elapsed().as_secs_f64();
    Verdict {
        id: 2,
        title: "oracle: Green function of the 3/5 square against its sine series",
        pass: worst >= 0.0 && secs <= GREEN_SECONDS,
        detail: format!(
            "{GREEN_PROBES} probes at distance >= {GREEN_POLE_DISTANCE}, worst slack {worst:.2e} in 5h^2 + tail (5h^2 = {tol:.2e}), {secs:.1} s"
        ),
    }
}

fn walk_on_spheres(models: &Path) -> Verdict {
    let cfg = RunConfig::default();
    let glued = load_models(&cfg, models).expect("models load");
    let base = &glued.upper.base;
    let tol = discretization_tolerance(cfg.h());
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, (x, y)) in WOS_PROBES.into_iter().enumerate() {
        let z = Complex::new(x, y);
        assert!(locate_square(&z, &[Family::SPlus], cfg.n_max).is_none(), "probe {z} inside a square");
        let (mean, sigma) = common::walk_on_spheres(x, y, cfg.n_max, WOS_WALKS, WOS_SHELL, 1000 + k as u64);
        let err = (base.value_at(x, y) - mean).abs();
        let bound = 3.0 * sigma + tol;
        pass &= err <= bound;
        parts.push(format!("{err:.1e}/{bound:.1e}"));
    }
    Verdict {
        id: 3,
        title: "oracle: perforated Dirichlet solve against walk on spheres",
        pass,
        detail: format!("{WOS_WALKS} walks, |fd - wos| / (3σ + 10h²) at 5 probes: {}", parts.join(", ")),
    }
}

fn constants(a: &RunReport, b: &RunReport) -> Verdict {
    let (ca, cb) = (&a.constants, &b.constants);
    let pairs = [
        ("M", ca.upper.m, cb.upper.m),
        ("M1", ca.lower.m, cb.lower.m),
        ("t", ca.upper.t, cb.upper.t),
        ("beta", ca.upper.beta, cb.upper.beta),
        ("beta1", ca.lower.beta, cb.lower.beta),
    ];
    let drifts: Vec<String> = pairs.iter().map(|(n, x, y)| format!("{n} {:.2}%", 100.0 * rel(*x, *y))).collect();
    let worst = pairs.iter().map(|(_, x, y)| rel(*x, *y)).fold(0.0, f64::max);
    Verdict {
        id: 4,
        title: "constants stable between h = 1/512 and h = 1/1024",
        pass: worst <= CONSTANT_DRIFT && ca.upper.m > 1.0 && ca.lower.m > 1.0,
        detail: format!(
            "M = {:.4e}, M1 = {:.4e}; drift {} (limit {}%)",
            ca.upper.m,
            ca.lower.m,
            drifts.join(", "),
            100.0 * CONSTANT_DRIFT
        ),
    }
}

fn inequalities(a: &RunReport) -> Verdict {
    let names = [
        "periodicity",
        "intermediate/upper",
        "intermediate/lower",
        "selfsimilarity/upper",
        "selfsimilarity/lower",
        "negative",
        "u1negative",
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for name in names {
        let c = check(a, name);
        pass &= c.pass && c.samples >= MIN_SAMPLES && c.margin >= -c.tolerance;
        parts.push(format!("{name} {:.1e} ({})", c.margin, c.samples));
    }
    Verdict {
        id: 5,
        title: "inequality suite, margins >= -10h^2",
        pass,
        detail: format!("tol {:.2e}; {}", discretization_tolerance(a.config.h()), parts.join(", ")),
    }
}

fn subharmonicity(a: &RunReport) -> Verdict {
    let strata = ["subharmonic/d0", "subharmonic/squares", "subharmonic/boundaries", "subharmonic/real-axis"];
    let mut pass = RADII_FACTORS == [2.0, 4.0, 8.0];
    let mut tests = 0;
    let mut worst = f64::INFINITY;
    for name in strata {
        let c = check(a, name);
        pass &= c.pass;
        tests += c.samples;
        worst = worst.min(c.margin);
    }
    pass &= tests >= MIN_SAMPLES;
    for n in 0..=MAJORANT_LEVELS {
        pass &= check(a, &format!("majorant/{n}")).pass;
    }
    let decreasing = a.majorant_gaps.windows(2).all(|w| w[1] < w[0]);
    pass &= decreasing && check(a, "majorant/decreasing").pass && a.majorant_gaps.len() as u32 > MAJORANT_LEVELS;
    Verdict {
        id: 6,
        title: "subharmonicity and the v_n majorants",
        pass,
        detail: format!(
            "{tests} sub-mean tests, worst margin {worst:.2e} (tol {:.2e}); sup(v_n - u) = {:?}",
            discretization_tolerance(a.config.h()),
            a.majorant_gaps.iter().map(|g| format!("{g:.2e}")).collect::<Vec<_>>()
        ),
    }
}

fn covering() -> Verdict {
    let clock = Instant::now();
    let exact = (0..=COVERING_LEVELS).all(|n| projections_cover_period(n).is_ok());
    let mut rng = stream_rng(0, "acceptance/covering");
    let mut short = 0;
    for _ in 0..COVERING_LINES {
        let x0: Rational = Ratio::new(rng.gen_range(0..1i128 << 40), 1i128 << 40);
        for n in 0..=COVERING_LEVELS {
            if line_intersection_length(&x0, n) < Ratio::new(4, 7) * Rational::dyadic(n) {
                short += 1;
            }
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    Verdict {
        id: 7,
        title: "exact covering of [0, 1) by the K projections",
        pass: exact && short == 0 && secs <= COVERING_SECONDS,
        detail: format!(
            "levels 0..={COVERING_LEVELS} exact: {exact}; {COVERING_LINES} random lines, {short} short chords; {secs:.3} s"
        ),
    }
}

fn decay(a: &RunReport, fine: &RunReport, doubled: &RunReport) -> Verdict {
    let rows_ok = a.decay.rows.len() as u32 == DECAY_LEVELS + 1 && a.decay.rows.iter().enumerate().all(|(n, r)| r.n as usize == n);
    let bound = check(a, "decay/bound");
    let (c, c_fine, c_doubled) = (a.decay.c, fine.decay.c, doubled.decay.c);
    let same_flags = a.checks.iter().zip(&doubled.checks).all(|(x, y)| x.name == y.name && x.pass == y.pass);
    let pass = rows_ok
        && bound.pass
        && a.decay.lines >= DECAY_LINES
        && c > 1.0
        && rel(c, c_fine) <= C_DRIFT
        && rel(c, c_doubled) <= C_DRIFT
        && same_flags;
    Verdict {
        id: 8,
        title: "line-integral decay and a stable constant c",
        pass,
        detail: format!(
            "{} lines x n = 0..={DECAY_LEVELS}, bound margin {:.1e}; c = {c:.4e}, h/2: {c_fine:.4e} ({:.1}%), doubled lines: {c_doubled:.4e} ({:.2}%, flags equal: {same_flags}), limit {}%",
            a.decay.lines,
            bound.margin,
            100.0 * rel(c, c_fine),
            100.0 * rel(c, c_doubled),
            100.0 * C_DRIFT
        ),
    }
}

fn annulus(a: &RunReport) -> Verdict {
    let names = [
        "annulus/bounded",
        "annulus/subharmonic",
        "annulus/subharmonic-rays",
        "annulus/components-negative",
        "annulus/components-nonnegative-outside",
        "annulus/components-continuity",
        "annulus/components-disjoint",
        "annulus/property-ii",
    ];
    let failing: Vec<&str> = names.iter().copied().filter(|n| !check(a, n).pass).collect();
    let w = &a.constants.w;
    let levels: Vec<u32> = a.property_ii.iter().map(|r| r.n).collect();
    let pass = failing.is_empty()
        && w.sup.is_finite()
        && w.inf.is_finite()
        && a.config.radii_samples == RADII
        && levels == (1..=DECAY_LEVELS).collect::<Vec<_>>();
    Verdict {
        id: 9,
        title: "statement B on the annulus",
        pass,
        detail: format!(
            "w in [{:.3e}, {:.3e}]; property (ii) on {} radii for n = {levels:?}, margin {:.1e}; failing: {failing:?}",
            w.inf,
            w.sup,
            a.config.radii_samples,
            check(a, "annulus/property-ii").margin
        ),
    }
}

fn contract(code_a: i32, a: &RunReport, code_b: i32, b: &RunReport, scratch: &Path) -> Verdict {
    let identical = a.deterministic_json() == b.deterministic_json();
    let expected = if a.pass { 0 } else { 3 };
    let cfg = write(scratch, "resolution.txt", "h = 1/512\nn_max = 6\n");
    let (config_code, msg) = cli(&["run", "--config", &cfg, "--out", scratch.join("x").to_str().unwrap()]);
    let cfg = write(scratch, "stall.txt", "h = 1/64\nn_max = 1\ntol = 1e-30\nmax_sweeps = 10\n");
    let (solver_code, _) = cli(&["run", "--config", &cfg, "--out", scratch.join("y").to_str().unwrap()]);
    let cfg = write(scratch, "coarse.txt", "h = 1/64\nn_max = 1\nexports =\n");
    let (check_code, _) = cli(&["run", "--config", &cfg, "--out", scratch.join("z").to_str().unwrap()]);
    let coarse = read_report(&scratch.join("z").join("report.json"));
    let pass = identical
        && code_a == expected
        && code_b == expected
        && config_code == 1
        && msg.contains("resolution bound")
        && solver_code == 2
        && check_code == 3
        && !coarse.pass;
    Verdict {
        id: 10,
        title: "determinism and exit codes",
        pass,
        detail: format!(
            "reports identical modulo timing: {identical}; exit codes default {code_a}, config {config_code}, solver {solver_code}, check failure {check_code}"
        ),
    }
}

fn main() -> ExitCode {
    let scratch = tempfile::tempdir().expect("temp dir");
    let root = scratch.path();
    let mut verdicts = Vec::new();
    let mut emit = |v: Verdict| {
        println!(
            "criterion {:>2}  {}  {}: {}",
            v.id,
            if v.pass { "PASS" } else { "FAIL" },
            v.title,
            v.detail
        );
        verdicts.push((v.id, v.pass));
    };

    emit(empty_strip());
    emit(green_oracle());
    emit(covering());

    let default_cfg = write(root, "default.txt", "# defaults\n");
    let dir_a: PathBuf = root.join("default-a");
    let (code_a, a) = run(&default_cfg, &dir_a);
    let (code_b, b) = run(&default_cfg, &root.join("default-b"));
    let fine_cfg = write(root, "fine.txt", "h = 1/1024\nexports =\n");
    let (_, fine) = run(&fine_cfg, &root.join("fine"));
    let doubled_cfg = write(root, "doubled.txt", &format!("line_samples = {}\n", 2 * DECAY_LINES));
    let doubled_path = root.join("doubled.json");
    let (code, err) = cli(&[
        "verify",
        "--config",
        &doubled_cfg,
        "--models",
        dir_a.join("models").to_str().unwrap(),
        "--out",
        doubled_path.to_str().unwrap(),
    ]);
    assert!(code == 0 || code == 3, "verify failed with {code}: {err}");
    let doubled = read_report(&doubled_path);

    emit(walk_on_spheres(&dir_a.join("models")));
    emit(constants(&a, &fine));
    emit(inequalities(&a));
    emit(subharmonicity(&a));
    emit(decay(&a, &fine, &doubled));
    emit(annulus(&a));
    emit(contract(code_a, &a, code_b, &b, root));

    verdicts.sort();
    let passed = verdicts.iter().filter(|v| v.1).count();
    let failed: Vec<u32> = verdicts.iter().filter(|v| !v.1).map(|v| v.0).collect();
    println!("{passed}/{} criteria pass", verdicts.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {failed:?}");
        ExitCode::FAILURE
    }
}
