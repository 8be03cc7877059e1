//! Staged pipeline: solve, assemble, verify, transport to the annulus and
//! report. Also model persistence and CSV export.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annulus::{
    check_annulus_subharmonic, check_change_of_variables, check_chart_agreement, check_components,
    check_property_ii, check_ray_jump, extremes, polar_grid, radii, AnnulusPotential, Extremes, PropertyRow,
};
use crate::assembler::{build_glued, GluedPotential, HalfStripModel};
use crate::error::{Error, Result};
use crate::geometry::{Family, PeriodCell, Side};
use crate::laplace::{green_grid, Field, GreenField, Grid, SolveOptions};
use crate::verify::{run_strip_suite, stream_rng, CheckRecord, DecayTable, SuiteOptions};

/// Exit code of a run whose checks did not all pass.
pub const EXIT_CHECK_FAILURE: i32 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Denominator of the grid spacing `h = 1 / h_inverse`.
    pub h_inverse: u64,
    pub n_max: u32,
    pub tol: f64,
    pub max_sweeps: usize,
    pub epsilon: f64,
    pub line_samples: usize,
    pub radii_samples: usize,
    pub point_samples: usize,
    pub slack: f64,
    /// Fields written by `run` as `exports/<name>.csv`.
    pub exports: Vec<ExportKind>,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            h_inverse: 512,
            n_max: 4,
            tol: 1e-14,
            max_sweeps: 400_000,
            epsilon: 0.4,
            line_samples: 256,
            radii_samples: 50,
            point_samples: 10_000,
            slack: 0.1,
            exports: vec![ExportKind::Glued, ExportKind::Annulus],
            out_dir: PathBuf::from("out"),
        }
    }
}

fn parse_value<V: std::str::FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for key {key}")))
}

impl RunConfig {
    pub fn h(&self) -> f64 {
        1.0 / self.h_inverse as f64
    }

    /// Flat `key = value` text; `#` starts a comment. `h` accepts `1/512`
    /// or a decimal.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "h" => cfg.h_inverse = parse_spacing(value)?,
                "n_max" => cfg.n_max = parse_value(key, value)?,
                "tol" => cfg.tol = parse_value(key, value)?,
                "max_sweeps" => cfg.max_sweeps = parse_value(key, value)?,
                "epsilon" => cfg.epsilon = parse_value(key, value)?,
                "line_samples" => cfg.line_samples = parse_value(key, value)?,
                "radii_samples" => cfg.radii_samples = parse_value(key, value)?,
                "point_samples" => cfg.point_samples = parse_value(key, value)?,
                "slack" => cfg.slack = parse_value(key, value)?,
                "exports" => {
                    cfg.exports = value
                        .split(',')
                        .map(str::trim)
                        .filter(|v| !v.is_empty())
                        .map(str::parse)
                        .collect::<Result<_>>()?
                }
                "out_dir" => cfg.out_dir = PathBuf::from(value),
                other => return Err(Error::Config(format!("unknown key {other:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// The config as `parse` accepts it (output directory omitted).
    pub fn canonical(&self) -> String {
        format!(
            "h = 1/{}\nn_max = {}\ntol = {:e}\nmax_sweeps = {}\nepsilon = {}\nline_samples = {}\nradii_samples = {}\npoint_samples = {}\nslack = {}\nexports = {}\n",
            self.h_inverse,
            self.n_max,
            self.tol,
            self.max_sweeps,
            self.epsilon,
            self.line_samples,
            self.radii_samples,
            self.point_samples,
            self.slack,
            self.exports.iter().map(|e| e.name()).collect::<Vec<_>>().join(", ")
        )
    }

    /// Sample seed: the first eight bytes of the SHA-256 of [`Self::canonical`].
    pub fn seed(&self) -> u64 {
        let digest = Sha256::digest(self.canonical().as_bytes());
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        u64::from_le_bytes(bytes)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.h_inverse.is_power_of_two() || self.h_inverse < 4 {
            return Err(Error::Config(format!(
                "h = 1/{} is not the reciprocal of a power of two >= 4",
                self.h_inverse
            )));
        }
        // level-N_max squares need at least 8 cells per side
        let bound = 0.3 * f64::powi(2.0, -(self.n_max as i32)) / 4.0;
        if self.h() > bound {
            return Err(Error::Config(format!(
                "resolution bound h <= (3/10) 2^-N_max / 4 = {bound:e} violated by h = 1/{} with N_max = {}",
                self.h_inverse, self.n_max
            )));
        }
        // the one-sided normal derivatives need two cells between the
        // level-0 square and the top line, which are 1/30 apart
        if self.h() > 1.0 / 60.0 {
            return Err(Error::Config(format!(
                "h = 1/{} leaves fewer than two cells between the level-0 square and the top line (h <= 1/60)",
                self.h_inverse
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < std::f64::consts::FRAC_PI_4) {
            return Err(Error::Config(format!("epsilon = {} outside (0, π/4)", self.epsilon)));
        }
        let window = 4.0 * std::f64::consts::LN_2 / (3.0 * self.epsilon);
        if window < 1.5 {
            return Err(Error::Config(format!(
                "window length (4/(3ε)) log 2 = {window} below 1.5 for epsilon = {}",
                self.epsilon
            )));
        }
        if !(self.tol > 0.0) || self.max_sweeps == 0 {
            return Err(Error::Config("solver tolerance and sweep cap must be positive".into()));
        }
        if self.line_samples == 0 || self.radii_samples < 2 || self.point_samples < 4 {
            return Err(Error::Config("sample counts too small".into()));
        }
        if !(0.0..1.0).contains(&self.slack) {
            return Err(Error::Config(format!("slack = {} outside [0, 1)", self.slack)));
        }
        Ok(())
    }

    pub fn solve_options(&self) -> SolveOptions<f64> {
        SolveOptions::new(self.tol, self.max_sweeps)
    }

    pub fn suite_options(&self) -> SuiteOptions {
        SuiteOptions {
            seed: self.seed(),
            points: self.point_samples,
            line_samples: self.line_samples,
            slack: self.slack,
            ..SuiteOptions::default()
        }
    }
}

fn parse_spacing(value: &str) -> Result<u64> {
    let bad = || Error::Config(format!("invalid grid spacing {value:?}"));
    if let Some((num, den)) = value.split_once('/') {
        let (num, den): (u64, u64) = (num.trim().parse().map_err(|_| bad())?, den.trim().parse().map_err(|_| bad())?);
        if num != 1 {
            return Err(bad());
        }
        return Ok(den);
    }
    let h: f64 = value.parse().map_err(|_| bad())?;
    if !(h > 0.0) {
        return Err(bad());
    }
    let inv = (1.0 / h).round();
    if (1.0 / inv - h).abs() > 1e-15 * h {
        return Err(Error::Config(format!("grid spacing {value} is not a reciprocal integer")));
    }
    Ok(inv as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideConstants {
    pub m: f64,
    pub t: f64,
    pub beta: f64,
    /// Abscissa of the minimum of `u` on `Im z = 2/3` (frame).
    pub m_argmin: f64,
    pub du_min: f64,
    pub dg_max: f64,
    pub sweeps: usize,
    pub residual: f64,
}

impl SideConstants {
    fn of(model: &HalfStripModel<f64>) -> Self {
        Self {
            m: model.m,
            t: model.t,
            beta: model.beta,
            m_argmin: model.m_argmin,
            du_min: model.du_min,
            dg_max: model.dg_max,
            sweeps: model.base.sweeps,
            residual: model.base.residual,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub upper: SideConstants,
    pub lower: SideConstants,
    pub beta_tilde: f64,
    pub m_tilde: f64,
    pub c: f64,
    pub a_out: f64,
    pub lambda: f64,
    pub window: f64,
    pub w: Extremes,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub solve_s: f64,
    pub verify_s: f64,
    pub annulus_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub seed: u64,
    pub constants: Constants,
    pub checks: Vec<CheckRecord>,
    pub decay: DecayTable,
    pub property_ii: Vec<PropertyRow>,
    pub majorant_gaps: Vec<f64>,
    pub pass: bool,
    pub timing: Timing,
}

impl RunReport {
    /// Names of failing checks.
    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }

    /// JSON with the timing block zeroed (the deterministic part).
    pub fn deterministic_json(&self) -> String {
        let mut copy = self.clone();
        copy.timing = Timing {
            solve_s: 0.0,
            verify_s: 0.0,
            annulus_s: 0.0,
        };
        copy.config.out_dir = PathBuf::new();
        serde_json::to_string_pretty(&copy).expect("report serializes")
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            EXIT_CHECK_FAILURE
        }
    }
}

/// Annulus radial and angular sample counts for extremes and export.
const POLAR_GRID: (usize, usize) = (101, 720);

/// Verification and annulus stages on an assembled model.
pub fn verify_models(cfg: &RunConfig, glued: Arc<GluedPotential<f64>>, solve_s: f64) -> Result<RunReport> {
    let clock = Instant::now();
    let suite = run_strip_suite(&glued, &cfg.suite_options());
    let verify_s = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let pot = AnnulusPotential::new(glued.clone(), cfg.epsilon)?;
    let rs: Vec<f64> = radii(cfg.radii_samples);
    let seed = cfg.seed();
    let mut checks = suite.checks;
    let prop = check_property_ii(&pot, suite.decay.c, &rs, cfg.slack);
    checks.push(prop.record);
    checks.push(check_change_of_variables(&pot, &rs));
    checks.extend(check_components(
        &pot,
        cfg.point_samples,
        &mut stream_rng(seed, "annulus/components"),
    ));
    checks.extend(check_annulus_subharmonic(
        &pot,
        cfg.point_samples,
        &mut stream_rng(seed, "annulus/subharmonic"),
    ));
    checks.push(check_chart_agreement(&pot, cfg.radii_samples));
    checks.push(check_ray_jump(&pot));
    let w = extremes(&pot, POLAR_GRID.0, POLAR_GRID.1);
    let mut bounded = crate::verify::Worst::new();
    bounded.push(
        Complex::new(w.sup, w.inf),
        if w.sup.is_finite() && w.inf.is_finite() && w.sup <= w.sup_bound { 0.0 } else { -1.0 },
        0.0,
    );
    checks.push(CheckRecord::new(
        "annulus/bounded",
        format!(
            "sup and inf of w on a {}x{} polar grid finite, sup <= 1 + a 2^λ",
            POLAR_GRID.0, POLAR_GRID.1
        ),
        &bounded,
        0.0,
    ));
    let annulus_s = clock.elapsed().as_secs_f64();

    let constants = Constants {
        upper: SideConstants::of(&glued.upper),
        lower: SideConstants::of(&glued.lower),
        beta_tilde: glued.beta_tilde(),
        m_tilde: glued.m_tilde(),
        c: suite.decay.c,
        a_out: pot.a_out,
        lambda: pot.lambda,
        window: pot.window,
        w,
    };
    let pass = checks.iter().all(|c| c.pass);
    Ok(RunReport {
        config: cfg.clone(),
        seed,
        constants,
        checks,
        decay: suite.decay,
        property_ii: prop.rows,
        majorant_gaps: suite.majorant_gaps,
        pass,
        timing: Timing {
            solve_s,
            verify_s,
            annulus_s,
        },
    })
}

/// Solve and assemble.
pub fn build(cfg: &RunConfig) -> Result<(Arc<GluedPotential<f64>>, f64)> {
    cfg.validate()?;
    let clock = Instant::now();
    let glued = build_glued(cfg.h(), cfg.n_max, cfg.solve_options())?;
    Ok((Arc::new(glued), clock.elapsed().as_secs_f64()))
}

/// Full pipeline: solve, verify, write `report.json`, the models and the
/// configured exports into `out_dir`.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    let (glued, solve_s) = build(cfg)?;
    save_models(&glued, cfg, &cfg.out_dir.join("models"))?;
    let report = verify_models(cfg, glued.clone(), solve_s)?;
    write_report(&report, &cfg.out_dir.join("report.json"))?;
    for &kind in &cfg.exports {
        let rows = export_rows(&glued, cfg, kind)?;
        export_csv(&rows, kind, &cfg.out_dir.join("exports").join(format!("{}.csv", kind.name())))?;
    }
    Ok(report)
}

/// Re-run the checks on stored models.
pub fn verify_only(cfg: &RunConfig, models: &Path) -> Result<RunReport> {
    let glued = Arc::new(load_models(cfg, models)?);
    verify_models(cfg, glued, 0.0)
}

pub fn write_report(report: &RunReport, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(report)?)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub h_inverse: u64,
    pub n_max: u32,
    pub tol: f64,
    /// File name to SHA-256 (hex) of its bytes.
    pub files: BTreeMap<String, String>,
    pub sweeps: BTreeMap<String, usize>,
}

const MODEL_FILES: [&str; 3] = ["upper.bin", "lower.bin", "green.bin"];

fn encode(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

fn decode(bytes: &[u8], path: &Path) -> Result<Vec<f64>> {
    if bytes.len() % 8 != 0 {
        return Err(Error::Model {
            path: path.display().to_string(),
            reason: "length is not a multiple of 8".into(),
        });
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

/// Field samples as little-endian `f64` plus a manifest with checksums.
pub fn save_models(glued: &GluedPotential<f64>, cfg: &RunConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let fields = [
        (&glued.upper.base, MODEL_FILES[0]),
        (&glued.lower.base, MODEL_FILES[1]),
        (&glued.upper.green.regular, MODEL_FILES[2]),
    ];
    let mut files = BTreeMap::new();
    let mut sweeps = BTreeMap::new();
    for (field, name) in fields {
        let bytes = encode(field.values());
        files.insert(name.to_string(), hex::encode(Sha256::digest(&bytes)));
        sweeps.insert(name.to_string(), field.sweeps);
        fs::write(dir.join(name), bytes)?;
    }
    let manifest = Manifest {
        h_inverse: cfg.h_inverse,
        n_max: cfg.n_max,
        tol: cfg.tol,
        files,
        sweeps,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

/// Rebuild the model from stored samples; the constants are recomputed.
pub fn load_models(cfg: &RunConfig, dir: &Path) -> Result<GluedPotential<f64>> {
    let manifest_path = dir.join("manifest.json");
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?).map_err(|e| Error::Model {
        path: manifest_path.display().to_string(),
        reason: e.to_string(),
    })?;
    if manifest.h_inverse != cfg.h_inverse || manifest.n_max != cfg.n_max {
        return Err(Error::Model {
            path: manifest_path.display().to_string(),
            reason: format!(
                "models are for h = 1/{}, N_max = {}; config asks for h = 1/{}, N_max = {}",
                manifest.h_inverse, manifest.n_max, cfg.h_inverse, cfg.n_max
            ),
        });
    }
    let mut values = Vec::new();
    for name in MODEL_FILES {
        let path = dir.join(name);
        let bytes = fs::read(&path)?;
        let expected = manifest.files.get(name).ok_or_else(|| Error::Model {
            path: manifest_path.display().to_string(),
            reason: format!("no checksum for {name}"),
        })?;
        if &hex::encode(Sha256::digest(&bytes)) != expected {
            return Err(Error::Model {
                path: path.display().to_string(),
                reason: "checksum mismatch".into(),
            });
        }
        values.push(decode(&bytes, &path)?);
    }
    let h = cfg.h();
    let sweeps = |name: &str| manifest.sweeps.get(name).copied().unwrap_or(0);
    let field = |grid: Grid<f64>, vals: Vec<f64>, name: &str, label: &str| -> Result<Field<f64>> {
        if vals.len() != grid.len() {
            return Err(Error::Model {
                path: dir.join(name).display().to_string(),
                reason: format!("{} samples for a grid of {}", vals.len(), grid.len()),
            });
        }
        let grid = Arc::new(grid);
        let f = Field::new(grid.clone(), vals, label);
        let res = crate::laplace::residual(&grid, f.values());
        Ok(f.with_solve_info(res, sweeps(name)))
    };
    let mut it = values.into_iter();
    let upper = field(Grid::strip(&PeriodCell::new(Side::Upper, cfg.n_max), h)?, it.next().unwrap(), MODEL_FILES[0], "upper")?;
    let lower = field(Grid::strip(&PeriodCell::new(Side::Lower, cfg.n_max), h)?, it.next().unwrap(), MODEL_FILES[1], "lower")?;
    let center = Complex::new(0.0, 1.0);
    let half = Family::SPlus.base_half_side::<f64>();
    let regular = field(green_grid(center, half, h), it.next().unwrap(), MODEL_FILES[2], "green-regular")?;
    let green = Arc::new(GreenField::from_regular(center, half, regular));
    Ok(GluedPotential::new(
        HalfStripModel::from_fields(Side::Upper, cfg.n_max, upper, green.clone())?,
        HalfStripModel::from_fields(Side::Lower, cfg.n_max, lower, green)?,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportKind {
    Upper,
    Lower,
    Glued,
    Annulus,
}

impl ExportKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Upper => "upper",
            Self::Lower => "lower",
            Self::Glued => "glued",
            Self::Annulus => "annulus",
        }
    }
}

impl std::str::FromStr for ExportKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upper" => Ok(Self::Upper),
            "lower" => Ok(Self::Lower),
            "glued" => Ok(Self::Glued),
            "annulus" => Ok(Self::Annulus),
            other => Err(Error::Config(format!("unknown export {other:?} (upper, lower, glued, annulus)"))),
        }
    }
}

/// Rows of the export: base fields node by node in strip coordinates, the
/// glued potential at the nodes of both halves, the annulus on a polar grid.
pub fn export_rows(glued: &Arc<GluedPotential<f64>>, cfg: &RunConfig, which: ExportKind) -> Result<Vec<(f64, f64, f64)>> {
    let nodes = |side: Side| {
        let base = &glued.model(side).base;
        let g = base.grid();
        let sign = match side {
            Side::Upper => 1.0,
            Side::Lower => -1.0,
        };
        (0..g.len()).map(move |p| (g.x(p % g.nx), sign * g.y(p / g.nx), base.values()[p]))
    };
    Ok(match which {
        ExportKind::Upper => nodes(Side::Upper).collect(),
        ExportKind::Lower => nodes(Side::Lower).collect(),
        ExportKind::Glued => nodes(Side::Upper)
            .chain(nodes(Side::Lower).filter(|r| r.1 < 0.0))
            .map(|(x, y, _)| (x, y, glued.evaluate(Complex::new(x, y))))
            .collect(),
        ExportKind::Annulus => {
            let pot = AnnulusPotential::new(glued.clone(), cfg.epsilon)?;
            polar_grid(&pot, POLAR_GRID.0, POLAR_GRID.1)
        }
    })
}

/// CSV with header `x,y,value` (strip) or `re,im,value` (annulus); numbers
/// in shortest round-trip form.
pub fn export_csv(rows: &[(f64, f64, f64)], which: ExportKind, path: &Path) -> Result<()> {
    let header = match which {
        ExportKind::Annulus => "re,im,value",
        _ => "x,y,value",
    };
    let mut out = String::with_capacity(rows.len() * 48);
    out.push_str(header);
    out.push('\n');
    for (a, b, v) in rows {
        out.push_str(&format!("{a},{b},{v}\n"));
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, out)?;
    Ok(())
}

/// Parse an export written by [`export_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<(f64, f64, f64)>> {
    let text = fs::read_to_string(path)?;
    let bad = |line: usize| Error::Model {
        path: path.display().to_string(),
        reason: format!("malformed row {line}"),
    };
    text.lines()
        .enumerate()
        .skip(1)
        .map(|(i, line)| {
            let mut parts = line.split(',').map(|s| s.parse::<f64>());
            match (parts.next(), parts.next(), parts.next(), parts.next()) {
                (Some(Ok(a)), Some(Ok(b)), Some(Ok(v)), None) => Ok((a, b, v)),
                _ => Err(bad(i + 1)),
            }
        })
        .collect()
}
