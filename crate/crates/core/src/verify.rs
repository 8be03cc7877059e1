//! Named checks with signed margins, the line-integral decay table and the
//! decay base `c`.
//!
//! Every check reduces an inequality to a margin that is nonnegative when the
//! inequality holds. A check passes when its worst margin is at least
//! `-tolerance`; margins in `[-tolerance, 0)` are reported as
//! [`Status::PassDiscretization`].

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assembler::{outward_side_profiles, GluedPotential, HalfStripModel};
use crate::geometry::{
    check_disjoint, check_disjoint_squares, line_intersection_length, projections_cover_period, strip_height,
    vertical_chords, Family, PeriodCell, Side, SquareSpec,
};
use crate::laplace::{sub_mean_test, EdgeProfile, Potential};
use crate::scalar::{rational_from_f64, rational_to_scalar, Rational, Scalar};

/// Additive tolerance `10 h^2` for continuum inequalities.
pub fn discretization_tolerance(h: f64) -> f64 {
    10.0 * h * h
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "pass (discretization)")]
    PassDiscretization,
    #[serde(rename = "fail")]
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub quantifier: String,
    pub samples: usize,
    /// Worst signed margin.
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub status: Status,
    /// Point (strip coordinates) where the worst margin occurred.
    pub witness: Option<[f64; 2]>,
    /// Worst margin relative to the size of the compared quantities.
    pub scaled_margin: Option<f64>,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, quantifier: impl Into<String>, worst: &Worst, tolerance: f64) -> Self {
        let margin = worst.margin;
        let status = if margin >= 0.0 {
            Status::Pass
        } else if margin >= -tolerance {
            Status::PassDiscretization
        } else {
            Status::Fail
        };
        Self {
            name: name.into(),
            quantifier: quantifier.into(),
            samples: worst.count,
            margin,
            tolerance,
            pass: status != Status::Fail,
            status,
            witness: worst.witness,
            scaled_margin: worst.scaled.is_finite().then_some(worst.scaled),
        }
    }

    /// Boolean check without a meaningful witness (margin 0 or -1).
    pub fn exact(name: impl Into<String>, quantifier: impl Into<String>, ok: bool, samples: usize) -> Self {
        let mut w = Worst::new();
        w.count = samples;
        w.margin = if ok { 0.0 } else { -1.0 };
        Self::new(name, quantifier, &w, 0.0)
    }
}

/// Running minimum of margins. A `NaN` margin is a hard failure.
#[derive(Clone, Debug)]
pub struct Worst {
    pub margin: f64,
    pub witness: Option<[f64; 2]>,
    pub scaled: f64,
    pub count: usize,
}

impl Default for Worst {
    fn default() -> Self {
        Self::new()
    }
}

impl Worst {
    pub fn new() -> Self {
        Self {
            margin: f64::INFINITY,
            witness: None,
            scaled: f64::INFINITY,
            count: 0,
        }
    }

    /// Record `margin` at `z`; `scale` is the natural size of the compared
    /// quantities (zero disables the scaled margin for this sample).
    pub fn push<T: Scalar>(&mut self, z: Complex<T>, margin: T, scale: T) {
        let m = margin.to_f64().unwrap_or(f64::NAN);
        let m = if m.is_nan() { f64::NEG_INFINITY } else { m };
        self.count += 1;
        if m < self.margin || self.witness.is_none() {
            self.margin = m.min(self.margin);
            if m <= self.margin {
                self.witness = Some([z.re.as_f64(), z.im.as_f64()]);
            }
        }
        let s = scale.to_f64().unwrap_or(0.0).abs();
        if s > 0.0 && s.is_finite() {
            self.scaled = self.scaled.min(m / s);
        }
    }

    pub fn merge(&mut self, other: &Worst) {
        if other.margin < self.margin || self.witness.is_none() {
            self.margin = other.margin;
            self.witness = other.witness;
        }
        self.scaled = self.scaled.min(other.scaled);
        self.count += other.count;
    }
}

/// Independent deterministic stream for the check `name`.
pub fn stream_rng(seed: u64, name: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(name.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 32];
    bytes.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(bytes)
}

/// Dyadic bands `[H 2^-(b+1), H 2^-b)` for `b < bands - 1`, then `[0, H 2^-(bands-1))`.
fn bands(count: usize) -> Vec<(f64, f64)> {
    let top = strip_height::<f64>();
    (0..count)
        .map(|b| {
            let hi = top / f64::powi(2.0, b as i32);
            let lo = if b + 1 == count { 0.0 } else { hi / 2.0 };
            (lo, hi)
        })
        .collect()
}

/// Jittered stratified samples: `count` points spread evenly over the bands,
/// each band split into equal x bins over `[0, 1)`. A rejected draw is
/// redrawn in the same stratum up to 64 times; strata that stay empty (bins
/// covered by a square) are made up by further sweeps over all strata.
fn stratified(
    rng: &mut ChaCha8Rng,
    count: usize,
    bands: &[(f64, f64)],
    accept: impl Fn(f64, f64) -> bool,
) -> Vec<(f64, f64)> {
    let per_band = count.div_ceil(bands.len());
    let mut out = Vec::with_capacity(count);
    for _sweep in 0..64 {
        for &(lo, hi) in bands {
            for bin in 0..per_band {
                for _ in 0..64 {
                    let x = (bin as f64 + rng.gen::<f64>()) / per_band as f64;
                    let y = lo + (hi - lo) * rng.gen::<f64>();
                    if y > 0.0 && accept(x, y) {
                        out.push((x, y));
                        break;
                    }
                }
                if out.len() == count {
                    return out;
                }
            }
        }
    }
    out
}

fn c<T: Scalar>(x: f64, y: f64) -> Complex<T> {
    Complex::new(T::lit(x), T::lit(y))
}

fn frame_to_strip(side: Side, x: f64, y: f64) -> (f64, f64) {
    match side {
        Side::Upper => (x, y),
        Side::Lower => (x, -y),
    }
}

/// Frame points of `D_0` of one half strip: outside every modelled square,
/// strictly between the real axis and the top line.
pub fn d0_points<T: Scalar>(model: &HalfStripModel<T>, count: usize, rng: &mut ChaCha8Rng) -> Vec<Complex<T>> {
    let side = model.side;
    stratified(rng, count, &bands(model.n_max as usize + 2), |x, y| {
        let (sx, sy) = frame_to_strip(side, x, y);
        y < strip_height::<f64>() && model.square_at(c::<T>(sx, sy)).is_none()
    })
    .into_iter()
    .map(|(x, y)| c(x, y))
    .collect()
}

/// Uniform random square of `family` at a level `<= n_max` (levels equally
/// likely), translation index within one period.
fn random_square(rng: &mut ChaCha8Rng, family: Family, n_max: u32) -> SquareSpec {
    let n = rng.gen_range(0..=n_max);
    let k = rng.gen_range(0..(1i64 << n));
    SquareSpec::new(family, n, k)
}

fn square_interior_point(rng: &mut ChaCha8Rng, sq: &SquareSpec) -> (f64, f64) {
    let cen = sq.center::<f64>();
    let a = sq.half_side::<f64>();
    (
        cen.re + a * (2.0 * rng.gen::<f64>() - 1.0),
        cen.im + a * (2.0 * rng.gen::<f64>() - 1.0),
    )
}

/// Uniform point on the perimeter with its outward unit normal.
fn square_boundary_point(rng: &mut ChaCha8Rng, sq: &SquareSpec) -> ((f64, f64), (f64, f64)) {
    let cen = sq.center::<f64>();
    let a = sq.half_side::<f64>();
    let s = a * (2.0 * rng.gen::<f64>() - 1.0);
    match rng.gen_range(0..4) {
        0 => ((cen.re + s, cen.im - a), (0.0, -1.0)),
        1 => ((cen.re + s, cen.im + a), (0.0, 1.0)),
        2 => ((cen.re - a, cen.im + s), (-1.0, 0.0)),
        _ => ((cen.re + a, cen.im + s), (1.0, 0.0)),
    }
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Upper => "upper",
        Side::Lower => "lower",
    }
}

/// `|u(z + 1) - u(z)| <= 10 h^2` on stratified points of the whole strip.
pub fn check_periodicity<T: Scalar>(glued: &GluedPotential<T>, count: usize, rng: &mut ChaCha8Rng) -> CheckRecord {
    let tol = discretization_tolerance(glued.h().as_f64());
    let mut worst = Worst::new();
    for side in [Side::Upper, Side::Lower] {
        for (x, y) in stratified(rng, count / 2, &bands(glued.n_max() as usize + 2), |_, _| true) {
            let (sx, sy) = frame_to_strip(side, x, y);
            let z = c::<T>(sx, sy);
            let (a, b) = (glued.evaluate(z), glued.evaluate(z + T::one()));
            worst.push(z, -(b - a).abs(), a.abs().max(b.abs()));
        }
    }
    CheckRecord::new(
        "periodicity",
        format!("{} stratified points of the strip, u(z+1) against u(z)", worst.count),
        &worst,
        tol,
    )
}

/// `u(z) <= M u(z/2)` on stratified points of `D_0`.
pub fn check_intermediate<T: Scalar>(model: &HalfStripModel<T>, count: usize, rng: &mut ChaCha8Rng) -> CheckRecord {
    let tol = discretization_tolerance(model.h().as_f64());
    let mut worst = Worst::new();
    for w in d0_points(model, count, rng) {
        let margin = model.intermediate_margin(w);
        worst.push(model.to_frame(w), margin, model.base_value(w));
    }
    CheckRecord::new(
        format!("intermediate/{}", side_name(model.side)),
        format!("{} stratified points of D0, M u(z/2) - u(z)", worst.count),
        &worst,
        tol,
    )
}

/// `u(γ_{n,k} z) >= M^-n u(z)` for random `1 <= n <= N_max`, `k` in one period.
pub fn check_selfsimilarity<T: Scalar>(model: &HalfStripModel<T>, count: usize, rng: &mut ChaCha8Rng) -> CheckRecord {
    let tol = discretization_tolerance(model.h().as_f64());
    let mut worst = Worst::new();
    let points = d0_points(model, count, rng);
    for w in points {
        let n = rng.gen_range(1..=model.n_max.max(1));
        let k = rng.gen_range(0..(1i64 << n));
        let margin = model.selfsimilar_margin(n, k, w);
        worst.push(model.to_frame(w), margin, model.scale(n) * model.base_value(w));
    }
    CheckRecord::new(
        format!("selfsimilarity/{}", side_name(model.side)),
        format!(
            "{} stratified points of D0 with random (n, k), 1 <= n <= {}",
            worst.count, model.n_max
        ),
        &worst,
        tol,
    )
}

/// `u <= -β M^-n` on every core square of one side at levels `<= N_max`:
/// uniform interior samples plus the four corners of each square.
pub fn check_negative_bounds<T: Scalar>(
    glued: &GluedPotential<T>,
    side: Side,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> CheckRecord {
    let model = glued.model(side);
    let tol = discretization_tolerance(glued.h().as_f64());
    let cell = PeriodCell::with_family(Family::core(side), model.n_max);
    let per_square = (count / cell.squares.len()).max(1);
    let mut worst = Worst::new();
    for sq in &cell.squares {
        let bound = model.beta * model.scale(sq.n);
        let cen = sq.center::<f64>();
        let a = sq.half_side::<f64>();
        let corners = [(-a, -a), (-a, a), (a, -a), (a, a)].map(|(dx, dy)| (cen.re + dx, cen.im + dy));
        let interior = (0..per_square).map(|_| square_interior_point(rng, sq));
        for (x, y) in corners.into_iter().chain(interior) {
            let z = c::<T>(x, y);
            worst.push(z, -bound - glued.evaluate(z), bound);
        }
    }
    let (label, constants) = match side {
        Side::Upper => ("negative", "β M^-n"),
        Side::Lower => ("u1negative", "β1 M1^-n"),
    };
    CheckRecord::new(
        label,
        format!(
            "{} points over all {} core squares of levels <= {}, u <= -{constants}",
            worst.count,
            cell.squares.len(),
            model.n_max
        ),
        &worst,
        tol,
    )
}

/// Radii as multiples of `h` used by the sub-mean test.
pub const RADII_FACTORS: [f64; 3] = [2.0, 4.0, 8.0];
/// Circle nodes for the sub-mean test.
pub const CIRCLE_NODES: usize = 64;

/// Sub-mean-value margins on four strata: `D_0`, square interiors, square
/// boundaries (where the normal derivative jumps) and the real axis.
/// `count` centers in total, each tested at every radius.
pub fn check_subharmonic<T: Scalar>(
    glued: &GluedPotential<T>,
    radii: &[T],
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<CheckRecord> {
    let tol = discretization_tolerance(glued.h().as_f64());
    let per = count / 4;
    let n_max = glued.n_max();

    let mut centers: Vec<(&str, Vec<(f64, f64)>)> = Vec::new();
    let mut d0 = Vec::new();
    for side in [Side::Upper, Side::Lower] {
        let model = glued.model(side);
        for w in d0_points(model, per / 2, rng) {
            d0.push(frame_to_strip(side, w.re.as_f64(), w.im.as_f64()));
        }
    }
    centers.push(("d0", d0));

    let families = [Family::SPlus, Family::SMinus];
    let interior = (0..per)
        .map(|s| {
            let sq = random_square(rng, families[s % 2], n_max);
            square_interior_point(rng, &sq)
        })
        .collect();
    centers.push(("squares", interior));

    let boundary = (0..per)
        .map(|s| {
            let sq = random_square(rng, families[s % 2], n_max);
            square_boundary_point(rng, &sq).0
        })
        .collect();
    centers.push(("boundaries", boundary));

    let axis = (0..per).map(|s| ((s as f64 + rng.gen::<f64>()) / per as f64, 0.0)).collect();
    centers.push(("real-axis", axis));

    let radii_label = RADII_FACTORS.map(|f| format!("{f}h")).join(", ");
    centers
        .into_iter()
        .map(|(name, pts)| {
            let mut worst = Worst::new();
            for (x, y) in pts {
                let z = c::<T>(x, y);
                // radii whose disk leaves the strip are skipped
                for &r in radii.iter().filter(|r| glued.contains_disk(z, **r)) {
                    let margin = sub_mean_test(glued, z, r, CIRCLE_NODES).unwrap_or(T::nan());
                    let scale = glued.evaluate(z).abs().max(glued.evaluate(z + Complex::new(r, T::zero())).abs());
                    worst.push(z, margin, scale);
                }
            }
            CheckRecord::new(
                format!("subharmonic/{name}"),
                format!(
                    "{} sub-mean tests ({name} centers, radii {radii_label} where the disk fits, {CIRCLE_NODES} nodes)",
                    worst.count
                ),
                &worst,
                tol,
            )
        })
        .collect()
}

/// Data on the lines `Im z = ± height` continued harmonically into the strip
/// between them, periodic with period one (truncated Fourier series).
#[derive(Clone, Debug)]
pub struct Majorant {
    pub height: f64,
    upper: Vec<Complex<f64>>,
    lower: Vec<Complex<f64>>,
}

/// `sinh(a) / sinh(b)` for `0 <= a <= b`, without overflow.
fn sinh_ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        return 1.0;
    }
    (a - b).exp() * (-(-2.0 * a).exp_m1()) / (-(-2.0 * b).exp_m1())
}

impl Majorant {
    /// From samples at `x_j = j / N` on the upper and lower line.
    pub fn from_lines(height: f64, upper: &[f64], lower: &[f64]) -> Self {
        assert_eq!(upper.len(), lower.len());
        let n = upper.len();
        let fft = FftPlanner::new().plan_fft_forward(n);
        let transform = |data: &[f64]| {
            let mut buf: Vec<Complex<f64>> = data.iter().map(|v| Complex::new(*v / n as f64, 0.0)).collect();
            fft.process(&mut buf);
            buf
        };
        Self {
            height,
            upper: transform(upper),
            lower: transform(lower),
        }
    }

    pub fn size(&self) -> usize {
        self.upper.len()
    }

    fn frequency(&self, j: usize) -> f64 {
        let n = self.size();
        if j <= n / 2 {
            j as f64
        } else {
            j as f64 - n as f64
        }
    }

    /// Values at `x_i = (i + shift) / N` on the row `Im z = y`, `|y| <= height`.
    pub fn row(&self, y: f64, shift: f64) -> Vec<f64> {
        let n = self.size();
        let h = self.height;
        let mut buf: Vec<Complex<f64>> = (0..n)
            .map(|j| {
                let k = self.frequency(j);
                let kappa = 2.0 * std::f64::consts::PI * k.abs();
                let (wu, wl) = if k == 0.0 {
                    ((h + y) / (2.0 * h), (h - y) / (2.0 * h))
                } else {
                    (
                        sinh_ratio(kappa * (h + y), 2.0 * kappa * h),
                        sinh_ratio(kappa * (h - y), 2.0 * kappa * h),
                    )
                };
                let phase = Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * k * shift / n as f64);
                (self.upper[j] * wu + self.lower[j] * wl) * phase
            })
            .collect();
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        buf.into_iter().map(|v| v.re).collect()
    }
}

/// Outcome of the majorant check at one level.
#[derive(Clone, Debug)]
pub struct MajorantOutcome {
    pub record: CheckRecord,
    /// Sampled `sup (v_n - u)` over the strip.
    pub sup_gap: f64,
    /// Sampled `min v_n` on the real axis.
    pub axis_min: f64,
}

/// `v_n >= u` where `v_n` equals `u` outside `Π_n = {|Im z| < (4/3) 2^-n}`
/// and is harmonic inside. Sampled on the half-cell offset grid of `Π_n`.
pub fn check_majorants<T: Scalar>(glued: &GluedPotential<T>, n: u32) -> MajorantOutcome {
    let h = glued.h().as_f64();
    let size = glued.upper.base.grid().nx;
    let height = strip_height::<f64>() / f64::powi(2.0, n as i32);
    let line = |y: f64| -> Vec<f64> {
        (0..size)
            .map(|j| glued.evaluate(c::<T>(j as f64 / size as f64, y)).as_f64())
            .collect()
    };
    let v = Majorant::from_lines(height, &line(height), &line(-height));
    let rows = (2.0 * height / h).floor() as usize;
    let mut worst = Worst::new();
    let mut sup_gap = f64::NEG_INFINITY;
    for j in 0..rows {
        let y = -height + (j as f64 + 0.5) * h;
        if y.abs() >= height {
            continue;
        }
        for (i, vi) in v.row(y, 0.5).into_iter().enumerate() {
            let z = c::<T>((i as f64 + 0.5) / size as f64, y);
            let gap = vi - glued.evaluate(z).as_f64();
            sup_gap = sup_gap.max(gap);
            worst.push(z, T::lit(gap), T::lit(vi.abs()));
        }
    }
    let axis_min = v.row(0.0, 0.5).into_iter().fold(f64::INFINITY, f64::min);
    let record = CheckRecord::new(
        format!("majorant/{n}"),
        format!("{} offset grid points of |Im z| < (4/3) 2^-{n}, v_{n} - u", worst.count),
        &worst,
        discretization_tolerance(h),
    );
    MajorantOutcome {
        record,
        sup_gap,
        axis_min,
    }
}

/// `|u(z + δν) - u(z - δν)| <= 5h` across square boundaries (`ν` the outward
/// normal).
pub fn check_continuity<T: Scalar>(glued: &GluedPotential<T>, count: usize, rng: &mut ChaCha8Rng) -> CheckRecord {
    let h = glued.h().as_f64();
    let delta = h * 1e-6;
    let families = [Family::SPlus, Family::SMinus];
    let mut worst = Worst::new();
    for s in 0..count {
        let sq = random_square(rng, families[s % 2], glued.n_max());
        let ((x, y), (nx, ny)) = square_boundary_point(rng, &sq);
        let outside = glued.evaluate(c::<T>(x + delta * nx, y + delta * ny));
        let inside = glued.evaluate(c::<T>(x - delta * nx, y - delta * ny));
        worst.push(c::<T>(x, y), -(outside - inside).abs(), outside.abs().max(inside.abs()));
    }
    CheckRecord::new(
        "continuity",
        format!("{} square boundary points, one-sided limits at distance 1e-6 h", worst.count),
        &worst,
        5.0 * h,
    )
}

/// `u > 0` on `D_0`, `u < 0` inside squares, `u = 0` on the real axis.
pub fn check_signs<T: Scalar>(glued: &GluedPotential<T>, count: usize, rng: &mut ChaCha8Rng) -> Vec<CheckRecord> {
    let mut d0 = Worst::new();
    for side in [Side::Upper, Side::Lower] {
        let model = glued.model(side);
        for w in d0_points(model, count / 2, rng) {
            let z = model.to_frame(w);
            d0.push(z, glued.evaluate(z), T::zero());
        }
    }
    let mut squares = Worst::new();
    let families = [Family::SPlus, Family::SMinus];
    for s in 0..count {
        let sq = random_square(rng, families[s % 2], glued.n_max());
        let (x, y) = square_interior_point(rng, &sq);
        let z = c::<T>(x, y);
        squares.push(z, -glued.evaluate(z), T::zero());
    }
    let mut axis = Worst::new();
    for s in 0..count {
        let z = c::<T>(4.0 * (s as f64 + rng.gen::<f64>()) / count as f64 - 2.0, 0.0);
        axis.push(z, -glued.evaluate(z).abs(), T::zero());
    }
    let tol = discretization_tolerance(glued.h().as_f64());
    vec![
        CheckRecord::new("sign/d0", format!("{} stratified points of D0, u", d0.count), &d0, tol),
        CheckRecord::new(
            "sign/squares",
            format!("{} interior square points, -u", squares.count),
            &squares,
            tol,
        ),
        CheckRecord::new("sign/real-axis", format!("{} points of [-2, 2], -|u|", axis.count), &axis, 0.0),
    ]
}

/// Reach of the corner regime: one eighth of the narrowest gap next to the
/// fundamental square (`0.05`, between it and the level-one squares). Farther
/// out, `∂u/∂n` follows the recesses of the domain rather than the corner
/// singularity.
pub const CORNER_REGIME: f64 = 0.05 / 8.0;

/// Smallest relative step towards the corners among the samples within
/// `CORNER_REGIME` of each corner (at least two per end): positive
/// when the profiles rise (`rising`) or fall strictly monotonically as each
/// corner is approached.
fn corner_growth<T: Scalar>(profiles: &[EdgeProfile<T>; 4], rising: bool, offset: f64) -> f64 {
    let mut worst = f64::INFINITY;
    let sign = if rising { 1.0 } else { -1.0 };
    for p in profiles {
        let d: Vec<f64> = p.derivatives.iter().map(|v| v.as_f64()).collect();
        let x: Vec<f64> = p.positions.iter().map(|v| v.as_f64()).collect();
        let n = d.len();
        if n < 4 {
            return f64::NEG_INFINITY;
        }
        let reach = CORNER_REGIME - offset;
        let w_lo = x.iter().take_while(|v| **v - x[0] <= reach).count().clamp(2, n / 2);
        let w_hi = x.iter().rev().take_while(|v| x[n - 1] - **v <= reach).count().clamp(2, n / 2);
        let step = |a: f64, b: f64| sign * (a - b) / a.abs().max(b.abs());
        // d[k] is closer to the low corner than d[k + 1]
        for k in 0..w_lo - 1 {
            worst = worst.min(step(d[k], d[k + 1]));
        }
        for k in n - w_hi..n - 1 {
            worst = worst.min(step(d[k + 1], d[k]));
        }
    }
    worst
}

/// Normal derivatives on the fundamental square: `∂u/∂n > 0`, the jump
/// `∂u/∂n - t ∂G/∂n` is positive, `∂u/∂n` grows and `∂G/∂n` decays towards
/// the corners.
pub fn check_normal_derivatives<T: Scalar>(model: &HalfStripModel<T>) -> Vec<CheckRecord> {
    let side = side_name(model.side);
    let offset = model.h() * T::lit(2.0);
    let center = model.frame_center();
    let quantifier = |what: &str| format!("{what} on the fundamental square, 2h corner exclusion");
    let mut out = Vec::new();

    let mut positive = Worst::new();
    positive.push(center, model.du_min, T::zero());
    out.push(CheckRecord::new(
        format!("normal-derivative/{side}"),
        quantifier("inf du/dn"),
        &positive,
        0.0,
    ));

    let mut jump = Worst::new();
    jump.push(center, model.du_min - model.t * model.dg_max, model.du_min);
    out.push(CheckRecord::new(
        format!("jump/{side}"),
        quantifier("inf du/dn - t sup dG/dn"),
        &jump,
        0.0,
    ));

    let growth = match outward_side_profiles(&model.base, center, offset) {
        Ok(p) => corner_growth(&p, true, offset.as_f64()),
        Err(_) => f64::NEG_INFINITY,
    };
    let decay = corner_growth(&model.green.inward_side_profiles(offset), false, offset.as_f64());
    let mut shape = Worst::new();
    shape.push(center, T::lit(growth.min(decay)), T::zero());
    out.push(CheckRecord::new(
        format!("corner-shape/{side}"),
        quantifier("du/dn rising and dG/dn falling monotonically within 1/160 of each corner"),
        &shape,
        0.0,
    ));
    out
}

/// Exact covering and disjointness: projections of `K_n` cover `[0, 1)` for
/// every `n <= levels`, chords have length `>= (4/7) 2^-n` on every sampled
/// line, and the `S` squares of both sides are pairwise disjoint.
pub fn check_covering(levels: u32, lines: &[Rational]) -> Vec<CheckRecord> {
    let cover = (0..=levels).all(|n| projections_cover_period(n).is_ok());
    let mut chord = Worst::new();
    for x0 in lines {
        for n in 0..=levels {
            let bound = Rational::new(4, 7) * Rational::new(1, 1i128 << n);
            let slack = line_intersection_length(x0, n) - bound;
            let xf: f64 = rational_to_scalar(x0);
            chord.push(Complex::new(xf, 0.0), rational_to_scalar::<f64>(&slack), rational_to_scalar(&bound));
        }
    }
    let mut squares = PeriodCell::new(Side::Upper, levels).squares;
    squares.extend(PeriodCell::new(Side::Lower, levels).squares);
    let both = check_disjoint_squares(&squares, None);
    vec![
        CheckRecord::exact(
            "covering/projections",
            format!("exact interval union of K projections, levels 0..={levels}"),
            cover,
            levels as usize + 1,
        ),
        CheckRecord::new(
            "covering/chord-length",
            format!("{} (line, level) pairs, exact length of l ∩ K_n minus (4/7) 2^-n", chord.count),
            &chord,
            0.0,
        ),
        CheckRecord::exact(
            "disjoint",
            format!("exact pairwise test of S+ and S- squares, levels 0..={levels}"),
            check_disjoint(levels).disjoint && both.disjoint,
            both.pairs_tested,
        ),
    ]
}

/// `∫_lo^hi f` by the midpoint rule with step at most `step`, graded as
/// `pole ± L s²` towards `pole` when it lies inside, which absorbs the
/// logarithmic singularity of the square potentials at their centers.
pub fn graded_integral<T: Scalar>(f: impl Fn(T) -> T, lo: T, hi: T, pole: T, step: T) -> T {
    let len = hi - lo;
    if !(len > T::zero()) {
        return T::zero();
    }
    let plain = |a: T, b: T| {
        let m = ((b - a) / step).ceil().to_usize().unwrap_or(1).max(1);
        let d = (b - a) / T::from_usize_lossy(m);
        (0..m).fold(T::zero(), |acc, s| acc + f(a + d * (T::from_usize_lossy(s) + T::lit(0.5)))) * d
    };
    if !(pole > lo && pole < hi) {
        return plain(lo, hi);
    }
    let two = T::lit(2.0);
    // spacing near s = 1 is at most 2 reach / m on both sides; the shorter
    // side gets as many nodes as the longer one, since its error scales
    // like step² / reach
    let m = (two * (hi - pole).max(pole - lo) / step).ceil().to_usize().unwrap_or(1).max(1);
    let ds = T::one() / T::from_usize_lossy(m);
    let mut acc = T::zero();
    for (reach, sign) in [(hi - pole, T::one()), (pole - lo, -T::one())] {
        for k in 0..m {
            let s = ds * (T::from_usize_lossy(k) + T::lit(0.5));
            acc = acc + f(pole + sign * reach * s * s) * two * reach * s * ds;
        }
    }
    acc
}

/// `(∫_{l∩E_n} f, ∫_{l∩K_n} f)` on `l = {Re z = x0}`, in the variable
/// `y / unit` with step at most `step`; `f` takes that variable.
///
/// The `E_n` integral is the `K_n` integral plus the integrals over the parts
/// of the `S` chords outside `K`, so `E <= K` whenever the integrand is
/// nonpositive on the squares.
pub fn chord_integrals<T: Scalar>(x0: &Rational, n: u32, unit: T, step: T, f: impl Fn(T) -> T) -> (T, T) {
    let mut e = T::zero();
    let mut k = T::zero();
    let t = |q: &Rational| rational_to_scalar::<T>(q) / unit;
    for (outer, core) in [(Family::SPlus, Family::KPlus), (Family::SMinus, Family::KMinus)] {
        let cores = vertical_chords(x0, core, n);
        for (sq, lo, hi) in vertical_chords(x0, outer, n) {
            let (lo, hi) = (t(&lo), t(&hi));
            let pole = sq.center::<T>().im / unit;
            match cores.iter().find(|(c, _, _)| c.k == sq.k) {
                Some((_, klo, khi)) => {
                    let (klo, khi) = (t(klo), t(khi));
                    let inner = graded_integral(&f, klo, khi, pole, step);
                    k = k + inner;
                    e = e + inner + graded_integral(&f, lo, klo, pole, step) + graded_integral(&f, khi, hi, pole, step);
                }
                None => e = e + graded_integral(&f, lo, hi, pole, step),
            }
        }
    }
    (e, k)
}

/// `(∫_{l ∩ E_n} u dy, ∫_{l ∩ K_n} u dy)` on `l = {Re z = x0}`.
pub fn line_decay<T: Scalar>(glued: &GluedPotential<T>, x0: &Rational, n: u32, step: T) -> (T, T) {
    let xf: T = rational_to_scalar(x0);
    chord_integrals(x0, n, T::one(), step, |y| glued.evaluate(Complex::new(xf, y)))
}

/// Line sample set: `count` jittered stratified abscissas in `[0, 1)` plus the
/// endpoints of the `K` projections of every level `<= n_max` (the
/// adversarial lines where the covering switches squares).
pub fn line_samples(count: usize, n_max: u32, rng: &mut ChaCha8Rng) -> Vec<Rational> {
    let mut out: Vec<Rational> = (0..count)
        .map(|s| rational_from_f64((s as f64 + rng.gen::<f64>()) / count as f64).expect("finite"))
        .collect();
    let half = Rational::new(2, 7);
    for n in 0..=n_max {
        let scale = Rational::new(1, 1i128 << n);
        for k in 0..(1i128 << n) {
            for offset in [Rational::new(0, 1), Rational::new(1, 2)] {
                let cen = (Rational::from_integer(k) + offset) * scale;
                for x in [cen - half * scale, cen + half * scale] {
                    let x = x - x.floor();
                    if !out.contains(&x) {
                        out.push(x);
                    }
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub n: u32,
    /// `min` over lines of `|∫_{l∩E_n} u dy|` (the supremum of the negative
    /// integral, as an absolute value).
    pub a_n: f64,
    /// `min` over lines of `|∫_{l∩K_n} u dy|`.
    pub k_n: f64,
    /// `(4/7) 2^-n β̃ M̃^-n`.
    pub bound: f64,
    /// Line attaining `a_n`.
    pub worst_line: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayTable {
    pub rows: Vec<DecayRow>,
    pub lines: usize,
    pub beta_tilde: f64,
    pub m_tilde: f64,
    pub c: f64,
    /// Level attaining the maximum in the definition of `c`.
    pub c_level: u32,
    /// Asymptotic prediction `2 M̃`.
    pub c_prediction: f64,
    pub anomalies: Vec<String>,
}

/// Decay base: `c = max_{n >= 1} a_n^(-1/n)`, so that `a_n >= c^-n` at every
/// computed level. Levels with `a_n` outside `(0, 1)` are skipped and
/// reported.
pub fn estimate_c(a: &[f64]) -> (f64, u32, Vec<String>) {
    let mut best = (1.0, 0u32);
    let mut anomalies = Vec::new();
    for (n, &an) in a.iter().enumerate().skip(1) {
        if !(an > 0.0 && an < 1.0) {
            anomalies.push(format!("a_{n} = {an:e} outside (0, 1)"));
            continue;
        }
        let cn = an.powf(-1.0 / n as f64);
        if cn > best.0 {
            best = (cn, n as u32);
        }
    }
    (best.0, best.1, anomalies)
}

/// Outcome of the line-integral stage: the table and its checks.
#[derive(Clone, Debug)]
pub struct DecayOutcome {
    pub table: DecayTable,
    pub records: Vec<CheckRecord>,
}

/// Line integrals for every sampled line and level `0..=N_max`.
pub fn decay_table<T: Scalar>(glued: &GluedPotential<T>, lines: &[Rational], slack: f64) -> DecayOutcome {
    let step = glued.h();
    let beta = glued.beta_tilde().as_f64();
    let m = glued.m_tilde().as_f64();
    let mut rows = Vec::new();
    let mut sign = Worst::new();
    let mut order = Worst::new();
    let mut bound_check = Worst::new();
    for n in 0..=glued.n_max() {
        let bound = 4.0 / 7.0 * f64::powi(2.0, -(n as i32)) * beta * m.powi(-(n as i32));
        let mut row = DecayRow {
            n,
            a_n: f64::INFINITY,
            k_n: f64::INFINITY,
            bound,
            worst_line: 0.0,
        };
        for x0 in lines {
            let (e, k) = line_decay(glued, x0, n, step);
            let (e, k) = (e.as_f64(), k.as_f64());
            let xf: f64 = rational_to_scalar(x0);
            let z = Complex::new(xf, n as f64);
            sign.push(z, -e.max(k), k.abs());
            order.push(z, k - e, k.abs());
            bound_check.push(z, -bound * (1.0 - slack) - k, bound);
            if e.abs() < row.a_n {
                row.a_n = e.abs();
                row.worst_line = xf;
            }
            row.k_n = row.k_n.min(k.abs());
        }
        rows.push(row);
    }
    let a: Vec<f64> = rows.iter().map(|r| r.a_n).collect();
    let (c, c_level, anomalies) = estimate_c(&a);
    let levels = glued.n_max();
    let lines_n = lines.len();
    let q = |what: &str| format!("{lines_n} lines x levels 0..={levels}, {what} (witness = (x0, n))");
    let records = vec![
        CheckRecord::new("decay/sign", q("both integrals <= 0"), &sign, 0.0),
        CheckRecord::new("decay/order", q("∫E_n <= ∫K_n"), &order, 0.0),
        CheckRecord::new(
            "decay/bound",
            q(&format!("∫K_n <= -(4/7) 2^-n β̃ M̃^-n (1 - {slack})")),
            &bound_check,
            0.0,
        ),
    ];
    DecayOutcome {
        table: DecayTable {
            rows,
            lines: lines.len(),
            beta_tilde: beta,
            m_tilde: m,
            c,
            c_level,
            c_prediction: 2.0 * m,
            anomalies,
        },
        records,
    }
}

/// Knobs of the default check suite.
#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Sample count per point check.
    pub points: usize,
    pub line_samples: usize,
    pub slack: f64,
    /// Majorants are checked for `n = 0..=majorant_levels`.
    pub majorant_levels: u32,
    /// Levels of the exact covering check.
    pub covering_levels: u32,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            points: 10_000,
            line_samples: 256,
            slack: 0.1,
            majorant_levels: 3,
            covering_levels: 6,
        }
    }
}

/// Everything the strip stage produces.
#[derive(Clone, Debug)]
pub struct StripSuite {
    pub checks: Vec<CheckRecord>,
    pub decay: DecayTable,
    /// `sup (v_n - u)` per majorant level.
    pub majorant_gaps: Vec<f64>,
}

/// The default strip check suite.
pub fn run_strip_suite<T: Scalar>(glued: &GluedPotential<T>, opts: &SuiteOptions) -> StripSuite {
    let rng = |name: &str| stream_rng(opts.seed, name);
    let pts = opts.points;
    let mut checks = vec![check_periodicity(glued, pts, &mut rng("periodicity"))];
    for side in [Side::Upper, Side::Lower] {
        let model = glued.model(side);
        let name = side_name(side);
        checks.push(check_intermediate(model, pts, &mut rng(&format!("intermediate/{name}"))));
        checks.push(check_selfsimilarity(model, pts, &mut rng(&format!("selfsimilarity/{name}"))));
        checks.push(check_negative_bounds(glued, side, pts, &mut rng(&format!("negative/{name}"))));
        checks.extend(check_normal_derivatives(model));
    }
    let radii: Vec<T> = RADII_FACTORS.iter().map(|f| glued.h() * T::lit(*f)).collect();
    checks.extend(check_subharmonic(glued, &radii, pts, &mut rng("subharmonic")));

    let mut gaps = Vec::new();
    let mut axis = Worst::new();
    for n in 0..=opts.majorant_levels {
        let out = check_majorants(glued, n);
        axis.push(Complex::new(0.0, n as f64), out.axis_min, out.axis_min);
        gaps.push(out.sup_gap);
        checks.push(out.record);
    }
    let mut decreasing = Worst::new();
    for (n, pair) in gaps.windows(2).enumerate() {
        decreasing.push(Complex::new(0.0, n as f64 + 1.0), pair[0] - pair[1], pair[0]);
    }
    checks.push(CheckRecord::new(
        "majorant/axis-positive",
        format!("min of v_n on the real axis, n = 0..={}", opts.majorant_levels),
        &axis,
        0.0,
    ));
    if decreasing.count > 0 {
        // A zero margin means equal sups, which is not strict decrease.
        if decreasing.margin == 0.0 {
            decreasing.margin = -f64::MIN_POSITIVE;
        }
        checks.push(CheckRecord::new(
            "majorant/decreasing",
            format!("sup (v_n - u) strictly decreasing, n = 0..={}", opts.majorant_levels),
            &decreasing,
            0.0,
        ));
    }
    checks.push(check_continuity(glued, pts, &mut rng("continuity")));
    checks.extend(check_signs(glued, pts, &mut rng("sign")));

    let lines = line_samples(opts.line_samples, glued.n_max(), &mut rng("lines"));
    checks.extend(check_covering(opts.covering_levels.max(glued.n_max()), &lines));
    let decay = decay_table(glued, &lines, opts.slack);
    checks.extend(decay.records);
    StripSuite {
        checks,
        decay: decay.table,
        majorant_gaps: gaps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_follows_margin_and_tolerance() {
        let mut w = Worst::new();
        w.push(Complex::new(0.0f64, 0.0), 0.5, 1.0);
        assert_eq!(CheckRecord::new("a", "", &w, 0.1).status, Status::Pass);
        w.push(Complex::new(1.0f64, 0.0), -0.05, 1.0);
        let r = CheckRecord::new("a", "", &w, 0.1);
        assert_eq!(r.status, Status::PassDiscretization);
        assert!(r.pass);
        assert_eq!(r.witness, Some([1.0, 0.0]));
        w.push(Complex::new(2.0f64, 0.0), f64::NAN, 1.0);
        assert!(!CheckRecord::new("a", "", &w, 0.1).pass);
    }

    #[test]
    fn c_closed_form_and_anomalies() {
        let a: Vec<f64> = (0..5).map(|n| 0.25f64.powi(n)).collect();
        let (c, _, anomalies) = estimate_c(&a);
        assert!((c - 4.0).abs() < 1e-12);
        assert!(anomalies.is_empty());
        let (c, level, anomalies) = estimate_c(&[0.5, 1.5, 1e-4]);
        assert!((c - 100.0).abs() < 1e-9 && level == 2);
        assert_eq!(anomalies.len(), 1);
    }

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let a: u64 = stream_rng(7, "x").gen();
        let b: u64 = stream_rng(7, "x").gen();
        let c: u64 = stream_rng(7, "y").gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn majorant_reproduces_separable_harmonic_function() {
        // v = cos(2πx) sinh(2π(H+y))/sinh(4πH) + (H - y)/(2H)
        let h = 0.4;
        let n = 64;
        let top: Vec<f64> = (0..n).map(|j| (2.0 * std::f64::consts::PI * j as f64 / n as f64).cos()).collect();
        let bottom = vec![1.0; n];
        let v = Majorant::from_lines(h, &top, &bottom);
        let two_pi = 2.0 * std::f64::consts::PI;
        for y in [-0.39, -0.1, 0.0, 0.25] {
            for (i, val) in v.row(y, 0.5).into_iter().enumerate() {
                let x = (i as f64 + 0.5) / n as f64;
                let exact = (two_pi * x).cos() * sinh_ratio(two_pi * (h + y), 2.0 * two_pi * h) + (h - y) / (2.0 * h);
                assert!((val - exact).abs() < 1e-12, "{x} {y}: {val} vs {exact}");
            }
        }
    }

    #[test]
    fn adversarial_lines_are_in_the_period() {
        let lines = line_samples(16, 2, &mut stream_rng(1, "l"));
        assert!(lines.iter().all(|x| *x >= Rational::from_integer(0) && *x < Rational::from_integer(1)));
        assert!(lines.contains(&Rational::new(2, 7)));
        assert!(lines.contains(&Rational::new(5, 7)));
        assert!(lines.len() > 16);
    }
}
