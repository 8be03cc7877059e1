//! Transport of the glued strip potential to the annulus `1 < |ζ| < 2`.
//!
//! The map `z = (4/(3ε)) log ζ` sends the sector `Q = {1 < |ζ| < 2,
//! |arg ζ| < ε}` onto the window `0 < Re z < L`, `|Im z| < 4/3` of the strip,
//! with `L = (4/(3ε)) log 2`. Outside `Q` the potential continues as the
//! harmonic sector function `1 + a r^λ cos(λ(θ - π))`, `θ ∈ [ε, 2π - ε]`,
//! which equals one on the rays `arg ζ = ±ε`.

use std::sync::Arc;

use num_complex::Complex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assembler::GluedPotential;
use crate::error::{Error, Result};
use crate::geometry::{check_disjoint_squares, strip_height, Family, SquareSpec};
use crate::laplace::{normal_derivative, sub_mean_test, Direction, Edge, Field, Potential};
use crate::scalar::{rational_from_f64, Scalar};
use crate::verify::{discretization_tolerance, chord_integrals, line_decay, CheckRecord, Worst, CIRCLE_NODES, RADII_FACTORS};

/// `λ = π / (2(π - ε))`, so that `cos(λ(θ - π))` vanishes at `θ = ε`.
pub fn sector_exponent<T: Scalar>(eps: T) -> T {
    T::PI() / (T::lit(2.0) * (T::PI() - eps))
}

/// Strip length of the window, `(4/(3ε)) log 2`.
pub fn window_length<T: Scalar>(eps: T) -> T {
    scale(eps) * T::LN_2()
}

fn scale<T: Scalar>(eps: T) -> T {
    T::lit(4.0) / (T::lit(3.0) * eps)
}

/// `(4/(3ε)) log ζ` on the principal branch.
pub fn map_to_strip<T: Scalar>(zeta: Complex<T>, eps: T) -> Result<Complex<T>> {
    if zeta == Complex::new(T::zero(), T::zero()) {
        return Err(Error::OutsideDomain { re: 0.0, im: 0.0 });
    }
    let s = scale(eps);
    Ok(Complex::new(zeta.norm().ln() * s, zeta.arg() * s))
}

/// Inverse of [`map_to_strip`].
pub fn map_from_strip<T: Scalar>(z: Complex<T>, eps: T) -> Complex<T> {
    let s = T::one() / scale(eps);
    Complex::from_polar((z.re * s).exp(), z.im * s)
}

#[derive(Clone, Debug)]
pub struct AnnulusPotential<T> {
    pub eps: T,
    pub lambda: T,
    pub a_out: T,
    pub window: T,
    /// `sup (4/(3ε)) ∂u/∂y` on the strip boundary lines.
    pub ray_slope: T,
    pub glued: Arc<GluedPotential<T>>,
}

/// `∂u/∂y` on the top line of a half-strip base field (frame coordinates),
/// one sample per grid column.
fn top_slope<T: Scalar>(base: &Field<T>) -> Result<T> {
    let edge = Edge {
        at: strip_height(),
        lo: T::zero(),
        hi: T::one() - base.grid().h,
        samples: Direction::MinusY,
        boundary_value: T::one(),
    };
    // derivative towards -y; the slope is its negative
    Ok(-normal_derivative(base, &edge, T::zero())?.min())
}

impl<T: Scalar> AnnulusPotential<T> {
    /// Chooses `a = 2 sup((4/(3ε)) ∂u/∂y) / λ`: the angular derivative of the
    /// outer function on the rays, `a λ r^λ`, then exceeds twice the inner one
    /// for every `r >= 1`.
    pub fn new(glued: Arc<GluedPotential<T>>, eps: T) -> Result<Self> {
        let quarter = T::FRAC_PI_4();
        if !(eps > T::zero() && eps < quarter) {
            return Err(Error::Config(format!("sector half-angle {eps} outside (0, π/4)")));
        }
        let window = window_length(eps);
        if window < T::lit(1.5) {
            return Err(Error::Config(format!("window length {window} below 1.5")));
        }
        let lambda = sector_exponent(eps);
        let slope = top_slope(&glued.upper.base)?.max(top_slope(&glued.lower.base)?);
        if !(slope > T::zero()) {
            return Err(Error::Degenerate(format!("nonpositive slope {slope} at the strip boundary")));
        }
        let ray_slope = scale(eps) * slope;
        Ok(Self {
            eps,
            lambda,
            a_out: T::lit(2.0) * ray_slope / lambda,
            window,
            ray_slope,
            glued,
        })
    }

    pub fn with_amplitude(mut self, a_out: T) -> Self {
        self.a_out = a_out;
        self
    }

    pub fn h(&self) -> T {
        self.glued.h()
    }

    /// Outer sector function at `ζ = r e^{iθ}`, `|θ| >= ε`.
    pub fn outer_value(&self, r: T, theta: T) -> T {
        let rotated = theta.abs() - T::PI();
        T::one() + self.a_out * r.powf(self.lambda) * (self.lambda * rotated).cos()
    }

    /// Inner value `u(z(ζ))`; only meaningful for `|arg ζ| <= ε`.
    pub fn inner_value(&self, zeta: Complex<T>) -> T {
        match map_to_strip(zeta, self.eps) {
            Ok(z) => {
                let top = strip_height::<T>();
                let im = z.im.max(-top).min(top);
                self.glued.evaluate(Complex::new(z.re, im))
            }
            Err(_) => T::nan(),
        }
    }

    /// `w(ζ)` on the closed annulus; `NaN` outside it.
    pub fn evaluate(&self, zeta: Complex<T>) -> T {
        let r = zeta.norm();
        let slack = T::lit(1e-12);
        if !(r >= T::one() - slack && r <= T::lit(2.0) + slack) {
            return T::nan();
        }
        let theta = zeta.arg();
        if theta.abs() <= self.eps {
            self.inner_value(zeta)
        } else {
            self.outer_value(r, theta)
        }
    }

    pub fn try_evaluate(&self, zeta: Complex<T>) -> Result<T> {
        let v = self.evaluate(zeta);
        if v.is_nan() {
            return Err(Error::OutsideDomain {
                re: zeta.re.as_f64(),
                im: zeta.im.as_f64(),
            });
        }
        Ok(v)
    }

    /// Analytic supremum `1 + a 2^λ` (attained at `ζ = -2`).
    pub fn sup_bound(&self) -> T {
        T::one() + self.a_out * T::lit(2.0).powf(self.lambda)
    }

    /// `∫ w(r e^{iθ}) dθ` over `{θ : r e^{iθ} ∈ E_n}`, computed in strip
    /// coordinates with `dθ = (3ε/4) dy`.
    pub fn arc_integral(&self, r: T, n: u32) -> T {
        let x0 = scale(self.eps) * r.ln();
        let x = rational_from_f64(x0.as_f64()).expect("finite abscissa");
        let (e, _) = line_decay(&self.glued, &x, n, self.h());
        e / scale(self.eps)
    }

    /// The same integral evaluated on the annulus, in `θ` with step `dθ = (3ε/4) h`,
    /// over the arcs cut out by the transported squares.
    pub fn arc_integral_direct(&self, r: T, n: u32) -> T {
        let s = scale(self.eps);
        let x0 = s * r.ln();
        let x = rational_from_f64(x0.as_f64()).expect("finite abscissa");
        let arc = |theta: T| self.evaluate(Complex::from_polar(r, theta));
        chord_integrals(&x, n, s, self.h() / s, arc).0
    }

    /// Squares of `family` at level `n` that meet the window `0 <= Re z <= L`.
    pub fn window_squares(&self, family: Family, n: u32) -> Vec<SquareSpec> {
        let scale_n = f64::powi(2.0, n as i32);
        let l = self.window.as_f64();
        let k_hi = (l * scale_n).ceil() as i64 + 1;
        (-1..=k_hi)
            .map(|k| SquareSpec::new(family, n, k))
            .filter(|sq| {
                let (lo, hi) = sq.x_range::<f64>();
                hi >= 0.0 && lo <= l
            })
            .collect()
    }
}

impl<T: Scalar> Potential<T> for AnnulusPotential<T> {
    fn value(&self, zeta: Complex<T>) -> T {
        self.evaluate(zeta)
    }

    fn contains_disk(&self, zeta: Complex<T>, r: T) -> bool {
        let rho = zeta.norm();
        rho - r >= T::one() && rho + r <= T::lit(2.0)
    }
}

/// Property (ii) on `radii` for `n = 1..=n_max`: `∫_{E_n} w dθ <= -δ_n` with
/// `δ_n = (3ε/4) c^-n (1 - slack)`.
pub fn check_property_ii<T: Scalar>(pot: &AnnulusPotential<T>, c: f64, radii: &[T], slack: f64) -> PropertyII {
    let eps = pot.eps.as_f64();
    let n_max = pot.glued.n_max();
    let mut rows = Vec::new();
    let mut worst = Worst::new();
    for n in 1..=n_max {
        let delta = 0.75 * eps * c.powi(-(n as i32)) * (1.0 - slack);
        let mut sup = f64::NEG_INFINITY;
        let mut at = 0.0;
        for &r in radii {
            let integral = pot.arc_integral(r, n).as_f64();
            worst.push(Complex::new(r.as_f64(), n as f64), -delta - integral, delta);
            if integral > sup {
                sup = integral;
                at = r.as_f64();
            }
        }
        rows.push(PropertyRow {
            n,
            delta,
            sup_integral: sup,
            worst_radius: at,
        });
    }
    let record = CheckRecord::new(
        "annulus/property-ii",
        format!(
            "{} radii in [1, 2] x levels 1..={n_max}, -(3ε/4) c^-n (1 - {slack}) - ∫_(E_n) w dθ (witness = (r, n))",
            radii.len()
        ),
        &worst,
        0.0,
    );
    PropertyII { record, rows }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyRow {
    pub n: u32,
    pub delta: f64,
    /// Largest (least negative) arc integral over the radii.
    pub sup_integral: f64,
    pub worst_radius: f64,
}

#[derive(Clone, Debug)]
pub struct PropertyII {
    pub record: CheckRecord,
    pub rows: Vec<PropertyRow>,
}

/// `count` radii spread evenly over the closed interval `[1, 2]`.
pub fn radii<T: Scalar>(count: usize) -> Vec<T> {
    let count = count.max(2);
    (0..count)
        .map(|s| T::one() + T::from_usize_lossy(s) / T::from_usize_lossy(count - 1))
        .collect()
}

/// The strip identity `∫ w dθ = (3ε/4) ∫ u dy` checked against direct
/// quadrature in `θ`.
pub fn check_change_of_variables<T: Scalar>(pot: &AnnulusPotential<T>, radii: &[T]) -> CheckRecord {
    let mut worst = Worst::new();
    for n in 1..=pot.glued.n_max() {
        for &r in radii {
            let a = pot.arc_integral(r, n);
            let b = pot.arc_integral_direct(r, n);
            worst.push(Complex::new(r, T::from_usize_lossy(n as usize)), -((a - b) / a).abs(), a.abs());
        }
    }
    let tol = discretization_tolerance(pot.h().as_f64());
    CheckRecord::new(
        "annulus/change-of-variables",
        format!("{} (radius, level) pairs, |strip integral - arc integral| relative to the strip integral", worst.count),
        &worst,
        tol,
    )
}

/// Property (i): in the window, every transported square of level
/// `1..=n_max` is negative inside, `w` is nonnegative outside the squares
/// and in the outer sector, `w` is continuous across square boundaries, and
/// the `E_n` are pairwise disjoint.
pub fn check_components<T: Scalar>(pot: &AnnulusPotential<T>, count: usize, rng: &mut ChaCha8Rng) -> Vec<CheckRecord> {
    let eps = pot.eps;
    let h = pot.h().as_f64();
    let tol = discretization_tolerance(h);
    let n_max = pot.glued.n_max();
    let families = [Family::SPlus, Family::SMinus];
    let in_annulus = |zeta: Complex<T>| {
        let r = zeta.norm().as_f64();
        (1.0..=2.0).contains(&r)
    };

    let mut squares = Vec::new();
    for n in 1..=n_max {
        for family in families {
            squares.extend(pot.window_squares(family, n));
        }
    }
    let per_square = (count / squares.len().max(1)).max(4);
    let mut inside = Worst::new();
    let mut boundary = Worst::new();
    for sq in &squares {
        let cen = sq.center::<f64>();
        let a = sq.half_side::<f64>();
        for _ in 0..per_square {
            let z = Complex::new(
                cen.re + a * (2.0 * rng.gen::<f64>() - 1.0),
                cen.im + a * (2.0 * rng.gen::<f64>() - 1.0),
            );
            let zeta = map_from_strip(Complex::new(T::lit(z.re), T::lit(z.im)), eps);
            if in_annulus(zeta) {
                inside.push(zeta, -pot.evaluate(zeta), T::zero());
            }
            let s = a * (2.0 * rng.gen::<f64>() - 1.0);
            let (p, nrm) = match rng.gen_range(0..4) {
                0 => ((cen.re + s, cen.im - a), (0.0, -1.0)),
                1 => ((cen.re + s, cen.im + a), (0.0, 1.0)),
                2 => ((cen.re - a, cen.im + s), (-1.0, 0.0)),
                _ => ((cen.re + a, cen.im + s), (1.0, 0.0)),
            };
            let d = 1e-6 * h;
            let outer = map_from_strip(Complex::new(T::lit(p.0 + d * nrm.0), T::lit(p.1 + d * nrm.1)), eps);
            let inner = map_from_strip(Complex::new(T::lit(p.0 - d * nrm.0), T::lit(p.1 - d * nrm.1)), eps);
            if in_annulus(outer) && in_annulus(inner) {
                let (vo, vi) = (pot.evaluate(outer), pot.evaluate(inner));
                boundary.push(outer, -(vo - vi).abs(), vo.abs().max(vi.abs()));
            }
        }
    }

    let mut outside = Worst::new();
    for _ in 0..count {
        let r = T::lit(1.0 + rng.gen::<f64>());
        let theta = T::lit(std::f64::consts::PI * (2.0 * rng.gen::<f64>() - 1.0));
        let zeta = Complex::from_polar(r, theta);
        let z = match map_to_strip(zeta, eps) {
            Ok(z) => z,
            Err(_) => continue,
        };
        let in_square = theta.abs() <= eps
            && crate::geometry::locate_square(&z, &[Family::SPlus, Family::SMinus], n_max).is_some();
        if !in_square {
            outside.push(zeta, pot.evaluate(zeta), T::zero());
        }
    }

    let mut all = Vec::new();
    for n in 1..=n_max {
        for family in families {
            all.extend((0..(1i64 << n)).map(|k| SquareSpec::new(family, n, k)));
        }
    }
    let disjoint = check_disjoint_squares(&all, None);
    vec![
        CheckRecord::new(
            "annulus/components-negative",
            format!(
                "{} interior points of the {} transported squares of levels 1..={n_max}, -w",
                inside.count,
                squares.len()
            ),
            &inside,
            tol,
        ),
        CheckRecord::new(
            "annulus/components-nonnegative-outside",
            format!("{} annulus points outside every square, w", outside.count),
            &outside,
            tol,
        ),
        CheckRecord::new(
            "annulus/components-continuity",
            format!("{} transported square boundary points, one-sided limits", boundary.count),
            &boundary,
            5.0 * h,
        ),
        CheckRecord::exact(
            "annulus/components-disjoint",
            format!("exact pairwise test of the squares of levels 1..={n_max}"),
            disjoint.disjoint,
            disjoint.pairs_tested,
        ),
    ]
}

/// Sub-mean test on stratified annulus points (log-radius by angle) plus
/// points on the rays `arg ζ = ±ε`. Radii are the strip radii transported
/// by `|dζ/dz| = (3ε/4)|ζ|` at `|ζ| = 1`.
pub fn check_annulus_subharmonic<T: Scalar>(
    pot: &AnnulusPotential<T>,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<CheckRecord> {
    let h = pot.h();
    let tol = discretization_tolerance(h.as_f64());
    let unit = h * T::lit(0.75) * pot.eps;
    let radii: Vec<T> = RADII_FACTORS.iter().map(|f| unit * T::lit(*f)).collect();
    let eps = pot.eps.as_f64();
    let run = |centers: Vec<Complex<T>>| {
        let mut worst = Worst::new();
        for zeta in centers {
            for &r in radii.iter().filter(|r| pot.contains_disk(zeta, **r)) {
                let margin = sub_mean_test(pot, zeta, r, CIRCLE_NODES).unwrap_or(T::nan());
                worst.push(zeta, margin, pot.evaluate(zeta).abs());
            }
        }
        worst
    };

    let bins = (count as f64).sqrt().ceil() as usize;
    let mut bulk = Vec::with_capacity(count);
    for a in 0..bins {
        for b in 0..bins {
            let rho = ((a as f64 + rng.gen::<f64>()) / bins as f64 * std::f64::consts::LN_2).exp();
            let theta = std::f64::consts::PI * (2.0 * (b as f64 + rng.gen::<f64>()) / bins as f64 - 1.0);
            bulk.push(Complex::from_polar(T::lit(rho), T::lit(theta)));
        }
    }
    let rays = (0..count / 4)
        .map(|s| {
            let rho = 1.0 + (s as f64 + rng.gen::<f64>()) / (count / 4) as f64;
            let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
            Complex::from_polar(T::lit(rho), T::lit(sign * eps))
        })
        .collect();
    let factors = RADII_FACTORS.map(|f| format!("{f}")).join(", ");
    let label = |what: &str, w: &Worst| {
        format!(
            "{} sub-mean tests at {what}, radii ({factors}) (3ε/4) h where the disk fits, {CIRCLE_NODES} nodes",
            w.count
        )
    };
    let (b, r) = (run(bulk), run(rays));
    vec![
        CheckRecord::new(
            "annulus/subharmonic",
            label("stratified annulus points", &b),
            &b,
            tol,
        ),
        CheckRecord::new("annulus/subharmonic-rays", label("points of the rays arg ζ = ±ε", &r), &r, tol),
    ]
}

/// The inner and outer formulas agree on the rays (one-sided limits).
pub fn check_chart_agreement<T: Scalar>(pot: &AnnulusPotential<T>, count: usize) -> CheckRecord {
    let h = pot.h().as_f64();
    let d = T::lit(1e-6 * h * 0.75 * pot.eps.as_f64());
    let mut worst = Worst::new();
    for s in 0..count {
        let r = T::one() + T::from_usize_lossy(s) / T::from_usize_lossy(count.max(2) - 1);
        for sign in [T::one(), -T::one()] {
            let inner = pot.inner_value(Complex::from_polar(r, sign * (pot.eps - d)));
            let outer = pot.outer_value(r, sign * (pot.eps + d));
            worst.push(Complex::from_polar(r, sign * pot.eps), -(inner - outer).abs(), T::one());
        }
    }
    CheckRecord::new(
        "annulus/chart-agreement",
        format!("{} ray points, inner against outer formula", worst.count),
        &worst,
        5.0 * h,
    )
}

/// Interface jump of the angular derivative on the rays: the outer slope
/// `a λ r^λ` against the inner `sup (4/(3ε)) ∂u/∂y`, worst at `r = 1`.
pub fn check_ray_jump<T: Scalar>(pot: &AnnulusPotential<T>) -> CheckRecord {
    let mut worst = Worst::new();
    let outer = pot.a_out * pot.lambda;
    worst.push(Complex::from_polar(T::one(), pot.eps), outer - pot.ray_slope, pot.ray_slope);
    CheckRecord::new(
        "annulus/ray-jump",
        "a λ - sup (4/(3ε)) du/dy over both boundary lines (r = 1)",
        &worst,
        0.0,
    )
}

/// Sampled extremes of `w` on a polar grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extremes {
    pub sup: f64,
    pub inf: f64,
    pub sup_bound: f64,
}

pub fn extremes<T: Scalar>(pot: &AnnulusPotential<T>, radial: usize, angular: usize) -> Extremes {
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    for (_, _, v) in polar_grid(pot, radial, angular) {
        sup = sup.max(v);
        inf = inf.min(v);
    }
    Extremes {
        sup,
        inf,
        sup_bound: pot.sup_bound().as_f64(),
    }
}

/// `(re, im, w)` on `radial x angular` nodes of the closed annulus, angles
/// at half-step offsets from `-π`.
pub fn polar_grid<T: Scalar>(pot: &AnnulusPotential<T>, radial: usize, angular: usize) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity(radial * angular);
    for a in 0..radial {
        let r = 1.0 + a as f64 / (radial.max(2) - 1) as f64;
        for b in 0..angular {
            let theta = std::f64::consts::PI * (2.0 * (b as f64 + 0.5) / angular as f64 - 1.0);
            let zeta = Complex::from_polar(r, theta);
            let v = pot.evaluate(Complex::new(T::lit(zeta.re), T::lit(zeta.im))).as_f64();
            out.push((zeta.re, zeta.im, v));
        }
    }
    out
}
