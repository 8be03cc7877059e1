//! The two half-strip models and the glued potential on `|Im z| <= 4/3`.
//!
//! Each half strip is solved in the upper frame: the lower half is reflected
//! by `z -> conj z`, which maps `S-_{n,k}` onto squares centered at
//! `2^-n (k + 1/2 + i)`. Inside a square `γ_{n,k}(S_{0,0})` the potential is
//! `-t M^-n G(γ⁻¹ z)`, outside it is the solved base field.

use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::geometry::{locate_square, strip_height, Family, GroupElement, PeriodCell, Side, SquareSpec};
use crate::laplace::{
    green_square, normal_derivative, solve_dirichlet, Direction, Edge, EdgeProfile, Field, GreenField, Potential,
    SolveOptions,
};
use crate::scalar::Scalar;

/// Half side of `K_{0,0}`.
fn core_half<T: Scalar>() -> T {
    T::lit(2.0 / 7.0)
}

fn outer_half<T: Scalar>() -> T {
    T::lit(0.3)
}

/// `M = 1 / min u` on the line `Im z = 2/3`, with the minimizing abscissa.
///
/// The line is sampled at every grid column and every column midpoint.
pub fn compute_m<T: Scalar>(base: &Field<T>) -> Result<(T, T)> {
    let g = base.grid();
    let y = T::lit(2.0 / 3.0);
    let half_h = g.h * T::lit(0.5);
    let mut best = (T::infinity(), T::zero());
    for s in 0..2 * g.nx {
        let x = half_h * T::from_usize_lossy(s);
        let v = base.value_at(x, y);
        if v < best.0 || v.is_nan() {
            best = (v, x);
        }
    }
    if !(best.0 > T::zero()) {
        return Err(Error::Degenerate(format!(
            "minimum {} of the base field on Im z = 2/3 is not positive",
            best.0
        )));
    }
    Ok((T::one() / best.0, best.1))
}

/// Corner-excluded derivative of `base` away from the fundamental square
/// centered at `center` (frame coordinates), on the bottom, top, left and
/// right sides.
pub fn outward_side_profiles<T: Scalar>(
    base: &Field<T>,
    center: Complex<T>,
    offset: T,
) -> Result<[EdgeProfile<T>; 4]> {
    let a = outer_half::<T>();
    let (cx, cy) = (center.re, center.im);
    let edges = [
        (cy - a, cx - a, cx + a, Direction::MinusY),
        (cy + a, cx - a, cx + a, Direction::PlusY),
        (cx - a, cy - a, cy + a, Direction::MinusX),
        (cx + a, cy - a, cy + a, Direction::PlusX),
    ];
    let mut out: [EdgeProfile<T>; 4] = Default::default();
    for (slot, (at, lo, hi, samples)) in out.iter_mut().zip(edges) {
        let edge = Edge {
            at,
            lo,
            hi,
            samples,
            boundary_value: T::zero(),
        };
        *slot = normal_derivative(base, &edge, offset)?;
    }
    Ok(out)
}

/// All four sides of [`outward_side_profiles`] concatenated.
pub fn outward_profile<T: Scalar>(base: &Field<T>, center: Complex<T>, offset: T) -> Result<EdgeProfile<T>> {
    let mut all = EdgeProfile::default();
    for p in outward_side_profiles(base, center, offset)? {
        all.extend(p);
    }
    Ok(all)
}

/// `t = (1/2) inf ∂u/∂n / sup ∂G/∂n` over the corner-excluded boundary of the
/// fundamental square.
pub fn choose_t<T: Scalar>(du: &EdgeProfile<T>, dg: &EdgeProfile<T>) -> Result<T> {
    let (num, den) = (du.min(), dg.max());
    if !(num > T::zero()) {
        return Err(Error::Degenerate(format!(
            "infimum {num} of the outward normal derivative is not positive"
        )));
    }
    if !(den > T::zero()) || !den.is_finite() {
        return Err(Error::Degenerate(format!("supremum {den} of the Green normal derivative")));
    }
    Ok(T::lit(0.5) * num / den)
}

/// `β = t · min G` over the closed core square `K_{0,0}`.
pub fn compute_beta<T: Scalar>(t: T, green: &GreenField<T>) -> T {
    t * green.min_over_concentric(core_half())
}

/// One solved half strip with its constants.
#[derive(Clone, Debug)]
pub struct HalfStripModel<T> {
    pub side: Side,
    pub n_max: u32,
    /// Solution on the perforated period cell, in the upper frame.
    pub base: Field<T>,
    /// Green function of the fundamental square, shared by both halves.
    pub green: Arc<GreenField<T>>,
    pub t: T,
    pub m: T,
    pub beta: T,
    /// Abscissa (frame) where the minimum on `Im z = 2/3` is attained.
    pub m_argmin: T,
    /// Extremal normal derivatives entering `t`.
    pub du_min: T,
    pub dg_max: T,
}

impl<T: Scalar> HalfStripModel<T> {
    /// Extract the constants from solved fields.
    pub fn from_fields(side: Side, n_max: u32, base: Field<T>, green: Arc<GreenField<T>>) -> Result<Self> {
        let offset = base.grid().h * T::lit(2.0);
        let (m, m_argmin) = compute_m(&base)?;
        let du = outward_profile(&base, frame_center(side), offset)?;
        let dg = green.inward_normal_profile(offset);
        let t = choose_t(&du, &dg)?;
        let beta = compute_beta(t, &green);
        Ok(Self {
            side,
            n_max,
            base,
            green,
            t,
            m,
            beta,
            m_argmin,
            du_min: du.min(),
            dg_max: dg.max(),
        })
    }

    pub fn solve(side: Side, n_max: u32, h: T, opts: SolveOptions<T>, green: Arc<GreenField<T>>) -> Result<Self> {
        let mut base = solve_dirichlet(&PeriodCell::new(side, n_max), h, opts)?;
        base.label = side_label(side).to_string();
        Self::from_fields(side, n_max, base, green)
    }

    pub fn h(&self) -> T {
        self.base.grid().h
    }

    /// Center of the fundamental square in the frame.
    pub fn frame_center(&self) -> Complex<T> {
        frame_center(self.side)
    }

    /// Strip point to frame point.
    pub fn to_frame(&self, z: Complex<T>) -> Complex<T> {
        match self.side {
            Side::Upper => z,
            Side::Lower => z.conj(),
        }
    }

    /// `M^-n`.
    pub fn scale(&self, n: u32) -> T {
        self.m.powi(-(n as i32))
    }

    /// Base field at a frame point (no square dispatch).
    pub fn base_value(&self, w: Complex<T>) -> T {
        self.base.value_at(w.re, w.im)
    }

    /// `-t G` at a frame point of the fundamental square.
    pub fn core_value(&self, w: Complex<T>) -> T {
        -self.t * self.green.value_local(w - self.frame_center())
    }

    /// The square of this side containing the strip point `z`, if any.
    pub fn square_at(&self, z: Complex<T>) -> Option<SquareSpec> {
        locate_square(&z, &[Family::outer(self.side)], self.n_max).map(|l| l.square)
    }

    /// Model value at a strip point `z` on this side (`Im z` of the side's
    /// sign, `|Im z| <= 4/3`).
    pub fn value(&self, z: Complex<T>) -> T {
        let w = self.to_frame(z);
        if w.im >= strip_height::<T>() {
            return T::one();
        }
        match self.square_at(z) {
            Some(square) => {
                let pre = square.element().preimage(&w);
                self.scale(square.n) * self.core_value(pre)
            }
            None => self.base_value(w),
        }
    }

    /// `M u(w/2) - u(w)` at a frame point of `D_0`.
    pub fn intermediate_margin(&self, w: Complex<T>) -> T {
        self.m * self.base_value(w * T::lit(0.5)) - self.base_value(w)
    }

    /// `u(γ w) - M^-n u(w)` at a frame point of `D_0`.
    pub fn selfsimilar_margin(&self, n: u32, k: i64, w: Complex<T>) -> T {
        let image = GroupElement::new(n, k).apply(&w);
        self.base_value(image) - self.scale(n) * self.base_value(w)
    }
}

fn frame_center<T: Scalar>(side: Side) -> Complex<T> {
    Complex::new(side.offset::<T>(), T::one())
}

fn side_label(side: Side) -> &'static str {
    match side {
        Side::Upper => "upper",
        Side::Lower => "lower",
    }
}

/// The potential on the closed strip `|Im z| <= 4/3`.
#[derive(Clone, Debug)]
pub struct GluedPotential<T> {
    pub upper: HalfStripModel<T>,
    pub lower: HalfStripModel<T>,
}

impl<T: Scalar> GluedPotential<T> {
    pub fn new(upper: HalfStripModel<T>, lower: HalfStripModel<T>) -> Self {
        assert_eq!(upper.side, Side::Upper);
        assert_eq!(lower.side, Side::Lower);
        Self { upper, lower }
    }

    pub fn h(&self) -> T {
        self.upper.h()
    }

    pub fn n_max(&self) -> u32 {
        self.upper.n_max
    }

    pub fn model(&self, side: Side) -> &HalfStripModel<T> {
        match side {
            Side::Upper => &self.upper,
            Side::Lower => &self.lower,
        }
    }

    /// Value at `z`; `NaN` outside the closed strip.
    pub fn evaluate(&self, z: Complex<T>) -> T {
        if !(z.im.abs() <= strip_height::<T>()) || !z.re.is_finite() {
            return T::nan();
        }
        if z.im == T::zero() {
            T::zero()
        } else if z.im > T::zero() {
            self.upper.value(z)
        } else {
            self.lower.value(z)
        }
    }

    pub fn try_evaluate(&self, z: Complex<T>) -> Result<T> {
        let v = self.evaluate(z);
        if v.is_nan() {
            return Err(Error::OutsideDomain {
                re: z.re.as_f64(),
                im: z.im.as_f64(),
            });
        }
        Ok(v)
    }

    /// `min(β, β₁)` and `max(M, M₁)`.
    pub fn beta_tilde(&self) -> T {
        self.upper.beta.min(self.lower.beta)
    }

    pub fn m_tilde(&self) -> T {
        self.upper.m.max(self.lower.m)
    }
}

impl<T: Scalar> Potential<T> for GluedPotential<T> {
    fn value(&self, z: Complex<T>) -> T {
        self.evaluate(z)
    }

    fn contains_disk(&self, z: Complex<T>, r: T) -> bool {
        z.re.is_finite() && z.im.abs() + r <= strip_height::<T>()
    }
}

/// Solve both half strips and the shared Green function.
pub fn build_glued<T: Scalar>(h: T, n_max: u32, opts: SolveOptions<T>) -> Result<GluedPotential<T>> {
    let green = Arc::new(green_square(Complex::new(T::zero(), T::one()), outer_half(), h, opts)?);
    let upper = HalfStripModel::solve(Side::Upper, n_max, h, opts, green.clone())?;
    let lower = HalfStripModel::solve(Side::Lower, n_max, h, opts, green)?;
    Ok(GluedPotential::new(upper, lower))
}
