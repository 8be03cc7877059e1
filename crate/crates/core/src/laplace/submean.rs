//! Sub-mean-value test on circles.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Anything that can be evaluated pointwise on a known domain.
pub trait Potential<T: Scalar> {
    fn value(&self, z: Complex<T>) -> T;

    /// Whether the closed disk of radius `r` about `z` lies in the domain.
    fn contains_disk(&self, z: Complex<T>, r: T) -> bool;
}

/// Circle average (trapezoidal rule, `m` nodes) minus the center value.
///
/// A nonnegative margin is the sub-mean-value inequality at `(z, r)`.
pub fn sub_mean_test<T: Scalar, P: Potential<T> + ?Sized>(pot: &P, z: Complex<T>, r: T, m: usize) -> Result<T> {
    if !pot.contains_disk(z, r) {
        return Err(Error::DiskOutsideDomain {
            re: z.re.as_f64(),
            im: z.im.as_f64(),
            radius: r.as_f64(),
        });
    }
    let m = m.max(64);
    let mut acc = T::zero();
    let two_pi = T::lit(2.0) * T::PI();
    for s in 0..m {
        let theta = two_pi * T::from_usize_lossy(s) / T::from_usize_lossy(m);
        acc = acc + pot.value(z + Complex::from_polar(r, theta));
    }
    Ok(acc / T::from_usize_lossy(m) - pot.value(z))
}

/// Closure-backed potential on a rectangle `[x0, x1] x [y0, y1]` (the x
/// extent may be infinite).
pub struct FnPotential<F> {
    pub f: F,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
}

impl<T: Scalar, F: Fn(Complex<T>) -> T> Potential<T> for FnPotential<F> {
    fn value(&self, z: Complex<T>) -> T {
        (self.f)(z)
    }

    fn contains_disk(&self, z: Complex<T>, r: T) -> bool {
        let (x, y, r) = (z.re.as_f64(), z.im.as_f64(), r.as_f64());
        x - r >= self.x_range.0 && x + r <= self.x_range.1 && y - r >= self.y_range.0 && y + r <= self.y_range.1
    }
}
