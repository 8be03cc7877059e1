//! One-sided normal derivatives along axis-aligned edges.

use crate::error::{Error, Result};
use crate::laplace::field::Field;
use crate::laplace::grid::{Layout, Role};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    PlusX,
    MinusX,
    PlusY,
    MinusY,
}

impl Direction {
    fn is_vertical_edge(self) -> bool {
        matches!(self, Direction::PlusX | Direction::MinusX)
    }

    fn sign(self) -> i64 {
        match self {
            Direction::PlusX | Direction::PlusY => 1,
            _ => -1,
        }
    }
}

/// Straight edge `{coord = at, lo <= other <= hi}` carrying the Dirichlet
/// value `boundary_value`; grid samples are taken on the `samples` side.
#[derive(Clone, Copy, Debug)]
pub struct Edge<T> {
    pub at: T,
    pub lo: T,
    pub hi: T,
    pub samples: Direction,
    pub boundary_value: T,
}

#[derive(Clone, Debug, Default)]
pub struct EdgeProfile<T> {
    /// Coordinate along the edge.
    pub positions: Vec<T>,
    /// Derivative in the `samples` direction.
    pub derivatives: Vec<T>,
}

impl<T: Scalar> EdgeProfile<T> {
    pub fn min(&self) -> T {
        self.derivatives.iter().fold(T::infinity(), |a, b| a.min(*b))
    }

    pub fn max(&self) -> T {
        self.derivatives.iter().fold(T::neg_infinity(), |a, b| a.max(*b))
    }

    pub fn negated(mut self) -> Self {
        for d in &mut self.derivatives {
            *d = -*d;
        }
        self
    }

    pub fn extend(&mut self, other: EdgeProfile<T>) {
        self.positions.extend(other.positions);
        self.derivatives.extend(other.derivatives);
    }

    pub fn len(&self) -> usize {
        self.derivatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.derivatives.is_empty()
    }
}

/// Derivative at distance 0 of the quadratic through `(0, u0)`, `(d1, u1)`,
/// `(d2, u2)`.
#[inline]
pub fn one_sided_derivative<T: Scalar>(u0: T, d1: T, u1: T, d2: T, u2: T) -> T {
    ((u1 - u0) * d2 * d2 - (u2 - u0) * d1 * d1) / (d1 * d2 * (d2 - d1))
}

/// Second-order one-sided derivative of `field` across `edge`, sampled at
/// the grid lines crossing the edge at least `offset` away from its ends.
pub fn normal_derivative<T: Scalar>(field: &Field<T>, edge: &Edge<T>, offset: T) -> Result<EdgeProfile<T>> {
    let g = field.grid();
    let h = g.h;
    let vertical = edge.samples.is_vertical_edge();
    let (origin_n, origin_t) = if vertical { (g.x0, g.y0) } else { (g.y0, g.x0) };
    let (count_n, count_t) = if vertical { (g.nx, g.ny) } else { (g.ny, g.nx) };
    let periodic_n = vertical && g.layout == Layout::Strip;
    let periodic_t = !vertical && g.layout == Layout::Strip;

    // First grid line strictly on the sample side of the edge.
    let s = (edge.at - origin_n) / h;
    let first: i64 = if edge.samples.sign() > 0 {
        s.floor().to_i64().unwrap() + 1
    } else {
        s.ceil().to_i64().unwrap() - 1
    };
    let step = edge.samples.sign();
    let coord_n = |k: i64| origin_n + h * T::lit(k as f64);
    let d1 = (coord_n(first) - edge.at).abs();
    let d2 = d1 + h;
    if d1 <= h * T::lit(1e-9) {
        return Err(Error::Geometry("edge coincides with a sampled grid line".into()));
    }

    let wrap = |k: i64, n: usize, periodic: bool| -> Option<usize> {
        if periodic {
            Some(k.rem_euclid(n as i64) as usize)
        } else if k >= 0 && (k as usize) < n {
            Some(k as usize)
        } else {
            None
        }
    };

    let t_lo = ((edge.lo + offset - origin_t) / h).ceil().to_i64().unwrap();
    let t_hi = ((edge.hi - offset - origin_t) / h).floor().to_i64().unwrap();
    let mut profile = EdgeProfile::default();
    for t in t_lo..=t_hi {
        let tt = wrap(t, count_t, periodic_t)
            .ok_or_else(|| Error::Geometry("edge extends beyond the grid".into()))?;
        let mut samples = [T::zero(); 2];
        for (slot, k) in [first, first + step].into_iter().enumerate() {
            let nn = wrap(k, count_n, periodic_n)
                .ok_or_else(|| Error::Geometry("normal samples fall outside the grid".into()))?;
            let (i, j) = if vertical { (nn, tt) } else { (tt, nn) };
            let p = g.index(i, j);
            if let Role::Excluded(_) = g.roles[p] {
                return Err(Error::Geometry("square not resolved on grid: normal sample inside a hole".into()));
            }
            samples[slot] = field.values()[p];
        }
        profile.positions.push(origin_t + h * T::lit(t as f64));
        profile
            .derivatives
            .push(one_sided_derivative(edge.boundary_value, d1, samples[0], d2, samples[1]));
    }
    if profile.is_empty() {
        return Err(Error::Geometry("edge shorter than the corner exclusion".into()));
    }
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_fit_is_exact_for_quadratics() {
        let f = |s: f64| 0.3 + 1.7 * s - 2.5 * s * s;
        let d = one_sided_derivative(f(0.0), 0.013, f(0.013), 0.04, f(0.04));
        assert!((d - 1.7).abs() < 1e-12);
    }
}
