//! Green function of an axis-aligned square with its pole at the center.
//!
//! `G(z) = -(1/2π) log|z - c| + H(z)` where `H` is harmonic in the square with
//! boundary data `(1/2π) log|z - c|`, so that `G = 0` on the boundary and
//! `-ΔG = δ_c`. Only `H` is sampled; the logarithm is always evaluated
//! analytically and the pole itself is never a grid node.

use std::sync::Arc;

use num_complex::Complex;

use crate::error::Result;
use crate::laplace::field::Field;
use crate::laplace::grid::Grid;
use crate::laplace::normal::{one_sided_derivative, EdgeProfile};
use crate::laplace::solver::{sor_solve, SolveOptions};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct GreenField<T> {
    pub center: Complex<T>,
    pub half: T,
    /// Harmonic part `H` on the box grid.
    pub regular: Field<T>,
}

#[inline]
fn singular_part<T: Scalar>(z: Complex<T>, center: Complex<T>) -> T {
    -(z - center).norm().ln() / (T::lit(2.0) * T::PI())
}

/// Odd number of cells closest to `2 half / h`, so that the center is a cell
/// center rather than a node.
pub fn green_cells<T: Scalar>(half: T, h: T) -> usize {
    let m = (half * T::lit(2.0) / h).round().to_usize().unwrap_or(1).max(3);
    if m % 2 == 0 {
        m + 1
    } else {
        m
    }
}

/// Box grid carrying the Dirichlet data of the harmonic part `H`.
pub fn green_grid<T: Scalar>(center: Complex<T>, half: T, h: T) -> Grid<T> {
    Grid::square_box(center, half, green_cells(half, h), |z| -singular_part(z, center))
}

/// Green function of the square of half side `half` centered at `center`,
/// sampled with spacing close to `h`.
pub fn green_square<T: Scalar>(center: Complex<T>, half: T, h: T, opts: SolveOptions<T>) -> Result<GreenField<T>> {
    let grid = Arc::new(green_grid(center, half, h));
    let out = sor_solve(&grid, None, opts)?;
    let regular = Field::new(grid, out.values, "green-regular").with_solve_info(out.residual, out.sweeps);
    Ok(GreenField { center, half, regular })
}

impl<T: Scalar> GreenField<T> {
    pub fn from_regular(center: Complex<T>, half: T, regular: Field<T>) -> Self {
        Self { center, half, regular }
    }

    /// `G(z)` for `z` in the closed square; `+inf` at the pole.
    pub fn value(&self, z: Complex<T>) -> T {
        if z == self.center {
            return T::infinity();
        }
        singular_part(z, self.center) + self.regular.value_at_point(z)
    }

    /// `G` in coordinates relative to the center.
    pub fn value_local(&self, dz: Complex<T>) -> T {
        self.value(self.center + dz)
    }

    /// `G` at grid node `(i, j)`; exactly zero on the boundary nodes.
    pub fn node_value(&self, i: usize, j: usize) -> T {
        let g = self.regular.grid();
        let z = Complex::new(g.x(i), g.y(j));
        let p = g.index(i, j);
        if matches!(g.roles[p], crate::laplace::grid::Role::Dirichlet(_)) {
            return singular_part(z, self.center) + (-singular_part(z, self.center));
        }
        singular_part(z, self.center) + self.regular.values()[p]
    }

    pub fn contains(&self, z: Complex<T>) -> bool {
        (z.re - self.center.re).abs() <= self.half && (z.im - self.center.im).abs() <= self.half
    }

    /// Minimum of `G` over the closed concentric square of half side
    /// `inner_half`: grid nodes inside plus a dense sampling of its boundary
    /// (the minimum sits at the corners).
    pub fn min_over_concentric(&self, inner_half: T) -> T {
        let g = self.regular.grid();
        let mut best = T::infinity();
        for j in 0..g.ny {
            for i in 0..g.nx {
                let z = Complex::new(g.x(i), g.y(j));
                if (z.re - self.center.re).abs() <= inner_half && (z.im - self.center.im).abs() <= inner_half {
                    best = best.min(self.node_value(i, j));
                }
            }
        }
        let steps = (inner_half * T::lit(8.0) / g.h).ceil().to_usize().unwrap_or(8).max(8);
        for s in 0..=steps {
            let t = -inner_half + inner_half * T::lit(2.0) * T::from_usize_lossy(s) / T::from_usize_lossy(steps);
            for dz in [
                Complex::new(t, inner_half),
                Complex::new(t, -inner_half),
                Complex::new(inner_half, t),
                Complex::new(-inner_half, t),
            ] {
                best = best.min(self.value_local(dz));
            }
        }
        best
    }

    /// Inward normal derivative on the bottom, top, left and right sides,
    /// sampled at boundary nodes at least `offset` away from the corners.
    pub fn inward_side_profiles(&self, offset: T) -> [EdgeProfile<T>; 4] {
        let g = self.regular.grid();
        let n = g.nx;
        let h = g.h;
        let two_h = h * T::lit(2.0);
        let mut profiles: [EdgeProfile<T>; 4] = Default::default();
        for s in 1..n - 1 {
            let along = g.x(s) - self.center.re;
            if along.abs() > self.half - offset {
                continue;
            }
            // (boundary node, first inner node, second inner node) per side
            let sides = [
                ((s, 0), (s, 1), (s, 2)),
                ((s, n - 1), (s, n - 2), (s, n - 3)),
                ((0, s), (1, s), (2, s)),
                ((n - 1, s), (n - 2, s), (n - 3, s)),
            ];
            for (profile, (b, p1, p2)) in profiles.iter_mut().zip(sides) {
                let d = one_sided_derivative(
                    self.node_value(b.0, b.1),
                    h,
                    self.node_value(p1.0, p1.1),
                    two_h,
                    self.node_value(p2.0, p2.1),
                );
                profile.positions.push(along);
                profile.derivatives.push(d);
            }
        }
        profiles
    }

    /// All four sides of [`Self::inward_side_profiles`] concatenated.
    pub fn inward_normal_profile(&self, offset: T) -> EdgeProfile<T> {
        let mut all = EdgeProfile::default();
        for p in self.inward_side_profiles(offset) {
            all.extend(p);
        }
        all
    }

    /// Largest sampled value (over nodes; the pole is not a node).
    pub fn max_sampled(&self) -> T {
        let g = self.regular.grid();
        let mut best = T::neg_infinity();
        for j in 0..g.ny {
            for i in 0..g.nx {
                best = best.max(self.node_value(i, j));
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GreenField<f64> {
        green_square(Complex::new(0.0, 1.0), 0.3, 1.0 / 64.0, SolveOptions::new(1e-13, 100_000)).unwrap()
    }

    #[test]
    fn zero_on_boundary_positive_inside() {
        let g = small();
        let grid = g.regular.grid();
        assert_eq!(grid.nx % 2, 0, "odd cell count means even node count");
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let v = g.node_value(i, j);
                if i == 0 || j == 0 || i == grid.nx - 1 || j == grid.ny - 1 {
                    assert_eq!(v, 0.0);
                } else {
                    assert!(v > 0.0);
                }
            }
        }
        assert_eq!(g.value(Complex::new(0.0, 1.0)), f64::INFINITY);
    }

    #[test]
    fn symmetric_under_both_reflections() {
        let g = small();
        for (x, y) in [(0.1, 1.05), (0.22, 0.8), (0.05, 1.27)] {
            let v = g.value(Complex::new(x, y));
            assert!((v - g.value(Complex::new(-x, y))).abs() < 1e-9);
            assert!((v - g.value(Complex::new(x, 2.0 - y))).abs() < 1e-9);
            assert!((v - g.value(Complex::new(y - 1.0, x + 1.0))).abs() < 1e-9);
        }
    }

    #[test]
    fn cell_count_is_odd() {
        assert_eq!(green_cells(0.3f64, 1.0 / 512.0), 307);
        assert_eq!(green_cells(0.3f64, 1.0 / 1024.0), 615);
        assert_eq!(green_cells(0.3f64, 1.0 / 256.0), 155);
    }
}
