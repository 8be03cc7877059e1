//! Structured grids and their discrete Laplace stencils.
//!
//! Two layouts are supported: a periodic strip cell `[0, 1) x [0, y_top]` with
//! rectangular holes, and a closed box whose boundary falls on grid lines.
//! Boundaries that do not coincide with grid lines (hole edges, the top line
//! of the strip) are handled with Shortley-Weller stencils: the arm towards
//! the boundary is shortened to the exact crossing distance and the boundary
//! datum enters the right hand side. The scheme is exact for linear functions.
//!
//! Hole corners are re-entrant corners of the strip, where the solution
//! behaves like `ρ^{2/3}`. Free nodes within a few cells of a corner get
//! weights fitted to the corner's singular functions instead, which restores
//! second-order convergence of the constants read off the channels.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::geometry::{strip_height, PeriodCell, Side};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Role<T> {
    Interior,
    Dirichlet(T),
    /// Node inside the hole with the given index into [`Grid::holes`].
    Excluded(u32),
}

/// Axis-aligned closed rectangle removed from the strip, in grid frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hole<T> {
    pub x_min: T,
    pub x_max: T,
    pub y_min: T,
    pub y_max: T,
}

impl<T: Scalar> Hole<T> {
    fn contains(&self, x: T, y: T) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    /// Shift (in whole periods) that brings abscissa `x` into the hole's span.
    fn period_shift(&self, x: T) -> T {
        let mid = (self.x_min + self.x_max) * T::lit(0.5);
        (x - mid).round()
    }
}

pub(crate) const FIXED: u32 = u32::MAX;
pub(crate) const REGULAR: u32 = u32::MAX - 1;

/// Normalized stencil `u_p = Σ w_d u_{nbr_d} + rhs` of a node with at least
/// one shortened arm. Arm order is E, W, N, S.
#[derive(Clone, Copy, Debug)]
pub struct CutStencil<T> {
    pub arms: [T; 4],
    pub weights: [T; 4],
    pub neighbors: [u32; 4],
    pub rhs: T,
    /// Relaxed without over-relaxation. Corner-fitted weights are not
    /// symmetrizable, and over-relaxing them can diverge.
    pub plain: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    /// Periodic in x, bottom row Dirichlet, top boundary between rows.
    Strip,
    /// Closed box with Dirichlet boundary on the outer grid lines.
    Box,
}

#[derive(Clone, Debug)]
pub struct Grid<T> {
    pub layout: Layout,
    pub h: T,
    pub x0: T,
    pub y0: T,
    pub nx: usize,
    pub ny: usize,
    pub roles: Vec<Role<T>>,
    pub holes: Vec<Hole<T>>,
    /// Boundary line above the last row and its datum (strip layout).
    pub top: Option<(T, T)>,
    /// Over-relaxation factor for red-black SOR.
    pub omega: T,
    pub(crate) kind: Vec<u32>,
    pub(crate) cuts: Vec<CutStencil<T>>,
}

/// Radius (in cells) around a hole corner within which stencils are made
/// exact for the corner's singular functions.
pub const CORNER_REACH: f64 = 2.5;

/// Number of singular functions a corrected stencil reproduces (fewer when
/// the node has fewer than four free neighbors).
const CORNER_TERMS: usize = 3;

/// `ρ^{2k/3} sin(2kφ/3)` about a corner whose hole fills the quadrant
/// `x, y <= 0`; `φ` runs from the face `y = 0, x < 0` through the domain to
/// the face `x = 0, y < 0`.
pub fn corner_singular<T: Scalar>(k: usize, z: Complex<T>) -> T {
    let third = T::lit(2.0 * k as f64 / 3.0);
    let phi = T::PI() - z.im.atan2(z.re);
    z.norm().powf(third) * (third * phi).sin()
}

/// Weights closest to `base` (least squares) that are exact for the first
/// singular functions, one fewer than there are free neighbors. `None`
/// unless they are positive and sum to at most one, so the stencil keeps its
/// maximum principle.
fn singular_weights<T: Scalar>(at: Complex<T>, points: &[Complex<T>], base: &[T]) -> Option<Vec<T>> {
    let m = points.len();
    if m < 2 {
        return None;
    }
    let k = (m - 1).min(CORNER_TERMS);
    let rows: Vec<Vec<T>> = (1..=k).map(|s| points.iter().map(|&q| corner_singular(s, q)).collect()).collect();
    let targets: Vec<T> = (1..=k).map(|s| corner_singular(s, at)).collect();
    // defect of the base weights, then w = base + A^T (A A^T)^{-1} defect
    let defect: Vec<T> = (0..k)
        .map(|r| targets[r] - rows[r].iter().zip(base).fold(T::zero(), |acc, (a, w)| acc + *a * *w))
        .collect();
    let gram = |r: usize, c: usize| rows[r].iter().zip(&rows[c]).fold(T::zero(), |acc, (a, b)| acc + *a * *b);
    let mut a: Vec<Vec<T>> = (0..k).map(|r| (0..k).map(|c| gram(r, c)).chain([defect[r]]).collect()).collect();
    for col in 0..k {
        let piv = (col..k).max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())?;
        a.swap(col, piv);
        if !(a[col][col].abs() > T::epsilon() * T::lit(1e3) * gram(col, col)) {
            return None;
        }
        for r in 0..k {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=k {
                    let v = a[col][c];
                    a[r][c] = a[r][c] - f * v;
                }
            }
        }
    }
    let lambda: Vec<T> = (0..k).map(|r| a[r][k] / a[r][r]).collect();
    let w: Vec<T> = (0..m)
        .map(|l| base[l] + (0..k).fold(T::zero(), |acc, r| acc + rows[r][l] * lambda[r]))
        .collect();
    let sum = w.iter().fold(T::zero(), |acc, v| acc + *v);
    (w.iter().all(|v| *v > T::zero() && v.is_finite()) && sum <= T::one()).then_some(w)
}

fn sor_omega<T: Scalar>(rho_jacobi: T) -> T {
    let two = T::lit(2.0);
    two / (T::one() + (T::one() - rho_jacobi * rho_jacobi).max(T::zero()).sqrt())
}

/// `log2(1/h)` when `h` is the reciprocal of a power of two.
pub fn dyadic_level<T: Scalar>(h: T) -> Option<u32> {
    if !(h > T::zero()) || h > T::one() {
        return None;
    }
    let inv = T::one() / h;
    let m = inv.log2().round();
    let m_u = m.to_u32()?;
    (m_u <= 24 && (T::lit(2.0).powi(m_u as i32) * h - T::one()).abs() < T::epsilon() * T::lit(4.0)).then_some(m_u)
}

impl<T: Scalar> Grid<T> {
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> T {
        self.x0 + self.h * T::from_usize_lossy(i)
    }

    #[inline]
    pub fn y(&self, j: usize) -> T {
        self.y0 + self.h * T::from_usize_lossy(j)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_free(&self, p: usize) -> bool {
        matches!(self.roles[p], Role::Interior)
    }

    pub fn free_count(&self) -> usize {
        self.roles.iter().filter(|r| matches!(r, Role::Interior)).count()
    }

    pub(crate) fn cut(&self, p: usize) -> Option<&CutStencil<T>> {
        let k = self.kind[p];
        (k != FIXED && k != REGULAR).then(|| &self.cuts[k as usize])
    }

    /// Periodic strip cell of `cell` with spacing `h` (a reciprocal power of
    /// two). The lower half strip is represented in its reflected frame
    /// `z -> conj z`, so both halves share the upper layout.
    pub fn strip(cell: &PeriodCell, h: T) -> Result<Self> {
        let top = strip_height::<f64>();
        Self::strip_with_top(cell, h, T::lit(top), T::one())
    }

    pub fn strip_with_top(cell: &PeriodCell, h: T, y_top: T, top_value: T) -> Result<Self> {
        let level = dyadic_level(h)
            .ok_or_else(|| Error::Config(format!("grid spacing {h} is not a reciprocal power of two")))?;
        if level < 2 {
            return Err(Error::Config(format!("grid spacing {h} too coarse")));
        }
        let nx = 1usize << level;
        let rows_f = (y_top / h).floor();
        let mut last = rows_f.to_usize().unwrap_or(0);
        if y_top - h * T::from_usize_lossy(last) < h * T::lit(1e-6) {
            last -= 1;
        }
        let ny = last + 1;

        let holes: Vec<Hole<T>> = cell
            .squares
            .iter()
            .map(|s| {
                let (x_min, x_max) = s.x_range::<f64>();
                let (ylo, yhi) = s.y_range::<f64>();
                let (y_min, y_max) = match cell.side {
                    Side::Upper => (ylo, yhi),
                    Side::Lower => (-yhi, -ylo),
                };
                Hole {
                    x_min: T::lit(x_min),
                    x_max: T::lit(x_max),
                    y_min: T::lit(y_min),
                    y_max: T::lit(y_max),
                }
            })
            .collect();

        let mut roles = vec![Role::Interior; nx * ny];
        for i in 0..nx {
            roles[i] = Role::Dirichlet(T::zero());
        }
        for (si, hole) in holes.iter().enumerate() {
            let i_lo = (hole.x_min / h).ceil().to_i64().unwrap();
            let i_hi = (hole.x_max / h).floor().to_i64().unwrap();
            let j_lo = (hole.y_min / h).ceil().to_usize().unwrap().max(1);
            let j_hi = (hole.y_max / h).floor().to_usize().unwrap().min(ny - 1);
            for ii in i_lo..=i_hi {
                let i = ii.rem_euclid(nx as i64) as usize;
                for j in j_lo..=j_hi {
                    roles[j * nx + i] = Role::Excluded(si as u32);
                }
            }
        }

        let mut grid = Grid {
            layout: Layout::Strip,
            h,
            x0: T::zero(),
            y0: T::zero(),
            nx,
            ny,
            roles,
            holes,
            top: Some((y_top, top_value)),
            omega: T::one(),
            kind: Vec::new(),
            cuts: Vec::new(),
        };
        let rho = (T::one() + (T::PI() * h / y_top).cos()) * T::lit(0.5);
        grid.omega = sor_omega(rho);
        grid.build_stencils();
        grid.correct_corners();
        Ok(grid)
    }

    /// Closed box `[cx - a, cx + a] x [cy - a, cy + a]` with `cells` cells per
    /// side and Dirichlet data `boundary(z)` on the outer grid lines.
    pub fn square_box(center: Complex<T>, half: T, cells: usize, boundary: impl Fn(Complex<T>) -> T) -> Self {
        let n = cells + 1;
        let h = half * T::lit(2.0) / T::from_usize_lossy(cells);
        let x0 = center.re - half;
        let y0 = center.im - half;
        let mut roles = vec![Role::Interior; n * n];
        for j in 0..n {
            for i in 0..n {
                if i == 0 || j == 0 || i == cells || j == cells {
                    let z = Complex::new(x0 + h * T::from_usize_lossy(i), y0 + h * T::from_usize_lossy(j));
                    roles[j * n + i] = Role::Dirichlet(boundary(z));
                }
            }
        }
        let mut grid = Grid {
            layout: Layout::Box,
            h,
            x0,
            y0,
            nx: n,
            ny: n,
            roles,
            holes: Vec::new(),
            top: None,
            omega: T::one(),
            kind: Vec::new(),
            cuts: Vec::new(),
        };
        grid.omega = sor_omega((T::PI() / T::from_usize_lossy(cells)).cos());
        grid.build_stencils();
        grid
    }

    /// Neighbor of node `(i, j)` in direction `d` (E, W, N, S), if on the grid.
    pub(crate) fn neighbor(&self, i: usize, j: usize, d: usize) -> Option<(usize, usize)> {
        match d {
            0 => {
                if i + 1 < self.nx {
                    Some((i + 1, j))
                } else if self.layout == Layout::Strip {
                    Some((0, j))
                } else {
                    None
                }
            }
            1 => {
                if i > 0 {
                    Some((i - 1, j))
                } else if self.layout == Layout::Strip {
                    Some((self.nx - 1, j))
                } else {
                    None
                }
            }
            2 => (j + 1 < self.ny).then(|| (i, j + 1)),
            _ => (j > 0).then(|| (i, j - 1)),
        }
    }

    fn build_stencils(&mut self) {
        let h = self.h;
        let mut kind = vec![FIXED; self.len()];
        let mut cuts = Vec::new();
        for j in 0..self.ny {
            for i in 0..self.nx {
                let p = self.index(i, j);
                if !matches!(self.roles[p], Role::Interior) {
                    continue;
                }
                let (x, y) = (self.x(i), self.y(j));
                let mut arms = [T::one(); 4];
                let mut bvals = [T::zero(); 4];
                let mut neighbors = [p as u32; 4];
                for d in 0..4 {
                    match self.neighbor(i, j, d) {
                        None => {
                            // Only the strip top can be missing for a free node.
                            let (y_top, value) = self.top.expect("free node on open edge");
                            arms[d] = (y_top - y) / h;
                            bvals[d] = value;
                        }
                        Some((ni, nj)) => {
                            let q = self.index(ni, nj);
                            neighbors[d] = q as u32;
                            if let Role::Excluded(s) = self.roles[q] {
                                let hole = &self.holes[s as usize];
                                arms[d] = match d {
                                    0 => {
                                        let xn = x + h;
                                        (hole.x_min + hole.period_shift(xn) - x) / h
                                    }
                                    1 => {
                                        let xn = x - h;
                                        (x - hole.x_max - hole.period_shift(xn)) / h
                                    }
                                    2 => (hole.y_min - y) / h,
                                    _ => (y - hole.y_max) / h,
                                };
                                bvals[d] = T::zero();
                            }
                        }
                    }
                }
                let regular = arms.iter().all(|a| *a == T::one());
                if regular {
                    kind[p] = REGULAR;
                    continue;
                }
                let two = T::lit(2.0);
                let (ae, aw, an, as_) = (arms[0], arms[1], arms[2], arms[3]);
                let cx = two / (ae + aw);
                let cy = two / (an + as_);
                let raw = [cx / ae, cx / aw, cy / an, cy / as_];
                let diag = raw.iter().fold(T::zero(), |acc, r| acc + *r);
                let mut weights = [T::zero(); 4];
                let mut rhs = T::zero();
                for d in 0..4 {
                    if arms[d] < T::one() || neighbors[d] == p as u32 {
                        rhs = rhs + raw[d] * bvals[d] / diag;
                        neighbors[d] = p as u32;
                    } else {
                        weights[d] = raw[d] / diag;
                    }
                }
                kind[p] = cuts.len() as u32;
                cuts.push(CutStencil {
                    arms,
                    weights,
                    neighbors,
                    rhs,
                    plain: false,
                });
            }
        }
        self.kind = kind;
        self.cuts = cuts;
    }

    /// Replace the stencils of free nodes within [`CORNER_REACH`] of a hole
    /// corner by ones exact for the corner's singular functions
    /// `ρ^{2k/3} sin(2kφ/3)`, one per free neighbor. These span the harmonic
    /// functions vanishing on both faces near the corner, which the Taylor
    /// based stencils reproduce only to `O(h^{2/3})`. Nodes whose stencil
    /// touches a nonzero datum, or whose corrected weights are not positive,
    /// keep their stencil. Corrected nodes are relaxed without
    /// over-relaxation.
    fn correct_corners(&mut self) {
        let h = self.h;
        let nx = self.nx as i64;
        let reach = T::lit(CORNER_REACH) * h;
        let steps = [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)];
        for s in 0..self.holes.len() {
            let hole = self.holes[s];
            for (cx, sx) in [(hole.x_min, -T::one()), (hole.x_max, T::one())] {
                for (cy, sy) in [(hole.y_min, -T::one()), (hole.y_max, T::one())] {
                    let ic = (cx / h).floor().to_i64().unwrap_or(0);
                    let jc = (cy / h).floor().to_i64().unwrap_or(0);
                    for jj in (jc - 2).max(1)..=(jc + 3).min(self.ny as i64 - 1) {
                        for ii in ic - 2..=ic + 3 {
                            let p = self.index(ii.rem_euclid(nx) as usize, jj as usize);
                            if !matches!(self.roles[p], Role::Interior) {
                                continue;
                            }
                            let local = |a: i64, b: i64| {
                                Complex::new(
                                    sx * (h * T::from_i64(a).unwrap() - cx),
                                    sy * (h * T::from_i64(b).unwrap() - cy),
                                )
                            };
                            let at = local(ii, jj);
                            if at.norm() > reach {
                                continue;
                            }
                            let stencil = match self.kind[p] {
                                REGULAR => CutStencil {
                                    arms: [T::one(); 4],
                                    weights: [T::lit(0.25); 4],
                                    neighbors: std::array::from_fn(|d| {
                                        let (a, b) = (ii + steps[d].0, jj + steps[d].1);
                                        self.index(a.rem_euclid(nx) as usize, b as usize) as u32
                                    }),
                                    rhs: T::zero(),
                                    plain: false,
                                },
                                k => self.cuts[k as usize],
                            };
                            if stencil.rhs != T::zero() {
                                continue;
                            }
                            let free: Vec<usize> = (0..4).filter(|&d| stencil.neighbors[d] != p as u32).collect();
                            let points: Vec<Complex<T>> =
                                free.iter().map(|&d| local(ii + steps[d].0, jj + steps[d].1)).collect();
                            let base: Vec<T> = free.iter().map(|&d| stencil.weights[d]).collect();
                            let Some(w) = singular_weights(at, &points, &base) else { continue };
                            let mut weights = [T::zero(); 4];
                            for (&d, &wd) in free.iter().zip(&w) {
                                weights[d] = wd;
                            }
                            let corrected = CutStencil { weights, plain: true, ..stencil };
                            match self.kind[p] {
                                REGULAR => {
                                    self.kind[p] = self.cuts.len() as u32;
                                    self.cuts.push(corrected);
                                }
                                k => self.cuts[k as usize] = corrected,
                            }
                        }
                    }
                }
            }
        }
    }

    /// Minimum number of grid cells across any hole side.
    pub fn min_cells_per_hole_side(&self) -> Option<T> {
        self.holes
            .iter()
            .map(|hole| (hole.x_max - hole.x_min).min(hole.y_max - hole.y_min) / self.h)
            .fold(None, |acc: Option<T>, v| Some(acc.map_or(v, |a| a.min(v))))
    }

    /// Hole containing `(x, y)` (strip layout, periodic in x).
    pub fn hole_at(&self, x: T, y: T) -> Option<usize> {
        self.holes.iter().position(|hole| {
            let s = hole.period_shift(x);
            hole.contains(x - s, y)
        })
    }
}
