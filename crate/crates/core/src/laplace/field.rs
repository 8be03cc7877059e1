use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex;

use crate::laplace::grid::{Grid, Layout, Role};
use crate::scalar::Scalar;

/// Scalar samples on a [`Grid`], interpolated by tensor cubics where the
/// 4x4 stencil is clear of boundaries and bilinearly elsewhere.
///
/// Interpolation uses a copy of the samples in which nodes just across a
/// boundary that does not fall on a grid line carry ghost values, linear
/// extrapolations through the boundary datum. Bilinear interpolation in cut
/// cells is then consistent with the boundary condition instead of dragging
/// the field towards the placeholder value stored in excluded nodes.
///
/// Ghosts are directional: an excluded cell corner takes the extrapolation
/// from its free neighbors inside the queried cell, so a hole corner never
/// mixes data from the two faces it separates.
#[derive(Clone, Debug)]
pub struct Field<T> {
    grid: Arc<Grid<T>>,
    values: Vec<T>,
    interp: Vec<T>,
    interp_rows: usize,
    /// Per excluded node, `(extrapolation, arm)` from its neighbor in each
    /// direction (E, W, N, S); `NaN` where that neighbor is not a cut node.
    ghosts: HashMap<usize, [(T, T); 4]>,
    /// Cells (by lower-left node) whose cubic stencil holds only interior,
    /// uncut nodes.
    smooth: Vec<bool>,
    pub residual: T,
    pub sweeps: usize,
    pub label: String,
}

impl<T: Scalar> Field<T> {
    pub fn new(grid: Arc<Grid<T>>, values: Vec<T>, label: impl Into<String>) -> Self {
        assert_eq!(values.len(), grid.len(), "field size does not match grid");
        let (interp, interp_rows, ghosts) = ghosted(&grid, &values);
        let smooth = smooth_cells(&grid);
        Self {
            grid,
            values,
            interp,
            interp_rows,
            ghosts,
            smooth,
            residual: T::zero(),
            sweeps: 0,
            label: label.into(),
        }
    }

    pub fn with_solve_info(mut self, residual: T, sweeps: usize) -> Self {
        self.residual = residual;
        self.sweeps = sweeps;
        self
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> T {
        self.values[self.grid.index(i, j)]
    }

    /// Interpolated value at `(x, y)`; exact at nodes and continuous. Strip fields wrap
    /// in `x` with period one; queries are clamped to the sampled band.
    pub fn value_at(&self, x: T, y: T) -> T {
        let g = &*self.grid;
        let mut u = (x - g.x0) / g.h;
        let v = (y - g.y0) / g.h;
        let nx = g.nx;
        let (i0, i1, fx) = match g.layout {
            Layout::Strip => {
                let n = T::from_usize_lossy(nx);
                u = u - (u / n).floor() * n;
                let fl = u.floor();
                let mut i0 = fl.to_usize().unwrap_or(0);
                let mut fx = u - fl;
                if i0 >= nx {
                    i0 = 0;
                    fx = T::zero();
                }
                (i0, (i0 + 1) % nx, fx)
            }
            Layout::Box => {
                let max = T::from_usize_lossy(nx - 1);
                let uc = u.max(T::zero()).min(max);
                let mut i0 = uc.floor().to_usize().unwrap_or(0);
                if i0 >= nx - 1 {
                    i0 = nx - 2;
                }
                (i0, i0 + 1, uc - T::from_usize_lossy(i0))
            }
        };
        let max_v = T::from_usize_lossy(self.interp_rows - 1);
        let vc = v.max(T::zero()).min(max_v);
        let mut j0 = vc.floor().to_usize().unwrap_or(0);
        if j0 >= self.interp_rows - 1 {
            j0 = self.interp_rows - 2;
        }
        let fy = vc - T::from_usize_lossy(j0);
        let one = T::one();
        if j0 + 1 < g.ny && self.smooth[g.index(i0, j0)] {
            return self.cubic(i0, j0, fx, fy);
        }
        if let Some(v) = self.hole_corner_cell([i0, i1], [j0, j0 + 1], fx, fy) {
            return v;
        }
        let a = self.corner_value(i0, j0, i1, j0 + 1, fx, fy);
        let b = self.corner_value(i1, j0, i0, j0 + 1, one - fx, fy);
        let c = self.corner_value(i0, j0 + 1, i1, j0, fx, one - fy);
        let d = self.corner_value(i1, j0 + 1, i0, j0, one - fx, one - fy);
        (a * (one - fx) + b * fx) * (one - fy) + (c * (one - fx) + d * fx) * fy
    }

    /// Tensor cubic Lagrange interpolation through the 4x4 nodes around cell
    /// `(i0, j0)`.
    fn cubic(&self, i0: usize, j0: usize, fx: T, fy: T) -> T {
        let g = &*self.grid;
        let nx = g.nx;
        let (wx, wy) = (cubic_weights(fx), cubic_weights(fy));
        let mut acc = T::zero();
        for (b, wyb) in wy.iter().enumerate() {
            let j = j0 + b - 1;
            let mut row = T::zero();
            for (a, wxa) in wx.iter().enumerate() {
                let i = (i0 + nx + a - 1) % nx;
                row = row + *wxa * self.values[g.index(i, j)];
            }
            acc = acc + *wyb * row;
        }
        acc
    }

    /// Interpolant of a cell containing exactly one excluded node `q` whose
    /// hole corner lies inside the cell. In coordinates `(X, Y)` with `q` at
    /// the origin and the hole edges at `X = xe`, `Y = ye`, the value is
    /// linear along the normal next to each edge and bilinear in the
    /// diagonal quadrant, with the datum at `q` chosen so that it vanishes
    /// at the hole corner. It is continuous and zero on both edges.
    fn hole_corner_cell(&self, cols: [usize; 2], rows: [usize; 2], fx: T, fy: T) -> Option<T> {
        let g = &*self.grid;
        let nx = g.nx;
        let excluded = |i: usize, j: usize| j < g.ny && matches!(g.roles[g.index(i, j)], Role::Excluded(_));
        let mut hit = None;
        for (a, &i) in cols.iter().enumerate() {
            for (b, &j) in rows.iter().enumerate() {
                if excluded(i, j) {
                    if hit.is_some() {
                        return None;
                    }
                    hit = Some((a, b));
                }
            }
        }
        let (a, b) = hit?;
        let ghosts = self.ghosts.get(&(rows[b] * nx + cols[a]))?;
        let dh = if a == 0 { 0 } else { 1 };
        let dv = if b == 0 { 2 } else { 3 };
        let (arm_h, arm_v) = (ghosts[dh].1, ghosts[dv].1);
        if arm_h.is_nan() || arm_v.is_nan() {
            return None;
        }
        let one = T::one();
        let node = |aa: usize, bb: usize| self.interp[rows[bb] * nx + cols[aa]];
        let (uh, uv, ud) = (node(1 - a, b), node(a, 1 - b), node(1 - a, 1 - b));
        let x = if a == 0 { fx } else { one - fx };
        let y = if b == 0 { fy } else { one - fy };
        let (xe, ye) = (one - arm_h, one - arm_v);
        Some(match (x >= xe, y >= ye) {
            (true, true) => {
                let w = arm_h * arm_v;
                if w <= T::epsilon() {
                    return Some(T::zero());
                }
                let gq = -(xe * arm_v * uh + arm_h * ye * uv + xe * ye * ud) / w;
                (one - x) * (one - y) * gq + x * (one - y) * uh + (one - x) * y * uv + x * y * ud
            }
            (false, true) => ((one - x) * uv + x * ud) * (y - ye) / arm_v,
            (true, false) => ((one - y) * uh + y * ud) * (x - xe) / arm_h,
            (false, false) => T::zero(),
        })
    }

    /// Interpolation datum of corner `(i, j)` of a cell whose other column
    /// is `ci` and other row is `cj`; `(dx, dy)` is the query offset from the
    /// corner in cell units. An excluded corner uses the ghost of the edge the
    /// query lies beyond, both ghosts averaged near a hole corner.
    fn corner_value(&self, i: usize, j: usize, ci: usize, cj: usize, dx: T, dy: T) -> T {
        let p = j * self.grid.nx + i;
        let Some(g) = self.ghosts.get(&p) else {
            return self.interp[p];
        };
        let dh = if ci == (i + 1) % self.grid.nx { 0 } else { 1 };
        let dv = if cj > j { 2 } else { 3 };
        let (gh, gv) = (g[dh], g[dv]);
        // ghost from the neighbor at distance 1 with arm a: edge at 1 - a
        let beyond = |(value, arm): (T, T), d: T| !value.is_nan() && d >= T::one() - arm;
        let two = T::lit(2.0);
        match (beyond(gh, dx), beyond(gv, dy)) {
            (true, false) => gh.0,
            (false, true) => gv.0,
            (true, true) => (gh.0 + gv.0) / two,
            (false, false) => match (gh.0.is_nan(), gv.0.is_nan()) {
                (false, true) => gh.0,
                (true, false) => gv.0,
                (false, false) => (gh.0 + gv.0) / two,
                (true, true) => self.interp[p],
            },
        }
    }

    pub fn value_at_point(&self, z: Complex<T>) -> T {
        self.value_at(z.re, z.im)
    }

    /// Extreme node values over free and Dirichlet nodes.
    pub fn min_max(&self) -> (T, T) {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for (p, v) in self.values.iter().enumerate() {
            if matches!(self.grid.roles[p], Role::Excluded(_)) {
                continue;
            }
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
        (lo, hi)
    }

    /// Same field on the same grid with new samples (used for model reload).
    pub fn replace_values(&self, values: Vec<T>) -> Self {
        Field::new(self.grid.clone(), values, self.label.clone())
    }
}

/// Lagrange weights of the nodes at `-1, 0, 1, 2` for a query at `t`.
fn cubic_weights<T: Scalar>(t: T) -> [T; 4] {
    let one = T::one();
    let two = T::lit(2.0);
    let six = T::lit(6.0);
    let (tp, tm, tmm) = (t + one, t - one, t - two);
    [
        -t * tm * tmm / six,
        tp * tm * tmm / two,
        -tp * t * tmm / two,
        tp * t * tm / six,
    ]
}

fn smooth_cells<T: Scalar>(grid: &Grid<T>) -> Vec<bool> {
    let (nx, ny) = (grid.nx, grid.ny);
    let clean = |p: usize| matches!(grid.roles[p], Role::Interior) && grid.cut(p).is_none();
    let mut out = vec![false; grid.len()];
    for j in 1..ny.saturating_sub(2) {
        for i in 0..nx {
            let cols: Option<Vec<usize>> = match grid.layout {
                Layout::Strip => Some((0..4).map(|a| (i + nx + a - 1) % nx).collect()),
                Layout::Box if i >= 1 && i + 2 < nx => Some((i - 1..i + 3).collect()),
                Layout::Box => None,
            };
            let Some(cols) = cols else { continue };
            out[grid.index(i, j)] = (j - 1..j + 3).all(|jj| cols.iter().all(|&ii| clean(grid.index(ii, jj))));
        }
    }
    out
}

type Ghosted<T> = (Vec<T>, usize, HashMap<usize, [(T, T); 4]>);

fn ghosted<T: Scalar>(grid: &Grid<T>, values: &[T]) -> Ghosted<T> {
    let nx = grid.nx;
    let mut interp = values.to_vec();
    let mut rows = grid.ny;

    // Ghost values in excluded nodes adjacent to free nodes: average of the
    // linear extrapolations through the zero datum on the hole edge.
    let mut sum = vec![T::zero(); grid.len()];
    let mut count = vec![0u8; grid.len()];
    let mut ghosts: HashMap<usize, [(T, T); 4]> = HashMap::new();
    for j in 0..grid.ny {
        for i in 0..nx {
            let p = grid.index(i, j);
            let Some(cut) = grid.cut(p) else { continue };
            for d in 0..4 {
                let arm = cut.arms[d];
                if arm >= T::one() {
                    continue;
                }
                let Some((ni, nj)) = grid.neighbor(i, j, d) else { continue };
                let q = grid.index(ni, nj);
                if let Role::Excluded(_) = grid.roles[q] {
                    let ghost = values[p] * (arm - T::one()) / arm;
                    sum[q] = sum[q] + ghost;
                    count[q] += 1;
                    // seen from q, p lies in the opposite direction
                    ghosts.entry(q).or_insert([(T::nan(), T::nan()); 4])[d ^ 1] = (ghost, arm);
                }
            }
        }
    }
    for p in 0..grid.len() {
        if count[p] > 0 {
            interp[p] = sum[p] / T::from_usize_lossy(count[p] as usize);
        }
    }

    // Ghost row above the last row, through the top datum.
    if let Some((y_top, top_value)) = grid.top {
        let j = grid.ny - 1;
        let delta = (y_top - grid.y(j)) / grid.h;
        for i in 0..nx {
            let u = values[grid.index(i, j)];
            interp.push(u + (top_value - u) / delta);
        }
        rows += 1;
    }
    (interp, rows, ghosts)
}
