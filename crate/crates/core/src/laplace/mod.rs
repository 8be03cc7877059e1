//! Finite-difference harmonic machinery: grids, the red-black SOR solver,
//! sampled fields, the Green function of a square, one-sided normal
//! derivatives and the sub-mean-value test.

pub mod field;
pub mod green;
pub mod grid;
pub mod normal;
pub mod solver;
pub mod submean;

use std::sync::Arc;

pub use field::Field;
pub use green::{green_grid, green_square, GreenField};
pub use grid::{Grid, Hole, Layout, Role};
pub use normal::{normal_derivative, Direction, Edge, EdgeProfile};
pub use solver::{residual, sor_solve, sor_sweeps, SolveOptions, SolveOutcome};
pub use submean::{sub_mean_test, FnPotential, Potential};

use crate::error::Result;
use crate::geometry::PeriodCell;
use crate::scalar::Scalar;

/// Coarsest spacing used for nested initial guesses.
const NESTED_COARSEST_LEVEL: u32 = 6;

/// Harmonic function on the perforated period cell: 1 on the top line
/// `Im z = 4/3`, 0 on the real axis and on every hole boundary.
///
/// Fine grids start from the interpolated solution on the grid with twice
/// the spacing, which removes most of the smooth error before SOR starts.
pub fn solve_dirichlet<T: Scalar>(cell: &PeriodCell, h: T, opts: SolveOptions<T>) -> Result<Field<T>> {
    let grid = Arc::new(Grid::strip(cell, h)?);
    let level = grid::dyadic_level(h).expect("validated by Grid::strip");
    let initial = if level > NESTED_COARSEST_LEVEL {
        let coarse_opts = SolveOptions {
            tol: opts.tol * T::lit(100.0),
            polish: 0.0,
            ..opts
        };
        let coarse = solve_dirichlet(cell, h * T::lit(2.0), coarse_opts)?;
        let mut guess = vec![T::zero(); grid.len()];
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                guess[grid.index(i, j)] = coarse.value_at(grid.x(i), grid.y(j));
            }
        }
        Some(guess)
    } else {
        None
    };
    let out = sor_solve(&grid, initial, opts)?;
    Ok(Field::new(grid, out.values, "dirichlet").with_solve_info(out.residual, out.sweeps))
}
