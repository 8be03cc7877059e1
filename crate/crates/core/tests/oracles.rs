//! Finite-difference fields against independent oracles at reduced scale.
//! The full-scale versions run in the acceptance target.

mod common;

use num_complex::Complex;
use subharm::geometry::{locate_square, Family, PeriodCell, Side};
use subharm::laplace::{green_square, solve_dirichlet, SolveOptions};

fn opts() -> SolveOptions<f64> {
    SolveOptions::new(1e-13, 400_000)
}

#[test]
fn empty_strip_is_linear() {
    let h = 1.0 / 64.0;
    let f = solve_dirichlet(&PeriodCell::empty(Side::Upper), h, opts()).unwrap();
    let g = f.grid();
    let mut err: f64 = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            err = err.max((f.node(i, j) - common::empty_strip(g.y(j))).abs());
        }
    }
    assert!(err < 1e-9, "max node error {err:e}");
}

#[test]
fn green_square_matches_sine_series() {
    let h = 1.0 / 128.0;
    let (center, half) = (Complex::new(0.0, 1.0), 0.3);
    let g = green_square(center, half, h, opts()).unwrap();
    let a = 2.0 * half;
    for (dx, dy) in [(0.15, 0.0), (0.0, -0.2), (0.1, 0.1), (-0.25, 0.22), (0.05, -0.28)] {
        let z = center + Complex::new(dx, dy);
        let (series, tail) = common::green_series(a, dx + half, dy + half, half, half, 200);
        let err = (g.value(z) - series).abs();
        assert!(err <= 5.0 * h * h + tail, "({dx}, {dy}): {err:e} vs {:e}", 5.0 * h * h + tail);
    }
}

#[test]
fn series_oracle_is_symmetric_and_certified() {
    let a = 0.6;
    let (v, tail) = common::green_series(a, 0.1, 0.45, 0.3, 0.3, 400);
    let (w, _) = common::green_series(a, 0.45, 0.1, 0.3, 0.3, 400);
    assert!((v - w).abs() < 1e-12);
    // more terms stay within the certified tail of fewer terms
    let (coarse, coarse_tail) = common::green_series(a, 0.1, 0.45, 0.3, 0.3, 10);
    assert!((coarse - v).abs() <= coarse_tail + tail);
    // logarithmic singularity: G ~ -(1/2π) log r + const near the pole
    let near = |r: f64| common::green_series(a, 0.3 + r, 0.3, 0.3, 0.3, 20_000).0;
    let slope = (near(1e-3) - near(1e-2)) / (10f64).ln();
    assert!((slope - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-3, "{slope}");
}

#[test]
fn perforated_solve_matches_walk_on_spheres() {
    let (h, n_max) = (1.0 / 128.0, 2);
    let f = solve_dirichlet(&PeriodCell::new(Side::Upper, n_max), h, opts()).unwrap();
    for (k, (x, y)) in [(0.5, 0.68), (0.5, 1.0), (0.1, 1.32), (0.125, 0.2)].into_iter().enumerate() {
        let z = Complex::new(x, y);
        assert!(locate_square(&z, &[Family::SPlus], n_max).is_none(), "probe {z} inside a square");
        let (mean, sigma) = common::walk_on_spheres(x, y, n_max, 40_000, 1e-7, 17 + k as u64);
        let err = (f.value_at(x, y) - mean).abs();
        assert!(err <= 3.0 * sigma + 10.0 * h * h, "{z}: fd {} wos {mean} ± {sigma}", f.value_at(x, y));
    }
}
