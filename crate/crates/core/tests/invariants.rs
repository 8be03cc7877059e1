//! Property tests for the exact geometry, the interpolant, the sub-mean test,
//! the annulus map and the bookkeeping around the checks.

use std::sync::Arc;

use num_complex::Complex;
use num_rational::Ratio;
use proptest::prelude::*;
use rand::Rng;
use subharm::annulus::{map_from_strip, map_to_strip};
use subharm::geometry::{
    line_intersection_length, locate_square, projection_cover, Containment, Family, GroupElement, PeriodCell, Side,
    SquareSpec,
};
use subharm::laplace::{sub_mean_test, Field, FnPotential, Grid};
use subharm::pipeline::RunConfig;
use subharm::verify::{estimate_c, graded_integral, stream_rng, Worst};
use subharm::{Coord, Rational};

fn rational() -> impl Strategy<Value = Rational> {
    (-4000i128..4000, 1i128..512).prop_map(|(n, d)| Ratio::new(n, d))
}

fn point() -> impl Strategy<Value = Complex<Rational>> {
    (rational(), rational()).prop_map(|(a, b)| Complex::new(a, b))
}

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![
        Just(Family::SPlus),
        Just(Family::SMinus),
        Just(Family::KPlus),
        Just(Family::KMinus)
    ]
}

proptest! {
    #[test]
    fn group_action_is_invertible_and_composes(z in point(), n1 in 0u32..6, k1 in -40i64..40, n2 in 0u32..6, k2 in -40i64..40) {
        let (g1, g2) = (GroupElement::new(n1, k1), GroupElement::new(n2, k2));
        prop_assert_eq!(g1.preimage(&g1.apply(&z)), z);
        prop_assert_eq!(GroupElement::compose(g1, g2).apply(&z), g1.apply(&g2.apply(&z)));
    }

    #[test]
    fn squares_are_images_of_the_base_square(z in point(), f in family(), n in 0u32..6, k in -40i64..40) {
        let base = SquareSpec::new(f, 0, 0);
        let sq = SquareSpec::new(f, n, k);
        prop_assert_eq!(sq.contains(&sq.element().apply(&z)), base.contains(&z));
    }

    #[test]
    fn cores_lie_inside_outer_squares(n in 0u32..7, k in -64i64..64, side in prop_oneof![Just(Side::Upper), Just(Side::Lower)]) {
        let core = SquareSpec::new(Family::core(side), n, k);
        let outer = SquareSpec::new(Family::outer(side), n, k);
        let (xl, xh) = core.x_range::<Rational>();
        let (yl, yh) = core.y_range::<Rational>();
        for z in [Complex::new(xl, yl), Complex::new(xh, yh)] {
            prop_assert_eq!(outer.contains(&z), Containment::Interior);
        }
    }

    #[test]
    fn squares_of_one_side_are_disjoint(
        side in prop_oneof![Just(Side::Upper), Just(Side::Lower)],
        a in (0u32..7, -64i64..64),
        b in (0u32..7, -64i64..64),
    ) {
        prop_assume!(a != b);
        let f = Family::outer(side);
        prop_assert!(!SquareSpec::new(f, a.0, a.1).intersects::<Rational>(&SquareSpec::new(f, b.0, b.1)));
    }

    #[test]
    fn every_vertical_line_meets_each_level(x in rational(), n in 0u32..7) {
        let cover = projection_cover(&x, n);
        prop_assert!(!cover.is_empty());
        prop_assert!(line_intersection_length(&x, n) >= Ratio::new(4, 7) * Rational::dyadic(n));
    }

    #[test]
    fn located_square_contains_the_point(x in 0.0f64..1.0, y in 0.01f64..1.33, n_max in 0u32..5) {
        let z = Complex::new(x, y);
        if let Some(hit) = locate_square(&z, &[Family::SPlus], n_max) {
            prop_assert!(hit.square.n <= n_max);
            prop_assert!(hit.square.contains(&z).is_inside());
        } else {
            for sq in PeriodCell::new(Side::Upper, n_max).squares {
                for shift in -1..=1 {
                    prop_assert!(!sq.shifted(shift).contains(&z).is_inside());
                }
            }
        }
    }

    #[test]
    fn interpolation_reproduces_affine_data(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, x in -0.29f64..0.29, y in 0.71f64..1.29) {
        let center = Complex::new(0.0, 1.0);
        let grid = Arc::new(Grid::square_box(center, 0.3, 24, |_| 0.0));
        let values = (0..grid.len())
            .map(|p| a + b * grid.x(p % grid.nx) + c * grid.y(p / grid.nx))
            .collect();
        let f = Field::new(grid, values, "affine");
        prop_assert!((f.value_at(x, y) - (a + b * x + c * y)).abs() < 1e-12);
    }

    #[test]
    fn harmonic_polynomials_have_zero_sub_mean_margin(
        coef in prop::array::uniform4(-3.0f64..3.0),
        cx in -0.5f64..0.5,
        cy in -0.5f64..0.5,
        r in 0.001f64..0.4,
    ) {
        // Re and Im of z^2 and z^3 are harmonic
        let p = FnPotential {
            f: move |z: Complex<f64>| {
                let (z2, z3) = (z * z, z * z * z);
                coef[0] * z2.re + coef[1] * z2.im + coef[2] * z3.re + coef[3] * z3.im
            },
            x_range: (-1.0, 1.0),
            y_range: (-1.0, 1.0),
        };
        let m = sub_mean_test(&p, Complex::new(cx, cy), r, 64).unwrap();
        prop_assert!(m.abs() < 1e-13, "{}", m);
        let q = FnPotential { f: |z: Complex<f64>| z.norm_sqr(), x_range: (-1.0, 1.0), y_range: (-1.0, 1.0) };
        let m = sub_mean_test(&q, Complex::new(cx, cy), r, 64).unwrap();
        prop_assert!((m - r * r).abs() < 1e-13);
    }

    #[test]
    fn annulus_map_round_trips(r in 1.0f64..2.0, theta in -0.4f64..0.4, eps in 0.1f64..0.5) {
        let zeta = Complex::from_polar(r, theta);
        let z = map_to_strip(zeta, eps).unwrap();
        prop_assert!((z.im - theta * 4.0 / (3.0 * eps)).abs() < 1e-12);
        prop_assert!((map_from_strip(z, eps) - zeta).norm() < 1e-12);
    }

    #[test]
    fn geometric_decay_recovers_its_base(c in 1.5f64..1e6, len in 2usize..6) {
        let a: Vec<f64> = (0..len).map(|n| c.powi(-(n as i32))).collect();
        let (est, _, anomalies) = estimate_c(&a);
        prop_assert!((est / c - 1.0).abs() < 1e-9);
        prop_assert!(anomalies.is_empty());
        // slower decay of one term cannot raise c
        let mut b = a.clone();
        b[len - 1] *= 2.0;
        prop_assert!(estimate_c(&b).0 <= est * (1.0 + 1e-12));
    }

    #[test]
    fn graded_rule_absorbs_the_logarithm(pole in 0.05f64..0.95, steps in 8usize..200) {
        // ∫_0^1 log|y - p| dy
        let exact = |p: f64| p * p.ln() + (1.0 - p) * (1.0 - p).ln() - 1.0;
        let v = graded_integral(|y: f64| (y - pole).abs().ln(), 0.0, 1.0, pole, 1.0 / steps as f64);
        prop_assert!(v.is_finite());
        prop_assert!((v - exact(pole)).abs() < 2.0 / (steps * steps) as f64, "{} vs {}", v, exact(pole));
    }

    #[test]
    fn worst_keeps_the_minimum(margins in prop::collection::vec(-1.0f64..1.0, 1..40)) {
        let mut w = Worst::new();
        for (i, m) in margins.iter().enumerate() {
            w.push(Complex::new(i as f64, 0.0), *m, 1.0);
        }
        let min = margins.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(w.margin, min);
        prop_assert_eq!(w.count, margins.len());
        w.push(Complex::new(0.0, 0.0), f64::NAN, 1.0);
        prop_assert_eq!(w.margin, f64::NEG_INFINITY);
    }

    #[test]
    fn config_text_round_trips(
        exp in 6u32..12,
        n_max in 1u32..4,
        eps in 0.05f64..0.45,
        lines in 1usize..1000,
        slack in 0.0f64..0.9,
    ) {
        let text = format!("h = 1/{}\nn_max = {n_max}\nepsilon = {eps}\nline_samples = {lines}\nslack = {slack}\n", 1u64 << exp);
        match RunConfig::parse(&text) {
            Ok(cfg) => {
                let again = RunConfig::parse(&cfg.canonical()).unwrap();
                prop_assert_eq!(&again, &cfg);
                prop_assert_eq!(again.seed(), cfg.seed());
            }
            Err(e) => prop_assert_eq!(e.exit_code(), 1),
        }
    }

    #[test]
    fn named_streams_are_reproducible(seed in any::<u64>(), name in "[a-z/]{1,12}") {
        let a: Vec<u64> = (0..4).map({ let mut r = stream_rng(seed, &name); move |_| r.gen() }).collect();
        let b: Vec<u64> = (0..4).map({ let mut r = stream_rng(seed, &name); move |_| r.gen() }).collect();
        prop_assert_eq!(a, b);
    }
}
