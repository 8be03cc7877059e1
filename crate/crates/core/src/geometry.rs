//! Exact geometry of the dyadic semigroup and the two square families.
//!
//! The semigroup is generated by `z -> z ± 1` and `z -> z/2`; every element is
//! `z -> 2^-n (z + k)`. The fundamental squares are
//!
//! ```text
//! S+ : |Re z|       <= 3/10, |Im z - 1| <= 3/10      K+ : same center, half side 2/7
//! S- : |Re z - 1/2| <= 3/10, |Im z + 1| <= 3/10      K- : same center, half side 2/7
//! ```
//!
//! and their images under the semigroup. Every predicate here is generic over
//! [`Coord`], so the same code answers exactly on [`Rational`] and quickly on
//! floats.

use num_complex::Complex;
use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::scalar::{Coord, Rational};

/// Height of the half strip, `4/3`.
pub fn strip_height<T: Coord>() -> T {
    T::from_ratio(4, 3)
}

/// `z -> 2^-n (z + k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupElement {
    pub n: u32,
    pub k: i64,
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement { n: 0, k: 0 };

    pub fn new(n: u32, k: i64) -> Self {
        Self { n, k }
    }

    pub fn apply<T: Coord>(&self, z: &Complex<T>) -> Complex<T> {
        let scale = T::dyadic(self.n);
        let k = T::from_ratio(self.k, 1);
        Complex::new(
            (z.re.clone() + k) * scale.clone(),
            z.im.clone() * scale,
        )
    }

    /// Inverse map `w -> 2^n w - k` (defined on all of the plane).
    pub fn preimage<T: Coord>(&self, w: &Complex<T>) -> Complex<T> {
        let scale = T::from_ratio(1i64 << self.n, 1);
        Complex::new(
            w.re.clone() * scale.clone() - T::from_ratio(self.k, 1),
            w.im.clone() * scale,
        )
    }

    /// `outer ∘ inner`: apply `inner` first, then `outer`.
    pub fn compose(outer: GroupElement, inner: GroupElement) -> GroupElement {
        GroupElement {
            n: outer.n + inner.n,
            k: inner.k + (outer.k << inner.n),
        }
    }
}

/// Upper (`Im z > 0`) or lower (`Im z < 0`) half of the strip.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    /// Horizontal offset of the fundamental square center: 0 or 1/2.
    pub fn offset<T: Coord>(self) -> T {
        match self {
            Side::Upper => T::zero(),
            Side::Lower => T::from_ratio(1, 2),
        }
    }

    /// Sign of the imaginary part of the square centers.
    pub fn sign<T: Coord>(self) -> T {
        match self {
            Side::Upper => T::one(),
            Side::Lower => -T::one(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    SPlus,
    KPlus,
    SMinus,
    KMinus,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::SPlus, Family::KPlus, Family::SMinus, Family::KMinus];

    pub fn side(self) -> Side {
        match self {
            Family::SPlus | Family::KPlus => Side::Upper,
            Family::SMinus | Family::KMinus => Side::Lower,
        }
    }

    pub fn is_core(self) -> bool {
        matches!(self, Family::KPlus | Family::KMinus)
    }

    pub fn outer(side: Side) -> Family {
        match side {
            Side::Upper => Family::SPlus,
            Side::Lower => Family::SMinus,
        }
    }

    pub fn core(side: Side) -> Family {
        match side {
            Side::Upper => Family::KPlus,
            Side::Lower => Family::KMinus,
        }
    }

    /// Half side of the level-0 square: 3/10 for S, 2/7 for K.
    pub fn base_half_side<T: Coord>(self) -> T {
        if self.is_core() {
            T::from_ratio(2, 7)
        } else {
            T::from_ratio(3, 10)
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Family::SPlus => "S+",
            Family::KPlus => "K+",
            Family::SMinus => "S-",
            Family::KMinus => "K-",
        }
    }
}

/// Closed axis-aligned square `γ_{n,k}(F_{0,0})` of family `F`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SquareSpec {
    pub family: Family,
    pub n: u32,
    pub k: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Containment {
    Outside,
    Interior,
    Boundary,
}

impl Containment {
    pub fn is_inside(self) -> bool {
        !matches!(self, Containment::Outside)
    }
}

impl SquareSpec {
    pub fn new(family: Family, n: u32, k: i64) -> Self {
        Self { family, n, k }
    }

    pub fn element(&self) -> GroupElement {
        GroupElement::new(self.n, self.k)
    }

    /// Center of the level-0 square of this family.
    pub fn base_center<T: Coord>(family: Family) -> Complex<T> {
        let side = family.side();
        Complex::new(side.offset(), side.sign())
    }

    /// `2^-n (k + i)` for the upper families, `2^-n (k + 1/2 - i)` for the lower.
    pub fn center<T: Coord>(&self) -> Complex<T> {
        self.element().apply(&Self::base_center::<T>(self.family))
    }

    pub fn half_side<T: Coord>(&self) -> T {
        self.family.base_half_side::<T>() * T::dyadic(self.n)
    }

    pub fn x_range<T: Coord>(&self) -> (T, T) {
        let c = self.center::<T>();
        let a = self.half_side::<T>();
        (c.re.clone() - a.clone(), c.re + a)
    }

    pub fn y_range<T: Coord>(&self) -> (T, T) {
        let c = self.center::<T>();
        let a = self.half_side::<T>();
        (c.im.clone() - a.clone(), c.im + a)
    }

    pub fn contains<T: Coord>(&self, z: &Complex<T>) -> Containment {
        let c = self.center::<T>();
        let a = self.half_side::<T>();
        let dx = (z.re.clone() - c.re).abs_val();
        let dy = (z.im.clone() - c.im).abs_val();
        if dx > a || dy > a {
            Containment::Outside
        } else if dx == a || dy == a {
            Containment::Boundary
        } else {
            Containment::Interior
        }
    }

    /// Same square translated by `periods` whole periods.
    pub fn shifted(&self, periods: i64) -> SquareSpec {
        SquareSpec {
            k: self.k + (periods << self.n),
            ..*self
        }
    }

    /// Closed-square intersection test.
    pub fn intersects<T: Coord>(&self, other: &SquareSpec) -> bool {
        let (a, b) = (self.center::<T>(), other.center::<T>());
        let reach = self.half_side::<T>() + other.half_side::<T>();
        (a.re - b.re).abs_val() <= reach && (a.im - b.im).abs_val() <= reach
    }

    /// Translation indices `k` whose level-`n` square of `family` can contain
    /// abscissa `x`; the half side is below 1/2, so at most two candidates.
    fn candidate_ks<T: Coord>(family: Family, n: u32, x: &T) -> [i64; 2] {
        let scaled = x.clone() * T::from_ratio(1i64 << n, 1) - family.side().offset::<T>();
        let k0 = scaled.floor_i64();
        [k0, k0 + 1]
    }
}

/// Result of [`locate_square`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Located {
    pub square: SquareSpec,
    pub on_boundary: bool,
}

/// First square of the requested families (in the given order) at level
/// `<= n_max` containing `z`.
///
/// Squares of one family are pairwise disjoint, so the answer is unique per
/// family; `K` squares lie inside the `S` squares of the same side.
pub fn locate_square<T: Coord>(z: &Complex<T>, families: &[Family], n_max: u32) -> Option<Located> {
    for &family in families {
        let side_ok = match family.side() {
            Side::Upper => z.im > T::zero(),
            Side::Lower => z.im < T::zero(),
        };
        if !side_ok {
            continue;
        }
        for n in 0..=n_max {
            for k in SquareSpec::candidate_ks(family, n, &z.re) {
                let square = SquareSpec::new(family, n, k);
                match square.contains(z) {
                    Containment::Outside => {}
                    c => {
                        return Some(Located {
                            square,
                            on_boundary: c == Containment::Boundary,
                        })
                    }
                }
            }
        }
    }
    None
}

/// One period `[0, 1)` of a half strip together with the squares of one
/// family at levels `0..=n_max` whose centers lie in the period.
#[derive(Clone, Debug)]
pub struct PeriodCell {
    pub side: Side,
    pub n_max: u32,
    pub family: Family,
    pub squares: Vec<SquareSpec>,
}

impl PeriodCell {
    /// Perforated period cell: `S` squares of `side` at levels `0..=n_max`.
    pub fn new(side: Side, n_max: u32) -> Self {
        Self::with_family(Family::outer(side), n_max)
    }

    pub fn with_family(family: Family, n_max: u32) -> Self {
        let squares = (0..=n_max)
            .flat_map(|n| (0..(1i64 << n)).map(move |k| SquareSpec::new(family, n, k)))
            .collect();
        Self {
            side: family.side(),
            n_max,
            family,
            squares,
        }
    }

    /// Strip without any squares.
    pub fn empty(side: Side) -> Self {
        Self {
            side,
            n_max: 0,
            family: Family::outer(side),
            squares: Vec::new(),
        }
    }

    /// Squares at level `n`.
    pub fn level(&self, n: u32) -> impl Iterator<Item = &SquareSpec> {
        self.squares.iter().filter(move |s| s.n == n)
    }

    /// All squares lie strictly inside the open half strip.
    pub fn strictly_inside_strip(&self) -> bool {
        let top = strip_height::<Rational>();
        self.squares.iter().all(|s| {
            let (lo, hi) = match self.side {
                Side::Upper => s.y_range::<Rational>(),
                Side::Lower => {
                    let (a, b) = s.y_range::<Rational>();
                    (-b, -a)
                }
            };
            lo > Rational::zero() && hi < top
        })
    }
}

/// Outcome of the pairwise disjointness test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Disjointness {
    pub disjoint: bool,
    pub witness: Option<(SquareSpec, SquareSpec)>,
    pub pairs_tested: usize,
}

/// Exact pairwise disjointness of all `S+` squares of levels `<= n_max`.
pub fn check_disjoint(n_max: u32) -> Disjointness {
    check_disjoint_squares(&PeriodCell::new(Side::Upper, n_max).squares, None)
}

/// Same test for an arbitrary list of squares (one period; periodic images
/// are compared too). `level0_half_side` replaces the family's level-0 half
/// side when given.
pub fn check_disjoint_squares(squares: &[SquareSpec], level0_half_side: Option<Rational>) -> Disjointness {
    let half = |s: &SquareSpec| match &level0_half_side {
        Some(h) => h * Rational::dyadic(s.n),
        None => s.half_side::<Rational>(),
    };
    let mut pairs = 0;
    for (i, a) in squares.iter().enumerate() {
        for b in &squares[i..] {
            for shift in [0, 1, -1] {
                if a == b && shift == 0 {
                    continue;
                }
                let b = b.shifted(shift);
                pairs += 1;
                let (ca, cb) = (a.center::<Rational>(), b.center::<Rational>());
                let reach = half(a) + half(&b);
                let hit = (ca.re - cb.re).abs_val() <= reach && (ca.im - cb.im).abs_val() <= reach;
                if hit {
                    let (first, second) = if (a.n, a.k) <= (b.n, b.k) { (*a, b) } else { (b, *a) };
                    return Disjointness {
                        disjoint: false,
                        witness: Some((first, second)),
                        pairs_tested: pairs,
                    };
                }
            }
        }
    }
    Disjointness {
        disjoint: true,
        witness: None,
        pairs_tested: pairs,
    }
}

/// `K` squares of level `n` whose projection onto the real axis contains `x0`.
///
/// The union of the projections of `K+_n` and `K-_n` is the whole real line,
/// so the result is never empty.
pub fn projection_cover(x0: &Rational, n: u32) -> Vec<SquareSpec> {
    let mut out = Vec::with_capacity(2);
    for family in [Family::KPlus, Family::KMinus] {
        for k in SquareSpec::candidate_ks(family, n, x0) {
            let sq = SquareSpec::new(family, n, k);
            let (lo, hi) = sq.x_range::<Rational>();
            if lo <= *x0 && *x0 <= hi {
                out.push(sq);
            }
        }
    }
    assert!(
        !out.is_empty(),
        "projection cover of level {n} misses x0 = {x0}: covering property violated"
    );
    out
}

/// Length of `{Re z = x0} ∩ K_n`: one vertical chord of length `(4/7) 2^-n`
/// per covering square.
pub fn line_intersection_length(x0: &Rational, n: u32) -> Rational {
    let chord = Ratio::new(4, 7) * Rational::dyadic(n);
    chord * Rational::from_integer(projection_cover(x0, n).len() as i128)
}

/// Exact check that the `K+_n ∪ K-_n` projections cover `[0, 1)`.
///
/// Returns the first uncovered point if the union has a gap.
pub fn projections_cover_period(n: u32) -> Result<(), Rational> {
    let scale = Rational::dyadic(n);
    let half = Ratio::new(2, 7) * scale;
    let mut intervals: Vec<(Rational, Rational)> = Vec::new();
    let count = 1i64 << n;
    for k in -1..=count {
        for offset in [Rational::zero(), Ratio::new(1, 2)] {
            let c = (Rational::from_integer(k as i128) + offset) * scale;
            intervals.push((c - half, c + half));
        }
    }
    intervals.sort();
    let mut reach = Rational::zero();
    for (lo, hi) in intervals {
        if lo > reach && reach < Rational::one() {
            return Err(reach);
        }
        if hi > reach {
            reach = hi;
        }
    }
    if reach >= Rational::one() {
        Ok(())
    } else {
        Err(reach)
    }
}

/// Vertical chords `(y_lo, y_hi)` of `{Re z = x0}` through the squares of
/// `family` at level `n`.
pub fn vertical_chords(x0: &Rational, family: Family, n: u32) -> Vec<(SquareSpec, Rational, Rational)> {
    SquareSpec::candidate_ks(family, n, x0)
        .into_iter()
        .map(|k| SquareSpec::new(family, n, k))
        .filter(|sq| {
            let (lo, hi) = sq.x_range::<Rational>();
            lo <= *x0 && *x0 <= hi
        })
        .map(|sq| {
            let (lo, hi) = sq.y_range::<Rational>();
            (sq, lo, hi)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i128, d: i128) -> Rational {
        Ratio::new(n, d)
    }

    fn cq(re: Rational, im: Rational) -> Complex<Rational> {
        Complex::new(re, im)
    }

    #[test]
    fn apply_examples() {
        let z = cq(q(3, 10), q(2, 5));
        assert_eq!(GroupElement::IDENTITY.apply(&z), z);
        let w = GroupElement::new(1, 1).apply(&cq(q(1, 5), q(2, 5)));
        assert_eq!(w, cq(q(3, 5), q(1, 5)));
        let w = GroupElement::new(2, 3).apply(&cq(q(0, 1), q(1, 1)));
        assert_eq!(w, cq(q(3, 4), q(1, 4)));
        let wf = GroupElement::new(2, 3).apply(&Complex::new(0.0f64, 1.0));
        assert_eq!(wf, Complex::new(0.75, 0.25));
    }

    #[test]
    fn square_centers_and_sizes() {
        let s = SquareSpec::new(Family::SPlus, 1, 1);
        assert_eq!(s.center::<Rational>(), cq(q(1, 2), q(1, 2)));
        assert_eq!(s.half_side::<Rational>(), q(3, 20));
        let l = SquareSpec::new(Family::SMinus, 2, 1);
        assert_eq!(l.center::<Rational>(), cq(q(3, 8), q(-1, 4)));
        let kk = SquareSpec::new(Family::KMinus, 3, 0);
        assert_eq!(kk.half_side::<Rational>(), q(2, 56));
    }

    #[test]
    fn core_squares_nest_inside_outer() {
        for n in 0..5 {
            for k in -3..8 {
                for side in [Side::Upper, Side::Lower] {
                    let s = SquareSpec::new(Family::outer(side), n, k);
                    let kk = SquareSpec::new(Family::core(side), n, k);
                    let (sx0, sx1) = s.x_range::<Rational>();
                    let (kx0, kx1) = kk.x_range::<Rational>();
                    let (sy0, sy1) = s.y_range::<Rational>();
                    let (ky0, ky1) = kk.y_range::<Rational>();
                    assert!(sx0 < kx0 && kx1 < sx1 && sy0 < ky0 && ky1 < sy1);
                }
            }
        }
    }

    #[test]
    fn locate_examples() {
        let hit = locate_square(&cq(q(0, 1), q(1, 1)), &[Family::SPlus], 4).unwrap();
        assert_eq!(hit.square, SquareSpec::new(Family::SPlus, 0, 0));
        assert!(!hit.on_boundary);

        let hit = locate_square(&cq(q(1, 2), q(1, 2)), &[Family::SPlus], 4).unwrap();
        assert_eq!(hit.square, SquareSpec::new(Family::SPlus, 1, 1));

        // 0.5 + 0.65i sits exactly on the top edge of S+_{1,1} (1/2 * 13/10).
        let hit = locate_square(&cq(q(1, 2), q(13, 20)), &[Family::SPlus], 4).unwrap();
        assert_eq!(hit.square, SquareSpec::new(Family::SPlus, 1, 1));
        assert!(hit.on_boundary);

        // Just above it, below l1, nothing.
        assert!(locate_square(&cq(q(1, 2), q(66, 100)), &[Family::SPlus], 4).is_none());

        // Lower family, wrapping k.
        let hit = locate_square(&cq(q(-1, 2), q(-1, 1)), &[Family::SMinus], 4).unwrap();
        assert_eq!(hit.square, SquareSpec::new(Family::SMinus, 0, -1));
        assert!(locate_square(&cq(q(0, 1), q(0, 1)), &Family::ALL, 6).is_none());
    }

    #[test]
    fn disjointness() {
        assert!(check_disjoint(0).disjoint);
        let d = check_disjoint(6);
        assert!(d.disjoint, "{d:?}");
        assert!(d.pairs_tested > 127 * 64);

        let cell = PeriodCell::new(Side::Upper, 0);
        let d = check_disjoint_squares(&cell.squares, Some(q(6, 10)));
        assert!(!d.disjoint);
        assert_eq!(
            d.witness,
            Some((SquareSpec::new(Family::SPlus, 0, 0), SquareSpec::new(Family::SPlus, 0, 1)))
        );
        // Touching closed squares are not disjoint either.
        assert!(!check_disjoint_squares(&cell.squares, Some(q(1, 2))).disjoint);

        let mut both = PeriodCell::new(Side::Upper, 6).squares;
        both.extend(PeriodCell::new(Side::Lower, 6).squares);
        assert!(check_disjoint_squares(&both, None).disjoint);
    }

    #[test]
    fn period_cell_invariants() {
        for side in [Side::Upper, Side::Lower] {
            let cell = PeriodCell::new(side, 6);
            assert!(cell.strictly_inside_strip());
            for n in 0..=6 {
                let mut ks: Vec<_> = cell.level(n).map(|s| s.k).collect();
                ks.dedup();
                assert_eq!(ks.len(), 1 << n);
            }
        }
    }

    #[test]
    fn projection_examples() {
        let c = projection_cover(&q(0, 1), 0);
        assert!(c.contains(&SquareSpec::new(Family::KPlus, 0, 0)));
        let c = projection_cover(&q(1, 2), 0);
        assert!(c.contains(&SquareSpec::new(Family::KMinus, 0, 0)));
        let c = projection_cover(&q(35, 100), 0);
        assert_eq!(c, vec![SquareSpec::new(Family::KMinus, 0, 0)]);
    }

    #[test]
    fn chord_lengths() {
        assert!(line_intersection_length(&q(0, 1), 0) >= q(4, 7));
        assert!(line_intersection_length(&q(0, 1), 2) >= q(1, 7));
        // Level-1 centers: K+ at 0, 1/2; K- at 1/4, 3/4; half side 1/7.
        // 0.23 lies only in the K- projection around 1/4.
        let len = line_intersection_length(&q(23, 100), 1);
        assert_eq!(len, q(2, 7));
        assert_eq!(
            projection_cover(&q(23, 100), 1),
            vec![SquareSpec::new(Family::KMinus, 1, 0)]
        );
    }

    #[test]
    fn exact_cover_of_period() {
        for n in 0..=8 {
            assert_eq!(projections_cover_period(n), Ok(()));
        }
    }

    #[test]
    fn chords_through_outer_squares() {
        let chords = vertical_chords(&q(1, 10), Family::SPlus, 0);
        assert_eq!(chords.len(), 1);
        assert_eq!((chords[0].1, chords[0].2), (q(7, 10), q(13, 10)));
        let chords = vertical_chords(&q(1, 10), Family::SMinus, 2);
        // Level-2 S- centers at (k + 1/2)/4, half side 3/40: k=0 spans [1/20, 1/5].
        assert_eq!(chords.len(), 1);
        assert_eq!(chords[0].0.k, 0);
    }
}
