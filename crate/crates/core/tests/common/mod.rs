//! Independent oracles shared by the integration tests. Nothing here calls
//! into the finite-difference machinery.

#![allow(dead_code)]

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TOP: f64 = 4.0 / 3.0;

/// Harmonic measure of the top line `Im z = 4/3` in the upper half strip
/// minus the squares `2^-n (k + i) + [-a, a]^2`, `a = 0.3 2^-n`, `n <= n_max`,
/// estimated by walk on spheres. Returns `(mean, standard error)`.
///
/// Walks stop inside the `shell`; the boundary value is that of the nearest
/// boundary piece, so the bias is at most `shell * |grad u|`.
pub fn walk_on_spheres(x: f64, y: f64, n_max: u32, walks: usize, shell: f64, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..walks {
        let (mut px, mut py) = (x, y);
        loop {
            let (d, top) = boundary_distance(px, py, n_max);
            if d < shell {
                hits += top as usize;
                break;
            }
            let theta = rng.gen::<f64>() * 2.0 * PI;
            px += d * theta.cos();
            py += d * theta.sin();
        }
    }
    let p = hits as f64 / walks as f64;
    (p, (p * (1.0 - p) / walks as f64).sqrt())
}

/// Distance to the boundary and whether the nearest piece is the top line.
fn boundary_distance(x: f64, y: f64, n_max: u32) -> (f64, bool) {
    let mut best = (y, false);
    if TOP - y < best.0 {
        best = (TOP - y, true);
    }
    for n in 0..=n_max {
        let s = f64::powi(2.0, -(n as i32));
        let (cy, a) = (s, 0.3 * s);
        let k0 = (x / s).floor();
        for k in [k0 - 1.0, k0, k0 + 1.0, k0 + 2.0] {
            let dx = ((x - k * s).abs() - a).max(0.0);
            let dy = ((y - cy).abs() - a).max(0.0);
            let d = dx.hypot(dy);
            if d < best.0 {
                best = (d, false);
            }
        }
    }
    best
}

/// Whether `(x, y)` lies in the closed union of the squares of
/// [`walk_on_spheres`].
pub fn in_squares(x: f64, y: f64, n_max: u32) -> bool {
    boundary_distance(x, y, n_max).0 == 0.0 && y > 0.0 && y < TOP
}

/// Green function of `[0, a]^2` (`-ΔG = δ`, zero on the boundary) at
/// `(x, y)` with pole `(xi, eta)`, by the single sine series in the
/// direction of larger separation. Returns the partial sum of `terms`
/// terms and a rigorous bound on the neglected tail.
///
/// Term `m` is `(2/a) sin(kx) sin(kξ) sinh(k y<) sinh(k (a - y>)) / (k sinh(k a))`
/// with `k = mπ/a`, bounded by `exp(-k d) / (a k (1 - exp(-2ka)))` where `d`
/// is the separation.
pub fn green_series(a: f64, x: f64, y: f64, xi: f64, eta: f64, terms: usize) -> (f64, f64) {
    // expand in the coordinate with the larger separation
    let (s, t, sigma, tau) = if (y - eta).abs() >= (x - xi).abs() {
        (x, y, xi, eta)
    } else {
        (y, x, eta, xi)
    };
    let (lo, hi) = if t < tau { (t, tau) } else { (tau, t) };
    let d = hi - lo;
    let mut sum = 0.0;
    for m in 1..=terms {
        let k = m as f64 * PI / a;
        // sinh(A) sinh(B) / sinh(A + B + kd) without overflow
        let (aa, bb) = (k * lo, k * (a - hi));
        let ratio = 0.5 * (-(k * d)).exp() * (1.0 - (-2.0 * aa).exp()) * (1.0 - (-2.0 * bb).exp())
            / (1.0 - (-2.0 * k * a).exp());
        sum += 2.0 / a * (k * s).sin() * (k * sigma).sin() * ratio / k;
    }
    let q = (-PI * d / a).exp();
    let m1 = (terms + 1) as f64;
    let tail = q.powf(m1) / (m1 * PI * (1.0 - (-2.0 * PI).exp()) * (1.0 - q));
    (sum, tail)
}

/// `u = 3y/4` is the harmonic measure of the top line in the empty strip.
pub fn empty_strip(y: f64) -> f64 {
    0.75 * y
}
