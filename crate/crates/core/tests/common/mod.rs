//! Shared helpers for the integration tests: grid and field builders,
//! seeded random data, and independent numerical oracles (quadrature for the
//! exterior tail weight, scalar bisection for the per-step contraction of a
//! ground-state ray). The oracles deliberately avoid the library's own
//! closed-form code paths.

#![allow(dead_code)]

use std::sync::Arc;

use fracflow::{Field, Grid1D};
use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn grid(a: f64, b: f64, n: usize, s: f64, p: f64) -> Arc<Grid1D> {
    Arc::new(Grid1D::new(a, b, n, s, p).unwrap())
}

/// Smooth compactly supported bump, the default initial-condition profile.
pub fn bump(g: &Arc<Grid1D>, center: f64, width: f64, height: f64) -> Field {
    Field::from_fn(g.clone(), |x| {
        let t = (x - center) / width;
        if t.abs() < 1.0 {
            height * (1.0 - 1.0 / (1.0 - t * t)).exp()
        } else {
            0.0
        }
    })
    .unwrap()
}

pub fn centered_bump(g: &Arc<Grid1D>) -> Field {
    let (a, b) = (g.a(), g.b());
    bump(g, 0.5 * (a + b), 0.25 * (b - a), 1.0)
}

/// Seeded uniform field with entries in [−1, 1].
pub fn random_field(g: &Arc<Grid1D>, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals: Vec<f64> = (0..g.n()).map(|_| rng.random_range(-1.0..=1.0)).collect();
    Field::new(g.clone(), vals).unwrap()
}

/// Seeded nonnegative field with entries in [0, 1].
pub fn random_nonneg_field(g: &Arc<Grid1D>, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals: Vec<f64> = (0..g.n()).map(|_| rng.random_range(0.0..=1.0)).collect();
    Field::new(g.clone(), vals).unwrap()
}

/// Adaptive Simpson quadrature of `f` over [a, b] to absolute tolerance.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, fa, b, fb, fm);
    recurse(f, a, fa, b, fb, fm, whole, tol, 40)
}

/// Quadrature oracle for the exterior tail weight at point x of (a, b):
/// 2·(∫ over both exterior distances of u^{−1−sp} du). The near field is
/// integrated numerically over dyadic panels; only the remote remainder
/// beyond 2^40 panel widths uses the power-law antiderivative.
pub fn tail_weight_oracle(x: f64, a: f64, b: f64, s: f64, p: f64) -> f64 {
    let sp = s * p;
    let f = move |u: f64| u.powf(-1.0 - sp);
    let mut total = 0.0;
    for d in [x - a, b - x] {
        assert!(d > 0.0);
        let mut lo = d;
        let mut numeric = 0.0;
        for _ in 0..40 {
            let hi = 2.0 * lo;
            numeric += adaptive_simpson(&f, lo, hi, 1e-14 * d.powf(-sp));
            lo = hi;
        }
        let remainder = lo.powf(-sp) / sp;
        total += numeric + remainder;
    }
    2.0 * total
}

/// Bisection oracle for the contraction factor of one implicit step applied
/// to a ground-state ray: the unique c ∈ (0, 1) with
/// |c−1|^{p−2}(c−1)/τ^{p−1} + λ·c^{p−1} = 0, i.e. jp((c−1)/τ) = −λ·jp(c).
pub fn step_factor_oracle(lambda: f64, tau: f64, p: f64) -> f64 {
    assert!(lambda > 0.0 && tau > 0.0 && p > 1.0);
    let jp = |t: f64| {
        if t == 0.0 {
            0.0
        } else {
            t.abs().powf(p - 2.0) * t
        }
    };
    let f = |c: f64| jp((c - 1.0) / tau) + lambda * jp(c);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    assert!(f(lo) < 0.0 && f(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
