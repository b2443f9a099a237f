//! Bounded scalar minimisation: coarse grid seeding plus Brent polish.
//!
//! The per-basis infidelity landscapes are oscillatory with many local
//! minima, so a deterministic dense grid scan picks the basin and a
//! golden-section/parabolic (Brent) search polishes inside the bracketing
//! interval. No randomness, so results are reproducible bit-for-bit.

const GOLDEN: f64 = 0.381_966_011_250_105_2; // 2 - golden ratio

/// Brent's method on [lo, hi]. Returns (argmin, min). `xtol` is the absolute
/// x tolerance at which the search stops.
pub fn brent_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> (f64, f64) {
    assert!(lo < hi, "invalid bracket");
    let (mut a, mut b) = (lo, hi);
    let mut x = a + GOLDEN * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    for _ in 0..max_iter {
        let m = 0.5 * (a + b);
        let tol1 = xtol + 1e-12 * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut use_golden = true;
        if e.abs() > tol1 {
            // parabolic interpolation through (v, w, x)
            let r = (x - w) * (fx - fv);
            let q0 = (x - v) * (fx - fw);
            let mut p = (x - v) * q0 - (x - w) * r;
            let mut q = 2.0 * (q0 - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_prev = e;
            e = d;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if (u - a) < tol2 || (b - u) < tol2 {
                    d = if m > x { tol1 } else { -tol1 };
                }
                use_golden = false;
            }
        }
        if use_golden {
            e = if x < m { b - x } else { a - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = f(u);
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}

/// Scan `grid_points` equally spaced samples of f over [lo, hi] (endpoints
/// included), then polish with Brent inside the interval bracketing the best
/// sample. Returns (argmin, min, clipped) where `clipped` marks a solution
/// pinned at either bound.
pub fn grid_seeded_min(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    grid_points: usize,
    xtol: f64,
) -> (f64, f64, bool) {
    assert!(grid_points >= 2 && lo < hi);
    let step = (hi - lo) / (grid_points - 1) as f64;
    let mut best_k = 0usize;
    let mut best_val = f64::INFINITY;
    for k in 0..grid_points {
        let x = lo + step * k as f64;
        let val = f(x);
        if val < best_val {
            best_val = val;
            best_k = k;
        }
    }
    let a = lo + step * best_k.saturating_sub(1) as f64;
    let b = lo + step * (best_k + 1).min(grid_points - 1) as f64;
    let (mut x, mut fx) = brent_min(&f, a.max(lo), b.min(hi), xtol, 200);
    // keep the better of grid seed and polish (Brent never sits exactly on a
    // bound, so re-test the seed when it was a boundary sample)
    let seed_x = lo + step * best_k as f64;
    if best_val < fx {
        x = seed_x;
        fx = best_val;
    }
    let span = hi - lo;
    let clipped = (x - lo).abs() < 1e-9 * span || (hi - x).abs() < 1e-9 * span;
    (x, fx, clipped)
}
