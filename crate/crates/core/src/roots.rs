//! Bracketing bisection for monotone scalar equations.
//!
//! Every normalizing sequence and every quantile in this crate reduces to
//! locating the boundary of a monotone function, usually after a change of
//! variable to `t = ln x` so that the search range stays representable.

/// Largest number of halvings before giving up on a bracket.
const MAX_HALVINGS: usize = 2_000;

/// Locate `sup { t in [lo, hi] : f(t) >= target }` for a nonincreasing `f`.
///
/// Requires `f(lo) >= target > f(hi)`. With `tol > 0` iteration stops as
/// soon as `f(t) - target` lies in `[0, tol]`; otherwise it runs until the
/// bracket can no longer be split in floating point, so flat regions
/// resolve to their right edge. The returned value always satisfies
/// `f(t) >= target`.
pub fn boundary_decreasing<F>(f: F, target: f64, mut lo: f64, mut hi: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    debug_assert!(lo < hi);
    for _ in 0..MAX_HALVINGS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let value = f(mid);
        if value >= target {
            lo = mid;
            if tol > 0.0 && value - target <= tol {
                break;
            }
        } else {
            hi = mid;
        }
    }
    lo
}

/// Grow `hi` geometrically from `start` until `f(hi) < target`.
///
/// Returns `None` when no such point exists below `limit`.
pub fn expand_until_below<F>(f: F, target: f64, start: f64, limit: f64) -> Option<f64>
where
    F: Fn(f64) -> f64,
{
    let mut hi = start;
    let mut step = start.abs().max(1.0);
    while hi <= limit {
        if f(hi) < target {
            return Some(hi);
        }
        hi += step;
        step *= 2.0;
    }
    None
}

/// Grow `lo` geometrically downwards from `start` until `f(lo) >= target`.
pub fn expand_until_at_least<F>(f: F, target: f64, start: f64, limit: f64) -> Option<f64>
where
    F: Fn(f64) -> f64,
{
    let mut lo = start;
    let mut step = start.abs().max(1.0);
    while lo >= limit {
        if f(lo) >= target {
            return Some(lo);
        }
        lo -= step;
        step *= 2.0;
    }
    None
}
