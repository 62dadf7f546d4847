//! Bracketed root finding for nondecreasing functions of a positive variable.

use crate::error::{FptError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootControl {
    /// Stop once the bracket width is below `rtol * hi`.
    pub rtol: f64,
    pub max_iter: usize,
}

impl Default for RootControl {
    fn default() -> Self {
        Self { rtol: 1e-12, max_iter: 200 }
    }
}

/// Solve `f(x) = target` for nondecreasing `f` on a bracket `lo <= x <= hi`
/// with `f(lo) <= target <= f(hi)`.
///
/// Wide brackets (`hi > 4 lo`) are split geometrically; otherwise a secant
/// step is tried and a plain bisection follows any secant step that failed to
/// halve the bracket.
pub fn solve_increasing<F>(f: F, target: f64, lo: f64, hi: f64, ctl: RootControl) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = (lo, hi);
    let (mut flo, mut fhi) = (f(lo)?, f(hi)?);
    if !(lo <= hi && flo <= target && target <= fhi) {
        return Err(FptError::Convergence(format!(
            "root not bracketed: f({lo}) = {flo}, f({hi}) = {fhi}, target {target}"
        )));
    }
    if flo == target {
        return Ok(lo);
    }
    if fhi == target {
        return Ok(hi);
    }
    let mut force_bisect = false;
    for _ in 0..ctl.max_iter {
        let width = hi - lo;
        if width <= ctl.rtol * hi {
            return Ok(0.5 * (lo + hi));
        }
        let x = if lo > 0.0 && hi > 4.0 * lo {
            (lo * hi).sqrt()
        } else if force_bisect || fhi <= flo {
            0.5 * (lo + hi)
        } else {
            let s = lo + (target - flo) * width / (fhi - flo);
            // keep the secant point strictly inside the bracket
            s.clamp(lo + 1e-3 * width, hi - 1e-3 * width)
        };
        let fx = f(x)?;
        if fx == target {
            return Ok(x);
        }
        if fx < target {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
        force_bisect = !force_bisect && hi - lo > 0.5 * width;
    }
    Err(FptError::Convergence(format!("root finder exceeded {} iterations (bracket [{lo}, {hi}])", ctl.max_iter)))
}
