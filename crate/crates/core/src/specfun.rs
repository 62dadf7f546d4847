//! Scalar special functions: the standard normal cdf, the error function and
//! its complement, and their inverses.
//!
//! `erf`/`erfc` are the musl implementations from `libm` (sub-ulp accuracy).
//! The inverses start from Giles' single-precision rational approximation and
//! are polished with Halley steps against `erf` in the central region and
//! against `erfc` in the tails (`|p| > 0.9`), where working with `1 - |p|`
//! directly avoids cancellation.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{FptError, Result};

/// Above this magnitude `erfinv` switches to the complementary channel.
pub const TAIL_SWITCH: f64 = 0.9;

const TWO_OVER_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Standard normal cdf Φ(x). Saturates to 0 / 1 far in the tails.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Giles' approximation of erfinv, written in terms of `w = -ln(q (2 - q))`
/// with `q = 1 - |p|` so that the tail argument keeps full precision.
fn giles_initial(abs_p: f64, q: f64) -> f64 {
    let mut w = -(q * (2.0 - q)).ln();
    let r = if w < 5.0 {
        w -= 2.5;
        let mut r = 2.810_226_36e-08;
        r = 3.432_739_39e-07 + r * w;
        r = -3.523_387_7e-06 + r * w;
        r = -4.391_506_54e-06 + r * w;
        r = 2.185_808_7e-04 + r * w;
        r = -1.253_725_03e-03 + r * w;
        r = -4.177_681_64e-03 + r * w;
        r = 2.466_407_27e-01 + r * w;
        1.501_409_41 + r * w
    } else {
        w = w.sqrt() - 3.0;
        let mut r = -2.002_142_57e-04;
        r = 1.009_505_58e-04 + r * w;
        r = 1.349_343_22e-03 + r * w;
        r = -3.673_428_44e-03 + r * w;
        r = 5.739_507_73e-03 + r * w;
        r = -7.622_461_3e-03 + r * w;
        r = 9.438_870_47e-03 + r * w;
        r = 1.001_674_06 + r * w;
        2.832_976_82 + r * w
    };
    r * abs_p
}

/// Below this `q` (the single-precision resolution of `1 - q`) the fit is out of range and the start
/// comes from the asymptotic expansion of erfc instead.
const DEEP_TAIL: f64 = 1e-7;

/// Fixed point of `x² = -ln q - ln(x√π) + ln(1 - 1/(2x²))`, from
/// `erfc(x) ≈ e^{-x²} / (x√π) · (1 - 1/(2x²))`.
fn asymptotic_initial(q: f64) -> f64 {
    let lq = -q.ln();
    let mut x = lq.sqrt();
    for _ in 0..4 {
        x = (lq - (x * PI.sqrt()).ln() + (1.0 - 0.5 / (x * x)).ln()).sqrt();
    }
    x
}

fn initial(abs_p: f64, q: f64) -> f64 {
    if q < DEEP_TAIL {
        asymptotic_initial(q)
    } else {
        giles_initial(abs_p, q)
    }
}

/// Halley polish of x ≥ 0 solving erf(x) = p (central) or erfc(x) = q (tail).
fn polish(mut x: f64, abs_p: f64, q: f64, tail: bool) -> f64 {
    for _ in 0..4 {
        let slope = TWO_OVER_SQRT_PI * (-x * x).exp();
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        // residual of erf(x) - p; in the tail erf(x) - p = q - erfc(x)
        let resid = if tail { q - erfc(x) } else { erf(x) - abs_p };
        let r = resid / slope;
        let step = r / (1.0 + x * r);
        x -= step;
        if step.abs() <= 1e-17 * x.abs() {
            break;
        }
    }
    x
}

/// Inverse error function on (-1, 1).
pub fn erfinv(p: f64) -> Result<f64> {
    if !(p > -1.0 && p < 1.0) {
        return Err(FptError::Domain(format!("erfinv requires -1 < p < 1, got {p}")));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let abs_p = p.abs();
    let q = 1.0 - abs_p;
    let tail = abs_p > TAIL_SWITCH;
    let x = polish(initial(abs_p, q), abs_p, q, tail);
    Ok(x.copysign(p))
}

/// Inverse complementary error function on (0, 2): erfc(erfcinv(q)) = q.
///
/// Small `q` never forms `1 - q`, so `erfcinv(1e-300)` keeps full relative accuracy.
pub fn erfcinv(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 2.0) {
        return Err(FptError::Domain(format!("erfcinv requires 0 < q < 2, got {q}")));
    }
    if q > 1.0 {
        // erfcinv(q) = -erfcinv(2 - q); 2 - q is exact for q in [1, 2)
        return erfcinv(2.0 - q).map(|x| -x);
    }
    if q == 1.0 {
        return Ok(0.0);
    }
    let abs_p = 1.0 - q;
    let tail = q < 1.0 - TAIL_SWITCH;
    Ok(polish(initial(abs_p, q), abs_p, q, tail))
}
