//! First-passage time of a standard Wiener process to a constant level `g > 0`:
//! the Lévy distribution, its density, its quantile function and the density
//! evaluated at the quantile.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{FptError, Result};
use crate::specfun::{erfc, erfcinv};

/// Inputs above this level are rejected by the inverse instead of overflowing.
pub const SATURATION_LEVEL: f64 = 1.0 - 1e-14;

/// Constant upper boundary `g > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneSidedBoundary {
    g: f64,
}

impl OneSidedBoundary {
    pub fn new(g: f64) -> Result<Self> {
        if !(g > 0.0 && g.is_finite()) {
            return Err(FptError::Validation(format!("one-sided boundary must satisfy g > 0, got {g}")));
        }
        Ok(Self { g })
    }

    /// The normalized unit boundary.
    pub fn unit() -> Self {
        Self { g: 1.0 }
    }

    pub fn level(&self) -> f64 {
        self.g
    }

    /// P(T_g ≤ t) = 1 − Φ(g/√t) + Φ(−g/√t), evaluated as erfc(g/√(2t)).
    pub fn cdf(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(erfc(self.g / (2.0 * t).sqrt()))
    }

    /// g/√(2πt³) · exp(−g²/2t), with the value 0 at t = 0.
    pub fn pdf(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        if t == 0.0 || t.is_infinite() {
            return Ok(0.0);
        }
        let g = self.g;
        Ok(g / (2.0 * PI * t * t * t).sqrt() * (-g * g / (2.0 * t)).exp())
    }

    /// Quantile g² / (2 erfinv(1−p)²) on [0, 1), with the value 0 at p = 0.
    pub fn cdf_inverse(&self, p: f64) -> Result<f64> {
        let h = match tail_arg(p)? {
            None => return Ok(0.0),
            Some(h) => h,
        };
        Ok(self.g * self.g / (2.0 * h * h))
    }

    /// Density at the quantile, (2/(g²√π)) erfinv(1−p)³ exp(−erfinv(1−p)²).
    pub fn pdf_at_inverse(&self, p: f64) -> Result<f64> {
        let h = match tail_arg(p)? {
            None => return Ok(0.0),
            Some(h) => h,
        };
        Ok(2.0 / (self.g * self.g * PI.sqrt()) * h * h * h * (-h * h).exp())
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(FptError::Domain(format!("time must be nonnegative, got {t}")))
    }
}

/// erfinv(1 − p) = erfcinv(p), or `None` for p = 0.
fn tail_arg(p: f64) -> Result<Option<f64>> {
    if !(0.0..1.0).contains(&p) {
        return Err(FptError::Domain(format!("probability must lie in [0, 1), got {p}")));
    }
    if p == 0.0 {
        return Ok(None);
    }
    if p > SATURATION_LEVEL {
        return Err(FptError::Saturation(format!("probability {p} exceeds 1 - 1e-14; the inverse would overflow")));
    }
    erfcinv(p).map(Some)
}

pub fn levy_cdf(b: OneSidedBoundary, t: f64) -> Result<f64> {
    b.cdf(t)
}

pub fn levy_pdf(b: OneSidedBoundary, t: f64) -> Result<f64> {
    b.pdf(t)
}

pub fn levy_cdf_inverse(b: OneSidedBoundary, p: f64) -> Result<f64> {
    b.cdf_inverse(p)
}

pub fn levy_pdf_at_inverse(b: OneSidedBoundary, p: f64) -> Result<f64> {
    b.pdf_at_inverse(p)
}
