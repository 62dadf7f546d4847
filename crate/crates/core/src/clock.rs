//! Quadratic-variation clocks `t ↦ ⟨Z⟩_t`: nondecreasing, starting at 0.

use std::fmt;
use std::sync::Arc;

use crate::error::{FptError, Result};

/// A user-supplied absolutely continuous clock.
///
/// Implementations must return `value(0) == 0`, be nondecreasing, and report
/// the derivative `value'(t) >= 0`.
pub trait ClockFunction: Send + Sync {
    fn value(&self, t: f64) -> f64;
    fn derivative(&self, t: f64) -> f64;
}

struct ScaledClock {
    inner: Arc<dyn ClockFunction>,
    factor: f64,
}

impl ClockFunction for ScaledClock {
    fn value(&self, t: f64) -> f64 {
        self.factor * self.inner.value(t)
    }
    fn derivative(&self, t: f64) -> f64 {
        self.factor * self.inner.derivative(t)
    }
}

/// Knots `(t_i, v_i)` with `t_0 = 0`, `v_0 = 0`, strictly increasing `t` and
/// nondecreasing `v`, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct GridClock {
    t: Vec<f64>,
    v: Vec<f64>,
}

impl GridClock {
    pub fn new(t: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if t.len() != v.len() {
            return Err(FptError::Validation(format!("clock grid has {} times but {} values", t.len(), v.len())));
        }
        if t.len() < 2 {
            return Err(FptError::Validation("clock grid needs at least two knots".into()));
        }
        if t[0] != 0.0 || v[0] != 0.0 {
            return Err(FptError::Validation(format!("clock grid must start at (0, 0), got ({}, {})", t[0], v[0])));
        }
        for i in 0..t.len() {
            if !t[i].is_finite() || !v[i].is_finite() {
                return Err(FptError::Validation(format!("non-finite clock knot at index {i}")));
            }
            if i > 0 && t[i] <= t[i - 1] {
                return Err(FptError::Validation(format!("clock knot times not strictly increasing at index {i}")));
            }
            if i > 0 && v[i] < v[i - 1] {
                return Err(FptError::Validation(format!("clock values decrease at index {i}")));
            }
        }
        Ok(Self { t, v })
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    /// Index of the segment `[t_i, t_{i+1})` holding `t`; the last knot maps to the last segment.
    fn segment(&self, t: f64) -> usize {
        let n = self.t.len();
        let i = self.t.partition_point(|&x| x <= t);
        i.saturating_sub(1).min(n - 2)
    }

    fn slope(&self, i: usize) -> f64 {
        (self.v[i + 1] - self.v[i]) / (self.t[i + 1] - self.t[i])
    }

    fn eval(&self, t: f64) -> f64 {
        let i = self.segment(t);
        if t == self.t[i] {
            return self.v[i];
        }
        if t == self.t[i + 1] {
            return self.v[i + 1];
        }
        self.v[i] + self.slope(i) * (t - self.t[i])
    }

    fn inverse(&self, s: f64) -> f64 {
        // first segment whose right end exceeds s; v is strictly increasing on it
        let j = self.v.partition_point(|&x| x <= s);
        let i = j - 1;
        if s == self.v[i] {
            return self.t[i];
        }
        self.t[i] + (s - self.v[i]) * (self.t[i + 1] - self.t[i]) / (self.v[i + 1] - self.v[i])
    }

    fn scaled(&self, c: f64) -> Self {
        Self { t: self.t.clone(), v: self.v.iter().map(|x| x * c).collect() }
    }
}

#[derive(Clone)]
pub enum ClockRepr {
    /// `v(t) = rate · t`; rate 1 is the Wiener clock.
    Linear {
        rate: f64,
    },
    Grid(GridClock),
    Custom(Arc<dyn ClockFunction>),
}

impl fmt::Debug for ClockRepr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClockRepr::Linear { rate } => f.debug_struct("Linear").field("rate", rate).finish(),
            ClockRepr::Grid(g) => f.debug_tuple("Grid").field(g).finish(),
            ClockRepr::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// A quadratic-variation path with its time horizon.
#[derive(Debug, Clone)]
pub struct QuadraticVariationPath {
    repr: ClockRepr,
    domain_end: f64,
}

impl QuadraticVariationPath {
    pub fn identity() -> Self {
        Self { repr: ClockRepr::Linear { rate: 1.0 }, domain_end: f64::INFINITY }
    }

    pub fn linear(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(FptError::Validation(format!("linear clock rate must be > 0, got {rate}")));
        }
        Ok(Self { repr: ClockRepr::Linear { rate }, domain_end: f64::INFINITY })
    }

    /// Piecewise-linear clock through the knots; the horizon is the last knot.
    pub fn grid(t: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let g = GridClock::new(t, v)?;
        let domain_end = *g.t.last().unwrap();
        Ok(Self { repr: ClockRepr::Grid(g), domain_end })
    }

    /// Custom closed-form clock valid on `[0, domain_end]` (may be infinite).
    pub fn custom(f: Arc<dyn ClockFunction>, domain_end: f64) -> Result<Self> {
        if !(domain_end > 0.0) {
            return Err(FptError::Validation(format!("clock horizon must be > 0, got {domain_end}")));
        }
        let v0 = f.value(0.0);
        if v0 != 0.0 {
            return Err(FptError::Validation(format!("clock must start at 0, got v(0) = {v0}")));
        }
        Ok(Self { repr: ClockRepr::Custom(f), domain_end })
    }

    pub fn repr(&self) -> &ClockRepr {
        &self.repr
    }

    pub fn domain_end(&self) -> f64 {
        self.domain_end
    }

    pub fn as_grid(&self) -> Option<&GridClock> {
        match &self.repr {
            ClockRepr::Grid(g) => Some(g),
            _ => None,
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t >= 0.0 && t <= self.domain_end {
            Ok(())
        } else {
            Err(FptError::Domain(format!("time {t} outside clock domain [0, {}]", self.domain_end)))
        }
    }

    /// `v(t)`; exact at grid knots.
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(match &self.repr {
            ClockRepr::Linear { rate } => rate * t,
            ClockRepr::Grid(g) => g.eval(t),
            ClockRepr::Custom(f) => f.value(t),
        })
    }

    /// `v'(t)`, using the right-hand slope at grid knots (left slope at the final knot).
    pub fn derivative(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(match &self.repr {
            ClockRepr::Linear { rate } => *rate,
            ClockRepr::Grid(g) => g.slope(g.segment(t)),
            ClockRepr::Custom(f) => f.derivative(t),
        })
    }

    /// Total variation accumulated over the domain.
    pub fn terminal_value(&self) -> f64 {
        match &self.repr {
            ClockRepr::Linear { .. } => f64::INFINITY,
            ClockRepr::Grid(g) => *g.v.last().unwrap(),
            ClockRepr::Custom(f) => {
                if self.domain_end.is_finite() {
                    f.value(self.domain_end)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Right-continuous generalized inverse `inf { u >= 0 : v(u) > s }`.
    ///
    /// On a plateau of `v` at level `s` this returns the right end of the plateau.
    pub fn generalized_inverse(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(FptError::Domain(format!("variation level must be nonnegative, got {s}")));
        }
        let reach = self.terminal_value();
        if !(s < reach) {
            return Err(FptError::Domain(format!("variation level {s} not reached (clock ends at {reach})")));
        }
        Ok(match &self.repr {
            ClockRepr::Linear { rate } => s / rate,
            ClockRepr::Grid(g) => g.inverse(s),
            ClockRepr::Custom(f) => custom_inverse(f.as_ref(), s, self.domain_end)?,
        })
    }

    /// The clock multiplied by `c > 0`, e.g. `⟨Z/g⟩ = ⟨Z⟩ / g²`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(FptError::Validation(format!("clock scale must be > 0, got {c}")));
        }
        let repr = match &self.repr {
            ClockRepr::Linear { rate } => ClockRepr::Linear { rate: rate * c },
            ClockRepr::Grid(g) => ClockRepr::Grid(g.scaled(c)),
            ClockRepr::Custom(f) => ClockRepr::Custom(Arc::new(ScaledClock { inner: f.clone(), factor: c })),
        };
        Ok(Self { repr, domain_end: self.domain_end })
    }
}

fn custom_inverse(f: &dyn ClockFunction, s: f64, end: f64) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = if end.is_finite() { end } else { 1.0 };
    while f.value(hi) <= s {
        if end.is_finite() || hi > 1e300 {
            return Err(FptError::Domain(format!("variation level {s} not reached")));
        }
        lo = hi;
        hi *= 2.0;
    }
    // invariant: v(lo) <= s < v(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f.value(mid) > s {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
