//! First exit of a standard Wiener process from a corridor `(h, g)` with
//! `h < 0 < g`.
//!
//! The density is the sum of two image series `ss_t(g, g-h) + ss_t(-h, g-h)`
//! where
//!
//! ```text
//! ss_t(v, w) = Σ_k a_k / (√(2π) t^{3/2}) · exp(-a_k² / 2t),   a_k = w - v + 2kw.
//! ```
//!
//! The cdf integrates each term of the signed Lévy kernel separately:
//! `∫_0^t a/√(2π) x^{-3/2} e^{-a²/2x} dx = 2·sign(a)·Φ(-|a|/√t)`, which decays
//! in both directions of `k`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{FptError, Result};
use crate::one_sided::OneSidedBoundary;
use crate::roots::{solve_increasing, RootControl};
use crate::specfun::erfc;

/// Decay multiples `λt` after which the corridor survival rounds away: 1.28 e^{-40} < 2^{-54}.
const SATURATION_DECAYS: f64 = 40.0;

/// Corridor `h < 0 < g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSidedBoundary {
    g: f64,
    h: f64,
}

impl TwoSidedBoundary {
    pub fn new(g: f64, h: f64) -> Result<Self> {
        if !(g > 0.0 && g.is_finite() && h < 0.0 && h.is_finite()) {
            return Err(FptError::Validation(format!(
                "two-sided boundary must satisfy h < 0 < g, got g = {g}, h = {h}"
            )));
        }
        Ok(Self { g, h })
    }

    pub fn upper(&self) -> f64 {
        self.g
    }

    pub fn lower(&self) -> f64 {
        self.h
    }

    pub fn width(&self) -> f64 {
        self.g - self.h
    }

    /// The same corridor seen by `-W`: `(-h, -g)`.
    pub fn mirrored(&self) -> Self {
        Self { g: -self.h, h: -self.g }
    }

    /// One-sided boundary at the nearer level `min(g, |h|)`.
    pub fn nearest_level(&self) -> OneSidedBoundary {
        OneSidedBoundary::new(self.g.min(-self.h)).expect("levels validated on construction")
    }

    /// Time past which the survival probability is below half an ulp of 1.
    ///
    /// The eigenfunction expansion gives `1 - P(t) <= 1.28 e^{-λt}` for
    /// `λt >= 1`, with `λ = π² / (2 w²)`.
    pub fn saturation_time(&self) -> f64 {
        let w = self.width();
        SATURATION_DECAYS * 2.0 * w * w / (PI * PI)
    }

    pub fn pdf(&self, t: f64, ctl: SeriesControl) -> Result<f64> {
        two_sided_pdf(*self, t, ctl)
    }

    pub fn cdf(&self, t: f64, ctl: SeriesControl) -> Result<f64> {
        two_sided_cdf(*self, t, ctl)
    }

    pub fn cdf_inverse(&self, p: f64, ctl: SeriesControl) -> Result<f64> {
        two_sided_cdf_inverse(*self, p, ctl)
    }
}

/// Truncation control for the image series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeriesControl {
    /// Absolute per-term cutoff.
    pub term_tol: f64,
    /// Cap on the number of summed terms per series.
    pub max_terms: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self { term_tol: 1e-18, max_terms: 1_000_000 }
    }
}

impl SeriesControl {
    pub fn new(term_tol: f64, max_terms: usize) -> Result<Self> {
        let ctl = Self { term_tol, max_terms };
        ctl.validate()?;
        Ok(ctl)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.term_tol > 0.0 && self.term_tol.is_finite()) {
            return Err(FptError::Validation(format!("term_tol must be > 0, got {}", self.term_tol)));
        }
        if self.max_terms == 0 {
            return Err(FptError::Validation("max_terms must be at least 1".into()));
        }
        Ok(())
    }
}

/// Sum `term(a_k)` over all k, walking outward from k = 0 in both directions.
///
/// A direction stops once `|a_k| >= √t` (past the peak of the density kernel;
/// the cdf kernel is monotone everywhere) and the term drops below `term_tol`.
fn image_sum<F>(t: f64, v: f64, w: f64, ctl: SeriesControl, term: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let root_t = t.sqrt();
    let base = w - v;
    let mut total = term(base);
    let mut count = 1usize;
    for dir in [1.0, -1.0] {
        let mut k = 1.0;
        loop {
            let a = base + dir * 2.0 * k * w;
            let x = term(a);
            total += x;
            count += 1;
            if a.abs() >= root_t && x.abs() < ctl.term_tol {
                break;
            }
            if count > ctl.max_terms {
                return Err(FptError::Convergence(format!(
                    "image series needs more than {} terms at t = {t}",
                    ctl.max_terms
                )));
            }
            k += 1.0;
        }
    }
    Ok(total)
}

fn check_ordering(v: f64, w: f64) -> Result<()> {
    if 0.0 < v && v < w && w.is_finite() {
        Ok(())
    } else {
        Err(FptError::Domain(format!("image series requires 0 < v < w, got v = {v}, w = {w}")))
    }
}

/// `ss_t(v, w)` for `0 < v < w`, `t > 0`.
pub fn ss_density(t: f64, v: f64, w: f64, ctl: SeriesControl) -> Result<f64> {
    check_ordering(v, w)?;
    if !(t > 0.0) {
        return Err(FptError::Domain(format!("ss_density requires t > 0, got {t}")));
    }
    let scale = 1.0 / ((2.0 * PI).sqrt() * t * t.sqrt());
    let sum = image_sum(t, v, w, ctl, |a| a * (-a * a / (2.0 * t)).exp())?;
    Ok(scale * sum)
}

/// `∫_0^t ss_x(v, w) dx` using the sign-corrected term integrals.
pub fn ss_integral(t: f64, v: f64, w: f64, ctl: SeriesControl) -> Result<f64> {
    check_ordering(v, w)?;
    if !(t >= 0.0) {
        return Err(FptError::Domain(format!("time must be nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let denom = (2.0 * t).sqrt();
    // 2·sign(a)·Φ(-|a|/√t) = sign(a)·erfc(|a|/√(2t))
    image_sum(t, v, w, ctl, |a| a.signum() * erfc(a.abs() / denom))
}

pub fn two_sided_pdf(b: TwoSidedBoundary, t: f64, ctl: SeriesControl) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(FptError::Domain(format!("time must be nonnegative, got {t}")));
    }
    if t == 0.0 || t.is_infinite() {
        return Ok(0.0);
    }
    let w = b.width();
    let f = ss_density(t, b.g, w, ctl)? + ss_density(t, -b.h, w, ctl)?;
    Ok(f.max(0.0))
}

pub fn two_sided_cdf(b: TwoSidedBoundary, t: f64, ctl: SeriesControl) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(FptError::Domain(format!("time must be nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    if t >= b.saturation_time() {
        return Ok(1.0);
    }
    let w = b.width();
    let p = ss_integral(t, b.g, w, ctl)? + ss_integral(t, -b.h, w, ctl)?;
    Ok(p.clamp(0.0, 1.0))
}

/// Unique `t` with `two_sided_cdf(t) = p`, for `p` in `[0, 1)`.
///
/// The bracket comes from `max(L_g, L_|h|) <= P_{g,h} <= L_g + L_|h|` with `L`
/// the one-sided cdfs: at the nearer level `m`, `P(L_m⁻¹(p/2)) <= p <= P(L_m⁻¹(p))`.
pub fn two_sided_cdf_inverse(b: TwoSidedBoundary, p: f64, ctl: SeriesControl) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(FptError::Domain(format!("probability must lie in [0, 1), got {p}")));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let near = b.nearest_level();
    let cdf = |t: f64| two_sided_cdf(b, t, ctl);
    let mut lo = near.cdf_inverse(0.5 * p)?;
    let mut hi = near.cdf_inverse(p)?.min(b.saturation_time());
    // absorb rounding at the bracket ends
    for _ in 0..64 {
        if cdf(lo)? <= p {
            break;
        }
        lo *= 0.5;
    }
    for _ in 0..64 {
        if cdf(hi)? >= p {
            break;
        }
        hi *= 2.0;
    }
    solve_increasing(cdf, p, lo, hi, RootControl::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::one_sided::OneSidedBoundary;

    // Extended-precision brute-force sums over k in [-60, 60].
    const SS_1_1_2: f64 = 0.228_682_612_816_959_966_152_806_713_840;
    const CDF_1_M1_1: f64 = 0.629_222_570_200_476_094_604_001_275_011;
    const CDF_1_M2_1: f64 = 0.362_746_855_975_023_388_279_640_578_328;
    const PDF_1_M1_1: f64 = 0.457_365_225_633_919_932_305_613_427_681;

    fn tb(g: f64, h: f64) -> TwoSidedBoundary {
        TwoSidedBoundary::new(g, h).unwrap()
    }

    fn ctl() -> SeriesControl {
        SeriesControl::default()
    }

    #[test]
    fn boundary_validation() {
        assert!(TwoSidedBoundary::new(1.0, 0.0).is_err());
        assert!(TwoSidedBoundary::new(0.0, -1.0).is_err());
        assert!(TwoSidedBoundary::new(1.0, 1.0).is_err());
        assert!(SeriesControl::new(0.0, 10).is_err());
        assert!(SeriesControl::new(1e-10, 0).is_err());
    }

    #[test]
    fn ss_density_reduces_to_levy_for_wide_corridor() {
        let ss = ss_density(1.0, 1.0, 100.0, ctl()).unwrap();
        // with v = 1, w = 100 the k = 0 image sits at a = 99; compare to level 99
        let levy = OneSidedBoundary::new(99.0).unwrap().pdf(1.0).unwrap();
        assert!((ss - levy).abs() < 1e-12);
        let ss = ss_density(1.0, 99.0, 100.0, ctl()).unwrap();
        let levy = OneSidedBoundary::new(1.0).unwrap().pdf(1.0).unwrap();
        assert!((ss - levy).abs() < 1e-12);
    }

    #[test]
    fn ss_density_self_convergence_and_brute_force() {
        let a = ss_density(1.0, 1.0, 2.0, ctl()).unwrap();
        let tight = ss_density(1.0, 1.0, 2.0, SeriesControl::new(1e-19, 1_000_000).unwrap()).unwrap();
        assert!((a - tight).abs() < 1e-13);
        assert!((a - SS_1_1_2).abs() < 1e-15);
    }

    #[test]
    fn ss_density_domain() {
        assert!(matches!(ss_density(1.0, 2.0, 1.0, ctl()), Err(FptError::Domain(_))));
        assert!(matches!(ss_density(1.0, 0.0, 1.0, ctl()), Err(FptError::Domain(_))));
        assert!(matches!(ss_density(0.0, 0.5, 1.0, ctl()), Err(FptError::Domain(_))));
    }

    #[test]
    fn max_terms_overflow_is_reported() {
        let tiny = SeriesControl::new(1e-18, 3).unwrap();
        assert!(matches!(two_sided_cdf(tb(0.01, -0.01), 1e-3, tiny), Err(FptError::Convergence(_))));
        assert_eq!(two_sided_cdf(tb(0.01, -0.01), 100.0, tiny).unwrap(), 1.0);
    }

    #[test]
    fn pdf_values() {
        assert_eq!(two_sided_pdf(tb(1.0, -1.0), 0.0, ctl()).unwrap(), 0.0);
        for t in [0.1, 1.0, 5.0] {
            let f = two_sided_pdf(tb(1.0, -1.0), t, ctl()).unwrap();
            let half = ss_density(t, 1.0, 2.0, ctl()).unwrap();
            assert_eq!(f, 2.0 * half);
        }
        assert!((two_sided_pdf(tb(1.0, -1.0), 1.0, ctl()).unwrap() - PDF_1_M1_1).abs() < 1e-15);
        let b = tb(1.0, -2.0);
        let h = 1e-6;
        let fd = (b.cdf(1.0 + h, ctl()).unwrap() - b.cdf(1.0 - h, ctl()).unwrap()) / (2.0 * h);
        let f = b.pdf(1.0, ctl()).unwrap();
        assert!((fd - f).abs() / f < 1e-6);
    }

    #[test]
    fn cdf_values() {
        assert_eq!(two_sided_cdf(tb(1.0, -1.0), 0.0, ctl()).unwrap(), 0.0);
        let one = OneSidedBoundary::new(1.0).unwrap().cdf(1.0).unwrap();
        assert!((two_sided_cdf(tb(1.0, -8.0), 1.0, ctl()).unwrap() - one).abs() < 1e-12);
        assert!((two_sided_cdf(tb(1.0, -1.0), 1.0, ctl()).unwrap() - CDF_1_M1_1).abs() < 1e-15);
        assert!((two_sided_cdf(tb(1.0, -2.0), 1.0, ctl()).unwrap() - CDF_1_M2_1).abs() < 1e-15);
        assert!((two_sided_cdf(tb(1.0, -1.0), 200.0, ctl()).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cdf_matches_quadrature_of_pdf() {
        // composite Simpson on a substitution x = t·u² that flattens the start
        let b = tb(0.5, -1.5);
        let t = 2.0;
        let n = 4000;
        let f = |u: f64| 2.0 * t * u * b.pdf(t * u * u, ctl()).unwrap();
        let hstep = 1.0 / n as f64;
        let mut s = f(0.0) + f(1.0);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * hstep);
        }
        let quad = s * hstep / 3.0;
        assert!((quad - b.cdf(t, ctl()).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn containment_and_symmetry() {
        for (g, h) in [(1.0, -1.0), (1.0, -2.0), (0.5, -1.5), (3.0, -0.2)] {
            let b = tb(g, h);
            let (lg, lh) = (OneSidedBoundary::new(g).unwrap(), OneSidedBoundary::new(-h).unwrap());
            for i in 0..100 {
                let t = 0.01 * (1e4f64).powf(i as f64 / 99.0);
                let p = b.cdf(t, ctl()).unwrap();
                let (a, c) = (lg.cdf(t).unwrap(), lh.cdf(t).unwrap());
                assert!(a.max(c) <= p + 1e-15, "lower bound at t = {t}");
                assert!(p <= (a + c).min(1.0) + 1e-15, "upper bound at t = {t}");
                assert_eq!(p, b.mirrored().cdf(t, ctl()).unwrap());
            }
        }
    }

    #[test]
    fn cdf_is_nondecreasing() {
        let b = tb(1.0, -2.0);
        let mut prev = 0.0;
        for i in 1..=2000 {
            let p = b.cdf(0.02 * i as f64, ctl()).unwrap();
            assert!(p >= prev);
            prev = p;
        }
    }

    #[test]
    fn inverse_round_trip_and_bracket() {
        let b = tb(1.0, -1.0);
        assert_eq!(b.cdf_inverse(0.0, ctl()).unwrap(), 0.0);
        for p in [0.1, 0.5, 0.9] {
            let t = b.cdf_inverse(p, ctl()).unwrap();
            assert!((b.cdf(t, ctl()).unwrap() - p).abs() < 1e-10);
            let near = b.nearest_level();
            assert!(near.cdf_inverse(0.5 * p).unwrap() <= t);
            assert!(t <= near.cdf_inverse(p).unwrap());
        }
        assert!(matches!(b.cdf_inverse(1.0, ctl()), Err(FptError::Domain(_))));
        assert!(matches!(b.cdf_inverse(-0.2, ctl()), Err(FptError::Domain(_))));
    }

    #[test]
    fn inverse_in_the_far_tails() {
        let b = tb(1.0, -2.0);
        for p in [1e-30, 1e-8, 0.999_999] {
            let t = b.cdf_inverse(p, ctl()).unwrap();
            let back = b.cdf(t, ctl()).unwrap();
            assert!((back - p).abs() <= 1e-9 * p.min(1.0 - p).max(1e-300) + 1e-15, "p = {p}");
        }
    }
}
