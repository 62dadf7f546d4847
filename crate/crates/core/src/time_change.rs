//! Crossing probabilities of a continuous local martingale `Z` with
//! nonrandom quadratic variation: by the Dambis–Dubins–Schwarz representation
//! `Z_t = B_{⟨Z⟩_t}`, the crossing cdf is the Wiener cdf read at the clock,
//! `P^Z(t) = P^W(⟨Z⟩_t)`, and the density picks up the factor `⟨Z⟩'_t`.
//!
//! Random clocks and boundaries are modeled by a finite weighted
//! [`ScenarioSet`]; the crossing cdf is then the weighted sum of the
//! per-scenario cdfs. For the two-sided case the clock must be independent of
//! the boundary pair; that is a modeling assumption the caller owns.

use serde::{Deserialize, Serialize};

use crate::clock::QuadraticVariationPath;
use crate::error::{FptError, Result};
use crate::one_sided::OneSidedBoundary;
use crate::two_sided::{SeriesControl, TwoSidedBoundary};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Boundary {
    OneSided(OneSidedBoundary),
    TwoSided(TwoSidedBoundary),
}

impl Boundary {
    /// Wiener crossing cdf at variation level `s`.
    pub fn wiener_cdf(&self, s: f64, ctl: SeriesControl) -> Result<f64> {
        match self {
            Boundary::OneSided(b) => b.cdf(s),
            Boundary::TwoSided(b) => b.cdf(s, ctl),
        }
    }

    /// Wiener crossing density at variation level `s`.
    pub fn wiener_pdf(&self, s: f64, ctl: SeriesControl) -> Result<f64> {
        match self {
            Boundary::OneSided(b) => b.pdf(s),
            Boundary::TwoSided(b) => b.pdf(s, ctl),
        }
    }
}

impl From<OneSidedBoundary> for Boundary {
    fn from(b: OneSidedBoundary) -> Self {
        Boundary::OneSided(b)
    }
}

impl From<TwoSidedBoundary> for Boundary {
    fn from(b: TwoSidedBoundary) -> Self {
        Boundary::TwoSided(b)
    }
}

pub fn crossing_cdf_one_sided(path: &QuadraticVariationPath, b: OneSidedBoundary, t: f64) -> Result<f64> {
    b.cdf(path.eval(t)?)
}

pub fn crossing_pdf_one_sided(path: &QuadraticVariationPath, b: OneSidedBoundary, t: f64) -> Result<f64> {
    Ok(path.derivative(t)? * b.pdf(path.eval(t)?)?)
}

pub fn crossing_cdf_two_sided(
    path: &QuadraticVariationPath,
    b: TwoSidedBoundary,
    t: f64,
    ctl: SeriesControl,
) -> Result<f64> {
    b.cdf(path.eval(t)?, ctl)
}

pub fn crossing_pdf_two_sided(
    path: &QuadraticVariationPath,
    b: TwoSidedBoundary,
    t: f64,
    ctl: SeriesControl,
) -> Result<f64> {
    Ok(path.derivative(t)? * b.pdf(path.eval(t)?, ctl)?)
}

/// Crossing cdf for either boundary kind.
pub fn crossing_cdf(path: &QuadraticVariationPath, b: Boundary, t: f64, ctl: SeriesControl) -> Result<f64> {
    b.wiener_cdf(path.eval(t)?, ctl)
}

pub fn crossing_pdf(path: &QuadraticVariationPath, b: Boundary, t: f64, ctl: SeriesControl) -> Result<f64> {
    Ok(path.derivative(t)? * b.wiener_pdf(path.eval(t)?, ctl)?)
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub weight: f64,
    pub clock: QuadraticVariationPath,
    pub boundary: Boundary,
}

impl Scenario {
    pub fn new(weight: f64, clock: QuadraticVariationPath, boundary: impl Into<Boundary>) -> Self {
        Self { weight, clock, boundary: boundary.into() }
    }

    /// One-sided scenarios rewritten for `Y = Z/g`: unit boundary, clock `⟨Z⟩/g²`.
    pub fn normalized(&self) -> Result<Self> {
        match self.boundary {
            Boundary::OneSided(b) => {
                let g = b.level();
                Ok(Self {
                    weight: self.weight,
                    clock: self.clock.scaled(1.0 / (g * g))?,
                    boundary: Boundary::OneSided(OneSidedBoundary::unit()),
                })
            }
            Boundary::TwoSided(_) => Ok(self.clone()),
        }
    }
}

/// Tolerance on `|Σ weights - 1|`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Finite-support law of (boundary, clock).
#[derive(Debug, Clone)]
pub struct ScenarioSet {
    scenarios: Vec<Scenario>,
}

impl ScenarioSet {
    pub fn new(scenarios: Vec<Scenario>) -> Result<Self> {
        if scenarios.is_empty() {
            return Err(FptError::Validation("scenario set is empty".into()));
        }
        for (i, s) in scenarios.iter().enumerate() {
            if !(s.weight >= 0.0 && s.weight.is_finite()) {
                return Err(FptError::Validation(format!("scenario {i} has invalid weight {}", s.weight)));
            }
        }
        let total: f64 = scenarios.iter().map(|s| s.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(FptError::Validation(format!("scenario weights sum to {total}, expected 1")));
        }
        Ok(Self { scenarios })
    }

    pub fn single(clock: QuadraticVariationPath, boundary: impl Into<Boundary>) -> Self {
        Self { scenarios: vec![Scenario::new(1.0, clock, boundary)] }
    }

    /// The mixture `λ·a + (1-λ)·b`.
    pub fn blend(a: &ScenarioSet, lambda: f64, b: &ScenarioSet) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(FptError::Validation(format!("blend weight must lie in [0, 1], got {lambda}")));
        }
        let mut out = Vec::with_capacity(a.len() + b.len());
        out.extend(a.scenarios.iter().map(|s| Scenario { weight: lambda * s.weight, ..s.clone() }));
        out.extend(b.scenarios.iter().map(|s| Scenario { weight: (1.0 - lambda) * s.weight, ..s.clone() }));
        Self::new(out)
    }

    pub fn normalized(&self) -> Result<Self> {
        let scenarios = self.scenarios.iter().map(Scenario::normalized).collect::<Result<Vec<_>>>()?;
        Ok(Self { scenarios })
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    fn require(&self, two_sided: bool) -> Result<()> {
        for (i, s) in self.scenarios.iter().enumerate() {
            let ok = matches!((two_sided, s.boundary), (false, Boundary::OneSided(_)) | (true, Boundary::TwoSided(_)));
            if !ok {
                let want = if two_sided { "two-sided" } else { "one-sided" };
                return Err(FptError::Validation(format!("scenario {i} does not carry a {want} boundary")));
            }
        }
        Ok(())
    }
}

/// `Σ_i w_i · P_i(t)` over scenarios of any boundary kind.
pub fn mixture_cdf(set: &ScenarioSet, t: f64, ctl: SeriesControl) -> Result<f64> {
    let mut acc = 0.0;
    for (i, s) in set.scenarios.iter().enumerate() {
        acc += s.weight * crossing_cdf(&s.clock, s.boundary, t, ctl).map_err(|e| e.in_scenario(i))?;
    }
    Ok(acc.clamp(0.0, 1.0))
}

pub fn mixture_pdf(set: &ScenarioSet, t: f64, ctl: SeriesControl) -> Result<f64> {
    let mut acc = 0.0;
    for (i, s) in set.scenarios.iter().enumerate() {
        acc += s.weight * crossing_pdf(&s.clock, s.boundary, t, ctl).map_err(|e| e.in_scenario(i))?;
    }
    Ok(acc)
}

/// One-sided mixture; with normalized scenarios this is `Σ w_i · P_1^W(y_i(t))` for `y = ⟨Z/g⟩`.
pub fn mixture_cdf_one_sided(set: &ScenarioSet, t: f64) -> Result<f64> {
    set.require(false)?;
    mixture_cdf(set, t, SeriesControl::default())
}

pub fn mixture_pdf_one_sided(set: &ScenarioSet, t: f64) -> Result<f64> {
    set.require(false)?;
    mixture_pdf(set, t, SeriesControl::default())
}

pub fn mixture_cdf_two_sided(set: &ScenarioSet, t: f64, ctl: SeriesControl) -> Result<f64> {
    set.require(true)?;
    mixture_cdf(set, t, ctl)
}

pub fn mixture_pdf_two_sided(set: &ScenarioSet, t: f64, ctl: SeriesControl) -> Result<f64> {
    set.require(true)?;
    mixture_pdf(set, t, ctl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::ClockFunction;
    use proptest::prelude::*;
    use std::sync::Arc;

    const LEVY_1_1: f64 = 0.317_310_507_862_914_102_829_534_908_736;

    fn one(g: f64) -> OneSidedBoundary {
        OneSidedBoundary::new(g).unwrap()
    }

    fn two(g: f64, h: f64) -> TwoSidedBoundary {
        TwoSidedBoundary::new(g, h).unwrap()
    }

    fn ctl() -> SeriesControl {
        SeriesControl::default()
    }

    struct Heston;
    impl ClockFunction for Heston {
        // integrated variance of a mean-reverting deterministic variance path
        fn value(&self, t: f64) -> f64 {
            0.5 * t + 0.7 * (1.0 - (-2.0 * t).exp()) / 2.0
        }
        fn derivative(&self, t: f64) -> f64 {
            0.5 + 0.7 * (-2.0 * t).exp()
        }
    }

    fn slopes_clock() -> QuadraticVariationPath {
        QuadraticVariationPath::grid(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 2.0, 2.5, 5.5]).unwrap()
    }

    #[test]
    fn identity_clock_reduces_to_wiener() {
        let id = QuadraticVariationPath::identity();
        for t in [0.0, 0.3, 1.0, 9.0] {
            assert_eq!(crossing_cdf_one_sided(&id, one(1.0), t).unwrap(), one(1.0).cdf(t).unwrap());
            assert_eq!(crossing_pdf_one_sided(&id, one(1.0), t).unwrap(), one(1.0).pdf(t).unwrap());
            let b = two(1.0, -2.0);
            assert_eq!(crossing_cdf_two_sided(&id, b, t, ctl()).unwrap(), b.cdf(t, ctl()).unwrap());
            assert_eq!(crossing_pdf_two_sided(&id, b, t, ctl()).unwrap(), b.pdf(t, ctl()).unwrap());
        }
    }

    #[test]
    fn linear_clock_scaling() {
        let c4 = QuadraticVariationPath::linear(4.0).unwrap();
        let p = crossing_cdf_one_sided(&c4, one(2.0), 1.0).unwrap();
        assert!((p - LEVY_1_1).abs() < 1e-15);
        for t in [0.2, 1.0, 3.0] {
            let f = crossing_pdf_one_sided(&c4, one(1.3), t).unwrap();
            assert_eq!(f, 4.0 * one(1.3).pdf(4.0 * t).unwrap());
            let f2 = crossing_pdf_two_sided(&c4, two(1.0, -1.0), t, ctl()).unwrap();
            assert_eq!(f2, 4.0 * two(1.0, -1.0).pdf(4.0 * t, ctl()).unwrap());
        }
    }

    #[test]
    fn lower_barrier_far_away_collapses() {
        let c = slopes_clock();
        for t in [0.5, 1.5, 2.5] {
            let a = crossing_cdf_two_sided(&c, two(1.0, -50.0), t, ctl()).unwrap();
            let b = crossing_cdf_one_sided(&c, one(1.0), t).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pdf_matches_finite_differences_on_smooth_clock() {
        let c = QuadraticVariationPath::custom(Arc::new(Heston), f64::INFINITY).unwrap();
        let h = 1e-6;
        for t in [0.2, 0.7, 1.5, 4.0] {
            let f = crossing_pdf_one_sided(&c, one(1.0), t).unwrap();
            let fd = (crossing_cdf_one_sided(&c, one(1.0), t + h).unwrap()
                - crossing_cdf_one_sided(&c, one(1.0), t - h).unwrap())
                / (2.0 * h);
            assert!((f - fd).abs() / f < 1e-6, "one-sided t = {t}");
            let b = two(0.8, -1.1);
            let f = crossing_pdf_two_sided(&c, b, t, ctl()).unwrap();
            let fd = (crossing_cdf_two_sided(&c, b, t + h, ctl()).unwrap()
                - crossing_cdf_two_sided(&c, b, t - h, ctl()).unwrap())
                / (2.0 * h);
            assert!((f - fd).abs() / f < 1e-6, "two-sided t = {t}");
        }
    }

    #[test]
    fn plateau_freezes_the_cdf() {
        let c = QuadraticVariationPath::grid(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 1.0, 1.0, 2.0]).unwrap();
        let p1 = crossing_cdf_one_sided(&c, one(1.0), 1.0).unwrap();
        for t in [1.1, 1.5, 2.0] {
            assert_eq!(crossing_cdf_one_sided(&c, one(1.0), t).unwrap(), p1);
        }
        assert_eq!(crossing_pdf_one_sided(&c, one(1.0), 1.5).unwrap(), 0.0);
    }

    #[test]
    fn out_of_domain_propagates() {
        let c = slopes_clock();
        assert!(matches!(crossing_cdf_one_sided(&c, one(1.0), 3.5), Err(FptError::Domain(_))));
    }

    #[test]
    fn single_scenario_mixtures() {
        let c = slopes_clock();
        let set = ScenarioSet::single(c.clone(), one(1.0));
        for t in [0.0, 0.5, 2.0, 3.0] {
            assert_eq!(mixture_cdf_one_sided(&set, t).unwrap(), crossing_cdf_one_sided(&c, one(1.0), t).unwrap());
            assert_eq!(mixture_pdf_one_sided(&set, t).unwrap(), crossing_pdf_one_sided(&c, one(1.0), t).unwrap());
        }
        let b = two(1.0, -1.5);
        let set = ScenarioSet::single(c.clone(), b);
        for t in [0.5, 2.0] {
            assert_eq!(
                mixture_cdf_two_sided(&set, t, ctl()).unwrap(),
                crossing_cdf_two_sided(&c, b, t, ctl()).unwrap()
            );
            assert_eq!(
                mixture_pdf_two_sided(&set, t, ctl()).unwrap(),
                crossing_pdf_two_sided(&c, b, t, ctl()).unwrap()
            );
        }
        assert!(mixture_cdf_one_sided(&set, 1.0).is_err());
    }

    #[test]
    fn two_scenario_mixture_value() {
        let set = ScenarioSet::new(vec![
            Scenario::new(0.5, QuadraticVariationPath::identity(), one(1.0)),
            Scenario::new(0.5, QuadraticVariationPath::linear(4.0).unwrap(), one(1.0)),
        ])
        .unwrap();
        let expect = 0.5 * (one(1.0).cdf(1.0).unwrap() + one(1.0).cdf(4.0).unwrap());
        assert_eq!(mixture_cdf_one_sided(&set, 1.0).unwrap(), expect);
    }

    #[test]
    fn two_sided_mixture_is_the_weighted_sum() {
        let scenarios = vec![
            Scenario::new(0.2, slopes_clock(), two(1.0, -1.0)),
            Scenario::new(0.3, QuadraticVariationPath::linear(0.5).unwrap(), two(0.5, -1.5)),
            Scenario::new(0.5, QuadraticVariationPath::identity(), two(2.0, -1.0)),
        ];
        let set = ScenarioSet::new(scenarios.clone()).unwrap();
        for t in [0.3, 1.0, 2.9] {
            let mut p = 0.0;
            let mut f = 0.0;
            for s in &scenarios {
                if let Boundary::TwoSided(b) = s.boundary {
                    p += s.weight * crossing_cdf_two_sided(&s.clock, b, t, ctl()).unwrap();
                    f += s.weight * crossing_pdf_two_sided(&s.clock, b, t, ctl()).unwrap();
                }
            }
            assert_eq!(mixture_cdf_two_sided(&set, t, ctl()).unwrap(), p);
            assert_eq!(mixture_pdf_two_sided(&set, t, ctl()).unwrap(), f);
        }
    }

    #[test]
    fn mixture_pdf_matches_finite_differences() {
        let set = ScenarioSet::new(vec![
            Scenario::new(0.4, QuadraticVariationPath::custom(Arc::new(Heston), f64::INFINITY).unwrap(), one(1.0)),
            Scenario::new(0.6, QuadraticVariationPath::linear(2.0).unwrap(), one(1.5)),
        ])
        .unwrap();
        let h = 1e-6;
        for t in [0.3, 1.0, 2.5] {
            let f = mixture_pdf_one_sided(&set, t).unwrap();
            let fd =
                (mixture_cdf_one_sided(&set, t + h).unwrap() - mixture_cdf_one_sided(&set, t - h).unwrap()) / (2.0 * h);
            assert!((f - fd).abs() / f < 1e-6);
        }
    }

    #[test]
    fn normalization_preserves_the_cdf() {
        let set = ScenarioSet::new(vec![
            Scenario::new(0.3, slopes_clock(), one(2.0)),
            Scenario::new(0.7, QuadraticVariationPath::linear(3.0).unwrap(), one(0.5)),
        ])
        .unwrap();
        let norm = set.normalized().unwrap();
        for s in norm.scenarios() {
            assert_eq!(s.boundary, Boundary::OneSided(OneSidedBoundary::unit()));
        }
        for t in [0.1, 1.0, 2.7] {
            let a = mixture_cdf_one_sided(&set, t).unwrap();
            let b = mixture_cdf_one_sided(&norm, t).unwrap();
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn weight_validation() {
        let c = QuadraticVariationPath::identity();
        assert!(ScenarioSet::new(vec![]).is_err());
        assert!(ScenarioSet::new(vec![
            Scenario::new(0.6, c.clone(), one(1.0)),
            Scenario::new(0.3, c.clone(), one(1.0))
        ])
        .is_err());
        assert!(
            ScenarioSet::new(vec![Scenario::new(1.2, c.clone(), one(1.0)), Scenario::new(-0.2, c, one(1.0))]).is_err()
        );
    }

    proptest! {
        #[test]
        fn composition_law_is_exact(rates in prop::collection::vec(0.0f64..3.0, 1..8), u in 0.0f64..1.0, g in 0.2f64..3.0) {
            let mut t = vec![0.0];
            let mut v = vec![0.0];
            for r in &rates {
                t.push(t.last().unwrap() + 0.5);
                v.push(v.last().unwrap() + r * 0.5 + 1e-3);
            }
            let c = QuadraticVariationPath::grid(t, v).unwrap();
            let tq = u * c.domain_end();
            let b = one(g);
            prop_assert_eq!(crossing_cdf_one_sided(&c, b, tq).unwrap(), b.cdf(c.eval(tq).unwrap()).unwrap());
            let id = QuadraticVariationPath::identity();
            prop_assert_eq!(
                crossing_cdf_one_sided(&c, b, tq).unwrap(),
                crossing_cdf_one_sided(&id, b, c.eval(tq).unwrap()).unwrap()
            );
        }

        #[test]
        fn blend_is_linear(lambda in 0.0f64..1.0, t in 0.01f64..3.0) {
            let a = ScenarioSet::new(vec![
                Scenario::new(0.25, slopes_clock(), one(1.0)),
                Scenario::new(0.75, QuadraticVariationPath::linear(2.0).unwrap(), one(0.7)),
            ]).unwrap();
            let b = ScenarioSet::single(QuadraticVariationPath::linear(0.3).unwrap(), one(1.2));
            let mix = ScenarioSet::blend(&a, lambda, &b).unwrap();
            let lhs = mixture_cdf_one_sided(&mix, t).unwrap();
            let rhs = lambda * mixture_cdf_one_sided(&a, t).unwrap() + (1.0 - lambda) * mixture_cdf_one_sided(&b, t).unwrap();
            prop_assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON);
        }
    }
}
