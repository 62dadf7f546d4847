//! Inverse first-passage problem: given a target crossing cdf `F` (or pdf
//! `f`), build the clock `v_F(t) = (P^W)⁻¹(F(t)) · 1{0 < F(t) < 1}` (or the
//! spot variance `σ²(t) = f(t) / f^W((P^W)⁻¹(F(t))) · 1{0 < F(t) < 1}`) whose
//! crossing distribution is `F`.
//!
//! Targets are piecewise-linear grids. Solutions are computed knotwise; the
//! almost-everywhere statements of the continuous theory reduce to equality
//! at the knots.

use serde::{Deserialize, Serialize};

use crate::clock::QuadraticVariationPath;
use crate::error::{FptError, Result};
use crate::one_sided::{OneSidedBoundary, SATURATION_LEVEL};
use crate::time_change::{Boundary, Scenario, ScenarioSet};
use crate::two_sided::{SeriesControl, TwoSidedBoundary};

/// Largest monotonicity or range violation repaired by clamping.
pub const MONOTONE_REPAIR_TOL: f64 = 1e-12;

/// Default tolerance between a supplied cdf and the trapezoidal integral of the pdf.
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-4;

/// Largest relative change allowed when the integrability probe is refined 2×.
pub const INTEGRABILITY_RTOL: f64 = 0.5;

/// Target crossing cdf on knots, linearly interpolated, with `F(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCdf {
    t: Vec<f64>,
    f: Vec<f64>,
    repaired: usize,
}

impl SurvivalCdf {
    /// Knots must have strictly increasing nonnegative times. A leading
    /// `(0, 0)` knot is added when the first time is positive.
    pub fn new(t: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if t.len() != f.len() {
            return Err(FptError::Validation(format!("cdf grid has {} times but {} values", t.len(), f.len())));
        }
        if t.is_empty() {
            return Err(FptError::Validation("cdf grid is empty".into()));
        }
        let (mut t, mut f) = (t, f);
        if t[0] > 0.0 {
            t.insert(0, 0.0);
            f.insert(0, 0.0);
        }
        let mut repaired = 0;
        for i in 0..t.len() {
            if !t[i].is_finite() || !f[i].is_finite() {
                return Err(FptError::Validation(format!("non-finite cdf knot at index {i}")));
            }
            if t[i] < 0.0 {
                return Err(FptError::Validation(format!("negative time {} at index {i}", t[i])));
            }
            if i > 0 && t[i] <= t[i - 1] {
                return Err(FptError::Validation(format!("cdf knot times not strictly increasing at index {i}")));
            }
            let lo = if i == 0 { 0.0 } else { f[i - 1] };
            // F(0) = 0 is part of the contract, repaired only up to rounding
            let hi = if i == 0 { 0.0 } else { 1.0 };
            if f[i] < lo {
                if lo - f[i] > MONOTONE_REPAIR_TOL {
                    return Err(FptError::Validation(format!(
                        "cdf decreases by {} at index {i} (t = {})",
                        lo - f[i],
                        t[i]
                    )));
                }
                f[i] = lo;
                repaired += 1;
            } else if f[i] > hi {
                if f[i] - hi > MONOTONE_REPAIR_TOL {
                    return Err(FptError::Validation(format!(
                        "cdf value {} out of range at index {i} (t = {})",
                        f[i], t[i]
                    )));
                }
                f[i] = hi;
                repaired += 1;
            }
        }
        Ok(Self { t, f, repaired })
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.f
    }

    /// Number of knots clamped to restore monotonicity or range.
    pub fn repaired_knots(&self) -> usize {
        self.repaired
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        interp(&self.t, &self.f, t)
    }
}

fn interp(ts: &[f64], ys: &[f64], t: f64) -> Result<f64> {
    let last = *ts.last().unwrap();
    if !(t >= ts[0] && t <= last) {
        return Err(FptError::Domain(format!("time {t} outside grid [{}, {last}]", ts[0])));
    }
    let j = ts.partition_point(|&x| x <= t);
    if j == ts.len() {
        return Ok(*ys.last().unwrap());
    }
    let i = j - 1;
    if t == ts[i] {
        return Ok(ys[i]);
    }
    Ok(ys[i] + (ys[i + 1] - ys[i]) * (t - ts[i]) / (ts[i + 1] - ts[i]))
}

/// Target crossing density on knots starting at `t = 0`, with its cdf.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalPdf {
    density: Vec<f64>,
    cdf: SurvivalCdf,
}

fn trapezoid_cumulative(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(t.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..t.len() {
        acc += 0.5 * (y[i] + y[i - 1]) * (t[i] - t[i - 1]);
        out.push(acc);
    }
    out
}

impl SurvivalPdf {
    /// Density knots; the cdf is the trapezoidal integral.
    pub fn from_density(t: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        Self::check_density(&t, &f)?;
        let cum = trapezoid_cumulative(&t, &f);
        let cdf = SurvivalCdf::new(t, cum)?;
        Ok(Self { density: f, cdf })
    }

    /// Density knots paired with exact cdf values on the same knots. The cdf
    /// must agree with the trapezoidal integral of the density within `quad_tol`.
    pub fn with_cdf(t: Vec<f64>, f: Vec<f64>, cdf: Vec<f64>, quad_tol: f64) -> Result<Self> {
        Self::check_density(&t, &f)?;
        if cdf.len() != t.len() {
            return Err(FptError::Validation(format!("pdf grid has {} knots but cdf has {}", t.len(), cdf.len())));
        }
        let cum = trapezoid_cumulative(&t, &f);
        for (i, (a, b)) in cum.iter().zip(&cdf).enumerate() {
            if (a - b).abs() > quad_tol {
                return Err(FptError::Validation(format!(
                    "cdf {b} and integrated pdf {a} disagree beyond {quad_tol} at index {i} (t = {})",
                    t[i]
                )));
            }
        }
        let cdf = SurvivalCdf::new(t, cdf)?;
        Ok(Self { density: f, cdf })
    }

    /// Density and cdf columns produced together (e.g. by a forward run); the
    /// cdf is taken as is, without the quadrature cross-check.
    pub fn paired(t: Vec<f64>, f: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        Self::check_density(&t, &f)?;
        if cdf.len() != t.len() {
            return Err(FptError::Validation(format!("pdf grid has {} knots but cdf has {}", t.len(), cdf.len())));
        }
        let cdf = SurvivalCdf::new(t, cdf)?;
        Ok(Self { density: f, cdf })
    }

    fn check_density(t: &[f64], f: &[f64]) -> Result<()> {
        if t.len() != f.len() {
            return Err(FptError::Validation(format!("pdf grid has {} times but {} values", t.len(), f.len())));
        }
        if t.len() < 2 {
            return Err(FptError::Validation("pdf grid needs at least two knots".into()));
        }
        if t[0] != 0.0 {
            return Err(FptError::Validation(format!("pdf grid must start at t = 0, got {}", t[0])));
        }
        for (i, &x) in f.iter().enumerate() {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(FptError::Validation(format!(
                    "density {x} at index {i} is not a finite nonnegative value"
                )));
            }
        }
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        self.cdf.times()
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn cdf(&self) -> &SurvivalCdf {
        &self.cdf
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportThresholds {
    /// `inf { t > 0 : F(t) > 0 }`; infinite when F vanishes on the whole grid.
    pub k0: f64,
    /// `inf { t > 0 : F(t) = 1 }`; infinite when the grid never reaches 1.
    pub k1: f64,
}

/// Thresholds computed exactly on the piecewise-linear representation.
pub fn support_thresholds(cdf: &SurvivalCdf) -> SupportThresholds {
    let (t, f) = (cdf.times(), cdf.values());
    let k0 = match f.iter().position(|&x| x > 0.0) {
        Some(i) => t[i - 1],
        None => f64::INFINITY,
    };
    let k1 = match f.iter().position(|&x| x >= 1.0) {
        Some(i) => t[i],
        None => f64::INFINITY,
    };
    SupportThresholds { k0, k1 }
}

/// Assumption checks for an inverse problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseReport {
    pub thresholds: SupportThresholds,
    pub assumption_k1_infinite: bool,
    /// Refinement-stability probe of `∫ σ²` on `[k0, k0 + η]`; `true` when no density was supplied.
    pub local_integrability_ok: bool,
    /// Knots with `1 - 1e-14 < F < 1`, where the inverse saturates.
    pub clamped_knots: usize,
    /// Knots clamped on ingestion to repair sub-1e-12 monotonicity violations.
    pub repaired_knots: usize,
}

impl InverseReport {
    pub fn passes(&self) -> bool {
        self.assumption_k1_infinite && self.local_integrability_ok && self.clamped_knots == 0
    }
}

/// The Wiener crossing law being inverted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    OneSided(OneSidedBoundary),
    TwoSided(TwoSidedBoundary, SeriesControl),
}

impl Kernel {
    fn inverse(&self, p: f64) -> Result<f64> {
        match self {
            Kernel::OneSided(b) => b.cdf_inverse(p),
            Kernel::TwoSided(b, ctl) => b.cdf_inverse(p, *ctl),
        }
    }

    fn pdf_at_inverse(&self, p: f64) -> Result<f64> {
        match self {
            Kernel::OneSided(b) => b.pdf_at_inverse(p),
            Kernel::TwoSided(b, ctl) => b.pdf(b.cdf_inverse(p, *ctl)?, *ctl),
        }
    }

    fn boundary(&self) -> Boundary {
        match self {
            Kernel::OneSided(b) => Boundary::OneSided(*b),
            Kernel::TwoSided(b, _) => Boundary::TwoSided(*b),
        }
    }
}

fn saturated_count(cdf: &SurvivalCdf) -> usize {
    cdf.values().iter().filter(|&&x| x > SATURATION_LEVEL && x < 1.0).count()
}

pub fn inspect_cdf(cdf: &SurvivalCdf) -> InverseReport {
    let thresholds = support_thresholds(cdf);
    InverseReport {
        thresholds,
        assumption_k1_infinite: thresholds.k1.is_infinite(),
        local_integrability_ok: true,
        clamped_knots: saturated_count(cdf),
        repaired_knots: cdf.repaired_knots(),
    }
}

pub fn inspect_pdf(pdf: &SurvivalPdf, kernel: Kernel) -> InverseReport {
    let mut report = inspect_cdf(pdf.cdf());
    report.local_integrability_ok = report.clamped_knots == 0
        && report.assumption_k1_infinite
        && local_integrability(pdf, kernel, report.thresholds.k0).unwrap_or(false);
    report
}

fn variance_at(kernel: Kernel, f: f64, big_f: f64) -> Result<f64> {
    if !(big_f > 0.0 && big_f < 1.0) {
        return Ok(0.0);
    }
    if f == 0.0 {
        return Ok(0.0);
    }
    Ok(f / kernel.pdf_at_inverse(big_f)?)
}

/// Midpoint-rule probe of `∫ σ²` over `[k0, k0 + η]` with one and two cells,
/// `η` one knot spacing. The density and cdf are linearly interpolated.
fn local_integrability(pdf: &SurvivalPdf, kernel: Kernel, k0: f64) -> Result<bool> {
    if k0.is_infinite() {
        return Ok(true);
    }
    let t = pdf.times();
    let i = t.partition_point(|&x| x <= k0) - 1;
    if i + 1 >= t.len() {
        return Ok(true);
    }
    let eta = t[i + 1] - t[i];
    let sigma2 = |x: f64| -> Result<f64> {
        let f = interp(t, pdf.density(), x)?;
        let big_f = pdf.cdf().eval(x)?;
        variance_at(kernel, f, big_f)
    };
    let one = eta * sigma2(k0 + 0.5 * eta)?;
    let two = 0.5 * eta * (sigma2(k0 + 0.25 * eta)? + sigma2(k0 + 0.75 * eta)?);
    if !one.is_finite() || !two.is_finite() {
        return Ok(false);
    }
    let scale = one.abs().max(two.abs());
    Ok(scale == 0.0 || (one - two).abs() <= INTEGRABILITY_RTOL * scale)
}

fn check_solvable(report: &InverseReport) -> Result<()> {
    if !report.assumption_k1_infinite {
        return Err(FptError::Assumption(format!(
            "target cdf reaches 1 at finite time k1 = {}; no clock with infinite terminal variation realizes it",
            report.thresholds.k1
        )));
    }
    if report.clamped_knots > 0 {
        return Err(FptError::Saturation(format!(
            "{} knot(s) have F above 1 - 1e-14; trim the grid",
            report.clamped_knots
        )));
    }
    Ok(())
}

fn solve_clock(cdf: &SurvivalCdf, kernel: Kernel) -> Result<QuadraticVariationPath> {
    check_solvable(&inspect_cdf(cdf))?;
    let mut v = Vec::with_capacity(cdf.values().len());
    let mut prev = 0.0f64;
    for &p in cdf.values() {
        let x = if p > 0.0 && p < 1.0 { kernel.inverse(p)? } else { 0.0 };
        // rounding in the kernel inverse can step back by an ulp
        prev = prev.max(x);
        v.push(prev);
    }
    QuadraticVariationPath::grid(cdf.times().to_vec(), v)
}

/// Spot variance on the knots of a density target.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceFunction {
    t: Vec<f64>,
    sigma2: Vec<f64>,
}

impl VarianceFunction {
    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.sigma2
    }

    /// Trapezoidal cumulative integral `∫_0^{t_i} σ²`.
    pub fn integrated(&self) -> Vec<f64> {
        trapezoid_cumulative(&self.t, &self.sigma2)
    }

    /// The clock `∫_0^t σ²` as a grid path.
    pub fn to_clock(&self) -> Result<QuadraticVariationPath> {
        QuadraticVariationPath::grid(self.t.clone(), self.integrated())
    }
}

fn solve_variance(pdf: &SurvivalPdf, kernel: Kernel) -> Result<VarianceFunction> {
    let report = inspect_pdf(pdf, kernel);
    check_solvable(&report)?;
    if !report.local_integrability_ok {
        return Err(FptError::Assumption(format!(
            "spot variance is not locally integrable near k0 = {}",
            report.thresholds.k0
        )));
    }
    let t = pdf.times();
    let mut sigma2 = Vec::with_capacity(t.len());
    for (i, (&f, &big_f)) in pdf.density().iter().zip(pdf.cdf().values()).enumerate() {
        let s = variance_at(kernel, f, big_f)?;
        if !s.is_finite() {
            return Err(FptError::Assumption(format!("spot variance is infinite at t = {} (index {i})", t[i])));
        }
        sigma2.push(s);
    }
    // at k0 the formula is 0/0; carry the value back from the next knot
    let big_f = pdf.cdf().values();
    if let Some(j) = big_f.iter().position(|&p| p > 0.0) {
        if j > 0 {
            sigma2[j - 1] = sigma2[j];
        }
    }
    Ok(VarianceFunction { t: t.to_vec(), sigma2 })
}

pub fn qv_solution_one_sided(cdf: &SurvivalCdf, b: OneSidedBoundary) -> Result<QuadraticVariationPath> {
    solve_clock(cdf, Kernel::OneSided(b))
}

pub fn qv_solution_two_sided(
    cdf: &SurvivalCdf,
    b: TwoSidedBoundary,
    ctl: SeriesControl,
) -> Result<QuadraticVariationPath> {
    solve_clock(cdf, Kernel::TwoSided(b, ctl))
}

pub fn variance_solution_one_sided(pdf: &SurvivalPdf, b: OneSidedBoundary) -> Result<VarianceFunction> {
    solve_variance(pdf, Kernel::OneSided(b))
}

pub fn variance_solution_two_sided(
    pdf: &SurvivalPdf,
    b: TwoSidedBoundary,
    ctl: SeriesControl,
) -> Result<VarianceFunction> {
    solve_variance(pdf, Kernel::TwoSided(b, ctl))
}

/// The kernel for a random-case scenario: one-sided targets are solved for
/// the normalized process `Y = Z/g`, i.e. against the unit boundary.
fn scenario_kernel(corridor: Option<TwoSidedBoundary>, ctl: SeriesControl) -> Kernel {
    match corridor {
        None => Kernel::OneSided(OneSidedBoundary::unit()),
        Some(b) => Kernel::TwoSided(b, ctl),
    }
}

/// One scenario of a random-case cdf target. `corridor = None` means the
/// one-sided normalized problem.
#[derive(Debug, Clone)]
pub struct ScenarioTarget {
    pub weight: f64,
    pub cdf: SurvivalCdf,
    pub corridor: Option<TwoSidedBoundary>,
}

#[derive(Debug, Clone)]
pub struct ScenarioDensityTarget {
    pub pdf: SurvivalPdf,
    pub corridor: Option<TwoSidedBoundary>,
}

/// Per-scenario clock solutions assembled into a scenario set.
pub fn qv_solution_random(targets: &[ScenarioTarget], ctl: SeriesControl) -> Result<ScenarioSet> {
    let mut scenarios = Vec::with_capacity(targets.len());
    for (i, target) in targets.iter().enumerate() {
        let kernel = scenario_kernel(target.corridor, ctl);
        let clock = solve_clock(&target.cdf, kernel).map_err(|e| e.in_scenario(i))?;
        scenarios.push(Scenario { weight: target.weight, clock, boundary: kernel.boundary() });
    }
    ScenarioSet::new(scenarios)
}

pub fn variance_solution_random(
    targets: &[ScenarioDensityTarget],
    ctl: SeriesControl,
) -> Result<Vec<VarianceFunction>> {
    targets
        .iter()
        .enumerate()
        .map(|(i, target)| {
            solve_variance(&target.pdf, scenario_kernel(target.corridor, ctl)).map_err(|e| e.in_scenario(i))
        })
        .collect()
}
