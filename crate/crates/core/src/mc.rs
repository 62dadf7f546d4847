//! Monte Carlo first-passage oracle for time-changed Brownian motion.
//!
//! Paths are simulated on the variation clock: increments over equal steps
//! `Δv = 1 / clock_steps` are exactly `N(0, Δv)`, so `Z_t = B_{⟨Z⟩_t}` is the
//! scheme itself. Crossing variation levels are mapped back to calendar time
//! with the clock's generalized inverse.
//!
//! With `bridge_correction`, a step that does not cross on the grid still
//! crosses level `g` with the Brownian-bridge probability
//! `exp(-2 (g - x_i)(g - x_{i+1}) / Δv)`. For a corridor the two sides are
//! combined as `p_g + p_h - p_g p_h`.
//!
//! Every path draws from its own ChaCha stream `(seed, path index)`, so results
//! do not depend on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clock::QuadraticVariationPath;
use crate::error::{FptError, Result};
use crate::one_sided::OneSidedBoundary;
use crate::time_change::{Boundary, ScenarioSet};
use crate::two_sided::TwoSidedBoundary;

/// Salt for the scenario-selection streams, kept apart from the path streams.
const SELECTION_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n_paths: usize,
    /// Steps per unit of accumulated variation.
    pub clock_steps: usize,
    pub seed: u64,
    pub bridge_correction: bool,
    pub horizon: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { n_paths: 100_000, clock_steps: 200, seed: 1, bridge_correction: true, horizon: 4.0 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(FptError::Validation("n_paths must be at least 1".into()));
        }
        if self.clock_steps == 0 {
            return Err(FptError::Validation("clock_steps must be at least 1".into()));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(FptError::Validation(format!("horizon must be a positive finite time, got {}", self.horizon)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
}

/// Censored sample of first-passage times.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    times: Vec<f64>,
    n_paths: usize,
    censored_count: usize,
    horizon: f64,
    upper_crossings: usize,
    lower_crossings: usize,
}

impl EmpiricalCdf {
    /// Build from uncensored crossing times (all `<= horizon`).
    pub fn from_times(mut times: Vec<f64>, n_paths: usize, horizon: f64) -> Result<Self> {
        if times.len() > n_paths {
            return Err(FptError::Validation(format!("{} crossing times for {n_paths} paths", times.len())));
        }
        if times.iter().any(|&t| !(t >= 0.0 && t <= horizon)) {
            return Err(FptError::Validation(format!("crossing time outside [0, {horizon}]")));
        }
        times.sort_by(f64::total_cmp);
        let m = times.len();
        Ok(Self { times, n_paths, censored_count: n_paths - m, horizon, upper_crossings: m, lower_crossings: 0 })
    }

    /// Sorted crossing times, all at or before the horizon.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn censored_count(&self) -> usize {
        self.censored_count
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn upper_crossings(&self) -> usize {
        self.upper_crossings
    }

    pub fn lower_crossings(&self) -> usize {
        self.lower_crossings
    }

    /// `F̂(t)`, the fraction of paths crossed by `t` (for `t <= horizon`).
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&x| x <= t);
        k as f64 / self.n_paths as f64
    }

    /// Binomial standard error of `F̂(t)`.
    pub fn standard_error(&self, t: f64) -> f64 {
        let p = self.eval(t);
        (p * (1.0 - p) / self.n_paths as f64).sqrt()
    }
}

/// `sup_{t ∈ [0, horizon]} |F̂(t) - F(t)|` for nondecreasing `F`.
pub fn ks_distance<F>(emp: &EmpiricalCdf, analytic: F) -> f64
where
    F: Fn(f64) -> f64,
{
    let n = emp.n_paths as f64;
    let mut d = analytic(0.0).abs();
    for (i, &t) in emp.times.iter().enumerate() {
        let f = analytic(t);
        d = d.max((i as f64 / n - f).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d.max((emp.times.len() as f64 / n - analytic(emp.horizon)).abs())
}

/// Variation grid for one clock over `[0, horizon]`.
struct VariationGrid<'a> {
    clock: &'a QuadraticVariationPath,
    total: f64,
    steps_per_unit: f64,
    n_steps: usize,
    horizon: f64,
}

impl<'a> VariationGrid<'a> {
    fn new(clock: &'a QuadraticVariationPath, cfg: &SimConfig) -> Result<Self> {
        if cfg.horizon > clock.domain_end() {
            return Err(FptError::Domain(format!(
                "horizon {} beyond clock domain {}",
                cfg.horizon,
                clock.domain_end()
            )));
        }
        let total = clock.eval(cfg.horizon)?;
        let steps_per_unit = cfg.clock_steps as f64;
        let n_steps = (total * steps_per_unit).ceil() as usize;
        Ok(Self { clock, total, steps_per_unit, n_steps, horizon: cfg.horizon })
    }

    fn level(&self, i: usize) -> f64 {
        if i >= self.n_steps {
            self.total
        } else {
            i as f64 / self.steps_per_unit
        }
    }

    fn to_time(&self, s: f64) -> Result<f64> {
        if s >= self.total {
            return Ok(self.horizon);
        }
        Ok(self.clock.generalized_inverse(s)?.min(self.horizon))
    }
}

#[derive(Debug, Clone, Copy)]
struct Levels {
    upper: f64,
    lower: f64,
}

impl From<Boundary> for Levels {
    fn from(b: Boundary) -> Self {
        match b {
            Boundary::OneSided(b) => Levels { upper: b.level(), lower: f64::NEG_INFINITY },
            Boundary::TwoSided(b) => Levels { upper: b.upper(), lower: b.lower() },
        }
    }
}

/// First crossing of one path as (variation level, side).
fn first_crossing<R: Rng>(rng: &mut R, grid: &VariationGrid, lv: Levels, bridge: bool) -> Option<(f64, Side)> {
    let mut x = 0.0f64;
    for i in 0..grid.n_steps {
        let s0 = grid.level(i);
        let s1 = grid.level(i + 1);
        let ds = s1 - s0;
        let z: f64 = rng.sample(StandardNormal);
        let x1 = x + ds.sqrt() * z;
        if x1 >= lv.upper {
            let frac = (lv.upper - x) / (x1 - x);
            return Some(((s0 + frac * ds).min(s1), Side::Upper));
        }
        if x1 <= lv.lower {
            let frac = (x - lv.lower) / (x - x1);
            return Some(((s0 + frac * ds).min(s1), Side::Lower));
        }
        if bridge {
            let pu = (-2.0 * (lv.upper - x) * (lv.upper - x1) / ds).exp();
            let pl = if lv.lower.is_finite() { (-2.0 * (x - lv.lower) * (x1 - lv.lower) / ds).exp() } else { 0.0 };
            let p = pu + pl - pu * pl;
            let u: f64 = rng.random();
            if u < p {
                let side = if u * (pu + pl) < p * pu { Side::Upper } else { Side::Lower };
                return Some((s0 + 0.5 * ds, side));
            }
        }
        x = x1;
    }
    None
}

fn path_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn collect(hits: Vec<Option<(f64, Side)>>, cfg: &SimConfig) -> EmpiricalCdf {
    let mut times = Vec::with_capacity(hits.len());
    let (mut up, mut down) = (0, 0);
    for (t, side) in hits.into_iter().flatten() {
        times.push(t);
        match side {
            Side::Upper => up += 1,
            Side::Lower => down += 1,
        }
    }
    times.sort_by(f64::total_cmp);
    let m = times.len();
    EmpiricalCdf {
        times,
        n_paths: cfg.n_paths,
        censored_count: cfg.n_paths - m,
        horizon: cfg.horizon,
        upper_crossings: up,
        lower_crossings: down,
    }
}

fn simulate_boundary(path: &QuadraticVariationPath, b: Boundary, cfg: &SimConfig) -> Result<EmpiricalCdf> {
    cfg.validate()?;
    let grid = VariationGrid::new(path, cfg)?;
    let lv = Levels::from(b);
    let hits = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(cfg.seed, i);
            match first_crossing(&mut rng, &grid, lv, cfg.bridge_correction) {
                Some((s, side)) => grid.to_time(s).map(|t| Some((t, side))),
                None => Ok(None),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(collect(hits, cfg))
}

pub fn simulate_one_sided(path: &QuadraticVariationPath, b: OneSidedBoundary, cfg: &SimConfig) -> Result<EmpiricalCdf> {
    simulate_boundary(path, Boundary::OneSided(b), cfg)
}

pub fn simulate_two_sided(path: &QuadraticVariationPath, b: TwoSidedBoundary, cfg: &SimConfig) -> Result<EmpiricalCdf> {
    simulate_boundary(path, Boundary::TwoSided(b), cfg)
}

pub fn simulate(path: &QuadraticVariationPath, b: Boundary, cfg: &SimConfig) -> Result<EmpiricalCdf> {
    simulate_boundary(path, b, cfg)
}

/// Each path first draws a scenario by weight (from a separate stream), then
/// simulates under that scenario's clock and boundary.
pub fn simulate_mixture(set: &ScenarioSet, cfg: &SimConfig) -> Result<EmpiricalCdf> {
    cfg.validate()?;
    let grids = set
        .scenarios()
        .iter()
        .enumerate()
        .map(|(i, s)| VariationGrid::new(&s.clock, cfg).map_err(|e| e.in_scenario(i)))
        .collect::<Result<Vec<_>>>()?;
    let levels: Vec<Levels> = set.scenarios().iter().map(|s| Levels::from(s.boundary)).collect();
    let mut cumulative = Vec::with_capacity(set.len());
    let mut acc = 0.0;
    for s in set.scenarios() {
        acc += s.weight;
        cumulative.push(acc);
    }
    let last_positive = set.scenarios().iter().rposition(|s| s.weight > 0.0).unwrap_or(0);
    let pick = |u: f64| -> usize {
        let total = *cumulative.last().unwrap();
        cumulative
            .iter()
            .zip(set.scenarios())
            .position(|(&c, s)| s.weight > 0.0 && u * total < c)
            .unwrap_or(last_positive)
    };
    let hits = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let k = if grids.len() == 1 { 0 } else { pick(path_rng(cfg.seed ^ SELECTION_SALT, i).random::<f64>()) };
            let mut rng = path_rng(cfg.seed, i);
            match first_crossing(&mut rng, &grids[k], levels[k], cfg.bridge_correction) {
                Some((s, side)) => grids[k].to_time(s).map(|t| Some((t, side))),
                None => Ok(None),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(collect(hits, cfg))
}
