//! Batch commands `forward`, `inverse` and `simulate` over CSV grids and
//! JSON configs.
//!
//! Exit codes: 0 success, 2 validation, 3 assumption failure, 4 numerical
//! non-convergence. Failures print one JSON line on standard error.

pub mod config;
pub mod io;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::clock::QuadraticVariationPath;
use crate::error::{FptError, Result};
use crate::inverse::{
    inspect_cdf, inspect_pdf, qv_solution_one_sided, qv_solution_two_sided, variance_solution_one_sided,
    variance_solution_two_sided, InverseReport, Kernel, SurvivalCdf, SurvivalPdf, VarianceFunction,
    DEFAULT_QUADRATURE_TOL,
};
use crate::mc::{ks_distance, simulate, simulate_mixture, EmpiricalCdf, SimConfig};
use crate::one_sided::OneSidedBoundary;
use crate::time_change::{crossing_cdf, crossing_pdf, mixture_cdf, mixture_pdf, Boundary, Scenario, ScenarioSet};
use crate::two_sided::{SeriesControl, TwoSidedBoundary};

use config::{RunConfig, ScenarioConfig};
use io::{read_grid, write_grid, write_text, GridFile};

const CLOCK_HEADERS: &[&[&str]] = &[&["t", "value"], &["t", "clock"], &["t", "clock", "sigma2"]];
const CDF_HEADERS: &[&[&str]] = &[&["t", "value"], &["t", "cdf"], &["t", "cdf", "pdf"]];
const PDF_HEADERS: &[&[&str]] = &[&["t", "value"], &["t", "pdf"]];
const GRID_HEADERS: &[&[&str]] = &[&["t"]];

/// Evaluation points written by `simulate` when no grid file is given.
const DEFAULT_SIM_POINTS: usize = 101;

#[derive(Debug, Parser)]
#[command(name = "fpt", version, about = "First-passage times of time-changed Brownian motion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Crossing cdf and pdf of a clock on a time grid.
    Forward(ForwardArgs),
    /// Clock (and spot variance) realizing a target crossing distribution.
    Inverse(InverseArgs),
    /// Monte Carlo estimate of the crossing cdf.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct BoundaryArgs {
    /// Upper level g > 0.
    #[arg(long, allow_hyphen_values = true)]
    pub boundary_upper: Option<f64>,
    /// Lower level h < 0; omit for a one-sided boundary.
    #[arg(long, allow_hyphen_values = true)]
    pub boundary_lower: Option<f64>,
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ForwardArgs {
    #[command(flatten)]
    pub common: BoundaryArgs,
    /// `identity`, `linear:<rate>` or a CSV clock file.
    #[arg(long)]
    pub clock: Option<String>,
    /// CSV file with a single `t` column.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct InverseArgs {
    #[command(flatten)]
    pub common: BoundaryArgs,
    /// Target cdf CSV (`t,cdf` or `t,cdf,pdf`).
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Target pdf CSV (`t,pdf`).
    #[arg(long)]
    pub pdf_target: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to write the JSON report (default: `<out>.report.json`).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: BoundaryArgs,
    #[arg(long)]
    pub clock: Option<String>,
    /// Evaluation grid for the empirical cdf.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub clock_steps: Option<usize>,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Disable the Brownian-bridge crossing correction.
    #[arg(long)]
    pub no_bridge: bool,
    /// Add the analytic cdf column and the KS distance to the summary.
    #[arg(long)]
    pub compare: bool,
    /// Summary JSON path (default: standard output).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Optional CSV of the crossing times (`t,count`).
    #[arg(long)]
    pub times: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ErrorLine<'a> {
    error: &'a str,
    exit_code: i32,
    message: String,
}

/// Run a parsed command line and return the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Forward(a) => cmd_forward(&a),
        Command::Inverse(a) => cmd_inverse(&a),
        Command::Simulate(a) => cmd_simulate(&a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let line = ErrorLine { error: e.kind(), exit_code: e.exit_code(), message: e.to_string() };
            eprintln!("{}", serde_json::to_string(&line).expect("error line serializes"));
            e.exit_code()
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn require<T>(v: Option<T>, what: &str) -> Result<T> {
    v.ok_or_else(|| FptError::Validation(format!("missing required setting: {what}")))
}

/// Parse `identity`, `linear:<rate>` or a clock CSV path.
pub fn parse_clock(spec: &str) -> Result<QuadraticVariationPath> {
    if spec == "identity" {
        return Ok(QuadraticVariationPath::identity());
    }
    if let Some(rate) = spec.strip_prefix("linear:") {
        let c: f64 =
            rate.trim().parse().map_err(|_| FptError::Validation(format!("bad linear clock rate '{rate}'")))?;
        return QuadraticVariationPath::linear(c);
    }
    let g = read_grid(Path::new(spec), CLOCK_HEADERS)?;
    QuadraticVariationPath::grid(g.columns[0].clone(), g.columns[1].clone())
}

fn make_boundary(upper: Option<f64>, lower: Option<f64>) -> Result<Boundary> {
    let g = require(upper, "boundary_upper")?;
    Ok(match lower {
        None => Boundary::OneSided(OneSidedBoundary::new(g)?),
        Some(h) => Boundary::TwoSided(TwoSidedBoundary::new(g, h)?),
    })
}

fn build_scenarios(cfg: &RunConfig, default_upper: Option<f64>, default_lower: Option<f64>) -> Result<ScenarioSet> {
    let mut out = Vec::with_capacity(cfg.scenarios.len());
    for (i, s) in cfg.scenarios.iter().enumerate() {
        let build = || -> Result<Scenario> {
            let clock = parse_clock(require(s.clock.as_deref(), "scenario clock")?)?;
            let boundary = make_boundary(s.boundary_upper.or(default_upper), s.boundary_lower.or(default_lower))?;
            Ok(Scenario { weight: s.weight, clock, boundary })
        };
        out.push(build().map_err(|e| e.in_scenario(i))?);
    }
    ScenarioSet::new(out)
}

/// What a forward or simulate run evaluates.
enum Model {
    Single(QuadraticVariationPath, Boundary),
    Mixture(ScenarioSet),
}

impl Model {
    fn resolve(common: &BoundaryArgs, clock: &Option<String>, cfg: &RunConfig) -> Result<Self> {
        let upper = common.boundary_upper.or(cfg.boundary_upper);
        let lower = common.boundary_lower.or(cfg.boundary_lower);
        if !cfg.scenarios.is_empty() {
            return Ok(Model::Mixture(build_scenarios(cfg, upper, lower)?));
        }
        let spec = clock.clone().or_else(|| cfg.clock.clone()).unwrap_or_else(|| "identity".into());
        Ok(Model::Single(parse_clock(&spec)?, make_boundary(upper, lower)?))
    }

    fn cdf(&self, t: f64, ctl: SeriesControl) -> Result<f64> {
        match self {
            Model::Single(c, b) => crossing_cdf(c, *b, t, ctl),
            Model::Mixture(s) => mixture_cdf(s, t, ctl),
        }
    }

    fn pdf(&self, t: f64, ctl: SeriesControl) -> Result<f64> {
        match self {
            Model::Single(c, b) => crossing_pdf(c, *b, t, ctl),
            Model::Mixture(s) => mixture_pdf(s, t, ctl),
        }
    }

    /// Knots of a single grid clock, used as the default evaluation grid.
    fn knots(&self) -> Option<Vec<f64>> {
        match self {
            Model::Single(c, _) => c.as_grid().map(|g| g.times().to_vec()),
            Model::Mixture(_) => None,
        }
    }

    fn domain_end(&self) -> f64 {
        match self {
            Model::Single(c, _) => c.domain_end(),
            Model::Mixture(s) => s.scenarios().iter().map(|x| x.clock.domain_end()).fold(f64::INFINITY, f64::min),
        }
    }
}

fn read_times(path: &Path) -> Result<Vec<f64>> {
    let g = read_grid(path, GRID_HEADERS)?;
    if g.is_empty() {
        return Err(FptError::Validation(format!("{}: grid has no rows", path.display())));
    }
    Ok(g.columns[0].clone())
}

pub fn cmd_forward(a: &ForwardArgs) -> Result<()> {
    let cfg = load_config(&a.common.config)?;
    let ctl = cfg.series.unwrap_or_default();
    let out = require(a.out.clone().or(cfg.out.clone()), "out")?;
    let model = Model::resolve(&a.common, &a.clock, &cfg)?;
    let times = match a.grid.clone().or(cfg.grid.clone()) {
        Some(p) => read_times(&p)?,
        None => model.knots().ok_or_else(|| FptError::Validation("missing required setting: grid".into()))?,
    };
    let mut cdf = Vec::with_capacity(times.len());
    let mut pdf = Vec::with_capacity(times.len());
    for &t in &times {
        cdf.push(model.cdf(t, ctl)?);
        pdf.push(model.pdf(t, ctl)?);
    }
    write_grid(&out, &GridFile::new(&["t", "cdf", "pdf"], vec![times, cdf, pdf]))
}

/// JSON form of an [`InverseReport`]; infinite thresholds become `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDocument {
    pub k0: Option<f64>,
    pub k1: Option<f64>,
    pub assumption_k1_infinite: bool,
    pub local_integrability_ok: bool,
    pub clamped_knots: usize,
    pub repaired_knots: usize,
    /// Error message when the solve was rejected.
    pub error: Option<String>,
}

impl ReportDocument {
    fn new(r: &InverseReport, error: Option<&FptError>) -> Self {
        let finite = |x: f64| if x.is_finite() { Some(x) } else { None };
        Self {
            k0: finite(r.thresholds.k0),
            k1: finite(r.thresholds.k1),
            assumption_k1_infinite: r.assumption_k1_infinite,
            local_integrability_ok: r.local_integrability_ok,
            clamped_knots: r.clamped_knots,
            repaired_knots: r.repaired_knots,
            error: error.map(|e| e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioReports {
    pub scenarios: Vec<ReportDocument>,
}

/// Target distribution ingested from files.
enum Target {
    Cdf(SurvivalCdf),
    Pdf(SurvivalPdf),
}

fn load_target(target: Option<&Path>, pdf_target: Option<&Path>, quad_tol: f64) -> Result<Target> {
    match (target, pdf_target) {
        (None, None) => Err(FptError::Validation("missing required setting: target or pdf_target".into())),
        (Some(tp), None) => {
            let g = read_grid(tp, CDF_HEADERS)?;
            let t = g.columns[0].clone();
            let f = g.columns[1].clone();
            match g.column("pdf") {
                Some(dens) => Ok(Target::Pdf(SurvivalPdf::paired(t, dens.to_vec(), f)?)),
                None => Ok(Target::Cdf(SurvivalCdf::new(t, f)?)),
            }
        }
        (None, Some(pp)) => {
            let g = read_grid(pp, PDF_HEADERS)?;
            Ok(Target::Pdf(SurvivalPdf::from_density(g.columns[0].clone(), g.columns[1].clone())?))
        }
        (Some(tp), Some(pp)) => {
            let c = read_grid(tp, CDF_HEADERS)?;
            let d = read_grid(pp, PDF_HEADERS)?;
            if c.times() != d.times() {
                return Err(FptError::Validation("target and pdf_target must share the same t grid".into()));
            }
            Ok(Target::Pdf(SurvivalPdf::with_cdf(
                d.columns[0].clone(),
                d.columns[1].clone(),
                c.columns[1].clone(),
                quad_tol,
            )?))
        }
    }
}

/// Solve one target; returns the report and, on success, the output grid.
fn solve_target(target: &Target, kernel: Kernel) -> (InverseReport, Result<GridFile>) {
    match target {
        Target::Cdf(cdf) => {
            let report = inspect_cdf(cdf);
            let solved = match kernel {
                Kernel::OneSided(b) => qv_solution_one_sided(cdf, b),
                Kernel::TwoSided(b, ctl) => qv_solution_two_sided(cdf, b, ctl),
            };
            (report, solved.map(|clock| clock_grid(&clock, None)))
        }
        Target::Pdf(pdf) => {
            let report = inspect_pdf(pdf, kernel);
            let solved = (|| -> Result<GridFile> {
                let (clock, var) = match kernel {
                    Kernel::OneSided(b) => (qv_solution_one_sided(pdf.cdf(), b)?, variance_solution_one_sided(pdf, b)?),
                    Kernel::TwoSided(b, ctl) => {
                        (qv_solution_two_sided(pdf.cdf(), b, ctl)?, variance_solution_two_sided(pdf, b, ctl)?)
                    }
                };
                Ok(clock_grid(&clock, Some(&var)))
            })();
            (report, solved)
        }
    }
}

fn clock_grid(clock: &QuadraticVariationPath, var: Option<&VarianceFunction>) -> GridFile {
    let g = clock.as_grid().expect("solutions are grid clocks");
    let mut cols = vec![g.times().to_vec(), g.values().to_vec()];
    match var {
        Some(v) => {
            cols.push(v.values().to_vec());
            GridFile::new(&["t", "clock", "sigma2"], cols)
        }
        None => GridFile::new(&["t", "clock"], cols),
    }
}

fn default_report_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".report.json");
    PathBuf::from(s)
}

fn scenario_kernel(s: &ScenarioConfig, ctl: SeriesControl) -> Result<Kernel> {
    match (s.boundary_upper, s.boundary_lower) {
        (g, Some(h)) => Ok(Kernel::TwoSided(TwoSidedBoundary::new(require(g, "scenario boundary_upper")?, h)?, ctl)),
        (Some(g), None) if g != 1.0 => Err(FptError::Validation(format!(
            "one-sided random targets are solved for Y = Z/g with g = 1; got boundary_upper = {g}"
        ))),
        _ => Ok(Kernel::OneSided(OneSidedBoundary::unit())),
    }
}

pub fn cmd_inverse(a: &InverseArgs) -> Result<()> {
    let cfg = load_config(&a.common.config)?;
    let ctl = cfg.series.unwrap_or_default();
    let quad_tol = cfg.quadrature_tol.unwrap_or(DEFAULT_QUADRATURE_TOL);

    if !cfg.scenarios.is_empty() {
        return inverse_scenarios(a, &cfg, ctl, quad_tol);
    }

    let out = require(a.out.clone().or(cfg.out.clone()), "out")?;
    let report_path = a.report.clone().or(cfg.report.clone()).unwrap_or_else(|| default_report_path(&out));
    let boundary =
        make_boundary(a.common.boundary_upper.or(cfg.boundary_upper), a.common.boundary_lower.or(cfg.boundary_lower))?;
    let kernel = match boundary {
        Boundary::OneSided(b) => Kernel::OneSided(b),
        Boundary::TwoSided(b) => Kernel::TwoSided(b, ctl),
    };
    let target = load_target(
        a.target.as_deref().or(cfg.target.as_deref()),
        a.pdf_target.as_deref().or(cfg.pdf_target.as_deref()),
        quad_tol,
    )?;
    let (report, solved) = solve_target(&target, kernel);
    let doc = ReportDocument::new(&report, solved.as_ref().err());
    write_text(&report_path, &(serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"))?;
    write_grid(&out, &solved?)
}

fn inverse_scenarios(a: &InverseArgs, cfg: &RunConfig, ctl: SeriesControl, quad_tol: f64) -> Result<()> {
    let report_path = match a.report.clone().or(cfg.report.clone()) {
        Some(p) => p,
        None => default_report_path(&require(a.out.clone().or(cfg.out.clone()), "report or out")?),
    };
    let mut docs = Vec::new();
    let mut grids = Vec::new();
    let mut first_err: Option<FptError> = None;
    for (i, s) in cfg.scenarios.iter().enumerate() {
        let prepared = (|| -> Result<(Kernel, Target, PathBuf)> {
            let kernel = scenario_kernel(s, ctl)?;
            let target = load_target(s.target.as_deref(), s.pdf_target.as_deref(), quad_tol)?;
            Ok((kernel, target, require(s.out.clone(), "scenario out")?))
        })()
        .map_err(|e| e.in_scenario(i))?;
        let (kernel, target, out) = prepared;
        let (report, solved) = solve_target(&target, kernel);
        let solved = solved.map_err(|e| e.in_scenario(i));
        docs.push(ReportDocument::new(&report, solved.as_ref().err()));
        match solved {
            Ok(g) => grids.push((out, g)),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let doc = ScenarioReports { scenarios: docs };
    write_text(&report_path, &(serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"))?;
    if let Some(e) = first_err {
        return Err(e);
    }
    for (out, g) in grids {
        write_grid(&out, &g)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSummary {
    pub n_paths: usize,
    pub crossed: usize,
    pub censored: usize,
    pub upper_crossings: usize,
    pub lower_crossings: usize,
    pub seed: u64,
    pub clock_steps: usize,
    pub bridge_correction: bool,
    pub horizon: f64,
    pub ks_distance: Option<f64>,
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let file_cfg = load_config(&a.common.config)?;
    let ctl = file_cfg.series.unwrap_or_default();
    let out = require(a.out.clone().or(file_cfg.out.clone()), "out")?;
    let model = Model::resolve(&a.common, &a.clock, &file_cfg)?;
    let grid = match a.grid.clone().or(file_cfg.grid.clone()) {
        Some(p) => Some(read_times(&p)?),
        None => None,
    };
    let horizon = match a.horizon.or(file_cfg.horizon) {
        Some(h) => h,
        None => match &grid {
            Some(g) => *g.last().unwrap(),
            None if model.domain_end().is_finite() => model.domain_end(),
            None => return Err(FptError::Validation("missing required setting: horizon".into())),
        },
    };
    let defaults = SimConfig::default();
    let sim = SimConfig {
        n_paths: a.paths.or(file_cfg.paths).unwrap_or(defaults.n_paths),
        clock_steps: a.clock_steps.or(file_cfg.clock_steps).unwrap_or(defaults.clock_steps),
        seed: a.seed.or(file_cfg.seed).unwrap_or(defaults.seed),
        bridge_correction: if a.no_bridge { false } else { file_cfg.bridge_correction.unwrap_or(true) },
        horizon,
    };
    sim.validate()?;
    let compare = a.compare || file_cfg.compare.unwrap_or(false);
    let times = match grid {
        Some(g) => g,
        None => (0..DEFAULT_SIM_POINTS).map(|i| horizon * i as f64 / (DEFAULT_SIM_POINTS - 1) as f64).collect(),
    };
    if let Some(&t) = times.iter().find(|&&t| !(0.0..=horizon).contains(&t)) {
        return Err(FptError::Validation(format!("grid time {t} outside [0, {horizon}]")));
    }

    let emp = match &model {
        Model::Single(c, b) => simulate(c, *b, &sim)?,
        Model::Mixture(s) => simulate_mixture(s, &sim)?,
    };

    let empirical: Vec<f64> = times.iter().map(|&t| emp.eval(t)).collect();
    let (grid_out, ks) = if compare {
        let analytic = times.iter().map(|&t| model.cdf(t, ctl)).collect::<Result<Vec<_>>>()?;
        let ks = ks_against(&emp, &model, ctl)?;
        (GridFile::new(&["t", "empirical_cdf", "analytic_cdf"], vec![times, empirical, analytic]), Some(ks))
    } else {
        (GridFile::new(&["t", "empirical_cdf"], vec![times, empirical]), None)
    };

    let summary = SimulationSummary {
        n_paths: emp.n_paths(),
        crossed: emp.times().len(),
        censored: emp.censored_count(),
        upper_crossings: emp.upper_crossings(),
        lower_crossings: emp.lower_crossings(),
        seed: sim.seed,
        clock_steps: sim.clock_steps,
        bridge_correction: sim.bridge_correction,
        horizon,
        ks_distance: ks,
    };
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";

    write_grid(&out, &grid_out)?;
    if let Some(p) = a.times.clone().or(file_cfg.times.clone()) {
        write_grid(&p, &crossing_counts(emp.times()))?;
    }
    match a.summary.clone().or(file_cfg.summary.clone()) {
        Some(p) => write_text(&p, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Distinct crossing times with their multiplicities (times can tie when
/// several paths cross within the same step).
fn crossing_counts(times: &[f64]) -> GridFile {
    let mut t: Vec<f64> = Vec::new();
    let mut count: Vec<f64> = Vec::new();
    for &x in times {
        if t.last() == Some(&x) {
            *count.last_mut().unwrap() += 1.0;
        } else {
            t.push(x);
            count.push(1.0);
        }
    }
    GridFile::new(&["t", "count"], vec![t, count])
}

fn ks_against(emp: &EmpiricalCdf, model: &Model, ctl: SeriesControl) -> Result<f64> {
    // evaluate once up front so errors surface instead of being swallowed by the closure
    model.cdf(emp.horizon(), ctl)?;
    Ok(ks_distance(emp, |t| model.cdf(t, ctl).unwrap_or(f64::NAN)))
}
