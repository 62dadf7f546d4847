//! JSON run configuration. Every key is optional; command-line flags take
//! precedence. Unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{FptError, Result};
use crate::two_sided::SeriesControl;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub boundary_upper: Option<f64>,
    pub boundary_lower: Option<f64>,
    /// `identity`, `linear:<rate>` or a clock CSV path.
    pub clock: Option<String>,
    pub target: Option<PathBuf>,
    pub pdf_target: Option<PathBuf>,
    pub grid: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub times: Option<PathBuf>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub clock_steps: Option<usize>,
    pub bridge_correction: Option<bool>,
    pub horizon: Option<f64>,
    pub compare: Option<bool>,
    pub quadrature_tol: Option<f64>,
    pub series: Option<SeriesControl>,
    #[serde(default)]
    pub scenarios: Vec<ScenarioConfig>,
}

/// One entry of a random-case run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "one")]
    pub weight: f64,
    pub boundary_upper: Option<f64>,
    pub boundary_lower: Option<f64>,
    pub clock: Option<String>,
    pub target: Option<PathBuf>,
    pub pdf_target: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| FptError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| FptError::Validation(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Physical constraints, rechecked after loading.
    pub fn validate(&self) -> Result<()> {
        check_levels(self.boundary_upper, self.boundary_lower)?;
        for (i, s) in self.scenarios.iter().enumerate() {
            check_levels(s.boundary_upper, s.boundary_lower).map_err(|e| e.in_scenario(i))?;
            if !(s.weight >= 0.0 && s.weight.is_finite()) {
                return Err(FptError::Validation(format!("scenario {i}: invalid weight {}", s.weight)));
            }
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(FptError::Validation(format!("horizon must be > 0, got {h}")));
            }
        }
        if self.paths == Some(0) {
            return Err(FptError::Validation("paths must be at least 1".into()));
        }
        if self.clock_steps == Some(0) {
            return Err(FptError::Validation("clock_steps must be at least 1".into()));
        }
        if let Some(q) = self.quadrature_tol {
            if !(q > 0.0) {
                return Err(FptError::Validation(format!("quadrature_tol must be > 0, got {q}")));
            }
        }
        if let Some(s) = &self.series {
            s.validate()?;
        }
        Ok(())
    }
}

fn check_levels(upper: Option<f64>, lower: Option<f64>) -> Result<()> {
    if let Some(g) = upper {
        if !(g > 0.0 && g.is_finite()) {
            return Err(FptError::Validation(format!("boundary_upper must be > 0, got {g}")));
        }
    }
    if let Some(h) = lower {
        if !(h < 0.0 && h.is_finite()) {
            return Err(FptError::Validation(format!("boundary_lower must be < 0, got {h}")));
        }
    }
    Ok(())
}
