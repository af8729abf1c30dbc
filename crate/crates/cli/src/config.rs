use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    /// Dual semismooth Newton method (α = 0).
    Linear,
    /// Trust-region Newton method on the switching function.
    Semilinear,
    /// Fixed-point iteration in the dual variable (α = 0).
    FixedPoint,
}

/// One experiment: a solver, problem parameters and a list of mesh levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub case: Case,
    #[serde(alias = "ub")]
    pub u_b: f64,
    #[serde(default)]
    pub alpha: f64,
    /// Subdivisions per axis, one run each.
    pub levels: Vec<usize>,
    /// Overrides the stopping tolerance of the selected solver.
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// Overrides the outer iteration limit of the selected solver.
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Writes `0.0000` in the time column when false.
    #[serde(default = "default_true")]
    pub timing: bool,
    /// Writes `control_n<level>.vtk` per level.
    #[serde(default = "default_true")]
    pub export_fields: bool,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_true() -> bool {
    true
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub case: Option<Case>,
    pub u_b: Option<f64>,
    pub alpha: Option<f64>,
    pub levels: Option<Vec<usize>>,
    pub output: Option<PathBuf>,
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
    pub no_timing: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Builds a config from an optional file and flag overrides, then validates it.
    pub fn resolve(file: Option<Self>, o: Overrides) -> Result<Self, CliError> {
        let mut cfg = match file {
            Some(cfg) => cfg,
            None => {
                let missing: Vec<&str> = [
                    ("--case", o.case.is_none()),
                    ("--ub", o.u_b.is_none()),
                    ("--levels", o.levels.is_none()),
                ]
                .iter()
                .filter(|(_, m)| *m)
                .map(|(name, _)| *name)
                .collect();
                if !missing.is_empty() {
                    return Err(CliError::Config(format!(
                        "without --config the flags {} are required",
                        missing.join(", ")
                    )));
                }
                ExperimentConfig {
                    case: o.case.unwrap(),
                    u_b: o.u_b.unwrap(),
                    alpha: 0.0,
                    levels: o.levels.clone().unwrap(),
                    tolerance: None,
                    max_iterations: None,
                    output: default_output(),
                    timing: true,
                    export_fields: true,
                }
            }
        };
        if let Some(case) = o.case {
            cfg.case = case;
        }
        if let Some(ub) = o.u_b {
            cfg.u_b = ub;
        }
        if let Some(alpha) = o.alpha {
            cfg.alpha = alpha;
        }
        if let Some(levels) = o.levels {
            cfg.levels = levels;
        }
        if let Some(out) = o.output {
            cfg.output = out;
        }
        if o.tolerance.is_some() {
            cfg.tolerance = o.tolerance;
        }
        if o.max_iterations.is_some() {
            cfg.max_iterations = o.max_iterations;
        }
        if o.no_timing {
            cfg.timing = false;
        }
        cfg.validated()
    }

    /// Checks the invariants; the linear case forces `alpha = 0`.
    pub fn validated(mut self) -> Result<Self, CliError> {
        if !(self.u_b.is_finite() && self.u_b > 0.0) {
            return Err(CliError::Config(format!("u_b must be positive, got {}", self.u_b)));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(CliError::Config(format!("alpha must be nonnegative, got {}", self.alpha)));
        }
        match self.case {
            Case::Linear => {
                if self.alpha != 0.0 {
                    log::warn!("case linear ignores alpha = {}", self.alpha);
                }
                self.alpha = 0.0;
            }
            Case::FixedPoint if self.alpha != 0.0 => {
                return Err(CliError::Config("the fixed-point iteration needs alpha = 0".into()));
            }
            _ => {}
        }
        if self.levels.is_empty() {
            return Err(CliError::Config("levels must not be empty".into()));
        }
        if self.levels.contains(&0) {
            return Err(CliError::Config("levels must be positive".into()));
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config(format!(
                "levels must be strictly ascending, got {:?}",
                self.levels
            )));
        }
        if let Some(tol) = self.tolerance {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(CliError::Config(format!("tolerance must be positive, got {tol}")));
            }
        }
        if self.max_iterations == Some(0) {
            return Err(CliError::Config("max_iterations must be positive".into()));
        }
        Ok(self)
    }
}
