//! Experiment configuration: one JSON document fully determines a run.
//!
//! ```json
//! {
//!   "objective": { "kind": "quadratic", "spectrum": [1, 10], "x_star": [0, 0] },
//!   "x0": [1, 1],
//!   "betas": [0, 0.5, "critical", 1],
//!   "steps": [0.025],
//!   "max_iter": 500,
//!   "ode": { "t_end": 40 },
//!   "checks": ["energy_decrement", "continuous_bound", "deviation_ladder", "phase_sweep"],
//!   "output_dir": "out"
//! }
//! ```
//!
//! Steps may be given as `"c": [4, 8]` instead, meaning `s = 1/(cL)`.

use std::fmt;
use std::path::Path;

use betamomentum::objectives::{make_quadratic, LogSumExp};
use betamomentum::{Objective, Vector};
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub enum ConfigError {
    Io(std::io::Error),
    Parse(serde_json::Error),
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(e) => write!(f, "cannot read config: {e}"),
            ConfigError::Parse(e) => write!(f, "cannot parse config: {e}"),
            ConfigError::Invalid(msg) => write!(f, "invalid config: {msg}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    /// Diagonal quadratic with the given eigenvalues.
    Quadratic {
        spectrum: Vec<f64>,
        #[serde(default)]
        x_star: Option<Vec<f64>>,
    },
    /// Regularised log-sum-exp; `L = curvature + mu`.
    Logsumexp {
        dim: usize,
        mu: f64,
        #[serde(default = "default_curvature")]
        curvature: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
}

fn default_curvature() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    Value(f64),
    Named(BetaName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaName {
    /// `β_c` of each step, from the closed form.
    Critical,
}

impl fmt::Display for BetaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BetaSpec::Value(b) => write!(f, "{b}"),
            BetaSpec::Named(BetaName::Critical) => f.write_str("critical"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    EnergyDecrement,
    ContinuousBound,
    DeviationLadder,
    PhaseSweep,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::EnergyDecrement => "energy_decrement",
            CheckKind::ContinuousBound => "continuous_bound",
            CheckKind::DeviationLadder => "deviation_ladder",
            CheckKind::PhaseSweep => "phase_sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeSettings {
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    /// Fixed RK4 step; by default `h ≤ min(√s, 1/√L)/50` with `√s/h` integral.
    #[serde(default)]
    pub step: Option<f64>,
}

fn default_t_end() -> f64 {
    40.0
}

impl Default for OdeSettings {
    fn default() -> Self {
        Self {
            t_end: default_t_end(),
            step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviationSettings {
    #[serde(default = "default_ladder")]
    pub steps: Vec<f64>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
}

fn default_ladder() -> Vec<f64> {
    vec![1.0 / 40.0, 1.0 / 160.0, 1.0 / 640.0]
}

fn default_horizon() -> f64 {
    5.0
}

impl Default for DeviationSettings {
    fn default() -> Self {
        Self {
            steps: default_ladder(),
            horizon: default_horizon(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseGrid {
    pub mu_over_l: Vec<f64>,
    pub c: Vec<f64>,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub objective: ObjectiveSpec,
    pub x0: Vec<f64>,
    pub betas: Vec<BetaSpec>,
    #[serde(default)]
    pub steps: Option<Vec<f64>>,
    #[serde(default)]
    pub c: Option<Vec<f64>>,
    pub max_iter: usize,
    #[serde(default)]
    pub ode: OdeSettings,
    pub checks: Vec<CheckKind>,
    #[serde(default)]
    pub deviation: DeviationSettings,
    /// Grid for the phase sweep; defaults to the run's own `μ/L`, `c` and `β`.
    #[serde(default)]
    pub phase: Option<PhaseGrid>,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    /// Seed for randomised objectives that do not carry their own.
    #[serde(default)]
    pub seed: u64,
}

fn default_output_dir() -> String {
    "out".into()
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(ConfigError::Parse)?;
        cfg.check_shape()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path).map_err(ConfigError::Io)?)
    }

    /// Structural problems that make the config unusable as a whole. Invalid
    /// individual `(β, s)` pairs are not rejected here; they become failed cells.
    fn check_shape(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.into()));
        if self.betas.is_empty() {
            return invalid("method grid is empty: no betas");
        }
        match (&self.steps, &self.c) {
            (Some(_), Some(_)) => return invalid("give either steps or c, not both"),
            (None, None) => return invalid("method grid is empty: no steps or c"),
            (Some(v), None) | (None, Some(v)) if v.is_empty() => return invalid("method grid is empty: no steps"),
            _ => {}
        }
        if self.checks.is_empty() {
            return invalid("no checks requested");
        }
        if self.max_iter == 0 {
            return invalid("max_iter must be positive");
        }
        if self.x0.is_empty() {
            return invalid("x0 is empty");
        }
        Ok(())
    }

    pub fn build_objective(&self) -> Result<Box<dyn Objective>, ConfigError> {
        let obj: Box<dyn Objective> = match &self.objective {
            ObjectiveSpec::Quadratic { spectrum, x_star } => {
                let x_star = x_star.clone().unwrap_or_else(|| vec![0.0; spectrum.len()]);
                Box::new(make_quadratic(spectrum, &x_star).map_err(|e| ConfigError::Invalid(e.to_string()))?)
            }
            ObjectiveSpec::Logsumexp {
                dim,
                mu,
                curvature,
                seed,
            } => Box::new(
                LogSumExp::new(*dim, *mu, *curvature, seed.unwrap_or(self.seed))
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?,
            ),
        };
        if obj.dim() != self.x0.len() {
            return Err(ConfigError::Invalid(format!(
                "x0 has {} coordinates but the objective has dimension {}",
                self.x0.len(),
                obj.dim()
            )));
        }
        Ok(obj)
    }

    pub fn x0(&self) -> Vector {
        Vector::from_column_slice(&self.x0)
    }

    /// Step sizes, converting `c` values through `s = 1/(cL)`.
    pub fn step_sizes(&self, lip: f64) -> Vec<f64> {
        match (&self.steps, &self.c) {
            (Some(s), _) => s.clone(),
            (None, Some(c)) => c.iter().map(|c| 1.0 / (c * lip)).collect(),
            (None, None) => Vec::new(),
        }
    }

    pub fn wants(&self, check: CheckKind) -> bool {
        self.checks.contains(&check)
    }
}
