//! Machine-readable run reports.

use mnewton::solver::{NormRule, SolveReport, SolverConfig};
use mnewton::sphere::EigEstimate;
use mnewton::suite::SuiteRow;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Settings in effect for a run. The blend and tolerance defaults are always
/// present; command-specific fields only when they apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub eps: f64,
    pub delta: f64,
    #[serde(rename = "Delta")]
    pub cap: f64,
    pub max_iter: usize,
    pub norm: NormRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub which: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eig_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<String>,
}

impl ConfigEcho {
    pub fn from_solver(cfg: &SolverConfig) -> Self {
        Self {
            eps: cfg.eps,
            delta: cfg.gamma_params.delta,
            cap: cfg.gamma_params.cap,
            max_iter: cfg.max_iter,
            norm: cfg.norm_rule,
            problem: None,
            x0: None,
            suite: None,
            which: None,
            eig_tol: None,
            start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigPayload {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<EigEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<EigEstimate>,
}

/// One derivative check; errors are `None` when the stencil was not finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub point: Vec<f64>,
    pub grad_error: Option<f64>,
    pub hess_error: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    Solve(SolveReport),
    Eig(EigPayload),
    Bench(Vec<SuiteRow>),
    Check(Vec<CheckRow>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub config: ConfigEcho,
    pub result: Payload,
}

impl RunReport {
    pub fn new(command: &str, config: ConfigEcho, result: Payload) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_owned(),
            config,
            result,
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
