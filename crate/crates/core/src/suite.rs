//! Batch solves over a problem set, one row per problem.

use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::problems::Problem;
use crate::solver::{minimize, SolveStatus, SolverConfig, SolverError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub name: String,
    pub dim: usize,
    pub iter: usize,
    pub obj: f64,
    pub grad_norm: f64,
    pub status: SolveStatus,
}

/// Solves every problem from its default start; rows are sorted by name
/// whatever the execution mode.
pub fn run_suite(
    problems: &[Problem],
    cfg: &SolverConfig,
    execution: Execution,
) -> Result<Vec<SuiteRow>, SolverError> {
    let mut rows = execution
        .map(problems, |p| {
            minimize(p, &p.x0, cfg).map(|r| SuiteRow {
                name: p.name.clone(),
                dim: p.dim,
                iter: r.iterations,
                obj: r.f_final,
                grad_norm: r.grad_norm_final,
                status: r.status,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(rows)
}
