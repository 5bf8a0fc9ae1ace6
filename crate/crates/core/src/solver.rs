//! Modified Newton driver: eigenvalue estimates, safeguarded direction,
//! Wolfe step, trace.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::direction::{compute_direction, cos_theta, DirectionInfo, GammaCase, GammaParams};
use crate::linalg::{dot, jacobi_eigs, norm2, norm_inf, SymMatrix};
use crate::linesearch::{wolfe_search, LineSearchStatus, WolfeParams};
use crate::problems::Problem;
use crate::sphere::{extreme_pair, ExtremePair, PairConfig};

pub const DEFAULT_EPS: f64 = 1e-5;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Relative descent below which a best-effort line search step counts as
/// stalled.
const STALL_REL: f64 = 1e-16;
/// `gᵀd ≥ −DESCENT_TOL·‖g‖‖d‖` is treated as "not a descent direction".
const DESCENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("start point has {found} entries, problem dimension is {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("evaluation failure at the start point: {0}")]
    EvaluationFailure(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormRule {
    #[default]
    Euclid,
    Inf,
}

impl NormRule {
    pub fn norm(self, g: &[f64]) -> f64 {
        match self {
            NormRule::Euclid => norm2(g),
            NormRule::Inf => norm_inf(g),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eps: f64,
    pub gamma_params: GammaParams,
    pub wolfe: WolfeParams,
    pub eig: PairConfig,
    pub max_iter: usize,
    pub norm_rule: NormRule,
    /// Store each iterate and direction in the trace.
    pub record_vectors: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps: DEFAULT_EPS,
            gamma_params: GammaParams::default(),
            wolfe: WolfeParams::default(),
            eig: PairConfig::default(),
            max_iter: DEFAULT_MAX_ITER,
            norm_rule: NormRule::Euclid,
            record_vectors: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.eps > 0.0) {
            return Err(SolverError::InvalidConfig("eps must be positive"));
        }
        if self.max_iter == 0 {
            return Err(SolverError::InvalidConfig("max_iter must be >= 1"));
        }
        GammaParams::new(self.gamma_params.delta, self.gamma_params.cap)
            .map_err(|_| SolverError::InvalidConfig("need 0 < delta < 1 and Delta >= 1"))?;
        WolfeParams::new(
            self.wolfe.sigma1,
            self.wolfe.sigma2,
            self.wolfe.alpha0,
            self.wolfe.max_trials,
        )
        .map_err(|_| SolverError::InvalidConfig("invalid Wolfe parameters"))?;
        if !(self.eig.tol > 0.0) {
            return Err(SolverError::InvalidConfig(
                "eigen tolerance must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub k: usize,
    pub f: f64,
    pub grad_norm: f64,
    pub gamma: f64,
    /// Weight on `H` in the blend; `1 − gamma` up to rounding.
    pub hessian_weight: f64,
    pub gamma_case: GammaCase,
    pub alpha: f64,
    pub cos_theta: f64,
    pub eig_lo: f64,
    pub eig_hi: f64,
    /// Any dense-eigensolver or steepest-descent fallback this iteration.
    pub fallback_used: bool,
    pub rung: u8,
    /// Sphere CG iterations spent on the (min, max) pair.
    pub eig_iterations: [usize; 2],
    /// `gᵀd` at the current iterate.
    pub slope: f64,
    pub f_next: f64,
    /// `g(x + αd)ᵀd`.
    pub slope_next: f64,
    pub line_search: LineSearchStatus,
    pub line_search_evals: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    LineSearchStalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub x_final: Vec<f64>,
    pub f_final: f64,
    pub grad_norm_final: f64,
    pub iterations: usize,
    pub trace: Vec<IterRecord>,
}

fn descends(g: &[f64], d: &[f64]) -> bool {
    let scale = norm2(g) * norm2(d);
    scale > 0.0 && dot(g, d) < -DESCENT_TOL * scale
}

/// Direction with the fallback ladder: the given eigenvalue estimates, then
/// dense eigenvalues, then steepest descent.
pub fn safeguard_direction(
    g: &[f64],
    h: &SymMatrix,
    p: &GammaParams,
    eig_lo: f64,
    eig_hi: f64,
) -> DirectionInfo {
    let usable = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && lo <= hi;
    if usable(eig_lo, eig_hi) {
        if let Ok(info) = compute_direction(g, h, p, eig_lo, eig_hi) {
            if descends(g, &info.d) {
                return info;
            }
        }
    }
    if let Ok(eig) = jacobi_eigs(h) {
        let (lo, hi) = (eig.min().0, eig.max().0);
        if let Some(info) = usable(lo, hi)
            .then(|| compute_direction(g, h, p, lo, hi).ok())
            .flatten()
        {
            if descends(g, &info.d) {
                return DirectionInfo {
                    fallback_used: true,
                    rung: 2,
                    ..info
                };
            }
        }
    }
    let d: Vec<f64> = g.iter().map(|v| -v).collect();
    DirectionInfo {
        gamma: 1.0,
        hessian_weight: 0.0,
        gamma_case: GammaCase::Steepest,
        cos_theta: cos_theta(g, &d).unwrap_or(1.0),
        d,
        eig_lo,
        eig_hi,
        fallback_used: true,
        rung: 3,
    }
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn hessian_finite(h: &SymMatrix) -> bool {
    h.rows().all(all_finite)
}

/// Minimizes `problem` from `x0`.
///
/// Evaluation failures after the first iterate are absorbed: non-finite line
/// search trials count as overshooting, and a Hessian that defeats both
/// eigensolvers drops the iteration to steepest descent.
pub fn minimize(
    problem: &Problem,
    x0: &[f64],
    cfg: &SolverConfig,
) -> Result<SolveReport, SolverError> {
    cfg.validate()?;
    let n = problem.dim;
    if x0.len() != n {
        return Err(SolverError::DimensionMismatch {
            expected: n,
            found: x0.len(),
        });
    }

    let mut x = x0.to_vec();
    let mut f = problem.value(&x);
    if !f.is_finite() {
        return Err(SolverError::EvaluationFailure("objective is not finite"));
    }
    let mut g = problem.gradient(&x);
    if g.len() != n || !all_finite(&g) {
        return Err(SolverError::EvaluationFailure("gradient is not finite"));
    }
    let mut h = problem.hessian(&x);
    if h.n() != n || !hessian_finite(&h) {
        return Err(SolverError::EvaluationFailure("Hessian is not finite"));
    }

    let mut trace = Vec::new();
    let mut warm: Option<ExtremePair> = None;
    let mut stalls = 0;
    let mut status = SolveStatus::MaxIterations;

    for k in 0..=cfg.max_iter {
        if cfg.norm_rule.norm(&g) < cfg.eps {
            status = SolveStatus::Converged;
            break;
        }
        if k == cfg.max_iter {
            break;
        }
        if k > 0 {
            h = problem.hessian(&x);
        }

        let pair = extreme_pair(
            &h,
            &cfg.eig,
            warm.as_ref().map(|w| w.lo.vector.as_slice()),
            warm.as_ref().map(|w| w.hi.vector.as_slice()),
        )
        .ok();
        let (lo, hi) = pair
            .as_ref()
            .map_or((f64::NAN, f64::NAN), |p| (p.lo.value, p.hi.value));
        let info = safeguard_direction(&g, &h, &cfg.gamma_params, lo, hi);
        let eig_fallback = pair.as_ref().is_none_or(ExtremePair::used_fallback);
        let eig_iterations = pair
            .as_ref()
            .map_or([0, 0], |p| [p.lo.iterations, p.hi.iterations]);
        if pair.is_some() {
            warm = pair;
        }

        let d = &info.d;
        let slope = dot(&g, d);
        let mut trial = vec![0.0; n];
        let ls = wolfe_search(
            f,
            slope,
            |alpha| {
                for ((t, xi), di) in trial.iter_mut().zip(&x).zip(d) {
                    *t = xi + alpha * di;
                }
                let ft = problem.value(&trial);
                if !ft.is_finite() {
                    return (ft, f64::NAN);
                }
                (ft, dot(&problem.gradient(&trial), d))
            },
            &cfg.wolfe,
        );
        let ls = match ls {
            Ok(r) if r.f_new < f => r,
            _ => {
                status = SolveStatus::LineSearchStalled;
                break;
            }
        };

        let x_next: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + ls.alpha * di).collect();
        trace.push(IterRecord {
            k,
            f,
            grad_norm: cfg.norm_rule.norm(&g),
            gamma: info.gamma,
            hessian_weight: info.hessian_weight,
            gamma_case: info.gamma_case,
            alpha: ls.alpha,
            cos_theta: info.cos_theta,
            eig_lo: info.eig_lo,
            eig_hi: info.eig_hi,
            fallback_used: info.fallback_used || eig_fallback,
            rung: info.rung,
            eig_iterations,
            slope,
            f_next: ls.f_new,
            slope_next: ls.slope_new,
            line_search: ls.status,
            line_search_evals: ls.evals,
            x: cfg.record_vectors.then(|| x.clone()),
            d: cfg.record_vectors.then(|| d.clone()),
        });

        let decrease = f - ls.f_new;
        x = x_next;
        f = problem.value(&x);
        g = problem.gradient(&x);
        if !f.is_finite() || !all_finite(&g) {
            status = SolveStatus::LineSearchStalled;
            break;
        }

        if ls.status == LineSearchStatus::MaxTrialsBestDecrease
            && decrease < STALL_REL * (1.0 + f.abs())
        {
            stalls += 1;
            if stalls >= 2 {
                status = SolveStatus::LineSearchStalled;
                break;
            }
        } else {
            stalls = 0;
        }
    }

    Ok(SolveReport {
        status,
        grad_norm_final: cfg.norm_rule.norm(&g),
        f_final: f,
        iterations: trace.len(),
        x_final: x,
        trace,
    })
}
