//! Search direction from the blended system `(γI + (1−γ)H)·d = −g`.
//!
//! The blend coefficient is chosen from the extreme Hessian eigenvalues so
//! that the modified matrix has smallest eigenvalue at least `δ` and condition
//! number at most `Δ`. Both requirements push `γ` upward, so the chosen value
//! is the smallest `γ` meeting both.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{cholesky_factor, dot, norm2, LinalgError, SymMatrix};

pub const DEFAULT_DELTA: f64 = 1e-8;
pub const DEFAULT_CAP: f64 = 1e12;

/// Relative shrink applied to the Hessian weight so rounding can only make
/// the blended matrix better conditioned, never worse.
const WEIGHT_SHRINK: f64 = 4.0 * f64::EPSILON;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DirectionError {
    #[error("invalid blend parameters: {0}")]
    InvalidParams(&'static str),
    #[error("gradient or direction is the zero vector")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("modified Hessian is not positive definite; eigenvalue estimates were wrong")]
    NotPositiveDefinite(#[source] LinalgError),
}

/// Lower bound `δ` on the smallest eigenvalue and ceiling `Δ` on the
/// condition number of the modified Hessian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    pub delta: f64,
    pub cap: f64,
}

impl Default for GammaParams {
    fn default() -> Self {
        Self {
            delta: DEFAULT_DELTA,
            cap: DEFAULT_CAP,
        }
    }
}

impl GammaParams {
    pub fn new(delta: f64, cap: f64) -> Result<Self, DirectionError> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(DirectionError::InvalidParams("delta must lie in (0, 1)"));
        }
        if !(cap >= 1.0) || !cap.is_finite() {
            return Err(DirectionError::InvalidParams("cap must be finite and >= 1"));
        }
        Ok(Self { delta, cap })
    }
}

/// Which branch of the blend rule fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GammaCase {
    /// Hessian already acceptable: pure Newton.
    Zero,
    /// Only the eigenvalue floor is violated.
    A,
    /// Only the condition ceiling is violated.
    B,
    /// Both violated; the larger coefficient wins.
    MaxAB,
    /// Steepest descent forced by the solver safeguard.
    Steepest,
}

/// Weights of the convex combination `identity·I + hessian·H`.
///
/// `hessian` is computed directly rather than as `1 − identity`: when the
/// Hessian has eigenvalues of size 1e12 the useful information sits in the
/// low digits of `1 − γ`, which a rounded `γ` cannot carry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blend {
    pub identity: f64,
    pub hessian: f64,
}

impl Blend {
    pub const NEWTON: Blend = Blend {
        identity: 0.0,
        hessian: 1.0,
    };
    pub const STEEPEST: Blend = Blend {
        identity: 1.0,
        hessian: 0.0,
    };

    pub fn from_gamma(gamma: f64) -> Self {
        Self {
            identity: gamma,
            hessian: 1.0 - gamma,
        }
    }

    /// Builds the blend from the Hessian weight, nudging `γ` up by one ulp so
    /// the pair never undershoots `γ + w = 1`.
    fn from_hessian_weight(w: f64) -> Self {
        let w = (w * (1.0 - WEIGHT_SHRINK)).clamp(0.0, 1.0);
        Self {
            identity: (1.0 - w).next_up().min(1.0),
            hessian: w,
        }
    }

    /// Eigenvalue of the blended matrix belonging to Hessian eigenvalue `lambda`.
    pub fn map_eigenvalue(&self, lambda: f64) -> f64 {
        self.identity + self.hessian * lambda
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaChoice {
    pub blend: Blend,
    pub case: GammaCase,
}

impl GammaChoice {
    pub fn gamma(&self) -> f64 {
        self.blend.identity
    }
}

/// Picks the blend coefficient from the extreme Hessian eigenvalues.
///
/// * `a = (δ − λmin)/(1 − λmin)` lifts the smallest blended eigenvalue to `δ`;
/// * `b = (λmax − λmin·Δ)/(Δ − 1 + λmax − λmin·Δ)` brings the blended
///   condition number down to `Δ`.
pub fn select_gamma(eig_lo: f64, eig_hi: f64, p: &GammaParams) -> GammaChoice {
    debug_assert!(eig_lo <= eig_hi, "eigenvalue bounds out of order");
    let (lo, hi) = (eig_lo.min(eig_hi), eig_lo.max(eig_hi));
    let GammaParams { delta, cap } = *p;

    // λmax − λmin·Δ with a single rounding
    let excess = (-lo).mul_add(cap, hi);
    let floor_ok = lo >= delta;
    let cond_ok = excess <= 0.0;

    // Hessian weights 1 − a and 1 − b, each evaluated without cancellation.
    let weight_a = || {
        assert!(lo < 1.0, "floor branch requires lambda_min < 1");
        (1.0 - delta) / (1.0 - lo)
    };
    let weight_b = || (cap - 1.0) / ((cap - 1.0) + excess);

    let (case, weight) = match (floor_ok, cond_ok) {
        (true, true) => {
            return GammaChoice {
                blend: Blend::NEWTON,
                case: GammaCase::Zero,
            }
        }
        (false, true) => (GammaCase::A, weight_a()),
        (true, false) => (GammaCase::B, weight_b()),
        (false, false) => (GammaCase::MaxAB, weight_a().min(weight_b())),
    };
    GammaChoice {
        blend: Blend::from_hessian_weight(weight),
        case,
    }
}

/// `B = γI + (1−γ)H`.
pub fn build_b(h: &SymMatrix, blend: Blend) -> SymMatrix {
    h.scaled_shift(blend.identity, blend.hessian)
}

/// `−gᵀd / (‖g‖·‖d‖)`.
pub fn cos_theta(g: &[f64], d: &[f64]) -> Result<f64, DirectionError> {
    if g.len() != d.len() {
        return Err(DirectionError::DimensionMismatch {
            expected: g.len(),
            found: d.len(),
        });
    }
    let (gn, dn) = (norm2(g), norm2(d));
    if !(gn > 0.0 && dn > 0.0) {
        return Err(DirectionError::ZeroVector);
    }
    Ok((-dot(g, d) / (gn * dn)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionInfo {
    pub gamma: f64,
    pub hessian_weight: f64,
    pub gamma_case: GammaCase,
    pub d: Vec<f64>,
    pub cos_theta: f64,
    pub eig_lo: f64,
    pub eig_hi: f64,
    pub fallback_used: bool,
    /// Safeguard rung that produced the direction (1 = eigenvalues as given,
    /// 2 = dense eigenvalues, 3 = steepest descent).
    pub rung: u8,
}

/// Solves `B·d = −g` by Cholesky for the blend chosen from `(eig_lo, eig_hi)`.
pub fn compute_direction(
    g: &[f64],
    h: &SymMatrix,
    p: &GammaParams,
    eig_lo: f64,
    eig_hi: f64,
) -> Result<DirectionInfo, DirectionError> {
    if g.len() != h.n() {
        return Err(DirectionError::DimensionMismatch {
            expected: h.n(),
            found: g.len(),
        });
    }
    if !(norm2(g) > 0.0) {
        return Err(DirectionError::ZeroVector);
    }
    let choice = select_gamma(eig_lo, eig_hi, p);
    let b = build_b(h, choice.blend);
    let factor = cholesky_factor(&b).map_err(DirectionError::NotPositiveDefinite)?;
    let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
    let d = factor
        .solve(&neg_g)
        .map_err(DirectionError::NotPositiveDefinite)?;
    let cos_theta = cos_theta(g, &d)?;
    Ok(DirectionInfo {
        gamma: choice.blend.identity,
        hessian_weight: choice.blend.hessian,
        gamma_case: choice.case,
        d,
        cos_theta,
        eig_lo,
        eig_hi,
        fallback_used: false,
        rung: 1,
    })
}
