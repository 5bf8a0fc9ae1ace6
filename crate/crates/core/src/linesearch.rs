//! Weak Wolfe line search by bracketing and safeguarded cubic interpolation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LineSearchError {
    #[error("not a descent direction: slope at zero is {slope}")]
    NotDescent { slope: f64 },
    #[error("objective is not finite at the start of the line search")]
    NonFiniteStart,
    #[error("invalid line search parameters: {0}")]
    InvalidParams(&'static str),
}

/// Sufficient-decrease coefficient `sigma1`, curvature coefficient `sigma2`,
/// first trial step and trial budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WolfeParams {
    pub sigma1: f64,
    pub sigma2: f64,
    pub alpha0: f64,
    pub max_trials: usize,
}

impl Default for WolfeParams {
    fn default() -> Self {
        Self {
            sigma1: 1e-4,
            sigma2: 0.9,
            alpha0: 1.0,
            max_trials: 60,
        }
    }
}

impl WolfeParams {
    pub fn new(
        sigma1: f64,
        sigma2: f64,
        alpha0: f64,
        max_trials: usize,
    ) -> Result<Self, LineSearchError> {
        if !(0.0 < sigma1 && sigma1 < sigma2 && sigma2 < 1.0) {
            return Err(LineSearchError::InvalidParams(
                "need 0 < sigma1 < sigma2 < 1",
            ));
        }
        if !(alpha0 > 0.0) || !alpha0.is_finite() {
            return Err(LineSearchError::InvalidParams("alpha0 must be positive"));
        }
        if max_trials == 0 {
            return Err(LineSearchError::InvalidParams("max_trials must be >= 1"));
        }
        Ok(Self {
            sigma1,
            sigma2,
            alpha0,
            max_trials,
        })
    }

    /// Sufficient decrease at step `alpha`.
    pub fn armijo_holds(&self, phi0: f64, dphi0: f64, alpha: f64, phi: f64) -> bool {
        phi <= phi0 + self.sigma1 * alpha * dphi0
    }

    /// Curvature condition at step `alpha`.
    pub fn curvature_holds(&self, dphi0: f64, dphi: f64) -> bool {
        dphi >= self.sigma2 * dphi0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineSearchStatus {
    WolfeSatisfied,
    MaxTrialsBestDecrease,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearchResult {
    pub alpha: f64,
    pub f_new: f64,
    /// Directional derivative at `alpha`.
    pub slope_new: f64,
    pub evals: usize,
    pub status: LineSearchStatus,
}

#[derive(Debug, Clone, Copy)]
struct Probe {
    alpha: f64,
    f: f64,
    d: f64,
}

/// Searches `phi(α) = f(x + α·d)` for a step satisfying both Wolfe conditions.
///
/// `eval(α)` returns `(phi(α), phi'(α))`; `phi0`, `dphi0` are the values at
/// zero. Non-finite trial values count as overshooting. When the budget runs
/// out (or the bracket collapses) the trial with the lowest `phi` is returned
/// with [`LineSearchStatus::MaxTrialsBestDecrease`].
pub fn wolfe_search<F>(
    phi0: f64,
    dphi0: f64,
    mut eval: F,
    p: &WolfeParams,
) -> Result<LineSearchResult, LineSearchError>
where
    F: FnMut(f64) -> (f64, f64),
{
    if !phi0.is_finite() {
        return Err(LineSearchError::NonFiniteStart);
    }
    if !(dphi0 < 0.0) {
        return Err(LineSearchError::NotDescent { slope: dphi0 });
    }

    let mut lo = Probe {
        alpha: 0.0,
        f: phi0,
        d: dphi0,
    };
    let mut hi: Option<Probe> = None;
    let mut best: Option<Probe> = None;
    let mut alpha = p.alpha0;
    let mut evals = 0;

    for _ in 0..p.max_trials {
        let (f, d) = eval(alpha);
        evals += 1;
        let probe = Probe { alpha, f, d };
        if f.is_finite() && best.is_none_or(|b| f < b.f) {
            best = Some(probe);
        }

        if !f.is_finite() || !p.armijo_holds(phi0, dphi0, alpha, f) || !d.is_finite() {
            hi = Some(probe);
        } else if !p.curvature_holds(dphi0, d) {
            lo = probe;
        } else {
            return Ok(LineSearchResult {
                alpha,
                f_new: f,
                slope_new: d,
                evals,
                status: LineSearchStatus::WolfeSatisfied,
            });
        }

        alpha = match hi {
            None => 2.0 * lo.alpha.max(alpha),
            Some(h) => {
                if h.alpha - lo.alpha <= f64::EPSILON * h.alpha {
                    break;
                }
                next_in_bracket(lo, h)
            }
        };
        if !alpha.is_finite() {
            break;
        }
    }

    let b = best.unwrap_or(Probe {
        alpha,
        f: f64::INFINITY,
        d: f64::NAN,
    });
    Ok(LineSearchResult {
        alpha: b.alpha,
        f_new: b.f,
        slope_new: b.d,
        evals,
        status: LineSearchStatus::MaxTrialsBestDecrease,
    })
}

/// Next trial inside `(lo, hi)`: cubic interpolation when both ends carry
/// finite slopes, quadratic from `lo` otherwise, kept at least 10% of the
/// bracket width away from either end.
fn next_in_bracket(lo: Probe, hi: Probe) -> f64 {
    let width = hi.alpha - lo.alpha;
    let (min_t, max_t) = (lo.alpha + 0.1 * width, hi.alpha - 0.1 * width);
    if !hi.f.is_finite() {
        return min_t;
    }
    let cubic = || {
        if !hi.d.is_finite() {
            return None;
        }
        let d1 = lo.d + hi.d - 3.0 * (lo.f - hi.f) / (lo.alpha - hi.alpha);
        let disc = d1 * d1 - lo.d * hi.d;
        if !(disc >= 0.0) {
            return None;
        }
        let d2 = disc.sqrt();
        let t = hi.alpha - width * (hi.d + d2 - d1) / (hi.d - lo.d + 2.0 * d2);
        t.is_finite().then_some(t)
    };
    let quadratic = || {
        let curv = hi.f - lo.f - lo.d * width;
        let t = lo.alpha - lo.d * width * width / (2.0 * curv);
        (curv > 0.0 && t.is_finite()).then_some(t)
    };
    let t = cubic().or_else(quadratic).unwrap_or(lo.alpha + 0.5 * width);
    t.clamp(min_t, max_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p() -> WolfeParams {
        WolfeParams::default()
    }

    #[test]
    fn quadratic_accepts_unit_step() {
        let r = wolfe_search(0.5, -1.0, |a| (0.5 * (1.0 - a).powi(2), a - 1.0), &p()).unwrap();
        assert_eq!(r.status, LineSearchStatus::WolfeSatisfied);
        assert_eq!(r.alpha, 1.0);
        assert_eq!(r.f_new, 0.0);
        assert_eq!(r.evals, 1);
    }

    #[test]
    fn shifted_quadratic_accepts_unit_step() {
        // phi = (α − 2)², phi(1) = 1 ≤ 4 − 4σ₁ and phi'(1) = −2 ≥ −3.6
        let r = wolfe_search(4.0, -4.0, |a| ((a - 2.0).powi(2), 2.0 * (a - 2.0)), &p()).unwrap();
        assert_eq!(r.status, LineSearchStatus::WolfeSatisfied);
        assert_eq!(r.alpha, 1.0);
    }

    #[test]
    fn linear_decrease_exhausts_trials() {
        let params = p();
        let r = wolfe_search(1.0, -2.0, |a| (1.0 - 2.0 * a, -2.0), &params).unwrap();
        assert_eq!(r.status, LineSearchStatus::MaxTrialsBestDecrease);
        assert_eq!(r.evals, params.max_trials);
        assert!(r.f_new < 1.0);
        assert!(r.evals <= 2 * params.max_trials + 2);
    }

    #[test]
    fn overshoot_into_overflow_shrinks_bracket() {
        let phi = |a: f64| {
            if a > 0.6 {
                (f64::INFINITY, f64::NAN)
            } else {
                ((a - 0.3).powi(2), 2.0 * (a - 0.3))
            }
        };
        let r = wolfe_search(0.09, -0.6, phi, &p()).unwrap();
        assert_eq!(r.status, LineSearchStatus::WolfeSatisfied);
        assert!(r.alpha <= 0.6);
    }

    #[test]
    fn long_steps_are_extrapolated() {
        // minimizer at α = 50; curvature forces the search past the first trials
        let r = wolfe_search(0.0, -1.0, |a| (0.01 * a * a - a, 0.02 * a - 1.0), &p()).unwrap();
        assert_eq!(r.status, LineSearchStatus::WolfeSatisfied);
        assert!(r.alpha > 5.0);
    }

    #[test]
    fn rejects_ascent_and_bad_params() {
        assert_eq!(
            wolfe_search(0.0, 1.0, |_| (0.0, 0.0), &p()),
            Err(LineSearchError::NotDescent { slope: 1.0 })
        );
        assert_eq!(
            wolfe_search(f64::NAN, -1.0, |_| (0.0, 0.0), &p()),
            Err(LineSearchError::NonFiniteStart)
        );
        assert!(WolfeParams::new(0.5, 0.4, 1.0, 10).is_err());
        assert!(WolfeParams::new(1e-4, 1.0, 1.0, 10).is_err());
        assert!(WolfeParams::new(1e-4, 0.9, 0.0, 10).is_err());
        assert!(WolfeParams::new(1e-4, 0.9, 1.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn exact_newton_step_is_accepted(c in -10.0f64..10.0, slope in 0.01f64..100.0, k in 0.01f64..100.0) {
            let phi = |a: f64| (c - slope * a + 0.5 * k * a * a, -slope + k * a);
            let params = WolfeParams { alpha0: slope / k, ..p() };
            let r = wolfe_search(c, -slope, phi, &params).unwrap();
            prop_assert_eq!(r.status, LineSearchStatus::WolfeSatisfied);
            prop_assert_eq!(r.evals, 1);
        }

        #[test]
        fn accepted_steps_recheck(m in 0.1f64..20.0, amp in 0.0f64..2.0, freq in 0.1f64..5.0, alpha0 in 0.01f64..50.0) {
            // wavy bowl; starts with phi'(0) = amp·freq − 2m, filtered to descent below
            let phi = move |a: f64| {
                ((a - m).powi(2) + amp * (freq * a).sin(), 2.0 * (a - m) + amp * freq * (freq * a).cos())
            };
            let (f0, d0) = phi(0.0);
            prop_assume!(d0 < 0.0);
            let params = WolfeParams { alpha0, ..p() };
            let r = wolfe_search(f0, d0, phi, &params).unwrap();
            prop_assert!(r.evals <= 2 * params.max_trials + 2);
            if r.status == LineSearchStatus::WolfeSatisfied {
                let (f, d) = phi(r.alpha);
                prop_assert!(f <= f0 + params.sigma1 * r.alpha * d0);
                prop_assert!(d >= params.sigma2 * d0);
            }
        }
    }
}
