//! Extreme eigenvalues of a symmetric matrix by conjugate gradient on the unit
//! sphere.
//!
//! The Rayleigh quotient `ρ(x) = xᵀHx` is maximized (or minimized) over
//! `‖x‖ = 1`. Each iteration rotates the iterate along the great circle
//! spanned by `x` and the conjugate direction `q`, choosing the rotation in
//! closed form so that `ρ` is extremal on that circle. Search directions are
//! parallel-transported along the geodesic before the conjugacy update, and
//! both the iterate and the direction are pulled back onto the sphere and its
//! tangent space every step to stop rounding drift.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{axpy, dot, jacobi_eigs, norm2, LinalgError, SymMatrix};

/// Default residual tolerance for eigenvalue estimates inside the solver.
pub const DEFAULT_EIG_TOL: f64 = 1e-10;

/// Iteration cap multiplier: `max_iter = DEFAULT_ITER_FACTOR · n`.
pub const DEFAULT_ITER_FACTOR: usize = 10;

const UNIT_TOL: f64 = 1e-10;
const MU_DENOM_FLOOR: f64 = 1e-300;
const DEGENERATE_RADIUS: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SphereError {
    #[error("start vector is not unit length (norm {norm})")]
    NotUnit { norm: f64 },
    #[error("dimension mismatch: matrix is {expected}x{expected}, vector has {found} entries")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("geodesic step is degenerate: Rayleigh quotient is constant on the circle")]
    DegenerateStep,
    #[error("invalid eigensolver configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extreme {
    Max,
    Min,
}

impl Extreme {
    pub fn sign(self) -> f64 {
        match self {
            Extreme::Max => 1.0,
            Extreme::Min => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigConfig {
    pub which: Extreme,
    pub tol: f64,
    pub max_iter: usize,
}

impl EigConfig {
    pub fn new(which: Extreme, tol: f64, max_iter: usize) -> Result<Self, SphereError> {
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(SphereError::InvalidConfig("tol must be positive"));
        }
        if max_iter == 0 {
            return Err(SphereError::InvalidConfig("max_iter must be at least 1"));
        }
        Ok(Self {
            which,
            tol,
            max_iter,
        })
    }

    /// Default tolerance and a `10·n` iteration cap.
    pub fn for_dim(which: Extreme, n: usize) -> Self {
        Self {
            which,
            tol: DEFAULT_EIG_TOL,
            max_iter: DEFAULT_ITER_FACTOR * n.max(1),
        }
    }
}

/// Settings shared by the min and max runs of [`extreme_pair`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairConfig {
    pub tol: f64,
    /// `None` selects `10·n`.
    pub max_iter: Option<usize>,
}

impl Default for PairConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_EIG_TOL,
            max_iter: None,
        }
    }
}

impl PairConfig {
    pub fn eig_config(&self, which: Extreme, n: usize) -> EigConfig {
        EigConfig {
            which,
            tol: self.tol,
            max_iter: self
                .max_iter
                .unwrap_or(DEFAULT_ITER_FACTOR * n.max(1))
                .max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigMethod {
    SphereCg,
    JacobiFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigEstimate {
    pub value: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub method: EigMethod,
}

impl EigEstimate {
    /// `‖H·v − λ·v‖`.
    pub fn residual_norm(&self, h: &SymMatrix) -> f64 {
        let mut r = h.mul_vec(&self.vector);
        axpy(-self.value, &self.vector, &mut r);
        norm2(&r)
    }
}

/// Snapshot of the iteration, handed to observers after every step.
#[derive(Debug, Clone, PartialEq)]
pub struct RayleighState {
    pub iteration: usize,
    pub x: Vec<f64>,
    pub rho: f64,
    /// Sphere gradient residual `(H − ρI)x`.
    pub residual: Vec<f64>,
    /// Conjugate direction in the tangent space at `x`.
    pub direction: Vec<f64>,
}

/// `xᵀHx` for a unit vector `x`.
pub fn rayleigh(h: &SymMatrix, x: &[f64]) -> Result<f64, SphereError> {
    check_unit(h, x)?;
    Ok(h.quadratic_form(x)?)
}

fn check_unit(h: &SymMatrix, x: &[f64]) -> Result<(), SphereError> {
    if x.len() != h.n() {
        return Err(SphereError::DimensionMismatch {
            expected: h.n(),
            found: x.len(),
        });
    }
    let norm = norm2(x);
    if !((norm - 1.0).abs() <= UNIT_TOL) {
        return Err(SphereError::NotUnit { norm });
    }
    Ok(())
}

/// Closed-form rotation `(c, s) = (cos t, sin t)` extremizing `ρ(x·c + q·s)`.
///
/// With `a = 2xᵀHq` and `b = xᵀHx − qᵀHq`, the quotient along the circle is
/// `const + (b/2)·cos 2t + (a/2)·sin 2t`. Its maximizer has
/// `(cos 2t, sin 2t) = (b, a)/r` and its minimizer `(−b, −a)/r`, `r = √(a²+b²)`.
/// Whichever of `c`, `s` is the larger is taken from a square root and the
/// other from `sin 2t = 2cs`, avoiding cancellation. The returned pair has
/// `c ≥ 0`, i.e. the shorter of the two equivalent rotations.
pub fn geodesic_coeffs(a: f64, b: f64, which: Extreme) -> Result<(f64, f64), SphereError> {
    let r = a.hypot(b);
    if !(r > DEGENERATE_RADIUS) {
        return Err(SphereError::DegenerateStep);
    }
    let sign = which.sign();
    let cos2 = sign * b / r;
    let sin2 = sign * a / r;
    let (mut c, mut s) = if cos2 >= 0.0 {
        let c = (0.5 * (1.0 + cos2)).sqrt();
        (c, sin2 / (2.0 * c))
    } else {
        let s = (0.5 * (1.0 - cos2)).sqrt();
        (sin2 / (2.0 * s), s)
    };
    if c < 0.0 {
        c = -c;
        s = -s;
    }
    // (c, s) and (c, −s) differ only in the sign of the `a·c·s` term; keep the
    // one moving ρ the requested way.
    if sign * a * c * s < 0.0 {
        s = -s;
    }
    Ok((c, s))
}

/// Parallel transport of the tangent vector `v` along the geodesic leaving
/// `x` in unit direction `q`, rotated by `(c, s) = (cos t, sin t)`:
/// `τv = v − (vᵀq)(x·s + q·(1 − c))`.
pub fn transport(v: &[f64], x: &[f64], q: &[f64], c: f64, s: f64) -> Vec<f64> {
    let vq = dot(v, q);
    v.iter()
        .zip(x.iter().zip(q))
        .map(|(vi, (xi, qi))| vi - vq * (xi * s + qi * (1.0 - c)))
        .collect()
}

/// Conjugate gradient for one extreme eigenvalue. See [`cg_extreme_eig_observed`].
pub fn cg_extreme_eig(
    h: &SymMatrix,
    x0: &[f64],
    cfg: &EigConfig,
) -> Result<EigEstimate, SphereError> {
    cg_extreme_eig_observed(h, x0, cfg, |_| {})
}

/// Conjugate gradient for one extreme eigenvalue, reporting every iterate.
///
/// Stops once `‖(H − ρI)x‖ ≤ tol·(1 + |ρ|)`. Running out of iterations is not
/// an error: the estimate is returned with `converged = false` and the caller
/// decides whether to fall back.
pub fn cg_extreme_eig_observed(
    h: &SymMatrix,
    x0: &[f64],
    cfg: &EigConfig,
    mut observe: impl FnMut(&RayleighState),
) -> Result<EigEstimate, SphereError> {
    check_unit(h, x0)?;
    let n = h.n();
    let x0_norm = norm2(x0);
    let mut x: Vec<f64> = x0.iter().map(|v| v / x0_norm).collect();
    let (mut rho, mut grad) = rayleigh_residual(h, &x);
    let mut dir = grad.clone();

    let mut k = 0;
    let mut restarted = false;
    observe(&RayleighState {
        iteration: 0,
        x: x.clone(),
        rho,
        residual: grad.clone(),
        direction: dir.clone(),
    });

    loop {
        let grad_norm = norm2(&grad);
        if grad_norm <= cfg.tol * (1.0 + rho.abs()) {
            return Ok(finish(x, rho, k, true));
        }
        if k >= cfg.max_iter {
            return Ok(finish(x, rho, k, false));
        }

        let mut dir_norm = norm2(&dir);
        if !(dir_norm > 0.0) || !dir_norm.is_finite() {
            dir.clone_from(&grad);
            dir_norm = grad_norm;
        }
        let q: Vec<f64> = dir.iter().map(|v| v / dir_norm).collect();
        let hq = h.mul_vec(&q);
        let a = 2.0 * dot(&x, &hq);
        let b = rho - dot(&q, &hq);
        let (c, s) = match geodesic_coeffs(a, b, cfg.which) {
            Ok(cs) => cs,
            Err(_) if !restarted => {
                // ρ is flat on this circle; the steepest circle never is while
                // the residual is nonzero.
                dir.clone_from(&grad);
                restarted = true;
                continue;
            }
            Err(_) => return Ok(finish(x, rho, k, false)),
        };

        let mut x_next: Vec<f64> = x.iter().zip(&q).map(|(xi, qi)| xi * c + qi * s).collect();
        let x_norm = norm2(&x_next);
        x_next.iter_mut().for_each(|v| *v /= x_norm);
        let (rho_next, grad_next) = rayleigh_residual(h, &x_next);

        let denom = dot(&grad, &dir);
        let restart = k % n == n - 1 || denom.abs() <= MU_DENOM_FLOOR;
        let mut dir_next = if restart {
            grad_next.clone()
        } else {
            let moved_dir: Vec<f64> = dir
                .iter()
                .zip(&x)
                .map(|(d, xi)| d * c - xi * dir_norm * s)
                .collect();
            let moved_grad = transport(&grad, &x, &q, c, s);
            let mu = grad_next
                .iter()
                .zip(&moved_grad)
                .map(|(gn, tg)| (gn - tg) * gn)
                .sum::<f64>()
                / denom;
            let mut d = grad_next.clone();
            axpy(mu, &moved_dir, &mut d);
            d
        };
        project_tangent(&x_next, &mut dir_next);

        x = x_next;
        rho = rho_next;
        grad = grad_next;
        dir = dir_next;
        restarted = false;
        k += 1;
        observe(&RayleighState {
            iteration: k,
            x: x.clone(),
            rho,
            residual: grad.clone(),
            direction: dir.clone(),
        });
    }
}

fn finish(x: Vec<f64>, rho: f64, iterations: usize, converged: bool) -> EigEstimate {
    EigEstimate {
        value: rho,
        vector: x,
        iterations,
        converged,
        method: EigMethod::SphereCg,
    }
}

/// `(ρ(x), (H − ρI)x)` for unit `x`.
fn rayleigh_residual(h: &SymMatrix, x: &[f64]) -> (f64, Vec<f64>) {
    let mut hx = h.mul_vec(x);
    let rho = dot(x, &hx);
    axpy(-rho, x, &mut hx);
    (rho, hx)
}

/// `v ← (I − xxᵀ)v`, repeated once if cancellation left a visible component.
fn project_tangent(x: &[f64], v: &mut [f64]) {
    for _ in 0..2 {
        let along = dot(x, v);
        axpy(-along, x, v);
        if dot(x, v).abs() <= 1e-13 * norm2(v) {
            break;
        }
    }
}

/// Start vector used when no warm start is available: all ones with the last
/// entry nudged by `1e-3`, normalized.
pub fn default_start(n: usize) -> Vec<f64> {
    let mut x = vec![1.0; n];
    if let Some(last) = x.last_mut() {
        *last += 1e-3;
    }
    let norm = norm2(&x);
    x.iter_mut().for_each(|v| *v /= norm);
    x
}

fn usable_start(start: Option<&[f64]>, n: usize) -> Vec<f64> {
    match start {
        Some(v) if v.len() == n => {
            let norm = norm2(v);
            if norm.is_finite() && norm > 0.0 {
                v.iter().map(|x| x / norm).collect()
            } else {
                default_start(n)
            }
        }
        _ => default_start(n),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremePair {
    pub lo: EigEstimate,
    pub hi: EigEstimate,
}

impl ExtremePair {
    pub fn used_fallback(&self) -> bool {
        self.lo.method == EigMethod::JacobiFallback
    }
}

/// Smallest and largest eigenvalue by sphere CG, recomputing both with
/// [`jacobi_eigs`] if either run fails to converge or the pair is inverted.
///
/// Warm starts of the wrong length or zero norm are ignored.
pub fn extreme_pair(
    h: &SymMatrix,
    cfg: &PairConfig,
    warm_lo: Option<&[f64]>,
    warm_hi: Option<&[f64]>,
) -> Result<ExtremePair, SphereError> {
    let n = h.n();
    let lo = cg_extreme_eig(
        h,
        &usable_start(warm_lo, n),
        &cfg.eig_config(Extreme::Min, n),
    )?;
    let hi = cg_extreme_eig(
        h,
        &usable_start(warm_hi, n),
        &cfg.eig_config(Extreme::Max, n),
    )?;
    if lo.converged && hi.converged && lo.value <= hi.value {
        return Ok(ExtremePair { lo, hi });
    }
    jacobi_pair(h, lo.iterations, hi.iterations)
}

/// Extreme pair straight from the dense eigendecomposition.
pub fn jacobi_pair(
    h: &SymMatrix,
    lo_iterations: usize,
    hi_iterations: usize,
) -> Result<ExtremePair, SphereError> {
    let eig = jacobi_eigs(h)?;
    let (lo_value, lo_vec) = eig.min();
    let (hi_value, hi_vec) = eig.max();
    let est = |value: f64, vector: &[f64], iterations| EigEstimate {
        value,
        vector: vector.to_vec(),
        iterations,
        converged: true,
        method: EigMethod::JacobiFallback,
    };
    Ok(ExtremePair {
        lo: est(lo_value, lo_vec, lo_iterations),
        hi: est(hi_value, hi_vec, hi_iterations),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn rayleigh_examples() {
        let id = SymMatrix::identity(3);
        let x = default_start(3);
        assert_relative_eq!(rayleigh(&id, &x).unwrap(), 1.0, epsilon = 1e-15);
        let d = SymMatrix::diag(&[3.0, 1.0]);
        assert_eq!(rayleigh(&d, &[1.0, 0.0]).unwrap(), 3.0);
        assert_relative_eq!(
            rayleigh(&d, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap(),
            2.0,
            epsilon = 1e-15
        );
        assert!(matches!(
            rayleigh(&d, &[1.0, 1.0]),
            Err(SphereError::NotUnit { .. })
        ));
        assert!(matches!(
            rayleigh(&d, &[1.0]),
            Err(SphereError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn geodesic_examples() {
        assert_eq!(geodesic_coeffs(0.0, 1.0, Extreme::Max).unwrap(), (1.0, 0.0));

        let (c, s) = geodesic_coeffs(2.0, 0.0, Extreme::Max).unwrap();
        assert_relative_eq!(c, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_relative_eq!(s, FRAC_1_SQRT_2, epsilon = 1e-15);
        // diag(3,1) from the diagonal direction lands on e1 with ρ = 3
        let h = SymMatrix::diag(&[3.0, 1.0]);
        let x = [FRAC_1_SQRT_2, FRAC_1_SQRT_2];
        let q = [FRAC_1_SQRT_2, -FRAC_1_SQRT_2];
        let x1: Vec<f64> = (0..2).map(|i| x[i] * c + q[i] * s).collect();
        assert_relative_eq!(x1[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(x1[1], 0.0, epsilon = 1e-15);
        assert_relative_eq!(h.quadratic_form(&x1).unwrap(), 3.0, epsilon = 1e-14);

        let (c, s) = geodesic_coeffs(3f64.sqrt(), 1.0, Extreme::Min).unwrap();
        assert_relative_eq!(c, 0.5, epsilon = 1e-15);
        assert_relative_eq!(s, -(3f64.sqrt()) / 2.0, epsilon = 1e-15);
        let x = [3f64.sqrt() / 2.0, 0.5];
        let q = [0.5, -(3f64.sqrt()) / 2.0];
        let x1: Vec<f64> = (0..2).map(|i| x[i] * c + q[i] * s).collect();
        assert_relative_eq!(h.quadratic_form(&x1).unwrap(), 1.0, epsilon = 1e-14);

        assert_eq!(
            geodesic_coeffs(0.0, 0.0, Extreme::Max),
            Err(SphereError::DegenerateStep)
        );
    }

    #[test]
    fn geodesic_coeffs_match_brute_force_scan() {
        // Oracle: scan t over a fine grid and compare the best ρ on the circle.
        let along = |a: f64, b: f64, c: f64, s: f64| 0.5 * b * (c * c - s * s) + a * c * s;
        for &(a, b) in &[
            (1.0, 2.0),
            (-3.0, 0.5),
            (0.2, -4.0),
            (-1.0, -1.0),
            (5.0, 0.0),
        ] {
            for which in [Extreme::Max, Extreme::Min] {
                let (c, s) = geodesic_coeffs(a, b, which).unwrap();
                assert_relative_eq!(c * c + s * s, 1.0, epsilon = 1e-12);
                assert!(c >= 0.0);
                let best = (0..20000)
                    .map(|i| {
                        let t = i as f64 * std::f64::consts::PI / 20000.0;
                        which.sign() * along(a, b, t.cos(), t.sin())
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!(which.sign() * along(a, b, c, s) >= best - 1e-6);
            }
        }
    }

    #[test]
    fn transport_examples() {
        let x = [1.0, 0.0, 0.0];
        let q = [0.0, 1.0, 0.0];
        let v = [0.0, 0.0, 2.0];
        assert_eq!(transport(&v, &x, &q, 0.6, 0.8), v.to_vec());
        assert_eq!(transport(&q, &x, &q, 0.0, 1.0), vec![-1.0, 0.0, 0.0]);
        assert_eq!(transport(&q, &x, &q, 1.0, 0.0), q.to_vec());
        // τQ = Q·c − x·‖Q‖·s for Q = 3q
        let big_q = [0.0, 3.0, 0.0];
        let (c, s) = (0.6, 0.8);
        let t = transport(&big_q, &x, &q, c, s);
        let expect: Vec<f64> = (0..3).map(|i| big_q[i] * c - x[i] * 3.0 * s).collect();
        for (a, b) in t.iter().zip(&expect) {
            assert_relative_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn identity_converges_immediately() {
        let h = SymMatrix::identity(5);
        let cfg = EigConfig::for_dim(Extreme::Max, 5);
        let est = cg_extreme_eig(&h, &default_start(5), &cfg).unwrap();
        assert_relative_eq!(est.value, 1.0, epsilon = 1e-15);
        assert!(est.converged);
        assert_eq!(est.iterations, 0);
    }

    #[test]
    fn diag_max_finds_e3() {
        let h = SymMatrix::diag(&[1.0, 2.0, 3.0]);
        let x0 = vec![1.0 / 3f64.sqrt(); 3];
        let cfg = EigConfig::new(Extreme::Max, 1e-12, 30).unwrap();
        let est = cg_extreme_eig(&h, &x0, &cfg).unwrap();
        assert!(est.converged);
        assert_relative_eq!(est.value, 3.0, epsilon = 1e-12);
        assert_relative_eq!(est.vector[2].abs(), 1.0, epsilon = 1e-10);
        assert!(est.residual_norm(&h) <= 1e-12 * 4.0);
    }

    #[test]
    fn min_run_is_monotone_and_tangent() {
        let h = SymMatrix::from_lower_fn(6, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let cfg = EigConfig::new(Extreme::Min, 1e-11, 200).unwrap();
        let mut last = f64::INFINITY;
        let est = cg_extreme_eig_observed(&h, &default_start(6), &cfg, |st| {
            assert!(st.rho <= last + 1e-12 * (1.0 + last.abs()));
            last = st.rho;
            assert!((norm2(&st.x) - 1.0).abs() <= 1e-12);
            assert!(dot(&st.x, &st.direction).abs() <= 1e-10 * norm2(&st.direction));
        })
        .unwrap();
        assert!(est.converged);
        let oracle = jacobi_eigs(&h).unwrap();
        assert_relative_eq!(est.value, oracle.values[0], epsilon = 1e-12);
    }

    #[test]
    fn non_convergence_is_reported_not_raised() {
        let h = SymMatrix::from_lower_fn(8, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let cfg = EigConfig::new(Extreme::Max, 1e-14, 1).unwrap();
        let est = cg_extreme_eig(&h, &default_start(8), &cfg).unwrap();
        assert!(!est.converged);
        assert_eq!(est.iterations, 1);
    }

    #[test]
    fn pair_examples() {
        let p = extreme_pair(&SymMatrix::identity(4), &PairConfig::default(), None, None).unwrap();
        assert_eq!((p.lo.value, p.hi.value), (1.0, 1.0));

        let p = extreme_pair(
            &SymMatrix::diag(&[-1.0, 1.0]),
            &PairConfig::default(),
            None,
            None,
        )
        .unwrap();
        assert_relative_eq!(p.lo.value, -1.0, epsilon = 1e-14);
        assert_relative_eq!(p.hi.value, 1.0, epsilon = 1e-14);
        assert!(!p.used_fallback());
    }

    #[test]
    fn pair_falls_back_when_cg_budget_is_exhausted() {
        let h = SymMatrix::from_lower_fn(8, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let cfg = PairConfig {
            tol: 1e-14,
            max_iter: Some(1),
        };
        let p = extreme_pair(&h, &cfg, None, None).unwrap();
        assert!(p.used_fallback());
        assert_eq!(p.hi.method, EigMethod::JacobiFallback);
        let e = jacobi_eigs(&h).unwrap();
        assert_eq!(p.lo.value, e.values[0]);
        assert_eq!(p.hi.value, e.values[7]);
    }

    #[test]
    fn bad_config_rejected() {
        assert!(EigConfig::new(Extreme::Max, 0.0, 5).is_err());
        assert!(EigConfig::new(Extreme::Max, 1e-8, 0).is_err());
    }
}
