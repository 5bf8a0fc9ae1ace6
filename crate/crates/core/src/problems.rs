//! Test problems with analytic derivatives, the 16×16 Toeplitz eigenvalue
//! fixture, and central-difference derivative checks.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{cholesky_factor, norm_inf, LinalgError, SymMatrix};

pub type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type HessFn = Arc<dyn Fn(&[f64]) -> SymMatrix + Send + Sync>;

/// Relative gradient error accepted by [`DerivativeReport::passed`].
pub const GRAD_TOL: f64 = 1e-6;
/// Relative Hessian error accepted by [`DerivativeReport::passed`].
pub const HESS_TOL: f64 = 1e-4;
/// Seed for the perturbed check points.
pub const CHECK_SEED: u64 = 0x006d_4e65_7774_6f6e;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("quadratic model matrix must be positive definite")]
    NotPositiveDefinite(#[source] LinalgError),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("objective is not finite at finite-difference point {index}")]
    NonFinite { index: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnownMin {
    pub x: Vec<f64>,
    pub f: f64,
}

/// An objective with analytic first and second derivatives.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub dim: usize,
    pub x0: Vec<f64>,
    pub known_min: Option<KnownMin>,
    f: ValueFn,
    grad: GradFn,
    hess: HessFn,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("x0", &self.x0)
            .field("known_min", &self.known_min)
            .finish_non_exhaustive()
    }
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        x0: Vec<f64>,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        hess: impl Fn(&[f64]) -> SymMatrix + Send + Sync + 'static,
    ) -> Self {
        assert!(!x0.is_empty(), "problem dimension must be positive");
        Self {
            name: name.into(),
            dim: x0.len(),
            x0,
            known_min: None,
            f: Arc::new(f),
            grad: Arc::new(grad),
            hess: Arc::new(hess),
        }
    }

    pub fn with_known_min(mut self, x: Vec<f64>, f: f64) -> Self {
        assert_eq!(x.len(), self.dim);
        self.known_min = Some(KnownMin { x, f });
        self
    }

    pub fn with_start(mut self, x0: Vec<f64>) -> Self {
        assert_eq!(x0.len(), self.dim);
        self.x0 = x0;
        self
    }

    /// Replaces the gradient evaluator, keeping everything else.
    pub fn with_gradient(
        mut self,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.grad = Arc::new(grad);
        self
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    #[inline]
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.grad)(x)
    }

    #[inline]
    pub fn hessian(&self, x: &[f64]) -> SymMatrix {
        (self.hess)(x)
    }
}

fn sym2(h11: f64, h12: f64, h22: f64) -> SymMatrix {
    SymMatrix::from_lower_fn(2, |i, j| match (i, j) {
        (0, 0) => h11,
        (1, 1) => h22,
        _ => h12,
    })
}

/// `100(x₂ − x₁²)² + (1 − x₁)²` from `(−1.9, 2.0)`.
pub fn rosenbrock() -> Problem {
    Problem::new(
        "rosenbr",
        vec![-1.9, 2.0],
        |x| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2),
        |x| {
            let t = x[1] - x[0] * x[0];
            vec![-400.0 * x[0] * t - 2.0 * (1.0 - x[0]), 200.0 * t]
        },
        |x| {
            sym2(
                1200.0 * x[0] * x[0] - 400.0 * x[1] + 2.0,
                -400.0 * x[0],
                200.0,
            )
        },
    )
    .with_known_min(vec![1.0, 1.0], 0.0)
}

const BEALE_C: [f64; 3] = [1.5, 2.25, 2.625];

/// `Σᵢ (cᵢ − x₁(1 − x₂ⁱ))²`, `c = (1.5, 2.25, 2.625)`.
pub fn beale() -> Problem {
    // residual r_i, its gradient and Hessian for i = 1..3
    fn terms(x: &[f64]) -> impl Iterator<Item = (f64, [f64; 2], [f64; 3])> + '_ {
        (1..=3).map(move |i| {
            let fi = i as f64;
            let p = x[1].powi(i);
            let r = BEALE_C[i as usize - 1] - x[0] * (1.0 - p);
            let dr = [-(1.0 - p), x[0] * fi * x[1].powi(i - 1)];
            let d2r12 = fi * x[1].powi(i - 1);
            let d2r22 = if i >= 2 {
                x[0] * fi * (fi - 1.0) * x[1].powi(i - 2)
            } else {
                0.0
            };
            (r, dr, [0.0, d2r12, d2r22])
        })
    }
    Problem::new(
        "beale",
        vec![1.0, 1.0],
        |x| terms(x).map(|(r, _, _)| r * r).sum(),
        |x| {
            terms(x).fold(vec![0.0; 2], |mut g, (r, dr, _)| {
                g[0] += 2.0 * r * dr[0];
                g[1] += 2.0 * r * dr[1];
                g
            })
        },
        |x| {
            let mut h = [0.0; 3];
            for (r, dr, d2r) in terms(x) {
                h[0] += 2.0 * (dr[0] * dr[0] + r * d2r[0]);
                h[1] += 2.0 * (dr[0] * dr[1] + r * d2r[1]);
                h[2] += 2.0 * (dr[1] * dr[1] + r * d2r[2]);
            }
            sym2(h[0], h[1], h[2])
        },
    )
    .with_known_min(vec![3.0, 0.5], 0.0)
}

/// `(x₁ − 1)² + 100(x₂ − x₁³)²` from `(−1.2, 1)`.
pub fn cube() -> Problem {
    Problem::new(
        "cube",
        vec![-1.2, 1.0],
        |x| (x[0] - 1.0).powi(2) + 100.0 * (x[1] - x[0].powi(3)).powi(2),
        |x| {
            let t = x[1] - x[0].powi(3);
            vec![2.0 * (x[0] - 1.0) - 600.0 * x[0] * x[0] * t, 200.0 * t]
        },
        |x| {
            let t = x[1] - x[0].powi(3);
            sym2(
                2.0 + 1800.0 * x[0].powi(4) - 1200.0 * x[0] * t,
                -600.0 * x[0] * x[0],
                200.0,
            )
        },
    )
    .with_known_min(vec![1.0, 1.0], 0.0)
}

/// `3x₁⁴ − 2x₁²x₂² + 3x₂⁴` from `(1, 0.1)`; singular Hessian at the minimizer.
pub fn sisser() -> Problem {
    Problem::new(
        "sisser",
        vec![1.0, 0.1],
        |x| {
            let (a, b) = (x[0] * x[0], x[1] * x[1]);
            3.0 * a * a - 2.0 * a * b + 3.0 * b * b
        },
        |x| {
            vec![
                12.0 * x[0].powi(3) - 4.0 * x[0] * x[1] * x[1],
                12.0 * x[1].powi(3) - 4.0 * x[0] * x[0] * x[1],
            ]
        },
        |x| {
            sym2(
                36.0 * x[0] * x[0] - 4.0 * x[1] * x[1],
                -8.0 * x[0] * x[1],
                36.0 * x[1] * x[1] - 4.0 * x[0] * x[0],
            )
        },
    )
    .with_known_min(vec![0.0, 0.0], 0.0)
}

/// `x₁⁴ + (x₁ + x₂)² + (eˣ² − 1)²` from `(1, 1)`.
pub fn denschna() -> Problem {
    Problem::new(
        "denschna",
        vec![1.0, 1.0],
        |x| x[0].powi(4) + (x[0] + x[1]).powi(2) + (x[1].exp() - 1.0).powi(2),
        |x| {
            let s = x[0] + x[1];
            let e = x[1].exp();
            vec![4.0 * x[0].powi(3) + 2.0 * s, 2.0 * s + 2.0 * (e - 1.0) * e]
        },
        |x| {
            let e = x[1].exp();
            sym2(12.0 * x[0] * x[0] + 2.0, 2.0, 2.0 + 4.0 * e * e - 2.0 * e)
        },
    )
    .with_known_min(vec![0.0, 0.0], 0.0)
}

/// `(x₁ − 2)² + (x₁ − 2)²x₂² + (x₂ + 1)²` from `(1, 1)`.
pub fn denschnb() -> Problem {
    Problem::new(
        "denschnb",
        vec![1.0, 1.0],
        |x| {
            let u = x[0] - 2.0;
            u * u + u * u * x[1] * x[1] + (x[1] + 1.0).powi(2)
        },
        |x| {
            let u = x[0] - 2.0;
            vec![
                2.0 * u * (1.0 + x[1] * x[1]),
                2.0 * u * u * x[1] + 2.0 * (x[1] + 1.0),
            ]
        },
        |x| {
            let u = x[0] - 2.0;
            sym2(2.0 * (1.0 + x[1] * x[1]), 4.0 * u * x[1], 2.0 * u * u + 2.0)
        },
    )
    .with_known_min(vec![2.0, -1.0], 0.0)
}

/// Helical valley `100[(x₃ − 10θ)² + (r − 1)²] + x₃²` from `(−1, 0, 0)`, with
/// `r = √(x₁² + x₂²)` and `2πθ = atan(x₂/x₁)`, shifted by `π` for `x₁ < 0`.
pub fn helix() -> Problem {
    use std::f64::consts::PI;

    struct Parts {
        u: f64,
        r: f64,
        dtheta: [f64; 2],
        d2theta: [f64; 3],
        dr: [f64; 2],
        d2r: [f64; 3],
    }

    fn parts(x: &[f64]) -> Parts {
        let (x1, x2) = (x[0], x[1]);
        let r2 = x1 * x1 + x2 * x2;
        let r = r2.sqrt();
        let mut theta = (x2 / x1).atan() / (2.0 * PI);
        if x1 < 0.0 {
            theta += 0.5;
        }
        let k = 1.0 / (2.0 * PI);
        let r4 = r2 * r2;
        let r3 = r2 * r;
        Parts {
            u: x[2] - 10.0 * theta,
            r,
            dtheta: [-k * x2 / r2, k * x1 / r2],
            d2theta: [
                k * 2.0 * x1 * x2 / r4,
                k * (x2 * x2 - x1 * x1) / r4,
                -k * 2.0 * x1 * x2 / r4,
            ],
            dr: [x1 / r, x2 / r],
            d2r: [x2 * x2 / r3, -x1 * x2 / r3, x1 * x1 / r3],
        }
    }

    Problem::new(
        "helix",
        vec![-1.0, 0.0, 0.0],
        |x| {
            let p = parts(x);
            100.0 * (p.u * p.u + (p.r - 1.0).powi(2)) + x[2] * x[2]
        },
        |x| {
            let p = parts(x);
            let g = |i: usize| -2000.0 * p.u * p.dtheta[i] + 200.0 * (p.r - 1.0) * p.dr[i];
            vec![g(0), g(1), 200.0 * p.u + 2.0 * x[2]]
        },
        |x| {
            let p = parts(x);
            // index into the packed (11, 12, 22) second derivatives
            let h = |i: usize, j: usize| {
                let k = i + j;
                20000.0 * p.dtheta[i] * p.dtheta[j] - 2000.0 * p.u * p.d2theta[k]
                    + 200.0 * p.dr[i] * p.dr[j]
                    + 200.0 * (p.r - 1.0) * p.d2r[k]
            };
            SymMatrix::from_lower_fn(3, |i, j| match (i, j) {
                (2, 2) => 202.0,
                (2, j) => -2000.0 * p.dtheta[j],
                (i, j) => h(i, j),
            })
        },
    )
    .with_known_min(vec![1.0, 0.0, 0.0], 0.0)
}

/// `½xᵀAx − bᵀx` for positive definite `A`, started at the origin.
pub fn quadratic(a: SymMatrix, b: Vec<f64>) -> Result<Problem, ProblemError> {
    let n = a.n();
    if b.len() != n {
        return Err(ProblemError::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    let factor = cholesky_factor(&a).map_err(ProblemError::NotPositiveDefinite)?;
    let x_star = factor
        .solve(&b)
        .map_err(ProblemError::NotPositiveDefinite)?;
    let f = {
        let (a, b) = (a.clone(), b.clone());
        move |x: &[f64]| 0.5 * a.quadratic_form(x).unwrap() - crate::linalg::dot(&b, x)
    };
    let f_star = f(&x_star);
    let grad = {
        let (a, b) = (a.clone(), b.clone());
        move |x: &[f64]| {
            let mut g = a.matvec(x).unwrap();
            g.iter_mut().zip(&b).for_each(|(gi, bi)| *gi -= bi);
            g
        }
    };
    Ok(
        Problem::new("quadratic", vec![0.0; n], f, grad, move |_| a.clone())
            .with_known_min(x_star, f_star),
    )
}

/// The registry's `quadratic`: `A = diag(1, 2)`, `b = (1, 2)`, start `(5, 5)`.
pub fn quadratic_fixture() -> Problem {
    quadratic(SymMatrix::diag(&[1.0, 2.0]), vec![1.0, 2.0])
        .expect("diag(1,2) is positive definite")
        .with_start(vec![5.0, 5.0])
}

/// First row of the symmetric Toeplitz eigenvalue fixture.
pub const TOEPLITZ_COEFFS: [f64; 16] = [
    1.00000000,
    0.91189350,
    0.75982820,
    0.59792770,
    0.41953610,
    0.27267350,
    0.13446390,
    0.00821722,
    -0.09794101,
    -0.21197350,
    -0.30446960,
    -0.34471370,
    -0.34736840,
    -0.32881280,
    -0.29269750,
    -0.24512650,
];

/// Reference smallest eigenvalue of [`toeplitz_rayleigh`].
pub const TOEPLITZ_LAMBDA_MIN: f64 = 0.00325850037049;

/// 16×16 symmetric Toeplitz matrix with entries `r_|i−j|`.
pub fn toeplitz_rayleigh() -> SymMatrix {
    SymMatrix::from_lower_fn(16, |i, j| TOEPLITZ_COEFFS[i - j])
}

/// Every shipped problem, sorted by name.
pub fn standard_set() -> Vec<Problem> {
    let mut set = vec![
        beale(),
        cube(),
        denschna(),
        denschnb(),
        helix(),
        quadratic_fixture(),
        rosenbrock(),
        sisser(),
    ];
    set.sort_by(|a, b| a.name.cmp(&b.name));
    set
}

pub fn problem_names() -> Vec<String> {
    standard_set().into_iter().map(|p| p.name).collect()
}

pub fn by_name(name: &str) -> Option<Problem> {
    standard_set().into_iter().find(|p| p.name == name)
}

/// Finite-difference step used by [`check_derivatives`].
pub fn fd_step(x: &[f64]) -> f64 {
    1e-6 * (1.0 + norm_inf(x))
}

/// Central differences `(f(x + h·eᵢ) − f(x − h·eᵢ)) / 2h`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Result<Vec<f64>, ProblemError> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let fp = f(&probe);
            probe[i] = x[i] - h;
            let fm = f(&probe);
            probe[i] = x[i];
            if !(fp.is_finite() && fm.is_finite()) {
                return Err(ProblemError::NonFinite { index: i });
            }
            Ok((fp - fm) / (2.0 * h))
        })
        .collect()
}

/// Central differences of a gradient; column `j` approximates `∂g/∂xⱼ`.
pub fn fd_jacobian(
    g: impl Fn(&[f64]) -> Vec<f64>,
    x: &[f64],
    h: f64,
) -> Result<Vec<Vec<f64>>, ProblemError> {
    let n = x.len();
    let mut probe = x.to_vec();
    let mut jac = vec![vec![0.0; n]; n];
    for j in 0..n {
        probe[j] = x[j] + h;
        let gp = g(&probe);
        probe[j] = x[j] - h;
        let gm = g(&probe);
        probe[j] = x[j];
        if gp.len() != n || gm.len() != n {
            return Err(ProblemError::DimensionMismatch {
                expected: n,
                found: gp.len().min(gm.len()),
            });
        }
        for i in 0..n {
            let v = (gp[i] - gm[i]) / (2.0 * h);
            if !v.is_finite() {
                return Err(ProblemError::NonFinite { index: j });
            }
            jac[i][j] = v;
        }
    }
    Ok(jac)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeReport {
    pub point: Vec<f64>,
    /// `‖g − g_fd‖∞ / (1 + ‖g_fd‖∞)`
    pub grad_error: f64,
    /// `max|H − H_fd| / (1 + max|H_fd|)`
    pub hess_error: f64,
}

impl DerivativeReport {
    pub fn passed(&self) -> bool {
        self.grad_error < GRAD_TOL && self.hess_error < HESS_TOL
    }
}

/// Compares the analytic gradient and Hessian of `p` against central
/// differences at `x`. Shape mismatches and non-finite stencils report an
/// infinite error rather than failing.
pub fn check_derivatives(p: &Problem, x: &[f64]) -> DerivativeReport {
    let h = fd_step(x);
    let rel = |diff: f64, scale: f64| diff / (1.0 + scale);

    let g = p.gradient(x);
    let grad_error = match fd_gradient(|y| p.value(y), x, h) {
        Ok(fd) if fd.len() == g.len() => rel(
            g.iter()
                .zip(&fd)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())),
            norm_inf(&fd),
        ),
        _ => f64::INFINITY,
    };

    let hm = p.hessian(x);
    let hess_error = match fd_jacobian(|y| p.gradient(y), x, h) {
        Ok(fd) if hm.n() == x.len() => {
            let mut diff = 0.0f64;
            let mut scale = 0.0f64;
            for (i, row) in fd.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    diff = diff.max((hm.get(i, j) - v).abs());
                    scale = scale.max(v.abs());
                }
            }
            rel(diff, scale)
        }
        _ => f64::INFINITY,
    };

    DerivativeReport {
        point: x.to_vec(),
        grad_error,
        hess_error,
    }
}

/// The default start followed by `extra` seeded perturbations of it (each
/// coordinate moved uniformly within ±0.5).
pub fn check_points(p: &Problem, extra: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(CHECK_SEED);
    let mut points = vec![p.x0.clone()];
    points.extend((0..extra).map(|_| {
        p.x0.iter()
            .map(|v| v + rng.random_range(-0.5..0.5))
            .collect::<Vec<f64>>()
    }));
    points
}

/// [`check_derivatives`] at the default start and five seeded points.
pub fn check_problem(p: &Problem) -> Vec<DerivativeReport> {
    check_points(p, 5)
        .iter()
        .map(|x| check_derivatives(p, x))
        .collect()
}
