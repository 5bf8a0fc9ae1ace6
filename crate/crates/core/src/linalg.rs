//! Dense symmetric matrices, Cholesky solves and a cyclic Jacobi eigensolver.
//!
//! Storage is full row-major `n × n`. Symmetry is enforced at construction so
//! every consumer may read either triangle.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance used when accepting nearly-symmetric input.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Sweep cap for [`jacobi_eigs`].
pub const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix must have at least one row")]
    Empty,
    #[error("row {row} has {found} entries, expected {expected}")]
    NotSquare {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("matrix is not symmetric at ({i}, {j}): {upper} vs {lower}")]
    Asymmetric {
        i: usize,
        j: usize,
        upper: f64,
        lower: f64,
    },
    #[error("non-finite entry at ({i}, {j})")]
    NonFinite { i: usize, j: usize },
    #[error("matrix is not positive definite (pivot {pivot:e} at column {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Dense symmetric `n × n` matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds a matrix from rows, rejecting asymmetry beyond [`SYMMETRY_TOL`]
    /// relative to the largest entry. Accepted input is symmetrized exactly.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let n = rows.len();
        if n == 0 {
            return Err(LinalgError::Empty);
        }
        let mut data = Vec::with_capacity(n * n);
        for (row, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n {
                return Err(LinalgError::NotSquare {
                    row,
                    expected: n,
                    found: r.len(),
                });
            }
            for (j, &v) in r.iter().enumerate() {
                if !v.is_finite() {
                    return Err(LinalgError::NonFinite { i: row, j });
                }
            }
            data.extend_from_slice(r);
        }
        Self::from_dense(n, data)
    }

    fn from_dense(n: usize, mut data: Vec<f64>) -> Result<Self, LinalgError> {
        let scale = data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in (i + 1)..n {
                let upper = data[i * n + j];
                let lower = data[j * n + i];
                if (upper - lower).abs() > SYMMETRY_TOL * scale {
                    return Err(LinalgError::Asymmetric { i, j, upper, lower });
                }
                let mean = 0.5 * (upper + lower);
                data[i * n + j] = mean;
                data[j * n + i] = mean;
            }
        }
        Ok(Self { n, data })
    }

    /// Builds a matrix by evaluating `f(i, j)` on the lower triangle (`i >= j`)
    /// and mirroring.
    pub fn from_lower_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(n >= 1, "matrix dimension must be positive");
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_lower_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diag(d: &[f64]) -> Self {
        Self::from_lower_fn(d.len(), |i, j| if i == j { d[i] } else { 0.0 })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Returns `alpha * I + beta * self`.
    pub fn scaled_shift(&self, alpha: f64, beta: f64) -> Self {
        let n = self.n;
        let mut data: Vec<f64> = self.data.iter().map(|v| beta * v).collect();
        for i in 0..n {
            data[i * n + i] += alpha;
        }
        Self { n, data }
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        self.check_len(v.len())?;
        Ok(self.mul_vec(v))
    }

    /// `self · v` without a length check.
    pub(crate) fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.rows().map(|r| dot(r, v)).collect()
    }

    pub fn quadratic_form(&self, v: &[f64]) -> Result<f64, LinalgError> {
        self.check_len(v.len())?;
        Ok(dot(v, &self.mul_vec(v)))
    }

    fn check_len(&self, found: usize) -> Result<(), LinalgError> {
        if found != self.n {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n,
                found,
            });
        }
        Ok(())
    }

    /// Serializes to the text format accepted by [`SymMatrix::from_str`].
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for r in self.rows() {
            let line: Vec<String> = r.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = LinalgError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        Self::from_rows(&rows)
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(m: SymMatrix) -> Self {
        m.rows().map(<[f64]>::to_vec).collect()
    }
}

/// Text format: first line holds `n`, followed by `n` lines of `n`
/// whitespace-separated reals. Blank lines are ignored.
impl FromStr for SymMatrix {
    type Err = LinalgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut lines = s
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (first, header) = lines.next().ok_or(LinalgError::Empty)?;
        let n: usize = header.parse().map_err(|_| LinalgError::Parse {
            line: first,
            message: format!("expected matrix dimension, found {header:?}"),
        })?;
        if n == 0 {
            return Err(LinalgError::Empty);
        }
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let (line, text) = lines.next().ok_or(LinalgError::Parse {
                line: first,
                message: format!("expected {n} rows, found {}", rows.len()),
            })?;
            let row = parse_reals(text).map_err(|message| LinalgError::Parse { line, message })?;
            if row.len() != n {
                return Err(LinalgError::Parse {
                    line,
                    message: format!("expected {n} values, found {}", row.len()),
                });
            }
            rows.push(row);
        }
        if let Some((line, _)) = lines.next() {
            return Err(LinalgError::Parse {
                line,
                message: "trailing data after matrix".into(),
            });
        }
        Self::from_rows(&rows)
    }
}

/// Reals separated by whitespace and/or commas.
pub fn parse_reals(text: &str) -> Result<Vec<f64>, String> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("invalid number {t:?}"))
        })
        .collect()
}

/// Lower-triangular Cholesky factor `L` with `L·Lᵀ = A`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    n: usize,
    lower: Vec<f64>,
}

impl CholeskyFactor {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.n + j]
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
        cholesky_solve(self, rhs)
    }
}

/// Factors `m = L·Lᵀ`. A pivot at or below `n · ε · max|diag|` is reported as
/// [`LinalgError::NotPositiveDefinite`].
pub fn cholesky_factor(m: &SymMatrix) -> Result<CholeskyFactor, LinalgError> {
    let n = m.n();
    let max_diag = (0..n).fold(0.0f64, |acc, i| acc.max(m.get(i, i).abs()));
    let tol = n as f64 * f64::EPSILON * max_diag;
    let mut lower = vec![0.0; n * n];
    for j in 0..n {
        let mut pivot = m.get(j, j);
        for k in 0..j {
            pivot -= lower[j * n + k] * lower[j * n + k];
        }
        if !(pivot > tol) {
            return Err(LinalgError::NotPositiveDefinite { index: j, pivot });
        }
        let ljj = pivot.sqrt();
        lower[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= lower[i * n + k] * lower[j * n + k];
            }
            lower[i * n + j] = s / ljj;
        }
    }
    Ok(CholeskyFactor { n, lower })
}

/// Forward then backward substitution.
pub fn cholesky_solve(f: &CholeskyFactor, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = f.n;
    if rhs.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: rhs.len(),
        });
    }
    let l = &f.lower;
    let mut y = rhs.to_vec();
    for i in 0..n {
        let s = dot(&l[i * n..i * n + i], &y[..i]);
        y[i] = (y[i] - s) / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    Ok(y)
}

/// Full symmetric eigendecomposition with eigenvalues in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// `vectors[i]` is the unit eigenvector belonging to `values[i]`.
    pub vectors: Vec<Vec<f64>>,
}

impl SymEigen {
    pub fn min(&self) -> (f64, &[f64]) {
        (self.values[0], &self.vectors[0])
    }

    pub fn max(&self) -> (f64, &[f64]) {
        let last = self.values.len() - 1;
        (self.values[last], &self.vectors[last])
    }
}

/// Cyclic Jacobi rotations.
pub fn jacobi_eigs(m: &SymMatrix) -> Result<SymEigen, LinalgError> {
    let n = m.n();
    let mut a = m.data.clone();
    let mut v = SymMatrix::identity(n).data;
    let frob = m.frobenius_norm();

    let off_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += a[i * n + j] * a[i * n + j];
            }
        }
        s.sqrt()
    };

    let mut converged = n == 1 || frob == 0.0;
    let mut sweep = 0;
    while !converged && sweep < JACOBI_MAX_SWEEPS {
        let off = off_norm(&a);
        if off == 0.0 || off <= 1e-18 * frob {
            converged = true;
            break;
        }
        sweep += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                // Entries negligible against both diagonals are dropped once
                // the first few sweeps have done the heavy lifting.
                let g = 100.0 * apq.abs();
                if sweep > 4 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                let h = t * apq;
                a[p * n + p] = app - h;
                a[q * n + q] = aqq + h;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r != p && r != q {
                        let arp = a[r * n + p];
                        let arq = a[r * n + q];
                        let new_rp = arp - s * (arq + arp * tau);
                        let new_rq = arq + s * (arp - arq * tau);
                        a[r * n + p] = new_rp;
                        a[p * n + r] = new_rp;
                        a[r * n + q] = new_rq;
                        a[q * n + r] = new_rq;
                    }
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = vrp - s * (vrq + vrp * tau);
                    v[r * n + q] = vrq + s * (vrp - vrq * tau);
                }
            }
        }
    }
    if !converged {
        let off = off_norm(&a);
        if !(off == 0.0 || off <= 1e-18 * frob) {
            return Err(LinalgError::NoConvergence { sweeps: sweep });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&col| (0..n).map(|r| v[r * n + col]).collect())
        .collect();
    Ok(SymEigen { values, vectors })
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// `y += alpha * x`
#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
