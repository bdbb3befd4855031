//! Small dense complex linear algebra for polarization density matrices.
//!
//! Everything here targets dimensions of at most 16 (two qubits in practice), so the
//! eigensolver is a plain cyclic Jacobi iteration on the Hermitian matrix and
//! matrices are stored row-major in a `Vec`.

use std::fmt;
use std::ops::{Add, Index, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `max |m - m†|` accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Tolerance on `|Tr ρ - 1|`.
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues in `[-PSD_TOL, 0)` are clamped to zero; anything below is rejected.
pub const PSD_TOL: f64 = 1e-9;

const JACOBI_TOL: f64 = 1e-13;
const MAX_SWEEPS: usize = 64;

/// Eigenvalues of a density matrix at or below this floor are treated as exact zeros
/// when building the concurrence's subnormalized eigenvectors.
const RANK_FLOOR: f64 = 1e-14;

/// Square complex matrix in row-major storage with finite entries.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl TryFrom<RawMatrix> for ComplexMatrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        ComplexMatrix::from_vec(raw.dim, raw.data)
    }
}

impl From<ComplexMatrix> for RawMatrix {
    fn from(m: ComplexMatrix) -> Self {
        RawMatrix {
            dim: m.dim,
            data: m.data,
        }
    }
}

impl ComplexMatrix {
    pub fn from_vec(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::NotSquare {
                rows: dim,
                cols: data.len().checked_div(dim).unwrap_or(0),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::NotSquare {
                rows: dim,
                cols: rows.first().map_or(0, |r| r.len()),
            });
        }
        let data = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        Self::from_vec(dim, data)
    }

    /// Builds a matrix from `f(row, col)`. Panics if `f` yields a non-finite value.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self::from_vec(dim, data).expect("from_fn produced an invalid matrix")
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_fn(dim, |_, _| Complex64::new(0.0, 0.0))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
    }

    /// Projector `|v⟩⟨v|` (not normalized).
    pub fn outer(v: &[Complex64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    /// Entry-wise complex conjugate.
    pub fn conj(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(i, j)].conj())
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::from_fn(self.dim, |i, j| self[(i, j)] * k)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// `max |m_ij - conj(m_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Conjugation `u · self · u†`.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Result<Self> {
        let left = (u * self)?;
        &left * &u.adjoint()
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Sub for &ComplexMatrix {
    type Output = Result<ComplexMatrix>;

    fn sub(self, rhs: Self) -> Result<ComplexMatrix> {
        self.check_same_dim(rhs)?;
        Ok(ComplexMatrix::from_fn(self.dim, |i, j| self[(i, j)] - rhs[(i, j)]))
    }
}

impl Add for &ComplexMatrix {
    type Output = Result<ComplexMatrix>;

    fn add(self, rhs: Self) -> Result<ComplexMatrix> {
        self.check_same_dim(rhs)?;
        Ok(ComplexMatrix::from_fn(self.dim, |i, j| self[(i, j)] + rhs[(i, j)]))
    }
}

impl Mul for &ComplexMatrix {
    type Output = Result<ComplexMatrix>;

    fn mul(self, rhs: Self) -> Result<ComplexMatrix> {
        self.check_same_dim(rhs)?;
        let n = self.dim;
        Ok(ComplexMatrix::from_fn(n, |i, j| {
            (0..n).map(|k| self[(i, k)] * rhs[(k, j)]).sum()
        }))
    }
}

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and the matching
/// orthonormal eigenvectors, stored as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// Column `k` of the eigenvector matrix.
    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        (0..self.vectors.dim).map(|i| self.vectors[(i, k)]).collect()
    }

    /// `V · diag(f(λ)) · V†`.
    pub fn reconstruct(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.vectors.dim;
        let mapped: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        ComplexMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| self.vectors[(i, k)] * self.vectors[(j, k)].conj() * mapped[k])
                .sum()
        })
    }
}

/// Rotation that zeroes the off-diagonal element of the Hermitian 2×2 block
/// `[[app, apq], [conj(apq), aqq]]`, returned as `(c, s, d)` for
/// `G = [[c, s], [-s·d, c·d]]` with `|d| = 1`.
fn jacobi_rotation(app: f64, aqq: f64, apq: Complex64) -> (f64, f64, Complex64) {
    let mag = apq.norm();
    let d = (apq / mag).conj();
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    (c, t * c, d)
}

/// Right-multiplies columns `p`, `q` of a row-major `rows × cols` buffer by `G`.
fn rotate_columns(buf: &mut [Complex64], rows: usize, cols: usize, p: usize, q: usize, g: (f64, f64, Complex64)) {
    let (c, s, d) = g;
    for k in 0..rows {
        let xp = buf[k * cols + p];
        let xq = buf[k * cols + q];
        buf[k * cols + p] = xp * c - xq * d * s;
        buf[k * cols + q] = xp * s + xq * d * c;
    }
}

/// Cyclic Jacobi eigendecomposition. Errors if `m` is not Hermitian within
/// [`HERMITIAN_TOL`].
pub fn eigh(m: &ComplexMatrix) -> Result<HermitianEigen> {
    let dev = m.hermitian_deviation();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let n = m.dim;
    // symmetrize so the iteration sees an exactly Hermitian matrix
    let mut a: Vec<Complex64> = ComplexMatrix::from_fn(n, |i, j| {
        if i == j {
            Complex64::new(m[(i, i)].re, 0.0)
        } else {
            (m[(i, j)] + m[(j, i)].conj()) * 0.5
        }
    })
    .data;
    let mut v = ComplexMatrix::identity(n).data;
    let scale = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1.0);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off < JACOBI_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.norm() == 0.0 {
                    continue;
                }
                let g = jacobi_rotation(a[p * n + p].re, a[q * n + q].re, apq);
                rotate_columns(&mut a, n, n, p, q, g);
                // rows: A <- G† A
                let (c, s, d) = g;
                for k in 0..n {
                    let xp = a[p * n + k];
                    let xq = a[q * n + k];
                    a[p * n + k] = xp * c - xq * d.conj() * s;
                    a[q * n + k] = xp * s + xq * d.conj() * c;
                }
                a[p * n + q] = Complex64::new(0.0, 0.0);
                a[q * n + p] = Complex64::new(0.0, 0.0);
                a[p * n + p].im = 0.0;
                a[q * n + q].im = 0.0;
                rotate_columns(&mut v, n, n, p, q, g);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].re.total_cmp(&a[j * n + j].re));
    let values = order.iter().map(|&k| a[k * n + k].re).collect();
    let vectors = ComplexMatrix::from_fn(n, |i, j| v[i * n + order[j]]);
    Ok(HermitianEigen { values, vectors })
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(eigh(m)?.values)
}

/// Singular values (descending) of a `rows × cols` row-major complex matrix, by
/// one-sided Jacobi orthogonalization of its columns. Small singular values come out
/// with absolute accuracy near machine epsilon times the largest one.
pub fn singular_values(rows: usize, cols: usize, entries: &[Complex64]) -> Vec<f64> {
    assert_eq!(entries.len(), rows * cols);
    let mut a = entries.to_vec();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = Complex64::new(0.0, 0.0);
                for k in 0..rows {
                    let xp = a[k * cols + p];
                    let xq = a[k * cols + q];
                    alpha += xp.norm_sqr();
                    beta += xq.norm_sqr();
                    gamma += xp.conj() * xq;
                }
                if gamma.norm() <= f64::EPSILON * (alpha * beta).sqrt() || gamma.norm() == 0.0 {
                    continue;
                }
                rotated = true;
                let g = jacobi_rotation(alpha, beta, gamma);
                rotate_columns(&mut a, rows, cols, p, q, g);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..cols)
        .map(|j| (0..rows).map(|k| a[k * cols + j].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Hermitian, unit-trace, positive semi-definite matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates `m`. Eigenvalues in `[-PSD_TOL, 0)` are clamped to zero and the
    /// trace renormalized.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let dev = m.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let eig = eigh(&m)?;
        let min = eig.values[0];
        if min < -PSD_TOL {
            return Err(Error::NotPositive(min));
        }
        if min < 0.0 {
            let total: f64 = eig.values.iter().map(|&x| x.max(0.0)).sum();
            let clamped = eig.reconstruct(|x| x.max(0.0) / total);
            return Ok(Self { matrix: clamped });
        }
        Ok(Self { matrix: m })
    }

    /// `|ψ⟩⟨ψ|` for a state vector normalized here.
    pub fn pure(state: &[Complex64]) -> Result<Self> {
        let norm = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NonFinite);
        }
        let v: Vec<Complex64> = state.iter().map(|z| z / norm).collect();
        Self::new(ComplexMatrix::outer(&v))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale(1.0 / dim as f64),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[(i, j)]
    }

    /// Convex combination `w·self + (1-w)·other`.
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        Self::new((&self.matrix.scale(w) + &other.matrix.scale(1.0 - w))?)
    }
}

/// `½ Σ |x_k|` over the eigenvalues of `a - b`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    let diff = (&a.matrix - &b.matrix)?;
    let x = hermitian_eigenvalues(&diff)?;
    Ok(0.5 * x.iter().map(|v| v.abs()).sum::<f64>())
}

/// `Tr ρ²`.
pub fn purity(a: &DensityMatrix) -> f64 {
    // Tr ρ² = Σ_ij |ρ_ij|² for Hermitian ρ
    a.matrix.data.iter().map(|z| z.norm_sqr()).sum()
}

/// Wootters concurrence of a two-qubit state.
///
/// Uses the decomposition `ρ = Σ w_i w_i†` into subnormalized eigenvectors: the
/// square roots of the eigenvalues of `ρ (Y⊗Y) ρ* (Y⊗Y)` are the singular values of
/// `τ_ij = w_iᵀ (Y⊗Y) w_j`.
pub fn concurrence_two_qubit(a: &DensityMatrix) -> Result<f64> {
    if a.dim() != 4 {
        return Err(Error::DimensionMismatch(a.dim(), 4));
    }
    let eig = eigh(&a.matrix)?;
    let w: Vec<Vec<Complex64>> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > RANK_FLOOR)
        .map(|(k, &p)| eig.vector(k).into_iter().map(|z| z * p.sqrt()).collect())
        .collect();
    let r = w.len();
    if r == 0 {
        return Ok(0.0);
    }
    // (Y⊗Y) x in the {HH, HV, VH, VV} basis
    let spin_flip = |x: &[Complex64]| [-x[3], x[2], x[1], -x[0]];
    let mut tau = Vec::with_capacity(r * r);
    for wi in &w {
        for wj in &w {
            let fj = spin_flip(wj);
            tau.push((0..4).map(|k| wi[k] * fj[k]).sum::<Complex64>());
        }
    }
    let mut lambda = singular_values(r, r, &tau);
    lambda.resize(4, 0.0);
    Ok((lambda[0] - lambda[1] - lambda[2] - lambda[3]).max(0.0))
}
