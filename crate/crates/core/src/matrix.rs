//! Dense complex matrices and the handful of decompositions the rest of the
//! crate relies on.
//!
//! Qubit ordering is big-endian throughout: qubit 1 is the leftmost tensor
//! factor, so basis index `0b011` on three qubits is `|011>`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Entrywise tolerance on `|M - M^dag|` for Hermitian inputs.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Allowed deviation of a density matrix trace from one.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue a density matrix may carry.
pub const PSD_TOL: f64 = 1e-10;
/// Eigenvalues in `[-NEGATIVE_CLAMP, 0)` are roundoff and clamp to zero.
pub const NEGATIVE_CLAMP: f64 = 1e-8;
/// Default absolute threshold for numerical rank.
pub const RANK_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from rows, checking squareness and finiteness.
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::NotSquare {
                    rows: dim,
                    row: i,
                    cols: row.len(),
                });
            }
            for (j, z) in row.into_iter().enumerate() {
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                data.push(z);
            }
        }
        Ok(Self { dim, data })
    }

    /// Real matrix from a row-major slice of length `dim * dim`.
    pub fn from_real(dim: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), dim * dim, "expected {} entries", dim * dim);
        Self {
            dim,
            data: entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    /// `|v><v|`
    pub fn outer(v: &[Complex64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |M - M^dag|` entrywise.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `self * v`
    pub fn apply_to(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.dim, v.len());
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `self * rho * self^dag`
    pub fn conjugate(&self, rho: &Self) -> Self {
        self.matmul(rho).matmul(&self.adjoint())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = self
                .row(i)
                .iter()
                .map(|z| format!("{:+.4}{:+.4}i", z.re, z.im))
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (da, db) = (a.dim, b.dim);
    let dim = da * db;
    let mut out = ComplexMatrix::zeros(dim);
    for ai in 0..da {
        for aj in 0..da {
            let s = a[(ai, aj)];
            if s == ZERO {
                continue;
            }
            for bi in 0..db {
                for bj in 0..db {
                    out[(ai * db + bi, aj * db + bj)] = s * b[(bi, bj)];
                }
            }
        }
    }
    out
}

/// Kronecker product of a list of factors, leftmost factor first.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1), |acc, f| kron(&acc, f))
}

/// Eigendecomposition of a Hermitian matrix; eigenvalues descending and
/// eigenvectors stored as the matching columns of `vectors`.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigen {
    /// `V diag(f(lambda)) V^dag`
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.vectors.dim;
        let mut out = ComplexMatrix::zeros(n);
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = self.vectors[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vi * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|x| x)
    }
}

/// Cyclic-Jacobi eigendecomposition of a Hermitian matrix.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<Eigen> {
    let residual = m.hermiticity_residual();
    if residual > HERMITIAN_TOL {
        return Err(Error::NotHermitian { residual });
    }
    Ok(jacobi_eig(m))
}

const MAX_SWEEPS: usize = 100;

/// Jacobi sweeps run until every off-diagonal modulus is below machine
/// precision relative to the Frobenius norm (well inside the 1e-12 absolute
/// target for unit-scale inputs).
fn jacobi_eig(m: &ComplexMatrix) -> Eigen {
    let n = m.dim;
    // Symmetrize so the input is exactly Hermitian.
    let mut a = ComplexMatrix::from_fn(n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()));
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();

    if scale > 0.0 {
        let threshold = f64::EPSILON * scale;
        for _ in 0..MAX_SWEEPS {
            let mut max_off = 0.0_f64;
            for p in 0..n {
                for q in p + 1..n {
                    max_off = max_off.max(a[(p, q)].norm());
                }
            }
            if max_off <= threshold {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&x, &y| diag[y].total_cmp(&diag[x]));
    let values = order.iter().map(|&k| diag[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, |i, j| v[(i, order[j])]);
    Eigen { values, vectors }
}

/// One complex Jacobi rotation annihilating `a[p][q]`.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let phase = apq / g;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * g);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // J restricted to (p, q): [[c, s], [-s e^{-i phi}, c e^{-i phi}]]
    let jpp = Complex64::new(c, 0.0);
    let jpq = Complex64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    let n = a.dim;
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * jpp + akq * jqp;
        a[(k, q)] = akp * jpq + akq * jqq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
}

/// Principal square root of a Hermitian positive semidefinite matrix.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(m)?;
    psd_sqrt_from_eigen(&eig)
}

pub(crate) fn psd_sqrt_from_eigen(eig: &Eigen) -> Result<ComplexMatrix> {
    if let Some(&min) = eig.values.last() {
        if min < -NEGATIVE_CLAMP {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
    }
    Ok(eig.reconstruct_with(|x| x.max(0.0).sqrt()))
}

/// Singular values (descending) of a square complex matrix, read off the
/// positive half of the spectrum of the Hermitian dilation
/// `[[0, T], [T^dag, 0]]`. Absolute accuracy is of order `eps * |T|`,
/// including for the small singular values.
pub fn singular_values(t: &ComplexMatrix) -> Vec<f64> {
    let r = t.dim;
    let mut dilation = ComplexMatrix::zeros(2 * r);
    for i in 0..r {
        for j in 0..r {
            dilation[(i, r + j)] = t[(i, j)];
            dilation[(r + j, i)] = t[(i, j)].conj();
        }
    }
    let eig = jacobi_eig(&dilation);
    eig.values.into_iter().take(r).map(|x| x.max(0.0)).collect()
}

fn qubit_count(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::DimNotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Index map for a qubit relabeling: `map[out] = in`, where output qubit
/// `k` (1-based) carries input qubit `perm[k - 1]`.
pub fn qubit_permutation_map(n_qubits: usize, perm: &[usize]) -> Result<Vec<usize>> {
    let mut seen = vec![false; n_qubits];
    if perm.len() != n_qubits {
        return Err(Error::InvalidPermutation(perm.to_vec()));
    }
    for &q in perm {
        if q == 0 || q > n_qubits || seen[q - 1] {
            return Err(Error::InvalidPermutation(perm.to_vec()));
        }
        seen[q - 1] = true;
    }
    let dim = 1usize << n_qubits;
    let map = (0..dim)
        .map(|out| {
            let mut src = 0usize;
            for (k, &q) in perm.iter().enumerate() {
                let bit = (out >> (n_qubits - 1 - k)) & 1;
                src |= bit << (n_qubits - q);
            }
            src
        })
        .collect();
    Ok(map)
}

/// Relabels qubits so that output qubit `k` is input qubit `perm[k - 1]`
/// (1-based). Pure index shuffling; no arithmetic touches the entries.
pub fn permute_qubits(m: &ComplexMatrix, perm: &[usize]) -> Result<ComplexMatrix> {
    let n = qubit_count(m.dim)?;
    let map = qubit_permutation_map(n, perm)?;
    Ok(ComplexMatrix::from_fn(m.dim, |i, j| m[(map[i], map[j])]))
}

/// Inverse of a 1-based permutation.
pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (k, &q) in perm.iter().enumerate() {
        inv[q - 1] = k + 1;
    }
    inv
}

/// Validated density matrix on `n` qubits. Carries its eigendecomposition,
/// which also backs the numerical rank.
#[derive(Clone)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    n_qubits: usize,
    eigen: Arc<Eigen>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let n_qubits = qubit_count(matrix.dim())?;
        if !matrix.is_finite() {
            return Err(Error::NonFinite { row: 0, col: 0 });
        }
        let residual = matrix.hermiticity_residual();
        if residual > HERMITIAN_TOL {
            return Err(Error::NotHermitian { residual });
        }
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::BadTrace { trace });
        }
        let eigen = jacobi_eig(&matrix);
        let min = eigen.values.last().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
        Ok(Self {
            matrix,
            n_qubits,
            eigen: Arc::new(eigen),
        })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn eigen(&self) -> &Eigen {
        &self.eigen
    }

    /// Eigenvalues, descending.
    pub fn spectrum(&self) -> &[f64] {
        &self.eigen.values
    }

    pub fn rank(&self) -> usize {
        self.rank_with_tol(RANK_TOL)
    }

    pub fn rank_with_tol(&self, tol: f64) -> usize {
        self.eigen.values.iter().filter(|&&x| x > tol).count()
    }

    /// Qubit relabeling; the eigendecomposition is carried over by the same
    /// index shuffle instead of being recomputed.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let map = qubit_permutation_map(self.n_qubits, perm)?;
        let dim = self.dim();
        let matrix = ComplexMatrix::from_fn(dim, |i, j| self.matrix[(map[i], map[j])]);
        let vectors = ComplexMatrix::from_fn(dim, |i, k| self.eigen.vectors[(map[i], k)]);
        let eigen = Eigen {
            values: self.eigen.values.clone(),
            vectors,
        };
        Ok(Self {
            matrix,
            n_qubits: self.n_qubits,
            eigen: Arc::new(eigen),
        })
    }
}

impl fmt::Debug for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityMatrix")
            .field("n_qubits", &self.n_qubits)
            .field("spectrum", &self.eigen.values)
            .field("matrix", &self.matrix)
            .finish()
    }
}

/// Number of eigenvalues above [`RANK_TOL`].
pub fn numerical_rank(rho: &DensityMatrix) -> usize {
    rho.rank()
}

/// Pauli matrices `I, X, Y, Z`.
pub mod pauli {
    use super::ComplexMatrix;
    use num_complex::Complex64;

    pub fn i2() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0])
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 1) => Complex64::new(0.0, -1.0),
            (1, 0) => Complex64::new(0.0, 1.0),
            _ => Complex64::new(0.0, 0.0),
        })
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_real(2, &[1.0, 0.0, 0.0, -1.0])
    }
}
