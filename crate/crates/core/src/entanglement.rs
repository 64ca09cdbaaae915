//! Wootters concurrence, the generalized bipartite concurrence built from
//! SO(d) state inversions, and the three-qubit `tau3` lower bound.
//!
//! # Numerical route
//!
//! For a real symmetric inversion operator `S` the nonzero eigenvalues of
//! `rho * S rho^* S` are the squared singular values of `Psi^T S Psi`, where
//! `rho = Psi Psi^dag` comes from the eigendecomposition of `rho`. Every
//! `S_mn = L_m ⊗ L_n` touches only four basis states `I`, so the singular
//! values reduce to those of the 4x4 matrix `F^T S_I F` with `F F^dag`
//! equal to the principal block `rho_I`. Singular values are read off a
//! Hermitian dilation, which keeps the small `lambda`s accurate to roundoff
//! instead of the `sqrt(eps)` a square root of a noisy eigenvalue gives.
//!
//! [`spin_flip_spectrum`] computes the same spectrum the direct way, as the
//! eigenvalues of `sqrt(rho~) rho sqrt(rho~)`; it backs the optional
//! four-eigenvalue leak check and serves as an independent cross-check.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{hermitian_eig, kron, psd_sqrt, singular_values, ComplexMatrix, DensityMatrix};

/// Eigenvalues of `rho` at or below this are treated as exact zeros when
/// factoring `rho = Psi Psi^dag`.
pub const SPECTRAL_FLOOR: f64 = 1e-14;
/// Largest eigenvalue of `rho * rho~_mn` allowed outside the top four.
pub const LEAK_TOL: f64 = 1e-8;

/// Split of qubits `1..=n` into two nonempty blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Bipartition {
    block1: Vec<usize>,
    block2: Vec<usize>,
}

impl Bipartition {
    pub fn new(block1: Vec<usize>, block2: Vec<usize>) -> Result<Self> {
        if block1.is_empty() || block2.is_empty() {
            return Err(Error::InvalidBipartition(
                "both blocks must be nonempty".into(),
            ));
        }
        let n = block1.len() + block2.len();
        let mut seen = vec![false; n];
        for &q in block1.iter().chain(&block2) {
            if q == 0 || q > n || seen[q - 1] {
                return Err(Error::InvalidBipartition(format!(
                    "blocks {block1:?}|{block2:?} are not a partition of 1..={n}"
                )));
            }
            seen[q - 1] = true;
        }
        Ok(Self { block1, block2 })
    }

    /// `{1..n-1} | {n}`
    pub fn last_qubit(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::UnsupportedQubitCount(n));
        }
        Self::new((1..n).collect(), vec![n])
    }

    pub fn block1(&self) -> &[usize] {
        &self.block1
    }

    pub fn block2(&self) -> &[usize] {
        &self.block2
    }

    pub fn n_qubits(&self) -> usize {
        self.block1.len() + self.block2.len()
    }

    pub fn d1(&self) -> usize {
        1 << self.block1.len()
    }

    pub fn d2(&self) -> usize {
        1 << self.block2.len()
    }

    /// Qubit order that puts block 1 in front of block 2.
    pub fn ordering(&self) -> Vec<usize> {
        self.block1.iter().chain(&self.block2).copied().collect()
    }

    fn check(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.n_qubits() != self.n_qubits() {
            return Err(Error::WrongDimension {
                expected: self.n_qubits(),
                found: rho.n_qubits(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |b: &[usize]| {
            let sep = if self.n_qubits() > 9 { "," } else { "" };
            b.iter()
                .map(|q| q.to_string())
                .collect::<Vec<_>>()
                .join(sep)
        };
        write!(f, "{}|{}", join(&self.block1), join(&self.block2))
    }
}

impl FromStr for Bipartition {
    type Err = Error;

    /// `12|3`, `1,2|3` or `{1,2}|{3}`.
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once('|')
            .ok_or_else(|| Error::InvalidBipartition(format!("missing '|' in {s:?}")))?;
        let parse_block = |blk: &str| -> Result<Vec<usize>> {
            let blk = blk.trim().trim_start_matches('{').trim_end_matches('}');
            let items: Vec<&str> = if blk.contains(',') {
                blk.split(',').map(str::trim).collect()
            } else {
                blk.char_indices()
                    .map(|(i, c)| &blk[i..i + c.len_utf8()])
                    .collect()
            };
            items
                .into_iter()
                .filter(|x| !x.is_empty())
                .map(|x| {
                    x.parse()
                        .map_err(|_| Error::InvalidBipartition(format!("bad qubit {x:?}")))
                })
                .collect()
        };
        Self::new(parse_block(a)?, parse_block(b)?)
    }
}

impl TryFrom<String> for Bipartition {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Bipartition> for String {
    fn from(b: Bipartition) -> String {
        b.to_string()
    }
}

/// Basis generators `E_ab` (a < b, lexicographic) of SO(d): `+1` at
/// `(a, b)`, `-1` at `(b, a)`.
pub fn so_generators(d: usize) -> Vec<ComplexMatrix> {
    generator_index_pairs(d)
        .map(|(a, b)| {
            let mut m = ComplexMatrix::zeros(d);
            m[(a, b)] = Complex64::new(1.0, 0.0);
            m[(b, a)] = Complex64::new(-1.0, 0.0);
            m
        })
        .collect()
}

fn generator_index_pairs(d: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..d).flat_map(move |a| (a + 1..d).map(move |b| (a, b)))
}

/// `S_mn = L_m ⊗ L_n` for generator indices `m`, `n` (1-based).
#[derive(Debug, Clone)]
pub struct GeneratorPair {
    pub m: usize,
    pub n: usize,
    pub s_mn: ComplexMatrix,
    /// The four basis indices `S_mn` acts on, ordered `(ac, ad, bc, bd)`.
    support: [usize; 4],
}

impl GeneratorPair {
    pub fn support(&self) -> [usize; 4] {
        self.support
    }
}

/// All generator pairs for a `d1 x d2` split in `(m, n)` lexicographic order.
pub fn generator_pairs(d1: usize, d2: usize) -> Vec<GeneratorPair> {
    let l1 = so_generators(d1);
    let l2 = so_generators(d2);
    let idx1: Vec<_> = generator_index_pairs(d1).collect();
    let idx2: Vec<_> = generator_index_pairs(d2).collect();
    let mut out = Vec::with_capacity(l1.len() * l2.len());
    for (m, (lm, &(a, b))) in l1.iter().zip(&idx1).enumerate() {
        for (n, (ln, &(c, d))) in l2.iter().zip(&idx2).enumerate() {
            out.push(GeneratorPair {
                m: m + 1,
                n: n + 1,
                s_mn: kron(lm, ln),
                support: [a * d2 + c, a * d2 + d, b * d2 + c, b * d2 + d],
            });
        }
    }
    out
}

/// `S_mn` restricted to its support, `J ⊗ J` with `J = [[0, 1], [-1, 0]]`.
const GENERATOR_BLOCK: [[f64; 4]; 4] = [
    [0.0, 0.0, 0.0, 1.0],
    [0.0, 0.0, -1.0, 0.0],
    [0.0, -1.0, 0.0, 0.0],
    [1.0, 0.0, 0.0, 0.0],
];

/// `sigma_y ⊗ sigma_y` (real).
const SPIN_FLIP: [[f64; 4]; 4] = [
    [0.0, 0.0, 0.0, -1.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0, 0.0],
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairTerm {
    pub m: usize,
    pub n: usize,
    /// Square roots of the four largest eigenvalues of `rho rho~_mn`,
    /// descending.
    pub lambdas: [f64; 4],
    pub c_mn: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcurrenceBreakdown {
    pub cut: Bipartition,
    pub per_pair: Vec<PairTerm>,
    pub total: f64,
}

impl ConcurrenceBreakdown {
    /// `sqrt(sum C_mn^2)` in `(m, n)` order.
    pub fn recompute_total(&self) -> f64 {
        self.per_pair
            .iter()
            .map(|t| t.c_mn * t.c_mn)
            .sum::<f64>()
            .sqrt()
    }
}

/// Factor `rho = Psi Psi^dag` with columns `sqrt(w_k) v_k` for eigenvalues
/// above [`SPECTRAL_FLOOR`].
fn eigen_factor(rho: &DensityMatrix) -> Vec<Vec<Complex64>> {
    let eig = rho.eigen();
    let dim = rho.dim();
    let kept: Vec<(usize, f64)> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > SPECTRAL_FLOOR)
        .map(|(k, &w)| (k, w.sqrt()))
        .collect();
    (0..dim)
        .map(|i| kept.iter().map(|&(k, s)| eig.vectors[(i, k)] * s).collect())
        .collect()
}

/// 4x4 lower-triangular `F` with `F F^dag = G G^dag` for the four rows
/// `G` (modified Gram-Schmidt with one reorthogonalisation pass).
fn gram_factor(rows: [&[Complex64]; 4]) -> [[Complex64; 4]; 4] {
    let zero = Complex64::new(0.0, 0.0);
    let r = rows[0].len();
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(4);
    let mut f = [[zero; 4]; 4];
    for (i, row) in rows.iter().enumerate() {
        let mut v = row.to_vec();
        for _pass in 0..2 {
            for (j, q) in basis.iter().enumerate() {
                let proj: Complex64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                f[i][j] += proj;
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= proj * y;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        f[i][i] = Complex64::new(norm, 0.0);
        if norm > 0.0 {
            for x in &mut v {
                *x /= norm;
            }
        } else {
            v = vec![zero; r];
        }
        basis.push(v);
    }
    f
}

/// Descending `lambda`s for the 4-dimensional block picked out by `support`
/// with inversion operator `flip` on that block.
fn block_lambdas(psi: &[Vec<Complex64>], support: [usize; 4], flip: &[[f64; 4]; 4]) -> [f64; 4] {
    if psi.first().is_none_or(|row| row.is_empty()) {
        return [0.0; 4];
    }
    let f = gram_factor(support.map(|i| psi[i].as_slice()));
    // M = F^T flip F
    let mut m = ComplexMatrix::zeros(4);
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..4 {
                for l in 0..4 {
                    if flip[k][l] != 0.0 {
                        acc += f[k][i] * flip[k][l] * f[l][j];
                    }
                }
            }
            m[(i, j)] = acc;
        }
    }
    let sv = singular_values(&m);
    [sv[0], sv[1], sv[2], sv[3]]
}

fn clipped(l: [f64; 4]) -> f64 {
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

/// Two-qubit Wootters concurrence `max(0, l1 - l2 - l3 - l4)`.
pub fn wootters(rho: &DensityMatrix) -> Result<f64> {
    if rho.n_qubits() != 2 {
        return Err(Error::WrongDimension {
            expected: 2,
            found: rho.n_qubits(),
        });
    }
    let psi = eigen_factor(rho);
    Ok(clipped(block_lambdas(&psi, [0, 1, 2, 3], &SPIN_FLIP)).min(1.0))
}

/// Generalized concurrence `sqrt(sum_mn C_mn^2)` across `cut`.
pub fn bipartite_concurrence(
    rho: &DensityMatrix,
    cut: &Bipartition,
) -> Result<ConcurrenceBreakdown> {
    cut.check(rho)?;
    let ordered = rho.permuted(&cut.ordering())?;
    let psi = eigen_factor(&ordered);
    let per_pair: Vec<PairTerm> = generator_pairs(cut.d1(), cut.d2())
        .into_iter()
        .map(|pair| {
            let lambdas = block_lambdas(&psi, pair.support, &GENERATOR_BLOCK);
            PairTerm {
                m: pair.m,
                n: pair.n,
                lambdas,
                c_mn: clipped(lambdas),
            }
        })
        .collect();
    let total = per_pair.iter().map(|t| t.c_mn * t.c_mn).sum::<f64>().sqrt();
    Ok(ConcurrenceBreakdown {
        cut: cut.clone(),
        per_pair,
        total,
    })
}

/// Concurrence across `cut`; Wootters' formula is the two-qubit special case
/// and gives the same number.
pub fn concurrence(rho: &DensityMatrix, cut: &Bipartition) -> Result<f64> {
    Ok(bipartite_concurrence(rho, cut)?.total)
}

/// Eigenvalues (descending) of `rho * S rho^* S` computed as the spectrum
/// of the Hermitian matrix `sqrt(rho~) rho sqrt(rho~)`.
pub fn spin_flip_spectrum(rho: &ComplexMatrix, s: &ComplexMatrix) -> Result<Vec<f64>> {
    let tilde = s.matmul(&rho.conj()).matmul(s);
    let root = psd_sqrt(&tilde)?;
    let sandwich = root.matmul(rho).matmul(&root);
    Ok(hermitian_eig(&sandwich)?.values)
}

/// Runs the direct spectrum for every generator pair of `cut` and fails with
/// [`Error::SpectralLeak`] if any eigenvalue beyond the top four exceeds
/// [`LEAK_TOL`]. Returns the largest such eigenvalue.
pub fn check_four_eigenvalues(rho: &DensityMatrix, cut: &Bipartition) -> Result<f64> {
    cut.check(rho)?;
    let ordered = rho.permuted(&cut.ordering())?;
    let mut worst = 0.0_f64;
    for pair in generator_pairs(cut.d1(), cut.d2()) {
        let spectrum = spin_flip_spectrum(ordered.matrix(), &pair.s_mn)?;
        if let Some(&leak) = spectrum.get(4) {
            if leak > LEAK_TOL {
                return Err(Error::SpectralLeak {
                    m: pair.m,
                    n: pair.n,
                    eigenvalue: leak,
                });
            }
            worst = worst.max(leak);
        }
    }
    Ok(worst)
}

/// The three 2|1 cuts of a three-qubit system: `12|3`, `13|2`, `23|1`.
pub fn three_qubit_cuts() -> [Bipartition; 3] {
    [
        Bipartition {
            block1: vec![1, 2],
            block2: vec![3],
        },
        Bipartition {
            block1: vec![1, 3],
            block2: vec![2],
        },
        Bipartition {
            block1: vec![2, 3],
            block2: vec![1],
        },
    ]
}

/// `sqrt((C12|3^2 + C13|2^2 + C23|1^2) / 3)`
pub fn tau3(rho: &DensityMatrix) -> Result<f64> {
    if rho.n_qubits() != 3 {
        return Err(Error::WrongDimension {
            expected: 3,
            found: rho.n_qubits(),
        });
    }
    let mut sum = 0.0;
    for cut in three_qubit_cuts() {
        let c = concurrence(rho, &cut)?;
        sum += c * c;
    }
    Ok((sum / 3.0).sqrt())
}
