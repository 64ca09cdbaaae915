//! Reference computations that share no code with the library: plain
//! nested-`Vec` matrices, explicit index arithmetic, and polynomial roots.
#![allow(dead_code)]

use conclab_core::{Complex64, ComplexMatrix, DensityMatrix, PureState};
use rand::Rng;
use rand_distr::StandardNormal;

pub type Mat = Vec<Vec<Complex64>>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn to_mat(m: &ComplexMatrix) -> Mat {
    (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let mut out = vec![vec![c(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn trace(a: &Mat) -> Complex64 {
    (0..a.len()).map(|i| a[i][i]).sum()
}

/// Bit of qubit `q` (1-based, qubit 1 most significant) in basis index `idx`.
fn bit(idx: usize, q: usize, n: usize) -> usize {
    (idx >> (n - q)) & 1
}

/// Reduced state on `keep` (ascending), tracing out every other qubit.
pub fn partial_trace(rho: &Mat, n: usize, keep: &[usize]) -> Mat {
    let dk = 1 << keep.len();
    let mut out = vec![vec![c(0.0, 0.0); dk]; dk];
    let sub = |idx: usize| keep.iter().fold(0, |acc, &q| (acc << 1) | bit(idx, q, n));
    let rest = |idx: usize| {
        (1..=n)
            .filter(|q| !keep.contains(q))
            .fold(0, |acc, q| (acc << 1) | bit(idx, q, n))
    };
    let d = 1 << n;
    for i in 0..d {
        for j in 0..d {
            if rest(i) == rest(j) {
                out[sub(i)][sub(j)] += rho[i][j];
            }
        }
    }
    out
}

/// `sqrt(2 (1 - Tr rho_A^2))` for a pure state split into `block` and the rest.
pub fn pure_cut_concurrence(psi: &PureState, block: &[usize]) -> f64 {
    let n = psi.n_qubits();
    let rho = to_mat(&psi.projector());
    let red = partial_trace(&rho, n, block);
    let purity = trace(&mat_mul(&red, &red)).re;
    (2.0 * (1.0 - purity)).max(0.0).sqrt()
}

/// Characteristic polynomial coefficients `[1, c1, ..., cn]` of
/// `det(x I - A)` by Faddeev-LeVerrier.
pub fn char_poly(a: &Mat) -> Vec<Complex64> {
    let n = a.len();
    let mut coeffs = vec![c(1.0, 0.0)];
    let mut m = vec![vec![c(0.0, 0.0); n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{k-1} I
        let mut next = mat_mul(a, &m);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += coeffs[k - 1];
        }
        m = next;
        let am = mat_mul(a, &m);
        coeffs.push(-trace(&am) / k as f64);
    }
    coeffs
}

/// All roots of a monic polynomial by Durand-Kerner iteration.
pub fn poly_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let eval = |x: Complex64| coeffs.iter().fold(c(0.0, 0.0), |acc, &k| acc * x + k);
    let seed = c(0.4, 0.9);
    let scale = 1.0 + coeffs.iter().skip(1).map(|k| k.norm()).fold(0.0, f64::max);
    let mut roots: Vec<Complex64> = (0..n).map(|i| seed.powu(i as u32) * scale).collect();
    for _ in 0..5000 {
        let mut delta = 0.0_f64;
        for i in 0..n {
            let mut denom = c(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 * scale {
            break;
        }
    }
    roots
}

/// Real parts of the characteristic roots, descending.
pub fn real_roots_desc(a: &Mat) -> Vec<f64> {
    let mut r: Vec<f64> = poly_roots(&char_poly(a)).iter().map(|z| z.re).collect();
    r.sort_by(|x, y| y.partial_cmp(x).unwrap());
    r
}

fn sigma_yy() -> Mat {
    let z = c(0.0, 0.0);
    let mut s = vec![vec![z; 4]; 4];
    s[0][3] = c(-1.0, 0.0);
    s[1][2] = c(1.0, 0.0);
    s[2][1] = c(1.0, 0.0);
    s[3][0] = c(-1.0, 0.0);
    s
}

/// `rho (sy x sy) rho^* (sy x sy)`, not Hermitian in general.
pub fn rho_rho_tilde(rho: &Mat) -> Mat {
    let s = sigma_yy();
    let conj: Mat = rho
        .iter()
        .map(|r| r.iter().map(|z| z.conj()).collect())
        .collect();
    mat_mul(rho, &mat_mul(&s, &mat_mul(&conj, &s)))
}

/// The two nonzero eigenvalues of `rho rho~` for a state of rank at most 2.
/// With at most two nonzero roots, `det(x - R) = x^2 (x^2 + c1 x + c2)`, so
/// the quadratic factor gives them without touching the double root at 0.
pub fn rank2_spin_flip_eigenvalues(rho: &Mat) -> [f64; 2] {
    let cp = char_poly(&rho_rho_tilde(rho));
    let (b, cc) = (cp[1].re, cp[2].re);
    let disc = (b * b - 4.0 * cc).max(0.0).sqrt();
    // avoid cancellation in the smaller root
    let big = (-b + disc) / 2.0;
    let small = if big.abs() > 0.0 { cc / big } else { 0.0 };
    [big.max(small), big.min(small)]
}

/// Wootters concurrence from the quadratic-factor eigenvalues.
pub fn rank2_wootters_oracle(rho: &Mat) -> f64 {
    let [a, b] = rank2_spin_flip_eigenvalues(rho);
    (a.max(0.0).sqrt() - b.max(0.0).sqrt()).max(0.0)
}

pub fn random_unit_vector<R: Rng>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..dim)
        .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// `w |u><u| + (1 - w) |v><v|` for random `u`, `v`, `w`.
pub fn random_rank2_two_qubit<R: Rng>(rng: &mut R) -> DensityMatrix {
    let u = random_unit_vector(4, rng);
    let v = random_unit_vector(4, rng);
    let w: f64 = rng.random_range(0.0..1.0);
    let m = ComplexMatrix::from_fn(4, |i, j| {
        u[i] * u[j].conj() * w + v[i] * v[j].conj() * (1.0 - w)
    });
    DensityMatrix::new(m).expect("mixture is a state")
}

/// Haar-like single-qubit unitary `[[a, -b^*], [b, a^*]]` with a random phase.
pub fn random_qubit_unitary<R: Rng>(rng: &mut R) -> ComplexMatrix {
    let v = random_unit_vector(2, rng);
    let phase = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    let (a, b) = (v[0], v[1]);
    ComplexMatrix::from_rows(vec![
        vec![a * phase, -b.conj() * phase],
        vec![b * phase, a.conj() * phase],
    ])
    .unwrap()
}

/// Every bipartition of `1..=n` with qubit 1 in block 1, so each cut
/// appears once.
pub fn all_cuts(n: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut cuts = Vec::new();
    for mask in 0..(1usize << n) {
        let b1: Vec<usize> = (1..=n).filter(|q| mask >> (q - 1) & 1 == 1).collect();
        if b1.contains(&1) && b1.len() < n {
            let b2: Vec<usize> = (1..=n).filter(|q| !b1.contains(q)).collect();
            cuts.push((b1, b2));
        }
    }
    cuts
}
