//! Initial pure states: Bell-type, GHZ, W, random, or explicit amplitudes.

use std::f64::consts::FRAC_1_SQRT_2;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{qubit_permutation_map, ComplexMatrix, DensityMatrix};

const NORM_TOL: f64 = 1e-12;

/// Normalized state vector on `n` qubits, big-endian basis order.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
    n_qubits: usize,
}

impl PureState {
    /// Accepts amplitudes whose norm is within 1e-12 of one.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::DimNotPowerOfTwo(len));
        }
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !norm_sq.is_finite() || (norm_sq.sqrt() - 1.0).abs() > NORM_TOL {
            return Err(Error::OutOfRange(format!(
                "state norm {} is not 1",
                norm_sq.sqrt()
            )));
        }
        Ok(Self {
            n_qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    /// Rescales to unit norm before validating.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::OutOfRange(
                "state vector has zero or non-finite norm".into(),
            ));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Self::new(amplitudes)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `|psi><psi|`
    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes)
    }

    pub fn density_matrix(&self) -> DensityMatrix {
        DensityMatrix::new(self.projector())
            .expect("pure state projector is a valid density matrix")
    }

    /// Same relabeling convention as [`crate::matrix::permute_qubits`].
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let map = qubit_permutation_map(self.n_qubits, perm)?;
        Ok(Self {
            amplitudes: map.iter().map(|&src| self.amplitudes[src]).collect(),
            n_qubits: self.n_qubits,
        })
    }
}

fn from_real_sparse(n_qubits: usize, entries: &[(usize, f64)]) -> PureState {
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
    for &(idx, a) in entries {
        amplitudes[idx] = Complex64::new(a, 0.0);
    }
    PureState {
        amplitudes,
        n_qubits,
    }
}

/// `alpha|00> + sqrt(1 - alpha^2)|11>`
pub fn bell(alpha: f64) -> Result<PureState> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::OutOfRange(format!(
            "bell alpha {alpha} outside [0, 1]"
        )));
    }
    Ok(from_real_sparse(
        2,
        &[(0b00, alpha), (0b11, (1.0 - alpha * alpha).sqrt())],
    ))
}

/// `(|0...0> + |1...1>)/sqrt(2)` for 3 or 4 qubits.
pub fn ghz(n: usize) -> Result<PureState> {
    if !(3..=4).contains(&n) {
        return Err(Error::UnsupportedQubitCount(n));
    }
    Ok(from_real_sparse(
        n,
        &[(0, FRAC_1_SQRT_2), ((1 << n) - 1, FRAC_1_SQRT_2)],
    ))
}

/// Equal superposition of the single-excitation basis states.
pub fn w(n: usize) -> Result<PureState> {
    if !(3..=4).contains(&n) {
        return Err(Error::UnsupportedQubitCount(n));
    }
    let amp = 1.0 / (n as f64).sqrt();
    let entries: Vec<(usize, f64)> = (0..n).map(|k| (1 << k, amp)).collect();
    Ok(from_real_sparse(n, &entries))
}

/// Normalized complex Gaussian vector (unitarily invariant).
pub fn random_pure<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<PureState> {
    if n == 0 || n > 16 {
        return Err(Error::UnsupportedQubitCount(n));
    }
    let amps: Vec<Complex64> = (0..1usize << n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    PureState::normalized(amps)
}

/// Named initial states accepted on the command line and in configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    /// `bell`, `bell:alpha=0.6`, `ghz3`, `w3`, `ghz4`, `w4`.
    Named(String),
    /// Explicit amplitudes, each `[re, im]` or a bare real number.
    Amplitudes { amplitudes: Vec<Amplitude> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

impl StateSpec {
    pub fn build(&self) -> Result<PureState> {
        match self {
            StateSpec::Named(name) => parse_named(name),
            StateSpec::Amplitudes { amplitudes } => {
                let amps = amplitudes
                    .iter()
                    .map(|a| match *a {
                        Amplitude::Real(re) => Complex64::new(re, 0.0),
                        Amplitude::Complex([re, im]) => Complex64::new(re, im),
                    })
                    .collect();
                PureState::normalized(amps)
            }
        }
    }
}

impl FromStr for StateSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('[') || s.starts_with('{') {
            let amplitudes: Vec<Amplitude> = if s.starts_with('[') {
                serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?
            } else {
                return serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()));
            };
            return Ok(StateSpec::Amplitudes { amplitudes });
        }
        parse_named(s)?;
        Ok(StateSpec::Named(s.to_string()))
    }
}

fn parse_named(name: &str) -> Result<PureState> {
    let lower = name.trim().to_ascii_lowercase();
    match lower.as_str() {
        "bell" => bell(FRAC_1_SQRT_2),
        "ghz3" => ghz(3),
        "ghz4" => ghz(4),
        "w3" => w(3),
        "w4" => w(4),
        other => {
            if let Some(rest) = other.strip_prefix("bell:") {
                let value = rest
                    .strip_prefix("alpha=")
                    .ok_or_else(|| Error::Parse(format!("expected bell:alpha=<x>, got {name}")))?;
                let alpha: f64 = value
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad alpha {value:?}")))?;
                bell(alpha)
            } else {
                Err(Error::Parse(format!("unknown state {name:?}")))
            }
        }
    }
}
