//! Single-qubit Pauli channels in operator-sum form and their local
//! (one channel per qubit) action on multiqubit density matrices.
//!
//! A channel with parameters `a = (a1, a2, a3, a4)`, `sum a_i^2 = 1`, has
//! Kraus operators `a_i * sigma_i` with `(sigma_1..sigma_4) = (I, X, Y, Z)`.
//! Bit flip keeps `a1, a2`; phase flip keeps `a1, a4`; bit-phase flip keeps
//! `a1, a3`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{kron_all, pauli, ComplexMatrix, DensityMatrix};
use crate::states::PureState;

/// Completeness tolerance for `sum K^dag K = I`.
pub const COMPLETENESS_TOL: f64 = 1e-10;
const PARAM_NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChannelFamily {
    #[serde(rename = "BF", alias = "bf")]
    BitFlip,
    #[serde(rename = "PF", alias = "pf")]
    PhaseFlip,
    #[serde(rename = "BPF", alias = "bpf")]
    BitPhaseFlip,
    #[serde(rename = "general", alias = "GeneralPauli")]
    GeneralPauli,
    #[serde(rename = "custom")]
    Custom,
}

impl ChannelFamily {
    pub fn label(self) -> &'static str {
        match self {
            ChannelFamily::BitFlip => "BF",
            ChannelFamily::PhaseFlip => "PF",
            ChannelFamily::BitPhaseFlip => "BPF",
            ChannelFamily::GeneralPauli => "general",
            ChannelFamily::Custom => "custom",
        }
    }

    /// Index of the non-identity Pauli coordinate for the three flip
    /// families.
    pub fn flip_index(self) -> Option<usize> {
        match self {
            ChannelFamily::BitFlip => Some(1),
            ChannelFamily::BitPhaseFlip => Some(2),
            ChannelFamily::PhaseFlip => Some(3),
            _ => None,
        }
    }
}

impl fmt::Display for ChannelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ChannelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "BF" => Ok(ChannelFamily::BitFlip),
            "PF" => Ok(ChannelFamily::PhaseFlip),
            "BPF" => Ok(ChannelFamily::BitPhaseFlip),
            "GENERAL" | "GENERALPAULI" | "GP" => Ok(ChannelFamily::GeneralPauli),
            other => Err(Error::Parse(format!("unknown channel family {other:?}"))),
        }
    }
}

/// Unit 4-vector of Pauli weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliParams {
    a: [f64; 4],
}

impl PauliParams {
    pub fn new(a: [f64; 4]) -> Result<Self> {
        let sum_sq: f64 = a.iter().map(|x| x * x).sum();
        if !sum_sq.is_finite() || (sum_sq - 1.0).abs() > PARAM_NORM_TOL {
            return Err(Error::NotNormalized { sum_sq });
        }
        Ok(Self { a })
    }

    /// Checks the zero pattern required by `family` as well as the norm.
    pub fn for_family(family: ChannelFamily, a: [f64; 4]) -> Result<Self> {
        let params = Self::new(a)?;
        if let Some(flip) = family.flip_index() {
            if (1..4).any(|i| i != flip && a[i] != 0.0) {
                return Err(Error::FamilyConstraint {
                    family: family.label(),
                    a,
                });
            }
        }
        Ok(params)
    }

    /// `a1 = sqrt(1 - p)` and `sqrt(p)` on the family's flip coordinate.
    pub fn from_flip_probability(family: ChannelFamily, p: f64) -> Result<Self> {
        let flip = family.flip_index().ok_or_else(|| {
            Error::Config(format!("family {family} has no single flip probability"))
        })?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange(format!(
                "flip probability {p} outside [0, 1]"
            )));
        }
        let mut a = [0.0; 4];
        a[0] = (1.0 - p).sqrt();
        a[flip] = p.sqrt();
        Self::for_family(family, a)
    }

    pub fn identity() -> Self {
        Self {
            a: [1.0, 0.0, 0.0, 0.0],
        }
    }

    pub fn coefficients(&self) -> [f64; 4] {
        self.a
    }
}

/// Kraus representation of a single-qubit (or general) channel.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    ops: Vec<ComplexMatrix>,
    family: ChannelFamily,
    params: Option<PauliParams>,
}

impl KrausChannel {
    /// Validates shape and the completeness relation.
    pub fn new(ops: Vec<ComplexMatrix>, family: ChannelFamily) -> Result<Self> {
        let Some(first) = ops.first() else {
            return Err(Error::InvalidAssignment(
                "channel needs at least one Kraus operator".into(),
            ));
        };
        let dim = first.dim();
        if let Some(bad) = ops.iter().find(|k| k.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        let channel = Self {
            ops,
            family,
            params: None,
        };
        let deviation = channel.completeness_deviation();
        if deviation > COMPLETENESS_TOL {
            return Err(Error::Incomplete { deviation });
        }
        Ok(channel)
    }

    pub fn identity() -> Self {
        pauli_channel(PauliParams::identity(), ChannelFamily::GeneralPauli)
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn family(&self) -> ChannelFamily {
        self.family
    }

    pub fn params(&self) -> Option<PauliParams> {
        self.params
    }

    pub fn dim(&self) -> usize {
        self.ops[0].dim()
    }

    /// `max |sum K^dag K - I|` entrywise.
    pub fn completeness_deviation(&self) -> f64 {
        let dim = self.dim();
        let sum = self.ops.iter().fold(ComplexMatrix::zeros(dim), |acc, k| {
            &acc + &k.adjoint().matmul(k)
        });
        sum.max_abs_diff(&ComplexMatrix::identity(dim))
    }
}

/// Kraus operators `a_i sigma_i` for the nonzero weights.
pub fn pauli_channel(params: PauliParams, family: ChannelFamily) -> KrausChannel {
    let paulis = [pauli::i2(), pauli::x(), pauli::y(), pauli::z()];
    let ops = params
        .a
        .iter()
        .zip(paulis)
        .filter(|(&a, _)| a != 0.0)
        .map(|(&a, s)| s.scale(Complex64::new(a, 0.0)))
        .collect();
    KrausChannel {
        ops,
        family,
        params: Some(params),
    }
}

/// Draws Pauli weights uniformly on the unit sphere of the family's free
/// coordinates (a circle for the flip families, the 3-sphere for general).
pub fn sample_channel<R: Rng + ?Sized>(family: ChannelFamily, rng: &mut R) -> Result<KrausChannel> {
    let params = sample_params(family, rng)?;
    Ok(pauli_channel(params, family))
}

pub fn sample_params<R: Rng + ?Sized>(family: ChannelFamily, rng: &mut R) -> Result<PauliParams> {
    let mut a = [0.0; 4];
    let free: &[usize] = match family {
        ChannelFamily::BitFlip => &[0, 1],
        ChannelFamily::BitPhaseFlip => &[0, 2],
        ChannelFamily::PhaseFlip => &[0, 3],
        ChannelFamily::GeneralPauli => &[0, 1, 2, 3],
        ChannelFamily::Custom => {
            return Err(Error::Config("custom channels cannot be sampled".into()));
        }
    };
    loop {
        for &i in free {
            a[i] = rng.sample(StandardNormal);
        }
        let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for x in &mut a {
                *x /= norm;
            }
            // Renormalisation leaves the sum of squares within a few ulps of 1.
            return PauliParams::new(a);
        }
    }
}

/// One local channel per listed qubit (1-based); other qubits are left alone.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelAssignment {
    n_qubits: usize,
    per_qubit: Vec<(usize, KrausChannel)>,
}

impl ChannelAssignment {
    pub fn new(n_qubits: usize, per_qubit: Vec<(usize, KrausChannel)>) -> Result<Self> {
        let mut seen = vec![false; n_qubits];
        for (q, ch) in &per_qubit {
            if *q == 0 || *q > n_qubits {
                return Err(Error::InvalidAssignment(format!(
                    "qubit {q} outside 1..={n_qubits}"
                )));
            }
            if seen[q - 1] {
                return Err(Error::InvalidAssignment(format!(
                    "qubit {q} assigned twice"
                )));
            }
            if ch.dim() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    found: ch.dim(),
                });
            }
            seen[q - 1] = true;
        }
        Ok(Self {
            n_qubits,
            per_qubit,
        })
    }

    /// Channel `k` acts on qubit `k + 1`.
    pub fn many_sided(channels: &[KrausChannel]) -> Result<Self> {
        Self::new(
            channels.len(),
            channels
                .iter()
                .cloned()
                .enumerate()
                .map(|(k, c)| (k + 1, c))
                .collect(),
        )
    }

    pub fn single(n_qubits: usize, qubit: usize, channel: KrausChannel) -> Result<Self> {
        Self::new(n_qubits, vec![(qubit, channel)])
    }

    pub fn empty(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            per_qubit: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn per_qubit(&self) -> &[(usize, KrausChannel)] {
        &self.per_qubit
    }

    /// Full `2^n x 2^n` Kraus operators of the product channel, one per
    /// element of the Cartesian product of per-qubit operator lists.
    pub fn composite_ops(&self) -> Vec<ComplexMatrix> {
        let identity = [pauli::i2()];
        let lists: Vec<&[ComplexMatrix]> = (1..=self.n_qubits)
            .map(|q| {
                self.per_qubit
                    .iter()
                    .find(|(idx, _)| *idx == q)
                    .map(|(_, ch)| ch.ops())
                    .unwrap_or(&identity)
            })
            .collect();
        let total: usize = lists.iter().map(|l| l.len()).product();
        let mut out = Vec::with_capacity(total);
        let mut choice = vec![0usize; lists.len()];
        for _ in 0..total {
            out.push(kron_all(lists.iter().zip(&choice).map(|(l, &c)| &l[c])));
            // odometer over choices, last qubit fastest
            for k in (0..choice.len()).rev() {
                choice[k] += 1;
                if choice[k] < lists[k].len() {
                    break;
                }
                choice[k] = 0;
            }
        }
        out
    }
}

/// `rho -> sum_K K rho K^dag` over the composite Kraus operators.
pub fn apply(assignment: &ChannelAssignment, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.n_qubits() != assignment.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: 1 << assignment.n_qubits,
            found: rho.dim(),
        });
    }
    if assignment.per_qubit.is_empty() {
        return Ok(rho.clone());
    }
    let out = assignment
        .composite_ops()
        .iter()
        .fold(ComplexMatrix::zeros(rho.dim()), |acc, k| {
            &acc + &k.conjugate(rho.matrix())
        });
    DensityMatrix::new(out)
}

/// `[1 x ... x A x ... x 1] |psi><psi|` with `A` on `target` (1-based).
pub fn single_sided(
    channel: &KrausChannel,
    target: usize,
    psi: &PureState,
) -> Result<DensityMatrix> {
    let assignment = ChannelAssignment::single(psi.n_qubits(), target, channel.clone())?;
    apply(&assignment, &psi.density_matrix())
}

/// JSON form of a channel: `{"family": "BF", "p": 0.2}` or
/// `{"family": "general", "a": [a1, a2, a3, a4]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub family: ChannelFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

impl ChannelSpec {
    pub fn with_p(family: ChannelFamily, p: f64) -> Self {
        Self {
            family,
            a: None,
            p: Some(p),
        }
    }

    pub fn build(&self) -> Result<KrausChannel> {
        let params = match (self.a, self.p) {
            (Some(a), None) => PauliParams::for_family(self.family, a)?,
            (None, Some(p)) => PauliParams::from_flip_probability(self.family, p)?,
            (None, None) => {
                return Err(Error::Config(format!(
                    "channel {} needs either `a` or `p`",
                    self.family
                )))
            }
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either `a` or `p`, not both".into()));
            }
        };
        Ok(pauli_channel(params, self.family))
    }
}

impl FromStr for ChannelSpec {
    type Err = Error;

    /// `BF:p=0.2`, `general:a=0.5;0.5;0.5;0.5`, or `id`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("id") || s.eq_ignore_ascii_case("i") {
            return Ok(Self {
                family: ChannelFamily::GeneralPauli,
                a: Some([1.0, 0.0, 0.0, 0.0]),
                p: None,
            });
        }
        let (fam, rest) = s.split_once(':').ok_or_else(|| {
            Error::Parse(format!(
                "expected FAMILY:p=<x> or FAMILY:a=<a1;a2;a3;a4>, got {s:?}"
            ))
        })?;
        let family: ChannelFamily = fam.parse()?;
        if let Some(v) = rest.strip_prefix("p=") {
            let p = v
                .parse()
                .map_err(|_| Error::Parse(format!("bad probability {v:?}")))?;
            return Ok(Self::with_p(family, p));
        }
        if let Some(v) = rest.strip_prefix("a=") {
            let parts: Vec<f64> = v
                .split(';')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse(format!("bad coefficient list {v:?}")))?;
            let a: [f64; 4] = parts
                .try_into()
                .map_err(|_| Error::Parse(format!("expected four coefficients in {v:?}")))?;
            return Ok(Self {
                family,
                a: Some(a),
                p: None,
            });
        }
        Err(Error::Parse(format!(
            "unrecognised channel parameters {rest:?}"
        )))
    }
}

/// Parses a comma-separated channel list such as `BF:p=0.2,PF:p=0.1`.
pub fn parse_channel_list(s: &str) -> Result<Vec<ChannelSpec>> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(str::parse)
        .collect()
}
