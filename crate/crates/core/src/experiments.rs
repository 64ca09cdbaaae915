//! Canned experiments: the three-qubit `tau3` sweep under identical
//! bit-phase-flip noise, the Kraus-rank table, and deterministic CSV output
//! for these and for campaign reports.

use std::fmt::Write as _;

use serde::Serialize;

use crate::channels::{
    apply, single_sided, ChannelAssignment, ChannelFamily, ChannelSpec, KrausChannel,
};
use crate::entanglement::{concurrence, tau3, three_qubit_cuts};
use crate::error::{Error, Result};
use crate::factorization::CampaignReport;
use crate::par;
use crate::states::{ghz, w, PureState};

/// `tau3` at or below this counts as zero.
pub const ZERO_THRESHOLD: f64 = 1e-6;
/// Bisection stops once the bracket is this narrow.
pub const CROSSING_RESOLUTION: f64 = 1e-6;

/// Flip probabilities to sweep, sorted and within `[0, 0.5]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub grid: Vec<f64>,
}

impl SweepSpec {
    pub fn new(grid: Vec<f64>) -> Result<Self> {
        if grid.iter().any(|p| !(0.0..=0.5).contains(p)) {
            return Err(Error::OutOfRange(
                "sweep probabilities must lie in [0, 0.5]".into(),
            ));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "sweep grid must be strictly increasing".into(),
            ));
        }
        Ok(Self { grid })
    }

    /// `points` evenly spaced values from 0 to 0.5 inclusive.
    pub fn uniform(points: usize) -> Result<Self> {
        match points {
            0 => Self::new(Vec::new()),
            1 => Self::new(vec![0.0]),
            _ => Self::new(
                (0..points)
                    .map(|i| 0.5 * i as f64 / (points - 1) as f64)
                    .collect(),
            ),
        }
    }
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self::uniform(101).expect("uniform grid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Figure1Row {
    pub p: f64,
    pub tau3_direct: f64,
    /// `(1 - 2p)^3`
    pub approx_product: f64,
    /// `(1 - 2p)^2`
    pub approx_sum: f64,
    /// `tau3` assembled from single-sided factors, product form.
    pub product_from_factors: f64,
    /// Same, two-term sum form.
    pub sum_from_factors: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Figure1Table {
    pub rows: Vec<Figure1Row>,
    /// First `p` with `tau3 <= ZERO_THRESHOLD`, refined by bisection
    /// between grid points; `None` if the sweep never gets there.
    pub zero_crossing: Option<f64>,
}

fn bpf(p: f64) -> Result<KrausChannel> {
    ChannelSpec::with_p(ChannelFamily::BitPhaseFlip, p).build()
}

/// `tau3` of GHZ3 after identical bit-phase flips with probability `p`.
pub fn tau3_under_bpf(p: f64) -> Result<f64> {
    let ch = bpf(p)?;
    let psi = ghz(3)?;
    let rho = apply(
        &ChannelAssignment::many_sided(&[ch.clone(), ch.clone(), ch])?,
        &psi.density_matrix(),
    )?;
    tau3(&rho)
}

fn figure1_row(psi: &PureState, p: f64) -> Result<Figure1Row> {
    let ch = bpf(p)?;
    let q = 1.0 - 2.0 * p;
    let mut product_sq = 0.0;
    let mut sum_sq = 0.0;
    for cut in three_qubit_cuts() {
        // all three channels are the same, so each factor is the one placed
        // on the singleton side of the cut
        let x = concurrence(&single_sided(&ch, cut.block2()[0], psi)?, &cut)?;
        product_sq += (x * x * x).powi(2);
        sum_sq += (2.0 * x * x).powi(2);
    }
    Ok(Figure1Row {
        p,
        tau3_direct: tau3_under_bpf(p)?,
        approx_product: q * q * q,
        approx_sum: q * q,
        product_from_factors: (product_sq / 3.0).sqrt(),
        sum_from_factors: (sum_sq / 3.0).sqrt(),
    })
}

pub fn figure1_scan(spec: &SweepSpec) -> Result<Figure1Table> {
    let psi = ghz(3)?;
    let rows: Vec<Figure1Row> =
        par::map_indexed(spec.grid.len(), |i| figure1_row(&psi, spec.grid[i]))
            .into_iter()
            .collect::<Result<_>>()?;
    let zero_crossing = match rows.iter().position(|r| r.tau3_direct <= ZERO_THRESHOLD) {
        None => None,
        Some(0) => Some(rows[0].p),
        Some(i) => Some(bisect_zero(rows[i - 1].p, rows[i].p)?),
    };
    Ok(Figure1Table {
        rows,
        zero_crossing,
    })
}

/// `lo` is above the threshold, `hi` at or below it.
fn bisect_zero(mut lo: f64, mut hi: f64) -> Result<f64> {
    while hi - lo > CROSSING_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if tau3_under_bpf(mid)? <= ZERO_THRESHOLD {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankRow {
    pub state: String,
    pub channels: String,
    pub expected_rank: usize,
    pub computed_rank: usize,
}

impl RankRow {
    pub fn matches(&self) -> bool {
        self.expected_rank == self.computed_rank
    }
}

/// Fixed, pairwise distinct flip probabilities; ranks are generic, so any
/// values away from 0 and 1/2 give the same answer.
const RANK_PROBABILITIES: [f64; 4] = [0.13, 0.27, 0.36, 0.21];

fn rank_scenarios() -> Vec<(&'static str, Vec<ChannelFamily>, usize)> {
    use ChannelFamily::{BitFlip as BF, BitPhaseFlip as BPF, PhaseFlip as PF};
    vec![
        ("ghz3", vec![PF, PF, PF], 2),
        ("ghz3", vec![BF, BF, BF], 4),
        ("ghz3", vec![PF, PF, BF], 4),
        ("ghz3", vec![PF, PF, BPF], 4),
        ("w3", vec![PF, PF, PF], 3),
        ("ghz4", vec![PF, PF, PF, PF], 2),
        ("ghz4", vec![PF, PF, PF, BF], 4),
        ("w4", vec![PF, PF, PF, PF], 4),
        ("ghz3", vec![BPF, BPF, BPF], 8),
    ]
}

/// Rank of the final state for the nine reference scenarios.
pub fn rank_table() -> Result<Vec<RankRow>> {
    rank_scenarios()
        .into_iter()
        .map(|(state, families, expected_rank)| {
            let psi = match state {
                "ghz3" => ghz(3)?,
                "ghz4" => ghz(4)?,
                "w3" => w(3)?,
                _ => w(4)?,
            };
            let channels: Vec<KrausChannel> = families
                .iter()
                .zip(RANK_PROBABILITIES)
                .map(|(&f, p)| ChannelSpec::with_p(f, p).build())
                .collect::<Result<_>>()?;
            let rho = apply(
                &ChannelAssignment::many_sided(&channels)?,
                &psi.density_matrix(),
            )?;
            Ok(RankRow {
                state: state.to_string(),
                channels: families
                    .iter()
                    .map(|f| f.label())
                    .collect::<Vec<_>>()
                    .join(","),
                expected_rank,
                computed_rank: rho.rank(),
            })
        })
        .collect()
}

/// Shortest round-trip representation; identical input gives identical text.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn header_line<T: Serialize>(config: &T) -> Result<String> {
    let json = serde_json::to_string(config).map_err(|e| Error::Config(e.to_string()))?;
    Ok(format!("# {json}\n"))
}

/// `p,tau3_direct,approx_product,approx_sum`, optionally followed by the two
/// factor-route columns.
pub fn figure1_csv<T: Serialize>(
    table: &Figure1Table,
    config: &T,
    with_factors: bool,
) -> Result<String> {
    let mut out = header_line(config)?;
    out.push_str("p,tau3_direct,approx_product,approx_sum");
    if with_factors {
        out.push_str(",product_from_factors,sum_from_factors");
    }
    out.push('\n');
    for r in &table.rows {
        let _ = write!(
            out,
            "{},{},{},{}",
            fmt_f64(r.p),
            fmt_f64(r.tau3_direct),
            fmt_f64(r.approx_product),
            fmt_f64(r.approx_sum)
        );
        if with_factors {
            let _ = write!(
                out,
                ",{},{}",
                fmt_f64(r.product_from_factors),
                fmt_f64(r.sum_from_factors)
            );
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn rank_table_csv<T: Serialize>(rows: &[RankRow], config: &T) -> Result<String> {
    let mut out = header_line(config)?;
    out.push_str("state,channels,expected_rank,computed_rank,match\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},\"{}\",{},{},{}",
            r.state,
            r.channels,
            r.expected_rank,
            r.computed_rank,
            r.matches()
        );
    }
    Ok(out)
}

/// One row per sample, then `#`-prefixed summary lines.
pub fn campaign_csv(report: &CampaignReport) -> Result<String> {
    let mut out = header_line(&report.config)?;
    out.push_str("seed,rank,lhs,rhs,residual,pass\n");
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    for row in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.seed,
            row.rank,
            opt(row.lhs()),
            opt(row.rhs()),
            opt(row.residual()),
            row.pass
        );
    }
    let _ = writeln!(
        out,
        "# summary samples={} evaluated={} passes={} max_residual={} claimed={}",
        report.rows.len(),
        report.total_evaluated(),
        report.total_passes(),
        fmt_f64(report.max_residual()),
        report.claimed
    );
    if let Some(perm) = &report.relabeling {
        let _ = writeln!(out, "# relabeling {perm:?}");
    }
    for (rank, b) in &report.buckets {
        let _ = writeln!(
            out,
            "# rank={} samples={} evaluated={} passes={} max_residual={} failing_seeds={:?}",
            rank,
            b.samples,
            b.evaluated,
            b.passes,
            fmt_f64(b.max_residual),
            b.failures
        );
    }
    for (e, passes) in &report.exponent_passes {
        let _ = writeln!(out, "# exponent={e} passes={passes}");
    }
    Ok(out)
}
