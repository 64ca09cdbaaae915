//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line per criterion
//! (written straight to stderr so it shows even for passing tests) and then
//! asserts it.

mod common;

use std::io::Write as _;
use std::time::{Duration, Instant};

use common::*;
use conclab_core::channels::{
    apply, sample_channel, ChannelAssignment, ChannelFamily, KrausChannel,
};
use conclab_core::entanglement::{check_four_eigenvalues, three_qubit_cuts};
use conclab_core::experiments::{campaign_csv, figure1_scan, rank_table, SweepSpec};
use conclab_core::factorization::{run_campaign_with, Execution, ExponentChoice};
use conclab_core::{
    bipartite_concurrence, random_pure, wootters, Bipartition, CampaignConfig, CampaignReport,
    DensityMatrix, PureState, StateSpec,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ChannelFamily::{BitFlip as BF, BitPhaseFlip as BPF, GeneralPauli as GEN, PhaseFlip as PF};

const RESIDUAL_TOL: f64 = 1e-8;
const SEQUENTIAL_BUDGET: Duration = Duration::from_secs(5);
const ZERO_TAU: f64 = 1e-6;
const EXPECTED_CROSSING: f64 = 0.31;
const CROSSING_WINDOW: f64 = 0.01;
const CLOSED_FORM_TOL: f64 = 1e-10;
const APPROX_ZERO_WINDOW: f64 = 1e-6;
const MEASURE_AGREEMENT_TOL: f64 = 1e-8;
const TRACE_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-10;
const MIN_EIGENVALUE: f64 = -1e-9;

fn line(criterion: u32, what: &str, pass: bool, detail: &str) -> bool {
    let status = if pass { "PASS" } else { "FAIL" };
    let text = format!("criterion {criterion:>2} {status} {what}: {detail}\n");
    let _ = std::io::stderr().write_all(text.as_bytes());
    pass
}

fn campaign(
    state: &str,
    families: &[ChannelFamily],
    samples: usize,
    seed: u64,
    identity: &str,
) -> CampaignReport {
    let cfg = CampaignConfig::new(state, families.to_vec(), samples, seed)
        .unwrap()
        .with_identity(identity)
        .unwrap();
    run_campaign_with(&cfg, Execution::Sequential).unwrap()
}

fn summary(r: &CampaignReport) -> String {
    let ranks: Vec<String> = r.buckets.keys().map(|k| k.to_string()).collect();
    format!(
        "{}/{} pass, max residual {:.3e}, rank {}",
        r.total_passes(),
        r.rows.len(),
        r.max_residual(),
        ranks.join("/")
    )
}

/// Passes when every sample is evaluated and within tolerance.
fn identity_holds(r: &CampaignReport, samples: usize) -> bool {
    r.rows.len() == samples
        && r.total_evaluated() == samples
        && r.all_evaluated_pass()
        && r.max_residual() <= RESIDUAL_TOL
}

#[test]
fn criterion_01_two_qubit_product() {
    let mut ok = true;
    let start = Instant::now();
    let mut reports = Vec::new();
    for (i, fam) in [BF, PF, BPF].into_iter().enumerate() {
        reports.push((
            fam,
            campaign("bell", &[fam, fam], 1000, 100 + i as u64, "two_q_product"),
        ));
    }
    let elapsed = start.elapsed();
    for (fam, r) in &reports {
        // closed form |a1^2 - a_k^2| |b1^2 - b_k^2| for the flip coordinate k
        let k = fam.flip_index().unwrap();
        let oracle_gap = r
            .rows
            .iter()
            .map(|row| {
                let rep = row.report.as_ref().unwrap();
                let f = |i: usize| {
                    let a = rep.channels[i].unwrap().coefficients();
                    (a[0] * a[0] - a[k] * a[k]).abs()
                };
                (rep.lhs - f(0) * f(1)).abs()
            })
            .fold(0.0, f64::max);
        let pass = identity_holds(r, 1000) && oracle_gap <= RESIDUAL_TOL;
        ok &= line(
            1,
            &format!("two_q_product {fam}x{fam} on bell"),
            pass,
            &format!("{}, oracle gap {oracle_gap:.1e}", summary(r)),
        );
    }
    ok &= line(
        1,
        "sequential runtime",
        elapsed <= SEQUENTIAL_BUDGET,
        &format!("{:.2?} for 3000 draws", elapsed),
    );
    assert!(ok);
}

#[test]
fn criterion_02_rank_table() {
    let rows = rank_table().unwrap();
    let mut ok = rows.len() == 9;
    for r in &rows {
        ok &= line(
            2,
            &format!("rank {} {}", r.state, r.channels),
            r.matches(),
            &format!("expected {}, got {}", r.expected_rank, r.computed_rank),
        );
    }
    // the same ranks for random draws within each family
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut generic = true;
    for r in &rows {
        let psi = r.state.parse::<StateSpec>().unwrap().build().unwrap();
        let fams: Vec<ChannelFamily> = r.channels.split(',').map(|f| f.parse().unwrap()).collect();
        for _ in 0..20 {
            let chans: Vec<KrausChannel> = fams
                .iter()
                .map(|&f| sample_channel(f, &mut rng).unwrap())
                .collect();
            let rho = apply(
                &ChannelAssignment::many_sided(&chans).unwrap(),
                &psi.density_matrix(),
            )
            .unwrap();
            generic &= rho.rank() == r.expected_rank;
        }
    }
    ok &= line(2, "ranks for 20 random draws per scenario", generic, "");
    assert!(ok);
}

#[test]
fn criterion_03_three_qubit_identities() {
    let mut ok = true;
    let cases: [(&str, [ChannelFamily; 3], &str); 5] = [
        ("ghz3", [PF, PF, PF], "three_q_product"),
        ("ghz3", [BF, BF, BF], "three_q_sum"),
        ("ghz3", [PF, PF, BF], "three_q_sum"),
        ("ghz3", [PF, PF, BPF], "three_q_sum"),
        ("w3", [PF, PF, PF], "three_q_sum"),
    ];
    for (i, (state, fams, id)) in cases.iter().enumerate() {
        let r = campaign(state, fams, 100, 300 + i as u64, id);
        let label = format!("{id} {} on {state}", fams.map(|f| f.label()).join(","));
        ok &= line(3, &label, identity_holds(&r, 100), &summary(&r));
    }
    assert!(ok);
}

#[test]
fn criterion_04_four_qubit_identities() {
    let mut ok = true;
    let cases: [(&str, [ChannelFamily; 4], &str); 6] = [
        ("ghz4", [PF, PF, PF, PF], "four_q_product"),
        ("ghz4", [PF, PF, PF, PF], "four_q_product_12_34"),
        ("ghz4", [PF, PF, PF, BF], "four_q_sum_123_4"),
        ("ghz4", [PF, PF, PF, BF], "four_q_sum_12_34"),
        ("w4", [PF, PF, PF, PF], "four_q_sum_123_4"),
        ("w4", [PF, PF, PF, PF], "four_q_sum_12_34"),
    ];
    for (i, (state, fams, id)) in cases.iter().enumerate() {
        let r = campaign(state, fams, 100, 400 + i as u64, id);
        let label = format!("{id} {} on {state}", fams.map(|f| f.label()).join(","));
        ok &= line(4, &label, identity_holds(&r, 100), &summary(&r));
    }
    assert!(ok);
}

#[test]
fn criterion_05_tau3_sweep() {
    let table = figure1_scan(&SweepSpec::default()).unwrap();
    assert_eq!(table.rows.len(), 101);
    let first_zero = table
        .rows
        .iter()
        .find(|r| r.tau3_direct <= ZERO_TAU)
        .map(|r| r.p);
    let crossing_ok = first_zero.is_some_and(|p| (p - EXPECTED_CROSSING).abs() <= CROSSING_WINDOW);
    let mut ok = line(
        5,
        "tau3 first reaches zero near 0.31",
        crossing_ok,
        &format!(
            "first grid p with tau3 <= 1e-6: {first_zero:?}, bisected root {:?}",
            table.zero_crossing
        ),
    );

    let in_range = table
        .rows
        .iter()
        .all(|r| (0.0..=1.0).contains(&r.tau3_direct));
    ok &= line(5, "tau3 within [0, 1]", in_range, "");

    let gap = table
        .rows
        .iter()
        .map(|r| {
            let q = 1.0 - 2.0 * r.p;
            (r.approx_product - q.powi(3))
                .abs()
                .max((r.approx_sum - q.powi(2)).abs())
        })
        .fold(0.0, f64::max);
    ok &= line(
        5,
        "approximation columns match closed forms",
        gap <= CLOSED_FORM_TOL,
        &format!("max gap {gap:.1e}"),
    );

    let zeros_only_at_half = table.rows.iter().all(|r| {
        let zero =
            r.approx_product.abs() <= CLOSED_FORM_TOL || r.approx_sum.abs() <= CLOSED_FORM_TOL;
        !zero || (r.p - 0.5).abs() <= APPROX_ZERO_WINDOW
    });
    let last = table.rows.last().unwrap();
    let reach_zero =
        last.approx_product.abs() <= CLOSED_FORM_TOL && last.approx_sum.abs() <= CLOSED_FORM_TOL;
    ok &= line(
        5,
        "approximations vanish only at p = 0.5",
        zeros_only_at_half && reach_zero,
        "",
    );
    assert!(ok);
}

#[test]
fn criterion_06_measures_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cut: Bipartition = "1|2".parse().unwrap();
    let mut worst = 0.0_f64;
    let mut worst_oracle = 0.0_f64;
    for _ in 0..500 {
        let rho = random_rank2_two_qubit(&mut rng);
        let cw = wootters(&rho).unwrap();
        let gen = bipartite_concurrence(&rho, &cut).unwrap().total;
        worst = worst.max((cw - gen).abs());
        worst_oracle = worst_oracle.max((cw - rank2_wootters_oracle(&to_mat(rho.matrix()))).abs());
    }
    let mut ok = line(
        6,
        "bipartite = Wootters on 500 rank<=2 states",
        worst <= MEASURE_AGREEMENT_TOL && worst_oracle <= MEASURE_AGREEMENT_TOL,
        &format!("max gap {worst:.1e}, vs characteristic-polynomial oracle {worst_oracle:.1e}"),
    );

    for n in [3, 4] {
        let mut worst = 0.0_f64;
        for _ in 0..200 {
            let psi: PureState = random_pure(n, &mut rng).unwrap();
            let rho = psi.density_matrix();
            for (b1, b2) in all_cuts(n) {
                let c = bipartite_concurrence(&rho, &Bipartition::new(b1.clone(), b2).unwrap())
                    .unwrap()
                    .total;
                worst = worst.max((c - pure_cut_concurrence(&psi, &b1)).abs());
            }
        }
        ok &= line(
            6,
            &format!("pure {n}-qubit cuts = sqrt(2(1 - Tr rho_red^2)) on 200 states"),
            worst <= MEASURE_AGREEMENT_TOL,
            &format!("max gap {worst:.1e}"),
        );
    }
    assert!(ok);
}

fn scenario_states() -> Vec<(String, Vec<ChannelFamily>)> {
    let s = |state: &str, f: &[ChannelFamily]| (state.to_string(), f.to_vec());
    vec![
        s("bell", &[BF, BF]),
        s("bell", &[PF, PF]),
        s("bell", &[BPF, BPF]),
        s("bell:alpha=0.6", &[BF, BF]),
        s("ghz3", &[PF, PF, PF]),
        s("ghz3", &[BF, BF, BF]),
        s("ghz3", &[PF, PF, BF]),
        s("ghz3", &[PF, PF, BPF]),
        s("ghz3", &[BPF, BPF, BPF]),
        s("w3", &[PF, PF, PF]),
        s("ghz3", &[GEN, GEN, GEN]),
        s("ghz4", &[PF, PF, PF, PF]),
        s("ghz4", &[PF, PF, PF, BF]),
        s("w4", &[PF, PF, PF, PF]),
        s("w4", &[GEN, BF, PF, BPF]),
    ]
}

fn all_cut_objects(n: usize) -> Vec<Bipartition> {
    all_cuts(n)
        .into_iter()
        .map(|(a, b)| Bipartition::new(a, b).unwrap())
        .collect()
}

#[test]
fn criterion_07_no_spectral_leak() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0_f64;
    let mut leaks = Vec::new();
    let mut checked = 0usize;
    let mut check = |rho: &DensityMatrix, label: &str| {
        for cut in all_cut_objects(rho.n_qubits()) {
            checked += 1;
            match check_four_eigenvalues(rho, &cut) {
                Ok(x) => worst = worst.max(x),
                Err(e) => leaks.push(format!("{label} {cut}: {e}")),
            }
        }
    };
    for (state, fams) in scenario_states() {
        let psi = state.parse::<StateSpec>().unwrap().build().unwrap();
        for _ in 0..5 {
            let chans: Vec<KrausChannel> = fams
                .iter()
                .map(|&f| sample_channel(f, &mut rng).unwrap())
                .collect();
            let rho = apply(
                &ChannelAssignment::many_sided(&chans).unwrap(),
                &psi.density_matrix(),
            )
            .unwrap();
            check(&rho, &state);
            for (k, ch) in chans.iter().enumerate() {
                let n = psi.n_qubits();
                for q in [k + 1, n] {
                    check(&conclab_core::single_sided(ch, q, &psi).unwrap(), &state);
                }
            }
        }
    }
    // the tau3 sweep
    let psi = conclab_core::ghz(3).unwrap();
    for p in SweepSpec::uniform(26).unwrap().grid {
        let ch = conclab_core::ChannelSpec::with_p(BPF, p).build().unwrap();
        let rho = apply(
            &ChannelAssignment::many_sided(&[ch.clone(), ch.clone(), ch]).unwrap(),
            &psi.density_matrix(),
        )
        .unwrap();
        for cut in three_qubit_cuts() {
            checked += 1;
            match check_four_eigenvalues(&rho, &cut) {
                Ok(x) => worst = worst.max(x),
                Err(e) => leaks.push(format!("sweep p={p} {cut}: {e}")),
            }
        }
    }
    let pass = line(
        7,
        "no eigenvalue beyond the top four",
        leaks.is_empty(),
        &format!(
            "{checked} state/cut checks, largest fifth eigenvalue {worst:.1e}, leaks {leaks:?}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_08_channels_physical() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut trace_gap, mut herm, mut min_eig) = (0.0_f64, 0.0_f64, f64::INFINITY);
    let mut applications = 0;
    let mut observe = |rho: &DensityMatrix| {
        let m = rho.matrix();
        let t = m.trace();
        trace_gap = trace_gap.max((t.re - 1.0).abs().max(t.im.abs()));
        herm = herm.max(m.hermiticity_residual());
        min_eig = min_eig.min(*rho.spectrum().last().unwrap());
        applications += 1;
    };
    for (state, fams) in scenario_states() {
        let psi = state.parse::<StateSpec>().unwrap().build().unwrap();
        for _ in 0..20 {
            let chans: Vec<KrausChannel> = fams
                .iter()
                .map(|&f| sample_channel(f, &mut rng).unwrap())
                .collect();
            observe(
                &apply(
                    &ChannelAssignment::many_sided(&chans).unwrap(),
                    &psi.density_matrix(),
                )
                .unwrap(),
            );
            observe(&conclab_core::single_sided(&chans[0], psi.n_qubits(), &psi).unwrap());
        }
    }
    for n in 2..=4 {
        for _ in 0..50 {
            let psi = random_pure(n, &mut rng).unwrap();
            let chans: Vec<KrausChannel> = (0..n)
                .map(|_| sample_channel(GEN, &mut rng).unwrap())
                .collect();
            observe(
                &apply(
                    &ChannelAssignment::many_sided(&chans).unwrap(),
                    &psi.density_matrix(),
                )
                .unwrap(),
            );
        }
    }
    let pass = trace_gap <= TRACE_TOL && herm <= HERMITIAN_TOL && min_eig >= MIN_EIGENVALUE;
    let pass = line(
        8,
        "trace, Hermiticity and positivity after every channel",
        pass,
        &format!("{applications} applications, trace gap {trace_gap:.1e}, hermiticity {herm:.1e}, min eigenvalue {min_eig:.1e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_09_nonmaximal_normalization() {
    let mut ok = true;
    for (i, alpha) in [0.3, 0.6, 0.8].into_iter().enumerate() {
        let mut cfg = CampaignConfig::new(
            &format!("bell:alpha={alpha}"),
            vec![BF, BF],
            100,
            900 + i as u64,
        )
        .unwrap()
        .with_identity("two_q_product")
        .unwrap();
        cfg.normalization_exponent = ExponentChoice::Fixed(1);
        let r = run_campaign_with(&cfg, Execution::Sequential).unwrap();
        let per_e: Vec<String> = r
            .exponent_passes
            .iter()
            .map(|(e, n)| format!("e={e}:{n}/100"))
            .collect();
        let passing: Vec<String> = r
            .exponent_passes
            .iter()
            .filter(|(_, &n)| n == 100)
            .map(|(e, _)| e.to_string())
            .collect();
        ok &= line(
            9,
            &format!("two_q_product BFxBF on bell(alpha={alpha}) with e = 1"),
            identity_holds(&r, 100),
            &format!(
                "{}; passes by exponent [{}]; conventions passing all draws: [{}]",
                summary(&r),
                per_e.join(" "),
                passing.join(",")
            ),
        );
    }
    assert!(ok);
}

#[test]
fn criterion_10_campaign_csv_reproducible() {
    let cfg = CampaignConfig::new("ghz3", vec![PF, PF, BF], 200, 10).unwrap();
    let a = campaign_csv(&run_campaign_with(&cfg, Execution::Sequential).unwrap()).unwrap();
    let b = campaign_csv(&run_campaign_with(&cfg, Execution::Sequential).unwrap()).unwrap();
    let c = campaign_csv(&run_campaign_with(&cfg, Execution::Parallel).unwrap()).unwrap();
    let pass = line(
        10,
        "same seed gives a byte-identical campaign CSV",
        a.as_bytes() == b.as_bytes() && a.as_bytes() == c.as_bytes(),
        &format!("{} bytes, sequential x2 and parallel", a.len()),
    );
    assert!(pass);
}
