use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use conclab_core::channels::{
    apply, parse_channel_list, ChannelAssignment, ChannelFamily, ChannelSpec, KrausChannel,
};
use conclab_core::entanglement::{
    bipartite_concurrence, check_four_eigenvalues, tau3, Bipartition,
};
use conclab_core::experiments::{
    campaign_csv, figure1_csv, figure1_scan, fmt_f64, rank_table, rank_table_csv, SweepSpec,
};
use conclab_core::factorization::{
    evaluate_identity, run_campaign_with, Anchor, CampaignConfig, EvalOptions, Execution,
    ExponentChoice, FactorizationIdentity, IdentityChoice, DEFAULT_TOL,
};
use conclab_core::matrix::{ComplexMatrix, DensityMatrix};
use conclab_core::states::{Amplitude, StateSpec};
use conclab_core::{Complex64, Error};

const SEED_VAR: &str = "CONCLAB_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "conclab",
    version,
    about = "Entanglement evolution under local Pauli channels"
)]
struct Cli {
    /// JSON file supplying defaults for the subcommand's options
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Apply one channel per qubit and dump the final density matrix as CSV
    Evolve(EvolveArgs),
    /// Concurrence across a cut, optionally with the per-pair breakdown
    Concurrence(ConcurrenceArgs),
    /// Evaluate one factorization identity for fixed channels
    Verify(VerifyArgs),
    /// Randomized verification over sampled channel parameters
    Campaign(CampaignArgs),
    /// tau3 sweep for GHZ3 under identical bit-phase flips
    Figure1(Figure1Args),
    /// Final-state ranks for the reference scenarios
    RankTable(OutArgs),
}

#[derive(Args, Debug, Default)]
struct ScenarioArgs {
    /// bell, bell:alpha=0.6, ghz3, w3, ghz4, w4, or a JSON amplitude list
    #[arg(long)]
    state: Option<String>,
    /// Comma-separated channels, one per qubit, e.g. BF:p=0.2,PF:p=0.1
    #[arg(long)]
    channels: Option<String>,
}

#[derive(Args, Debug)]
struct OutArgs {
    /// Write output here instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvolveArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct ConcurrenceArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Density matrix as JSON rows of numbers or [re, im] pairs
    #[arg(long, value_name = "PATH", conflicts_with_all = ["state", "channels"])]
    matrix: Option<PathBuf>,
    /// Cut such as 12|3; defaults to the last qubit against the rest
    #[arg(long)]
    cut: Option<String>,
    /// Print m, n, lambda1..4, c_mn for every generator pair
    #[arg(long)]
    pairs: bool,
    /// Also print tau3 (three qubits only)
    #[arg(long)]
    tau3: bool,
    /// Cross-check the four-eigenvalue structure with the direct spectrum
    #[arg(long)]
    leak_check: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// two_q_product, three_q_product, three_q_sum, four_q_product,
    /// four_q_product_12_34, four_q_sum_123_4 or four_q_sum_12_34
    #[arg(long)]
    identity: Option<String>,
    /// Qubit receiving each single-sided channel: last or own
    #[arg(long)]
    anchor: Option<String>,
    /// Normalization exponent e in |lhs * C(psi)^e - rhs|
    #[arg(long, allow_negative_numbers = true)]
    exponent: Option<i32>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    leak_check: bool,
}

#[derive(Args, Debug)]
struct CampaignArgs {
    #[arg(long)]
    state: Option<String>,
    /// Comma-separated families, one per qubit, e.g. PF,PF,BF
    #[arg(long)]
    channels: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    /// Defaults to $CONCLAB_SEED, then 0
    #[arg(long)]
    seed: Option<u64>,
    /// auto or an identity name
    #[arg(long)]
    identity: Option<String>,
    /// auto or an integer
    #[arg(long, allow_negative_numbers = true)]
    exponent: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    anchor: Option<String>,
    #[arg(long)]
    cut: Option<String>,
    /// Keep the odd channel where it is
    #[arg(long)]
    no_relabel: bool,
    #[arg(long)]
    leak_check: bool,
    /// Run without rayon
    #[arg(long)]
    sequential: bool,
    /// Exit 2 if any sample inside its identity's rank range fails
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct Figure1Args {
    /// Grid points on [0, 0.5]
    #[arg(long)]
    points: Option<usize>,
    /// Append the factor-route columns
    #[arg(long)]
    with_factors: bool,
    #[command(flatten)]
    out: OutArgs,
}

/// Options that may come from `--config` for the non-campaign subcommands.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    state: Option<StateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    channels: Option<Vec<ChannelSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    identity: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cut: Option<Bipartition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    anchor: Option<Anchor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    exponent: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    points: Option<usize>,
}

enum Failure {
    Invalid(String),
    Assertion(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_assertion() {
            Failure::Assertion(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Invalid(msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Assertion(msg)) => {
            eprintln!("assertion failed: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Evolve(args) => evolve(args, config),
        Command::Concurrence(args) => concurrence_cmd(args, config),
        Command::Verify(args) => verify(args, config),
        Command::Campaign(args) => campaign(args, config),
        Command::Figure1(args) => figure1(args, config),
        Command::RankTable(args) => rank_table_cmd(args),
    }
}

fn read_json(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn scenario_file(path: Option<&Path>) -> CliResult<ScenarioFile> {
    match path {
        None => Ok(ScenarioFile::default()),
        Some(p) => serde_json::from_value(read_json(p)?)
            .map_err(|e| invalid(format!("{}: {e}", p.display()))),
    }
}

/// Flags win over the config file.
fn merge_scenario(args: &ScenarioArgs, file: &mut ScenarioFile) -> CliResult<()> {
    if let Some(s) = &args.state {
        file.state = Some(s.parse()?);
    }
    if let Some(c) = &args.channels {
        file.channels = Some(parse_channel_list(c)?);
    }
    Ok(())
}

fn build_channels(specs: &[ChannelSpec]) -> CliResult<Vec<KrausChannel>> {
    Ok(specs
        .iter()
        .map(ChannelSpec::build)
        .collect::<Result<_, _>>()?)
}

fn evolved_state(file: &ScenarioFile) -> CliResult<DensityMatrix> {
    let psi = file
        .state
        .as_ref()
        .ok_or_else(|| invalid("--state is required"))?
        .build()?;
    let rho = psi.density_matrix();
    match &file.channels {
        None => Ok(rho),
        Some(specs) => {
            let channels = build_channels(specs)?;
            if channels.len() != psi.n_qubits() {
                return Err(Error::ArityMismatch {
                    expected: psi.n_qubits(),
                    found: channels.len(),
                }
                .into());
            }
            Ok(apply(&ChannelAssignment::many_sided(&channels)?, &rho)?)
        }
    }
}

fn header<T: Serialize>(config: &T) -> CliResult<String> {
    serde_json::to_string(config)
        .map(|j| format!("# {j}\n"))
        .map_err(|e| invalid(e.to_string()))
}

/// A closed pipe (`| head`) is not an error worth reporting.
fn stdout(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn emit(out: &OutArgs, text: &str) -> CliResult<()> {
    match &out.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| invalid(format!("cannot write {}: {e}", path.display()))),
        None => {
            stdout(text);
            Ok(())
        }
    }
}

fn evolve(args: EvolveArgs, config: Option<&Path>) -> CliResult<()> {
    let mut file = scenario_file(config)?;
    merge_scenario(&args.scenario, &mut file)?;
    let rho = evolved_state(&file)?;
    let mut text = header(&file)?;
    text.push_str("row,col,re,im\n");
    let m = rho.matrix();
    for i in 0..m.dim() {
        for j in 0..m.dim() {
            let z = m[(i, j)];
            let _ = writeln!(text, "{i},{j},{},{}", fmt_f64(z.re), fmt_f64(z.im));
        }
    }
    let spectrum: Vec<String> = rho.spectrum().iter().map(|&x| fmt_f64(x)).collect();
    let _ = writeln!(
        text,
        "# rank={} spectrum=[{}]",
        rho.rank(),
        spectrum.join(",")
    );
    emit(&args.out, &text)
}

fn read_matrix(path: &Path) -> CliResult<DensityMatrix> {
    let rows: Vec<Vec<Amplitude>> = serde_json::from_value(read_json(path)?)
        .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let rows = rows
        .into_iter()
        .map(|r| {
            r.into_iter()
                .map(|a| match a {
                    Amplitude::Real(re) => Complex64::new(re, 0.0),
                    Amplitude::Complex([re, im]) => Complex64::new(re, im),
                })
                .collect()
        })
        .collect();
    Ok(DensityMatrix::new(ComplexMatrix::from_rows(rows)?)?)
}

fn concurrence_cmd(args: ConcurrenceArgs, config: Option<&Path>) -> CliResult<()> {
    let mut file = scenario_file(config)?;
    merge_scenario(&args.scenario, &mut file)?;
    if let Some(c) = &args.cut {
        file.cut = Some(c.parse()?);
    }
    let rho = match &args.matrix {
        Some(path) => read_matrix(path)?,
        None => evolved_state(&file)?,
    };
    let cut = match &file.cut {
        Some(c) => c.clone(),
        None => Bipartition::last_qubit(rho.n_qubits())?,
    };
    if args.leak_check {
        check_four_eigenvalues(&rho, &cut)?;
    }
    let breakdown = bipartite_concurrence(&rho, &cut)?;
    let mut text = String::new();
    if args.pairs {
        text.push_str(&header(&file)?);
        text.push_str("m,n,lambda1,lambda2,lambda3,lambda4,c_mn\n");
        for t in &breakdown.per_pair {
            let l: Vec<String> = t.lambdas.iter().map(|&x| fmt_f64(x)).collect();
            let _ = writeln!(text, "{},{},{},{}", t.m, t.n, l.join(","), fmt_f64(t.c_mn));
        }
        let _ = writeln!(text, "# total={}", fmt_f64(breakdown.total));
    } else {
        let _ = writeln!(text, "{}", fmt_f64(breakdown.total));
    }
    if args.tau3 {
        let _ = writeln!(text, "# tau3={}", fmt_f64(tau3(&rho)?));
    }
    emit(&args.out, &text)
}

fn parse_anchor(s: &str) -> CliResult<Anchor> {
    match s.to_ascii_lowercase().as_str() {
        "last" => Ok(Anchor::Last),
        "own" => Ok(Anchor::Own),
        other => Err(invalid(format!(
            "anchor must be `last` or `own`, got {other:?}"
        ))),
    }
}

fn verify(args: VerifyArgs, config: Option<&Path>) -> CliResult<()> {
    let mut file = scenario_file(config)?;
    merge_scenario(&args.scenario, &mut file)?;
    if let Some(id) = &args.identity {
        file.identity = Some(id.clone());
    }
    if let Some(a) = &args.anchor {
        file.anchor = Some(parse_anchor(a)?);
    }
    if args.exponent.is_some() {
        file.exponent = args.exponent;
    }
    if args.tol.is_some() {
        file.tol = args.tol;
    }
    let mut identity: FactorizationIdentity = file
        .identity
        .as_deref()
        .ok_or_else(|| invalid("--identity is required"))?
        .parse()?;
    if let Some(cut) = &file.cut {
        identity = FactorizationIdentity::with_cut(identity.kind, cut.clone())?;
    }
    if let Some(e) = file.exponent {
        identity = identity.with_exponent(e);
    }
    let psi = file
        .state
        .as_ref()
        .ok_or_else(|| invalid("--state is required"))?
        .build()?;
    let specs = file
        .channels
        .as_ref()
        .ok_or_else(|| invalid("--channels is required"))?;
    let channels = build_channels(specs)?;
    let options = EvalOptions {
        anchor: file.anchor.unwrap_or_default(),
        leak_check: args.leak_check,
    };
    let report = evaluate_identity(&identity, &psi, &channels, options)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| invalid(e.to_string()))?;
    stdout(&format!("{json}\n"));
    let tol = file.tol.unwrap_or(DEFAULT_TOL);
    if report.residual > tol {
        return Err(Failure::Assertion(format!(
            "{identity}: residual {} exceeds tolerance {}",
            fmt_f64(report.residual),
            fmt_f64(tol)
        )));
    }
    Ok(())
}

fn env_seed() -> CliResult<Option<u64>> {
    match std::env::var(SEED_VAR) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| invalid(format!("{SEED_VAR}={s:?} is not an integer"))),
        Err(_) => Ok(None),
    }
}

fn campaign(args: CampaignArgs, config: Option<&Path>) -> CliResult<()> {
    let mut value = match config {
        Some(p) => read_json(p)?,
        None => Value::Object(Default::default()),
    };
    let obj = value
        .as_object_mut()
        .ok_or_else(|| invalid("campaign config must be a JSON object"))?;
    if !obj.contains_key("seed") {
        obj.insert("seed".into(), env_seed()?.unwrap_or(0).into());
    }
    if let Some(s) = &args.state {
        obj.insert(
            "state".into(),
            serde_json::to_value(s.parse::<StateSpec>()?).expect("state spec"),
        );
    }
    if let Some(c) = &args.channels {
        let families: Vec<ChannelFamily> = c
            .split(',')
            .filter(|x| !x.trim().is_empty())
            .map(|x| x.trim().parse())
            .collect::<Result<_, _>>()?;
        obj.insert(
            "channels".into(),
            serde_json::to_value(families).expect("families"),
        );
    }
    if let Some(n) = args.samples {
        obj.insert("samples".into(), n.into());
    }
    if let Some(s) = args.seed {
        obj.insert("seed".into(), s.into());
    }
    if let Some(id) = &args.identity {
        obj.insert("identity".into(), id.clone().into());
    }
    if let Some(e) = &args.exponent {
        let choice = if e.eq_ignore_ascii_case("auto") {
            ExponentChoice::Auto
        } else {
            ExponentChoice::Fixed(
                e.parse()
                    .map_err(|_| invalid(format!("bad exponent {e:?}")))?,
            )
        };
        obj.insert(
            "normalization_exponent".into(),
            serde_json::to_value(choice).expect("exponent"),
        );
    }
    if let Some(t) = args.tol {
        obj.insert("tol".into(), t.into());
    }
    if let Some(a) = &args.anchor {
        obj.insert(
            "anchor".into(),
            serde_json::to_value(parse_anchor(a)?).expect("anchor"),
        );
    }
    if let Some(c) = &args.cut {
        obj.insert("cut".into(), c.clone().into());
    }
    if args.no_relabel {
        obj.insert("relabel".into(), false.into());
    }
    if args.leak_check {
        obj.insert("leak_check".into(), true.into());
    }
    let cfg: CampaignConfig =
        serde_json::from_value(value).map_err(|e| invalid(format!("campaign config: {e}")))?;
    let mode = if args.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let report = run_campaign_with(&cfg, mode)?;
    emit(&args.out, &campaign_csv(&report)?)?;

    let summary = format!(
        "samples={} evaluated={} passes={} max_residual={}",
        report.rows.len(),
        report.total_evaluated(),
        report.total_passes(),
        fmt_f64(report.max_residual())
    );
    if args.out.out.is_some() {
        stdout(&format!("{summary}\n"));
    } else {
        eprintln!("{summary}");
    }
    if args.strict && report.claimed {
        let failing = report
            .rows
            .iter()
            .filter(|r| r.report.as_ref().is_some_and(|x| x.applicable) && !r.pass)
            .count();
        if failing > 0 {
            let label = match &cfg.identity {
                IdentityChoice::Auto => "auto".to_string(),
                IdentityChoice::Fixed(s) => s.clone(),
            };
            return Err(Failure::Assertion(format!(
                "{failing} applicable samples fail identity {label}"
            )));
        }
    }
    Ok(())
}

fn figure1(args: Figure1Args, config: Option<&Path>) -> CliResult<()> {
    let file = scenario_file(config)?;
    let points = args.points.or(file.points).unwrap_or(101);
    let spec = SweepSpec::uniform(points)?;
    let table = figure1_scan(&spec)?;
    #[derive(Serialize)]
    struct Header {
        scenario: &'static str,
        points: usize,
        with_factors: bool,
    }
    let hdr = Header {
        scenario: "ghz3 BPF,BPF,BPF identical p",
        points,
        with_factors: args.with_factors,
    };
    emit(&args.out, &figure1_csv(&table, &hdr, args.with_factors)?)?;
    let crossing = table
        .zero_crossing
        .map(fmt_f64)
        .unwrap_or_else(|| "none".into());
    if args.out.out.is_some() {
        stdout(&format!("zero_crossing={crossing}\n"));
    } else {
        eprintln!("zero_crossing={crossing}");
    }
    Ok(())
}

fn rank_table_cmd(args: OutArgs) -> CliResult<()> {
    let rows = rank_table()?;
    #[derive(Serialize)]
    struct Header {
        table: &'static str,
    }
    emit(
        &args,
        &rank_table_csv(
            &rows,
            &Header {
                table: "final-state rank",
            },
        )?,
    )?;
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| !r.matches())
        .map(|r| format!("{} {}", r.state, r.channels))
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Assertion(format!(
            "rank mismatch for {}",
            bad.join("; ")
        )))
    }
}
