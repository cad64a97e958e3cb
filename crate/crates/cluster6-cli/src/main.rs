//! Command-line interface: construct stabilizer groups, analyze measured
//! tables, simulate noisy states with Born-rule sampling, enumerate LHV
//! bounds, and diff reports.
//!
//! Exit codes: 0 on success, 1 on flag validation errors, 2 on analysis
//! errors (unreadable input, incomplete tables, coverage failures).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use cluster6::bell::{self, AnalysisReport, BellExpression, ExprName};
use cluster6::data::{
    counts_to_expectations, format_sig6, write_report, CountTable, Measured, MeasurementTable,
};
use cluster6::graph::{
    builtin_graph, generators, lc6_tilde, stabilizer_group, GraphSpec, NamedGraph, StabilizerSet,
};
use cluster6::pauli::Pauli;
use cluster6::sim::{build_named_state, NamedState, NoiseSpec, QuantumState};

#[derive(Parser)]
#[command(
    name = "cluster6",
    version,
    about = "Stabilizer toolkit for the two-photon six-qubit cluster state: \
             construction, simulation, and Bell-inequality analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the full stabilizer group of a graph, one subset per line
    Stabilizers {
        /// Graph: "he6", "lc6", or "edge-list <path>"
        #[arg(long, num_args = 1..=2, default_value = "lc6")]
        graph: Vec<String>,
        /// Local frame: "plain" or "tilde"
        #[arg(long, default_value = "tilde")]
        frame: String,
    },
    /// Analyze a table of measured stabilizer expectation values
    Analyze {
        /// Path to a measurement-table CSV
        #[arg(long)]
        input: Option<PathBuf>,
        /// Bundled dataset name ("table1")
        #[arg(long)]
        data: Option<String>,
        /// Write the machine-readable JSON report here
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Simulate a named state, optionally with noise and sampled counts
    Simulate {
        /// "he6-tilde" or "lc6-tilde"
        #[arg(long)]
        state: String,
        /// White-noise weight kept on the state, in [0, 1]
        #[arg(long)]
        noise_white: Option<f64>,
        /// Per-qubit dephasing, e.g. "1:0.05,3:0.1"
        #[arg(long)]
        dephase: Option<String>,
        /// Shots per measurement setting; omit for exact expectations
        #[arg(long)]
        shots: Option<u64>,
        /// Sampling seed (default 0)
        #[arg(long)]
        seed: Option<u64>,
        /// Write the machine-readable JSON report here
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write the resulting expectation table as CSV here
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Enumerate the local-hidden-variable bound of a Bell expression
    Lhv {
        /// "B", "beta", or "betaprime"
        #[arg(long)]
        expr: String,
    },
    /// Compare two JSON reports field by field
    ReportDiff { a: PathBuf, b: PathBuf },
}

enum CliError {
    Validation(String),
    Analysis(String),
}

// Human-readable output; a closed pipe downstream is not an error.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().write_all(text.as_bytes());
}

impl From<cluster6::Error> for CliError {
    fn from(e: cluster6::Error) -> Self {
        CliError::Analysis(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Analysis(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Stabilizers { graph, frame } => cmd_stabilizers(&graph, &frame),
        Command::Analyze { input, data, report } => cmd_analyze(input, data, report),
        Command::Simulate {
            state,
            noise_white,
            dephase,
            shots,
            seed,
            report,
            table,
        } => cmd_simulate(&state, noise_white, dephase, shots, seed, report, table),
        Command::Lhv { expr } => cmd_lhv(&expr),
        Command::ReportDiff { a, b } => cmd_report_diff(&a, &b),
    }
}

fn cmd_stabilizers(graph_arg: &[String], frame_arg: &str) -> Result<(), CliError> {
    let use_tilde = match frame_arg {
        "plain" => false,
        "tilde" => true,
        other => {
            return Err(CliError::Validation(format!(
                "--frame must be \"plain\" or \"tilde\", got {other:?}"
            )))
        }
    };
    let graph: GraphSpec = match graph_arg {
        [name] if name != "edge-list" => {
            let named: NamedGraph = name
                .parse()
                .map_err(|e| CliError::Validation(format!("--graph: {e}")))?;
            builtin_graph(named)
        }
        [kind, path] if kind == "edge-list" => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Analysis(format!("--graph edge-list {path}: {e}")))?;
            GraphSpec::from_edge_list_text(&text)?
        }
        _ => {
            return Err(CliError::Validation(
                "--graph expects \"he6\", \"lc6\", or \"edge-list <path>\"".into(),
            ))
        }
    };
    let frame = use_tilde.then(cluster6::graph::tilde_frame);
    let stabs = stabilizer_group(&generators(&graph), frame.as_ref())?;
    let mut out = String::new();
    for (subset, op) in stabs.iter() {
        writeln!(out, "{}  {}", subset.key(), op).unwrap();
    }
    emit(&out);
    Ok(())
}

fn cmd_analyze(
    input: Option<PathBuf>,
    data: Option<String>,
    report_path: Option<PathBuf>,
) -> Result<(), CliError> {
    let table = match (input, data) {
        (Some(path), None) => MeasurementTable::load(&path)?,
        (None, Some(name)) if name == "table1" => MeasurementTable::bundled_table1()?,
        (None, Some(name)) => {
            return Err(CliError::Validation(format!(
                "--data: unknown bundled dataset {name:?} (available: table1)"
            )))
        }
        _ => {
            return Err(CliError::Validation(
                "exactly one of --input or --data is required".into(),
            ))
        }
    };
    let stabs = lc6_tilde();
    let report = bell::full_report(&table, &stabs)?;
    emit(&render_summary(&report));
    if let Some(path) = report_path {
        write_report(&report, &path)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    state_arg: &str,
    noise_white: Option<f64>,
    dephase: Option<String>,
    shots: Option<u64>,
    seed: Option<u64>,
    report_path: Option<PathBuf>,
    table_path: Option<PathBuf>,
) -> Result<(), CliError> {
    let named: NamedState = state_arg
        .parse()
        .map_err(|e| CliError::Validation(format!("--state: {e}")))?;
    if let Some(p) = noise_white {
        if !(0.0..=1.0).contains(&p) {
            return Err(CliError::Validation(format!(
                "--noise-white must lie in [0, 1], got {p}"
            )));
        }
    }
    let dephasing = match &dephase {
        Some(text) => parse_dephase(text).map_err(CliError::Validation)?,
        None => BTreeMap::new(),
    };
    if shots == Some(0) {
        return Err(CliError::Validation("--shots must be at least 1".into()));
    }

    let mut state = build_named_state(named);
    let mut source_desc = state_arg.to_string();
    if noise_white.is_some() || !dephasing.is_empty() {
        let spec = NoiseSpec::new(noise_white.unwrap_or(1.0), dephasing.clone())?;
        state = state.apply_noise(&spec)?;
        if let Some(p) = noise_white {
            write!(source_desc, " white={p}").unwrap();
        }
        for (q, r) in &dephasing {
            write!(source_desc, " dephase{q}={r}").unwrap();
        }
    }
    let stabs = lc6_tilde();

    let mut table = match shots {
        Some(shots) => {
            let seed = seed.unwrap_or(0);
            write!(source_desc, " shots={shots} seed={seed}").unwrap();
            let mut table = sample_all_stabilizers(&state, &stabs, shots, seed)?;
            table.set_dataset_id(source_desc.clone());
            table
        }
        None => {
            let mut table = exact_table(&state, &stabs)?;
            table.set_dataset_id(source_desc.clone());
            table
        }
    };
    for name in ExprName::all() {
        for subset in BellExpression::named(name, &stabs)?.subsets() {
            table.set_flag(subset, name);
        }
    }

    let report = bell::full_report(&table, &stabs)?;
    emit(&render_summary(&report));
    if let Some(path) = table_path {
        table.write(&path)?;
    }
    if let Some(path) = report_path {
        write_report(&report, &path)?;
    }
    Ok(())
}

fn parse_dephase(text: &str) -> Result<BTreeMap<usize, f64>, String> {
    let mut out = BTreeMap::new();
    for part in text.split(',') {
        let (qubit, rate) = part
            .split_once(':')
            .ok_or_else(|| format!("--dephase expects \"qubit:rate\" pairs, got {part:?}"))?;
        let qubit: usize = qubit
            .trim()
            .parse()
            .map_err(|_| format!("--dephase: bad qubit index {qubit:?}"))?;
        let rate: f64 = rate
            .trim()
            .parse()
            .map_err(|_| format!("--dephase: bad rate {rate:?}"))?;
        if !(0.0..=0.5).contains(&rate) {
            return Err(format!("--dephase: rate {rate} outside [0, 0.5]"));
        }
        if out.insert(qubit, rate).is_some() {
            return Err(format!("--dephase: qubit {qubit} given twice"));
        }
    }
    Ok(out)
}

// Exact expectations of every stabilizer, sigma 0.
fn exact_table(state: &QuantumState, stabs: &StabilizerSet) -> Result<MeasurementTable, CliError> {
    let mut table = MeasurementTable::default();
    for (subset, op) in stabs.iter() {
        let value = if subset.is_empty() {
            1.0
        } else {
            state.expectation(op)?
        };
        table.insert(*subset, Measured { value, sigma: 0.0 });
    }
    Ok(table)
}

// One measurement setting per stabilizer (identity qubits read in Z),
// deduplicated, each sampled with its own seed offset for independence.
fn sample_all_stabilizers(
    state: &QuantumState,
    stabs: &StabilizerSet,
    shots: u64,
    seed: u64,
) -> Result<MeasurementTable, CliError> {
    let n = stabs.n();
    let mut settings: Vec<Vec<Pauli>> = Vec::new();
    for (_, op) in stabs.iter() {
        let setting: Vec<Pauli> = (1..=n)
            .map(|q| match op.letter(q) {
                Pauli::I => Pauli::Z,
                letter => letter,
            })
            .collect();
        if !settings.contains(&setting) {
            settings.push(setting);
        }
    }
    settings.sort();

    let mut counts = CountTable::new(n);
    for (k, setting) in settings.iter().enumerate() {
        let map: BTreeMap<usize, Pauli> = setting
            .iter()
            .enumerate()
            .map(|(pos, &letter)| (pos + 1, letter))
            .collect();
        let stream_seed = seed.wrapping_add((k as u64 + 1).wrapping_mul(0x9E3779B97F4A7C15));
        let samples = state.sample_setting(&map, shots, stream_seed)?;
        counts.extend_from_samples(&samples)?;
    }
    let targets: Vec<_> = stabs.iter().map(|(s, op)| (*s, *op)).collect();
    Ok(counts_to_expectations(&counts, &targets)?)
}

fn cmd_lhv(expr_arg: &str) -> Result<(), CliError> {
    let name: ExprName = expr_arg
        .parse()
        .map_err(|e| CliError::Validation(format!("--expr: {e}")))?;
    let stabs = lc6_tilde();
    let expr = BellExpression::named(name, &stabs)?;
    let observables: std::collections::BTreeSet<(usize, Pauli)> = expr
        .terms()
        .iter()
        .flat_map(|(_, op)| op.support().into_iter().map(move |q| (q, op.letter(q))))
        .collect();
    let bound = expr.lhv_bound_enumerated()?;
    emit(&format!(
        "{}: lhv_bound = {} (stated {}), {} terms, {} observables, {} assignments\n",
        expr.name(),
        format_sig6(bound),
        format_sig6(expr.lhv_bound()),
        expr.terms().len(),
        observables.len(),
        1u64 << observables.len(),
    ));
    Ok(())
}

fn cmd_report_diff(a: &Path, b: &Path) -> Result<(), CliError> {
    let read = |path: &Path| -> Result<serde_json::Value, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Analysis(format!("{}: invalid JSON: {e}", path.display())))
    };
    let left = read(a)?;
    let right = read(b)?;

    let mut left_fields = BTreeMap::new();
    flatten("", &left, &mut left_fields);
    let mut right_fields = BTreeMap::new();
    flatten("", &right, &mut right_fields);

    let mut paths: Vec<&String> = left_fields.keys().chain(right_fields.keys()).collect();
    paths.sort();
    paths.dedup();

    let mut out = String::new();
    let mut differing = 0usize;
    for path in paths {
        match (left_fields.get(path), right_fields.get(path)) {
            (Some(l), Some(r)) if l == r => {}
            (Some(l), Some(r)) => {
                differing += 1;
                match (l.as_f64(), r.as_f64()) {
                    (Some(lf), Some(rf)) => {
                        writeln!(out, "{path}: {l} -> {r} (delta {})", format_sig6(rf - lf))
                            .unwrap();
                    }
                    _ => writeln!(out, "{path}: {l} -> {r}").unwrap(),
                }
            }
            (Some(l), None) => {
                differing += 1;
                writeln!(out, "{path}: {l} -> (absent)").unwrap();
            }
            (None, Some(r)) => {
                differing += 1;
                writeln!(out, "{path}: (absent) -> {r}").unwrap();
            }
            (None, None) => unreachable!(),
        }
    }
    if differing == 0 {
        writeln!(out, "reports identical").unwrap();
    } else {
        writeln!(out, "{differing} field(s) differ").unwrap();
    }
    emit(&out);
    Ok(())
}

fn flatten(prefix: &str, value: &serde_json::Value, out: &mut BTreeMap<String, serde_json::Value>) {
    match value {
        serde_json::Value::Object(map) => {
            for (key, child) in map {
                let path = if prefix.is_empty() {
                    key.clone()
                } else {
                    format!("{prefix}.{key}")
                };
                flatten(&path, child, out);
            }
        }
        serde_json::Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), child, out);
            }
        }
        leaf => {
            out.insert(prefix.to_string(), leaf.clone());
        }
    }
}

fn render_summary(report: &AnalysisReport) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "dataset: {}",
        report.dataset.as_deref().unwrap_or("(state)")
    )
    .unwrap();
    writeln!(
        out,
        "fidelity    {} +- {}",
        format_sig6(report.fidelity.value),
        format_sig6(report.fidelity.sigma)
    )
    .unwrap();
    let witness_note = match report.witness_violation_sigmas {
        Some(sig) => format!(
            "  (negative by {} sigma: genuine multipartite entanglement)",
            format_sig6(sig)
        ),
        None if report.witness.value < 0.0 => "  (negative: entangled)".to_string(),
        None => "  (not negative: no entanglement certified)".to_string(),
    };
    writeln!(
        out,
        "witness     {} +- {}{witness_note}",
        format_sig6(report.witness.value),
        format_sig6(report.witness.sigma)
    )
    .unwrap();
    for e in &report.expressions {
        let verdict = if e.violated() {
            match e.violation_sigmas {
                Some(sig) => format!("violated by {} sigma", format_sig6(sig)),
                None => "violated".to_string(),
            }
        } else {
            "no violation".to_string()
        };
        writeln!(
            out,
            "{:<11} {} +- {}  lhv_bound {}  quantum_max {}  degree {}  {verdict}",
            e.name,
            format_sig6(e.value),
            format_sig6(e.sigma),
            format_sig6(e.lhv_bound),
            format_sig6(e.quantum_max),
            format_sig6(e.degree),
        )
        .unwrap();
    }
    for note in &report.notes {
        writeln!(out, "note: {note}").unwrap();
    }
    out
}
