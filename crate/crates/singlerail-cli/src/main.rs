//! Command-line surface over the simulation and analysis library:
//! single-shot simulation, formula verification, tradeoff sweeps, and
//! protocol region maps with deterministic CSV or JSON output.

mod output;
mod verify;

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use output::{fmt_f64, parse_grid, parse_interval, parse_values, Format, Table};
use singlerail::{
    best_protocol, distance_from_eta, eta_from_distance, linspace, max_entanglement_tau,
    purification_optimal_t, purity_from_x, t_from_target_x, tradeoff_curve, Circuit,
    ComparisonPoint, FormulaId, NoiseParams, ProtocolId, ProtocolParams,
};

#[derive(Parser)]
#[command(
    name = "singlerail",
    version,
    about = "Simulate and compare single-rail entanglement distribution schemes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one protocol instance by exact simulation.
    Simulate(SimulateArgs),
    /// Re-check every closed form against the simulator.
    Verify(VerifyArgs),
    /// Tabulate success probability against the purity target.
    Sweep(SweepArgs),
    /// Map the best protocol over distance and source quality.
    Regions(RegionsArgs),
}

fn parse_protocol(s: &str) -> Result<ProtocolId, String> {
    s.parse::<ProtocolId>().map_err(|e| e.to_string())
}

fn parse_formula(s: &str) -> Result<FormulaId, String> {
    s.parse::<FormulaId>().map_err(|e| e.to_string())
}

#[derive(Args)]
struct IoArgs {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the output to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scheme: do-nothing | nla-bob | nla-halfway | purification.
    #[arg(long, value_parser = parse_protocol)]
    protocol: ProtocolId,
    /// Channel transmissivity (exclusive with --d-km).
    #[arg(long)]
    eta: Option<f64>,
    /// Channel length in km (exclusive with --eta).
    #[arg(long)]
    d_km: Option<f64>,
    /// Detector efficiency.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Resource source efficiency.
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    /// Pair source efficiency on the sender side.
    #[arg(long, default_value_t = 1.0)]
    alice_epsilon: f64,
    /// Resource splitter transmissivity (amplified schemes; optional
    /// for purification, where it defaults to the optimum).
    #[arg(long)]
    t: Option<f64>,
    /// Target purity ratio; sets t for the amplified schemes.
    #[arg(long)]
    x: Option<f64>,
    #[command(flatten)]
    io: IoArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Maximum allowed absolute deviation.
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
    /// Nudge this formula's input to force a failure (testing hook).
    #[arg(long, value_parser = parse_formula)]
    inject_fault: Option<FormulaId>,
    #[command(flatten)]
    io: IoArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated schemes (default: all four).
    #[arg(long)]
    protocol: Option<String>,
    /// Transmissivities: list or start:end:step (exclusive with --d-km).
    #[arg(long)]
    eta: Option<String>,
    /// Distances in km: list or start:end:step (exclusive with --eta).
    #[arg(long)]
    d_km: Option<String>,
    /// Detector efficiency.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Resource source efficiency.
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    /// Purity targets: list or start:end:step.
    #[arg(long, default_value = "")]
    x: String,
    #[command(flatten)]
    io: IoArgs,
}

#[derive(Args)]
struct RegionsArgs {
    /// Distance axis in km: start:end.
    #[arg(long, default_value = "0:200")]
    d_km: String,
    /// Source-quality axis: start:end.
    #[arg(long, default_value = "0.5:1")]
    epsilon: String,
    /// Detector efficiency.
    #[arg(long, default_value_t = 0.9)]
    delta: f64,
    /// Grid shape: distance cells x epsilon cells.
    #[arg(long, default_value = "400x200")]
    grid: String,
    #[command(flatten)]
    io: IoArgs,
}

fn resolve_eta(eta: Option<f64>, d_km: Option<f64>) -> Result<(f64, f64), String> {
    match (eta, d_km) {
        (Some(eta), None) => {
            if !(0.0..=1.0).contains(&eta) {
                return Err(format!("--eta {eta} is outside [0, 1]"));
            }
            Ok((eta, distance_from_eta(eta)))
        }
        (None, Some(d)) => {
            if d.is_nan() || d < 0.0 {
                return Err(format!("--d-km {d} must be nonnegative"));
            }
            Ok((eta_from_distance(d), d))
        }
        _ => Err("exactly one of --eta and --d-km is required".to_string()),
    }
}

fn run_simulate(args: &SimulateArgs) -> Result<Table, String> {
    let (eta, d_km) = resolve_eta(args.eta, args.d_km)?;
    let noise = NoiseParams::new(eta, args.delta, args.epsilon)
        .and_then(|n| n.with_alice_epsilon(args.alice_epsilon))
        .map_err(|e| e.to_string())?;

    let t = match args.protocol {
        ProtocolId::DoNothing => {
            if args.t.is_some() || args.x.is_some() {
                return Err("direct transmission takes neither --t nor --x".to_string());
            }
            f64::NAN
        }
        ProtocolId::Purification => {
            if args.x.is_some() {
                return Err(
                    "the purification scheme fixes its own purity; --x is not accepted"
                        .to_string(),
                );
            }
            args.t
                .unwrap_or_else(|| purification_optimal_t(args.epsilon))
        }
        ProtocolId::NlaBob | ProtocolId::NlaHalfway => match (args.t, args.x) {
            (Some(t), None) => t,
            (None, Some(x)) => {
                t_from_target_x(args.protocol, x, &noise).map_err(|e| e.to_string())?
            }
            _ => return Err("amplified schemes take exactly one of --t and --x".to_string()),
        },
    };
    let t_wiring = if t.is_nan() { 0.5 } else { t };
    let tau = max_entanglement_tau(args.protocol, t_wiring, &noise);
    let params = ProtocolParams::new(tau, t_wiring).map_err(|e| e.to_string())?;
    let outcome = Circuit::build(args.protocol, params, noise)
        .map_err(|e| e.to_string())?
        .evaluate()
        .map_err(|e| e.to_string())?;

    let mut table = Table::new(vec![
        "protocol",
        "eta",
        "d_km",
        "delta",
        "epsilon",
        "alice_epsilon",
        "tau",
        "t",
        "x",
        "p_f",
        "p_0",
        "p_success",
        "purity",
        "click_multiplicity",
        "psi_f_10",
        "psi_f_01",
    ]);
    table.push(vec![
        args.protocol.to_string(),
        fmt_f64(eta),
        fmt_f64(d_km),
        fmt_f64(args.delta),
        fmt_f64(args.epsilon),
        fmt_f64(args.alice_epsilon),
        fmt_f64(tau),
        fmt_f64(t),
        fmt_f64(outcome.x),
        fmt_f64(outcome.p_f),
        fmt_f64(outcome.p_0),
        fmt_f64(outcome.p_success),
        fmt_f64(purity_from_x(outcome.x)),
        outcome.click_multiplicity.to_string(),
        fmt_f64(outcome.psi_f.amplitude(&[1, 0]).re),
        fmt_f64(outcome.psi_f.amplitude(&[0, 1]).re),
    ]);
    Ok(table)
}

fn run_verify(args: &VerifyArgs) -> Result<(Table, i32), String> {
    if args.tolerance.is_nan() || args.tolerance <= 0.0 {
        return Err("--tolerance must be positive".to_string());
    }
    let mut table = Table::new(vec!["formula", "points", "max_abs_error", "status"]);
    let mut code = 0;
    for row in verify::run(args.inject_fault) {
        let pass = row.max_abs_error <= args.tolerance;
        if !pass {
            code = 1;
        }
        table.push(vec![
            row.formula.to_string(),
            row.points.to_string(),
            fmt_f64(row.max_abs_error),
            if pass { "PASS" } else { "FAIL" }.to_string(),
        ]);
    }
    Ok((table, code))
}

fn run_sweep(args: &SweepArgs) -> Result<Table, String> {
    let protocols: Vec<ProtocolId> = match &args.protocol {
        None => ProtocolId::ALL.to_vec(),
        Some(spec) => spec
            .split(',')
            .map(|p| parse_protocol(p.trim()))
            .collect::<Result<_, _>>()?,
    };
    let channels: Vec<(f64, f64)> = match (&args.eta, &args.d_km) {
        (Some(spec), None) => parse_values(spec)?
            .into_iter()
            .map(|eta| (eta, distance_from_eta(eta)))
            .collect(),
        (None, Some(spec)) => parse_values(spec)?
            .into_iter()
            .map(|d| (eta_from_distance(d), d))
            .collect(),
        _ => return Err("exactly one of --eta and --d-km is required".to_string()),
    };
    for &(eta, d) in &channels {
        if !(0.0..=1.0).contains(&eta) || d.is_nan() || d < 0.0 {
            return Err(format!("channel value eta={eta} is out of range"));
        }
    }
    let xs = parse_values(&args.x)?;
    for &x in &xs {
        if x.is_nan() || x <= 0.0 {
            return Err(format!("purity target {x} must be positive"));
        }
    }

    let mut rows = Vec::new();
    for &protocol in &protocols {
        for &(eta, d_km) in &channels {
            for point in tradeoff_curve(protocol, eta, args.delta, args.epsilon, &xs) {
                rows.push((protocol, eta, d_km, point));
            }
        }
    }
    rows.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.3.x.total_cmp(&b.3.x))
            .then(a.1.total_cmp(&b.1))
    });

    let mut table = Table::new(vec![
        "protocol",
        "eta",
        "d_km",
        "delta",
        "epsilon",
        "x",
        "p_success",
        "feasible",
        "dominated",
    ]);
    for (protocol, eta, d_km, point) in rows {
        table.push(vec![
            protocol.to_string(),
            fmt_f64(eta),
            fmt_f64(d_km),
            fmt_f64(args.delta),
            fmt_f64(args.epsilon),
            fmt_f64(point.x),
            fmt_f64(point.p_success),
            point.feasible.to_string(),
            point.dominated.to_string(),
        ]);
    }
    Ok(table)
}

fn run_regions(args: &RegionsArgs) -> Result<Table, String> {
    let (d_start, d_end) = parse_interval(&args.d_km)?;
    if d_start < 0.0 {
        return Err("distances must be nonnegative".to_string());
    }
    let (e_start, e_end) = parse_interval(&args.epsilon)?;
    if !(0.0..=1.0).contains(&e_start) || !(0.0..=1.0).contains(&e_end) {
        return Err("source quality must lie in [0, 1]".to_string());
    }
    if !(0.0..=1.0).contains(&args.delta) {
        return Err("detector efficiency must lie in [0, 1]".to_string());
    }
    let (n_distance, n_epsilon) = parse_grid(&args.grid)?;

    let epsilons = linspace(e_start, e_end, n_epsilon);
    let cells: Vec<(f64, f64)> = linspace(d_start, d_end, n_distance)
        .into_iter()
        .flat_map(|d| epsilons.iter().map(move |&e| (d, e)))
        .collect();
    let delta = args.delta;
    let points: Vec<ComparisonPoint> = with_thread_cap(|| {
        cells
            .par_iter()
            .map(|&(d, e)| best_protocol(d, delta, e))
            .collect()
    });

    let mut table = Table::new(vec![
        "d_km",
        "epsilon",
        "delta",
        "x_target",
        "p_do_nothing",
        "p_nla_bob",
        "p_nla_halfway",
        "p_purification",
        "winner",
    ]);
    for point in points {
        table.push(vec![
            fmt_f64(point.d_km),
            fmt_f64(point.epsilon),
            fmt_f64(point.delta),
            fmt_f64(point.x_target),
            fmt_f64(point.p_by_protocol[&ProtocolId::DoNothing]),
            fmt_f64(point.p_by_protocol[&ProtocolId::NlaBob]),
            fmt_f64(point.p_by_protocol[&ProtocolId::NlaHalfway]),
            fmt_f64(point.p_by_protocol[&ProtocolId::Purification]),
            point.winner.to_string(),
        ]);
    }
    Ok(table)
}

/// Runs the closure under a thread pool capped by DISTILL_THREADS when
/// the variable holds a positive count; otherwise uses the default.
fn with_thread_cap<T: Send>(work: impl FnOnce() -> T + Send) -> T {
    let threads = std::env::var("DISTILL_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1);
    if let Some(n) = threads {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            return pool.install(work);
        }
    }
    work()
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    let outcome = match &cli.command {
        Command::Simulate(args) => run_simulate(args).map(|t| (t, &args.io, 0)),
        Command::Verify(args) => run_verify(args).map(|(t, code)| (t, &args.io, code)),
        Command::Sweep(args) => run_sweep(args).map(|t| (t, &args.io, 0)),
        Command::Regions(args) => run_regions(args).map(|t| (t, &args.io, 0)),
    };
    let (table, io, code) = match outcome {
        Ok(v) => v,
        Err(message) => {
            eprintln!("error: {message}");
            std::process::exit(2);
        }
    };
    let rendered = table.render(io.format);
    if let Some(path) = &io.out {
        if let Err(e) = fs::write(path, rendered.as_bytes()) {
            eprintln!("error: cannot write {}: {e}", path.display());
            std::process::exit(2);
        }
    } else if std::io::stdout()
        .lock()
        .write_all(rendered.as_bytes())
        .is_err()
    {
        std::process::exit(2);
    }
    std::process::exit(code);
}
