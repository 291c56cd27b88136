//! Command-line front end: load a network, run the engine, emit a report.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, ValueEnum};

use lipcert::bab::{certify, BabConfig};
use lipcert::feasibility::FeasibilityConfig;
use lipcert::interval::Interval;
use lipcert::network::Network;
use lipcert::norm::NormKind;
use lipcert::report::Report;
use lipcert::subproblem::Mode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NormArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Inf,
    Fro,
}

impl From<NormArg> for NormKind {
    fn from(a: NormArg) -> NormKind {
        match a {
            NormArg::One => NormKind::One,
            NormArg::Two => NormKind::Two,
            NormArg::Inf => NormKind::Inf,
            NormArg::Fro => NormKind::Fro,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Local,
    Global,
}

/// Certified Lipschitz bounds for feed-forward ReLU networks.
#[derive(Parser, Debug)]
#[command(name = "lipcert", version, about)]
struct Cli {
    /// Network file (JSON: {"layers":[{"weights":[[...]],"bias":[...]},...]})
    #[arg(long)]
    network: PathBuf,

    /// Input box as inline JSON ([[lo,hi],...]) or a path to a JSON file.
    /// Required in local mode, ignored in global mode.
    #[arg(long = "box")]
    region: Option<String>,

    /// Operator norm.
    #[arg(long, default_value = "2")]
    p: NormArg,

    /// Approximation factor (>= 1); 1 demands the exact constant.
    #[arg(long, default_value_t = 1.0)]
    k: f64,

    #[arg(long, value_enum, default_value_t = ModeArg::Local)]
    mode: ModeArg,

    /// Cap on branch-and-bound iterations.
    #[arg(long, default_value_t = 1_000_000)]
    max_iterations: u64,

    /// Wall-clock budget in seconds.
    #[arg(long, default_value_t = 300.0)]
    time_limit: f64,

    /// Margin substituted for strict inequalities in feasibility checks.
    #[arg(long, default_value_t = 1e-7)]
    eps_strict: f64,

    /// Record a per-iteration (gub, glb, queue) trace in the report.
    #[arg(long)]
    trace: bool,

    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Seed for the spectral-norm power iteration.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_region(arg: &str) -> Result<Vec<Interval>, String> {
    // Inline JSON first, then as a file path.
    let text = match serde_json::from_str::<Vec<[f64; 2]>>(arg) {
        Ok(pairs) => return pairs_to_intervals(&pairs),
        Err(_) => std::fs::read_to_string(arg)
            .map_err(|e| format!("box is neither inline JSON nor a readable file: {e}"))?,
    };
    let pairs: Vec<[f64; 2]> =
        serde_json::from_str(&text).map_err(|e| format!("malformed box file: {e}"))?;
    pairs_to_intervals(&pairs)
}

fn pairs_to_intervals(pairs: &[[f64; 2]]) -> Result<Vec<Interval>, String> {
    if pairs.is_empty() {
        return Err("box must contain at least one [lo, hi] pair".to_string());
    }
    pairs
        .iter()
        .map(|[lo, hi]| {
            if lo.is_finite() && hi.is_finite() && lo <= hi {
                Ok(Interval::new(*lo, *hi))
            } else {
                Err(format!("malformed box interval [{lo}, {hi}]"))
            }
        })
        .collect()
}

fn run(cli: &Cli) -> Result<(), String> {
    let net =
        Network::from_path(&cli.network).map_err(|e| format!("{}: {e}", cli.network.display()))?;

    let mode = match cli.mode {
        ModeArg::Local => Mode::Local,
        ModeArg::Global => Mode::Global,
    };
    let region = match mode {
        Mode::Local => {
            let arg = cli
                .region
                .as_deref()
                .ok_or_else(|| "--box is required in local mode".to_string())?;
            parse_region(arg)?
        }
        Mode::Global => Vec::new(),
    };

    if cli.k.is_nan() || cli.k < 1.0 {
        return Err(format!("--k must be at least 1, got {}", cli.k));
    }
    if cli.eps_strict.is_nan() || cli.eps_strict <= 0.0 {
        return Err(format!(
            "--eps-strict must be positive, got {}",
            cli.eps_strict
        ));
    }
    if cli.time_limit.is_nan() || cli.time_limit <= 0.0 {
        return Err(format!(
            "--time-limit must be positive, got {}",
            cli.time_limit
        ));
    }

    let cfg = BabConfig {
        norm: cli.p.into(),
        approx_factor: cli.k,
        mode,
        max_iterations: cli.max_iterations,
        time_limit: Duration::from_secs_f64(cli.time_limit),
        feasibility: FeasibilityConfig {
            eps_strict: cli.eps_strict,
            ..FeasibilityConfig::default()
        },
        seed: cli.seed,
        trace: cli.trace,
    };

    let result = certify(&net, &region, &cfg).map_err(|e| e.to_string())?;
    if result.big_m_saturated {
        eprintln!(
            "warning: a feasibility certificate touched the artificial global bound; \
             regions may extend beyond it"
        );
    }

    let report = Report::from_result(
        &result,
        cli.network.display().to_string(),
        mode,
        cli.p.into(),
        cli.k,
        cli.eps_strict,
    );
    let json = report.to_json();
    match &cli.out {
        Some(path) => std::fs::write(path, json.as_bytes())
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => println!("{json}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
