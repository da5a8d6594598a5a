use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use histlab_cli::error::CliError;
use histlab_cli::exit;
use histlab_cli::reproduce::{check_names, reproduce};
use histlab_cli::run::{lg_csv, lg_rows, run_scenario};
use histlab_cli::scenario::{parse_scenario, Analysis, Prepared, Scenario};
use histlab_cli::Report;

#[derive(Parser)]
#[command(
    name = "histlab",
    version,
    about = "Entangled histories of finite-dimensional quantum systems"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Scenario file (JSON).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the scenario tolerance.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// History states.
    History {
        #[command(subcommand)]
        action: HistoryAction,
    },
    /// Monitor-qubit protocol.
    Monitor {
        #[command(subcommand)]
        action: MonitorAction,
    },
    /// History operators of channels.
    Channel {
        #[command(subcommand)]
        action: ChannelAction,
    },
    /// Two-time pointer coupling.
    Pointer {
        #[command(subcommand)]
        action: PointerAction,
    },
    /// Leggett-Garg sweeps.
    Lg {
        #[command(subcommand)]
        action: LgAction,
    },
    /// Energy/time uncertainty.
    Uncertainty {
        #[command(subcommand)]
        action: UncertaintyAction,
    },
    /// Run a scenario's analyses (all listed ones unless --analysis is given).
    Run {
        #[arg(long = "analysis", value_enum)]
        analyses: Vec<Analysis>,
    },
    /// Check a scenario without running it.
    Validate,
    /// Re-run the reference checks and emit a report bundle.
    ReproducePaper {
        /// Run only the named check (repeatable).
        #[arg(long)]
        only: Vec<String>,
        /// List check names and exit.
        #[arg(long)]
        list: bool,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Subcommand)]
enum HistoryAction {
    Build,
}

#[derive(Subcommand)]
enum MonitorAction {
    Run,
}

#[derive(Subcommand)]
enum ChannelAction {
    History,
}

#[derive(Subcommand)]
enum PointerAction {
    Run,
}

#[derive(Subcommand)]
enum UncertaintyAction {
    Report,
}

#[derive(Subcommand)]
enum LgAction {
    /// Sweep θ and write CSV rows; the summary goes to stderr.
    Sweep {
        #[arg(long)]
        theta_min: Option<f64>,
        #[arg(long)]
        theta_max: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
}

fn load(g: &Global, analyses: &[Analysis]) -> Result<(Scenario, Prepared), CliError> {
    let path = g
        .scenario
        .as_ref()
        .ok_or_else(|| CliError::Usage("--scenario is required".into()))?;
    let mut s = parse_scenario(path)?;
    if let Some(t) = g.tolerance {
        s.tolerance = t;
    }
    let analyses = if analyses.is_empty() {
        s.analyses.clone()
    } else {
        analyses.to_vec()
    };
    let p = s.prepare(&analyses, g.seed)?;
    Ok((s, p))
}

fn emit(g: &Global, text: &str) -> Result<(), CliError> {
    match &g.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn emit_report(g: &Global, report: &Report) -> Result<i32, CliError> {
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    emit(g, &text)?;
    Ok(if report.passed {
        exit::OK
    } else {
        exit::FAILED
    })
}

fn analyse(g: &Global, analyses: &[Analysis]) -> Result<i32, CliError> {
    let (s, p) = load(g, analyses)?;
    let analyses = if analyses.is_empty() {
        s.analyses.clone()
    } else {
        analyses.to_vec()
    };
    let started = std::time::Instant::now();
    let mut report = run_scenario(&p, &analyses);
    report.duration_ms = Some(started.elapsed().as_millis() as u64);
    emit_report(g, &report)
}

fn lg_sweep_cmd(
    g: &Global,
    min: Option<f64>,
    max: Option<f64>,
    steps: Option<usize>,
) -> Result<i32, CliError> {
    let (_, mut p) = load(g, &[Analysis::Lg])?;
    if let Some(l) = p.lg.as_mut() {
        l.theta_min = min.unwrap_or(l.theta_min);
        l.theta_max = max.unwrap_or(l.theta_max);
        l.steps = steps.unwrap_or(l.steps);
        if l.steps < 1
            || !(l.theta_min.is_finite() && l.theta_max.is_finite() && l.theta_min <= l.theta_max)
        {
            return Err(CliError::Invalid(vec![
                "lg sweep needs steps >= 1 and finite theta_min <= theta_max".into(),
            ]));
        }
    }
    let rows = lg_rows(&p).map_err(|e| CliError::Invalid(vec![e]))?;
    let csv = lg_csv(&rows).map_err(CliError::Usage)?;
    emit(g, csv.trim_end())?;
    if let Some(best) = rows.iter().max_by(|a, b| a.k.total_cmp(&b.k)) {
        eprintln!(
            "max K = {:.12} at theta = {:.12} (classical bound 1, violated: {})",
            best.k, best.theta, best.violated
        );
    }
    Ok(exit::OK)
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    let g = &cli.global;
    match cli.command {
        Command::History {
            action: HistoryAction::Build,
        } => analyse(g, &[Analysis::History]),
        Command::Monitor {
            action: MonitorAction::Run,
        } => analyse(g, &[Analysis::Monitor]),
        Command::Channel {
            action: ChannelAction::History,
        } => analyse(g, &[Analysis::Channel]),
        Command::Pointer {
            action: PointerAction::Run,
        } => analyse(g, &[Analysis::Pointer]),
        Command::Uncertainty {
            action: UncertaintyAction::Report,
        } => analyse(g, &[Analysis::Uncertainty]),
        Command::Lg {
            action:
                LgAction::Sweep {
                    theta_min,
                    theta_max,
                    steps,
                },
        } => lg_sweep_cmd(g, theta_min, theta_max, steps),
        Command::Run { analyses } => analyse(g, &analyses),
        Command::Validate => {
            let (s, _) = load(g, &[])?;
            eprintln!("{}: ok ({} analyses)", s.name, s.analyses.len());
            Ok(exit::OK)
        }
        Command::ReproducePaper { only, list, jobs } => {
            if list {
                for name in check_names() {
                    println!("{name}");
                }
                return Ok(exit::OK);
            }
            let bundle = reproduce(&only, jobs).map_err(CliError::Usage)?;
            for c in &bundle.checks {
                eprintln!(
                    "[{}] {} ({} ms)",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.duration_ms
                );
            }
            emit(
                g,
                &serde_json::to_string_pretty(&bundle).expect("bundle serializes"),
            )?;
            Ok(if bundle.passed {
                exit::OK
            } else {
                exit::FAILED
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            for line in e.violations() {
                eprintln!("error: {line}");
            }
            ExitCode::from(exit::INPUT as u8)
        }
    }
}
