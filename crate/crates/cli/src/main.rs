//! `qgeo`: verification suites, grid evolutions, and identity reports.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qgeo_cli::config::{parse_tol, DensityInput, EvolveConfig, ReportConfig, SuiteConfig, SuiteName};
use qgeo_cli::{evolve_cmd, report_cmd, suites};

#[derive(Parser)]
#[command(name = "qgeo", version, about = "State-space geometry verification harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and write a machine-readable report.
    Verify(VerifyArgs),
    /// Run a Schrodinger evolution and write the snapshot stream.
    Evolve(EvolveArgs),
    /// Run the identity chain on a density and emit the fitted constants.
    Report(ReportArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// JSON config file (flags override its fields).
    #[arg(long)]
    config: Option<PathBuf>,
    /// kahler | brackets | fisher | madelung | weyl | all
    #[arg(long)]
    suite: Option<String>,
    /// Hilbert dimension for the state-space suites.
    #[arg(long)]
    dim: Option<usize>,
    /// Random trials per sweep check.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Nodes per axis for grid-based checks.
    #[arg(long)]
    grid_nodes: Option<usize>,
    /// Per-check tolerance override, NAME=VALUE (repeatable).
    #[arg(long = "tol")]
    tolerances: Vec<String>,
    /// Report output path (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvolveArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in density family: gaussian | mixture | uniform.
    #[arg(long)]
    density: Option<String>,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 96)]
    nodes: usize,
    #[arg(long, default_value_t = 7.0)]
    halfwidth: f64,
    /// CSV density input (with --header).
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    header: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify(args) => match run_verify(args) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
        Command::Evolve(args) => {
            let cfg = match load_evolve(args) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return ExitCode::from(2);
                }
            };
            match evolve_cmd::run(&cfg) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Report(args) => match run_report(args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
    }
}

fn run_verify(args: VerifyArgs) -> anyhow::Result<bool> {
    let mut cfg = match &args.config {
        Some(path) => SuiteConfig::load(path)?,
        None => SuiteConfig::default(),
    };
    if let Some(s) = &args.suite {
        cfg.suite = SuiteName::parse(s)?;
    }
    if let Some(d) = args.dim {
        cfg.dim = d;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(g) = args.grid_nodes {
        cfg.grid_nodes = g;
    }
    for tol in &args.tolerances {
        let (name, value) = parse_tol(tol)?;
        cfg.tolerances.insert(name, value);
    }
    if let Some(out) = args.out {
        cfg.out = Some(out);
    }
    cfg.validate()?;

    let report = suites::run_verify(&cfg)?;
    print!("{}", report.summary());
    if let Some(out) = &cfg.out {
        if let Some(parent) = out.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        std::fs::write(out, report.to_json())?;
        println!("report written to {}", out.display());
    }
    Ok(report.run.pass)
}

fn load_evolve(args: EvolveArgs) -> anyhow::Result<EvolveConfig> {
    let mut cfg = EvolveConfig::load(&args.config)?;
    if let Some(out) = args.out {
        cfg.out = out;
    }
    Ok(cfg)
}

fn run_report(args: ReportArgs) -> anyhow::Result<()> {
    let cfg = match (&args.config, &args.density, &args.csv) {
        (Some(path), _, _) => ReportConfig::load(path)?,
        (None, Some(kind), _) => ReportConfig {
            density: match kind.as_str() {
                "gaussian" => DensityInput::Gaussian {
                    dim: args.dim,
                    sigma: args.sigma,
                    nodes: args.nodes,
                    halfwidth: args.halfwidth,
                },
                "mixture" => DensityInput::Mixture {
                    dim: args.dim,
                    separation: 1.2,
                    nodes: args.nodes,
                    halfwidth: args.halfwidth,
                },
                "uniform" => DensityInput::Uniform {
                    dim: args.dim,
                    nodes: args.nodes,
                    halfwidth: args.halfwidth,
                },
                other => anyhow::bail!("unknown density family '{other}'"),
            },
            hbar: 1.0,
            mass: 1.0,
            out: args.out.clone(),
        },
        (None, None, Some(csv)) => ReportConfig {
            density: DensityInput::Csv {
                csv: csv.clone(),
                header: args
                    .header
                    .clone()
                    .ok_or_else(|| anyhow::anyhow!("--csv needs --header"))?,
            },
            hbar: 1.0,
            mass: 1.0,
            out: args.out.clone(),
        },
        _ => anyhow::bail!("report needs --config, --density, or --csv"),
    };
    let value = report_cmd::run(&cfg)?;
    let text = serde_json::to_string_pretty(&value)?;
    println!("{text}");
    if let Some(out) = &cfg.out {
        std::fs::write(out, &text)?;
        eprintln!("report written to {}", out.display());
    }
    Ok(())
}
