//! Verification suites: each maps module invariants onto named checks.

mod brackets;
mod fisher;
mod kahler;
mod madelung;
mod weyl;

use crate::config::{SuiteConfig, SuiteName};
use crate::report::{CheckSet, RunReport, RunSection};

/// Runs the configured suite(s) and assembles the report.
pub fn run_verify(cfg: &SuiteConfig) -> anyhow::Result<RunReport> {
    let started = std::time::Instant::now();
    let mut checks = CheckSet::new(cfg.tolerances.clone());
    let suites: Vec<SuiteName> = match cfg.suite {
        SuiteName::All => vec![
            SuiteName::Kahler,
            SuiteName::Brackets,
            SuiteName::Fisher,
            SuiteName::Madelung,
            SuiteName::Weyl,
        ],
        one => vec![one],
    };
    for s in &suites {
        match s {
            SuiteName::Kahler => kahler::run(cfg, &mut checks)?,
            SuiteName::Brackets => brackets::run(cfg, &mut checks)?,
            SuiteName::Fisher => fisher::run(cfg, &mut checks)?,
            SuiteName::Madelung => madelung::run(cfg, &mut checks)?,
            SuiteName::Weyl => weyl::run(cfg, &mut checks)?,
            SuiteName::All => unreachable!(),
        }
    }
    let unused = checks.unused_overrides();
    if !unused.is_empty() {
        anyhow::bail!("tolerance overrides matched no executed check: {unused:?}");
    }
    let (records, pass) = checks.finish();
    let run = RunSection {
        suite: cfg.suite.as_str().to_string(),
        dim: cfg.dim,
        trials: cfg.trials,
        seed: cfg.seed,
        grid_nodes: cfg.grid_nodes,
        hbar: cfg.hbar,
        mass: cfg.mass,
        tolerance_overrides: cfg.tolerances.clone(),
        pass,
        checks: records,
    };
    Ok(RunReport::new(run, started.elapsed().as_millis()))
}
