//! Machine-readable run reports with a deterministic numeric section.

use std::collections::BTreeMap;

use serde::Serialize;

/// One verified identity or bound.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    /// short statement of the identity or bound being checked
    pub statement: String,
    /// representative left-hand value (worst trial for sweeps)
    pub lhs: f64,
    /// representative right-hand value
    pub rhs: f64,
    /// the asserted residual (max over trials for sweeps)
    pub residual: f64,
    /// `None` marks a reporting-only record that cannot fail
    pub tolerance: Option<f64>,
    pub pass: bool,
    /// number of random trials aggregated into this record
    pub trials: usize,
}

/// Deterministic portion of a run: byte-identical for identical
/// `(config, seed)`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSection {
    pub suite: String,
    pub dim: usize,
    pub trials: usize,
    pub seed: u64,
    pub grid_nodes: usize,
    pub hbar: f64,
    pub mass: f64,
    pub tolerance_overrides: BTreeMap<String, f64>,
    pub pass: bool,
    pub checks: Vec<CheckRecord>,
}

/// Non-deterministic metadata kept outside the numeric section.
#[derive(Debug, Clone, Serialize)]
pub struct MetaSection {
    pub package_version: String,
    pub os: String,
    pub arch: String,
    pub duration_ms: u128,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub meta: MetaSection,
    pub run: RunSection,
}

impl RunReport {
    pub fn new(run: RunSection, duration_ms: u128) -> Self {
        Self {
            meta: MetaSection {
                package_version: env!("CARGO_PKG_VERSION").to_string(),
                os: std::env::consts::OS.to_string(),
                arch: std::env::consts::ARCH.to_string(),
                duration_ms,
            },
            run,
        }
    }

    /// Serialized numeric section only (the byte-stable part).
    pub fn run_section_json(&self) -> String {
        serde_json::to_string_pretty(&self.run).expect("report serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One human-readable line per check.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.run.checks {
            let status = if c.pass { "pass" } else { "FAIL" };
            let tol = c
                .tolerance
                .map(|t| format!("{t:.3e}"))
                .unwrap_or_else(|| "report".into());
            out.push_str(&format!(
                "[{status}] {:<42} residual {:>12.5e}  tol {:>10}  ({})\n",
                c.name, c.residual, tol, c.statement
            ));
        }
        let overall = if self.run.pass { "PASS" } else { "FAIL" };
        out.push_str(&format!(
            "suite {}: {} ({} checks, seed {})\n",
            self.run.suite,
            overall,
            self.run.checks.len(),
            self.run.seed
        ));
        out
    }
}

/// Accumulates checks, applying tolerance overrides by check name.
pub struct CheckSet {
    overrides: BTreeMap<String, f64>,
    used: std::collections::BTreeSet<String>,
    pub records: Vec<CheckRecord>,
}

impl CheckSet {
    pub fn new(overrides: BTreeMap<String, f64>) -> Self {
        Self { overrides, used: Default::default(), records: Vec::new() }
    }

    /// Adds a pass/fail record; `residual <= tolerance` passes.
    pub fn push(
        &mut self,
        name: &str,
        statement: &str,
        default_tol: f64,
        lhs: f64,
        rhs: f64,
        residual: f64,
        trials: usize,
    ) {
        let tol = self.overrides.get(name).copied().unwrap_or(default_tol);
        self.used.insert(name.to_string());
        self.records.push(CheckRecord {
            name: name.to_string(),
            statement: statement.to_string(),
            lhs,
            rhs,
            residual,
            tolerance: Some(tol),
            pass: residual.is_finite() && residual <= tol,
            trials,
        });
    }

    /// Adds a reporting-only record (never fails).
    pub fn push_report_only(
        &mut self,
        name: &str,
        statement: &str,
        lhs: f64,
        rhs: f64,
        residual: f64,
    ) {
        self.used.insert(name.to_string());
        self.records.push(CheckRecord {
            name: name.to_string(),
            statement: statement.to_string(),
            lhs,
            rhs,
            residual,
            tolerance: None,
            pass: true,
            trials: 1,
        });
    }

    /// Tolerance-override keys that matched no executed check.
    pub fn unused_overrides(&self) -> Vec<String> {
        self.overrides
            .keys()
            .filter(|k| !self.used.contains(*k))
            .cloned()
            .collect()
    }

    /// Records sorted by name, with the overall verdict.
    pub fn finish(mut self) -> (Vec<CheckRecord>, bool) {
        self.records.sort_by(|a, b| a.name.cmp(&b.name));
        let pass = self.records.iter().all(|c| c.pass);
        (self.records, pass)
    }
}

/// Worst-case aggregation of a per-trial evaluation `(lhs, rhs, residual)`:
/// keeps the trial with the largest residual. Trials run in parallel with a
/// deterministic (index-ordered) reduction.
pub fn sweep_worst(
    trials: usize,
    eval: impl Fn(u64) -> (f64, f64, f64) + Sync + Send,
) -> (f64, f64, f64) {
    use rayon::prelude::*;
    let results: Vec<(f64, f64, f64)> = (0..trials as u64).into_par_iter().map(eval).collect();
    let mut worst = (0.0, 0.0, f64::NEG_INFINITY);
    for r in results {
        if r.2 > worst.2 {
            worst = r;
        }
    }
    worst
}
