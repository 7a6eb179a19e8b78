//! Config-driven runner: reads an experiment description, runs the requested
//! stages and writes CSV/JSON reports plus a pass/fail summary.

pub mod config;
pub mod error;
pub mod report;
pub mod stages;

use std::path::Path;

use serde::Serialize;

pub use config::{ExperimentConfig, Stage};
pub use error::{CliError, Result};
use report::Reporter;
pub use stages::{Check, StageReport};

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub setup: String,
    pub seed: u64,
    pub stages: Vec<StageReport>,
    pub artifacts: Vec<String>,
}

impl RunSummary {
    pub fn failed_stages(&self) -> Vec<Stage> {
        self.stages.iter().filter(|s| !s.passed()).map(|s| s.stage).collect()
    }

    pub fn to_text(&self, hash: &str) -> String {
        let mut t = format!("setup {} seed {} config {hash} version {}\n", self.setup, self.seed, report::VERSION);
        for s in &self.stages {
            for c in &s.checks {
                let tag = match c.passed {
                    Some(true) => "PASS",
                    Some(false) => "FAIL",
                    None => "INFO",
                };
                t += &format!("{tag} {} {}: {}\n", s.stage, c.name, c.detail);
            }
        }
        let failed = self.failed_stages();
        if failed.is_empty() {
            t += "all stages passed\n";
        } else {
            t += &format!("failed stages: {}\n", failed.iter().map(|s| s.name()).collect::<Vec<_>>().join(", "));
        }
        t
    }
}

/// Runs `stages` in pipeline order, writing reports under `out`.
pub fn run_experiment(cfg: &ExperimentConfig, stages: &[Stage], out: &Path) -> Result<RunSummary> {
    let mut stages = stages.to_vec();
    stages.sort();
    stages.dedup();
    let mut reporter = Reporter::new(out, cfg.hash())?;
    let mut ctx = stages::Context::new(cfg)?;
    let mut reports = Vec::new();
    for stage in stages {
        reports.push(stages::run_stage(stage, &mut ctx, &mut reporter)?);
    }
    let mut summary = RunSummary { setup: ctx.setup.name.clone(), seed: cfg.seed, stages: reports, artifacts: Vec::new() };
    summary.artifacts = reporter.written().to_vec();
    summary.artifacts.extend(["summary.json".to_string(), "summary.txt".to_string()]);
    reporter.json("summary.json", &summary)?;
    let text = summary.to_text(reporter.hash());
    reporter.text("summary.txt", &text)?;
    Ok(summary)
}
