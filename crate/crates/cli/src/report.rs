//! Run reports: named checks with residuals, written as JSON.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config_digest: String,
    pub seed: Option<u64>,
    pub wall_time_s: f64,
    pub checks: Vec<Check>,
    pub outputs: Vec<PathBuf>,
}

impl RunReport {
    pub fn new(command: &str, config_digest: String, seed: Option<u64>) -> Self {
        Self { command: command.into(), config_digest, seed, wall_time_s: 0.0, checks: Vec::new(), outputs: Vec::new() }
    }

    /// Records `residual < limit`. A NaN residual fails.
    ///
    /// # Panics
    /// If a check with the same name was already recorded.
    pub fn check(&mut self, name: &str, residual: f64, limit: f64) -> bool {
        assert!(self.checks.iter().all(|c| c.name != name), "check {name} recorded twice");
        let pass = residual < limit;
        self.checks.push(Check { name: name.into(), residual, limit, pass });
        pass
    }

    pub fn output(&mut self, path: PathBuf) {
        self.outputs.push(path);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// sha256 over everything except the wall time.
    pub fn digest(&self) -> String {
        let mut stable = self.clone();
        stable.wall_time_s = 0.0;
        let json = serde_json::to_vec(&stable).expect("report serializes");
        hex::encode(Sha256::digest(json))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{} ({:.3} s)\n", self.command, self.wall_time_s);
        for c in &self.checks {
            let tag = if c.pass { "PASS" } else { "FAIL" };
            s += &format!("  {tag} {:<32} residual {:.3e} (limit {:.1e})\n", c.name, c.residual, c.limit);
        }
        s
    }
}
