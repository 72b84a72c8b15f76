//! Command-line driver: configuration loading, subcommand pipelines and artifacts.

pub mod artifacts;
pub mod config;
pub mod pipeline;

use std::path::{Path, PathBuf};

use config::{Command, Geometry};
use pipeline::{invalid_report, Report};

/// One invocation of the tool.
#[derive(Clone, Debug)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    /// Output directory from the command line or environment; overrides the configuration.
    pub out: Option<PathBuf>,
    pub overrides: Vec<String>,
    /// Stored solution for `verify`.
    pub solution: Option<PathBuf>,
}

pub struct Executed {
    pub report: Report,
    pub out_dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl Executed {
    pub fn exit_code(&self) -> i32 {
        self.report.exit_code
    }
}

/// Loads the configuration, runs the pipeline and writes every available artifact.
pub fn execute(inv: &Invocation) -> anyhow::Result<Executed> {
    let cfg = match config::load(&inv.config, &inv.overrides) {
        Ok(cfg) => cfg,
        Err(e) => {
            let out_dir = inv.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            let report = invalid_report(inv.command, e.to_string());
            let written = artifacts::write_all(&out_dir, &report, &Default::default(), false)?;
            return Ok(Executed {
                report,
                out_dir,
                written,
            });
        }
    };
    let out_dir = inv
        .out
        .clone()
        .or_else(|| cfg.raw.output.as_ref().map(|o| o.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    let outcome = pipeline::run(inv.command, &cfg, inv.solution.as_deref());
    let meridian = matches!(cfg.geometry, Geometry::Meridian(_));
    let written = artifacts::write_all(&out_dir, &outcome.report, &outcome.artifacts, meridian)?;
    Ok(Executed {
        report: outcome.report,
        out_dir,
        written,
    })
}

/// Output directory precedence below the command line.
pub fn env_out_dir() -> Option<PathBuf> {
    std::env::var_os("OUT_DIR").filter(|v| !v.is_empty()).map(PathBuf::from)
}

pub fn summary(ex: &Executed) -> String {
    let status = serde_json::to_value(ex.report.status)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    let mut line = format!(
        "{}: {} (exit {}), report at {}",
        ex.report.command,
        status,
        ex.report.exit_code,
        Path::new(&ex.out_dir).join("report.json").display()
    );
    if let Some(m) = &ex.report.message {
        line.push_str(&format!("\n  {m}"));
    }
    line
}
