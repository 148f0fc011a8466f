//! Experiment runner for `parisi-core`: config files in, CSV/JSON/SVG out.
//!
//! Every subcommand reads one [`config::ExperimentConfig`], writes its tables
//! plus `effective_config.toml` and `summary.json` into the output directory,
//! and reports a pass/violation verdict.

// `!(a < b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::json;

pub use commands::Verdict;
pub use config::{Command, ExperimentConfig, PlotConfig};
use output::OutDir;

pub const THREADS_ENV: &str = "PARISI_LAB_THREADS";
pub const DEFAULT_OUT: &str = "parisi-lab-out";

/// Caps the global rayon pool from `PARISI_LAB_THREADS` when it is set.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("{THREADS_ENV} must be a positive integer, got `{raw}`"))?;
    // A pool may already exist when called twice in one process; keep it.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Command line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

pub fn load_config(command: Command, path: Option<&Path>, overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(c) = cfg.command {
        if c != command {
            bail!("config is for `{c}` but the subcommand is `{command}`");
        }
    }
    cfg.command = Some(command);
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &overrides.out {
        cfg.out = Some(out.clone());
    }
    Ok(cfg)
}

/// Runs an analysis subcommand and writes its artifacts.
pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<Verdict> {
    if command == Command::Plot {
        return plot_from(cfg);
    }
    let dir = cfg
        .out
        .clone()
        .unwrap_or_else(|| Path::new(DEFAULT_OUT).join(command.name()));
    let out = OutDir::create(&dir)?;
    // The output location is not part of the experiment, so rerunning the
    // effective config elsewhere reproduces every other file byte for byte.
    let effective = ExperimentConfig {
        out: None,
        command: Some(command),
        ..cfg.clone()
    };
    out.write_bytes("effective_config.toml", effective.to_toml()?.as_bytes())?;
    let verdict = commands::run(command, cfg, &out)?;
    out.write_json(
        "summary.json",
        &json!({
            "command": command.name(),
            "status": if verdict.pass { "pass" } else { "violation" },
            "summary": verdict.summary,
            "details": verdict.details,
        }),
    )?;
    Ok(verdict)
}

fn plot_from(cfg: &ExperimentConfig) -> Result<Verdict> {
    let Some(spec) = &cfg.plot else {
        bail!("key `plot`: plot settings are required");
    };
    if spec.input.as_os_str().is_empty() {
        bail!("key `plot.input`: no input CSV given");
    }
    let bytes = std::fs::read(&spec.input).with_context(|| format!("cannot read {}", spec.input.display()))?;
    let series = plot::read_series(&bytes, spec).with_context(|| format!("cannot plot {}", spec.input.display()))?;
    let svg = plot::render(&series, spec);
    let dir = match &cfg.out {
        Some(d) => d.clone(),
        None => spec
            .input
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    let name = spec.output.clone().unwrap_or_else(|| "plot.svg".into());
    let path = OutDir::create(&dir)?.write_bytes(&name, svg.as_bytes())?;
    let points: usize = series.iter().map(|s| s.points.len()).sum();
    Ok(Verdict {
        command: Command::Plot,
        pass: true,
        summary: format!("wrote {} ({} series, {points} points)", path.display(), series.len()),
        details: json!({ "output": path, "series": series.len(), "points": points }),
    })
}
