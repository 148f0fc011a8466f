use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};

use parisi_lab::config::PlotKind;
use parisi_lab::{configure_threads, load_config, run, Command, Overrides};

/// Numerical experiments on the Parisi functional with step order parameters.
#[derive(Parser, Debug)]
#[command(name = "parisi-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment config (TOML, or JSON by extension).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Config with a `[plot]` section; the flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Input CSV.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    y: Option<String>,
    /// Column whose values split the rows into separate series.
    #[arg(long)]
    group: Option<String>,
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    #[arg(long)]
    title: Option<String>,
    /// SVG file name inside the output directory.
    #[arg(long)]
    output: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Line,
    Scatter,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Solve the PDE and export snapshots.
    Solve(Common),
    /// Evaluate the functional and the variational value at one parameter.
    ParisiEval(Common),
    /// Multi-start minimization of the variational value.
    Minimize(Common),
    /// Gap scan along an ordered direction a1 <= a2.
    ConvexityScan(Common),
    /// Gap scan along crossing directions, with refinement of candidates.
    ConjectureScan(Common),
    /// Mixture, constant-m curve and covariance inequality checks.
    IneqSuite(Common),
    /// Maximum-principle scan of F0 - a F1 - (1-a) F2.
    MaxPrinciple(Common),
    /// Piecewise linear approximation and mollification of an initial condition.
    MollifyDemo(Common),
    /// Linear-tail asymptotics of constant-m solutions.
    Asymptotics(Common),
    /// Render CSV columns to a static SVG.
    Plot(PlotArgs),
}

fn execute(cli: Cli) -> Result<parisi_lab::Verdict> {
    configure_threads()?;
    let (command, common) = match cli.command {
        Sub::Solve(c) => (Command::Solve, c),
        Sub::ParisiEval(c) => (Command::ParisiEval, c),
        Sub::Minimize(c) => (Command::Minimize, c),
        Sub::ConvexityScan(c) => (Command::ConvexityScan, c),
        Sub::ConjectureScan(c) => (Command::ConjectureScan, c),
        Sub::IneqSuite(c) => (Command::IneqSuite, c),
        Sub::MaxPrinciple(c) => (Command::MaxPrinciple, c),
        Sub::MollifyDemo(c) => (Command::MollifyDemo, c),
        Sub::Asymptotics(c) => (Command::Asymptotics, c),
        Sub::Plot(p) => return plot(p),
    };
    let overrides = Overrides {
        out: common.out,
        seed: common.seed,
    };
    let cfg = load_config(command, Some(&common.config), &overrides)?;
    run(command, &cfg)
}

fn plot(p: PlotArgs) -> Result<parisi_lab::Verdict> {
    let overrides = Overrides { out: p.out, seed: p.seed };
    let mut cfg = load_config(Command::Plot, p.config.as_deref(), &overrides)?;
    let mut spec = cfg.plot.take().unwrap_or_default();
    if let Some(v) = p.input {
        spec.input = v;
    }
    if let Some(v) = p.x {
        spec.x = v;
    }
    if let Some(v) = p.y {
        spec.y = v;
    }
    if p.group.is_some() {
        spec.group = p.group;
    }
    if let Some(k) = p.kind {
        spec.kind = match k {
            Kind::Line => PlotKind::Line,
            Kind::Scatter => PlotKind::Scatter,
        };
    }
    if p.title.is_some() {
        spec.title = p.title;
    }
    if p.output.is_some() {
        spec.output = p.output;
    }
    cfg.plot = Some(spec);
    run(Command::Plot, &cfg)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(v) => {
            println!("{}", v.line());
            if v.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
