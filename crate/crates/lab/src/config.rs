//! Experiment configuration: TOML or JSON, every field optional.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use parisi_core::initial::mollified_pair;
use parisi_core::probe::CriticalBand;
use parisi_core::{InitialCondition, SolverConfig, StepParam};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    ParisiEval,
    Minimize,
    ConvexityScan,
    ConjectureScan,
    IneqSuite,
    MaxPrinciple,
    MollifyDemo,
    Asymptotics,
    Plot,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::ParisiEval => "parisi-eval",
            Command::Minimize => "minimize",
            Command::ConvexityScan => "convexity-scan",
            Command::ConjectureScan => "conjecture-scan",
            Command::IneqSuite => "ineq-suite",
            Command::MaxPrinciple => "max-principle",
            Command::MollifyDemo => "mollify-demo",
            Command::Asymptotics => "asymptotics",
            Command::Plot => "plot",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must match the subcommand when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub problem: ProblemConfig,
    /// `a`, or `a1` for two-parameter commands.
    pub param: ParamSpec,
    /// `a2` for two-parameter commands.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub param2: Option<ParamSpec>,
    pub solver: SolverConfig,
    /// Solver used to re-check candidate violations; defaults to half the grid
    /// step and twice the quadrature order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refined_solver: Option<SolverConfig>,
    pub optimizer: OptimizerSection,
    pub scan: ScanConfig,
    pub tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plot: Option<PlotConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub beta: f64,
    pub field: f64,
    pub phi: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi2: Option<String>,
    /// Replace the initial condition(s) by their mollified approximations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mollify_r: Option<u32>,
    /// Number of breakpoints searched by `minimize`.
    pub steps: usize,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            field: 0.0,
            phi: "log_cosh".into(),
            phi2: None,
            mollify_r: None,
            steps: 1,
        }
    }
}

/// How `values` are read: along `t` (nonincreasing for the variational
/// problem), or along the overlap `q = 1 - t` (nondecreasing).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    #[default]
    Time,
    Overlap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamSpec {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
    pub orientation: Orientation,
}

impl Default for ParamSpec {
    fn default() -> Self {
        Self {
            breakpoints: Vec::new(),
            values: vec![1.0],
            orientation: Orientation::Time,
        }
    }
}

impl ParamSpec {
    pub fn build(&self) -> Result<StepParam> {
        let (b, v) = (self.breakpoints.clone(), self.values.clone());
        Ok(match self.orientation {
            Orientation::Time => StepParam::new(b, v)?,
            Orientation::Overlap => StepParam::from_nondecreasing(b, v)?,
        })
    }
}

/// A list of points, or `count` evenly spaced points from `start` to `stop`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, count } => match count {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n)
                    .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
                    .collect(),
            },
        }
    }

    fn range(start: f64, stop: f64, count: usize) -> Self {
        Grid::Range { start, stop, count }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub alphas: Grid,
    pub xs: Grid,
    pub ms: Grid,
    pub ts: Grid,
    pub m1: f64,
    pub m2: f64,
    pub alpha: f64,
    /// Random crossing parameter pairs for `conjecture-scan`; 0 scans `param`
    /// against `param2`.
    pub pairs: usize,
    pub max_breakpoints: usize,
    pub covariance_checks: usize,
    pub radii: Vec<u32>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            alphas: Grid::range(0.0, 1.0, 11),
            xs: Grid::List(vec![0.0, 1.0, -1.0, 2.0, -2.0]),
            ms: Grid::range(0.0, 1.0, 41),
            ts: Grid::range(0.0, 1.0, 11),
            m1: 0.3,
            m2: 0.7,
            alpha: 0.4,
            pairs: 0,
            max_breakpoints: 3,
            covariance_checks: 200,
            radii: vec![2, 4, 8, 16],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub gap: f64,
    pub mixture: f64,
    pub curve: f64,
    pub covariance: f64,
    pub max_f: f64,
    pub asymptotic: f64,
    pub residual: f64,
    pub mollify_floor: f64,
    pub mollify_tail: f64,
    pub band: CriticalBand,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            gap: 1e-7,
            mixture: 1e-8,
            curve: 1e-8,
            covariance: 1e-10,
            max_f: 1e-7,
            asymptotic: 1e-6,
            residual: 1e-4,
            mollify_floor: 1e-9,
            mollify_tail: 1e-10,
            band: CriticalBand::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub starts: usize,
    pub in_m: bool,
    /// Seed start 0 from `param`.
    pub warm_start: bool,
    pub nelder_mead: parisi_core::nelder_mead::NelderMeadConfig,
    pub solver: SolverConfig,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let d = parisi_core::OptimizerConfig::default();
        Self {
            starts: d.starts,
            in_m: d.in_m,
            warm_start: false,
            nelder_mead: d.nelder_mead,
            solver: d.solver,
        }
    }
}

impl OptimizerSection {
    pub fn core(&self, seed: u64) -> parisi_core::OptimizerConfig {
        parisi_core::OptimizerConfig {
            starts: self.starts,
            seed,
            in_m: self.in_m,
            nelder_mead: self.nelder_mead,
            solver: self.solver,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    #[default]
    Line,
    Scatter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotConfig {
    pub input: PathBuf,
    pub x: String,
    pub y: String,
    /// One polyline per distinct value of this column.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    pub kind: PlotKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl Default for PlotConfig {
    fn default() -> Self {
        Self {
            input: PathBuf::new(),
            x: "x".into(),
            y: "F".into(),
            group: None,
            kind: PlotKind::Line,
            title: None,
            output: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl Format {
    pub fn of(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Toml,
        }
    }
}

/// Syntax errors happen before any key is reached; those carry only a line.
fn located(path: &str, msg: &str) -> anyhow::Error {
    if path.is_empty() || path == "." {
        anyhow::anyhow!("{msg}")
    } else {
        anyhow::anyhow!("at key `{path}`: {msg}")
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text, Format::of(path)).with_context(|| format!("invalid config {}", path.display()))
    }

    /// Parses and validates; errors name the offending key and, for syntax
    /// errors, the line.
    pub fn parse(text: &str, format: Format) -> Result<Self> {
        let config: Self = match format {
            Format::Toml => {
                let de = toml::Deserializer::new(text);
                serde_path_to_error::deserialize(de).map_err(|e| {
                    let path = e.path().to_string();
                    located(&path, e.into_inner().to_string().trim_end())
                })?
            }
            Format::Json => {
                let mut de = serde_json::Deserializer::from_str(text);
                serde_path_to_error::deserialize(&mut de).map_err(|e| {
                    let path = e.path().to_string();
                    located(&path, &e.into_inner().to_string())
                })?
            }
        };
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate().context("key `solver`")?;
        if let Some(s) = &self.refined_solver {
            s.validate().context("key `refined_solver`")?;
        }
        self.optimizer.solver.validate().context("key `optimizer.solver`")?;
        self.phi().context("key `problem.phi`")?;
        if self.problem.phi2.is_some() {
            self.phi_pair().context("key `problem.phi2`")?;
        }
        self.param.build().context("key `param`")?;
        if let Some(p) = &self.param2 {
            p.build().context("key `param2`")?;
        }
        if !(self.problem.beta > 0.0) {
            bail!("key `problem.beta`: must be positive");
        }
        if self.problem.steps == 0 {
            bail!("key `problem.steps`: must be at least 1");
        }
        if self.optimizer.starts == 0 {
            bail!("key `optimizer.starts`: must be at least 1");
        }
        for (key, grid) in [
            ("scan.alphas", &self.scan.alphas),
            ("scan.xs", &self.scan.xs),
            ("scan.ms", &self.scan.ms),
            ("scan.ts", &self.scan.ts),
        ] {
            let pts = grid.points();
            if pts.is_empty() {
                bail!("key `{key}`: grid is empty");
            }
            if pts.iter().any(|v| !v.is_finite()) {
                bail!("key `{key}`: grid has non-finite points");
            }
        }
        if self.scan.radii.is_empty() || self.scan.radii.contains(&0) {
            bail!("key `scan.radii`: need at least one positive radius");
        }
        let t = &self.tolerances;
        for (key, v) in [
            ("gap", t.gap),
            ("mixture", t.mixture),
            ("curve", t.curve),
            ("covariance", t.covariance),
            ("max_f", t.max_f),
            ("asymptotic", t.asymptotic),
            ("residual", t.residual),
            ("mollify_floor", t.mollify_floor),
            ("mollify_tail", t.mollify_tail),
            ("band.grad", t.band.grad),
            ("band.sign", t.band.sign),
            ("band.dt", t.band.dt),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                bail!("key `tolerances.{key}`: must be positive");
            }
        }
        Ok(())
    }

    /// `φ` (mollified when requested).
    pub fn phi(&self) -> Result<InitialCondition> {
        let phi = InitialCondition::builtin(&self.problem.phi)?;
        Ok(match self.problem.mollify_r {
            Some(r) => parisi_core::initial::mollified(&phi, r)?,
            None => phi,
        })
    }

    /// `(φ1, φ2)` with `φ2` defaulting to `φ1`; mollified on a shared partition
    /// when requested.
    pub fn phi_pair(&self) -> Result<(InitialCondition, InitialCondition)> {
        let phi1 = InitialCondition::builtin(&self.problem.phi)?;
        let phi2 = match &self.problem.phi2 {
            Some(s) => InitialCondition::builtin(s)?,
            None => phi1.clone(),
        };
        Ok(match self.problem.mollify_r {
            Some(r) => mollified_pair(&phi1, &phi2, r)?,
            None => (phi1, phi2),
        })
    }

    pub fn refined_solver(&self) -> SolverConfig {
        self.refined_solver.unwrap_or_else(|| self.solver.refined())
    }

    pub fn second_param(&self) -> Result<StepParam> {
        match &self.param2 {
            Some(p) => p.build().context("key `param2`"),
            None => bail!("key `param2`: required by this command"),
        }
    }
}
