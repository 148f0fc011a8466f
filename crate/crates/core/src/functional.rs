//! The Parisi functional `a ↦ F_{φ,a}(x, 1)`, the variational value, and its
//! minimization over step parameters with a fixed number of breakpoints.

use alloc::vec::Vec;
use core::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::initial::InitialCondition;
use crate::math;
use crate::nelder_mead::{self, NelderMeadConfig};
use crate::params::StepParam;
use crate::pde::{GridConfig, Solver, SolverConfig};
use crate::{Error, Result};

/// `F_{φ,a}(x, 1)`.
pub fn parisi_functional(solver: &Solver, phi: &InitialCondition, x: f64, a: &StepParam) -> Result<f64> {
    solver.terminal_value(phi, a, x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParisiProblem {
    beta: f64,
    field: f64,
    phi: InitialCondition,
    steps: usize,
}

impl ParisiProblem {
    /// `steps` is the number of breakpoints `k` of the search space.
    pub fn new(beta: f64, field: f64, phi: InitialCondition, steps: usize) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidConfig("beta must be positive"));
        }
        if !field.is_finite() {
            return Err(Error::InvalidConfig("field must be finite"));
        }
        if steps == 0 {
            return Err(Error::InvalidConfig("number of steps must be at least 1"));
        }
        Ok(Self {
            beta,
            field,
            phi,
            steps,
        })
    }

    /// Sherrington–Kirkpatrick setting with `φ = log cosh`.
    pub fn sk(beta: f64, field: f64, steps: usize) -> Result<Self> {
        Self::new(beta, field, InitialCondition::log_cosh(), steps)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn field(&self) -> f64 {
        self.field
    }

    pub fn phi(&self) -> &InitialCondition {
        &self.phi
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn with_steps(&self, steps: usize) -> Result<Self> {
        Self::new(self.beta, self.field, self.phi.clone(), steps)
    }

    /// `log 2 + F_a(βh, 1) - (β²/2) ∫₀¹ t a(1 - t) dt`.
    pub fn value(&self, solver: &Solver, a: &StepParam) -> Result<f64> {
        let f = parisi_functional(solver, &self.phi, self.beta * self.field, a)?;
        Ok(LN_2 + f - 0.5 * self.beta * self.beta * a.penalty_integral())
    }
}

/// Free-function form of [`ParisiProblem::value`].
pub fn parisi_value(solver: &Solver, problem: &ParisiProblem, a: &StepParam) -> Result<f64> {
    problem.value(solver, a)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct OptimizerConfig {
    pub starts: usize,
    pub seed: u64,
    /// Restrict the search to nonincreasing parameters.
    pub in_m: bool,
    pub nelder_mead: NelderMeadConfig,
    /// Solver used for every objective evaluation.
    pub solver: SolverConfig,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            starts: 8,
            seed: 0,
            in_m: true,
            nelder_mead: NelderMeadConfig::default(),
            solver: SolverConfig {
                grid: GridConfig {
                    x_min: -10.0,
                    x_max: 10.0,
                    step: 0.05,
                },
                order: 40,
            },
        }
    }
}

/// Outcome of one Nelder–Mead run.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StartResult {
    pub start: usize,
    pub param: StepParam,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Unconstrained coordinates of the incumbent.
    pub coords: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Incumbent {
    pub start: usize,
    pub value: f64,
    pub param: StepParam,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MinimizeResult {
    pub best: StepParam,
    pub value: f64,
    /// Total Nelder–Mead iterations across starts.
    pub iterations: usize,
    /// Whether the start that produced the best value converged.
    pub converged: bool,
    /// Successive global incumbents, strictly decreasing in value.
    pub history: Vec<Incumbent>,
    pub starts: Vec<StartResult>,
}

impl MinimizeResult {
    /// Number of clusters among converged start results, where two results
    /// share a cluster if their parameters are within `tol` in L¹.
    pub fn distinct_minimizers(&self, tol: f64) -> usize {
        let mut reps: Vec<&StepParam> = Vec::new();
        for s in self.starts.iter().filter(|s| s.converged) {
            if !reps.iter().any(|r| crate::params::l1_distance(r, &s.param) <= tol) {
                reps.push(&s.param);
            }
        }
        reps.len()
    }
}

/// `σ(y)` stretched so that `[0, 1]` is reached exactly at finite `y`.
fn to_unit(y: f64) -> f64 {
    const PAD: f64 = 1e-6;
    ((math::sigmoid(y) - PAD) / (1.0 - 2.0 * PAD)).clamp(0.0, 1.0)
}

fn from_unit(u: f64) -> f64 {
    const PAD: f64 = 1e-6;
    let s = (u.clamp(0.0, 1.0) * (1.0 - 2.0 * PAD) + PAD).clamp(PAD, 1.0 - PAD);
    math::ln(s / (1.0 - s))
}

/// Maps `2k + 1` unconstrained coordinates to a step parameter: the first
/// `k + 1` become values, the rest breakpoints, each sorted as required.
pub fn decode(coords: &[f64], in_m: bool) -> StepParam {
    let k = coords.len() / 2;
    let mut values: Vec<f64> = coords[..=k].iter().map(|&y| to_unit(y)).collect();
    let mut breakpoints: Vec<f64> = coords[k + 1..].iter().map(|&y| to_unit(y)).collect();
    breakpoints.sort_by(f64::total_cmp);
    if in_m {
        values.sort_by(|a, b| b.total_cmp(a));
    }
    StepParam::new(breakpoints, values).expect("decoded coordinates are always valid")
}

/// Coordinates for a parameter with exactly `k` breakpoints, so that
/// `decode(encode(a, k))` reproduces `a`. Parameters with fewer breakpoints are
/// padded by repeating the last breakpoint, which adds an empty interval.
pub fn encode(a: &StepParam, k: usize) -> Option<Vec<f64>> {
    let b = a.breakpoints();
    let v = a.values();
    if b.len() > k {
        return None;
    }
    let pad_t = b.last().copied().unwrap_or(0.5);
    let mut values: Vec<f64> = v[..v.len() - 1].to_vec();
    let mut breakpoints = b.to_vec();
    let pad_v = if b.is_empty() { v[0] } else { v[v.len() - 2] };
    while breakpoints.len() < k {
        breakpoints.push(pad_t);
        values.push(pad_v);
    }
    values.push(*v.last().unwrap());
    if b.is_empty() {
        // Constant parameter: all values equal, any breakpoints work.
        values.iter_mut().for_each(|m| *m = v[0]);
    }
    Some(values.into_iter().chain(breakpoints).map(from_unit).collect())
}

/// One multi-start run. Start 0 uses `warm` when given; every other start draws
/// uniform coordinates in `[-3, 3]` from a ChaCha8 stream indexed by the start.
pub fn minimize_start(
    problem: &ParisiProblem,
    solver: &Solver,
    config: &OptimizerConfig,
    start: usize,
    warm: Option<&[f64]>,
) -> StartResult {
    let dim = 2 * problem.steps + 1;
    let x0: Vec<f64> = match warm {
        Some(w) if start == 0 && w.len() == dim => w.to_vec(),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(start as u64);
            (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect()
        }
    };
    let objective = |y: &[f64]| {
        problem
            .value(solver, &decode(y, config.in_m))
            .unwrap_or(f64::INFINITY)
    };
    let r = nelder_mead::minimize(objective, &x0, &config.nelder_mead);
    StartResult {
        start,
        param: decode(&r.point, config.in_m),
        value: r.value,
        iterations: r.iterations,
        converged: r.converged,
        coords: r.point,
    }
}

/// Reduces start results (in any order) into the final result; ties go to the
/// lowest start index.
pub fn collect_starts(mut starts: Vec<StartResult>) -> Result<MinimizeResult> {
    if starts.is_empty() {
        return Err(Error::InvalidConfig("at least one start is required"));
    }
    starts.sort_by_key(|s| s.start);
    let mut history: Vec<Incumbent> = Vec::new();
    for s in &starts {
        if history.last().is_none_or(|h| s.value < h.value) {
            history.push(Incumbent {
                start: s.start,
                value: s.value,
                param: s.param.clone(),
            });
        }
    }
    let best = history.last().unwrap();
    let converged = starts[best.start_index(&starts)].converged;
    Ok(MinimizeResult {
        best: best.param.clone(),
        value: best.value,
        iterations: starts.iter().map(|s| s.iterations).sum(),
        converged,
        history,
        starts,
    })
}

impl Incumbent {
    fn start_index(&self, starts: &[StartResult]) -> usize {
        starts.iter().position(|s| s.start == self.start).unwrap()
    }
}

/// Multi-start Nelder–Mead over parameters with `problem.steps()` breakpoints.
pub fn minimize(problem: &ParisiProblem, config: &OptimizerConfig) -> Result<MinimizeResult> {
    minimize_with_warm_start(problem, config, None)
}

/// As [`minimize`], with start 0 seeded from an existing parameter (for example
/// the optimum with fewer breakpoints).
pub fn minimize_with_warm_start(
    problem: &ParisiProblem,
    config: &OptimizerConfig,
    warm: Option<&StepParam>,
) -> Result<MinimizeResult> {
    if config.starts == 0 {
        return Err(Error::InvalidConfig("at least one start is required"));
    }
    let solver = Solver::new(config.solver)?;
    let warm = warm.and_then(|a| encode(a, problem.steps));
    let starts = (0..config.starts)
        .map(|s| minimize_start(problem, &solver, config, s, warm.as_deref()))
        .collect();
    collect_starts(starts)
}
