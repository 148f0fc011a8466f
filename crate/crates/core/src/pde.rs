//! Grid solver for the Parisi PDE with a step order parameter.
//!
//! Each interval of constant `m` is crossed with one exact Gaussian-smoothing
//! step. The previous snapshot is read through a cubic Hermite interpolant on
//! the grid and through its linear tails outside it.

use alloc::vec::Vec;

use crate::error::{Error, Side};
use crate::initial::{InitialCondition, Line, PairClass, PairDiagnostics, Shape};
use crate::math;
use crate::params::StepParam;
use crate::quad::{self, GibbsStats, HermiteRule};
use crate::Result;

/// Splice mismatch above which the tails are rejected.
pub const TAIL_MISMATCH_LIMIT: f64 = 0.01;
/// Fraction of the grid, on each side, used to fit tails when `φ` declares none.
pub const TAIL_FIT_FRACTION: f64 = 0.1;
pub const MIN_GRID_POINTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub step: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            x_min: -16.0,
            x_max: 16.0,
            step: 0.02,
        }
    }
}

impl GridConfig {
    pub fn new(x_min: f64, x_max: f64, step: f64) -> Result<Self> {
        let g = Self { x_min, x_max, step };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.step.is_finite()) {
            return Err(Error::InvalidGrid("bounds and step must be finite"));
        }
        if self.x_min >= self.x_max {
            return Err(Error::InvalidGrid("x_min must be below x_max"));
        }
        if self.step <= 0.0 {
            return Err(Error::InvalidGrid("step must be positive"));
        }
        if self.len() < MIN_GRID_POINTS {
            return Err(Error::InvalidGrid("grid needs at least 64 points"));
        }
        Ok(())
    }

    /// Number of grid points; the last one is snapped onto `x_max`.
    pub fn len(&self) -> usize {
        math::round((self.x_max - self.x_min) / self.step) as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Actual spacing after snapping.
    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.len() - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.len() {
            self.x_max
        } else {
            self.x_min + self.spacing() * i as f64
        }
    }

    /// The same window at half the spacing.
    pub fn refined(&self) -> Self {
        Self {
            step: 0.5 * self.step,
            ..*self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SolverConfig {
    pub grid: GridConfig,
    /// Gauss–Hermite order.
    pub order: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            order: quad::DEFAULT_ORDER,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.order == 0 || self.order > 256 {
            return Err(Error::InvalidConfig("quadrature order must be in 1..=256"));
        }
        Ok(())
    }

    /// Halved spacing and doubled order.
    pub fn refined(&self) -> Self {
        Self {
            grid: self.grid.refined(),
            order: (2 * self.order).min(256),
        }
    }
}

/// `F(·, t)` on a uniform grid, with nodal slopes and linear tails.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: GridConfig,
    t: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
    tail_left: Line,
    tail_right: Line,
}

impl GridFunction {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn grid(&self) -> &GridConfig {
        &self.grid
    }

    pub fn x_min(&self) -> f64 {
        self.grid.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.grid.x_max
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.grid.point(i)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `∂x F` at the grid points.
    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn tail_left(&self) -> Line {
        self.tail_left
    }

    pub fn tail_right(&self) -> Line {
        self.tail_right
    }

    /// `(x, F, ∂x F)` per grid point.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.len()).map(move |i| (self.x(i), self.values[i], self.slopes[i]))
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x)[0]
    }

    /// `[F, ∂x F, ∂xx F]` of the interpolant at `x`.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        if x >= self.grid.x_max {
            return [self.tail_right.at(x), self.tail_right.slope, 0.0];
        }
        if x <= self.grid.x_min {
            return [self.tail_left.at(x), self.tail_left.slope, 0.0];
        }
        let h = self.grid.spacing();
        let n = self.values.len();
        let i = (math::floor((x - self.grid.x_min) / h) as usize).min(n - 2);
        let x0 = self.grid.x_min + h * i as f64;
        let s = (x - x0) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = monotone_slopes(y0, y1, self.slopes[i], self.slopes[i + 1], h);
        let s2 = s * s;
        let s3 = s2 * s;
        let value = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * h * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * h * d1;
        let dy = (y0 - y1) / h;
        let deriv1 = (6.0 * s2 - 6.0 * s) * dy + (3.0 * s2 - 4.0 * s + 1.0) * d0 + (3.0 * s2 - 2.0 * s) * d1;
        let deriv2 = ((12.0 * s - 6.0) * dy + (6.0 * s - 4.0) * d0 + (6.0 * s - 2.0) * d1) / h;
        [value, deriv1, deriv2]
    }

    /// Largest `|F(x) - F(-x)|` over the grid points inside the symmetric window.
    pub fn evenness_defect(&self) -> f64 {
        let lim = self.grid.x_max.min(-self.grid.x_min);
        self.rows()
            .filter(|(x, _, _)| x.abs() <= lim)
            .map(|(x, v, _)| (v - self.value(-x)).abs())
            .fold(0.0, f64::max)
    }

    /// Shape flags read off the grid with tolerance `tol`.
    pub fn shape(&self, tol: f64) -> Shape {
        let convex = self.slopes.windows(2).all(|w| w[1] >= w[0] - tol);
        Shape {
            convex,
            even: self.evenness_defect() <= tol,
            nondecreasing: self.slopes.iter().all(|&d| d >= -tol),
        }
    }

    fn check_tails(&self) -> Result<()> {
        let n = self.len();
        let right = (self.values[n - 1] - self.tail_right.at(self.grid.x_max)).abs();
        if !(right <= TAIL_MISMATCH_LIMIT) {
            return Err(Error::TailInconsistency {
                side: Side::Right,
                t: self.t,
                mismatch: right,
            });
        }
        let left = (self.values[0] - self.tail_left.at(self.grid.x_min)).abs();
        if !(left <= TAIL_MISMATCH_LIMIT) {
            return Err(Error::TailInconsistency {
                side: Side::Left,
                t: self.t,
                mismatch: left,
            });
        }
        Ok(())
    }
}

/// Fritsch–Carlson limiter, applied only where data and both slopes share a sign.
#[inline]
fn monotone_slopes(y0: f64, y1: f64, d0: f64, d1: f64, h: f64) -> (f64, f64) {
    let delta = (y1 - y0) / h;
    if delta == 0.0 || d0 * delta <= 0.0 || d1 * delta <= 0.0 {
        return (d0, d1);
    }
    let a = d0 / delta;
    let b = d1 / delta;
    let r2 = a * a + b * b;
    if r2 > 9.0 {
        let tau = 3.0 / math::sqrt(r2);
        (tau * a * delta, tau * b * delta)
    } else {
        (d0, d1)
    }
}

/// Classifies a pair of snapshots on their common grid with tolerance `tol`.
pub fn classify_grid_pair(f1: &GridFunction, f2: &GridFunction, tol: f64) -> PairDiagnostics {
    let mut values_ordered = true;
    let mut derivs_ordered = true;
    let mut derivs_ordered_half_line = true;
    for ((x, v1, d1), (_, v2, d2)) in f1.rows().zip(f2.rows()) {
        values_ordered &= v1 <= v2 + tol;
        if d1 > d2 + tol {
            derivs_ordered = false;
            if x >= 0.0 {
                derivs_ordered_half_line = false;
            }
        }
    }
    let (s1, s2) = (f1.shape(tol), f2.shape(tol));
    let convex = s1.convex && s2.convex && values_ordered;
    let f1_ok = convex && s1.even && s2.even && derivs_ordered_half_line;
    let f2_ok = convex && s1.nondecreasing && s2.nondecreasing && derivs_ordered;
    let class = match (f1_ok, f2_ok) {
        (true, true) => PairClass::Both,
        (true, false) => PairClass::F1,
        (false, true) => PairClass::F2,
        (false, false) => PairClass::Neither,
    };
    PairDiagnostics {
        class,
        values_ordered,
        derivs_ordered,
        derivs_ordered_half_line,
    }
}

/// `(1/m) log E exp(m φ(x + √t z))`, or `E φ(x + √t z)` for `m = 0`.
pub fn constant_m_solution(phi: &InitialCondition, m: f64, x: f64, t: f64, rule: &HermiteRule) -> Result<f64> {
    check_time(t)?;
    Ok(rule.log_moment(|u| phi.value(u), x, math::sqrt(t), m)?)
}

/// Value and derivatives of a solution at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Partials {
    pub value: f64,
    pub dx: f64,
    pub dxx: f64,
    /// `½ (∂xx F + m (∂x F)²)` with the local value of `a`.
    pub dt: f64,
}

impl Partials {
    fn from_stats(s: GibbsStats, m: f64) -> Self {
        let dxx = s.dxx(m);
        Self {
            value: s.log_moment,
            dx: s.dx(),
            dxx,
            dt: 0.5 * (dxx + m * s.d1 * s.d1),
        }
    }
}

/// Gibbs-weighted derivatives of the constant-`m` solution.
pub fn constant_m_partials(phi: &InitialCondition, m: f64, x: f64, t: f64, rule: &HermiteRule) -> Result<Partials> {
    check_time(t)?;
    let stats = rule.gibbs(|u| phi.eval(u), x, math::sqrt(t), m)?;
    Ok(Partials::from_stats(stats, m))
}

fn check_time(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::InvalidConfig("time must lie in [0, 1]"))
    }
}

/// Snapshots of one solve: `F(·, t_j)` at `0`, every breakpoint, and `1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveTrace {
    snapshots: Vec<GridFunction>,
    param: StepParam,
    phi: InitialCondition,
    rule: HermiteRule,
}

impl SolveTrace {
    pub fn snapshots(&self) -> &[GridFunction] {
        &self.snapshots
    }

    pub fn last(&self) -> &GridFunction {
        self.snapshots.last().expect("a trace has at least two snapshots")
    }

    pub fn param(&self) -> &StepParam {
        &self.param
    }

    pub fn phi(&self) -> &InitialCondition {
        &self.phi
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.snapshots.iter().map(|s| s.t)
    }

    /// `F(x, 1)`, from the final step evaluated directly at `x`.
    pub fn terminal_value(&self, x: f64) -> Result<f64> {
        Ok(self.partials_at(x, 1.0)?.value)
    }

    /// `F` and its derivatives at `(x, t)`, obtained by smoothing the snapshot
    /// at the start of the interval containing `t` directly at `x`.
    pub fn partials_at(&self, x: f64, t: f64) -> Result<Partials> {
        check_time(t)?;
        let j = self
            .snapshots
            .partition_point(|s| s.t < t)
            .saturating_sub(1)
            .min(self.snapshots.len() - 2);
        let base = &self.snapshots[j];
        let m = self.param.values()[j];
        let dt = (t - base.t).max(0.0);
        let stats = if j == 0 {
            self.rule.gibbs(|u| self.phi.eval(u), x, math::sqrt(dt), m)?
        } else {
            self.rule.gibbs(|u| base.eval(u), x, math::sqrt(dt), m)?
        };
        Ok(Partials::from_stats(stats, m))
    }

    pub fn value_at(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.partials_at(x, t)?.value)
    }

    /// Largest `|∂t F - ½(∂xx F + a(t)(∂x F)²)|` over `samples`, with all
    /// derivatives taken by Richardson-extrapolated central differences.
    ///
    /// Samples must be interior to the grid and strictly inside an interval.
    pub fn pde_residual(&self, samples: &[(f64, f64)]) -> Result<f64> {
        let h = self.snapshots[0].grid.spacing();
        let min_dt = self
            .snapshots
            .windows(2)
            .map(|w| w[1].t - w[0].t)
            .fold(f64::INFINITY, f64::min);
        let mut worst = 0.0f64;
        for &(x, t) in samples {
            let j = self.snapshots.partition_point(|s| s.t < t).max(1) - 1;
            let (lo, hi) = (self.snapshots[j].t, self.snapshots[j + 1].t);
            if !(t > lo && t < hi) {
                return Err(Error::InvalidConfig("residual sample on an interval boundary"));
            }
            let m = self.param.values()[j];
            let delta = (min_dt / 10.0).min(0.5 * (t - lo)).min(0.5 * (hi - t));
            let f = |x: f64, t: f64| self.value_at(x, t);
            let f0 = f(x, t)?;
            let d1 = |s: f64| -> Result<(f64, f64)> {
                let (p, q) = (f(x + s, t)?, f(x - s, t)?);
                Ok(((p - q) / (2.0 * s), (p - 2.0 * f0 + q) / (s * s)))
            };
            let (dx_h, dxx_h) = d1(h)?;
            let (dx_h2, dxx_h2) = d1(0.5 * h)?;
            let dx = (4.0 * dx_h2 - dx_h) / 3.0;
            let dxx = (4.0 * dxx_h2 - dxx_h) / 3.0;
            let dt_of = |s: f64| -> Result<f64> { Ok((f(x, t + s)? - f(x, t - s)?) / (2.0 * s)) };
            let dt = (4.0 * dt_of(0.5 * delta)? - dt_of(delta)?) / 3.0;
            worst = worst.max((dt - 0.5 * (dxx + m * dx * dx)).abs());
        }
        Ok(worst)
    }
}

/// Grid solver holding the configuration and a Gauss–Hermite rule.
#[derive(Clone, Debug)]
pub struct Solver {
    config: SolverConfig,
    rule: HermiteRule,
}

impl Solver {
    pub fn new(config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let rule = HermiteRule::new(config.order)?;
        Ok(Self { config, rule })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn rule(&self) -> &HermiteRule {
        &self.rule
    }

    /// Solves on `[0, 1]`, producing one snapshot per breakpoint of `a` plus both endpoints.
    pub fn solve(&self, phi: &InitialCondition, a: &StepParam) -> Result<SolveTrace> {
        let intervals: Vec<_> = a.intervals().collect();
        let mut snapshots = Vec::with_capacity(intervals.len() + 1);
        snapshots.push(self.initial_snapshot(phi)?);
        for iv in &intervals {
            let next = self.step(phi, snapshots.last().unwrap(), snapshots.len() == 1, iv.value, iv.end)?;
            snapshots.push(next);
        }
        Ok(SolveTrace {
            snapshots,
            param: a.clone(),
            phi: phi.clone(),
            rule: self.rule.clone(),
        })
    }

    /// `F_{φ,a}(x, 1)`.
    ///
    /// Adjacent equal values of `a` are merged first, and the last step is
    /// evaluated directly at `x`, so a constant `a` never touches the grid.
    pub fn terminal_value(&self, phi: &InitialCondition, a: &StepParam, x: f64) -> Result<f64> {
        Ok(self.terminal_partials(phi, a, x)?.value)
    }

    pub fn terminal_partials(&self, phi: &InitialCondition, a: &StepParam, x: f64) -> Result<Partials> {
        Ok(self.terminal_partials_many(phi, a, &[x])?[0])
    }

    /// `F_{φ,a}(x, 1)` at several points, sharing the grid steps.
    pub fn terminal_values(&self, phi: &InitialCondition, a: &StepParam, xs: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .terminal_partials_many(phi, a, xs)?
            .into_iter()
            .map(|p| p.value)
            .collect())
    }

    pub fn terminal_partials_many(&self, phi: &InitialCondition, a: &StepParam, xs: &[f64]) -> Result<Vec<Partials>> {
        let a = a.canonical();
        let intervals: Vec<_> = a.intervals().collect();
        let last = intervals.last().unwrap();
        let sigma = math::sqrt(last.len());
        if intervals.len() == 1 {
            return xs
                .iter()
                .map(|&x| {
                    let stats = self.rule.gibbs(|u| phi.eval(u), x, sigma, last.value)?;
                    Ok(Partials::from_stats(stats, last.value))
                })
                .collect();
        }
        let mut snap = self.initial_snapshot(phi)?;
        for (j, iv) in intervals[..intervals.len() - 1].iter().enumerate() {
            snap = self.step(phi, &snap, j == 0, iv.value, iv.end)?;
        }
        xs.iter()
            .map(|&x| {
                let stats = self.rule.gibbs(|u| snap.eval(u), x, sigma, last.value)?;
                Ok(Partials::from_stats(stats, last.value))
            })
            .collect()
    }

    fn initial_snapshot(&self, phi: &InitialCondition) -> Result<GridFunction> {
        let grid = self.config.grid;
        let n = grid.len();
        let mut values = Vec::with_capacity(n);
        let mut slopes = Vec::with_capacity(n);
        for i in 0..n {
            let [v, d, _] = phi.eval(grid.point(i));
            if !v.is_finite() || !d.is_finite() {
                return Err(Error::InvalidConfig("initial condition is not finite on the grid"));
            }
            values.push(v);
            slopes.push(d);
        }
        let reach = grid.x_max.min(-grid.x_min);
        let (tail_left, tail_right) = match phi.tails() {
            Some(t) if t.threshold <= reach => (t.left, t.right),
            _ => fit_tails(&grid, &values),
        };
        let snap = GridFunction {
            grid,
            t: 0.0,
            values,
            slopes,
            tail_left,
            tail_right,
        };
        snap.check_tails()?;
        Ok(snap)
    }

    /// One smoothing step with constant `m` from `prev` to time `end`.
    /// The first step reads `φ` exactly instead of its grid samples.
    fn step(&self, phi: &InitialCondition, prev: &GridFunction, first: bool, m: f64, end: f64) -> Result<GridFunction> {
        let dt = end - prev.t;
        let sigma = math::sqrt(dt.max(0.0));
        let n = prev.len();
        let mut values = Vec::with_capacity(n);
        let mut slopes = Vec::with_capacity(n);
        for i in 0..n {
            let x = prev.x(i);
            let stats = if first {
                self.rule.gibbs(|u| phi.eval(u), x, sigma, m)?
            } else {
                self.rule.gibbs(|u| prev.eval(u), x, sigma, m)?
            };
            values.push(stats.log_moment);
            slopes.push(stats.d1);
        }
        let shift = |l: Line| Line::new(l.slope, l.intercept + 0.5 * l.slope * l.slope * m * dt);
        let snap = GridFunction {
            grid: prev.grid,
            t: end,
            values,
            slopes,
            tail_left: shift(prev.tail_left),
            tail_right: shift(prev.tail_right),
        };
        snap.check_tails()?;
        Ok(snap)
    }
}

/// Least-squares lines through the outer grid points on each side.
fn fit_tails(grid: &GridConfig, values: &[f64]) -> (Line, Line) {
    let n = values.len();
    let k = ((n as f64 * TAIL_FIT_FRACTION) as usize).max(2);
    let fit = |idx: &mut dyn Iterator<Item = usize>| {
        let (mut sx, mut sy, mut sxx, mut sxy, mut c) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in idx {
            let x = grid.point(i);
            let y = values[i];
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            c += 1.0;
        }
        let slope = (c * sxy - sx * sy) / (c * sxx - sx * sx);
        Line::new(slope, (sy - slope * sx) / c)
    };
    let left = fit(&mut (0..k));
    let right = fit(&mut (n - k..n));
    (left, right)
}
