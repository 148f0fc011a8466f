//! Numerical probes of the convexity properties of the Parisi functional and
//! of the inequalities behind them.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::Error;
use crate::initial::{classify_pair, InitialCondition, PairClass, PairDiagnostics};
use crate::math;
use crate::params::{convex_combination, StepParam};
use crate::pde::{constant_m_partials, constant_m_solution, Partials, Solver};
use crate::quad::HermiteRule;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ScanKind {
    OneSided,
    Conjecture,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GapRecord {
    pub alpha: f64,
    pub x: f64,
    /// `α P(a1) + (1-α) P(a2) - P(α a1 + (1-α) a2)`.
    pub gap: f64,
}

/// A negative gap and its value after refining the solver.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Candidate {
    pub alpha: f64,
    pub x: f64,
    pub gap: f64,
    pub refined_gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ConvexityReport {
    pub kind: ScanKind,
    pub phi1: String,
    pub phi2: String,
    pub a1: StepParam,
    pub a2: StepParam,
    pub tolerance: f64,
    pub records: Vec<GapRecord>,
    pub min_gap: f64,
    /// `max(0, -min_gap)`.
    pub max_violation: f64,
    /// Gaps below `-tolerance`, re-evaluated with the refined solver.
    pub candidates: Vec<Candidate>,
}

impl ConvexityReport {
    /// Candidates whose refined gap is still below `-tolerance`.
    pub fn surviving(&self) -> impl Iterator<Item = &Candidate> {
        self.candidates.iter().filter(move |c| c.refined_gap < -self.tolerance)
    }

    pub fn passes(&self) -> bool {
        match self.kind {
            ScanKind::OneSided => self.min_gap >= -self.tolerance,
            ScanKind::Conjecture => self.surviving().next().is_none(),
        }
    }

    pub fn gap(&self, alpha: f64, x: f64) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.alpha == alpha && r.x == x)
            .map(|r| r.gap)
    }
}

fn gap_records(
    solver: &Solver,
    phi1: &InitialCondition,
    phi2: &InitialCondition,
    a1: &StepParam,
    a2: &StepParam,
    alphas: &[f64],
    xs: &[f64],
) -> Result<Vec<GapRecord>> {
    let p1 = solver.terminal_values(phi1, a1, xs)?;
    let p2 = solver.terminal_values(phi2, a2, xs)?;
    let mut out = Vec::with_capacity(alphas.len() * xs.len());
    for &alpha in alphas {
        let phi = InitialCondition::mix(alpha, phi1, phi2)?;
        let a = convex_combination(alpha, a1, a2)?;
        let mixed = solver.terminal_values(&phi, &a, xs)?;
        for (i, &x) in xs.iter().enumerate() {
            let gap = alpha * p1[i] + (1.0 - alpha) * p2[i] - mixed[i];
            out.push(GapRecord { alpha, x, gap });
        }
    }
    Ok(out)
}

fn gap_at(
    solver: &Solver,
    phi1: &InitialCondition,
    phi2: &InitialCondition,
    a1: &StepParam,
    a2: &StepParam,
    alpha: f64,
    x: f64,
) -> Result<f64> {
    Ok(gap_records(solver, phi1, phi2, a1, a2, &[alpha], &[x])?[0].gap)
}

fn check_grids(alphas: &[f64], xs: &[f64]) -> Result<()> {
    if alphas.is_empty() || xs.is_empty() {
        return Err(Error::InvalidConfig("scan grids must be nonempty"));
    }
    if alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::InvalidConfig("mixing weights must lie in [0, 1]"));
    }
    Ok(())
}

fn summarize(
    kind: ScanKind,
    phi1: &InitialCondition,
    phi2: &InitialCondition,
    a1: &StepParam,
    a2: &StepParam,
    tolerance: f64,
    records: Vec<GapRecord>,
) -> ConvexityReport {
    let min_gap = records.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min);
    ConvexityReport {
        kind,
        phi1: phi1.to_string(),
        phi2: phi2.to_string(),
        a1: a1.clone(),
        a2: a2.clone(),
        tolerance,
        records,
        min_gap,
        max_violation: (-min_gap).max(0.0),
        candidates: Vec::new(),
    }
}

/// Gaps along a one-sided direction `a1 ≤ a2`, with the mixed initial
/// condition `α φ1 + (1-α) φ2` on the left side.
#[allow(clippy::too_many_arguments)]
pub fn one_sided_scan(
    solver: &Solver,
    phi1: &InitialCondition,
    phi2: &InitialCondition,
    a1: &StepParam,
    a2: &StepParam,
    alphas: &[f64],
    xs: &[f64],
    tolerance: f64,
) -> Result<ConvexityReport> {
    check_grids(alphas, xs)?;
    if let Err((t, m1, m2)) = a1.dominated_by(a2) {
        return Err(Error::OrderingViolation { t, a1: m1, a2: m2 });
    }
    if phi1 != phi2 && !classify_pair(phi1, phi2).class.is_valid() {
        return Err(Error::Precondition("initial conditions do not form an F1 or F2 pair"));
    }
    let records = gap_records(solver, phi1, phi2, a1, a2, alphas, xs)?;
    Ok(summarize(ScanKind::OneSided, phi1, phi2, a1, a2, tolerance, records))
}

/// Gaps along an arbitrary direction with a single `φ`. Gaps below
/// `-tolerance` are re-evaluated with `refined` before being kept as candidates.
#[allow(clippy::too_many_arguments)]
pub fn conjecture_scan(
    solver: &Solver,
    refined: &Solver,
    phi: &InitialCondition,
    a1: &StepParam,
    a2: &StepParam,
    alphas: &[f64],
    xs: &[f64],
    tolerance: f64,
) -> Result<ConvexityReport> {
    check_grids(alphas, xs)?;
    let records = gap_records(solver, phi, phi, a1, a2, alphas, xs)?;
    let mut report = summarize(ScanKind::Conjecture, phi, phi, a1, a2, tolerance, records);
    for r in report.records.clone() {
        if r.gap < -tolerance {
            let refined_gap = gap_at(refined, phi, phi, a1, a2, r.alpha, r.x)?;
            report.candidates.push(Candidate {
                alpha: r.alpha,
                x: r.x,
                gap: r.gap,
                refined_gap,
            });
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CurveReport {
    pub x: f64,
    pub ms: Vec<f64>,
    pub values: Vec<f64>,
    /// `v[i-1] - 2 v[i] + v[i+1]` for interior points.
    pub second_differences: Vec<f64>,
    pub min_second_difference: f64,
    pub tolerance: f64,
    pub convex: bool,
}

/// `m ↦ (1/m) log E exp(m φ(x + z))` on a uniform grid of `m`, with a
/// convexity verdict from its second differences.
pub fn constant_m_curve(rule: &HermiteRule, phi: &InitialCondition, x: f64, ms: &[f64], tolerance: f64) -> Result<CurveReport> {
    if phi.class() == crate::initial::PhiClass::None {
        return Err(Error::Precondition("initial condition must be even convex or nondecreasing convex"));
    }
    if ms.len() < 3 {
        return Err(Error::InvalidConfig("curve needs at least three values of m"));
    }
    let h = ms[1] - ms[0];
    if h <= 0.0 || ms.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-12) {
        return Err(Error::InvalidConfig("m grid must be uniform and increasing"));
    }
    let values = ms
        .iter()
        .map(|&m| constant_m_solution(phi, m, x, 1.0, rule))
        .collect::<Result<Vec<_>>>()?;
    let second_differences: Vec<f64> = values.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect();
    let min_second_difference = second_differences.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(CurveReport {
        x,
        ms: ms.to_vec(),
        values,
        second_differences,
        min_second_difference,
        tolerance,
        convex: min_second_difference >= -tolerance,
    })
}

/// Which correlation inequality a covariance check exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CovarianceVariant {
    /// Both functions nondecreasing.
    Monotone,
    /// One function even and one odd, both nondecreasing on `[0, ∞)`, an even
    /// weight, and `x ≥ 0`.
    EvenOdd,
}

/// Weight `W(y)` for a covariance check, as a function of `y = x + g`.
#[derive(Clone, Copy)]
pub enum Weight<'a> {
    Uniform,
    /// A density that must already satisfy `E W = 1`.
    Density(&'a dyn Fn(f64) -> f64),
    /// `log W` up to an additive constant; normalized internally.
    LogUnnormalized(&'a dyn Fn(f64) -> f64),
}

impl core::fmt::Debug for Weight<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Weight::Uniform => "Uniform",
            Weight::Density(_) => "Density",
            Weight::LogUnnormalized(_) => "LogUnnormalized",
        })
    }
}

impl Weight<'_> {
    fn log_at(&self, y: f64) -> f64 {
        match self {
            Weight::Uniform => 0.0,
            Weight::Density(w) => math::ln(w(y)),
            Weight::LogUnnormalized(lw) => lw(y),
        }
    }
}

const SHAPE_TOL: f64 = 1e-10;

/// `E f1 f2 W - E f1 W · E f2 W` over `g ~ N(0, σ²)` at `y = x + g`.
pub fn covariance_check(
    rule: &HermiteRule,
    f1: &dyn Fn(f64) -> f64,
    f2: &dyn Fn(f64) -> f64,
    weight: Weight<'_>,
    x: f64,
    sigma: f64,
    variant: CovarianceVariant,
) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidConfig("sigma must be positive"));
    }
    let ys: Vec<f64> = rule.gaussian_nodes().iter().map(|z| x + sigma * z).collect();
    match variant {
        CovarianceVariant::Monotone => {
            if !nondecreasing_on(f1, &ys) || !nondecreasing_on(f2, &ys) {
                return Err(Error::Precondition("both functions must be nondecreasing"));
            }
        }
        CovarianceVariant::EvenOdd => {
            if x < 0.0 {
                return Err(Error::Precondition("x must be nonnegative"));
            }
            let even_odd = (is_even(f1, &ys) && is_odd(f2, &ys)) || (is_odd(f1, &ys) && is_even(f2, &ys));
            if !even_odd {
                return Err(Error::Precondition("one function must be even and the other odd"));
            }
            let half: Vec<f64> = ys.iter().map(|y| y.abs()).collect();
            if !nondecreasing_on(f1, &half) || !nondecreasing_on(f2, &half) {
                return Err(Error::Precondition("both functions must be nondecreasing on [0, inf)"));
            }
            let sym = ys.iter().all(|&y| {
                let (a, b) = (weight.log_at(y), weight.log_at(-y));
                (a == b) || (a - b).abs() <= SHAPE_TOL * (1.0 + a.abs())
            });
            if !sym {
                return Err(Error::Precondition("weight must be even in y"));
            }
        }
    }

    let logs: Vec<f64> = ys.iter().map(|&y| weight.log_at(y)).collect();
    let p = rule.gaussian_weights();
    let w: Vec<f64> = match weight {
        Weight::Density(_) => {
            let w: Vec<f64> = logs.iter().map(|&l| math::exp(l)).collect();
            let mass: f64 = w.iter().zip(p).map(|(w, p)| w * p).sum();
            if !((mass - 1.0).abs() <= 1e-9) {
                return Err(Error::WeightNormalization { mass });
            }
            w
        }
        _ => {
            let lmax = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let raw: Vec<f64> = logs.iter().map(|&l| math::exp(l - lmax)).collect();
            let mass: f64 = raw.iter().zip(p).map(|(w, p)| w * p).sum();
            if !(mass.is_finite() && mass > 0.0) {
                return Err(Error::WeightNormalization { mass });
            }
            raw.into_iter().map(|w| w / mass).collect()
        }
    };
    let (mut e1, mut e2, mut e12) = (0.0, 0.0, 0.0);
    for ((&y, &wk), &pk) in ys.iter().zip(&w).zip(p) {
        let (a, b) = (f1(y), f2(y));
        e1 += pk * wk * a;
        e2 += pk * wk * b;
        e12 += pk * wk * a * b;
    }
    Ok(e12 - e1 * e2)
}

fn nondecreasing_on(f: &dyn Fn(f64) -> f64, pts: &[f64]) -> bool {
    let mut sorted = pts.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.windows(2).all(|w| f(w[1]) >= f(w[0]) - SHAPE_TOL)
}

fn is_even(f: &dyn Fn(f64) -> f64, pts: &[f64]) -> bool {
    pts.iter().all(|&y| (f(y) - f(-y)).abs() <= SHAPE_TOL)
}

fn is_odd(f: &dyn Fn(f64) -> f64, pts: &[f64]) -> bool {
    pts.iter().all(|&y| (f(y) + f(-y)).abs() <= SHAPE_TOL)
}

/// `min_x E[f2(x + g) - f1(x + g)]` for odd `f1 ≤ f2` on `[0, ∞)`, `x ≥ 0`.
pub fn odd_comparison_check(
    rule: &HermiteRule,
    f1: &dyn Fn(f64) -> f64,
    f2: &dyn Fn(f64) -> f64,
    xs: &[f64],
    sigma: f64,
) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::InvalidConfig("x grid must be nonempty"));
    }
    if xs.iter().any(|&x| x < 0.0) {
        return Err(Error::Precondition("x grid must lie in [0, inf)"));
    }
    let mut pts: Vec<f64> = Vec::new();
    for &x in xs {
        pts.extend(rule.gaussian_nodes().iter().map(|z| (x + sigma * z).abs()));
    }
    if !is_odd(f1, &pts) || !is_odd(f2, &pts) {
        return Err(Error::Precondition("both functions must be odd"));
    }
    if pts.iter().any(|&y| f1(y) > f2(y) + SHAPE_TOL) {
        return Err(Error::Precondition("f1 <= f2 must hold on [0, inf)"));
    }
    let mut worst = f64::INFINITY;
    for &x in xs {
        let d = rule.gauss_expectation(|u| f2(u) - f1(u), x, sigma)?;
        worst = worst.min(d);
    }
    Ok(worst)
}

/// Tolerance band for near-critical points of the max-principle scan.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct CriticalBand {
    pub grad: f64,
    pub sign: f64,
    pub dt: f64,
}

impl Default for CriticalBand {
    fn default() -> Self {
        Self {
            grad: 1e-3,
            sign: 1e-6,
            dt: 1e-5,
        }
    }
}

/// Quantities recorded at one near-critical point of `F = F0 - α F1 - (1-α) F2`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CriticalRecord {
    pub x: f64,
    pub t: f64,
    pub f: f64,
    pub dx: f64,
    pub dxx: f64,
    pub dt: f64,
    /// `∂xx F`.
    pub delta1: f64,
    /// `n (∂x F0)² - α m1 (∂x F1)² - (1-α) m2 (∂x F2)²`.
    pub delta2: f64,
    /// `(∂x F1 - ∂x F2)(c1 ∂x F1 - c2 ∂x F2)`.
    pub delta2_factored: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MaxPrincipleReport {
    pub alpha: f64,
    pub m1: f64,
    pub m2: f64,
    pub n: f64,
    pub c1: f64,
    pub c2: f64,
    pub band: CriticalBand,
    /// Largest `F` over the whole `(x, t)` grid.
    pub max_f: f64,
    pub points_scanned: usize,
    pub records: Vec<CriticalRecord>,
    /// Records with `∂t F > band.dt` or `Δ2 > band.sign`, plus one for each
    /// failed coefficient condition.
    pub violations: usize,
}

/// `(c1, c2)` with `c1 = α(nα - m1)`, `c2 = (1-α)(n(1-α) - m2)`, `n = α m1 + (1-α) m2`.
pub fn max_principle_coefficients(alpha: f64, m1: f64, m2: f64) -> (f64, f64) {
    let n = alpha * m1 + (1.0 - alpha) * m2;
    (alpha * (n * alpha - m1), (1.0 - alpha) * (n * (1.0 - alpha) - m2))
}

/// Scans `F = F_{φ,n} - α F_{φ1,m1} - (1-α) F_{φ2,m2}` over `xs × ts`.
#[allow(clippy::too_many_arguments)]
pub fn max_principle_scan(
    rule: &HermiteRule,
    phi1: &InitialCondition,
    phi2: &InitialCondition,
    m1: f64,
    m2: f64,
    alpha: f64,
    xs: &[f64],
    ts: &[f64],
    band: CriticalBand,
) -> Result<MaxPrincipleReport> {
    if !(m1 > 0.0 && m1 <= m2 && m2 <= 1.0) {
        return Err(Error::Precondition("need 0 < m1 <= m2 <= 1"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidConfig("alpha must lie in [0, 1]"));
    }
    if phi1 != phi2 && !classify_pair(phi1, phi2).class.is_valid() {
        return Err(Error::Precondition("initial conditions do not form an F1 or F2 pair"));
    }
    let n = alpha * m1 + (1.0 - alpha) * m2;
    let (c1, c2) = max_principle_coefficients(alpha, m1, m2);
    let phi = InitialCondition::mix(alpha, phi1, phi2)?;
    let mut violations = 0;
    if alpha > 0.0 && alpha < 1.0 && !(c2 < 0.0) {
        violations += 1;
    }
    if c1 < c2 {
        violations += 1;
    }
    let mut max_f = f64::NEG_INFINITY;
    let mut records = Vec::new();
    for &t in ts {
        for &x in xs {
            let p0 = constant_m_partials(&phi, n, x, t, rule)?;
            let p1 = constant_m_partials(phi1, m1, x, t, rule)?;
            let p2 = constant_m_partials(phi2, m2, x, t, rule)?;
            let comb = |g: fn(&Partials) -> f64| g(&p0) - alpha * g(&p1) - (1.0 - alpha) * g(&p2);
            let f = comb(|p| p.value);
            max_f = max_f.max(f);
            let dx = comb(|p| p.dx);
            let dxx = comb(|p| p.dxx);
            if dx.abs() <= band.grad && dxx <= band.sign && f >= -band.sign {
                let dt = comb(|p| p.dt);
                let delta2 = n * p0.dx * p0.dx - alpha * m1 * p1.dx * p1.dx - (1.0 - alpha) * m2 * p2.dx * p2.dx;
                let delta2_factored = (p1.dx - p2.dx) * (c1 * p1.dx - c2 * p2.dx);
                if dt > band.dt || delta2_factored > band.sign {
                    violations += 1;
                }
                records.push(CriticalRecord {
                    x,
                    t,
                    f,
                    dx,
                    dxx,
                    dt,
                    delta1: dxx,
                    delta2,
                    delta2_factored,
                });
            }
        }
    }
    Ok(MaxPrincipleReport {
        alpha,
        m1,
        m2,
        n,
        c1,
        c2,
        band,
        max_f,
        points_scanned: xs.len() * ts.len(),
        records,
        violations,
    })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MixtureReport {
    /// Largest `F_{φ,n} - α F_{φ1,m1} - (1-α) F_{φ2,m2}` over the grid.
    pub max_excess: f64,
    /// Pair class of `(F_{φ1,m1}(·,t), F_{φ2,m2}(·,t))` per time.
    pub classes: Vec<(f64, PairDiagnostics)>,
    pub input_class: PairClass,
}

impl MixtureReport {
    /// Whether every time slice kept the class of the input pair.
    pub fn class_preserved(&self) -> bool {
        self.classes.iter().all(|(_, d)| match self.input_class {
            PairClass::Both => d.class == PairClass::Both,
            PairClass::Neither => true,
            c => d.class == c || d.class == PairClass::Both,
        })
    }
}

/// Mixture inequality and class preservation for constant `m1 ≤ m2` over `xs × ts`.
///
/// Class membership at each `t` is read off the sampled values and Gibbs
/// derivatives with tolerance `tol`; `xs` should be symmetric about 0.
#[allow(clippy::too_many_arguments)]
pub fn mixture_check(
    rule: &HermiteRule,
    phi1: &InitialCondition,
    phi2: &InitialCondition,
    m1: f64,
    m2: f64,
    alpha: f64,
    xs: &[f64],
    ts: &[f64],
    tol: f64,
) -> Result<MixtureReport> {
    if !(m1 > 0.0 && m1 <= m2 && m2 <= 1.0) {
        return Err(Error::Precondition("need 0 < m1 <= m2 <= 1"));
    }
    let input_class = classify_pair(phi1, phi2).class;
    if !input_class.is_valid() {
        return Err(Error::Precondition("initial conditions do not form an F1 or F2 pair"));
    }
    let n = alpha * m1 + (1.0 - alpha) * m2;
    let phi = InitialCondition::mix(alpha, phi1, phi2)?;
    let mut max_excess = f64::NEG_INFINITY;
    let mut classes = Vec::with_capacity(ts.len());
    for &t in ts {
        let mut s1 = Vec::with_capacity(xs.len());
        let mut s2 = Vec::with_capacity(xs.len());
        for &x in xs {
            let f0 = constant_m_solution(&phi, n, x, t, rule)?;
            let p1 = constant_m_partials(phi1, m1, x, t, rule)?;
            let p2 = constant_m_partials(phi2, m2, x, t, rule)?;
            max_excess = max_excess.max(f0 - alpha * p1.value - (1.0 - alpha) * p2.value);
            s1.push((x, p1));
            s2.push((x, p2));
        }
        classes.push((t, classify_samples(&s1, &s2, tol)));
    }
    Ok(MixtureReport {
        max_excess,
        classes,
        input_class,
    })
}

fn classify_samples(s1: &[(f64, Partials)], s2: &[(f64, Partials)], tol: f64) -> PairDiagnostics {
    let even = |s: &[(f64, Partials)]| {
        s.iter().all(|(x, p)| {
            s.iter()
                .find(|(y, _)| *y == -x)
                .is_none_or(|(_, q)| (p.value - q.value).abs() <= tol)
        })
    };
    let convex = |s: &[(f64, Partials)]| s.iter().all(|(_, p)| p.dxx >= -tol);
    let nondecreasing = |s: &[(f64, Partials)]| s.iter().all(|(_, p)| p.dx >= -tol);
    let mut values_ordered = true;
    let mut derivs_ordered = true;
    let mut derivs_ordered_half_line = true;
    for ((x, p), (_, q)) in s1.iter().zip(s2) {
        values_ordered &= p.value <= q.value + tol;
        if p.dx > q.dx + tol {
            derivs_ordered = false;
            if *x >= 0.0 {
                derivs_ordered_half_line = false;
            }
        }
    }
    let base = convex(s1) && convex(s2) && values_ordered;
    let f1 = base && even(s1) && even(s2) && derivs_ordered_half_line;
    let f2 = base && nondecreasing(s1) && nondecreasing(s2) && derivs_ordered;
    PairDiagnostics {
        class: match (f1, f2) {
            (true, true) => PairClass::Both,
            (true, false) => PairClass::F1,
            (false, true) => PairClass::F2,
            (false, false) => PairClass::Neither,
        },
        values_ordered,
        derivs_ordered,
        derivs_ordered_half_line,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TailRecord {
    pub x: f64,
    pub t: f64,
    /// Ratio of the smoothed moment to its linear-tail prediction.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AsymptoticReport {
    pub m: f64,
    pub records: Vec<TailRecord>,
    pub max_deviation: f64,
}

impl AsymptoticReport {
    /// Largest `|ratio - 1|` among records at `x`.
    pub fn deviation_at(&self, x: f64) -> f64 {
        self.records
            .iter()
            .filter(|r| r.x == x)
            .map(|r| (r.ratio - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `(E exp m φ(x + √t z))^{1/m} / exp(A x + B + A² m t / 2)` with the right tail
/// for `x ≥ 0` and the left tail for `x < 0`.
pub fn asymptotic_check(rule: &HermiteRule, phi: &InitialCondition, m: f64, ts: &[f64], xs: &[f64]) -> Result<AsymptoticReport> {
    let tails = phi
        .tails()
        .ok_or(Error::Precondition("initial condition declares no linear tails"))?;
    let mut records = Vec::with_capacity(ts.len() * xs.len());
    let mut max_deviation = 0.0f64;
    for &x in xs {
        let line = if x >= 0.0 { tails.right } else { tails.left };
        for &t in ts {
            let f = constant_m_solution(phi, m, x, t, rule)?;
            let lead = line.at(x) + 0.5 * line.slope * line.slope * m * t;
            let ratio = math::exp(f - lead);
            max_deviation = max_deviation.max((ratio - 1.0).abs());
            records.push(TailRecord { x, t, ratio });
        }
    }
    Ok(AsymptoticReport {
        m,
        records,
        max_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::SolverConfig;

    fn rule() -> HermiteRule {
        HermiteRule::new(60).unwrap()
    }

    #[test]
    fn coefficients_example() {
        let (c1, c2) = max_principle_coefficients(0.5, 0.4, 0.8);
        assert!((c1 + 0.05).abs() < 1e-15);
        assert!((c2 + 0.25).abs() < 1e-15);
        assert!((c1 - c2 - 0.2).abs() < 1e-12);
    }

    #[test]
    fn degenerate_mixture_is_zero() {
        let lc = InitialCondition::log_cosh();
        let lc2 = lc.scaled(2.0).unwrap();
        let xs = [-1.0, 0.0, 0.5];
        let ts = [0.2, 1.0];
        for alpha in [0.0, 1.0] {
            let r = max_principle_scan(&rule(), &lc, &lc2, 0.3, 0.7, alpha, &xs, &ts, CriticalBand::default()).unwrap();
            assert_eq!(r.max_f, 0.0);
            assert_eq!(r.violations, 0);
        }
        assert!(max_principle_scan(&rule(), &lc, &lc2, 0.0, 0.7, 0.5, &xs, &ts, CriticalBand::default()).is_err());
        assert!(max_principle_scan(&rule(), &lc2, &lc, 0.3, 0.7, 0.5, &xs, &ts, CriticalBand::default()).is_err());
    }

    #[test]
    fn one_sided_endpoints_and_ordering() {
        let solver = Solver::new(SolverConfig::default()).unwrap();
        let lc = InitialCondition::log_cosh();
        let a1 = StepParam::constant(0.3).unwrap();
        let a2 = StepParam::constant(0.9).unwrap();
        let r = one_sided_scan(&solver, &lc, &lc, &a1, &a2, &[0.0, 0.5, 1.0], &[0.0, 1.0], 1e-7).unwrap();
        assert_eq!(r.gap(0.0, 1.0), Some(0.0));
        assert_eq!(r.gap(1.0, 0.0), Some(0.0));
        assert!(r.passes());
        match one_sided_scan(&solver, &lc, &lc, &a2, &a1, &[0.5], &[0.0], 1e-7) {
            Err(Error::OrderingViolation { a1, a2, .. }) => assert!(a1 > a2),
            other => panic!("expected ordering error, got {other:?}"),
        }
    }

    #[test]
    fn covariance_basics() {
        let id = |y: f64| y;
        let v = covariance_check(&rule(), &id, &id, Weight::Uniform, 0.3, 1.5, CovarianceVariant::Monotone).unwrap();
        assert!((v - 2.25).abs() < 1e-12);
        let bad = |y: f64| 0.5 * math::exp(-y * y);
        assert!(matches!(
            covariance_check(&rule(), &id, &id, Weight::Density(&bad), 0.0, 1.0, CovarianceVariant::Monotone),
            Err(Error::WeightNormalization { .. })
        ));
        let neg = |y: f64| -y;
        assert!(covariance_check(&rule(), &id, &neg, Weight::Uniform, 0.0, 1.0, CovarianceVariant::Monotone).is_err());
    }

    #[test]
    fn odd_comparison_examples() {
        let r = rule();
        let t = |y: f64| math::tanh(y);
        let id = |y: f64| y;
        assert_eq!(odd_comparison_check(&r, &t, &t, &[0.0, 1.0], 1.0).unwrap(), 0.0);
        let xs: Vec<f64> = (0..=30).map(|i| 0.1 * i as f64).collect();
        assert!(odd_comparison_check(&r, &t, &id, &xs, 1.0).unwrap() >= -1e-10);
        assert!(odd_comparison_check(&r, &id, &t, &xs, 1.0).is_err());
    }

    #[test]
    fn asymptotics_of_linear_is_exact() {
        let lin = InitialCondition::linear(0.6, -0.1).unwrap();
        let r = asymptotic_check(&rule(), &lin, 0.5, &[0.0, 0.5, 1.0], &[-15.0, 15.0]).unwrap();
        assert!(r.max_deviation < 1e-13);
        let soft = InitialCondition::soft_abs(1.0).unwrap();
        assert!(asymptotic_check(&rule(), &soft, 0.5, &[1.0], &[15.0]).is_err());
    }

    #[test]
    fn constant_m_curve_linear_is_flat() {
        let lin = InitialCondition::linear(0.5, 1.0).unwrap();
        let ms: Vec<f64> = (0..=10).map(|i| 0.1 * i as f64).collect();
        let c = constant_m_curve(&rule(), &lin, 2.0, &ms, 1e-8).unwrap();
        assert!(c.convex);
        assert!(c.second_differences.iter().all(|d| d.abs() < 1e-12));
        for (m, v) in ms.iter().zip(&c.values) {
            assert!((v - (2.0 + 0.125 * m)).abs() < 1e-12);
        }
    }
}
