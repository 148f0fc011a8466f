//! Initial conditions `φ`, pair classes, and the piecewise-linear / mollified
//! lower approximations with exactly linear tails.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::LN_2;
use core::fmt;

use crate::legendre::LegendreRule;
use crate::math;

/// Sampling window and tolerance used by [`validate_pair`].
pub const PAIR_SAMPLE_RADIUS: f64 = 30.0;
pub const PAIR_SAMPLE_STEP: f64 = 0.01;
pub const PAIR_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum InitError {
    UnknownBuiltin(String),
    InvalidArgument(String),
    /// `φ''` was negative at `x`.
    NotConvex { x: f64, deriv2: f64 },
    InvalidIndex(u32),
}

impl fmt::Display for InitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitError::UnknownBuiltin(name) => write!(f, "unknown initial condition `{name}`"),
            InitError::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            InitError::NotConvex { x, deriv2 } => {
                write!(f, "initial condition is not convex: phi''({x}) = {deriv2:e}")
            }
            InitError::InvalidIndex(r) => write!(f, "approximation index must be >= 1, got {r}"),
        }
    }
}

impl core::error::Error for InitError {}

/// Class tag of an initial condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PhiClass {
    EvenConvex,
    NondecreasingConvex,
    None,
}

/// Class of an ordered pair `(φ1, φ2)`.
///
/// `F1`: both even convex, `φ1 ≤ φ2`, and `φ1' ≤ φ2'` on `[0, ∞)`.
/// `F2`: both nondecreasing convex, `φ1 ≤ φ2`, and `φ1' ≤ φ2'` on all of ℝ.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PairClass {
    F1,
    F2,
    Both,
    Neither,
}

impl PairClass {
    pub fn is_valid(self) -> bool {
        self != PairClass::Neither
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PairClass::F1 => "F1",
            PairClass::F2 => "F2",
            PairClass::Both => "both",
            PairClass::Neither => "neither",
        }
    }
}

/// Shape flags carried by every initial condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shape {
    pub convex: bool,
    pub even: bool,
    pub nondecreasing: bool,
}

impl Shape {
    fn class(self) -> PhiClass {
        match (self.convex, self.even, self.nondecreasing) {
            (true, _, true) => PhiClass::NondecreasingConvex,
            (true, true, false) => PhiClass::EvenConvex,
            _ => PhiClass::None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
}

impl Line {
    pub fn new(slope: f64, intercept: f64) -> Self {
        Self { slope, intercept }
    }

    #[inline]
    pub fn at(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// `φ(x) = right.at(x)` for `x ≥ threshold` and `left.at(x)` for `x ≤ -threshold`,
/// up to `tolerance`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tails {
    pub threshold: f64,
    pub right: Line,
    pub left: Line,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    LogCosh { scale: f64 },
    Linear { slope: f64, intercept: f64 },
    SoftAbs { scale: f64 },
    SmoothedRelu { scale: f64 },
    Combination { terms: Vec<(f64, InitialCondition)>, offset: f64 },
    Mollified(Box<Mollified>),
}

/// A twice differentiable initial condition with bounded first and second derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialCondition {
    kind: Kind,
    shape: Shape,
    d1_bound: f64,
    d2_bound: f64,
    tails: Option<Tails>,
}

impl InitialCondition {
    /// `log cosh x`.
    pub fn log_cosh() -> Self {
        Self::scaled_log_cosh(1.0).expect("unit scale is valid")
    }

    /// `c log cosh x` for `c > 0`.
    pub fn scaled_log_cosh(c: f64) -> Result<Self, InitError> {
        positive("scaled_log_cosh scale", c)?;
        // log cosh x - (|x| - log 2) = log1p(e^{-2|x|}) ≤ e^{-24} beyond 12
        Ok(Self {
            kind: Kind::LogCosh { scale: c },
            shape: Shape {
                convex: true,
                even: true,
                nondecreasing: false,
            },
            d1_bound: c,
            d2_bound: c,
            tails: Some(Tails {
                threshold: 12.0,
                right: Line::new(c, -c * LN_2),
                left: Line::new(-c, -c * LN_2),
                tolerance: c * 4e-11,
            }),
        })
    }

    /// `A x + B`.
    pub fn linear(slope: f64, intercept: f64) -> Result<Self, InitError> {
        if !slope.is_finite() || !intercept.is_finite() {
            return Err(InitError::InvalidArgument("linear coefficients must be finite".into()));
        }
        let line = Line::new(slope, intercept);
        Ok(Self {
            kind: Kind::Linear { slope, intercept },
            shape: Shape {
                convex: true,
                even: slope == 0.0,
                nondecreasing: slope >= 0.0,
            },
            d1_bound: slope.abs(),
            d2_bound: 0.0,
            tails: Some(Tails {
                threshold: 1.0,
                right: line,
                left: line,
                tolerance: 0.0,
            }),
        })
    }

    /// `√(x² + s²) - s`: even, convex, `|φ'| ≤ 1`, `φ'' ≤ 1/s`.
    pub fn soft_abs(scale: f64) -> Result<Self, InitError> {
        positive("soft_abs scale", scale)?;
        Ok(Self {
            kind: Kind::SoftAbs { scale },
            shape: Shape {
                convex: true,
                even: true,
                nondecreasing: false,
            },
            d1_bound: 1.0,
            d2_bound: 1.0 / scale,
            tails: None,
        })
    }

    /// `s log(1 + e^{x/s})`: nondecreasing, convex, `0 ≤ φ' ≤ 1`, `φ'' ≤ 1/(4s)`.
    pub fn smoothed_relu(scale: f64) -> Result<Self, InitError> {
        positive("smoothed_relu scale", scale)?;
        Ok(Self {
            kind: Kind::SmoothedRelu { scale },
            shape: Shape {
                convex: true,
                even: false,
                nondecreasing: true,
            },
            d1_bound: 1.0,
            d2_bound: 0.25 / scale,
            tails: Some(Tails {
                threshold: 21.0 * scale,
                right: Line::new(1.0, 0.0),
                left: Line::new(0.0, 0.0),
                tolerance: scale * 7.6e-10,
            }),
        })
    }

    /// Linear combination `Σ c_i φ_i + offset`.
    pub fn combination(terms: Vec<(f64, InitialCondition)>, offset: f64) -> Result<Self, InitError> {
        if terms.is_empty() {
            return Err(InitError::InvalidArgument("empty combination".into()));
        }
        if terms.iter().any(|(c, _)| !c.is_finite()) || !offset.is_finite() {
            return Err(InitError::InvalidArgument("combination coefficients must be finite".into()));
        }
        let nonneg = terms.iter().all(|(c, _)| *c >= 0.0);
        let shape = Shape {
            convex: nonneg && terms.iter().all(|(_, p)| p.shape.convex),
            even: terms.iter().all(|(c, p)| *c == 0.0 || p.shape.even),
            nondecreasing: nonneg && terms.iter().all(|(c, p)| *c == 0.0 || p.shape.nondecreasing),
        };
        let d1_bound = terms.iter().map(|(c, p)| c.abs() * p.d1_bound).sum();
        let d2_bound = terms.iter().map(|(c, p)| c.abs() * p.d2_bound).sum();
        let tails = if terms.iter().all(|(_, p)| p.tails.is_some()) {
            let mut acc = Tails {
                threshold: 0.0,
                right: Line::new(0.0, offset),
                left: Line::new(0.0, offset),
                tolerance: 0.0,
            };
            for (c, p) in &terms {
                let t = p.tails.unwrap();
                acc.threshold = acc.threshold.max(t.threshold);
                acc.right.slope += c * t.right.slope;
                acc.right.intercept += c * t.right.intercept;
                acc.left.slope += c * t.left.slope;
                acc.left.intercept += c * t.left.intercept;
                acc.tolerance += c.abs() * t.tolerance;
            }
            Some(acc)
        } else {
            None
        };
        Ok(Self {
            kind: Kind::Combination { terms, offset },
            shape,
            d1_bound,
            d2_bound,
            tails,
        })
    }

    /// `α φ1 + (1 - α) φ2`; returns the endpoint itself at `α ∈ {0, 1}`.
    pub fn mix(alpha: f64, phi1: &Self, phi2: &Self) -> Result<Self, InitError> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(InitError::InvalidArgument("mixing weight outside [0, 1]".into()));
        }
        if alpha == 1.0 {
            return Ok(phi1.clone());
        }
        if alpha == 0.0 || phi1 == phi2 {
            return Ok(phi2.clone());
        }
        Self::combination(alloc::vec![(alpha, phi1.clone()), (1.0 - alpha, phi2.clone())], 0.0)
    }

    /// `c φ`.
    pub fn scaled(&self, c: f64) -> Result<Self, InitError> {
        Self::combination(alloc::vec![(c, self.clone())], 0.0)
    }

    /// `φ + b`.
    pub fn shifted(&self, b: f64) -> Result<Self, InitError> {
        Self::combination(alloc::vec![(1.0, self.clone())], b)
    }

    /// Parses a builtin: `log_cosh`, `linear(A,B)`, `soft_abs(s)`, `smoothed_relu(s)`,
    /// `scaled_log_cosh(c)`, optionally prefixed by a positive factor as in `2*log_cosh`.
    /// Sums of such terms and constants, as in `log_cosh + 0.5*soft_abs(1) + 0.1`,
    /// give a combination.
    pub fn builtin(spec: &str) -> Result<Self, InitError> {
        let spec = spec.trim();
        let parts = split_sum(spec);
        if parts.len() > 1 {
            let mut terms = Vec::new();
            let mut offset = 0.0;
            for part in parts {
                let part = part.trim();
                if let Ok(b) = part.parse::<f64>() {
                    offset += b;
                    continue;
                }
                match part.split_once('*') {
                    Some((c, rest)) => terms.push((parse_num(c)?, Self::builtin(rest)?)),
                    None => terms.push((1.0, Self::builtin(part)?)),
                }
            }
            return match terms.len() {
                0 => Err(InitError::UnknownBuiltin(spec.to_string())),
                1 if offset == 0.0 => Ok(terms.pop().unwrap().1),
                _ => Self::combination(terms, offset),
            };
        }
        if let Some((coef, rest)) = spec.split_once('*') {
            let c = parse_num(coef)?;
            return Self::builtin(rest)?.scaled(c);
        }
        let (name, args) = match spec.find('(') {
            Some(open) => {
                let close = spec
                    .rfind(')')
                    .filter(|&c| c > open && spec[c + 1..].trim().is_empty())
                    .ok_or_else(|| InitError::UnknownBuiltin(spec.to_string()))?;
                let args = spec[open + 1..close]
                    .split(',')
                    .map(parse_num)
                    .collect::<Result<Vec<f64>, _>>()?;
                (spec[..open].trim(), args)
            }
            None => (spec, Vec::new()),
        };
        match (name, args.as_slice()) {
            ("log_cosh", []) => Ok(Self::log_cosh()),
            ("scaled_log_cosh", [c]) => Self::scaled_log_cosh(*c),
            ("linear", [a, b]) => Self::linear(*a, *b),
            ("soft_abs", [s]) => Self::soft_abs(*s),
            ("smoothed_relu", [s]) => Self::smoothed_relu(*s),
            _ => Err(InitError::UnknownBuiltin(spec.to_string())),
        }
    }

    pub fn class(&self) -> PhiClass {
        self.shape.class()
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn d1_bound(&self) -> f64 {
        self.d1_bound
    }

    pub fn d2_bound(&self) -> f64 {
        self.d2_bound
    }

    pub fn tails(&self) -> Option<&Tails> {
        self.tails.as_ref()
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x)[0]
    }

    pub fn deriv1(&self, x: f64) -> f64 {
        self.eval(x)[1]
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        self.eval(x)[2]
    }

    /// `[φ(x), φ'(x), φ''(x)]`.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        match &self.kind {
            Kind::LogCosh { scale } => [
                scale * math::log_cosh(x),
                scale * math::tanh(x),
                scale * math::sech2(x),
            ],
            Kind::Linear { slope, intercept } => [slope * x + intercept, *slope, 0.0],
            Kind::SoftAbs { scale } => {
                let r = math::sqrt(x * x + scale * scale);
                [r - scale, x / r, scale * scale / (r * r * r)]
            }
            Kind::SmoothedRelu { scale } => {
                let y = x / scale;
                let s = math::sigmoid(y);
                [scale * math::softplus(y), s, s * (1.0 - s) / scale]
            }
            Kind::Combination { terms, offset } => {
                let mut acc = [*offset, 0.0, 0.0];
                for (c, p) in terms {
                    let e = p.eval(x);
                    acc[0] += c * e[0];
                    acc[1] += c * e[1];
                    acc[2] += c * e[2];
                }
                acc
            }
            Kind::Mollified(m) => m.eval(x),
        }
    }
}

impl fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::LogCosh { scale } if *scale == 1.0 => f.write_str("log_cosh"),
            Kind::LogCosh { scale } => write!(f, "scaled_log_cosh({scale})"),
            Kind::Linear { slope, intercept } => write!(f, "linear({slope},{intercept})"),
            Kind::SoftAbs { scale } => write!(f, "soft_abs({scale})"),
            Kind::SmoothedRelu { scale } => write!(f, "smoothed_relu({scale})"),
            Kind::Combination { terms, offset } => {
                for (i, (c, p)) in terms.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    if *c == 1.0 {
                        write!(f, "{p}")?;
                    } else {
                        write!(f, "{c}*{p}")?;
                    }
                }
                if *offset != 0.0 {
                    write!(f, " + {offset}")?;
                }
                Ok(())
            }
            Kind::Mollified(m) => write!(f, "mollified(r={}, {})", m.approx.r, m.approx.source),
        }
    }
}

fn positive(what: &str, v: f64) -> Result<(), InitError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(InitError::InvalidArgument(alloc::format!("{what} must be positive, got {v}")))
    }
}

/// Splits at `+` signs outside parentheses, keeping exponent signs such as `1e+3`.
fn split_sum(spec: &str) -> Vec<&str> {
    let bytes = spec.as_bytes();
    let mut parts = Vec::new();
    let (mut depth, mut start) = (0i32, 0usize);
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'(' => depth += 1,
            b')' => depth -= 1,
            b'+' if depth == 0 && i > 0 => {
                let exponent = matches!(bytes[i - 1], b'e' | b'E') && i > 1 && bytes[i - 2].is_ascii_digit();
                if !exponent {
                    parts.push(&spec[start..i]);
                    start = i + 1;
                }
            }
            _ => {}
        }
    }
    parts.push(&spec[start..]);
    parts
}

fn parse_num(s: &str) -> Result<f64, InitError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| InitError::InvalidArgument(alloc::format!("not a number: `{}`", s.trim())))
}

/// Pair classification together with which ordering conditions held on the sample grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PairDiagnostics {
    pub class: PairClass,
    pub values_ordered: bool,
    /// `φ1' ≤ φ2'` on the whole sample window.
    pub derivs_ordered: bool,
    /// `φ1' ≤ φ2'` only checked on `x ≥ 0`.
    pub derivs_ordered_half_line: bool,
}

/// Classifies `(φ1, φ2)` by sampling `[-30, 30]` at step 0.01 with tolerance `1e-9`.
pub fn classify_pair(phi1: &InitialCondition, phi2: &InitialCondition) -> PairDiagnostics {
    let n = (2.0 * PAIR_SAMPLE_RADIUS / PAIR_SAMPLE_STEP) as usize;
    let mut values_ordered = true;
    let mut derivs_ordered = true;
    let mut derivs_ordered_half_line = true;
    for i in 0..=n {
        let x = -PAIR_SAMPLE_RADIUS + PAIR_SAMPLE_STEP * i as f64;
        let e1 = phi1.eval(x);
        let e2 = phi2.eval(x);
        if e1[0] > e2[0] + PAIR_TOL {
            values_ordered = false;
        }
        if e1[1] > e2[1] + PAIR_TOL {
            derivs_ordered = false;
            if x >= 0.0 {
                derivs_ordered_half_line = false;
            }
        }
    }
    let (s1, s2) = (phi1.shape, phi2.shape);
    let f1 = s1.convex
        && s2.convex
        && s1.even
        && s2.even
        && values_ordered
        && derivs_ordered_half_line;
    let f2 = s1.convex
        && s2.convex
        && s1.nondecreasing
        && s2.nondecreasing
        && values_ordered
        && derivs_ordered;
    let class = match (f1, f2) {
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

pub fn validate_pair(phi1: &InitialCondition, phi2: &InitialCondition) -> PairClass {
    classify_pair(phi1, phi2).class
}

/// Continuous piecewise-linear lower approximation `s_r` of a convex `φ`.
///
/// On `[-r, r]` it interpolates `φ - 2/r` at the knots `p / (r T_r)`; outside it
/// follows the supporting lines of `φ - 2/r` at `±r`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinearApprox {
    r: u32,
    t_r: u32,
    eps: f64,
    knots: Vec<f64>,
    knot_values: Vec<f64>,
    slopes: Vec<f64>,
    left: Line,
    right: Line,
    shape: Shape,
    source: String,
}

impl PiecewiseLinearApprox {
    /// Approximation with its own resolution `T_r`.
    pub fn build(phi: &InitialCondition, r: u32) -> Result<Self, InitError> {
        Self::build_with_resolution(phi, r, resolution(phi, r)?)
    }

    /// Approximation on the partition with spacing `1 / (r T_r)` for a given
    /// `T_r`, which must bound `|φ'|` on `[-r, r]`.
    pub fn build_with_resolution(phi: &InitialCondition, r: u32, t_r: u32) -> Result<Self, InitError> {
        if r == 0 {
            return Err(InitError::InvalidIndex(r));
        }
        if t_r == 0 {
            return Err(InitError::InvalidArgument("resolution must be at least 1".into()));
        }
        check_convex(phi, r)?;
        let rf = r as f64;
        let per_unit = (r * t_r) as f64;
        let half = (r * r * t_r) as i64;
        let shift = 2.0 / rf;

        let knots: Vec<f64> = (-half..=half).map(|p| p as f64 / per_unit).collect();
        let knot_values: Vec<f64> = knots.iter().map(|&q| phi.value(q) - shift).collect();
        let slopes: Vec<f64> = knots
            .windows(2)
            .zip(knot_values.windows(2))
            .map(|(q, v)| (v[1] - v[0]) / (q[1] - q[0]))
            .collect();
        let right_slope = phi.deriv1(rf);
        let left_slope = phi.deriv1(-rf);
        let right = Line::new(right_slope, phi.value(rf) - shift - right_slope * rf);
        let left = Line::new(left_slope, phi.value(-rf) - shift + left_slope * rf);
        Ok(Self {
            r,
            t_r,
            eps: 1.0 / (2.0 * per_unit),
            knots,
            knot_values,
            slopes,
            left,
            right,
            shape: phi.shape,
            source: phi.to_string(),
        })
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn t_r(&self) -> u32 {
        self.t_r
    }

    /// Mollifier half-width `1 / (2 r T_r)`.
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn segment_slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn left_tail(&self) -> Line {
        self.left
    }

    pub fn right_tail(&self) -> Line {
        self.right
    }

    /// The linear piece active on segment `seg` (`-1` is the left tail,
    /// `slopes.len()` the right tail).
    fn piece(&self, seg: isize) -> Line {
        if seg < 0 {
            self.left
        } else if seg as usize >= self.slopes.len() {
            self.right
        } else {
            let i = seg as usize;
            let k = self.slopes[i];
            Line::new(k, self.knot_values[i] - k * self.knots[i])
        }
    }

    fn segment_of(&self, x: f64) -> isize {
        let rf = self.r as f64;
        if x >= rf {
            return self.slopes.len() as isize;
        }
        if x <= -rf {
            return -1;
        }
        let idx = math::floor((x + rf) * (self.r * self.t_r) as f64) as isize;
        idx.clamp(0, self.slopes.len() as isize - 1)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.piece(self.segment_of(x)).at(x)
    }

    /// Slope of the piece containing `x` (one-sided at knots).
    pub fn slope(&self, x: f64) -> f64 {
        self.piece(self.segment_of(x)).slope
    }

    pub fn is_convex(&self) -> bool {
        let mut prev = self.left.slope;
        for &k in self.slopes.iter().chain(core::iter::once(&self.right.slope)) {
            if k < prev - 1e-12 {
                return false;
            }
            prev = k;
        }
        true
    }

    /// Convolution with the rescaled bump `η_r`, giving a twice differentiable
    /// function that is exactly linear beyond `r + ε_r`.
    pub fn mollify(&self) -> InitialCondition {
        let kernel = Mollifier::new(self.eps);
        let mut max_slope = self.left.slope.abs().max(self.right.slope.abs());
        let mut max_jump = 0.0f64;
        let mut prev = self.left.slope;
        for &k in self.slopes.iter().chain(core::iter::once(&self.right.slope)) {
            max_slope = max_slope.max(k.abs());
            max_jump = max_jump.max((k - prev).abs());
            prev = k;
        }
        let tails = Tails {
            threshold: self.r as f64 + self.eps,
            right: self.right,
            left: self.left,
            tolerance: 0.0,
        };
        let d2_bound = max_jump * kernel.density(0.0);
        InitialCondition {
            kind: Kind::Mollified(Box::new(Mollified {
                approx: self.clone(),
                kernel,
            })),
            shape: self.shape,
            d1_bound: max_slope,
            d2_bound,
            tails: Some(tails),
        }
    }
}

/// Smallest integer `T_r ≥ 1` bounding `|φ'|` on `[-r, r]`, sampled at step `1e-3`.
pub fn resolution(phi: &InitialCondition, r: u32) -> Result<u32, InitError> {
    if r == 0 {
        return Err(InitError::InvalidIndex(r));
    }
    let rf = r as f64;
    let samples = (2000.0 * rf) as usize;
    let max_d1 = (0..=samples)
        .map(|i| phi.deriv1(-rf + 1e-3 * i as f64).abs())
        .fold(0.0f64, f64::max);
    Ok((math::ceil(max_d1) as u32).max(1))
}

fn check_convex(phi: &InitialCondition, r: u32) -> Result<(), InitError> {
    let span = r as f64 + 10.0;
    let steps = (2.0 * span / 0.01) as usize;
    for i in 0..=steps {
        let x = -span + 0.01 * i as f64;
        let d2 = phi.deriv2(x);
        if d2 < -1e-9 {
            return Err(InitError::NotConvex { x, deriv2: d2 });
        }
    }
    Ok(())
}

/// Mollified approximations of a pair on a shared partition, with `T_r`
/// bounding both derivatives, so that the pair ordering carries over.
pub fn mollified_pair(
    phi1: &InitialCondition,
    phi2: &InitialCondition,
    r: u32,
) -> Result<(InitialCondition, InitialCondition), InitError> {
    let t_r = resolution(phi1, r)?.max(resolution(phi2, r)?);
    Ok((
        PiecewiseLinearApprox::build_with_resolution(phi1, r, t_r)?.mollify(),
        PiecewiseLinearApprox::build_with_resolution(phi2, r, t_r)?.mollify(),
    ))
}

/// `s_r` followed by mollification in one call.
pub fn mollified(phi: &InitialCondition, r: u32) -> Result<InitialCondition, InitError> {
    Ok(PiecewiseLinearApprox::build(phi, r)?.mollify())
}

const MOLLIFIER_PANELS: usize = 4;
const MOLLIFIER_NODES: usize = 40;

/// Unit-mass bump `c exp(-1/(1 - v²))` on `(-1, 1)`, rescaled to half-width `eps`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mollifier {
    eps: f64,
    norm: f64,
    rule: LegendreRule,
}

impl Mollifier {
    pub fn new(eps: f64) -> Self {
        let rule = LegendreRule::new(MOLLIFIER_NODES);
        let half = rule.integrate(-1.0, 0.0, MOLLIFIER_PANELS, raw_bump);
        Self {
            eps,
            norm: 2.0 * half,
            rule,
        }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `∫_{-1}^{1} exp(-1/(1 - v²)) dv`.
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    /// Density of the unit bump at `v ∈ [-1, 1]`.
    pub fn bump(&self, v: f64) -> f64 {
        raw_bump(v) / self.norm
    }

    /// Density of `η_r` at `u`: `bump(u/ε)/ε`.
    pub fn density(&self, u: f64) -> f64 {
        self.bump(u / self.eps) / self.eps
    }

    /// `(∫_{-1}^{v} η, ∫_{-1}^{v} w η(w) dw)` for the unit bump.
    pub fn partial_moments(&self, v: f64) -> (f64, f64) {
        if v <= -1.0 {
            return (0.0, 0.0);
        }
        if v >= 1.0 {
            return (1.0, 0.0);
        }
        if v > 0.0 {
            let (m0, m1) = self.partial_moments(-v);
            return (1.0 - m0, m1);
        }
        let m0 = self.rule.integrate(-1.0, v, MOLLIFIER_PANELS, raw_bump) / self.norm;
        let m1 = self.rule.integrate(-1.0, v, MOLLIFIER_PANELS, |w| w * raw_bump(w)) / self.norm;
        (m0, m1)
    }
}

fn raw_bump(v: f64) -> f64 {
    let d = 1.0 - v * v;
    if d <= 0.0 {
        0.0
    } else {
        math::exp(-1.0 / d)
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Mollified {
    approx: PiecewiseLinearApprox,
    kernel: Mollifier,
}

impl Mollified {
    fn eval(&self, x: f64) -> [f64; 3] {
        let s = &self.approx;
        let eps = s.eps;
        let rf = s.r as f64;
        if x >= rf + eps {
            return [s.right.at(x), s.right.slope, 0.0];
        }
        if x <= -rf - eps {
            return [s.left.at(x), s.left.slope, 0.0];
        }
        // Knots are 2ε apart, so at most the nearest one lies inside the kernel window.
        let per_unit = (s.r * s.t_r) as f64;
        let p = (math::round((x + rf) * per_unit) as isize).clamp(0, s.knots.len() as isize - 1);
        let q = s.knots[p as usize];
        let d = x - q;
        if d.abs() >= eps {
            let line = s.piece(s.segment_of(x));
            return [line.at(x), line.slope, 0.0];
        }
        let right = s.piece(p);
        let left = s.piece(p - 1);
        let v = d / eps;
        let (m0, m1) = self.kernel.partial_moments(v);
        let jump = right.slope - left.slope;
        let value = right.at(x) * m0 + left.at(x) * (1.0 - m0) - eps * m1 * jump;
        let d1 = right.slope * m0 + left.slope * (1.0 - m0);
        let d2 = jump * self.kernel.bump(v) / eps;
        [value, d1, d2]
    }
}
