//! Step functional order parameters.
//!
//! A [`StepParam`] with breakpoints `0 < t_1 < … < t_k < 1` and values
//! `m_0, …, m_k` is the left-continuous step function with `a(0) = m_0` and
//! `a(t) = m_j` on `(t_j, t_{j+1}]` (taking `t_0 = 0`, `t_{k+1} = 1`).

use alloc::vec::Vec;
use core::fmt;

/// Breakpoints closer than this are merged.
pub const MERGE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum ParamError {
    /// `values.len()` must be `breakpoints.len() + 1`.
    LengthMismatch { breakpoints: usize, values: usize },
    InvalidBreakpoint(f64),
    UnsortedBreakpoints,
    InvalidValue(f64),
    OutOfDomain(f64),
    InvalidAlpha(f64),
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamError::LengthMismatch { breakpoints, values } => write!(
                f,
                "expected {} values for {breakpoints} breakpoints, got {values}",
                breakpoints + 1
            ),
            ParamError::InvalidBreakpoint(t) => write!(f, "breakpoint {t} outside [0, 1]"),
            ParamError::UnsortedBreakpoints => f.write_str("breakpoints must be increasing"),
            ParamError::InvalidValue(m) => write!(f, "value {m} outside [0, 1]"),
            ParamError::OutOfDomain(t) => write!(f, "t = {t} outside [0, 1]"),
            ParamError::InvalidAlpha(a) => write!(f, "alpha = {a} outside [0, 1]"),
        }
    }
}

impl core::error::Error for ParamError {}

/// One constant piece `(start, end]` of a step parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

impl Interval {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(try_from = "RawStepParam")
)]
pub struct StepParam {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[cfg(feature = "serde")]
#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStepParam {
    #[serde(default)]
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[cfg(feature = "serde")]
impl TryFrom<RawStepParam> for StepParam {
    type Error = ParamError;

    fn try_from(raw: RawStepParam) -> Result<Self, ParamError> {
        StepParam::new(raw.breakpoints, raw.values)
    }
}

impl StepParam {
    /// Validates and normalizes a step parameter.
    ///
    /// Breakpoints must be nondecreasing and lie in `[0, 1]`; values must lie in `[0, 1]`.
    /// Intervals shorter than [`MERGE_TOL`] are dropped together with their value.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self, ParamError> {
        if values.len() != breakpoints.len() + 1 {
            return Err(ParamError::LengthMismatch {
                breakpoints: breakpoints.len(),
                values: values.len(),
            });
        }
        for &t in &breakpoints {
            if !(0.0..=1.0).contains(&t) {
                return Err(ParamError::InvalidBreakpoint(t));
            }
        }
        if breakpoints.windows(2).any(|w| w[1] < w[0]) {
            return Err(ParamError::UnsortedBreakpoints);
        }
        for &m in &values {
            if !(0.0..=1.0).contains(&m) {
                return Err(ParamError::InvalidValue(m));
            }
        }

        let mut kept_ends: Vec<f64> = Vec::with_capacity(values.len());
        let mut kept_values: Vec<f64> = Vec::with_capacity(values.len());
        let mut last_end = 0.0;
        for (i, &m) in values.iter().enumerate() {
            let end = breakpoints.get(i).copied().unwrap_or(1.0);
            if end - last_end > MERGE_TOL {
                kept_ends.push(end);
                kept_values.push(m);
                last_end = end;
            }
        }
        // A dropped final interval leaves the previous one ending short of 1.
        if let Some(e) = kept_ends.last_mut() {
            *e = 1.0;
        }
        kept_ends.pop();
        Ok(Self {
            breakpoints: kept_ends,
            values: kept_values,
        })
    }

    pub fn constant(m: f64) -> Result<Self, ParamError> {
        Self::new(Vec::new(), alloc::vec![m])
    }

    /// Builds from an increasing sequence `x(q)` on `[0, 1]` (the nondecreasing
    /// orientation), returning `a(t) = x(1 - t)`.
    pub fn from_nondecreasing(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self, ParamError> {
        Ok(Self::new(breakpoints, values)?.reversed())
    }

    fn from_parts_unchecked(breakpoints: Vec<f64>, values: Vec<f64>) -> Self {
        debug_assert_eq!(breakpoints.len() + 1, values.len());
        Self {
            breakpoints,
            values,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of breakpoints `k`.
    pub fn num_breakpoints(&self) -> usize {
        self.breakpoints.len()
    }

    /// Membership in the space of nonincreasing parameters.
    pub fn in_m(&self) -> bool {
        self.values.windows(2).all(|w| w[0] >= w[1])
    }

    pub fn intervals(&self) -> impl ExactSizeIterator<Item = Interval> + '_ {
        (0..self.values.len()).map(move |j| Interval {
            start: if j == 0 { 0.0 } else { self.breakpoints[j - 1] },
            end: self.breakpoints.get(j).copied().unwrap_or(1.0),
            value: self.values[j],
        })
    }

    pub fn evaluate(&self, t: f64) -> Result<f64, ParamError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(ParamError::OutOfDomain(t));
        }
        let idx = self.breakpoints.partition_point(|&b| b < t);
        Ok(self.values[idx])
    }

    /// Same function on a finer breakpoint set (which must contain ours).
    fn refine_to(&self, grid: &[f64]) -> Self {
        let mut values = Vec::with_capacity(grid.len() + 1);
        let mut start = 0.0;
        for end in grid.iter().copied().chain(core::iter::once(1.0)) {
            let mid = 0.5 * (start + end);
            let idx = self.breakpoints.partition_point(|&b| b < mid);
            values.push(self.values[idx]);
            start = end;
        }
        Self::from_parts_unchecked(grid.to_vec(), values)
    }

    /// Merges adjacent intervals carrying the same value.
    pub fn canonical(&self) -> Self {
        let mut breakpoints = Vec::new();
        let mut values = alloc::vec![self.values[0]];
        for (j, &t) in self.breakpoints.iter().enumerate() {
            let next = self.values[j + 1];
            if next != *values.last().unwrap() {
                breakpoints.push(t);
                values.push(next);
            }
        }
        Self::from_parts_unchecked(breakpoints, values)
    }

    /// `t ↦ a(1 - t)`, turning a nonincreasing parameter into a nondecreasing one and back.
    pub fn reversed(&self) -> Self {
        let breakpoints = self.breakpoints.iter().rev().map(|t| 1.0 - t).collect();
        let values = self.values.iter().rev().copied().collect();
        Self::from_parts_unchecked(breakpoints, values)
    }

    /// `∫₀¹ a(t) dt`.
    pub fn integral(&self) -> f64 {
        self.intervals().map(|iv| iv.value * iv.len()).sum()
    }

    /// `∫₀¹ t a(1 - t) dt = Σ_j m_j [(t_{j+1} - t_j) - (t_{j+1}² - t_j²)/2]`.
    pub fn penalty_integral(&self) -> f64 {
        self.intervals()
            .map(|iv| iv.value * (iv.len() - 0.5 * (iv.end * iv.end - iv.start * iv.start)))
            .sum()
    }

    /// Checks `self ≤ other` pointwise; on failure returns a witness time.
    pub fn dominated_by(&self, other: &Self) -> Result<(), (f64, f64, f64)> {
        let (a, b) = refine_pair(self, other);
        for (ia, ib) in a.intervals().zip(b.intervals()) {
            if ia.value > ib.value {
                return Err((0.5 * (ia.start + ia.end), ia.value, ib.value));
            }
        }
        Ok(())
    }
}

fn union_breakpoints(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
    all.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for t in all {
        match out.last() {
            Some(&last) if t - last <= MERGE_TOL => {}
            _ => out.push(t),
        }
    }
    out
}

/// Rewrites both parameters on the union of their breakpoints.
pub fn refine_pair(a1: &StepParam, a2: &StepParam) -> (StepParam, StepParam) {
    let grid = union_breakpoints(&a1.breakpoints, &a2.breakpoints);
    (a1.refine_to(&grid), a2.refine_to(&grid))
}

/// `α a1 + (1 - α) a2` on the common refinement.
pub fn convex_combination(alpha: f64, a1: &StepParam, a2: &StepParam) -> Result<StepParam, ParamError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ParamError::InvalidAlpha(alpha));
    }
    let (r1, r2) = refine_pair(a1, a2);
    let values = r1
        .values
        .iter()
        .zip(&r2.values)
        .map(|(m1, m2)| (alpha * m1 + (1.0 - alpha) * m2).clamp(0.0, 1.0))
        .collect();
    Ok(StepParam::from_parts_unchecked(r1.breakpoints, values))
}

/// `∫₀¹ |a1 - a2| dt`, exact on the common refinement.
pub fn l1_distance(a1: &StepParam, a2: &StepParam) -> f64 {
    let (r1, r2) = refine_pair(a1, a2);
    r1.intervals()
        .zip(r2.intervals())
        .map(|(i1, i2)| (i1.value - i2.value).abs() * i1.len())
        .sum()
}
