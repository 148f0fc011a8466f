//! Gauss–Hermite quadrature for expectations over a standard Gaussian.
//!
//! All expectations are of the form `E f(x + σ z)` with `z ~ N(0, 1)`. With
//! physicists' nodes `s_i` and weights `w_i` (weight function `e^{-s²}`) this is
//! `Σ w_i f(x + √2 σ s_i) / √π`.

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};
use core::fmt;

use crate::math;

/// Default number of nodes used by the solver.
pub const DEFAULT_ORDER: usize = 60;

#[derive(Clone, Debug, PartialEq)]
pub enum QuadError {
    InvalidOrder(usize),
    InvalidSigma(f64),
    InvalidM(f64),
    /// The integrand returned a non-finite value at node `node` (evaluated at `point`).
    NonFinite { node: usize, point: f64 },
}

impl fmt::Display for QuadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadError::InvalidOrder(n) => write!(f, "rule order must be positive, got {n}"),
            QuadError::InvalidSigma(s) => write!(f, "sigma must be finite and >= 0, got {s}"),
            QuadError::InvalidM(m) => write!(f, "m must lie in [0, 1], got {m}"),
            QuadError::NonFinite { node, point } => {
                write!(f, "non-finite integrand at node {node} (u = {point})")
            }
        }
    }
}

impl core::error::Error for QuadError {}

/// Gauss–Hermite rule with physicists' normalization (`Σ w_i = √π`).
///
/// Immutable after construction, so a single rule can be shared freely.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    // `√2 s_i` and `w_i / √π`: abscissae and probabilities for N(0, 1).
    z: Vec<f64>,
    p: Vec<f64>,
}

/// Gibbs-weighted moments at one point `x`.
///
/// With `W = exp(m g(u)) / E exp(m g(u))` over `u = x + σ z`:
/// `log_moment = (1/m) log E exp(m g)`, `d1 = E g' W`, `d1_sq = E g'² W`, `d2 = E g'' W`.
/// For `m = 0` the weight is uniform and `log_moment = E g`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GibbsStats {
    pub log_moment: f64,
    pub d1: f64,
    pub d1_sq: f64,
    pub d2: f64,
}

impl GibbsStats {
    /// `∂x` of the smoothed function.
    pub fn dx(&self) -> f64 {
        self.d1
    }

    /// `∂xx` of the smoothed function: `E g'' W + m (E g'² W - (E g' W)²)`.
    pub fn dxx(&self, m: f64) -> f64 {
        self.d2 + m * (self.d1_sq - self.d1 * self.d1)
    }
}

impl HermiteRule {
    pub fn new(order: usize) -> Result<Self, QuadError> {
        if order == 0 {
            return Err(QuadError::InvalidOrder(order));
        }
        let (nodes, weights) = hermite_nodes(order);
        let inv_sqrt_pi = 1.0 / math::sqrt(PI);
        let z = nodes.iter().map(|s| SQRT_2 * s).collect();
        let p = weights.iter().map(|w| w * inv_sqrt_pi).collect();
        Ok(Self {
            nodes,
            weights,
            z,
            p,
        })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Physicists' abscissae, strictly increasing.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Physicists' weights, summing to `√π`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Abscissae for a standard Gaussian (`√2 s_i`).
    pub fn gaussian_nodes(&self) -> &[f64] {
        &self.z
    }

    /// Probabilities for a standard Gaussian (`w_i / √π`), summing to one.
    pub fn gaussian_weights(&self) -> &[f64] {
        &self.p
    }

    /// `E f(x + σ z)`.
    pub fn gauss_expectation<F>(&self, f: F, x: f64, sigma: f64) -> Result<f64, QuadError>
    where
        F: Fn(f64) -> f64,
    {
        check_sigma(sigma)?;
        if sigma == 0.0 {
            return finite(f(x), 0, x);
        }
        let mut acc = 0.0;
        for (k, (&z, &p)) in self.z.iter().zip(&self.p).enumerate() {
            let u = x + sigma * z;
            acc += p * finite(f(u), k, u)?;
        }
        Ok(acc)
    }

    /// `(1/m) log E exp(m f(x + σ z))`, or `E f(x + σ z)` when `m = 0`.
    ///
    /// Evaluated with max subtraction so that `m f` of several hundred does not overflow.
    pub fn log_moment<F>(&self, f: F, x: f64, sigma: f64, m: f64) -> Result<f64, QuadError>
    where
        F: Fn(f64) -> f64,
    {
        check_m(m)?;
        if m == 0.0 {
            return self.gauss_expectation(f, x, sigma);
        }
        check_sigma(sigma)?;
        if sigma == 0.0 {
            return finite(f(x), 0, x);
        }
        let n = self.order();
        let mut v = [0.0f64; 256];
        let mut heap;
        let vals: &mut [f64] = if n <= v.len() {
            &mut v[..n]
        } else {
            heap = alloc::vec![0.0; n];
            &mut heap[..]
        };
        for (k, &z) in self.z.iter().enumerate() {
            let u = x + sigma * z;
            vals[k] = finite(f(u), k, u)?;
        }
        Ok(log_mean_exp(vals.iter().copied(), &self.p, m))
    }

    /// Gibbs moments of `g` at `x`, where `g(u)` returns `[g(u), g'(u), g''(u)]`.
    pub fn gibbs<F>(&self, g: F, x: f64, sigma: f64, m: f64) -> Result<GibbsStats, QuadError>
    where
        F: Fn(f64) -> [f64; 3],
    {
        check_m(m)?;
        check_sigma(sigma)?;
        if sigma == 0.0 {
            let [v, d1, d2] = g(x);
            finite(v, 0, x)?;
            return Ok(GibbsStats {
                log_moment: v,
                d1,
                d1_sq: d1 * d1,
                d2,
            });
        }
        let n = self.order();
        let mut buf = [[0.0f64; 3]; 256];
        let mut heap;
        let vals: &mut [[f64; 3]] = if n <= buf.len() {
            &mut buf[..n]
        } else {
            heap = alloc::vec![[0.0; 3]; n];
            &mut heap[..]
        };
        let mut vmax = f64::NEG_INFINITY;
        for (k, &z) in self.z.iter().enumerate() {
            let u = x + sigma * z;
            let e = g(u);
            finite(e[0], k, u)?;
            vals[k] = e;
            vmax = vmax.max(m * e[0]);
        }
        Ok(gibbs_reduce(vals, &self.p, m, vmax))
    }
}

/// Reduces evaluated `[g, g', g'']` triples into Gibbs moments.
pub(crate) fn gibbs_reduce(vals: &[[f64; 3]], p: &[f64], m: f64, vmax: f64) -> GibbsStats {
    let (mut s0, mut s1, mut s11, mut s2) = (0.0, 0.0, 0.0, 0.0);
    if m == 0.0 {
        for (e, &pk) in vals.iter().zip(p) {
            s0 += pk * e[0];
            s1 += pk * e[1];
            s11 += pk * e[1] * e[1];
            s2 += pk * e[2];
        }
        return GibbsStats {
            log_moment: s0,
            d1: s1,
            d1_sq: s11,
            d2: s2,
        };
    }
    for (e, &pk) in vals.iter().zip(p) {
        let w = pk * math::exp(m * e[0] - vmax);
        s0 += w;
        s1 += w * e[1];
        s11 += w * e[1] * e[1];
        s2 += w * e[2];
    }
    GibbsStats {
        log_moment: log_mean_exp(vals.iter().map(|e| e[0]), p, m),
        d1: s1 / s0,
        d1_sq: s11 / s0,
        d2: s2 / s0,
    }
}

/// `(1/m) log Σ p_k exp(m f_k)` for probabilities `p`, or `Σ p_k f_k` at `m = 0`.
///
/// When `m` times the spread of `f` is small the sum is centered at its mean
/// and evaluated with `expm1`/`ln_1p`, since the direct form loses everything
/// to cancellation as `m → 0`.
fn log_mean_exp<I>(f: I, p: &[f64], m: f64) -> f64
where
    I: Iterator<Item = f64> + Clone,
{
    let mean: f64 = f.clone().zip(p).map(|(v, pk)| pk * v).sum();
    if m == 0.0 {
        return mean;
    }
    let (lo, hi) = f.clone().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if m * (hi - lo) <= 1.0 {
        let s: f64 = f.zip(p).map(|(v, pk)| pk * math::expm1(m * (v - mean))).sum();
        return mean + math::ln_1p(s) / m;
    }
    let top = m * hi;
    let s: f64 = f.zip(p).map(|(v, pk)| pk * math::exp(m * v - top)).sum();
    (top + math::ln(s)) / m
}

fn check_sigma(sigma: f64) -> Result<(), QuadError> {
    if sigma.is_finite() && sigma >= 0.0 {
        Ok(())
    } else {
        Err(QuadError::InvalidSigma(sigma))
    }
}

pub(crate) fn check_m(m: f64) -> Result<(), QuadError> {
    if (0.0..=1.0).contains(&m) {
        Ok(())
    } else {
        Err(QuadError::InvalidM(m))
    }
}

#[inline]
fn finite(v: f64, node: usize, point: f64) -> Result<f64, QuadError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(QuadError::NonFinite { node, point })
    }
}

/// Orthonormal Hermite polynomial `h_n(z)` and its derivative.
fn hermite_eval(n: usize, z: f64) -> (f64, f64) {
    // π^{-1/4}
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let mut p1 = PIM4;
    let mut p2 = 0.0;
    for j in 1..=n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = z * math::sqrt(2.0 / jf) * p2 - math::sqrt((jf - 1.0) / jf) * p3;
    }
    (p1, math::sqrt(2.0 * n as f64) * p2)
}

/// Nodes and weights from the positive roots of `h_n`, each bracketed by a
/// sign change on a fine scan and polished by safeguarded Newton steps.
fn hermite_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let half = n / 2;
    let mut roots: Vec<(f64, f64)> = Vec::with_capacity(half);
    // Root spacing is at least about π / √(2n), far above the scan step.
    let zmax = math::sqrt(2.0 * n as f64 + 1.0) + 1.0;
    let step = 0.002;
    let mut lo = if n % 2 == 1 { 0.5 * step } else { 0.0 };
    let mut flo = hermite_eval(n, lo).0;
    while lo < zmax && roots.len() < half {
        let hi = lo + step;
        let fhi = hermite_eval(n, hi).0;
        if flo == 0.0 || flo * fhi < 0.0 {
            roots.push(polish(n, lo, hi, flo));
        }
        lo = hi;
        flo = fhi;
    }
    assert_eq!(roots.len(), half, "Gauss-Hermite root scan missed roots");

    let weight = |d: f64| 2.0 / (d * d);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &(z, d) in roots.iter().rev() {
        nodes.push(-z);
        weights.push(weight(d));
    }
    if n % 2 == 1 {
        nodes.push(0.0);
        weights.push(weight(hermite_eval(n, 0.0).1));
    }
    for &(z, d) in &roots {
        nodes.push(z);
        weights.push(weight(d));
    }
    (nodes, weights)
}

/// Newton on `[lo, hi]`, falling back to bisection when a step leaves the bracket.
fn polish(n: usize, mut lo: f64, mut hi: f64, flo: f64) -> (f64, f64) {
    let lo_sign = flo.signum();
    let mut z = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (p, d) = hermite_eval(n, z);
        if p == 0.0 {
            break;
        }
        if p.signum() == lo_sign {
            lo = z;
        } else {
            hi = z;
        }
        let newton = z - p / d;
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        let done = (next - z).abs() <= 1e-15 * z.abs().max(1.0);
        z = next;
        if done {
            break;
        }
    }
    (z, hermite_eval(n, z).1)
}
