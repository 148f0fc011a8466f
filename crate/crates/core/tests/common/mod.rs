//! Reference computations that avoid the crate's quadrature entirely.
#![allow(dead_code)]

use std::f64::consts::PI;

pub const Z_HALF_WIDTH: f64 = 12.0;
pub const Z_STEP: f64 = 1e-3;

pub fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

fn gaussian_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Trapezoid nodes and weights for the standard normal on `[-12, 12]`.
pub fn normal_grid(step: f64) -> Vec<(f64, f64)> {
    let n = (2.0 * Z_HALF_WIDTH / step).round() as usize;
    (0..=n)
        .map(|i| {
            let z = -Z_HALF_WIDTH + i as f64 * step;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            (z, w * step * gaussian_pdf(z))
        })
        .collect()
}

/// `E f(x + σ z)` by the trapezoid rule.
pub fn expectation(f: impl Fn(f64) -> f64, x: f64, sigma: f64) -> f64 {
    normal_grid(Z_STEP)
        .into_iter()
        .map(|(z, w)| w * f(x + sigma * z))
        .sum()
}

/// `(1/m) log E exp(m f(x + σ z))`, with `m = 0` meaning the plain expectation.
pub fn log_moment(f: impl Fn(f64) -> f64, x: f64, sigma: f64, m: f64) -> f64 {
    log_moment_on(&normal_grid(Z_STEP), f, x, sigma, m)
}

pub fn log_moment_on(grid: &[(f64, f64)], f: impl Fn(f64) -> f64, x: f64, sigma: f64, m: f64) -> f64 {
    if m == 0.0 {
        return grid.iter().map(|&(z, w)| w * f(x + sigma * z)).sum();
    }
    let vals: Vec<f64> = grid.iter().map(|&(z, _)| m * f(x + sigma * z)).collect();
    let top = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = grid.iter().zip(&vals).map(|(&(_, w), v)| w * (v - top).exp()).sum();
    (top + s.ln()) / m
}

/// Adaptive Simpson quadrature.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Adaptive Simpson over consecutive breakpoints.
pub fn simpson_pieces(f: &dyn Fn(f64) -> f64, cuts: &[f64], tol: f64) -> f64 {
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| simpson(f, w[0], w[1], tol))
        .sum()
}

/// Midpoint Riemann sum with `n` cells.
pub fn riemann(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
}

/// `F(x, 1)` for a two-level parameter (`m0` on `(0, t1]`, `m1` on `(t1, 1]`)
/// by composing two trapezoid expectations.
pub fn nested_two_step(phi: &dyn Fn(f64) -> f64, m0: f64, t1: f64, m1: f64, x: f64) -> f64 {
    let grid = normal_grid(5e-3);
    let inner = |y: f64| log_moment_on(&grid, phi, y, t1.sqrt(), m0);
    log_moment_on(&grid, inner, x, (1.0 - t1).sqrt(), m1)
}

/// SK value with one breakpoint, `a = 1` on `(0, t1]` and `m` on `(t1, 1]`, from
/// the closed form `F(y, t1) = t1/2 + log cosh y`.
pub fn sk_one_step_value(grid: &[(f64, f64)], beta: f64, field: f64, m: f64, t1: f64) -> f64 {
    let x = beta * field;
    let f = 0.5 * t1 + log_moment_on(grid, log_cosh, x, (1.0 - t1).sqrt(), m);
    let penalty = (t1 - 0.5 * t1 * t1) + m * ((1.0 - t1) - 0.5 * (1.0 - t1 * t1));
    std::f64::consts::LN_2 + f - 0.5 * beta * beta * penalty
}

/// Grid search of [`sk_one_step_value`] over `(m, t1) ∈ [0,1]²`, followed by a
/// second grid of the same size on the cell around the coarse minimum.
pub fn sk_one_step_grid_search(beta: f64, field: f64, n: usize) -> (f64, f64, f64) {
    let grid = normal_grid(4e-3);
    let search = |m_lo: f64, m_hi: f64, t_lo: f64, t_hi: f64| {
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..n {
            let m = m_lo + (m_hi - m_lo) * i as f64 / (n - 1) as f64;
            for j in 0..n {
                let t1 = t_lo + (t_hi - t_lo) * j as f64 / (n - 1) as f64;
                let v = sk_one_step_value(&grid, beta, field, m, t1);
                if v < best.0 {
                    best = (v, m, t1);
                }
            }
        }
        best
    };
    let h = 1.0 / (n - 1) as f64;
    let (_, m, t) = search(0.0, 1.0, 0.0, 1.0);
    search((m - h).max(0.0), (m + h).min(1.0), (t - h).max(0.0), (t + h).min(1.0))
}

/// Normalized bump `c exp(-1/(1-v²))` on `(-1, 1)`.
pub fn bump_constant() -> f64 {
    let raw = |v: f64| if v.abs() < 1.0 { (-1.0 / (1.0 - v * v)).exp() } else { 0.0 };
    1.0 / simpson(&raw, -1.0, 1.0, 1e-15)
}

/// `∫ η_ε(u) s(x - u) du`, split where `x - u` hits a knot of `s`.
pub fn convolve_with_bump(s: &dyn Fn(f64) -> f64, knots: &[f64], eps: f64, x: f64, c: f64) -> f64 {
    let kernel = |u: f64| {
        let v = u / eps;
        if v.abs() < 1.0 {
            c / eps * (-1.0 / (1.0 - v * v)).exp()
        } else {
            0.0
        }
    };
    let mut cuts = vec![-eps, eps];
    cuts.extend(knots.iter().map(|q| x - q).filter(|u| u.abs() < eps));
    cuts.sort_by(f64::total_cmp);
    simpson_pieces(&|u| kernel(u) * s(x - u), &cuts, 1e-14)
}

/// `2 ∫₀^∞ f(u) ρ(u, x) sinh(u x / σ²) du` with
/// `ρ(u, x) = exp(-(u² + x²)/(2σ²)) / (√(2π) σ)`.
pub fn sinh_representation(f: &dyn Fn(f64) -> f64, x: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    let integrand = |u: f64| {
        let rho = (-(u * u + x * x) / (2.0 * s2)).exp() / ((2.0 * PI).sqrt() * sigma);
        f(u) * rho * (u * x / s2).sinh()
    };
    let top = x.abs() + 14.0 * sigma;
    2.0 * simpson_pieces(&integrand, &[0.0, 0.5 * top, top], 1e-14)
}

/// Weighted covariance as `½ ∬ (f1(y)-f1(y'))(f2(y)-f2(y')) W(y) W(y') dμ dμ'`
/// with `μ = N(x, σ²)`, `W ∝ exp(log_w)` normalized to unit mass.
pub fn covariance_2d(
    f1: &dyn Fn(f64) -> f64,
    f2: &dyn Fn(f64) -> f64,
    log_w: &dyn Fn(f64) -> f64,
    x: f64,
    sigma: f64,
) -> f64 {
    let grid = normal_grid(0.02);
    let ys: Vec<f64> = grid.iter().map(|(z, _)| x + sigma * z).collect();
    let logs: Vec<f64> = ys.iter().map(|&y| log_w(y)).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = grid.iter().zip(&logs).map(|((_, p), l)| p * (l - top).exp()).collect();
    let mass: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= mass);
    let a: Vec<f64> = ys.iter().map(|&y| f1(y)).collect();
    let b: Vec<f64> = ys.iter().map(|&y| f2(y)).collect();
    let mut total = 0.0;
    for i in 0..ys.len() {
        for j in 0..i {
            total += (a[i] - a[j]) * (b[i] - b[j]) * w[i] * w[j];
        }
    }
    total
}
