//! Nelder–Mead simplex search with the standard coefficients.

use alloc::vec::Vec;

use crate::math;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct NelderMeadConfig {
    pub max_iterations: usize,
    /// Converged once every vertex lies within this distance of the best one.
    pub diameter_tol: f64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            max_iterations: 1500,
            diameter_tol: 1e-7,
            initial_step: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NelderMeadResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimizes `f` from `start`. Non-finite objective values are treated as `+∞`.
pub fn minimize<F>(mut f: F, start: &[f64], config: &NelderMeadConfig) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = start.len();
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), eval(start)));
    for i in 0..n {
        let mut x = start.to_vec();
        x[i] += config.initial_step;
        let v = eval(&x);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        // Stable sort keeps earlier vertices first among ties, for reproducibility.
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if diameter(&simplex) < config.diameter_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = alloc::vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let along = |coef: f64, toward: &[f64]| -> Vec<f64> {
            centroid.iter().zip(toward).map(|(c, w)| c + coef * (c - w)).collect()
        };

        let best = simplex[0].1;
        let second_worst = simplex[n - 1].1;
        let worst = simplex[n].1;
        let xr = along(REFLECT, &simplex[n].0);
        let fr = eval(&xr);
        if fr < best {
            let xe = along(EXPAND, &simplex[n].0);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < second_worst {
            simplex[n] = (xr, fr);
            continue;
        }
        // Outside contraction when the reflection beat the worst vertex, inside otherwise.
        let outside = fr < worst;
        let xc = along(if outside { CONTRACT } else { -CONTRACT }, &simplex[n].0);
        let fc = eval(&xc);
        let accept = if outside { fc <= fr } else { fc < worst };
        if accept {
            simplex[n] = (xc, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = anchor
                .iter()
                .zip(&vertex.0)
                .map(|(a, v)| a + SHRINK * (v - a))
                .collect();
            let v = eval(&x);
            *vertex = (x, v);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (point, value) = simplex.swap_remove(0);
    NelderMeadResult {
        point,
        value,
        iterations,
        evaluations,
        converged,
    }
}

fn diameter(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let best = &simplex[0].0;
    simplex[1..]
        .iter()
        .map(|(x, _)| {
            math::sqrt(x.iter().zip(best).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        })
        .fold(0.0, f64::max)
}
