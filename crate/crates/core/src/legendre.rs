//! Gauss–Legendre rules, used for the mollifier moments.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::math;

#[derive(Clone, Debug, PartialEq)]
pub struct LegendreRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl LegendreRule {
    /// `order` nodes on `[-1, 1]`; panics if `order == 0`.
    pub fn new(order: usize) -> Self {
        assert!(order > 0, "Gauss-Legendre order must be positive");
        let n = order;
        let nf = n as f64;
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut z = math::cos(PI * (i as f64 + 0.75) / (nf + 0.5));
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for j in 2..=n {
                    let jf = j as f64;
                    let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = nf * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() <= 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫_a^b f` split into `panels` equal sub-intervals.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, panels: usize, f: F) -> f64 {
        let panels = panels.max(1);
        let width = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let lo = a + width * p as f64;
            let half = 0.5 * width;
            let mid = lo + half;
            let s: f64 = self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(x, w)| w * f(mid + half * x))
                .sum();
            total += half * s;
        }
        total
    }
}
