// Copyright 2026 The smoothdos Authors
// SPDX-License-Identifier: Apache-2.0

//! Gauss–Legendre rules and a bisection-adaptive integrator.

use std::f64::consts::PI;
use std::ops::{Add, Sub};

use crate::{CMatrix, C64};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| (mid + half * x, half * w))
            .collect()
    }

    /// Composite rule: `panels` equal panels on `[a, b]`.
    pub fn composite(&self, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
        let h = (b - a) / panels as f64;
        (0..panels)
            .flat_map(|k| self.on(a + k as f64 * h, a + (k + 1) as f64 * h))
            .collect()
    }

    pub fn integrate<T: QuadValue>(&self, a: f64, b: f64, f: impl Fn(f64) -> T) -> T {
        let mut it = self.on(a, b).into_iter();
        let (x0, w0) = it.next().expect("non-empty rule");
        it.fold(f(x0).scale(w0), |acc, (x, w)| acc + f(x).scale(w))
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let d = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Values that can be integrated: a vector space with a size measure.
pub trait QuadValue: Clone + Add<Output = Self> + Sub<Output = Self> {
    fn scale(self, w: f64) -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn scale(self, w: f64) -> Self {
        self * w
    }

    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for C64 {
    fn scale(self, w: f64) -> Self {
        self * w
    }

    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl QuadValue for CMatrix {
    fn scale(self, w: f64) -> Self {
        self * C64::new(w, 0.0)
    }

    fn magnitude(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

/// Result of an adaptive integration.
#[derive(Clone, Debug)]
pub struct Adaptive<T> {
    pub value: T,
    pub error_estimate: f64,
    pub converged: bool,
    pub evaluations: usize,
}

/// Adaptive bisection with a 10-point Gauss–Legendre panel rule.
///
/// A panel is accepted when its value and the sum over its two halves agree
/// to `abs_tol + rel_tol·|I|`, with the tolerance split proportionally to
/// panel width. `breakpoints` seed the initial partition (use them for known
/// peaks).
pub fn adaptive<T: QuadValue>(
    f: impl Fn(f64) -> T,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Adaptive<T> {
    let rule = GaussLegendre::new(10);
    let mut edges = vec![a];
    let mut inner: Vec<f64> = breakpoints.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(f64::total_cmp);
    edges.extend(inner);
    edges.push(b);

    let mut evaluations = 0usize;
    let panel = |lo: f64, hi: f64, evals: &mut usize| -> T {
        *evals += rule.len();
        rule.integrate(lo, hi, &f)
    };

    let total_width = b - a;
    let mut stack: Vec<(f64, f64, T, usize)> = Vec::new();
    for w in edges.windows(2) {
        let v = panel(w[0], w[1], &mut evaluations);
        stack.push((w[0], w[1], v, 0));
    }
    // Rough scale for the relative tolerance.
    let scale = stack.iter().map(|s| s.2.magnitude()).sum::<f64>();

    let mut value: Option<T> = None;
    let mut error = 0.0;
    let mut converged = true;
    while let Some((lo, hi, whole, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = panel(lo, mid, &mut evaluations);
        let right = panel(mid, hi, &mut evaluations);
        let halves = left.clone() + right.clone();
        let diff = (halves.clone() - whole).magnitude();
        let budget = (abs_tol + rel_tol * scale) * ((hi - lo) / total_width).max(1e-3);
        if diff <= budget || depth >= 48 {
            if depth >= 48 && diff > budget {
                converged = false;
            }
            error += diff;
            value = Some(match value {
                Some(v) => v + halves,
                None => halves,
            });
        } else {
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    Adaptive {
        value: value.expect("at least one panel"),
        error_estimate: error,
        converged,
        evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_is_exact_for_polynomials() {
        let rule = GaussLegendre::new(6);
        for k in 0..12 {
            let exact = 1.0 / (k as f64 + 1.0);
            let got = rule.integrate(0.0, 1.0, |x| x.powi(k));
            assert!((got - exact).abs() < 1e-14, "k={k} got={got}");
        }
    }

    #[test]
    fn large_rules_have_unit_weight_sum() {
        for n in [1, 2, 17, 64, 200] {
            let rule = GaussLegendre::new(n);
            let s: f64 = rule.on(-1.0, 1.0).iter().map(|p| p.1).sum();
            assert!((s - 2.0).abs() < 1e-12, "n={n} s={s}");
        }
    }

    #[test]
    fn adaptive_resolves_a_narrow_peak() {
        let eps = 1e-3;
        let r = adaptive(|x| eps / (x * x + eps * eps), -1.0, 1.0, &[0.0], 1e-12, 1e-12);
        let exact = 2.0 * (1.0 / eps).atan();
        assert!(r.converged);
        assert!((r.value - exact).abs() < 1e-9, "{} vs {}", r.value, exact);
    }
}
