// Copyright 2026 The smoothdos Authors
// SPDX-License-Identifier: Apache-2.0

//! Single-site densities `ρ(x) = c_p x^p (1-x)^p` on `(0, 1)`.
//!
//! The bump of order `p` is `C^{p-1}` on the real line with a Lipschitz
//! `(p-1)`-th derivative, so the guaranteed smoothness order is `m = p - 1`
//! with Hölder exponent `τ = 1`. All derivatives are polynomials on `[0, 1]`
//! and are evaluated from exact coefficient tables.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad;

/// Upper limit on rejection-sampling attempts for one draw.
pub const REJECTION_CAP: usize = 1_000_000;

/// Largest supported bump order; beyond this the monomial coefficients lose
/// too many digits to cancellation.
pub const MAX_ORDER: u32 = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DensityError {
    #[error("bump order p must lie in 1..={MAX_ORDER}, got {0}")]
    InvalidOrder(u32),
    #[error("derivative order {order} exceeds the allowed maximum {max}")]
    OrderTooHigh { order: usize, max: usize },
    #[error("tilted sampling needs a derivative order >= 1")]
    ZeroTiltOrder,
    #[error("rejection sampler exceeded {REJECTION_CAP} attempts")]
    RejectionCap,
}

/// Polynomial with coefficients in increasing degree.
#[derive(Clone, Debug, PartialEq)]
struct Poly(Vec<f64>);

impl Poly {
    fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![0.0]);
        }
        Poly(self.0.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect())
    }

    fn antiderivative(&self) -> Poly {
        let mut out = vec![0.0];
        out.extend(self.0.iter().enumerate().map(|(k, &c)| c / (k as f64 + 1.0)));
        Poly(out)
    }
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Symmetric polynomial bump density of order `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleSiteDensity {
    p: u32,
    /// `derivs[j]` is the polynomial `ρ^(j)` on `[0, 1]`, for `j ≤ 2p + 1`.
    derivs: Vec<Poly>,
    /// `ρ^(-1)`, the cumulative distribution on `[0, 1]`.
    cdf: Poly,
    l1: Vec<f64>,
    sup: Vec<f64>,
}

impl Serialize for SingleSiteDensity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            p: u32,
        }
        Repr { p: self.p }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SingleSiteDensity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            p: u32,
        }
        let r = Repr::deserialize(d)?;
        SingleSiteDensity::new(r.p).map_err(serde::de::Error::custom)
    }
}

impl SingleSiteDensity {
    pub fn new(p: u32) -> Result<Self, DensityError> {
        if p == 0 || p > MAX_ORDER {
            return Err(DensityError::InvalidOrder(p));
        }
        // c_p = 1 / B(p+1, p+1) = (2p+1)! / (p!)^2
        let c = (2 * p + 1) as f64 * binomial(2 * p as u64, p as u64);
        let mut coeffs = vec![0.0; 2 * p as usize + 1];
        for k in 0..=p as usize {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            coeffs[p as usize + k] = c * sign * binomial(p as u64, k as u64);
        }
        let base = Poly(coeffs);
        let cdf = base.antiderivative();
        let mut derivs = vec![base];
        for j in 1..=(2 * p as usize + 1) {
            let next = derivs[j - 1].derivative();
            derivs.push(next);
        }
        let mut density = Self {
            p,
            derivs,
            cdf,
            l1: Vec::new(),
            sup: Vec::new(),
        };
        density.l1 = (0..=p as usize).map(|j| density.compute_l1(j)).collect();
        density.sup = (0..=p as usize).map(|j| density.compute_sup(j)).collect();
        Ok(density)
    }

    /// Bump with guaranteed smoothness order `m` (so `p = m + 1`).
    pub fn with_smoothness(m: u32) -> Result<Self, DensityError> {
        Self::new(m + 1)
    }

    pub fn order(&self) -> u32 {
        self.p
    }

    /// Global continuity order `m = p - 1`.
    pub fn smoothness(&self) -> usize {
        self.p as usize - 1
    }

    /// Hölder exponent of the `m`-th derivative.
    pub fn holder_exponent(&self) -> f64 {
        1.0
    }

    fn check(&self, j: usize, max: usize) -> Result<(), DensityError> {
        if j > max {
            Err(DensityError::OrderTooHigh { order: j, max })
        } else {
            Ok(())
        }
    }

    /// `ρ^(j)(x)`, zero outside `[0, 1]`.
    pub fn eval(&self, j: usize, x: f64) -> Result<f64, DensityError> {
        self.check(j, self.p as usize)?;
        Ok(self.eval_unchecked(j, x))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, j: usize, x: f64) -> f64 {
        if (0.0..=0.5).contains(&x) {
            self.derivs[j].eval(x)
        } else if (0.5..=1.0).contains(&x) {
            // ρ(x) = ρ(1 - x); Horner is better conditioned near the origin
            let v = self.derivs[j].eval(1.0 - x);
            if j % 2 == 0 {
                v
            } else {
                -v
            }
        } else {
            0.0
        }
    }

    /// Density value `ρ(x)`.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        self.eval_unchecked(0, x)
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else if x <= 0.5 {
            self.cdf.eval(x)
        } else {
            1.0 - self.cdf.eval(1.0 - x)
        }
    }

    /// `‖ρ^(j)‖₁` for `j ≤ p`.
    pub fn l1_norm_of_derivative(&self, j: usize) -> Result<f64, DensityError> {
        self.check(j, self.p as usize)?;
        Ok(self.l1[j])
    }

    /// `‖ρ^(j)‖_∞` for `j ≤ p`.
    pub fn sup_norm(&self, j: usize) -> Result<f64, DensityError> {
        self.check(j, self.p as usize)?;
        Ok(self.sup[j])
    }

    /// `𝒟 = max_{j ≤ m} ‖ρ^(j)‖_∞`.
    pub fn sup_constant(&self) -> f64 {
        self.sup[..=self.smoothness()].iter().copied().fold(0.0, f64::max)
    }

    /// Score `ρ'/ρ = p (1 - 2x) / (x (1 - x))` inside the support.
    #[inline]
    pub fn score(&self, x: f64) -> f64 {
        let p = self.p as f64;
        p / x - p / (1.0 - x)
    }

    /// `(log ρ)'' = ρ''/ρ - (ρ'/ρ)^2 = -p/x^2 - p/(1-x)^2`.
    #[inline]
    pub fn log_curvature(&self, x: f64) -> f64 {
        let p = self.p as f64;
        -p / (x * x) - p / ((1.0 - x) * (1.0 - x))
    }

    /// `∫ (ρ')^2 / ρ dx`; finite only for `p ≥ 2`.
    pub fn fisher_information(&self) -> Option<f64> {
        if self.p < 2 {
            return None;
        }
        let r = quad::adaptive(
            |x| {
                let s = self.score(x);
                s * s * self.value(x)
            },
            0.0,
            1.0,
            &[0.5],
            1e-13,
            1e-13,
        );
        Some(r.value)
    }

    /// Interior roots of `ρ^(j)` in `(0, 1)`, by sign-change scan and bisection.
    fn interior_roots(&self, j: usize) -> Vec<f64> {
        const GRID: usize = 4096;
        let mut roots = Vec::new();
        let mut prev_x = 0.0;
        let mut prev = self.eval_unchecked(j, 1e-12);
        for i in 1..=GRID {
            let x = if i == GRID { 1.0 - 1e-12 } else { i as f64 / GRID as f64 };
            let v = self.eval_unchecked(j, x);
            if v == 0.0 {
                roots.push(x);
            } else if prev != 0.0 && (v > 0.0) != (prev > 0.0) {
                let (mut lo, mut hi) = (prev_x, x);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let vm = self.eval_unchecked(j, mid);
                    if (vm > 0.0) == (prev > 0.0) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo < 1e-16 {
                        break;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            prev_x = x;
            prev = v;
        }
        roots.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        roots
    }

    fn compute_l1(&self, j: usize) -> f64 {
        if j == 0 {
            return 1.0;
        }
        let roots = self.interior_roots(j);
        if roots.len() != j {
            log::warn!(
                "found {} interior roots of the order-{j} derivative (expected {j}); \
                 using adaptive quadrature for its L1 norm",
                roots.len()
            );
            return quad::adaptive(|x| self.eval_unchecked(j, x).abs(), 0.0, 1.0, &roots, 1e-14, 1e-14).value;
        }
        // Exact: ρ^(j-1) is an antiderivative of ρ^(j).
        let anti = |x| self.eval_unchecked(j - 1, x);
        let mut pts = vec![0.0];
        pts.extend(roots);
        pts.push(1.0);
        pts.windows(2).map(|w| (anti(w[1]) - anti(w[0])).abs()).sum()
    }

    fn compute_sup(&self, j: usize) -> f64 {
        let f = |x| self.eval_unchecked(j, x).abs();
        let mut best = f(0.0).max(f(1.0));
        for x in self.interior_roots(j + 1) {
            best = best.max(f(x));
        }
        // Grid safeguard against missed even-multiplicity critical points.
        for i in 0..=2048 {
            best = best.max(f(i as f64 / 2048.0));
        }
        best
    }

    /// One draw from `ρ` by rejection from the uniform envelope.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64, DensityError> {
        let env = self.sup[0];
        for _ in 0..REJECTION_CAP {
            let x: f64 = rng.random();
            let u: f64 = rng.random();
            if u * env < self.value(x) {
                return Ok(x);
            }
        }
        Err(DensityError::RejectionCap)
    }

    /// Sampler for the normalised magnitude `|ρ^(j)| / ‖ρ^(j)‖₁`.
    pub fn tilted(&self, j: usize) -> Result<TiltedSampler<'_>, DensityError> {
        if j == 0 {
            return Err(DensityError::ZeroTiltOrder);
        }
        self.check(j, self.p as usize)?;
        Ok(TiltedSampler {
            density: self,
            order: j,
            weight: self.l1[j],
            envelope: self.sup[j],
        })
    }

    /// One tilted draw; `sign * weight * f(value)` is unbiased for `∫ f ρ^(j)`.
    pub fn sample_tilted<R: Rng + ?Sized>(
        &self,
        j: usize,
        rng: &mut R,
    ) -> Result<TiltedDraw, DensityError> {
        self.tilted(j)?.sample(rng)
    }

    /// CSV table `x,rho_0,...,rho_k` of the derivatives on a uniform grid
    /// over `[0, 1]` with `points` nodes.
    pub fn derivative_table_csv(&self, max_order: usize, points: usize) -> Result<String, DensityError> {
        self.check(max_order, self.p as usize)?;
        let mut out = String::from("x");
        for j in 0..=max_order {
            out.push_str(&format!(",rho_{j}"));
        }
        out.push('\n');
        let points = points.max(2);
        for i in 0..points {
            let x = i as f64 / (points - 1) as f64;
            out.push_str(&format!("{x:.16e}"));
            for j in 0..=max_order {
                out.push_str(&format!(",{:.16e}", self.eval_unchecked(j, x)));
            }
            out.push('\n');
        }
        Ok(out)
    }
}

/// Result of a tilted draw.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TiltedDraw {
    pub value: f64,
    pub sign: f64,
    pub weight: f64,
}

/// Rejection sampler for `|ρ^(j)| / ‖ρ^(j)‖₁`.
#[derive(Clone, Copy, Debug)]
pub struct TiltedSampler<'a> {
    density: &'a SingleSiteDensity,
    order: usize,
    weight: f64,
    envelope: f64,
}

impl TiltedSampler<'_> {
    pub fn order(&self) -> usize {
        self.order
    }

    /// `‖ρ^(j)‖₁`.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Normalised tilted density at `x`.
    pub fn density(&self, x: f64) -> f64 {
        self.density.eval_unchecked(self.order, x).abs() / self.weight
    }

    pub fn sign(&self, x: f64) -> f64 {
        let v = self.density.eval_unchecked(self.order, x);
        if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TiltedDraw, DensityError> {
        for _ in 0..REJECTION_CAP {
            let x: f64 = rng.random();
            let u: f64 = rng.random();
            let v = self.density.eval_unchecked(self.order, x);
            if u * self.envelope < v.abs() {
                return Ok(TiltedDraw {
                    value: x,
                    sign: v.signum(),
                    weight: self.weight,
                });
            }
        }
        Err(DensityError::RejectionCap)
    }
}

/// Per-site single-site densities: a shared default with optional overrides.
#[derive(Clone, Debug, PartialEq)]
pub struct Disorder {
    base: SingleSiteDensity,
    overrides: Vec<(usize, SingleSiteDensity)>,
}

impl Disorder {
    /// Identically distributed sites.
    pub fn iid(density: SingleSiteDensity) -> Self {
        Self {
            base: density,
            overrides: Vec::new(),
        }
    }

    /// Replaces the density of block `site`.
    pub fn with_site(mut self, site: usize, density: SingleSiteDensity) -> Self {
        self.overrides.retain(|(s, _)| *s != site);
        self.overrides.push((site, density));
        self
    }

    pub fn density(&self, site: usize) -> &SingleSiteDensity {
        self.overrides
            .iter()
            .find(|(s, _)| *s == site)
            .map(|(_, d)| d)
            .unwrap_or(&self.base)
    }

    /// Smallest smoothness order among the first `volume` sites.
    pub fn smoothness(&self, volume: usize) -> usize {
        (0..volume).map(|n| self.density(n).smoothness()).min().unwrap_or(usize::MAX)
    }

    /// Smallest bump order among the first `volume` sites.
    pub fn min_order(&self, volume: usize) -> u32 {
        (0..volume).map(|n| self.density(n).order()).min().unwrap_or(u32::MAX)
    }

    /// Draws `ω_0, …, ω_{volume-1}` in site order.
    pub fn draw<R: Rng + ?Sized>(&self, volume: usize, rng: &mut R) -> Result<Vec<f64>, DensityError> {
        (0..volume).map(|n| self.density(n).sample(rng)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::GaussLegendre;
    use crate::rng::sample_rng;

    #[test]
    fn p1_center_value() {
        let d = SingleSiteDensity::new(1).unwrap();
        assert!((d.eval(0, 0.5).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn zero_outside_support() {
        for p in 1..=5 {
            let d = SingleSiteDensity::new(p).unwrap();
            for j in 0..=p as usize {
                assert_eq!(d.eval(j, -0.3).unwrap(), 0.0);
                assert_eq!(d.eval(j, 1.7).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn symmetric_bump_has_flat_center() {
        let d = SingleSiteDensity::new(3).unwrap();
        assert!(d.eval(1, 0.5).unwrap().abs() < 1e-12);
    }

    #[test]
    fn rejects_excess_derivative_order() {
        let d = SingleSiteDensity::new(2).unwrap();
        assert_eq!(d.eval(3, 0.5), Err(DensityError::OrderTooHigh { order: 3, max: 2 }));
        assert!(SingleSiteDensity::new(0).is_err());
        assert!(d.tilted(0).is_err());
    }

    #[test]
    fn l1_norms() {
        let d1 = SingleSiteDensity::new(1).unwrap();
        assert_eq!(d1.l1_norm_of_derivative(0).unwrap(), 1.0);
        assert!((d1.l1_norm_of_derivative(1).unwrap() - 3.0).abs() < 1e-12);

        // quadrature oracle for p = 2, j = 1
        let d2 = SingleSiteDensity::new(2).unwrap();
        let rule = GaussLegendre::new(40);
        let r = d2.interior_roots(1);
        assert_eq!(r.len(), 1);
        let oracle = rule.integrate(0.0, 0.5, |x| d2.eval_unchecked(1, x).abs())
            + rule.integrate(0.5, 1.0, |x| d2.eval_unchecked(1, x).abs());
        assert!((d2.l1_norm_of_derivative(1).unwrap() - oracle).abs() < 1e-8);
    }

    #[test]
    fn derivative_root_counts_follow_rolle() {
        // x^p (1-x)^p has roots of order p at both ends, so its j-th
        // derivative has exactly j simple interior roots for j <= p.
        for p in 1..=MAX_ORDER {
            let d = SingleSiteDensity::new(p).unwrap();
            for j in 1..=p as usize {
                let r = d.interior_roots(j);
                assert_eq!(r.len(), j, "p = {p}, j = {j}: {r:?}");
                for (a, b) in r.iter().zip(r.iter().rev()) {
                    assert!((a + b - 1.0).abs() < 1e-9, "roots are symmetric about 1/2");
                }
            }
        }
    }

    #[test]
    fn derivative_integrals_are_kronecker() {
        let rule = GaussLegendre::new(10_000);
        for p in 1..=6 {
            let d = SingleSiteDensity::new(p).unwrap();
            for j in 0..=d.smoothness() {
                let v = rule.integrate(0.0, 1.0, |x| d.eval_unchecked(j, x));
                let expect = if j == 0 { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-10, "p={p} j={j} v={v}");
            }
        }
    }

    #[test]
    fn derivatives_vanish_at_the_edges() {
        for p in 1..=6 {
            let d = SingleSiteDensity::new(p).unwrap();
            for j in 0..=d.smoothness() {
                assert!(d.derivs[j].eval(0.0).abs() < 1e-12);
                assert!(d.derivs[j].eval(1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sup_constant_matches_grid() {
        let d = SingleSiteDensity::new(3).unwrap();
        let mut grid_max: f64 = 0.0;
        for j in 0..=d.smoothness() {
            for i in 0..=100_000 {
                grid_max = grid_max.max(d.eval_unchecked(j, i as f64 / 1e5).abs());
            }
        }
        assert!((d.sup_constant() - grid_max).abs() < 1e-6 * grid_max);
    }

    #[test]
    fn lipschitz_certificate_is_stable() {
        let d = SingleSiteDensity::new(3).unwrap();
        let m = d.smoothness();
        let quotient = |n: usize| {
            let h = 1.0 / n as f64;
            (0..n)
                .map(|i| {
                    let x = i as f64 * h;
                    ((d.eval_unchecked(m, x + h) - d.eval_unchecked(m, x)) / h).abs()
                })
                .fold(0.0, f64::max)
        };
        let a = quotient(1000);
        let b = quotient(4000);
        assert!(a.is_finite() && b.is_finite());
        assert!((a - b).abs() < 1e-2 * b);
    }

    #[test]
    fn fisher_information_finite_for_p2() {
        let d = SingleSiteDensity::new(2).unwrap();
        let i = d.fisher_information().unwrap();
        // ∫ score² ρ against ∫ ρ'²/ρ on a fixed rule
        let rule = GaussLegendre::new(200);
        let alt = rule.integrate(0.0, 1.0, |x| {
            let v = d.eval_unchecked(1, x);
            let r = d.value(x);
            if r > 0.0 { v * v / r } else { 0.0 }
        });
        assert!((i - alt).abs() < 1e-8 * i);
        assert!(SingleSiteDensity::new(1).unwrap().fisher_information().is_none());
    }

    #[test]
    fn sample_mean_is_half() {
        let d = SingleSiteDensity::new(2).unwrap();
        let mut rng = sample_rng(11, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        // Var of Beta(3,3) = 1/28
        let se = (1.0 / 28.0 / n as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * se, "mean={mean}");
        assert!(xs.iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn tilted_draws_reproduce_derivative_integrals() {
        let d = SingleSiteDensity::new(2).unwrap();
        let rule = GaussLegendre::new(40);
        let mut rng = sample_rng(5, 1);
        let n = 200_000;
        let draws: Vec<TiltedDraw> = (0..n).map(|_| d.sample_tilted(1, &mut rng).unwrap()).collect();
        for k in 0..3 {
            let f = |x: f64| x.powi(k);
            let oracle = rule.integrate(0.0, 1.0, |x| f(x) * d.eval_unchecked(1, x));
            let vals: Vec<f64> = draws.iter().map(|t| t.sign * t.weight * f(t.value)).collect();
            let mean = vals.iter().sum::<f64>() / n as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            assert!((mean - oracle).abs() < 4.0 * se, "k={k} mean={mean} oracle={oracle}");
        }
        // ∫ x ρ'(x) dx = -1
        let oracle = rule.integrate(0.0, 1.0, |x| x * d.eval_unchecked(1, x));
        assert!((oracle + 1.0).abs() < 1e-13);
    }

    #[test]
    fn tilted_density_is_normalised() {
        let d = SingleSiteDensity::new(4).unwrap();
        for j in 1..=d.smoothness() {
            let t = d.tilted(j).unwrap();
            let r = quad::adaptive(|x| t.density(x), 0.0, 1.0, &[], 1e-13, 1e-13);
            assert!((r.value - 1.0).abs() < 1e-10, "j={j} {}", r.value);
        }
    }

    #[test]
    fn score_matches_ratio() {
        let d = SingleSiteDensity::new(3).unwrap();
        for &x in &[0.1, 0.37, 0.5, 0.81] {
            let r = d.eval_unchecked(1, x) / d.value(x);
            assert!((d.score(x) - r).abs() < 1e-10);
            let c = d.eval_unchecked(2, x) / d.value(x) - r * r;
            assert!((d.log_curvature(x) - c).abs() < 1e-9);
        }
    }

    #[test]
    fn cdf_is_exact() {
        let d = SingleSiteDensity::new(2).unwrap();
        assert!((d.cdf(0.5) - 0.5).abs() < 1e-15);
        assert_eq!(d.cdf(-1.0), 0.0);
        assert_eq!(d.cdf(2.0), 1.0);
    }

    #[test]
    fn derivative_table_has_header_and_rows() {
        let d = SingleSiteDensity::new(2).unwrap();
        let csv = d.derivative_table_csv(1, 5).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x,rho_0,rho_1");
        assert_eq!(lines.len(), 6);
    }
}
