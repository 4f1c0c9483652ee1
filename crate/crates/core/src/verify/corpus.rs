// Copyright 2026 The smoothdos Authors
// SPDX-License-Identifier: Apache-2.0

//! Deterministic random matrix corpora.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::sample_rng;
use crate::spectral::{hermitian_part, spectral_norm};
use crate::{CMatrix, C64};

/// Structure of the generated matrices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Kind {
    Hermitian,
    /// `A = H + i(Q + floor·I)` with `Q ⪰ 0`, `‖Q‖ = 1`.
    Dissipative { im_floor: f64 },
}

/// Seeded family of random instances; instance `i` depends only on
/// `(seed, i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub seed: u64,
    pub min_dim: usize,
    pub max_dim: usize,
    pub count: usize,
    pub kind: Kind,
}

/// One generated instance.
#[derive(Clone, Debug)]
pub struct Instance {
    pub index: usize,
    pub dim: usize,
    /// Main matrix.
    pub a: CMatrix,
    /// Independent matrix of the same kind.
    pub b: CMatrix,
    /// Hermitian perturbation direction with `‖C‖ = 1`.
    pub c: CMatrix,
    /// Positive semidefinite weights with unit norm.
    pub f1: CMatrix,
    pub f2: CMatrix,
}

impl Instance {
    /// `A + δC`.
    pub fn perturbed(&self, delta: f64) -> CMatrix {
        &self.a + &self.c * C64::new(delta, 0.0)
    }
}

fn gaussian<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    let s = (2.0 * n as f64).sqrt().recip();
    CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    })
}

fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    hermitian_part(&gaussian(rng, n)) * C64::new(2.0, 0.0)
}

fn random_psd<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    let m = gaussian(rng, n);
    let q = hermitian_part(&(&m * m.adjoint()));
    let norm = spectral_norm(&q);
    if norm > 0.0 {
        q * C64::new(norm.recip(), 0.0)
    } else {
        q
    }
}

impl Corpus {
    pub fn hermitian(seed: u64, min_dim: usize, max_dim: usize, count: usize) -> Self {
        Self { seed, min_dim, max_dim, count, kind: Kind::Hermitian }
    }

    pub fn dissipative(seed: u64, min_dim: usize, max_dim: usize, count: usize, im_floor: f64) -> Self {
        Self { seed, min_dim, max_dim, count, kind: Kind::Dissipative { im_floor } }
    }

    /// Same corpus with `count` instances; the first instances are shared.
    pub fn with_count(&self, count: usize) -> Self {
        Self { count, ..self.clone() }
    }

    fn structured<R: Rng>(&self, rng: &mut R, n: usize) -> CMatrix {
        let h = random_hermitian(rng, n);
        match self.kind {
            Kind::Hermitian => h,
            Kind::Dissipative { im_floor } => {
                let q = random_psd(rng, n) + CMatrix::identity(n, n) * C64::new(im_floor, 0.0);
                h + q * C64::new(0.0, 1.0)
            }
        }
    }

    pub fn instance(&self, index: usize) -> Instance {
        let mut rng = sample_rng(self.seed, index as u64);
        let lo = self.min_dim.max(1);
        let hi = self.max_dim.max(lo);
        let dim = rng.random_range(lo..=hi);
        let a = self.structured(&mut rng, dim);
        let b = self.structured(&mut rng, dim);
        let c = random_hermitian(&mut rng, dim);
        let cn = spectral_norm(&c).max(f64::MIN_POSITIVE);
        let c = c * C64::new(cn.recip(), 0.0);
        let f1 = random_psd(&mut rng, dim);
        let f2 = random_psd(&mut rng, dim);
        Instance { index, dim, a, b, c, f1, f2 }
    }

    pub fn instances(&self) -> impl Iterator<Item = Instance> + '_ {
        (0..self.count).map(|i| self.instance(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{imaginary_part, min_hermitian_eigenvalue};

    #[test]
    fn hermitian_instances_are_exactly_hermitian() {
        let c = Corpus::hermitian(3, 2, 6, 20);
        for inst in c.instances() {
            assert_eq!(inst.a, inst.a.adjoint());
            assert_eq!(inst.c, inst.c.adjoint());
            assert!((spectral_norm(&inst.c) - 1.0).abs() < 1e-12);
            assert!(min_hermitian_eigenvalue(&inst.f1).unwrap() >= -1e-12);
            assert!((2..=6).contains(&inst.dim));
        }
    }

    #[test]
    fn dissipative_instances_respect_the_floor() {
        let c = Corpus::dissipative(5, 1, 8, 30, 0.5);
        for inst in c.instances() {
            let im = imaginary_part(&inst.a);
            assert!((&im - im.adjoint()).iter().all(|v| v.norm() < 1e-15));
            assert!(min_hermitian_eigenvalue(&im).unwrap() >= 0.5 - 1e-12);
        }
    }

    #[test]
    fn generation_is_deterministic_and_prefix_stable() {
        let c = Corpus::dissipative(9, 2, 5, 10, 0.0);
        let d = c.with_count(20);
        for i in 0..10 {
            assert_eq!(c.instance(i).a, d.instance(i).a);
        }
        assert_ne!(c.instance(0).a, c.instance(1).a);
    }
}
