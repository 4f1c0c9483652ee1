// Copyright 2026 The smoothdos Authors
// SPDX-License-Identifier: Apache-2.0

//! Site spaces, enumerations and finite-volume Hamiltonians.
//!
//! A [`SiteSpace`] fixes an enumeration `x_0, x_1, …` in which every new site
//! lies at distance one from the sites already listed; the volume `Λ_N` is the
//! prefix `{x_0, …, x_N}`. Each site carries a block of coordinates (the range
//! of `P_n`), laid out contiguously in enumeration order, so restricting to a
//! prefix volume is taking a leading principal block.

use std::collections::{HashMap, VecDeque};
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::{hermitian_eigen, HermitianMatrix, SolverError};
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("graph must be non-empty and connected")]
    DisconnectedGraph,
    #[error("enumeration violates d(Λ_N, x_(N+1)) = 1 at N = {0}")]
    EnumerationGap(usize),
    #[error("projection family has {blocks} blocks but the site space has {sites} sites")]
    BlockCountMismatch { blocks: usize, sites: usize },
    #[error("every projection block needs rank >= 1 (block {0})")]
    ZeroRank(usize),
    #[error("free operator acts on dimension {free} but the projections span {proj}")]
    DimensionMismatch { free: usize, proj: usize },
    #[error("coupling must be positive and finite, got {0}")]
    InvalidCoupling(f64),
    #[error("hopping entry ({0}, {1}) is out of range or on the diagonal")]
    InvalidHopping(usize, usize),
    #[error("disorder vector has {got} entries, volume has {expected} blocks")]
    DisorderLength { got: usize, expected: usize },
    #[error("volume of {volume} sites exceeds the {sites} available")]
    VolumeTooLarge { volume: usize, sites: usize },
    #[error("peierls phases need dimension >= 2")]
    PhaseNeedsPlane,
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
enum Geometry {
    /// Box `{-L..L}^d` with the ℓ∞ metric; coordinates in enumeration order.
    Lattice { dim: usize, half_width: usize, coords: Vec<Vec<i64>> },
    /// General connected graph with BFS distances; experimental.
    Graph { adjacency: Vec<Vec<usize>>, distances: Vec<Vec<u32>> },
}

/// Enumerated site set with its metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteSpace {
    geometry: Geometry,
    growth_exponent: f64,
}

/// Position of `c` in the order 0, 1, -1, 2, -2, …
fn zigzag(c: i64) -> u64 {
    if c > 0 {
        (2 * c - 1) as u64
    } else {
        (-2 * c) as u64
    }
}

fn linf(a: &[i64], b: &[i64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x - y).unsigned_abs() as u32).max().unwrap_or(0)
}

/// Box `{-L, …, L}^d` with ℓ∞ metric and shell-ordered enumeration.
///
/// Sites are sorted by ℓ∞ norm, then lexicographically with each coordinate
/// ranked in the order `0, 1, -1, 2, -2, …`. The distance-one property is
/// checked after construction.
pub fn build_box_enumeration(dim: usize, half_width: usize) -> Result<SiteSpace, ModelError> {
    if dim == 0 {
        return Err(ModelError::ZeroDimension);
    }
    let l = half_width as i64;
    let side = 2 * half_width + 1;
    let total = side.pow(dim as u32);
    let mut coords: Vec<Vec<i64>> = (0..total)
        .map(|mut k| {
            (0..dim)
                .map(|_| {
                    let c = (k % side) as i64 - l;
                    k /= side;
                    c
                })
                .collect::<Vec<i64>>()
        })
        .collect();
    coords.sort_by_key(|c| {
        let shell = c.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0);
        (shell, c.iter().map(|&x| zigzag(x)).collect::<Vec<u64>>())
    });
    let space = SiteSpace {
        geometry: Geometry::Lattice { dim, half_width, coords },
        growth_exponent: 1.0 / dim as f64,
    };
    if let Some(n) = space.first_enumeration_gap() {
        return Err(ModelError::EnumerationGap(n));
    }
    Ok(space)
}

impl SiteSpace {
    /// General connected graph, enumerated in breadth-first order from node
    /// 0. Such spaces are experimental: logarithmic-growth graphs (trees) fall
    /// outside the polynomial growth the estimators are calibrated for.
    pub fn from_graph(adjacency: Vec<Vec<usize>>) -> Result<Self, ModelError> {
        let n = adjacency.len();
        if n == 0 {
            return Err(ModelError::DisconnectedGraph);
        }
        let bfs = |root: usize| {
            let mut dist = vec![u32::MAX; n];
            let mut order = Vec::with_capacity(n);
            dist[root] = 0;
            let mut q = VecDeque::from([root]);
            while let Some(u) = q.pop_front() {
                order.push(u);
                for &v in &adjacency[u] {
                    if v < n && dist[v] == u32::MAX {
                        dist[v] = dist[u] + 1;
                        q.push_back(v);
                    }
                }
            }
            (dist, order)
        };
        let (_, order) = bfs(0);
        if order.len() != n {
            return Err(ModelError::DisconnectedGraph);
        }
        // relabel nodes by BFS order
        let mut label = vec![0usize; n];
        for (k, &u) in order.iter().enumerate() {
            label[u] = k;
        }
        let mut relabeled = vec![Vec::new(); n];
        for (u, nbrs) in adjacency.iter().enumerate() {
            for &v in nbrs {
                if v < n && v != u {
                    relabeled[label[u]].push(label[v]);
                    relabeled[label[v]].push(label[u]);
                }
            }
        }
        for nbrs in relabeled.iter_mut() {
            nbrs.sort_unstable();
            nbrs.dedup();
        }
        let adjacency = relabeled;
        let distances: Vec<Vec<u32>> = {
            let bfs2 = |root: usize| {
                let mut dist = vec![u32::MAX; n];
                dist[root] = 0;
                let mut q = VecDeque::from([root]);
                while let Some(u) = q.pop_front() {
                    for &v in &adjacency[u] {
                        if dist[v] == u32::MAX {
                            dist[v] = dist[u] + 1;
                            q.push_back(v);
                        }
                    }
                }
                dist
            };
            (0..n).map(bfs2).collect()
        };
        let space = SiteSpace {
            geometry: Geometry::Graph { adjacency, distances },
            growth_exponent: 0.0,
        };
        if let Some(k) = space.first_enumeration_gap() {
            return Err(ModelError::EnumerationGap(k));
        }
        Ok(space)
    }

    /// Rooted tree where every node has `branching` children, to `depth`
    /// generations. Experimental.
    pub fn tree(branching: usize, depth: usize) -> Result<Self, ModelError> {
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new()];
        let mut frontier = vec![0usize];
        for _ in 0..depth {
            let mut next = Vec::new();
            for &p in &frontier {
                for _ in 0..branching {
                    let c = adjacency.len();
                    adjacency.push(vec![p]);
                    adjacency[p].push(c);
                    next.push(c);
                }
            }
            frontier = next;
        }
        Self::from_graph(adjacency)
    }

    pub fn len(&self) -> usize {
        match &self.geometry {
            Geometry::Lattice { coords, .. } => coords.len(),
            Geometry::Graph { adjacency, .. } => adjacency.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Declared growth exponent `α` (`1/d` for boxes, 0 for general graphs).
    pub fn growth_exponent(&self) -> f64 {
        self.growth_exponent
    }

    /// True for general graphs, which carry no acceptance claims.
    pub fn is_experimental(&self) -> bool {
        matches!(self.geometry, Geometry::Graph { .. })
    }

    /// Lattice dimension, if this is a box.
    pub fn lattice_dim(&self) -> Option<usize> {
        match &self.geometry {
            Geometry::Lattice { dim, .. } => Some(*dim),
            Geometry::Graph { .. } => None,
        }
    }

    pub fn half_width(&self) -> Option<usize> {
        match &self.geometry {
            Geometry::Lattice { half_width, .. } => Some(*half_width),
            Geometry::Graph { .. } => None,
        }
    }

    /// Coordinates of site `n` for boxes.
    pub fn coords(&self, n: usize) -> Option<&[i64]> {
        match &self.geometry {
            Geometry::Lattice { coords, .. } => coords.get(n).map(|c| c.as_slice()),
            Geometry::Graph { .. } => None,
        }
    }

    /// Enumeration index of a lattice point.
    pub fn index_of(&self, point: &[i64]) -> Option<usize> {
        match &self.geometry {
            Geometry::Lattice { coords, .. } => coords.iter().position(|c| c.as_slice() == point),
            Geometry::Graph { .. } => None,
        }
    }

    /// Metric between sites `a` and `b` (enumeration indices).
    pub fn distance(&self, a: usize, b: usize) -> u32 {
        match &self.geometry {
            Geometry::Lattice { coords, .. } => linf(&coords[a], &coords[b]),
            Geometry::Graph { distances, .. } => distances[a][b],
        }
    }

    /// Pairs of sites joined by a nearest-neighbour bond: lattice points
    /// differing by one in a single coordinate, or graph edges. Returned as
    /// `(a, b, axis)` with `a < b`; `axis` is `None` for graphs.
    pub fn bonds(&self) -> Vec<(usize, usize, Option<usize>)> {
        match &self.geometry {
            Geometry::Lattice { dim, coords, .. } => {
                let index: HashMap<&[i64], usize> =
                    coords.iter().enumerate().map(|(k, c)| (c.as_slice(), k)).collect();
                let mut out = Vec::new();
                for (a, c) in coords.iter().enumerate() {
                    for axis in 0..*dim {
                        let mut nb = c.clone();
                        nb[axis] += 1;
                        if let Some(&b) = index.get(nb.as_slice()) {
                            out.push((a.min(b), a.max(b), Some(axis)));
                        }
                    }
                }
                out.sort_unstable();
                out
            }
            Geometry::Graph { adjacency, .. } => {
                let mut out = Vec::new();
                for (a, nbrs) in adjacency.iter().enumerate() {
                    for &b in nbrs {
                        if a < b {
                            out.push((a, b, None));
                        }
                    }
                }
                out
            }
        }
    }

    /// First `N` with `d(Λ_N, x_{N+1}) ≠ 1`, if any.
    fn first_enumeration_gap(&self) -> Option<usize> {
        match &self.geometry {
            Geometry::Lattice { dim, coords, .. } => {
                let index: HashMap<&[i64], usize> =
                    coords.iter().enumerate().map(|(k, c)| (c.as_slice(), k)).collect();
                let offsets: Vec<Vec<i64>> = (0..3usize.pow(*dim as u32))
                    .map(|mut k| {
                        (0..*dim)
                            .map(|_| {
                                let o = (k % 3) as i64 - 1;
                                k /= 3;
                                o
                            })
                            .collect()
                    })
                    .filter(|o: &Vec<i64>| o.iter().any(|&x| x != 0))
                    .collect();
                (1..coords.len()).find_map(|n| {
                    let c = &coords[n];
                    let ok = offsets.iter().any(|o| {
                        let nb: Vec<i64> = c.iter().zip(o).map(|(a, b)| a + b).collect();
                        index.get(nb.as_slice()).is_some_and(|&k| k < n)
                    });
                    (!ok).then_some(n - 1)
                })
            }
            Geometry::Graph { adjacency, .. } => (1..adjacency.len())
                .find(|&n| !adjacency[n].iter().any(|&k| k < n))
                .map(|n| n - 1),
        }
    }

    /// `d(Λ_N, x_{N+1})` for every `N`, computed pairwise.
    pub fn enumeration_steps(&self) -> Vec<u32> {
        (1..self.len())
            .map(|n| (0..n).map(|k| self.distance(k, n)).min().unwrap_or(0))
            .collect()
    }

    /// Empirical growth constant `min_N d(x_0, G \ Λ_N) / N^α` over the built
    /// range `1 ≤ N < |sites| - 1`; `None` when the exponent is undeclared.
    ///
    /// Enumeration is shell-ordered, so the nearest site outside `Λ_N` is
    /// `x_{N+1}`.
    pub fn growth_constant(&self) -> Option<f64> {
        if self.growth_exponent <= 0.0 || self.len() < 3 {
            return None;
        }
        (1..self.len() - 1)
            .map(|n| self.distance(0, n + 1) as f64 / (n as f64).powf(self.growth_exponent))
            .reduce(f64::min)
    }
}

/// Orthogonal projections onto contiguous coordinate blocks, one per site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionFamily {
    offsets: Vec<usize>,
}

impl ProjectionFamily {
    /// `blocks` blocks of equal rank.
    pub fn uniform(blocks: usize, rank: usize) -> Self {
        Self::new(vec![rank; blocks]).expect("uniform ranks")
    }

    pub fn new(ranks: Vec<usize>) -> Result<Self, ModelError> {
        if let Some(k) = ranks.iter().position(|&r| r == 0) {
            return Err(ModelError::ZeroRank(k));
        }
        let mut offsets = Vec::with_capacity(ranks.len() + 1);
        offsets.push(0);
        for r in ranks {
            offsets.push(offsets.last().unwrap() + r);
        }
        Ok(Self { offsets })
    }

    /// Number of blocks.
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rank(&self, block: usize) -> usize {
        self.offsets[block + 1] - self.offsets[block]
    }

    pub fn max_rank(&self) -> usize {
        (0..self.len()).map(|b| self.rank(b)).max().unwrap_or(0)
    }

    /// Coordinates spanned by `P_block`.
    pub fn block_range(&self, block: usize) -> Range<usize> {
        self.offsets[block]..self.offsets[block + 1]
    }

    /// Total dimension.
    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Dimension of the range of `P_Λ` for the first `volume` blocks.
    pub fn prefix_dim(&self, volume: usize) -> usize {
        self.offsets[volume]
    }

    /// Block containing coordinate `i`.
    pub fn block_of(&self, i: usize) -> usize {
        self.offsets.partition_point(|&o| o <= i) - 1
    }
}

/// The free operator `h_0`: real diagonal plus Hermitian hopping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeOperatorSpec {
    matrix: HermitianMatrix,
    range: u32,
}

impl FreeOperatorSpec {
    /// `h_0 = 0`.
    pub fn zero(projections: &ProjectionFamily) -> Self {
        Self {
            matrix: HermitianMatrix::diagonal_matrix(vec![0.0; projections.dim()]),
            range: 0,
        }
    }

    /// Nearest-neighbour hopping with amplitude `hopping` between equal
    /// orbitals of adjacent sites. In dimension ≥ 2, bonds along axis 1 pick
    /// up the Landau-gauge Peierls phase `e^{i·flux·x_0}` (flux per plaquette).
    pub fn nearest_neighbor(
        space: &SiteSpace,
        projections: &ProjectionFamily,
        hopping: f64,
        flux: f64,
    ) -> Result<Self, ModelError> {
        if projections.len() != space.len() {
            return Err(ModelError::BlockCountMismatch { blocks: projections.len(), sites: space.len() });
        }
        if flux != 0.0 && space.lattice_dim().is_none_or(|d| d < 2) {
            return Err(ModelError::PhaseNeedsPlane);
        }
        let mut entries = Vec::new();
        for (a, b, axis) in space.bonds() {
            let phase = match (axis, space.coords(a)) {
                (Some(1), Some(c)) if flux != 0.0 => C64::from_polar(1.0, flux * c[0] as f64),
                _ => C64::new(1.0, 0.0),
            };
            // orient the phase from the lower to the upper coordinate along axis 1
            let amp = match (axis, space.coords(a), space.coords(b)) {
                (Some(1), Some(ca), Some(cb)) if ca[1] > cb[1] => phase.conj() * hopping,
                _ => phase * hopping,
            };
            let ra = projections.block_range(a);
            let rb = projections.block_range(b);
            for (i, j) in ra.zip(rb) {
                entries.push((i, j, amp));
            }
        }
        Ok(Self {
            matrix: HermitianMatrix::new(vec![0.0; projections.dim()], entries),
            range: if hopping == 0.0 { 0 } else { 1 },
        })
    }

    /// Arbitrary Hermitian `h_0` from a diagonal and `(i, j, amplitude)`
    /// entries meaning `h_0[i][j] = amplitude`, `h_0[j][i] = conj(amplitude)`.
    pub fn from_entries(
        space: &SiteSpace,
        projections: &ProjectionFamily,
        diagonal: Vec<f64>,
        hopping: Vec<(usize, usize, C64)>,
    ) -> Result<Self, ModelError> {
        let dim = projections.dim();
        if diagonal.len() != dim {
            return Err(ModelError::DimensionMismatch { free: diagonal.len(), proj: dim });
        }
        if let Some(&(i, j, _)) = hopping.iter().find(|&&(i, j, _)| i >= dim || j >= dim || i == j) {
            return Err(ModelError::InvalidHopping(i, j));
        }
        let range = hopping
            .iter()
            .map(|&(i, j, _)| space.distance(projections.block_of(i), projections.block_of(j)))
            .max()
            .unwrap_or(0);
        Ok(Self { matrix: HermitianMatrix::new(diagonal, hopping), range })
    }

    /// Copy with every hopping entry touching block `block` removed.
    pub fn without_couplings_to(&self, projections: &ProjectionFamily, block: usize) -> Self {
        let r = projections.block_range(block);
        let entries: Vec<(usize, usize, C64)> = self
            .matrix
            .upper_entries()
            .iter()
            .copied()
            .filter(|&(i, j, _)| !r.contains(&i) && !r.contains(&j))
            .collect();
        Self {
            matrix: HermitianMatrix::new(self.matrix.diagonal().to_vec(), entries),
            range: self.range,
        }
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Maximum metric distance spanned by a hopping entry.
    pub fn range(&self) -> u32 {
        self.range
    }

    /// Max-row-sum bound on `‖h_0‖`.
    pub fn norm_bound(&self) -> f64 {
        self.matrix.row_sum_bound()
    }
}

/// `h^ω = h_0 + λ Σ_n ω_n P_n` on an enumerated site space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    space: SiteSpace,
    projections: ProjectionFamily,
    free: FreeOperatorSpec,
    coupling: f64,
}

impl ModelSpec {
    pub fn new(
        space: SiteSpace,
        projections: ProjectionFamily,
        free: FreeOperatorSpec,
        coupling: f64,
    ) -> Result<Self, ModelError> {
        if projections.len() != space.len() {
            return Err(ModelError::BlockCountMismatch { blocks: projections.len(), sites: space.len() });
        }
        if free.dim() != projections.dim() {
            return Err(ModelError::DimensionMismatch { free: free.dim(), proj: projections.dim() });
        }
        if !(coupling > 0.0 && coupling.is_finite()) {
            return Err(ModelError::InvalidCoupling(coupling));
        }
        Ok(Self { space, projections, free, coupling })
    }

    /// Anderson-type model on `{-L..L}^d`: nearest-neighbour hopping, rank-`r`
    /// blocks, coupling `λ`.
    pub fn lattice(
        dim: usize,
        half_width: usize,
        rank: usize,
        hopping: f64,
        flux: f64,
        coupling: f64,
    ) -> Result<Self, ModelError> {
        let space = build_box_enumeration(dim, half_width)?;
        if rank == 0 {
            return Err(ModelError::ZeroRank(0));
        }
        let proj = ProjectionFamily::uniform(space.len(), rank);
        let free = FreeOperatorSpec::nearest_neighbor(&space, &proj, hopping, flux)?;
        Self::new(space, proj, free, coupling)
    }

    pub fn space(&self) -> &SiteSpace {
        &self.space
    }

    pub fn projections(&self) -> &ProjectionFamily {
        &self.projections
    }

    pub fn free(&self) -> &FreeOperatorSpec {
        &self.free
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    /// Number of sites.
    pub fn sites(&self) -> usize {
        self.space.len()
    }

    /// Copy with a different free operator.
    pub fn with_free(&self, free: FreeOperatorSpec) -> Result<Self, ModelError> {
        Self::new(self.space.clone(), self.projections.clone(), free, self.coupling)
    }

    pub fn check_volume(&self, volume: usize) -> Result<(), ModelError> {
        if volume > self.sites() {
            Err(ModelError::VolumeTooLarge { volume, sites: self.sites() })
        } else {
            Ok(())
        }
    }

    /// `P_Λ h_0 P_Λ` for the first `volume` sites.
    pub fn restricted_free(&self, volume: usize) -> Result<HermitianMatrix, ModelError> {
        self.check_volume(volume)?;
        Ok(self.free.matrix.leading_block(self.projections.prefix_dim(volume)))
    }

    /// Diagonal `λ Σ ω_n P_n` for the first `omega.len()` blocks.
    pub fn potential_diagonal(&self, omega: &[f64]) -> Vec<f64> {
        let mut d = vec![0.0; self.projections.prefix_dim(omega.len())];
        for (n, &w) in omega.iter().enumerate() {
            for i in self.projections.block_range(n) {
                d[i] = self.coupling * w;
            }
        }
        d
    }
}

/// `h^ω_Λ = P_Λ (h_0 + λ Σ ω_n P_n) P_Λ` for the prefix volume of `volume`
/// sites.
pub fn assemble_hamiltonian(
    model: &ModelSpec,
    omega: &[f64],
    volume: usize,
) -> Result<HermitianMatrix, ModelError> {
    model.check_volume(volume)?;
    if omega.len() != volume {
        return Err(ModelError::DisorderLength { got: omega.len(), expected: volume });
    }
    let free = model.restricted_free(volume)?;
    Ok(free.with_added_diagonal(&model.potential_diagonal(omega)))
}

/// Smallest and largest eigenvalue of `h^ω_Λ`.
pub fn restriction_spectrum_bounds(
    model: &ModelSpec,
    omega: &[f64],
    volume: usize,
) -> Result<(f64, f64), ModelError> {
    let h = assemble_hamiltonian(model, omega, volume)?;
    let s = hermitian_eigen(&h)?;
    Ok((s.min(), s.max()))
}
