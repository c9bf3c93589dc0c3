//! Lattices, local terms and the global operators built from them.

mod embed;
pub mod file;
mod map;
mod sparse;

use std::fmt;

use faer::Mat;
use serde::{Deserialize, Serialize};

pub use embed::{EmbeddedOperator, Embedding, LocalOp};
pub use map::{
    apply, apply_product, materialize, DenseOperator, Gram, Identity, LinearCombination,
    LinearMap, Product,
};
pub use sparse::SparseHermitianOperator;

use crate::linalg;
use crate::{Error, Result, C64};

/// Lattice coordinates, 1-based on every axis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SiteIndex(pub Vec<usize>);

impl SiteIndex {
    pub fn chain(i: usize) -> Self {
        SiteIndex(vec![i])
    }
}

impl fmt::Display for SiteIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

impl std::str::FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(Boundary::Open),
            "periodic" | "closed" => Ok(Boundary::Periodic),
            other => Err(Error::InvalidParameter(format!("unknown boundary `{other}`"))),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        })
    }
}

/// A Hermitian operator acting on a few sites.
#[derive(Clone, Debug)]
pub struct LocalTerm {
    pub support: Vec<SiteIndex>,
    pub matrix: Mat<C64>,
    pub is_projector: bool,
}

impl PartialEq for LocalTerm {
    fn eq(&self, other: &Self) -> bool {
        self.support == other.support
            && self.is_projector == other.is_projector
            && self.matrix.nrows() == other.matrix.nrows()
            && self.matrix.ncols() == other.matrix.ncols()
            && (0..self.matrix.nrows()).all(|i| {
                (0..self.matrix.ncols()).all(|j| self.matrix[(i, j)] == other.matrix[(i, j)])
            })
    }
}

impl LocalTerm {
    pub fn new(support: Vec<SiteIndex>, matrix: Mat<C64>, is_projector: bool) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                actual: matrix.ncols(),
            });
        }
        for (a, s) in support.iter().enumerate() {
            if support[..a].contains(s) {
                return Err(Error::RepeatedSite);
            }
        }
        let deviation = linalg::hermiticity_defect(matrix.as_ref());
        if deviation > 1e-12 {
            return Err(Error::NotHermitian { deviation });
        }
        if is_projector {
            let sq = linalg::matmul(matrix.as_ref(), matrix.as_ref());
            let norm = linalg::frobenius(matrix.as_ref());
            let deviation = linalg::frobenius((&sq - &matrix).as_ref());
            if deviation > 1e-12 * norm.max(1.0) {
                return Err(Error::NotProjector { deviation });
            }
        }
        Ok(Self {
            support,
            matrix,
            is_projector,
        })
    }

    pub fn projector(support: Vec<SiteIndex>, matrix: Mat<C64>) -> Result<Self> {
        Self::new(support, matrix, true)
    }

    pub fn local_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_zero(&self) -> bool {
        (0..self.matrix.nrows())
            .all(|i| (0..self.matrix.ncols()).all(|j| self.matrix[(i, j)] == C64::new(0.0, 0.0)))
    }
}

/// Axis-aligned box of sites: `lens[a]` consecutive coordinates starting at
/// `starts[a]` (1-based), wrapping on periodic axes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub starts: Vec<usize>,
    pub lens: Vec<usize>,
}

/// `H = sum of local terms` on a hypercubic lattice of qudits.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeHamiltonian {
    axis_lengths: Vec<usize>,
    site_dims: Vec<usize>,
    boundary: Vec<Boundary>,
    terms: Vec<LocalTerm>,
}

impl LatticeHamiltonian {
    /// Empty lattice; `site_dims` is per flat site (row-major, axis 1 slowest).
    pub fn empty(
        axis_lengths: Vec<usize>,
        site_dims: Vec<usize>,
        boundary: Vec<Boundary>,
    ) -> Result<Self> {
        if axis_lengths.is_empty() || axis_lengths.contains(&0) {
            return Err(Error::InvalidParameter(
                "axis lengths must be positive".into(),
            ));
        }
        if boundary.len() != axis_lengths.len() {
            return Err(Error::InvalidParameter(format!(
                "{} boundary flags for {} axes",
                boundary.len(),
                axis_lengths.len()
            )));
        }
        let sites: usize = axis_lengths.iter().product();
        if site_dims.len() != sites {
            return Err(Error::InvalidParameter(format!(
                "{} site dimensions for {sites} sites",
                site_dims.len()
            )));
        }
        if site_dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidParameter("site dimension must be >= 2".into()));
        }
        Ok(Self {
            axis_lengths,
            site_dims,
            boundary,
            terms: vec![],
        })
    }

    pub fn uniform(axis_lengths: Vec<usize>, site_dim: usize, boundary: Vec<Boundary>) -> Result<Self> {
        let sites = axis_lengths.iter().product();
        Self::empty(axis_lengths, vec![site_dim; sites], boundary)
    }

    pub fn new(
        axis_lengths: Vec<usize>,
        site_dims: Vec<usize>,
        boundary: Vec<Boundary>,
        terms: Vec<LocalTerm>,
    ) -> Result<Self> {
        let mut h = Self::empty(axis_lengths, site_dims, boundary)?;
        for t in terms {
            h.push_term(t)?;
        }
        Ok(h)
    }

    pub fn push_term(&mut self, term: LocalTerm) -> Result<()> {
        let mut expected = 1usize;
        for s in &term.support {
            expected *= self.site_dims[self.flat_index(s)?];
        }
        if expected != term.local_dim() {
            return Err(Error::DimensionMismatch {
                expected,
                actual: term.local_dim(),
            });
        }
        self.terms.push(term);
        Ok(())
    }

    pub fn axis_lengths(&self) -> &[usize] {
        &self.axis_lengths
    }

    pub fn site_dims(&self) -> &[usize] {
        &self.site_dims
    }

    pub fn boundary(&self) -> &[Boundary] {
        &self.boundary
    }

    pub fn terms(&self) -> &[LocalTerm] {
        &self.terms
    }

    pub fn num_axes(&self) -> usize {
        self.axis_lengths.len()
    }

    pub fn num_sites(&self) -> usize {
        self.site_dims.len()
    }

    /// Total Hilbert dimension, or an error if it does not fit in memory indices.
    pub fn dim(&self) -> Result<usize> {
        self.site_dims.iter().try_fold(1usize, |acc, &d| {
            acc.checked_mul(d)
                .ok_or_else(|| Error::TooLarge("Hilbert dimension overflows usize".into()))
        })
    }

    pub fn flat_index(&self, site: &SiteIndex) -> Result<usize> {
        if site.0.len() != self.axis_lengths.len()
            || site
                .0
                .iter()
                .zip(&self.axis_lengths)
                .any(|(&c, &n)| c == 0 || c > n)
        {
            return Err(Error::SiteOutOfRange {
                site: site.0.clone(),
                axis_lengths: self.axis_lengths.clone(),
            });
        }
        Ok(site
            .0
            .iter()
            .zip(&self.axis_lengths)
            .fold(0, |acc, (&c, &n)| acc * n + (c - 1)))
    }

    pub fn site(&self, flat: usize) -> SiteIndex {
        let mut coords = vec![0; self.axis_lengths.len()];
        let mut rem = flat;
        for a in (0..self.axis_lengths.len()).rev() {
            coords[a] = rem % self.axis_lengths[a] + 1;
            rem /= self.axis_lengths[a];
        }
        SiteIndex(coords)
    }

    /// Resolves possibly out-of-range coordinates: periodic axes wrap
    /// (index n+k is index k), open axes return `None`.
    pub fn wrap(&self, coords: &[isize]) -> Option<SiteIndex> {
        let mut out = Vec::with_capacity(coords.len());
        for (a, &c) in coords.iter().enumerate() {
            let n = self.axis_lengths[a] as isize;
            let v = match self.boundary[a] {
                Boundary::Periodic => (c - 1).rem_euclid(n) + 1,
                Boundary::Open => {
                    if c < 1 || c > n {
                        return None;
                    }
                    c
                }
            };
            out.push(v as usize);
        }
        Some(SiteIndex(out))
    }

    pub fn term_support_flat(&self, k: usize) -> Vec<usize> {
        self.terms[k]
            .support
            .iter()
            .map(|s| self.flat_index(s).expect("validated on insertion"))
            .collect()
    }

    /// Matrix-free embedding of term `k` (or of `1 - P_k` when `complement`).
    pub fn embedded_term(&self, k: usize, complement: bool) -> Result<EmbeddedOperator> {
        let emb = Embedding::new(&self.site_dims, &self.term_support_flat(k))?;
        let term = &self.terms[k];
        let op = if term.is_projector {
            LocalOp::projector(&term.matrix)?
        } else {
            LocalOp::Dense(term.matrix.clone())
        };
        EmbeddedOperator::new(emb, op, complement)
    }

    pub fn embedded_terms(&self) -> Result<Vec<EmbeddedOperator>> {
        (0..self.terms.len())
            .map(|k| self.embedded_term(k, false))
            .collect()
    }

    /// Flat sites of a box region, in the region's own row-major order.
    pub fn region_sites(&self, region: &Region) -> Result<Vec<usize>> {
        self.check_region(region)?;
        let total: usize = region.lens.iter().product();
        let mut out = Vec::with_capacity(total);
        for idx in 0..total {
            let mut rem = idx;
            let mut coords = vec![0isize; region.lens.len()];
            for a in (0..region.lens.len()).rev() {
                coords[a] = (region.starts[a] + rem % region.lens[a]) as isize;
                rem /= region.lens[a];
            }
            let site = self.wrap(&coords).ok_or_else(|| {
                Error::InvalidParameter(format!("region {region:?} leaves the open lattice"))
            })?;
            out.push(self.flat_index(&site)?);
        }
        Ok(out)
    }

    fn check_region(&self, region: &Region) -> Result<()> {
        if region.starts.len() != self.num_axes() || region.lens.len() != self.num_axes() {
            return Err(Error::InvalidParameter("region rank differs from lattice".into()));
        }
        for a in 0..self.num_axes() {
            let n = self.axis_lengths[a];
            let (s, l) = (region.starts[a], region.lens[a]);
            if l == 0 || l > n || s == 0 || s > n {
                return Err(Error::InvalidParameter(format!(
                    "region axis {a}: start {s}, length {l} on axis of length {n}"
                )));
            }
            if self.boundary[a] == Boundary::Open && s + l - 1 > n {
                return Err(Error::InvalidParameter(format!(
                    "region axis {a} runs past the open boundary"
                )));
            }
        }
        Ok(())
    }

    /// Sub-lattice on a box region holding every term whose support lies
    /// inside it, plus the indices of those terms in `self`.
    pub fn restrict(&self, region: &Region) -> Result<(LatticeHamiltonian, Vec<usize>)> {
        self.check_region(region)?;
        let sites = self.region_sites(region)?;
        let site_dims = sites.iter().map(|&s| self.site_dims[s]).collect();
        let boundary = (0..self.num_axes())
            .map(|a| {
                if self.boundary[a] == Boundary::Periodic && region.lens[a] == self.axis_lengths[a] {
                    Boundary::Periodic
                } else {
                    Boundary::Open
                }
            })
            .collect();
        let mut sub = LatticeHamiltonian::empty(region.lens.clone(), site_dims, boundary)?;
        let map_site = |s: &SiteIndex| -> Option<SiteIndex> {
            let mut out = Vec::with_capacity(s.0.len());
            for a in 0..s.0.len() {
                let n = self.axis_lengths[a];
                let p = match self.boundary[a] {
                    Boundary::Periodic => (s.0[a] + n - region.starts[a]) % n,
                    Boundary::Open => s.0[a].checked_sub(region.starts[a])?,
                };
                if p >= region.lens[a] {
                    return None;
                }
                out.push(p + 1);
            }
            Some(SiteIndex(out))
        };
        let mut kept = vec![];
        for (k, term) in self.terms.iter().enumerate() {
            let mapped: Option<Vec<SiteIndex>> = term.support.iter().map(map_site).collect();
            if let Some(support) = mapped {
                sub.terms.push(LocalTerm {
                    support,
                    matrix: term.matrix.clone(),
                    is_projector: term.is_projector,
                });
                kept.push(k);
            }
        }
        Ok((sub, kept))
    }

    /// Copy holding only the terms selected by `keep`.
    pub fn filtered(&self, keep: impl Fn(usize, &LocalTerm) -> bool) -> LatticeHamiltonian {
        let mut out = self.clone();
        out.terms = self
            .terms
            .iter()
            .enumerate()
            .filter(|(k, t)| keep(*k, t))
            .map(|(_, t)| t.clone())
            .collect();
        out
    }
}

/// Global sparse matrix of one local term: `M` on its support, identity elsewhere.
pub fn embed_local_term(
    term: &LocalTerm,
    lattice: &LatticeHamiltonian,
) -> Result<SparseHermitianOperator> {
    let support = term
        .support
        .iter()
        .map(|s| lattice.flat_index(s))
        .collect::<Result<Vec<_>>>()?;
    let emb = Embedding::new(lattice.site_dims(), &support)?;
    if emb.local_dim() != term.local_dim() {
        return Err(Error::DimensionMismatch {
            expected: emb.local_dim(),
            actual: term.local_dim(),
        });
    }
    let op = EmbeddedOperator::new(emb, LocalOp::Dense(term.matrix.clone()), false)?;
    let mut triplets = vec![];
    op.push_triplets(&mut triplets);
    SparseHermitianOperator::from_triplets(lattice.dim()?, triplets)
}

/// Sum of the embedded terms accepted by `filter`.
pub fn assemble(
    lattice: &LatticeHamiltonian,
    filter: impl Fn(usize, &LocalTerm) -> bool,
) -> Result<SparseHermitianOperator> {
    let dim = lattice.dim()?;
    let mut triplets = vec![];
    for (k, term) in lattice.terms().iter().enumerate() {
        if !filter(k, term) {
            continue;
        }
        let emb = Embedding::new(lattice.site_dims(), &lattice.term_support_flat(k))?;
        let op = EmbeddedOperator::new(emb, LocalOp::Dense(term.matrix.clone()), false)?;
        op.push_triplets(&mut triplets);
    }
    let mut out = SparseHermitianOperator::from_triplets(dim, triplets)?;
    if !out.is_hermitian_flag() {
        // sums of Hermitian terms are Hermitian up to rounding
        debug_assert!(out.hermiticity_defect() < 1e-10);
        out = SparseHermitianOperator::from_triplets(dim, {
            let mut t = vec![];
            for i in 0..dim {
                for (j, v) in out.row(i) {
                    t.push((i, j, v));
                }
            }
            t
        })?;
    }
    Ok(out)
}

/// Full Hamiltonian.
pub fn assemble_all(lattice: &LatticeHamiltonian) -> Result<SparseHermitianOperator> {
    assemble(lattice, |_, _| true)
}
