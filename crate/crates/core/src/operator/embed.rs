//! Tensor embedding of local operators into the global Hilbert space.
//!
//! Sites are ordered row-major over coordinates (axis 1 slowest), so the
//! global basis index of a product state is a mixed-radix number whose most
//! significant digit belongs to flat site 0. A local matrix acting on a
//! support `(s_0, s_1, ..)` uses the same convention with `s_0` most
//! significant, irrespective of the sites' global order.

use faer::Mat;

use super::map::LinearMap;
use crate::linalg;
use crate::{Error, Result, C64};

/// Index bookkeeping for one support inside a product space.
#[derive(Clone, Debug)]
pub struct Embedding {
    dim: usize,
    local_dim: usize,
    /// Global offset of every local basis index (all other digits zero).
    offsets: Vec<usize>,
    /// Strides and ranges of the sites outside the support.
    rest_strides: Vec<usize>,
    rest_dims: Vec<usize>,
}

impl Embedding {
    pub fn new(site_dims: &[usize], support: &[usize]) -> Result<Self> {
        let n = site_dims.len();
        let mut seen = vec![false; n];
        for &s in support {
            if s >= n {
                return Err(Error::InvalidParameter(format!(
                    "flat site {s} outside {n} sites"
                )));
            }
            if seen[s] {
                return Err(Error::RepeatedSite);
            }
            seen[s] = true;
        }
        let mut strides = vec![1usize; n];
        let mut dim = 1usize;
        for s in (0..n).rev() {
            strides[s] = dim;
            dim = dim.checked_mul(site_dims[s]).ok_or_else(|| {
                Error::TooLarge("Hilbert dimension overflows usize".into())
            })?;
        }
        let local_dims: Vec<usize> = support.iter().map(|&s| site_dims[s]).collect();
        let local_dim: usize = local_dims.iter().product();
        let mut offsets = Vec::with_capacity(local_dim);
        for l in 0..local_dim {
            let mut rem = l;
            let mut off = 0;
            for j in (0..support.len()).rev() {
                let d = local_dims[j];
                off += (rem % d) * strides[support[j]];
                rem /= d;
            }
            offsets.push(off);
        }
        let mut rest_strides = Vec::new();
        let mut rest_dims = Vec::new();
        for s in 0..n {
            if !seen[s] {
                rest_strides.push(strides[s]);
                rest_dims.push(site_dims[s]);
            }
        }
        Ok(Self {
            dim,
            local_dim,
            offsets,
            rest_strides,
            rest_dims,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Calls `f(base)` for every configuration of the sites outside the support.
    pub fn for_each_base(&self, mut f: impl FnMut(usize)) {
        let k = self.rest_dims.len();
        let mut digits = vec![0usize; k];
        let mut base = 0usize;
        loop {
            f(base);
            // odometer over the complement, least significant last
            let mut j = k;
            loop {
                if j == 0 {
                    return;
                }
                j -= 1;
                digits[j] += 1;
                base += self.rest_strides[j];
                if digits[j] < self.rest_dims[j] {
                    break;
                }
                base -= self.rest_strides[j] * digits[j];
                digits[j] = 0;
            }
        }
    }
}

/// Local operator representation.
#[derive(Clone, Debug)]
pub enum LocalOp {
    Dense(Mat<C64>),
    /// `U U^dagger` for orthonormal columns `U`.
    LowRank(Mat<C64>),
}

impl LocalOp {
    pub fn local_dim(&self) -> usize {
        match self {
            LocalOp::Dense(m) => m.nrows(),
            LocalOp::LowRank(u) => u.nrows(),
        }
    }

    pub fn to_dense(&self) -> Mat<C64> {
        match self {
            LocalOp::Dense(m) => m.clone(),
            LocalOp::LowRank(u) => linalg::projector_from_columns(u.as_ref()),
        }
    }

    /// Picks the cheaper representation of a projector.
    pub fn projector(matrix: &Mat<C64>) -> Result<Self> {
        let e = linalg::eigh(matrix.as_ref())?;
        let m = matrix.nrows();
        let range: Vec<usize> = (0..m).filter(|&k| e.values[k] > 0.5).collect();
        if 2 * range.len() < m {
            let u = Mat::from_fn(m, range.len(), |i, j| e.vectors[(i, range[j])]);
            Ok(LocalOp::LowRank(u))
        } else {
            Ok(LocalOp::Dense(matrix.clone()))
        }
    }

    fn apply(&self, x: &[C64], out: &mut [C64], scratch: &mut Vec<C64>) {
        match self {
            LocalOp::Dense(m) => {
                let n = m.nrows();
                for i in 0..n {
                    let mut acc = C64::new(0.0, 0.0);
                    for j in 0..n {
                        acc += m[(i, j)] * x[j];
                    }
                    out[i] = acc;
                }
            }
            LocalOp::LowRank(u) => {
                let (n, r) = (u.nrows(), u.ncols());
                scratch.clear();
                for c in 0..r {
                    let mut acc = C64::new(0.0, 0.0);
                    for i in 0..n {
                        acc += u[(i, c)].conj() * x[i];
                    }
                    scratch.push(acc);
                }
                for i in 0..n {
                    let mut acc = C64::new(0.0, 0.0);
                    for c in 0..r {
                        acc += u[(i, c)] * scratch[c];
                    }
                    out[i] = acc;
                }
            }
        }
    }
}

/// A local operator (or its complement `1 - M`) acting on the full space
/// without materializing the global matrix.
#[derive(Clone, Debug)]
pub struct EmbeddedOperator {
    embedding: Embedding,
    op: LocalOp,
    complement: bool,
    scale: f64,
    hermitian: bool,
}

impl EmbeddedOperator {
    pub fn new(embedding: Embedding, op: LocalOp, complement: bool) -> Result<Self> {
        if op.local_dim() != embedding.local_dim() {
            return Err(Error::DimensionMismatch {
                expected: embedding.local_dim(),
                actual: op.local_dim(),
            });
        }
        let dense = op.to_dense();
        let m = dense.nrows();
        let scale = (0..m)
            .map(|i| {
                let d = dense[(i, i)];
                if complement {
                    (C64::new(1.0, 0.0) - d).norm()
                } else {
                    d.norm()
                }
            })
            .fold(0.0, f64::max);
        let hermitian = linalg::hermiticity_defect(dense.as_ref()) <= 1e-12;
        Ok(Self {
            embedding,
            op,
            complement,
            scale,
            hermitian,
        })
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    pub fn local_op(&self) -> &LocalOp {
        &self.op
    }

    pub fn is_complement(&self) -> bool {
        self.complement
    }

    /// The same local operator with the complement flag flipped (`M <-> 1 - M`).
    pub fn complemented(&self) -> Self {
        let mut c = self.clone();
        c.complement = !c.complement;
        c.scale = EmbeddedOperator::new(c.embedding.clone(), c.op.clone(), c.complement)
            .map(|e| e.scale)
            .unwrap_or(1.0);
        c
    }

    /// Effective local matrix, including the complement.
    pub fn effective_local(&self) -> Mat<C64> {
        let mut m = self.op.to_dense();
        if self.complement {
            let n = m.nrows();
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] = -m[(i, j)];
                }
                m[(i, i)] += C64::new(1.0, 0.0);
            }
        }
        m
    }

    /// Appends the global nonzero entries `(row, col, value)`.
    pub fn push_triplets(&self, out: &mut Vec<(usize, usize, C64)>) {
        let m = self.effective_local();
        let offsets = self.embedding.offsets();
        let nz: Vec<(usize, usize, C64)> = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .filter_map(|(i, j)| {
                let v = m[(i, j)];
                (v != C64::new(0.0, 0.0)).then_some((i, j, v))
            })
            .collect();
        self.embedding.for_each_base(|b| {
            for &(i, j, v) in &nz {
                out.push((b + offsets[i], b + offsets[j], v));
            }
        });
    }
}

impl LinearMap for EmbeddedOperator {
    fn dim(&self) -> usize {
        self.embedding.dim()
    }

    fn apply_acc(&self, alpha: f64, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim());
        let offsets = self.embedding.offsets();
        let m = offsets.len();
        let mut xl = linalg::zeros(m);
        let mut yl = linalg::zeros(m);
        let mut scratch = Vec::new();
        let a = C64::new(alpha, 0.0);
        self.embedding.for_each_base(|b| {
            for (l, &o) in offsets.iter().enumerate() {
                xl[l] = x[b + o];
            }
            self.op.apply(&xl, &mut yl, &mut scratch);
            if self.complement {
                for (l, &o) in offsets.iter().enumerate() {
                    y[b + o] += a * (xl[l] - yl[l]);
                }
            } else {
                for (l, &o) in offsets.iter().enumerate() {
                    y[b + o] += a * yl[l];
                }
            }
        });
    }

    fn scale_hint(&self) -> f64 {
        self.scale
    }

    fn is_hermitian(&self) -> bool {
        self.hermitian
    }
}
