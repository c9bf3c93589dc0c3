use faer::Mat;

use super::map::LinearMap;
use crate::{Error, Result, C64};

/// Global operator in compressed sparse row form.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseHermitianOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
    hermitian: bool,
}

impl SparseHermitianOperator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            col_idx: vec![],
            values: vec![],
            hermitian: true,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: (0..=dim).collect(),
            col_idx: (0..dim).collect(),
            values: vec![C64::new(1.0, 0.0); dim],
            hermitian: true,
        }
    }

    /// Sums duplicate entries and drops exact zeros. The Hermitian flag is
    /// verified on the stored entries (1e-12 relative).
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Result<Self> {
        for &(i, j, _) in &triplets {
            if i >= dim || j >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: i.max(j) + 1,
                });
            }
        }
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut rows: Vec<usize> = Vec::with_capacity(triplets.len());
        for (i, j, v) in triplets {
            if let (Some(&last_i), Some(&last_j)) = (rows.last(), col_idx.last()) {
                if last_i == i && last_j == j {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(i);
            col_idx.push(j);
            values.push(v);
        }
        // drop entries that cancelled exactly
        let keep: Vec<usize> = (0..values.len())
            .filter(|&k| values[k] != C64::new(0.0, 0.0))
            .collect();
        let rows: Vec<usize> = keep.iter().map(|&k| rows[k]).collect();
        let col_idx: Vec<usize> = keep.iter().map(|&k| col_idx[k]).collect();
        let values: Vec<C64> = keep.iter().map(|&k| values[k]).collect();
        for &i in &rows {
            row_ptr[i + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut op = Self {
            dim,
            row_ptr,
            col_idx,
            values,
            hermitian: false,
        };
        op.hermitian = op.hermiticity_defect() <= 1e-12;
        Ok(op)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_hermitian_flag(&self) -> bool {
        self.hermitian
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let row = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        match row.binary_search(&j) {
            Ok(k) => self.values[self.row_ptr[i] + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// max |A_ij - conj(A_ji)| / max |A_ij| over stored entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut scale = 0.0f64;
        let mut dev = 0.0f64;
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                scale = scale.max(v.norm());
                dev = dev.max((v - self.get(j, i).conj()).norm());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            dev / scale
        }
    }

    pub fn to_dense(&self, limit: usize) -> Result<Mat<C64>> {
        if self.dim > limit {
            return Err(Error::TooLarge(format!(
                "dense copy of dimension {} exceeds {limit}",
                self.dim
            )));
        }
        let mut m = Mat::<C64>::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn max_abs_diagonal(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i).norm()).fold(0.0, f64::max)
    }
}

impl LinearMap for SparseHermitianOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_acc(&self, alpha: f64, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi += acc * alpha;
        }
    }

    fn scale_hint(&self) -> f64 {
        self.max_abs_diagonal()
    }

    fn is_hermitian(&self) -> bool {
        self.hermitian
    }
}
