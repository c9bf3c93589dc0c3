//! Matrix-free linear maps and their composition.

use faer::Mat;

use crate::linalg;
use crate::{Error, Result, C64};

/// A linear operator on `C^dim` that can be applied to vectors.
///
/// Implementations are immutable after construction, so `apply_acc` may be
/// called concurrently from several threads.
pub trait LinearMap: Send + Sync {
    fn dim(&self) -> usize;

    /// `y <- y + alpha * A x`
    fn apply_acc(&self, alpha: f64, x: &[C64], y: &mut [C64]);

    /// Estimate of the largest diagonal magnitude; tolerances are quoted relative to it.
    fn scale_hint(&self) -> f64;

    fn is_hermitian(&self) -> bool {
        true
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        y.fill(C64::new(0.0, 0.0));
        self.apply_acc(1.0, x, y);
    }

    fn apply_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = linalg::zeros(self.dim());
        self.apply_acc(1.0, x, &mut y);
        y
    }
}

/// Checked single application.
pub fn apply(op: &dyn LinearMap, v: &[C64]) -> Result<Vec<C64>> {
    if v.len() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            actual: v.len(),
        });
    }
    Ok(op.apply_vec(v))
}

/// Applies `ops[0] * ops[1] * ... * ops[k-1]` to `v`, rightmost factor first.
/// The product matrix is never formed.
pub fn apply_product(ops: &[&dyn LinearMap], v: &[C64]) -> Result<Vec<C64>> {
    for op in ops {
        if op.dim() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: op.dim(),
                actual: v.len(),
            });
        }
    }
    let mut cur = v.to_vec();
    let mut next = linalg::zeros(v.len());
    for op in ops.iter().rev() {
        op.apply_into(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur)
}

/// Dense matrix of any map, built column by column.
pub fn materialize(op: &dyn LinearMap, limit: usize) -> Result<Mat<C64>> {
    let n = op.dim();
    if n > limit {
        return Err(Error::TooLarge(format!(
            "dense materialization of dimension {n} exceeds limit {limit}"
        )));
    }
    let mut out = Mat::<C64>::zeros(n, n);
    let mut e = linalg::zeros(n);
    let mut col = linalg::zeros(n);
    for j in 0..n {
        e[j] = C64::new(1.0, 0.0);
        op.apply_into(&e, &mut col);
        for i in 0..n {
            out[(i, j)] = col[i];
        }
        e[j] = C64::new(0.0, 0.0);
    }
    Ok(out)
}

pub struct Identity(pub usize);

impl LinearMap for Identity {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply_acc(&self, alpha: f64, x: &[C64], y: &mut [C64]) {
        linalg::axpy(C64::new(alpha, 0.0), x, y);
    }
    fn scale_hint(&self) -> f64 {
        1.0
    }
}

/// Owned dense operator; mostly useful at small dimension and in tests.
pub struct DenseOperator {
    pub matrix: Mat<C64>,
    hermitian: bool,
}

impl DenseOperator {
    pub fn new(matrix: Mat<C64>) -> Self {
        let hermitian = linalg::hermiticity_defect(matrix.as_ref()) <= 1e-12;
        Self { matrix, hermitian }
    }
}

impl LinearMap for DenseOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }
    fn apply_acc(&self, alpha: f64, x: &[C64], y: &mut [C64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                acc += self.matrix[(i, j)] * x[j];
            }
            y[i] += acc * alpha;
        }
    }
    fn scale_hint(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.matrix[(i, i)].norm())
            .fold(0.0, f64::max)
    }
    fn is_hermitian(&self) -> bool {
        self.hermitian
    }
}

/// `sum_k c_k A_k`
pub struct LinearCombination<'a> {
    dim: usize,
    parts: Vec<(f64, &'a dyn LinearMap)>,
}

impl<'a> LinearCombination<'a> {
    pub fn new(dim: usize, parts: Vec<(f64, &'a dyn LinearMap)>) -> Result<Self> {
        for (_, p) in &parts {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: p.dim(),
                });
            }
        }
        Ok(Self { dim, parts })
    }

    pub fn sum(dim: usize, parts: impl IntoIterator<Item = &'a dyn LinearMap>) -> Result<Self> {
        Self::new(dim, parts.into_iter().map(|p| (1.0, p)).collect())
    }
}

impl LinearMap for LinearCombination<'_> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply_acc(&self, alpha: f64, x: &[C64], y: &mut [C64]) {
        for (c, p) in &self.parts {
            p.apply_acc(alpha * c, x, y);
        }
    }
    fn scale_hint(&self) -> f64 {
        self.parts.iter().map(|(c, p)| c.abs() * p.scale_hint()).sum()
    }
    fn is_hermitian(&self) -> bool {
        self.parts.iter().all(|(_, p)| p.is_hermitian())
    }
}

/// Ordered product `F_0 F_1 ... F_{k-1}`, applied right to left.
#[derive(Clone)]
pub struct Product<'a> {
    dim: usize,
    factors: Vec<&'a dyn LinearMap>,
}

impl<'a> Product<'a> {
    pub fn new(dim: usize, factors: Vec<&'a dyn LinearMap>) -> Result<Self> {
        for f in &factors {
            if f.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: f.dim(),
                });
            }
        }
        Ok(Self { dim, factors })
    }

    pub fn factors(&self) -> &[&'a dyn LinearMap] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Adjoint of a product of Hermitian factors: the reversed product.
    pub fn adjoint(&self) -> Result<Self> {
        if !self.factors.iter().all(|f| f.is_hermitian()) {
            return Err(Error::Precondition(
                "adjoint by reversal needs Hermitian factors".into(),
            ));
        }
        let mut factors = self.factors.clone();
        factors.reverse();
        Ok(Self {
            dim: self.dim,
            factors,
        })
    }

    /// `P^dagger P` as a Hermitian map.
    pub fn gram(&self) -> Result<Gram<'a>> {
        let adjoint = self.adjoint()?;
        Ok(Gram {
            forward: self.clone(),
            adjoint,
        })
    }

    fn apply_chain(factors: &[&dyn LinearMap], x: &[C64]) -> Vec<C64> {
        let mut cur = x.to_vec();
        let mut next = linalg::zeros(x.len());
        for f in factors.iter().rev() {
            f.apply_into(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }
}

impl LinearMap for Product<'_> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply_acc(&self, alpha: f64, x: &[C64], y: &mut [C64]) {
        let r = Self::apply_chain(&self.factors, x);
        linalg::axpy(C64::new(alpha, 0.0), &r, y);
    }
    fn scale_hint(&self) -> f64 {
        self.factors.iter().map(|f| f.scale_hint().max(1.0)).product()
    }
    fn is_hermitian(&self) -> bool {
        match self.factors.len() {
            0 => true,
            1 => self.factors[0].is_hermitian(),
            _ => false,
        }
    }
}

/// `P^dagger P` for a product `P` of Hermitian factors.
pub struct Gram<'a> {
    forward: Product<'a>,
    adjoint: Product<'a>,
}

impl LinearMap for Gram<'_> {
    fn dim(&self) -> usize {
        self.forward.dim
    }
    fn apply_acc(&self, alpha: f64, x: &[C64], y: &mut [C64]) {
        let mid = Product::apply_chain(&self.forward.factors, x);
        let r = Product::apply_chain(&self.adjoint.factors, &mid);
        linalg::axpy(C64::new(alpha, 0.0), &r, y);
    }
    fn scale_hint(&self) -> f64 {
        self.forward.scale_hint().powi(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> DenseOperator {
        let n = v.len();
        DenseOperator::new(Mat::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(v[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    #[test]
    fn product_applies_right_to_left() {
        // A = [[0,1],[0,0]] (not Hermitian), B = diag(2,3): (A B) e1 = A (0,3) = (3,0)
        let a = DenseOperator::new(Mat::from_fn(2, 2, |i, j| {
            if i == 0 && j == 1 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }));
        let b = diag(&[2.0, 3.0]);
        let v = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let r = apply_product(&[&a, &b], &v).unwrap();
        assert_eq!(r[0], C64::new(3.0, 0.0));
        assert_eq!(r[1], C64::new(0.0, 0.0));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = diag(&[1.0, 1.0]);
        let err = apply(&a, &[C64::new(1.0, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, actual: 1 }));
        assert!(apply_product(&[&a], &[C64::new(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn gram_of_projector_product() {
        let p = diag(&[1.0, 0.0, 1.0]);
        let q = diag(&[1.0, 1.0, 0.0]);
        let prod = Product::new(3, vec![&p, &q]).unwrap();
        let g = prod.gram().unwrap();
        let m = materialize(&g, 16).unwrap();
        assert_eq!(m[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(m[(1, 1)], C64::new(0.0, 0.0));
        assert_eq!(m[(2, 2)], C64::new(0.0, 0.0));
    }
}
