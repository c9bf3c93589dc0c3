//! Dense helpers shared by the solvers: Hermitian eigendecomposition and
//! small vector kernels over `C64` slices.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::{Mat, MatRef, Par};

use crate::{Error, Result, C64};

/// Eigenvalues in nondecreasing order with matching orthonormal eigenvectors (columns).
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Mat<C64>,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        (0..self.vectors.nrows()).map(|i| self.vectors[(i, k)]).collect()
    }
}

fn evd_real(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = a.nrows();
    let mut u = Mat::<f64>::zeros(n, n);
    let mut s = faer::diag::Diag::<f64>::zeros(n);
    let par = Par::Seq;
    let mut buf = MemBuffer::new(evd::self_adjoint_evd_scratch::<f64>(
        n,
        ComputeEigenvectors::Yes,
        par,
        Default::default(),
    ));
    evd::self_adjoint_evd(
        a,
        s.as_mut(),
        Some(u.as_mut()),
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|_| Error::Eigendecomposition)?;
    let values = (0..n).map(|i| s.column_vector()[i]).collect();
    Ok((values, u))
}

fn evd_complex(a: MatRef<'_, C64>) -> Result<(Vec<f64>, Mat<C64>)> {
    let n = a.nrows();
    let mut u = Mat::<C64>::zeros(n, n);
    let mut s = faer::diag::Diag::<C64>::zeros(n);
    let par = Par::Seq;
    let mut buf = MemBuffer::new(evd::self_adjoint_evd_scratch::<C64>(
        n,
        ComputeEigenvectors::Yes,
        par,
        Default::default(),
    ));
    evd::self_adjoint_evd(
        a,
        s.as_mut(),
        Some(u.as_mut()),
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|_| Error::Eigendecomposition)?;
    let values = (0..n).map(|i| s.column_vector()[i].re).collect();
    Ok((values, u))
}

/// Eigendecomposition of a Hermitian matrix (lower triangle is read).
///
/// Matrices with identically zero imaginary part take the real symmetric
/// path, which is roughly four times cheaper.
pub fn eigh(a: MatRef<'_, C64>) -> Result<HermitianEigen> {
    assert_eq!(a.nrows(), a.ncols());
    let n = a.nrows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: vec![],
            vectors: Mat::zeros(0, 0),
        });
    }
    let real = (0..n).all(|j| (j..n).all(|i| a[(i, j)].im == 0.0));
    if real {
        let ar = Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)].re);
        let (values, u) = evd_real(ar.as_ref())?;
        let vectors = Mat::<C64>::from_fn(n, n, |i, j| C64::new(u[(i, j)], 0.0));
        Ok(HermitianEigen { values, vectors })
    } else {
        let (values, vectors) = evd_complex(a)?;
        Ok(HermitianEigen { values, vectors })
    }
}

/// Eigenvalues only, in nondecreasing order.
pub fn eigvalsh(a: MatRef<'_, C64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(vec![]);
    }
    let par = Par::Seq;
    let real = (0..n).all(|j| (j..n).all(|i| a[(i, j)].im == 0.0));
    if real {
        let ar = Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)].re);
        let mut s = faer::diag::Diag::<f64>::zeros(n);
        let mut buf = MemBuffer::new(evd::self_adjoint_evd_scratch::<f64>(
            n,
            ComputeEigenvectors::No,
            par,
            Default::default(),
        ));
        evd::self_adjoint_evd(
            ar.as_ref(),
            s.as_mut(),
            None,
            par,
            MemStack::new(&mut buf),
            Default::default(),
        )
        .map_err(|_| Error::Eigendecomposition)?;
        Ok((0..n).map(|i| s.column_vector()[i]).collect())
    } else {
        let mut s = faer::diag::Diag::<C64>::zeros(n);
        let mut buf = MemBuffer::new(evd::self_adjoint_evd_scratch::<C64>(
            n,
            ComputeEigenvectors::No,
            par,
            Default::default(),
        ));
        evd::self_adjoint_evd(
            a,
            s.as_mut(),
            None,
            par,
            MemStack::new(&mut buf),
            Default::default(),
        )
        .map_err(|_| Error::Eigendecomposition)?;
        Ok((0..n).map(|i| s.column_vector()[i].re).collect())
    }
}

/// Eigendecomposition of a real symmetric matrix.
pub fn eigh_real(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    if a.nrows() == 0 {
        return Ok((vec![], Mat::zeros(0, 0)));
    }
    evd_real(a)
}

/// Largest |A - A^dagger| entry relative to the largest |A| entry.
pub fn hermiticity_defect(a: MatRef<'_, C64>) -> f64 {
    let n = a.nrows();
    let mut scale = 0.0f64;
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            scale = scale.max(a[(i, j)].norm());
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        dev / scale
    }
}

/// Spectral norm via the eigenvalues of a Hermitian matrix.
pub fn hermitian_norm(a: MatRef<'_, C64>) -> Result<f64> {
    let e = eigh(a)?;
    Ok(e.values.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

pub fn identity(n: usize) -> Mat<C64> {
    Mat::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

/// Projector `U U^dagger` from orthonormal columns.
pub fn projector_from_columns(u: MatRef<'_, C64>) -> Mat<C64> {
    let n = u.nrows();
    let k = u.ncols();
    Mat::from_fn(n, n, |i, j| {
        let mut acc = C64::new(0.0, 0.0);
        for c in 0..k {
            acc += u[(i, c)] * u[(j, c)].conj();
        }
        acc
    })
}

pub fn matmul(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Mat<C64> {
    a * b
}

pub fn frobenius(a: MatRef<'_, C64>) -> f64 {
    a.norm_l2()
}

// ---------------------------------------------------------------------------
// vector kernels

pub fn zeros(n: usize) -> Vec<C64> {
    vec![C64::new(0.0, 0.0); n]
}

/// `<x, y>` conjugate-linear in the first argument.
pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    debug_assert_eq!(x.len(), y.len());
    // four independent accumulators so the reduction pipelines
    let mut re = [0.0f64; 4];
    let mut im = [0.0f64; 4];
    let xc = x.chunks_exact(4);
    let yc = y.chunks_exact(4);
    let (xr, yr) = (xc.remainder(), yc.remainder());
    for (a, b) in xc.zip(yc) {
        for l in 0..4 {
            re[l] += a[l].re * b[l].re + a[l].im * b[l].im;
            im[l] += a[l].re * b[l].im - a[l].im * b[l].re;
        }
    }
    for (a, b) in xr.iter().zip(yr) {
        re[0] += a.re * b.re + a.im * b.im;
        im[0] += a.re * b.im - a.im * b.re;
    }
    C64::new((re[0] + re[1]) + (re[2] + re[3]), (im[0] + im[1]) + (im[2] + im[3]))
}

pub fn norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `y <- y + alpha x`
pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [C64]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

/// Normalizes in place, returning the former norm.
pub fn normalize(x: &mut [C64]) -> f64 {
    let n = norm(x);
    if n > 0.0 {
        scale(1.0 / n, x);
    }
    n
}

pub fn sub(x: &[C64], y: &[C64]) -> Vec<C64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

/// Removes the components of `v` along the orthonormal set `basis`
/// (two passes of classical Gram-Schmidt).
pub fn project_out(basis: &[Vec<C64>], v: &mut [C64]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, v);
            axpy(-c, b, v);
        }
    }
}

/// Orthonormalizes `vectors` (modified Gram-Schmidt with one reorthogonalization
/// pass); vectors whose residual norm falls below `drop_tol` are discarded.
pub fn orthonormalize(vectors: Vec<Vec<C64>>, drop_tol: f64) -> Vec<Vec<C64>> {
    let mut out: Vec<Vec<C64>> = Vec::with_capacity(vectors.len());
    for mut v in vectors {
        let before = norm(&v);
        project_out(&out, &mut v);
        let after = normalize(&mut v);
        if before > 0.0 && after > drop_tol * before.max(1.0) {
            out.push(v);
        }
    }
    out
}

pub fn columns(m: MatRef<'_, C64>) -> Vec<Vec<C64>> {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)]).collect())
        .collect()
}

pub fn from_columns(rows: usize, cols: &[Vec<C64>]) -> Mat<C64> {
    Mat::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_real_and_complex_paths_agree_on_spectrum() {
        let a = Mat::<C64>::from_fn(3, 3, |i, j| {
            let base = [[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]][i][j];
            C64::new(base, 0.0)
        });
        let e = eigh(a.as_ref()).unwrap();
        // rotate by a diagonal phase: same spectrum, complex entries
        let phase: Vec<C64> = (0..3).map(|k| C64::from_polar(1.0, 0.3 * k as f64)).collect();
        let b = Mat::<C64>::from_fn(3, 3, |i, j| phase[i] * a[(i, j)] * phase[j].conj());
        let f = eigh(b.as_ref()).unwrap();
        for (x, y) in e.values.iter().zip(&f.values) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn orthonormalize_drops_dependent_vectors() {
        let one = C64::new(1.0, 0.0);
        let z = C64::new(0.0, 0.0);
        let vs = vec![vec![one, z], vec![one + one, z], vec![one, one]];
        let out = orthonormalize(vs, 1e-12);
        assert_eq!(out.len(), 2);
        assert!(dot(&out[0], &out[1]).norm() < 1e-14);
    }
}
