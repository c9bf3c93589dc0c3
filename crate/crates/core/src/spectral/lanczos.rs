//! Thick-restart Lanczos with full reorthogonalization and hard locking.
//!
//! The search space is kept orthogonal to a set of locked vectors, so the
//! iteration sees `(1 - L) A (1 - L)` restricted to the complement of the
//! locked span. The projected matrix `V^dagger A V` is accumulated from the
//! orthogonalization coefficients, and Ritz residuals are exact (`A V` is
//! stored), so no extra matvecs are needed to certify convergence.

use faer::Mat;

use crate::linalg;
use crate::operator::LinearMap;
use crate::rng::Stream;
use crate::{Error, Result, C64};

#[derive(Clone, Debug)]
pub struct LanczosParams {
    /// Maximum search-space dimension before a restart.
    pub basis: usize,
    /// Ritz vectors kept across a restart.
    pub keep: usize,
    pub max_restarts: usize,
    /// Absolute residual tolerance `||A x - theta x||`.
    pub tol: f64,
}

/// Expansion steps between Rayleigh-Ritz convergence checks.
const CHECK_INTERVAL: usize = 16;

/// `(theta, x, A x, residual)`
type Pair = (f64, Vec<C64>, Vec<C64>, f64);

#[derive(Clone, Debug)]
pub struct RitzPair {
    pub value: f64,
    pub vector: Vec<C64>,
    pub residual: f64,
}

/// Which end of the spectrum to converge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum End {
    Lowest,
    Highest,
}

/// Converges the extreme eigenpair of `op` on the orthogonal complement of
/// `locked`. Returns every Ritz pair of the final search space whose residual
/// meets the tolerance, sorted toward the requested end first.
pub fn extreme_pairs(
    op: &dyn LinearMap,
    locked: &[Vec<C64>],
    end: End,
    params: &LanczosParams,
    stream: &mut Stream,
) -> Result<Vec<RitzPair>> {
    let n = op.dim();
    let free = n.saturating_sub(locked.len());
    if free == 0 {
        return Ok(vec![]);
    }
    let sign = match end {
        End::Lowest => 1.0,
        End::Highest => -1.0,
    };
    let m = params.basis.min(free).max(1);
    let keep = params.keep.min(m.saturating_sub(1)).max(1);

    let mut next = fresh_direction(locked, &[], n, stream)
        .ok_or_else(|| Error::NoConvergence("no start vector outside locked span".into()))?;
    let mut v: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
    let mut av: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
    // projected matrix of sign * A, stored as dense columns
    let mut h: Vec<Vec<C64>> = Vec::with_capacity(m + 1);

    let mut best_residual = f64::INFINITY;
    let checks_per_restart = m.div_ceil(CHECK_INTERVAL);
    for _cycle in 0..params.max_restarts * checks_per_restart {
        let target = (v.len() + CHECK_INTERVAL).min(m);
        while v.len() < target {
            let x = next.clone();
            let mut ax = linalg::zeros(n);
            op.apply_acc(sign, &x, &mut ax);
            v.push(x);
            av.push(ax);
            let k = v.len();
            // new column of the projected matrix; also the first Gram-Schmidt pass
            let col: Vec<C64> = (0..k).map(|i| linalg::dot(&v[i], &av[k - 1])).collect();
            let mut r = av[k - 1].clone();
            for (i, c) in col.iter().enumerate() {
                linalg::axpy(-*c, &v[i], &mut r);
            }
            for (i, c) in col.iter().enumerate().take(k - 1) {
                h[i].push(c.conj());
            }
            h.push(col);
            if k >= free {
                break;
            }
            linalg::project_out(locked, &mut r);
            for b in &v {
                let c = linalg::dot(b, &r);
                linalg::axpy(-c, b, &mut r);
            }
            let scale = linalg::norm(&av[k - 1]).max(f64::MIN_POSITIVE);
            let beta = linalg::normalize(&mut r);
            if beta <= 1e-13 * scale {
                // invariant subspace: continue from a random direction so the
                // rest of the complement is still explored
                match fresh_direction(locked, &v, n, stream) {
                    Some(d) => next = d,
                    None => break,
                }
                continue;
            }
            next = r;
        }
        let k = v.len();
        let hm = Mat::<C64>::from_fn(k, k, |i, j| {
            if i == j {
                C64::new(h[j][i].re, 0.0)
            } else if i > j {
                h[j][i]
            } else {
                h[i][j].conj()
            }
        });
        let eig = linalg::eigh(hm.as_ref())?;
        let ritz = |c: usize| -> (Vec<C64>, Vec<C64>) {
            let mut x = linalg::zeros(n);
            let mut ax = linalg::zeros(n);
            for j in 0..k {
                let y = eig.vectors[(j, c)];
                linalg::axpy(y, &v[j], &mut x);
                linalg::axpy(y, &av[j], &mut ax);
            }
            (x, ax)
        };
        let mut pairs: Vec<Pair> = Vec::with_capacity(keep);
        let done = k >= free || v.len() >= m;
        for c in 0..keep.min(k) {
            if c == 1 && !done && pairs.first().is_some_and(|p: &Pair| p.3 > params.tol) {
                // not converged and no restart due: skip the remaining Ritz vectors
                break;
            }
            let (x, ax) = ritz(c);
            let theta = eig.values[c];
            let mut res = ax.clone();
            linalg::axpy(C64::new(-theta, 0.0), &x, &mut res);
            linalg::project_out(locked, &mut res);
            let residual = linalg::norm(&res);
            pairs.push((theta, x, ax, residual));
        }
        best_residual = best_residual.min(pairs[0].3);
        if pairs[0].3 <= params.tol || k >= free {
            let limit = params.tol.max(pairs_floor(k, free));
            return Ok(pairs
                .into_iter()
                .filter(|p| p.3 <= limit)
                .map(|(theta, vector, _, residual)| RitzPair {
                    value: sign * theta,
                    vector,
                    residual,
                })
                .collect());
        }
        if v.len() < m {
            continue;
        }
        // thick restart: keep the leading Ritz vectors, continue from `next`
        v.clear();
        av.clear();
        h.clear();
        for (idx, (theta, x, ax, _)) in pairs.into_iter().enumerate() {
            v.push(x);
            av.push(ax);
            let mut col = vec![C64::new(0.0, 0.0); idx + 1];
            col[idx] = C64::new(theta, 0.0);
            for (i, hc) in h.iter_mut().enumerate() {
                debug_assert!(i < idx);
                hc.push(C64::new(0.0, 0.0));
            }
            h.push(col);
        }
        // `next` is orthogonal to the old basis, hence to the kept Ritz vectors;
        // one more pass guards against drift
        linalg::project_out(locked, &mut next);
        linalg::project_out(&v, &mut next);
        if linalg::normalize(&mut next) == 0.0 {
            next = fresh_direction(locked, &v, n, stream)
                .ok_or_else(|| Error::NoConvergence("search space exhausted".into()))?;
        }
    }
    Err(Error::NoConvergence(format!(
        "{} restarts of a {m}-vector basis; best residual {best_residual:.3e} > tol {:.3e}",
        params.max_restarts, params.tol
    )))
}

/// When the whole complement has been spanned the Ritz pairs are exact up to
/// rounding, whatever the tolerance.
fn pairs_floor(k: usize, free: usize) -> f64 {
    if k >= free {
        f64::INFINITY
    } else {
        0.0
    }
}

fn fresh_direction(
    locked: &[Vec<C64>],
    basis: &[Vec<C64>],
    n: usize,
    stream: &mut Stream,
) -> Option<Vec<C64>> {
    for _ in 0..8 {
        let mut x = stream.complex_vector(n);
        let before = linalg::norm(&x);
        linalg::project_out(locked, &mut x);
        linalg::project_out(basis, &mut x);
        let after = linalg::normalize(&mut x);
        if after > 1e-8 * before {
            return Some(x);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::DenseOperator;

    fn params() -> LanczosParams {
        LanczosParams {
            basis: 20,
            keep: 6,
            max_restarts: 200,
            tol: 1e-11,
        }
    }

    fn diag(values: &[f64]) -> DenseOperator {
        let n = values.len();
        DenseOperator::new(Mat::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    #[test]
    fn lowest_and_highest_of_diagonal() {
        let vals: Vec<f64> = (0..60).map(|k| 1.0 + 0.1 * k as f64).collect();
        let op = diag(&vals);
        let mut s = Stream::new(3);
        let lo = extreme_pairs(&op, &[], End::Lowest, &params(), &mut s).unwrap();
        assert!((lo[0].value - 1.0).abs() < 1e-10);
        let hi = extreme_pairs(&op, &[], End::Highest, &params(), &mut s).unwrap();
        assert!((hi[0].value - 6.9).abs() < 1e-10);
    }

    #[test]
    fn locking_deflates() {
        let op = diag(&[0.0, 0.5, 2.0, 3.0]);
        let e0: Vec<C64> = (0..4)
            .map(|i| C64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0))
            .collect();
        let mut s = Stream::new(1);
        let lo = extreme_pairs(&op, &[e0], End::Lowest, &params(), &mut s).unwrap();
        assert!((lo[0].value - 0.5).abs() < 1e-12);
    }
}
