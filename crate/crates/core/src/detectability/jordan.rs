//! Simultaneous block diagonalization of two projectors into blocks of
//! dimension at most two, and the two-dimensional operator inequality used
//! on each block.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::rng::Stream;
use crate::{Error, Result, C64};

/// Overlaps within this distance of 0 or 1 are snapped to the endpoint.
pub const ANGLE_TOL: f64 = 1e-8;

/// Largest `nu` for which the two-dimensional inequality holds: `(3 - sqrt 5)/2`.
pub const NU_MAX: f64 = 0.381_966_011_250_105_1;

#[derive(Clone, Debug)]
pub struct JordanBlock {
    /// Normalized vector spanning `range(P1)` inside the block, or `None`.
    pub v1: Option<Vec<C64>>,
    pub v2: Option<Vec<C64>>,
    /// `|<v1|v2>|^2`; zero when either vector is null.
    pub overlap: f64,
    /// Orthonormal basis of the block (one or two vectors).
    pub basis: Vec<Vec<C64>>,
}

impl JordanBlock {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

#[derive(Clone, Debug)]
pub struct JordanBlocks {
    pub blocks: Vec<JordanBlock>,
    /// `||P_a - sum_b Pbar_b P_a Pbar_b||_F` for `a = 1, 2`.
    pub reconstruction: [f64; 2],
    /// Frobenius residuals of the two identities
    /// `P2 P1 P2 = sum c_b |v2><v2|` and `P1 + P2 = sum (|v1><v1| + |v2><v2|)`.
    pub identity_residuals: [f64; 2],
    /// Largest `|<x|y>|` between basis vectors of different blocks.
    pub orthogonality: f64,
    /// Overlaps snapped to 0 or 1 because they fell within `ANGLE_TOL`.
    pub snapped: usize,
}

fn range_basis(p: &Mat<C64>) -> Result<Mat<C64>> {
    let e = linalg::eigh(p.as_ref())?;
    let cols: Vec<usize> = (0..p.nrows()).filter(|&k| e.values[k] > 0.5).collect();
    Ok(Mat::from_fn(p.nrows(), cols.len(), |i, j| e.vectors[(i, cols[j])]))
}

fn outer_sum(n: usize, vs: impl Iterator<Item = (f64, Vec<C64>)>) -> Mat<C64> {
    let mut m = Mat::<C64>::zeros(n, n);
    for (w, v) in vs {
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += v[i] * v[j].conj() * w;
            }
        }
    }
    m
}

fn mat_vec(m: &Mat<C64>, v: &[C64]) -> Vec<C64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

/// Jordan blocks of the projector pair `(P1, P2)`.
///
/// On `range(P2)` the compression `V2^dagger P1 V2` has eigenvalues
/// `c_b = |<v1_b|v2_b>|^2` with eigenvectors `w_b`; then `v2_b = V2 w_b` and
/// `v1_b = P1 v2_b / sqrt(c_b)`. What remains of `range(P1)` is orthogonal to
/// `range(P2)` and forms blocks with a null `v2`.
pub fn jordan_decompose(p1: &Mat<C64>, p2: &Mat<C64>) -> Result<JordanBlocks> {
    let n = p1.nrows();
    if p1.ncols() != n || p2.nrows() != n || p2.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: p2.nrows(),
        });
    }
    let v2 = range_basis(p2)?;
    let compressed = v2.adjoint() * p1 * &v2;
    let r2 = v2.ncols();
    let sym = Mat::<C64>::from_fn(r2, r2, |i, j| (compressed[(i, j)] + compressed[(j, i)].conj()) * 0.5);
    let eig = linalg::eigh(sym.as_ref())?;
    let mut blocks = vec![];
    let mut snapped = 0;
    for b in 0..r2 {
        let w: Vec<C64> = (0..r2).map(|i| eig.vectors[(i, b)]).collect();
        let mut x = linalg::zeros(n);
        for (j, wj) in w.iter().enumerate() {
            for i in 0..n {
                x[i] += v2[(i, j)] * wj;
            }
        }
        let c = eig.values[b].clamp(0.0, 1.0);
        if c <= ANGLE_TOL {
            if c > 0.0 {
                snapped += 1;
            }
            blocks.push(JordanBlock {
                v1: None,
                v2: Some(x.clone()),
                overlap: 0.0,
                basis: vec![x],
            });
        } else if 1.0 - c <= ANGLE_TOL {
            if c < 1.0 {
                snapped += 1;
            }
            blocks.push(JordanBlock {
                v1: Some(x.clone()),
                v2: Some(x.clone()),
                overlap: 1.0,
                basis: vec![x],
            });
        } else {
            let mut y = mat_vec(p1, &x);
            linalg::normalize(&mut y);
            let basis = linalg::orthonormalize(vec![x.clone(), y.clone()], 1e-12);
            blocks.push(JordanBlock {
                v1: Some(y),
                v2: Some(x),
                overlap: c,
                basis,
            });
        }
    }
    // range(P1) left over after the paired vectors
    let paired: Vec<Vec<C64>> = blocks.iter().filter_map(|b| b.v1.clone()).collect();
    let paired = linalg::orthonormalize(paired, 1e-12);
    let v1 = range_basis(p1)?;
    let mut rest = vec![];
    for c in linalg::columns(v1.as_ref()) {
        let mut x = c;
        linalg::project_out(&paired, &mut x);
        rest.push(x);
    }
    for x in linalg::orthonormalize(rest, 1e-6) {
        blocks.push(JordanBlock {
            v1: Some(x.clone()),
            v2: None,
            overlap: 0.0,
            basis: vec![x],
        });
    }

    // reconstruction residuals
    let block_proj: Vec<Mat<C64>> = blocks
        .iter()
        .map(|b| linalg::projector_from_columns(linalg::from_columns(n, &b.basis).as_ref()))
        .collect();
    let recon = |p: &Mat<C64>| -> f64 {
        let mut acc = Mat::<C64>::zeros(n, n);
        for bp in &block_proj {
            acc += bp * p * bp;
        }
        linalg::frobenius((p - &acc).as_ref())
    };
    let reconstruction = [recon(p1), recon(p2)];
    let lhs_a = p2 * p1 * p2;
    let rhs_a = outer_sum(
        n,
        blocks
            .iter()
            .filter_map(|b| b.v2.clone().map(|v| (b.overlap, v)))
            .filter(|(c, _)| *c > 0.0),
    );
    let lhs_b = p1 + p2;
    let rhs_b = outer_sum(
        n,
        blocks.iter().flat_map(|b| {
            b.v1.iter()
                .chain(b.v2.iter())
                .map(|v| (1.0, v.clone()))
                .collect::<Vec<_>>()
        }),
    );
    let identity_residuals = [
        linalg::frobenius((&lhs_a - &rhs_a).as_ref()),
        linalg::frobenius((&lhs_b - &rhs_b).as_ref()),
    ];
    let mut orthogonality = 0.0f64;
    for (i, a) in blocks.iter().enumerate() {
        for b in &blocks[i + 1..] {
            for x in &a.basis {
                for y in &b.basis {
                    orthogonality = orthogonality.max(linalg::dot(x, y).norm());
                }
            }
        }
    }
    Ok(JordanBlocks {
        blocks,
        reconstruction,
        identity_residuals,
        orthogonality,
        snapped,
    })
}

/// Orthogonal projector onto the span of `rank` random complex vectors.
pub fn random_projector(n: usize, rank: usize, stream: &mut Stream) -> Mat<C64> {
    let cols = linalg::orthonormalize((0..rank.min(n)).map(|_| stream.complex_vector(n)).collect(), 1e-8);
    linalg::projector_from_columns(linalg::from_columns(n, &cols).as_ref())
}

pub const JORDAN_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JordanPairsReport {
    pub pairs: usize,
    pub max_dim: usize,
    pub seed: u64,
    /// Largest residual of either identity over all pairs.
    pub max_identity_residual: f64,
    pub max_reconstruction: f64,
    pub max_orthogonality: f64,
    pub max_block_dim: usize,
    pub snapped: usize,
    pub failures: usize,
    pub tolerance: f64,
    pub holds: bool,
}

/// Decomposes `pairs` random projector pairs of random dimension in
/// `2..=max_dim` and random ranks.
pub fn verify_random_pairs(pairs: usize, max_dim: usize, seed: u64) -> Result<JordanPairsReport> {
    if max_dim < 2 {
        return Err(Error::InvalidParameter(format!("max_dim must be at least 2, got {max_dim}")));
    }
    let mut stream = Stream::new(seed);
    let pick = |lo: usize, hi: usize, s: &mut Stream| {
        lo + ((s.uniform() * (hi - lo + 1) as f64) as usize).min(hi - lo)
    };
    let (mut ident, mut recon, mut orth) = (0.0f64, 0.0f64, 0.0f64);
    let (mut max_block, mut snapped, mut failures) = (0, 0, 0);
    for _ in 0..pairs {
        let n = pick(2, max_dim, &mut stream);
        let r1 = pick(1, n, &mut stream);
        let r2 = pick(1, n, &mut stream);
        let p1 = random_projector(n, r1, &mut stream);
        let p2 = random_projector(n, r2, &mut stream);
        let jb = jordan_decompose(&p1, &p2)?;
        let i = jb.identity_residuals[0].max(jb.identity_residuals[1]);
        let r = jb.reconstruction[0].max(jb.reconstruction[1]);
        let b = jb.blocks.iter().map(JordanBlock::dim).max().unwrap_or(0);
        if i > JORDAN_TOL || r > JORDAN_TOL || b > 2 {
            failures += 1;
        }
        ident = ident.max(i);
        recon = recon.max(r);
        orth = orth.max(jb.orthogonality);
        max_block = max_block.max(b);
        snapped += jb.snapped;
    }
    Ok(JordanPairsReport {
        pairs,
        max_dim,
        seed,
        max_identity_residual: ident,
        max_reconstruction: recon,
        max_orthogonality: orth,
        max_block_dim: max_block,
        snapped,
        failures,
        tolerance: JORDAN_TOL,
        holds: failures == 0,
    })
}

/// Minimum eigenvalue of `nu |a|^2 |v2><v2| + (2 - nu) 1 - |v1><v1| - |v2><v2|`
/// with `v2 = |0>` and `v1 = a|0> + b|1>`, and the closed-form determinant
/// `|b|^2((1 - nu)^2 - nu |a|^2)` alongside the directly computed one.
fn two_dim_gap(nu: f64, a: C64, b: C64) -> (f64, f64, f64) {
    let (aa, bb) = (a.norm_sqr(), b.norm_sqr());
    // rhs - lhs = [[(1-nu)|b|^2 (using |a|^2+|b|^2=1), -a b*], [-a* b, 1 + |a|^2 - nu]]
    let m00 = nu * aa + (2.0 - nu) - 1.0 - aa;
    let m11 = (2.0 - nu) - bb;
    let m01 = -(a * b.conj());
    let tr = m00 + m11;
    let det = m00 * m11 - m01.norm_sqr();
    let disc = ((m00 - m11).powi(2) + 4.0 * m01.norm_sqr()).sqrt();
    let min_eig = 0.5 * (tr - disc);
    let det_formula = bb * ((1.0 - nu).powi(2) - nu * aa);
    (min_eig, det, det_formula)
}

pub const CLAIM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwoDimClaimReport {
    pub nu: f64,
    pub nu_in_claim_range: bool,
    pub samples: usize,
    pub violations: usize,
    pub min_eigenvalue: f64,
    pub worst_abs_a_sq: f64,
    /// Largest mismatch between the closed-form and direct determinants.
    pub determinant_error: f64,
    pub min_determinant: f64,
    pub holds: bool,
}

/// Samples `(a, b)` uniformly on the unit sphere of `C^2` (plus the endpoints
/// `a = 0` and `|a| = 1`) and checks the block inequality at `nu`.
pub fn verify_two_dim_claim(samples: usize, nu: f64, seed: u64) -> Result<TwoDimClaimReport> {
    if !(0.0..1.0).contains(&nu) {
        return Err(Error::InvalidParameter(format!("nu must lie in [0, 1), got {nu}")));
    }
    let mut stream = Stream::new(seed);
    let mut points = vec![
        (C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
        (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
    ];
    while points.len() < samples.max(2) {
        let mut v = [stream.complex_normal(), stream.complex_normal()];
        linalg::normalize(&mut v);
        points.push((v[0], v[1]));
    }
    let mut violations = 0;
    let mut min_eig = f64::INFINITY;
    let mut worst = 0.0;
    let mut det_err = 0.0f64;
    let mut min_det = f64::INFINITY;
    for (a, b) in points.iter().take(samples.max(2)) {
        let (e, det, formula) = two_dim_gap(nu, *a, *b);
        if e < -CLAIM_TOL {
            violations += 1;
        }
        if e < min_eig {
            min_eig = e;
            worst = a.norm_sqr();
        }
        det_err = det_err.max((det - formula).abs());
        min_det = min_det.min(formula);
    }
    Ok(TwoDimClaimReport {
        nu,
        nu_in_claim_range: nu <= NU_MAX,
        samples: samples.max(2),
        violations,
        min_eigenvalue: min_eig,
        worst_abs_a_sq: worst,
        determinant_error: det_err,
        min_determinant: min_det,
        holds: violations == 0,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryProbe {
    pub nu: f64,
    /// `(1 - nu)^2 - nu`, the determinant factor at `|a| = 1`.
    pub factor_at_unit_a: f64,
    /// `(|a|^2, min eigenvalue)` as `|a|^2 -> 1`.
    pub approach: Vec<(f64, f64)>,
}

/// Behaviour of the block inequality as `|a| -> 1`, where the determinant
/// factor decides the sign.
pub fn claim_boundary_probe(nu: f64) -> BoundaryProbe {
    let approach = [0.9, 0.99, 0.999, 0.9999]
        .iter()
        .map(|&aa: &f64| {
            let a = C64::new(aa.sqrt(), 0.0);
            let b = C64::new((1.0 - aa).sqrt(), 0.0);
            (aa, two_dim_gap(nu, a, b).0)
        })
        .collect();
    BoundaryProbe {
        nu,
        factor_at_unit_a: (1.0 - nu).powi(2) - nu,
        approach,
    }
}
