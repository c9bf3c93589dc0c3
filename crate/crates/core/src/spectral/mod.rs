//! Ground spaces, spectral gaps, operator inequalities and restricted norms.

pub mod lanczos;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::operator::{materialize, LinearCombination, LinearMap};
use crate::rng::{derive_seed, Stream};
use crate::{Error, Result, C64};
use lanczos::{extreme_pairs, End, LanczosParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Dense up to `dense_limit`, Krylov above.
    Auto,
    Dense,
    Krylov,
}

/// Path actually taken by a solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodUsed {
    Dense,
    Krylov,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub method: Method,
    /// Kernel threshold relative to the largest diagonal magnitude.
    pub zero_threshold_rel: f64,
    /// Largest dimension `Auto` sends to the dense path.
    pub dense_limit: usize,
    /// Hard cap for dense materialization.
    pub dense_max: usize,
    pub krylov_basis: usize,
    pub krylov_keep: usize,
    pub krylov_max_restarts: usize,
    /// Residual tolerance relative to the operator scale.
    pub krylov_tol_rel: f64,
    /// Largest kernel the Krylov path will lock before giving up.
    pub max_kernel: usize,
    pub seed: u64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            method: Method::Auto,
            zero_threshold_rel: 1e-10,
            dense_limit: 1024,
            dense_max: 4096,
            krylov_basis: 120,
            krylov_keep: 24,
            krylov_max_restarts: 400,
            krylov_tol_rel: 1e-11,
            max_kernel: 512,
            seed: 0x5EED,
        }
    }
}

impl SolverSettings {
    fn use_dense(&self, dim: usize) -> Result<bool> {
        match self.method {
            Method::Dense if dim > self.dense_max => Err(Error::TooLarge(format!(
                "dense path limited to dimension {}, got {dim}",
                self.dense_max
            ))),
            Method::Dense => Ok(true),
            Method::Krylov => Ok(false),
            Method::Auto => Ok(dim <= self.dense_limit),
        }
    }

    fn lanczos(&self, scale: f64) -> LanczosParams {
        LanczosParams {
            basis: self.krylov_basis,
            keep: self.krylov_keep,
            max_restarts: self.krylov_max_restarts,
            tol: self.krylov_tol_rel * scale,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub dim: usize,
    pub ground_energy: f64,
    pub kernel_dim: usize,
    pub gap: f64,
    pub zero_threshold: f64,
    pub scale: f64,
    pub method: MethodUsed,
    /// `||A v - lambda v||` of the kernel vectors and the gap vector (Krylov path).
    pub residuals: Vec<f64>,
}

/// Orthonormal basis of the numerical kernel.
#[derive(Clone, Debug)]
pub struct KernelProjector {
    pub dim: usize,
    pub basis: Vec<Vec<C64>>,
    pub zero_threshold: f64,
    /// Smallest eigenvalue above the threshold, when one exists.
    pub gap: Option<f64>,
    pub method: MethodUsed,
    pub residuals: Vec<f64>,
}

impl KernelProjector {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// `K v`
    pub fn project(&self, v: &[C64]) -> Vec<C64> {
        let mut out = linalg::zeros(self.dim);
        for b in &self.basis {
            linalg::axpy(linalg::dot(b, v), b, &mut out);
        }
        out
    }

    /// `(1 - K) v`
    pub fn project_complement(&self, v: &[C64]) -> Vec<C64> {
        let mut out = v.to_vec();
        linalg::project_out(&self.basis, &mut out);
        out
    }

    /// Basis as matrix columns.
    pub fn matrix(&self) -> Mat<C64> {
        linalg::from_columns(self.dim, &self.basis)
    }

    /// Sine of the largest principal angle between the two kernels
    /// (1 when their dimensions differ).
    pub fn max_principal_sine(&self, other: &KernelProjector) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: other.dim,
            });
        }
        if self.rank() != other.rank() {
            return Ok(1.0);
        }
        if self.rank() == 0 {
            return Ok(0.0);
        }
        let one_way = |a: &KernelProjector, b: &KernelProjector| -> Result<f64> {
            let r: Vec<Vec<C64>> = b.basis.iter().map(|v| a.project_complement(v)).collect();
            let k = r.len();
            let g = Mat::<C64>::from_fn(k, k, |i, j| linalg::dot(&r[i], &r[j]));
            let top = linalg::eigvalsh(g.as_ref())?.last().copied().unwrap_or(0.0);
            Ok(top.max(0.0).sqrt())
        };
        Ok(one_way(self, other)?.max(one_way(other, self)?))
    }
}

/// `1 - K` as a linear map.
pub struct ComplementMap<'a>(pub &'a KernelProjector);

impl LinearMap for ComplementMap<'_> {
    fn dim(&self) -> usize {
        self.0.dim
    }
    fn apply_acc(&self, alpha: f64, x: &[C64], y: &mut [C64]) {
        let r = self.0.project_complement(x);
        linalg::axpy(C64::new(alpha, 0.0), &r, y);
    }
    fn scale_hint(&self) -> f64 {
        1.0
    }
}

fn check_hermitian(op: &dyn LinearMap) -> Result<()> {
    if !op.is_hermitian() {
        return Err(Error::Precondition("operator is not Hermitian".into()));
    }
    Ok(())
}

/// Scale used for relative tolerances; a PSD operator with zero diagonal is zero.
fn op_scale(op: &dyn LinearMap) -> f64 {
    op.scale_hint()
}

struct Decomposition {
    kernel: KernelProjector,
    kernel_dim: usize,
    ground_energy: f64,
    scale: f64,
}

/// Kernel, ground energy and gap of a PSD operator.
fn decompose(op: &dyn LinearMap, settings: &SolverSettings, want_vectors: bool) -> Result<Decomposition> {
    check_hermitian(op)?;
    let dim = op.dim();
    let scale = op_scale(op);
    let zt = settings.zero_threshold_rel * scale;
    let psd_tol = 1e-9 * scale;
    if scale == 0.0 {
        // zero operator (for PSD inputs): everything is kernel
        if !want_vectors {
            return Ok(Decomposition {
                kernel: KernelProjector {
                    dim,
                    basis: vec![],
                    zero_threshold: 0.0,
                    gap: None,
                    method: MethodUsed::Dense,
                    residuals: vec![],
                },
                kernel_dim: dim,
                ground_energy: 0.0,
                scale,
            });
        }
        if dim > settings.dense_max {
            return Err(Error::TooLarge(format!(
                "kernel of the zero operator has dimension {dim}"
            )));
        }
        let basis = (0..dim)
            .map(|i| {
                let mut e = linalg::zeros(dim);
                e[i] = C64::new(1.0, 0.0);
                e
            })
            .collect();
        return Ok(Decomposition {
            kernel: KernelProjector {
                dim,
                basis,
                zero_threshold: 0.0,
                gap: None,
                method: MethodUsed::Dense,
                residuals: vec![],
            },
            kernel_dim: dim,
            ground_energy: 0.0,
            scale,
        });
    }
    if settings.use_dense(dim)? {
        let m = materialize(op, settings.dense_max)?;
        let (values, basis) = if want_vectors {
            let e = linalg::eigh(m.as_ref())?;
            let k = e.values.iter().take_while(|&&v| v <= zt).count();
            let basis = (0..k).map(|c| e.vector(c)).collect();
            (e.values, basis)
        } else {
            (linalg::eigvalsh(m.as_ref())?, vec![])
        };
        let ground = values[0];
        if ground < -psd_tol {
            return Err(Error::NotPsd {
                min_eigenvalue: ground,
                tolerance: psd_tol,
            });
        }
        let kernel_dim = values.iter().take_while(|&&v| v <= zt).count();
        let gap = values.get(kernel_dim).copied();
        let kernel = KernelProjector {
            dim,
            basis,
            zero_threshold: zt,
            gap,
            method: MethodUsed::Dense,
            residuals: vec![],
        };
        return Ok(Decomposition {
            kernel,
            kernel_dim,
            ground_energy: ground,
            scale,
        });
    }

    let params = settings.lanczos(scale);
    let mut locked: Vec<Vec<C64>> = vec![];
    let mut residuals = vec![];
    let mut ground = f64::INFINITY;
    let mut run = 0u64;
    loop {
        let mut stream = Stream::new(derive_seed(settings.seed, run));
        run += 1;
        let pairs = extreme_pairs(op, &locked, End::Lowest, &params, &mut stream)?;
        let Some(first) = pairs.first() else {
            // the locked vectors span the whole space
            break Ok(Decomposition {
                kernel_dim: locked.len(),
                kernel: KernelProjector {
                    dim,
                    basis: locked,
                    zero_threshold: zt,
                    gap: None,
                    method: MethodUsed::Krylov,
                    residuals,
                },
                ground_energy: ground,
                scale,
            });
        };
        ground = ground.min(first.value);
        if first.value < -psd_tol {
            return Err(Error::NotPsd {
                min_eigenvalue: first.value,
                tolerance: psd_tol,
            });
        }
        if first.value > zt {
            residuals.push(first.residual);
            let gap = first.value;
            break Ok(Decomposition {
                kernel_dim: locked.len(),
                kernel: KernelProjector {
                    dim,
                    basis: locked,
                    zero_threshold: zt,
                    gap: Some(gap),
                    method: MethodUsed::Krylov,
                    residuals,
                },
                ground_energy: ground,
                scale,
            });
        }
        let fresh: Vec<Vec<C64>> = pairs
            .iter()
            .filter(|p| p.value <= zt)
            .map(|p| p.vector.clone())
            .collect();
        residuals.extend(pairs.iter().filter(|p| p.value <= zt).map(|p| p.residual));
        let before = locked.len();
        locked.extend(fresh);
        // Ritz vectors are orthonormal to each other and to the locked set up to
        // rounding; re-orthonormalize so rank counting stays exact
        locked = linalg::orthonormalize(locked, 1e-6);
        if locked.len() == before {
            return Err(Error::NoConvergence(
                "kernel vector collapsed onto the locked span".into(),
            ));
        }
        if locked.len() > settings.max_kernel {
            return Err(Error::TooLarge(format!(
                "kernel exceeds {} vectors",
                settings.max_kernel
            )));
        }
    }
}

fn separated(kernel: &KernelProjector) -> Result<()> {
    if let Some(gap) = kernel.gap {
        if gap < 10.0 * kernel.zero_threshold {
            return Err(Error::IllSeparatedKernel {
                gap,
                threshold: kernel.zero_threshold,
            });
        }
    }
    Ok(())
}

/// Ground energy, kernel dimension and gap of a PSD operator.
pub fn spectrum(op: &dyn LinearMap, settings: &SolverSettings) -> Result<SpectralReport> {
    let d = decompose(op, settings, false)?;
    let kernel_dim = d.kernel_dim;
    if d.scale == 0.0 {
        return Err(Error::UndefinedGap);
    }
    let gap = d.kernel.gap.ok_or(Error::UndefinedGap)?;
    separated(&d.kernel)?;
    let residuals = d.kernel.residuals.clone();
    Ok(SpectralReport {
        dim: op.dim(),
        ground_energy: d.ground_energy,
        kernel_dim,
        gap,
        zero_threshold: d.kernel.zero_threshold,
        scale: d.scale,
        method: d.kernel.method,
        residuals,
    })
}

/// Spectral gap only; `Error::UndefinedGap` for the zero operator.
pub fn gap(op: &dyn LinearMap, settings: &SolverSettings) -> Result<f64> {
    Ok(spectrum(op, settings)?.gap)
}

/// Orthonormal basis of the kernel of a PSD operator.
pub fn kernel_projector(op: &dyn LinearMap, settings: &SolverSettings) -> Result<KernelProjector> {
    let d = decompose(op, settings, true)?;
    separated(&d.kernel)?;
    Ok(d.kernel)
}

/// Outcome of an operator inequality `A >= B`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Dominance {
    pub holds: bool,
    /// Smallest eigenvalue of `A - B`.
    pub min_eigenvalue: f64,
    pub tolerance: f64,
    pub scale: f64,
    pub method: MethodUsed,
    pub residual: f64,
    /// Minimizing eigenvector when the inequality fails.
    #[serde(skip)]
    pub witness: Option<Vec<C64>>,
}

/// Checks `A >= B` as `min eig(A - B) >= -tol * scale`.
pub fn operator_dominates(
    a: &dyn LinearMap,
    b: &dyn LinearMap,
    tol: f64,
    settings: &SolverSettings,
) -> Result<Dominance> {
    check_hermitian(a)?;
    check_hermitian(b)?;
    let dim = a.dim();
    let diff = LinearCombination::new(dim, vec![(1.0, a), (-1.0, b)])?;
    let scale = a.scale_hint().max(b.scale_hint()).max(f64::MIN_POSITIVE);
    let threshold = tol * scale;
    let (min_eig, vector, residual, method) = if settings.use_dense(dim)? {
        let m = materialize(&diff, settings.dense_max)?;
        let e = linalg::eigh(m.as_ref())?;
        (e.values[0], e.vector(0), 0.0, MethodUsed::Dense)
    } else {
        let mut stream = Stream::new(settings.seed);
        let pairs = extreme_pairs(
            &diff,
            &[],
            End::Lowest,
            &settings.lanczos(scale),
            &mut stream,
        )?;
        let p = pairs.into_iter().next().ok_or(Error::Eigendecomposition)?;
        (p.value, p.vector, p.residual, MethodUsed::Krylov)
    };
    let holds = min_eig >= -threshold;
    Ok(Dominance {
        holds,
        min_eigenvalue: min_eig,
        tolerance: threshold,
        scale,
        method,
        residual,
        witness: (!holds).then_some(vector),
    })
}

/// Result of [`restricted_top_norm`].
#[derive(Clone, Debug)]
pub struct TopNorm {
    pub value: f64,
    /// Residual of the certifying eigenpair of `P^dagger P` (0 on the dense path).
    pub residual: f64,
    pub method: MethodUsed,
    pub vector: Vec<C64>,
}

/// `max ||P psi||^2` over unit `psi` in the complement of `kernel` (or over the
/// whole space when `kernel` is `None`), where `P = ops[0] ops[1] ...` is a
/// product of Hermitian factors.
pub fn restricted_top_norm(
    ops: &[&dyn LinearMap],
    dim: usize,
    kernel: Option<&KernelProjector>,
    settings: &SolverSettings,
) -> Result<TopNorm> {
    for op in ops {
        if op.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: op.dim(),
            });
        }
        check_hermitian(*op)?;
    }
    let locked: &[Vec<C64>] = kernel.map(|k| k.basis.as_slice()).unwrap_or(&[]);
    if locked.len() >= dim {
        return Ok(TopNorm {
            value: 0.0,
            residual: 0.0,
            method: MethodUsed::Dense,
            vector: linalg::zeros(dim),
        });
    }
    let product = crate::operator::Product::new(dim, ops.to_vec())?;
    let gram = product.gram()?;
    if settings.use_dense(dim)? {
        let m = materialize(&gram, settings.dense_max)?;
        let compressed = if locked.is_empty() {
            m
        } else {
            // (1 - K) M (1 - K)
            let k = linalg::from_columns(dim, locked);
            let id = linalg::identity(dim);
            let c = &id - &k * k.adjoint();
            &c * &m * &c
        };
        let sym = Mat::<C64>::from_fn(dim, dim, |i, j| {
            (compressed[(i, j)] + compressed[(j, i)].conj()) * 0.5
        });
        let e = linalg::eigh(sym.as_ref())?;
        return Ok(TopNorm {
            value: e.values[dim - 1].max(0.0),
            residual: 0.0,
            method: MethodUsed::Dense,
            vector: e.vector(dim - 1),
        });
    }
    let mut stream = Stream::new(settings.seed);
    let mut params = settings.lanczos(1.0);
    params.tol = params.tol.max(1e-10);
    let pairs = extreme_pairs(&gram, locked, End::Highest, &params, &mut stream)?;
    let p = pairs.into_iter().next().ok_or(Error::Eigendecomposition)?;
    Ok(TopNorm {
        value: p.value.max(0.0),
        residual: p.residual,
        method: MethodUsed::Krylov,
        vector: p.vector,
    })
}

/// Hex SHA-256 of a vector's little-endian `(re, im)` bytes; used to name witnesses.
pub fn vector_hash(v: &[C64]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for z in v {
        h.update(z.re.to_le_bytes());
        h.update(z.im.to_le_bytes());
    }
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{heisenberg_chain, magnon_gap_oracle};
    use crate::operator::{assemble_all, Boundary, DenseOperator};

    fn krylov() -> SolverSettings {
        SolverSettings {
            method: Method::Krylov,
            ..Default::default()
        }
    }

    #[test]
    fn single_projector_spectrum() {
        let h = heisenberg_chain(2, Boundary::Open).unwrap();
        let op = assemble_all(&h).unwrap();
        let r = spectrum(&op, &SolverSettings::default()).unwrap();
        assert_eq!(r.kernel_dim, 3);
        assert!((r.gap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn heisenberg_small_dense_and_krylov_agree() {
        for n in [3, 5, 7] {
            let op = assemble_all(&heisenberg_chain(n, Boundary::Open).unwrap()).unwrap();
            let d = spectrum(&op, &SolverSettings::default()).unwrap();
            let k = spectrum(&op, &krylov()).unwrap();
            let oracle = magnon_gap_oracle(n).unwrap();
            assert!((d.gap - oracle).abs() < 1e-10, "n={n}");
            assert!((k.gap - oracle).abs() < 1e-9, "n={n} {}", k.gap);
            assert_eq!(d.kernel_dim, n + 1);
            assert_eq!(k.kernel_dim, n + 1);
        }
    }

    #[test]
    fn zero_operator() {
        let z = DenseOperator::new(Mat::zeros(4, 4));
        assert!(matches!(
            spectrum(&z, &SolverSettings::default()),
            Err(Error::UndefinedGap)
        ));
        let k = kernel_projector(&z, &SolverSettings::default()).unwrap();
        assert_eq!(k.rank(), 4);
    }

    #[test]
    fn non_psd_rejected() {
        let mut m = Mat::<C64>::zeros(2, 2);
        m[(0, 0)] = C64::new(-1.0, 0.0);
        m[(1, 1)] = C64::new(1.0, 0.0);
        let op = DenseOperator::new(m);
        assert!(matches!(
            spectrum(&op, &SolverSettings::default()),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn dominance_witness() {
        let z = DenseOperator::new(Mat::zeros(4, 4));
        let p = assemble_all(&heisenberg_chain(2, Boundary::Open).unwrap()).unwrap();
        let d = operator_dominates(&z, &p, 1e-9, &SolverSettings::default()).unwrap();
        assert!(!d.holds);
        let w = d.witness.unwrap();
        let pw = p.apply_vec(&w);
        assert!(linalg::norm(&linalg::sub(&pw, &w)) < 1e-10);
        assert!(operator_dominates(&p, &p, 1e-9, &SolverSettings::default())
            .unwrap()
            .holds);
    }

    #[test]
    fn top_norm_trivial_cases() {
        let id = crate::operator::Identity(6);
        let t = restricted_top_norm(&[], 6, None, &SolverSettings::default()).unwrap();
        assert!((t.value - 1.0).abs() < 1e-12);
        let t = restricted_top_norm(&[&id], 6, None, &krylov()).unwrap();
        assert!((t.value - 1.0).abs() < 1e-10);
    }
}
