//! Detectability-lemma operators and the inequalities relating them to `H`.

mod jordan;

pub use jordan::{
    claim_boundary_probe, jordan_decompose, random_projector, verify_random_pairs,
    verify_two_dim_claim, BoundaryProbe, JordanBlock, JordanBlocks, JordanPairsReport,
    TwoDimClaimReport, JORDAN_TOL, NU_MAX,
};

use serde::{Deserialize, Serialize};

use crate::layering::{layer_lattice, LayerAssignment};
use crate::operator::{
    assemble_all, EmbeddedOperator, Identity, LatticeHamiltonian, LinearCombination, LinearMap,
    Product,
};
use crate::spectral::{
    kernel_projector, operator_dominates, restricted_top_norm, vector_hash, MethodUsed,
    SolverSettings,
};
use crate::{Error, Result};

/// Ordered product of `1 - P` factors, grouped by layer (layer 1 leftmost).
pub struct DlOperator {
    dim: usize,
    factors: Vec<EmbeddedOperator>,
    /// Index ranges into `factors`, one per layer.
    layer_ranges: Vec<std::ops::Range<usize>>,
    /// Source term of each factor.
    terms: Vec<usize>,
}

impl DlOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_layers(&self) -> usize {
        self.layer_ranges.len()
    }

    pub fn terms(&self) -> &[usize] {
        &self.terms
    }

    /// All factors in product order.
    pub fn factors(&self) -> Vec<&dyn LinearMap> {
        self.factors.iter().map(|f| f as &dyn LinearMap).collect()
    }

    /// Factors of layer `alpha` (0-based).
    pub fn layer_factors(&self, alpha: usize) -> Vec<&dyn LinearMap> {
        self.factors[self.layer_ranges[alpha].clone()]
            .iter()
            .map(|f| f as &dyn LinearMap)
            .collect()
    }

    /// Same operator with the factors of every layer in reversed order.
    pub fn with_reversed_layers(&self) -> Vec<&dyn LinearMap> {
        self.layer_ranges
            .iter()
            .flat_map(|r| self.factors[r.clone()].iter().rev().map(|f| f as &dyn LinearMap))
            .collect()
    }

    pub fn product(&self) -> Result<Product<'_>> {
        Product::new(self.dim, self.factors())
    }
}

/// `DL(H)` for the given layering. Every term in a layer must be a projector.
pub fn build_dl(lattice: &LatticeHamiltonian, layers: &LayerAssignment) -> Result<DlOperator> {
    let dim = lattice.dim()?;
    let mut factors = vec![];
    let mut ranges = vec![];
    let mut terms = vec![];
    for layer in &layers.layers {
        let start = factors.len();
        for &k in layer {
            if !lattice.terms()[k].is_projector {
                return Err(Error::Precondition(format!(
                    "term {k} is not flagged as a projector"
                )));
            }
            factors.push(lattice.embedded_term(k, true)?);
            terms.push(k);
        }
        ranges.push(start..factors.len());
    }
    Ok(DlOperator {
        dim,
        factors,
        layer_ranges: ranges,
        terms,
    })
}

/// Right-hand side `1/(1 + gamma/g^2)`, taken as 0 when `g = 0`.
pub fn detectability_rhs(gamma: f64, g: usize) -> f64 {
    if g == 0 {
        0.0
    } else {
        1.0 / (1.0 + gamma / (g * g) as f64)
    }
}

pub const DETECTABILITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetectabilityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
    pub gamma: f64,
    pub g: usize,
    #[serde(rename = "L")]
    pub num_layers: usize,
    pub kernel_dim: usize,
    pub tolerance: f64,
    pub method: MethodUsed,
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

/// `max_{psi in G-perp} ||DL psi||^2 <= 1/(1 + gamma/g^2)`.
pub fn verify_detectability(
    lattice: &LatticeHamiltonian,
    settings: &SolverSettings,
) -> Result<DetectabilityReport> {
    let layers = layer_lattice(lattice)?;
    let h = assemble_all(lattice)?;
    let kernel = kernel_projector(&h, settings)?;
    let gamma = kernel.gap.ok_or(Error::UndefinedGap)?;
    let dl = build_dl(lattice, &layers)?;
    let top = restricted_top_norm(&dl.factors(), dl.dim(), Some(&kernel), settings)?;
    let rhs = detectability_rhs(gamma, layers.g);
    let holds = top.value <= rhs + DETECTABILITY_TOL;
    Ok(DetectabilityReport {
        lhs: top.value,
        rhs,
        margin: rhs - top.value,
        holds,
        gamma,
        g: layers.g,
        num_layers: layers.num_layers,
        kernel_dim: kernel.rank(),
        tolerance: DETECTABILITY_TOL,
        method: top.method,
        residual: top.residual,
        witness: (!holds).then(|| vector_hash(&top.vector)),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConverseReport {
    pub constant: f64,
    /// Smallest eigenvalue of `DL^dagger DL - 1 + c H`.
    pub min_eigenvalue: f64,
    pub tolerance: f64,
    pub holds: bool,
    #[serde(rename = "L")]
    pub num_layers: usize,
    pub method: MethodUsed,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

pub const CONVERSE_TOL: f64 = 1e-9;

/// `DL^dagger DL >= 1 - c H` with `c = 4` in general or `c = 3` when `L = 2`.
pub fn verify_converse(
    lattice: &LatticeHamiltonian,
    constant: u32,
    settings: &SolverSettings,
) -> Result<ConverseReport> {
    let layers = layer_lattice(lattice)?;
    match constant {
        4 => {}
        3 if layers.num_layers <= 2 => {}
        3 => {
            return Err(Error::Precondition(format!(
                "constant 3 needs L = 2, the layering has L = {}",
                layers.num_layers
            )))
        }
        c => return Err(Error::InvalidParameter(format!("constant must be 3 or 4, got {c}"))),
    }
    let h = assemble_all(lattice)?;
    let dim = h.dim();
    let dl = build_dl(lattice, &layers)?;
    let product = dl.product()?;
    let gram = product.gram()?;
    let id = Identity(dim);
    let c = constant as f64;
    let rhs = LinearCombination::new(dim, vec![(1.0, &id as &dyn LinearMap), (-c, &h)])?;
    // the tolerance is absolute: scale the relative tolerance back out
    let scale = gram.scale_hint().max(rhs.scale_hint());
    let dom = operator_dominates(&gram, &rhs, CONVERSE_TOL / scale, settings)?;
    let holds = dom.min_eigenvalue >= -CONVERSE_TOL;
    Ok(ConverseReport {
        constant: c,
        min_eigenvalue: dom.min_eigenvalue,
        tolerance: CONVERSE_TOL,
        holds,
        num_layers: layers.num_layers,
        method: dom.method,
        witness: dom.witness.as_deref().filter(|_| !holds).map(vector_hash),
    })
}
