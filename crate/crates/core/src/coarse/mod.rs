//! Coarse graining of a chain into overlapping segments.

mod layout;

pub use layout::{segment_layout, Interval, SegmentLayout};

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::bounds::local_gap_1d;
use crate::chebyshev::{step_bound, step_poly, StepPolyParams};
use crate::layering::layer_lattice;
use crate::operator::{
    apply_product, assemble_all, Boundary, EmbeddedOperator, Embedding, LatticeHamiltonian,
    LinearCombination, LinearMap, LocalOp,
};
use crate::rng::Stream;
use crate::spectral::{
    kernel_projector, operator_dominates, restricted_top_norm, spectrum, KernelProjector,
    MethodUsed, SolverSettings,
};
use crate::{linalg, Error, Result, C64};

/// `Q` for one segment, kept as the low-rank kernel of `h_segment`.
pub struct SegmentProjector {
    pub interval: Interval,
    /// Number of terms of `h_segment`.
    pub num_terms: usize,
    pub kernel_rank: usize,
    /// `1 - Q` on the full space.
    pub keep: EmbeddedOperator,
    /// `Q` on the full space.
    pub q: EmbeddedOperator,
}

pub struct CoarseGrainedModel {
    pub layout: SegmentLayout,
    pub s: Vec<SegmentProjector>,
    pub t: Vec<SegmentProjector>,
    dim: usize,
}

impl CoarseGrainedModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `H-bar = sum (Q_S + Q_T)`.
    pub fn hbar(&self) -> Result<LinearCombination<'_>> {
        LinearCombination::sum(
            self.dim,
            self.s
                .iter()
                .chain(&self.t)
                .map(|p| &p.q as &dyn LinearMap),
        )
    }

    /// Factors of `DL(t) = prod (1 - Q_S) prod (1 - Q_T)`.
    pub fn dl_factors(&self) -> Vec<&dyn LinearMap> {
        self.s
            .iter()
            .chain(&self.t)
            .map(|p| &p.keep as &dyn LinearMap)
            .collect()
    }
}

fn require_chain(lattice: &LatticeHamiltonian) -> Result<()> {
    if lattice.num_axes() != 1 {
        return Err(Error::Precondition(format!(
            "coarse graining needs a chain, lattice has {} axes",
            lattice.num_axes()
        )));
    }
    Ok(())
}

/// Projector onto the complement of the ground space of `h` restricted to
/// `interval`.
pub fn segment_projector(
    lattice: &LatticeHamiltonian,
    interval: Interval,
    settings: &SolverSettings,
) -> Result<SegmentProjector> {
    require_chain(lattice)?;
    let n = lattice.axis_lengths()[0];
    let region = interval.region();
    let sites = lattice.region_sites(&region)?;
    let (sub, kept) = lattice.restrict(&region)?;
    let local_dim = sub.dim()?;
    let basis: Vec<Vec<C64>> = if sub.terms().iter().all(|t| t.is_zero()) {
        log::warn!("segment {} holds no terms, Q = 0", interval.label(n));
        (0..local_dim)
            .map(|i| {
                let mut e = linalg::zeros(local_dim);
                e[i] = C64::new(1.0, 0.0);
                e
            })
            .collect()
    } else {
        let h = assemble_all(&sub)?;
        kernel_projector(&h, settings)?.basis
    };
    let u = linalg::from_columns(local_dim, &basis);
    let emb = Embedding::new(lattice.site_dims(), &sites)?;
    let keep = EmbeddedOperator::new(emb, LocalOp::LowRank(u), false)?;
    let q = keep.complemented();
    Ok(SegmentProjector {
        interval,
        num_terms: kept.len(),
        kernel_rank: basis.len(),
        keep,
        q,
    })
}

pub fn coarse_grain(
    lattice: &LatticeHamiltonian,
    layout: &SegmentLayout,
    settings: &SolverSettings,
) -> Result<CoarseGrainedModel> {
    require_chain(lattice)?;
    let n = lattice.axis_lengths()[0];
    if n != layout.n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: layout.n,
        });
    }
    if layout.boundary != lattice.boundary()[0] {
        return Err(Error::Precondition(format!(
            "layout is for a {} chain, lattice is {}",
            layout.boundary,
            lattice.boundary()[0]
        )));
    }
    let s = layout
        .s
        .iter()
        .map(|&i| segment_projector(lattice, i, settings))
        .collect::<Result<Vec<_>>>()?;
    let t = layout
        .t_sets
        .iter()
        .flatten()
        .map(|&i| segment_projector(lattice, i, settings))
        .collect::<Result<Vec<_>>>()?;
    Ok(CoarseGrainedModel {
        layout: layout.clone(),
        s,
        t,
        dim: lattice.dim()?,
    })
}

pub const LINK_TOL: f64 = 1e-9;
/// Largest principal-angle sine accepted between the two kernels.
pub const KERNEL_SINE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapLinkReport {
    pub n: usize,
    pub t: usize,
    pub gamma: f64,
    pub gamma_t: f64,
    pub gamma_hbar: f64,
    /// `2 gamma / gamma(t)`
    pub scalar_rhs: f64,
    pub scalar_holds: bool,
    /// Smallest eigenvalue of `(2/gamma(t)) H - H-bar`.
    pub operator_min_eigenvalue: f64,
    pub operator_holds: bool,
    /// Largest principal-angle sine between the kernels of `H` and `H-bar`.
    pub kernel_sine: f64,
    pub kernel_dim: usize,
    pub tolerance: f64,
    pub holds: bool,
}

/// `H-bar <= (2/gamma(t)) H` and `gamma(H-bar) <= 2 gamma / gamma(t)`.
pub fn gap_link_check(
    lattice: &LatticeHamiltonian,
    layout: &SegmentLayout,
    settings: &SolverSettings,
) -> Result<GapLinkReport> {
    let cg = coarse_grain(lattice, layout, settings)?;
    let h = assemble_all(lattice)?;
    let kernel = kernel_projector(&h, settings)?;
    let gamma = kernel.gap.ok_or(Error::UndefinedGap)?;
    let gamma_t = local_gap_1d(lattice, layout.t, settings)?;
    let hbar = cg.hbar()?;
    let hbar_kernel = kernel_projector(&hbar, settings)?;
    let gamma_hbar = hbar_kernel.gap.ok_or(Error::UndefinedGap)?;
    let scalar_rhs = 2.0 * gamma / gamma_t;
    let scalar_holds = gamma_hbar <= scalar_rhs + LINK_TOL;
    let scaled = LinearCombination::new(h.dim(), vec![(2.0 / gamma_t, &h as &dyn LinearMap)])?;
    let dom = operator_dominates(&scaled, &hbar, LINK_TOL / scaled.scale_hint().max(1.0), settings)?;
    let operator_holds = dom.min_eigenvalue >= -LINK_TOL;
    let kernel_sine = kernel.max_principal_sine(&hbar_kernel)?;
    Ok(GapLinkReport {
        n: layout.n,
        t: layout.t,
        gamma,
        gamma_t,
        gamma_hbar,
        scalar_rhs,
        scalar_holds,
        operator_min_eigenvalue: dom.min_eigenvalue,
        operator_holds,
        kernel_sine,
        kernel_dim: kernel.rank(),
        tolerance: LINK_TOL,
        holds: scalar_holds && operator_holds && kernel_sine <= KERNEL_SINE_TOL,
    })
}

/// Upper half of the light-cone inequality; only asserted in its regime.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepUpper {
    pub m: f64,
    pub nu: f64,
    /// `max Step(x)` sampled on `(0, 1 - nu)`.
    pub step_max: f64,
    pub step_bound: f64,
    pub in_regime: bool,
    /// `None` when not asserted.
    pub holds: Option<bool>,
    pub note: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LightconeReport {
    pub t: usize,
    #[serde(rename = "L")]
    pub num_layers: usize,
    pub g: usize,
    pub gamma: f64,
    pub gamma_hbar: f64,
    /// `max_{psi in G-perp} ||DL(t) psi||^2`
    pub lhs: f64,
    /// `1 - 3 gamma(H-bar)`
    pub lower: f64,
    pub lower_holds: bool,
    pub upper: Option<StepUpper>,
    pub method: MethodUsed,
    pub tolerance: f64,
    pub holds: bool,
}

const STEP_SAMPLES: usize = 10_000;

/// `1 - 3 gamma(H-bar) <= max_{G-perp} ||DL(t) psi||^2`, plus the Chebyshev
/// upper bound when `t >= 8 L^2` and `nu <= 1/4`.
pub fn lightcone_lower_check(
    lattice: &LatticeHamiltonian,
    layout: &SegmentLayout,
    settings: &SolverSettings,
) -> Result<LightconeReport> {
    let layers = layer_lattice(lattice)?;
    let cg = coarse_grain(lattice, layout, settings)?;
    let h = assemble_all(lattice)?;
    let kernel = kernel_projector(&h, settings)?;
    let gamma = kernel.gap.ok_or(Error::UndefinedGap)?;
    let hbar = cg.hbar()?;
    let gamma_hbar = spectrum(&hbar, settings)?.gap;
    let top = restricted_top_norm(&cg.dl_factors(), cg.dim(), Some(&kernel), settings)?;
    let lower = 1.0 - 3.0 * gamma_hbar;
    let lower_holds = top.value >= lower - LINK_TOL;
    let upper = step_upper(layout.t, layers.num_layers, layers.g, gamma, top.value);
    let upper_ok = upper.as_ref().and_then(|u| u.holds).unwrap_or(true);
    Ok(LightconeReport {
        t: layout.t,
        num_layers: layers.num_layers,
        g: layers.g,
        gamma,
        gamma_hbar,
        lhs: top.value,
        lower,
        lower_holds,
        upper,
        method: top.method,
        tolerance: LINK_TOL,
        holds: lower_holds && upper_ok,
    })
}

fn step_upper(t: usize, num_layers: usize, g: usize, gamma: f64, lhs: f64) -> Option<StepUpper> {
    if g == 0 || num_layers == 0 {
        return None;
    }
    let m = t as f64 / (8.0 * num_layers as f64);
    let nu = gamma / ((g * g) as f64 + gamma);
    let Ok(p) = StepPolyParams::new(m, nu) else {
        return Some(StepUpper {
            m,
            nu,
            step_max: f64::NAN,
            step_bound: f64::NAN,
            in_regime: false,
            holds: None,
            note: format!("nu = {nu:.4} outside (0, 1/4]"),
        });
    };
    let right = 1.0 - nu;
    let step_max = (1..=STEP_SAMPLES)
        .map(|i| step_poly(&p, right * i as f64 / (STEP_SAMPLES + 1) as f64))
        .fold(f64::NEG_INFINITY, f64::max);
    let in_regime = t >= 8 * num_layers * num_layers;
    Some(StepUpper {
        m,
        nu,
        step_max,
        step_bound: step_bound(&p),
        in_regime,
        holds: in_regime.then_some(lhs <= step_max + LINK_TOL),
        note: if in_regime {
            "asserted".into()
        } else {
            format!("not in regime: t = {t} < 8 L^2 = {}", 8 * num_layers * num_layers)
        },
    })
}

pub const ABSORPTION_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AbsorptionReport {
    pub s: Interval,
    #[serde(rename = "T")]
    pub t: Interval,
    pub q: usize,
    #[serde(rename = "L")]
    pub num_layers: usize,
    pub overlap: usize,
    /// `q (2L - 2) + 1`
    pub layer_operators: usize,
    pub probes: usize,
    pub seed: u64,
    pub max_residual: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// Returns `q (2L - 2) + 1`, which must stay below the overlap when `q > 0`.
pub fn absorption_precondition(num_layers: usize, overlap: usize, q: usize) -> Result<usize> {
    let layer_operators = q * (2 * num_layers).saturating_sub(2) + 1;
    if q > 0 && layer_operators >= overlap {
        return Err(Error::Precondition(format!(
            "q (2L - 2) + 1 = {layer_operators} is not below the overlap {overlap}"
        )));
    }
    Ok(layer_operators)
}

/// Probes `(1 - Q_S) (DL^dagger DL)^q (1 - Q_T) = (1 - Q_S)(1 - Q_T)` with
/// random unit vectors, where `DL` is built from the terms inside `S u T`
/// using the lattice's layering.
pub fn absorption_check(
    lattice: &LatticeHamiltonian,
    s: Interval,
    t: Interval,
    q: usize,
    probes: usize,
    seed: u64,
    settings: &SolverSettings,
) -> Result<AbsorptionReport> {
    require_chain(lattice)?;
    let n = lattice.axis_lengths()[0];
    let layers = layer_lattice(lattice)?;
    let big_l = layers.num_layers;
    let overlap = s.overlap(&t, n);
    let layer_operators = absorption_precondition(big_l, overlap, q)?;
    let max_residual = absorption_residual(lattice, s, t, q, probes, seed, settings)?;
    Ok(AbsorptionReport {
        s,
        t,
        q,
        num_layers: big_l,
        overlap,
        layer_operators,
        probes,
        seed,
        max_residual,
        tolerance: ABSORPTION_TOL,
        holds: max_residual <= ABSORPTION_TOL,
    })
}

/// Largest probe residual of the absorption identity, without the overlap
/// precondition.
pub fn absorption_residual(
    lattice: &LatticeHamiltonian,
    s: Interval,
    t: Interval,
    q: usize,
    probes: usize,
    seed: u64,
    settings: &SolverSettings,
) -> Result<f64> {
    require_chain(lattice)?;
    let n = lattice.axis_lengths()[0];
    let layers = layer_lattice(lattice)?;
    let ps = segment_projector(lattice, s, settings)?;
    let pt = segment_projector(lattice, t, settings)?;
    let mut union = s.sites(n);
    union.extend(t.sites(n));
    let inside = |k: usize| {
        lattice
            .term_support_flat(k)
            .iter()
            .all(|&f| union.contains(&(f + 1)))
    };
    // one list of `1 - P` factors per layer, restricted to the union
    let mut layer_factors: Vec<Vec<EmbeddedOperator>> = vec![];
    for layer in &layers.layers {
        let mut fs = vec![];
        for &k in layer.iter().filter(|&&k| inside(k)) {
            if !lattice.terms()[k].is_projector {
                return Err(Error::Precondition(format!("term {k} is not a projector")));
            }
            fs.push(lattice.embedded_term(k, true)?);
        }
        layer_factors.push(fs);
    }
    // DL^dagger DL = DL_L .. DL_1 DL_1 .. DL_L
    let mut gram: Vec<&dyn LinearMap> = vec![];
    for fs in layer_factors.iter().rev() {
        gram.extend(fs.iter().map(|f| f as &dyn LinearMap));
    }
    for fs in &layer_factors {
        gram.extend(fs.iter().map(|f| f as &dyn LinearMap));
    }
    let mut lhs_ops: Vec<&dyn LinearMap> = vec![&ps.keep];
    for _ in 0..q {
        lhs_ops.extend(gram.iter().copied());
    }
    lhs_ops.push(&pt.keep);
    let rhs_ops: Vec<&dyn LinearMap> = vec![&ps.keep, &pt.keep];
    let dim = lattice.dim()?;
    let mut stream = Stream::new(seed);
    let mut max_residual: f64 = 0.0;
    for _ in 0..probes {
        let v = stream.unit_vector(dim);
        let a = apply_product(&lhs_ops, &v)?;
        let b = apply_product(&rhs_ops, &v)?;
        max_residual = max_residual.max(linalg::norm(&linalg::sub(&a, &b)));
    }
    Ok(max_residual)
}

/// Dense `Q` of a segment on the full space; for tests on small chains.
pub fn dense_q(p: &SegmentProjector, limit: usize) -> Result<Mat<C64>> {
    crate::operator::materialize(&p.q, limit)
}

/// Convenience: kernel of `H` on the full chain.
pub fn ground_space(lattice: &LatticeHamiltonian, settings: &SolverSettings) -> Result<KernelProjector> {
    kernel_projector(&assemble_all(lattice)?, settings)
}

/// Layout with a single segment when `t = n`, the regular one otherwise.
pub fn layout_for(n: usize, t: usize, boundary: Boundary) -> Result<SegmentLayout> {
    if t == n {
        Ok(SegmentLayout::whole(n, boundary))
    } else {
        segment_layout(n, t, boundary)
    }
}
