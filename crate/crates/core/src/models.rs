//! Bundled model constructors.

use std::path::PathBuf;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::operator::{file, Boundary, LatticeHamiltonian, LocalTerm, SiteIndex};
use crate::rng::Stream;
use crate::{Error, Result, C64};

/// Projector onto the two-qubit singlet `(|01> - |10>)/sqrt(2)`.
pub fn singlet_projector() -> Mat<C64> {
    let mut m = Mat::<C64>::zeros(4, 4);
    m[(1, 1)] = C64::new(0.5, 0.0);
    m[(2, 2)] = C64::new(0.5, 0.0);
    m[(1, 2)] = C64::new(-0.5, 0.0);
    m[(2, 1)] = C64::new(-0.5, 0.0);
    m
}

/// `|1><1|` on one qubit.
pub fn excited_projector() -> Mat<C64> {
    let mut m = Mat::<C64>::zeros(2, 2);
    m[(1, 1)] = C64::new(1.0, 0.0);
    m
}

fn singlet_term(a: SiteIndex, b: SiteIndex) -> LocalTerm {
    LocalTerm::projector(vec![a, b], singlet_projector()).expect("singlet projector is valid")
}

/// Ferromagnetic Heisenberg chain: a singlet projector on every nearest-neighbour
/// pair, plus the pair `(n, 1)` when periodic.
pub fn heisenberg_chain(n: usize, boundary: Boundary) -> Result<LatticeHamiltonian> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("heisenberg chain needs n >= 2, got {n}")));
    }
    if boundary == Boundary::Periodic && n < 3 {
        return Err(Error::InvalidParameter(
            "periodic heisenberg chain needs n >= 3".into(),
        ));
    }
    let mut h = LatticeHamiltonian::uniform(vec![n], 2, vec![boundary])?;
    for i in 1..n {
        h.push_term(singlet_term(SiteIndex::chain(i), SiteIndex::chain(i + 1)))?;
    }
    if boundary == Boundary::Periodic {
        h.push_term(singlet_term(SiteIndex::chain(n), SiteIndex::chain(1)))?;
    }
    Ok(h)
}

/// Exact open-chain ferromagnet gap from the one-magnon block, which is half
/// the path-graph Laplacian. Uses no operator assembly.
pub fn magnon_gap_oracle(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("magnon oracle needs n >= 2, got {n}")));
    }
    let lap = Mat::<f64>::from_fn(n, n, |i, j| {
        if i == j {
            let degree = if i == 0 || i == n - 1 { 1.0 } else { 2.0 };
            0.5 * degree
        } else if i.abs_diff(j) == 1 {
            -0.5
        } else {
            0.0
        }
    });
    let (values, _) = linalg::eigh_real(lap.as_ref())?;
    values
        .into_iter()
        .find(|&v| v > 1e-12)
        .ok_or(Error::UndefinedGap)
}

/// `n_2 * ... * n_D` independent ferromagnetic chains running along axis 1.
pub fn decoupled_ferro_lattice(axis_lengths: &[usize]) -> Result<LatticeHamiltonian> {
    if axis_lengths.is_empty() || axis_lengths[0] < 2 {
        return Err(Error::InvalidParameter(
            "decoupled lattice needs n_1 >= 2".into(),
        ));
    }
    let d = axis_lengths.len();
    let mut h = LatticeHamiltonian::uniform(axis_lengths.to_vec(), 2, vec![Boundary::Open; d])?;
    for flat in 0..h.num_sites() {
        let s = h.site(flat);
        if s.0[0] < axis_lengths[0] {
            let mut next = s.clone();
            next.0[0] += 1;
            h.push_term(singlet_term(s, next))?;
        }
    }
    Ok(h)
}

/// Ferromagnet on qubits `1..k` and `|1><1|` on each of qubits `k+1..n`.
/// Qubits `k` and `k+1` are not coupled.
pub fn mixed_chain(n: usize, k: usize) -> Result<LatticeHamiltonian> {
    if k < 1 || k > n || n < 2 {
        return Err(Error::InvalidParameter(format!(
            "mixed chain needs 1 <= k <= n and n >= 2, got n = {n}, k = {k}"
        )));
    }
    let mut h = LatticeHamiltonian::uniform(vec![n], 2, vec![Boundary::Open])?;
    for i in 1..k {
        h.push_term(singlet_term(SiteIndex::chain(i), SiteIndex::chain(i + 1)))?;
    }
    for i in k + 1..=n {
        h.push_term(LocalTerm::projector(
            vec![SiteIndex::chain(i)],
            excited_projector(),
        )?)?;
    }
    Ok(h)
}

/// Supports of all hypercubic cells with side `side` (clipped to short axes),
/// in row-major order of their lowest corner.
pub fn cell_supports(lattice: &LatticeHamiltonian, side: usize) -> Vec<Vec<SiteIndex>> {
    let d = lattice.num_axes();
    let n = lattice.axis_lengths();
    let sides: Vec<usize> = n.iter().map(|&len| side.min(len)).collect();
    let starts: Vec<usize> = (0..d)
        .map(|a| match lattice.boundary()[a] {
            Boundary::Periodic if sides[a] < n[a] => n[a],
            _ => n[a] - sides[a] + 1,
        })
        .collect();
    let cell_count: usize = sides.iter().product();
    let mut out = vec![];
    let total: usize = starts.iter().product();
    for idx in 0..total {
        let mut rem = idx;
        let mut corner = vec![0usize; d];
        for a in (0..d).rev() {
            corner[a] = rem % starts[a] + 1;
            rem /= starts[a];
        }
        let mut support = Vec::with_capacity(cell_count);
        for c in 0..cell_count {
            let mut rem = c;
            let mut coords = vec![0isize; d];
            for a in (0..d).rev() {
                coords[a] = (corner[a] + rem % sides[a]) as isize;
                rem /= sides[a];
            }
            support.push(lattice.wrap(&coords).expect("cell inside lattice"));
        }
        out.push(support);
    }
    out
}

/// A random frustration-free model and the product state it annihilates.
pub struct RandomFfModel {
    pub lattice: LatticeHamiltonian,
    /// One normalized local vector per flat site.
    pub product_state: Vec<Vec<C64>>,
}

impl RandomFfModel {
    /// The product state as a global vector (site 0 most significant).
    pub fn state_vector(&self) -> Vec<C64> {
        let mut v = vec![C64::new(1.0, 0.0)];
        for phi in &self.product_state {
            v = v
                .iter()
                .flat_map(|&a| phi.iter().map(move |&b| a * b))
                .collect();
        }
        v
    }
}

/// Random frustration-free model: draws a product state `Omega` and puts on every
/// cell a rank-`excluded_rank` projector onto a random subspace orthogonal to
/// the restriction of `Omega`, so every term annihilates `Omega`.
pub fn random_frustration_free(
    axis_lengths: &[usize],
    boundary: Boundary,
    range: usize,
    excluded_rank: usize,
    site_dim: usize,
    seed: u64,
) -> Result<RandomFfModel> {
    if range < 1 {
        return Err(Error::InvalidParameter("interaction range must be >= 1".into()));
    }
    let d = axis_lengths.len();
    let mut h = LatticeHamiltonian::uniform(axis_lengths.to_vec(), site_dim, vec![boundary; d])?;
    let mut stream = Stream::new(seed);
    let product_state: Vec<Vec<C64>> = (0..h.num_sites())
        .map(|_| stream.unit_vector(site_dim))
        .collect();
    for support in cell_supports(&h, range) {
        let flat: Vec<usize> = support
            .iter()
            .map(|s| h.flat_index(s))
            .collect::<Result<_>>()?;
        let mut omega = vec![C64::new(1.0, 0.0)];
        for &s in &flat {
            omega = omega
                .iter()
                .flat_map(|&a| product_state[s].iter().map(move |&b| a * b))
                .collect();
        }
        let m = omega.len();
        if excluded_rank == 0 || excluded_rank >= m {
            return Err(Error::InvalidParameter(format!(
                "excluded rank {excluded_rank} infeasible for local dimension {m}"
            )));
        }
        let mut cols = Vec::with_capacity(excluded_rank);
        while cols.len() < excluded_rank {
            let mut v = stream.complex_vector(m);
            linalg::project_out(std::slice::from_ref(&omega), &mut v);
            linalg::project_out(&cols, &mut v);
            if linalg::normalize(&mut v) > 1e-6 {
                linalg::project_out(std::slice::from_ref(&omega), &mut v);
                linalg::project_out(&cols, &mut v);
                linalg::normalize(&mut v);
                cols.push(v);
            }
        }
        let u = linalg::from_columns(m, &cols);
        let p = linalg::projector_from_columns(u.as_ref());
        h.push_term(LocalTerm::projector(support, p)?)?;
    }
    Ok(RandomFfModel {
        lattice: h,
        product_state,
    })
}

fn default_boundary() -> Boundary {
    Boundary::Open
}

fn default_range() -> usize {
    2
}

fn default_site_dim() -> usize {
    2
}

/// Declarative model description used by configs and the CLI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    HeisenbergChain {
        n: usize,
        #[serde(default = "default_boundary")]
        boundary: Boundary,
    },
    DecoupledFerroLattice {
        axis_lengths: Vec<usize>,
    },
    MixedChain {
        n: usize,
        k: usize,
    },
    RandomFf {
        axis_lengths: Vec<usize>,
        #[serde(default = "default_boundary")]
        boundary: Boundary,
        #[serde(default = "default_range")]
        range: usize,
        excluded_rank: usize,
        #[serde(default = "default_site_dim")]
        site_dim: usize,
        seed: u64,
    },
    File {
        path: PathBuf,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<LatticeHamiltonian> {
        match self {
            ModelSpec::HeisenbergChain { n, boundary } => heisenberg_chain(*n, *boundary),
            ModelSpec::DecoupledFerroLattice { axis_lengths } => {
                decoupled_ferro_lattice(axis_lengths)
            }
            ModelSpec::MixedChain { n, k } => mixed_chain(*n, *k),
            ModelSpec::RandomFf {
                axis_lengths,
                boundary,
                range,
                excluded_rank,
                site_dim,
                seed,
            } => Ok(random_frustration_free(
                axis_lengths,
                *boundary,
                *range,
                *excluded_rank,
                *site_dim,
                *seed,
            )?
            .lattice),
            ModelSpec::File { path } => file::load(path),
        }
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match self {
            ModelSpec::HeisenbergChain { n, boundary } => format!("heisenberg_chain(n={n}, {boundary})"),
            ModelSpec::DecoupledFerroLattice { axis_lengths } => {
                format!("decoupled_ferro_lattice({axis_lengths:?})")
            }
            ModelSpec::MixedChain { n, k } => format!("mixed_chain(n={n}, k={k})"),
            ModelSpec::RandomFf {
                axis_lengths,
                boundary,
                range,
                excluded_rank,
                site_dim,
                seed,
            } => format!(
                "random_ff({axis_lengths:?}, {boundary}, range={range}, rank={excluded_rank}, d={site_dim}, seed={seed})"
            ),
            ModelSpec::File { path } => format!("file({})", path.display()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn magnon_small_values() {
        assert!((magnon_gap_oracle(2).unwrap() - 1.0).abs() < 1e-12);
        assert!((magnon_gap_oracle(3).unwrap() - 0.5).abs() < 1e-12);
        let expect = 1.0 - (std::f64::consts::PI / 4.0).cos();
        assert!((magnon_gap_oracle(4).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn magnon_large_n_matches_asymptotic() {
        let n = 100.0;
        let asym = std::f64::consts::PI.powi(2) / (2.0 * n * n);
        let g = magnon_gap_oracle(100).unwrap();
        assert!((g - asym).abs() / asym < 0.01);
    }

    #[test]
    fn heisenberg_term_counts() {
        assert_eq!(heisenberg_chain(5, Boundary::Open).unwrap().terms().len(), 4);
        assert_eq!(heisenberg_chain(5, Boundary::Periodic).unwrap().terms().len(), 5);
        assert!(heisenberg_chain(1, Boundary::Open).is_err());
    }

    #[test]
    fn mixed_chain_index_ranges() {
        let h = mixed_chain(6, 3).unwrap();
        let supports: Vec<Vec<usize>> = h
            .terms()
            .iter()
            .map(|t| t.support.iter().map(|s| s.0[0]).collect())
            .collect();
        assert_eq!(supports, vec![vec![1, 2], vec![2, 3], vec![4], vec![5], vec![6]]);
        assert!(mixed_chain(4, 0).is_err());
        assert!(mixed_chain(4, 5).is_err());
    }

    #[test]
    fn plaquette_cells_on_open_square() {
        let h = LatticeHamiltonian::uniform(vec![3, 3], 2, vec![Boundary::Open; 2]).unwrap();
        let cells = cell_supports(&h, 2);
        assert_eq!(cells.len(), 4);
        assert_eq!(
            cells[0],
            vec![
                SiteIndex(vec![1, 1]),
                SiteIndex(vec![1, 2]),
                SiteIndex(vec![2, 1]),
                SiteIndex(vec![2, 2])
            ]
        );
    }

    #[test]
    fn random_model_is_deterministic() {
        let a = random_frustration_free(&[5], Boundary::Open, 2, 2, 2, 11).unwrap();
        let b = random_frustration_free(&[5], Boundary::Open, 2, 2, 2, 11).unwrap();
        assert_eq!(a.lattice, b.lattice);
        let c = random_frustration_free(&[5], Boundary::Open, 2, 2, 2, 12).unwrap();
        assert_ne!(a.lattice, c.lattice);
    }

    #[test]
    fn random_rank_infeasible() {
        assert!(random_frustration_free(&[3], Boundary::Open, 2, 4, 2, 0).is_err());
        assert!(random_frustration_free(&[3], Boundary::Open, 2, 0, 2, 0).is_err());
    }

    #[test]
    fn spec_roundtrip() {
        let s: ModelSpec =
            serde_json::from_str(r#"{"kind":"mixed_chain","n":12,"k":4}"#).unwrap();
        assert_eq!(s, ModelSpec::MixedChain { n: 12, k: 4 });
        assert!(serde_json::from_str::<ModelSpec>(r#"{"kind":"mixed_chain","n":12}"#).is_err());
    }
}
