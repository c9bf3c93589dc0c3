//! Non-commutation graph of the local terms and a greedy layering into
//! mutually commuting groups.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::operator::{materialize, EmbeddedOperator, Embedding, LatticeHamiltonian, LocalOp};
use crate::{Error, Result, C64};

/// Commutators with Frobenius norm above this are treated as nonzero.
pub const COMMUTATOR_TOL: f64 = 1e-10;

/// A local term seen as flat support plus matrix.
#[derive(Clone, Copy)]
pub struct TermRef<'a> {
    pub support: &'a [usize],
    pub matrix: &'a Mat<C64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoncommutationGraph {
    /// Sorted neighbour lists, one per term.
    pub adjacency: Vec<Vec<usize>>,
    /// Terms with identically zero matrix; they take part in no layer.
    pub zero_terms: Vec<usize>,
}

impl NoncommutationGraph {
    /// Maximum number of non-commuting partners of any term.
    pub fn g(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerAssignment {
    pub layers: Vec<Vec<usize>>,
    #[serde(rename = "L")]
    pub num_layers: usize,
    pub g: usize,
}

impl LayerAssignment {
    pub fn layer_of(&self, term: usize) -> Option<usize> {
        self.layers.iter().position(|l| l.contains(&term))
    }
}

fn is_zero(m: &Mat<C64>) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| m[(i, j)] == C64::new(0.0, 0.0)))
}

/// Frobenius norm of `[A, B]` evaluated on the joint support only.
pub fn local_commutator_norm(site_dims: &[usize], a: TermRef<'_>, b: TermRef<'_>) -> Result<f64> {
    let mut joint: Vec<usize> = a.support.to_vec();
    for s in b.support {
        if !joint.contains(s) {
            joint.push(*s);
        }
    }
    let joint_dims: Vec<usize> = joint.iter().map(|&s| site_dims[s]).collect();
    let position = |s: &usize| joint.iter().position(|j| j == s).expect("site in joint support");
    let embed = |t: TermRef<'_>| -> Result<Mat<C64>> {
        let local: Vec<usize> = t.support.iter().map(position).collect();
        let emb = Embedding::new(&joint_dims, &local)?;
        let op = EmbeddedOperator::new(emb, LocalOp::Dense(t.matrix.clone()), false)?;
        materialize(&op, usize::MAX)
    };
    let ea = embed(a)?;
    let eb = embed(b)?;
    let comm = &ea * &eb - &eb * &ea;
    Ok(linalg::frobenius(comm.as_ref()))
}

/// Edge between two terms iff their supports overlap and their commutator on
/// the joint support is nonzero.
pub fn noncommutation_graph_terms(site_dims: &[usize], terms: &[TermRef<'_>]) -> Result<NoncommutationGraph> {
    let n_sites = site_dims.len();
    let mut by_site: Vec<Vec<usize>> = vec![vec![]; n_sites];
    let zero: Vec<bool> = terms.iter().map(|t| is_zero(t.matrix)).collect();
    for (k, t) in terms.iter().enumerate() {
        if zero[k] {
            continue;
        }
        for &s in t.support {
            if s >= n_sites {
                return Err(Error::InvalidParameter(format!("flat site {s} outside lattice")));
            }
            by_site[s].push(k);
        }
    }
    let mut adjacency = vec![vec![]; terms.len()];
    for a in 0..terms.len() {
        if zero[a] {
            continue;
        }
        let mut candidates: Vec<usize> = terms[a]
            .support
            .iter()
            .flat_map(|&s| by_site[s].iter().copied())
            .filter(|&b| b > a)
            .collect();
        candidates.sort_unstable();
        candidates.dedup();
        for b in candidates {
            if local_commutator_norm(site_dims, terms[a], terms[b])? > COMMUTATOR_TOL {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
    }
    Ok(NoncommutationGraph {
        adjacency,
        zero_terms: (0..terms.len()).filter(|&k| zero[k]).collect(),
    })
}

pub fn term_refs(lattice: &LatticeHamiltonian) -> (Vec<Vec<usize>>, Vec<&Mat<C64>>) {
    let supports = (0..lattice.terms().len())
        .map(|k| lattice.term_support_flat(k))
        .collect();
    let matrices = lattice.terms().iter().map(|t| &t.matrix).collect();
    (supports, matrices)
}

pub fn noncommutation_graph(lattice: &LatticeHamiltonian) -> Result<NoncommutationGraph> {
    let (supports, matrices) = term_refs(lattice);
    let refs: Vec<TermRef<'_>> = supports
        .iter()
        .zip(&matrices)
        .map(|(s, m)| TermRef { support: s, matrix: m })
        .collect();
    noncommutation_graph_terms(lattice.site_dims(), &refs)
}

/// Greedy colouring visiting terms in `order`; each term takes the lowest
/// layer holding none of its neighbours.
pub fn greedy_layers_ordered(graph: &NoncommutationGraph, order: &[usize]) -> LayerAssignment {
    let n = graph.adjacency.len();
    let mut color: Vec<Option<usize>> = vec![None; n];
    let mut layers: Vec<Vec<usize>> = vec![];
    for &k in order {
        if graph.zero_terms.contains(&k) {
            continue;
        }
        let mut used: Vec<usize> = graph.adjacency[k].iter().filter_map(|&j| color[j]).collect();
        used.sort_unstable();
        used.dedup();
        let c = (0..).find(|c| used.binary_search(c).is_err()).expect("unbounded range");
        color[k] = Some(c);
        if c == layers.len() {
            layers.push(vec![]);
        }
        layers[c].push(k);
    }
    for l in &mut layers {
        l.sort_unstable();
    }
    LayerAssignment {
        num_layers: layers.len(),
        layers,
        g: graph.g(),
    }
}

/// Greedy colouring in term order.
pub fn greedy_layers(graph: &NoncommutationGraph) -> LayerAssignment {
    let order: Vec<usize> = (0..graph.adjacency.len()).collect();
    greedy_layers_ordered(graph, &order)
}

/// Re-checks every pair of overlapping terms sharing a layer.
pub fn verify_layers(site_dims: &[usize], terms: &[TermRef<'_>], layers: &LayerAssignment) -> Result<()> {
    for layer in &layers.layers {
        for (i, &a) in layer.iter().enumerate() {
            for &b in &layer[i + 1..] {
                let overlap = terms[a].support.iter().any(|s| terms[b].support.contains(s));
                if overlap && local_commutator_norm(site_dims, terms[a], terms[b])? > COMMUTATOR_TOL {
                    return Err(Error::LayerCommutation(a, b));
                }
            }
        }
    }
    Ok(())
}

/// Graph, greedy layers and the post-hoc commutation check for a lattice.
pub fn layer_lattice(lattice: &LatticeHamiltonian) -> Result<LayerAssignment> {
    let (supports, matrices) = term_refs(lattice);
    let refs: Vec<TermRef<'_>> = supports
        .iter()
        .zip(&matrices)
        .map(|(s, m)| TermRef { support: s, matrix: m })
        .collect();
    let graph = noncommutation_graph_terms(lattice.site_dims(), &refs)?;
    let layers = greedy_layers(&graph);
    verify_layers(lattice.site_dims(), &refs, &layers)?;
    Ok(layers)
}
