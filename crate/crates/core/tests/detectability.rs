use faer::Mat;
use ffgap_core::detectability::{
    build_dl, claim_boundary_probe, detectability_rhs, jordan_decompose, verify_converse,
    verify_detectability, verify_two_dim_claim, NU_MAX,
};
use ffgap_core::layering::layer_lattice;
use ffgap_core::models::{heisenberg_chain, mixed_chain, random_frustration_free};
use ffgap_core::operator::{assemble_all, materialize, Boundary, LatticeHamiltonian};
use ffgap_core::rng::Stream;
use ffgap_core::spectral::SolverSettings;
use ffgap_core::{linalg, C64};

fn settings() -> SolverSettings {
    SolverSettings::default()
}

/// `max ||DL psi||^2` over the complement of the kernel, from dense matrices.
fn dense_lhs(lattice: &LatticeHamiltonian) -> f64 {
    let dim = lattice.dim().unwrap();
    let h = materialize(&assemble_all(lattice).unwrap(), dim).unwrap();
    let e = linalg::eigh(h.as_ref()).unwrap();
    let excited: Vec<usize> = (0..dim).filter(|&k| e.values[k] > 1e-8).collect();
    let v = Mat::from_fn(dim, excited.len(), |i, j| e.vectors[(i, excited[j])]);
    let layers = layer_lattice(lattice).unwrap();
    let dl = materialize(&build_dl(lattice, &layers).unwrap().product().unwrap(), dim).unwrap();
    let w = &dl * &v;
    let g = w.adjoint() * &w;
    let vals = linalg::eigvalsh(g.as_ref()).unwrap();
    *vals.last().unwrap()
}

fn chains() -> Vec<LatticeHamiltonian> {
    let mut out = vec![
        heisenberg_chain(6, Boundary::Open).unwrap(),
        heisenberg_chain(7, Boundary::Periodic).unwrap(),
        mixed_chain(8, 4).unwrap(),
    ];
    for seed in 0..3 {
        out.push(random_frustration_free(&[6], Boundary::Open, 2, 2, 2, seed).unwrap().lattice);
    }
    out
}

#[test]
fn detectability_matches_dense_and_holds() {
    for l in chains() {
        let r = verify_detectability(&l, &settings()).unwrap();
        assert!(r.holds, "{r:?}");
        assert!((r.lhs - dense_lhs(&l)).abs() < 1e-9);
        assert!((r.rhs - detectability_rhs(r.gamma, r.g)).abs() < 1e-15);
    }
}

#[test]
fn rhs_convention() {
    assert_eq!(detectability_rhs(0.5, 0), 0.0);
    assert!((detectability_rhs(0.5, 2) - 1.0 / 1.125).abs() < 1e-15);
}

#[test]
fn commuting_model_has_zero_lhs() {
    let l = mixed_chain(6, 1).unwrap();
    let r = verify_detectability(&l, &settings()).unwrap();
    assert_eq!(r.g, 0);
    assert!(r.lhs.abs() < 1e-12);
    assert!(r.holds);
}

#[test]
fn converse_constants() {
    for l in chains() {
        let layers = layer_lattice(&l).unwrap();
        if layers.num_layers == 2 {
            let r = verify_converse(&l, 3, &settings()).unwrap();
            assert!(r.holds, "{r:?}");
        }
        let r4 = verify_converse(&l, 4, &settings()).unwrap();
        assert!(r4.holds, "{r4:?}");
    }
    let plaquettes = random_frustration_free(&[3, 3], Boundary::Open, 2, 9, 2, 1).unwrap();
    assert!(verify_converse(&plaquettes.lattice, 4, &settings()).unwrap().holds);
}

#[test]
fn converse_three_rejects_many_layers() {
    let l = random_frustration_free(&[3, 3], Boundary::Open, 2, 9, 2, 1).unwrap().lattice;
    assert!(layer_lattice(&l).unwrap().num_layers > 2);
    assert!(verify_converse(&l, 3, &settings()).is_err());
}

fn random_projector(n: usize, rank: usize, stream: &mut Stream) -> Mat<C64> {
    let cols = linalg::orthonormalize((0..rank).map(|_| stream.complex_vector(n)).collect(), 1e-8);
    linalg::projector_from_columns(linalg::from_columns(n, &cols).as_ref())
}

#[test]
fn jordan_identities_on_random_pairs() {
    let mut stream = Stream::new(42);
    for trial in 0..30 {
        let n = 2 + trial % 15;
        let r1 = 1 + (trial * 7) % n;
        let r2 = 1 + (trial * 3) % n;
        let p1 = random_projector(n, r1.min(n), &mut stream);
        let p2 = random_projector(n, r2.min(n), &mut stream);
        let jb = jordan_decompose(&p1, &p2).unwrap();
        assert!(jb.identity_residuals.iter().all(|&x| x < 1e-9), "{:?}", jb.identity_residuals);
        assert!(jb.reconstruction.iter().all(|&x| x < 1e-9));
        // blocks tile range(P1) + range(P2), whose dimension is rank(P1 + P2)
        let sum = &p1 + &p2;
        let span = linalg::eigvalsh(sum.as_ref()).unwrap().iter().filter(|&&x| x > 1e-9).count();
        assert_eq!(jb.blocks.iter().map(|b| b.dim()).sum::<usize>(), span);
        assert!(jb.orthogonality < 1e-9);
        // nonzero spectrum of P2 P1 P2 is the list of block overlaps
        let m = &p2 * &p1 * &p2;
        let mut vals: Vec<f64> = linalg::eigvalsh(m.as_ref())
            .unwrap()
            .into_iter()
            .filter(|&x| x > 1e-7)
            .collect();
        let mut overlaps: Vec<f64> = jb.blocks.iter().map(|b| b.overlap).filter(|&x| x > 1e-7).collect();
        vals.sort_by(f64::total_cmp);
        overlaps.sort_by(f64::total_cmp);
        assert_eq!(vals.len(), overlaps.len());
        for (a, b) in vals.iter().zip(&overlaps) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn block_inequality_threshold() {
    let ok = verify_two_dim_claim(10_000, 1.0 / 3.0, 7).unwrap();
    assert!(ok.holds && ok.nu_in_claim_range);
    assert!(ok.determinant_error < 1e-12);
    let edge = verify_two_dim_claim(2_000, NU_MAX, 7).unwrap();
    assert!(edge.holds);
    let bad = claim_boundary_probe(0.40);
    assert!(bad.factor_at_unit_a < 0.0);
    assert!(bad.approach.iter().any(|&(_, e)| e < 0.0));
    let fine = claim_boundary_probe(1.0 / 3.0);
    assert!(fine.factor_at_unit_a > 0.0);
    assert!(fine.approach.iter().all(|&(_, e)| e >= -1e-14));
}

#[test]
fn nu_max_is_golden_root() {
    let root = (3.0 - 5f64.sqrt()) / 2.0;
    assert!((NU_MAX - root).abs() < 1e-16);
    assert!(((1.0 - root) * (1.0 - root) - root).abs() < 1e-15);
}
