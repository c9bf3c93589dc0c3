use std::f64::consts::PI;

use ffgap_core::bounds::{
    columnize, comparison_bounds, hyperrect_gap, local_gap_1d, min_versus_average, region_gap,
    segment_average_gap, theorem_1_rhs, verify_theorem_1, verify_theorem_2,
};
use ffgap_core::layering::layer_lattice;
use ffgap_core::models::{
    decoupled_ferro_lattice, heisenberg_chain, magnon_gap_oracle, mixed_chain,
    random_frustration_free,
};
use ffgap_core::operator::{assemble_all, materialize, Boundary, LatticeHamiltonian, Region};
use ffgap_core::spectral::{spectrum, SolverSettings};
use ffgap_core::C64;

fn settings() -> SolverSettings {
    SolverSettings::default()
}

fn gap_of(l: &LatticeHamiltonian) -> f64 {
    spectrum(&assemble_all(l).unwrap(), &settings()).unwrap().gap
}

#[test]
fn decoupled_rectangles_saturate() {
    let l = decoupled_ferro_lattice(&[8, 2]).unwrap();
    let g = hyperrect_gap(&l, &[4, 2], &settings()).unwrap();
    assert!((g - (1.0 - (PI / 4.0).cos())).abs() < 1e-9);
}

#[test]
fn decoupled_window_gap_shrinks_with_width() {
    let l = decoupled_ferro_lattice(&[9, 2]).unwrap();
    let mut prev = f64::INFINITY;
    for t in 2..=6 {
        let g = hyperrect_gap(&l, &[t, 2], &settings()).unwrap();
        assert!((g - magnon_gap_oracle(t).unwrap()).abs() < 1e-9);
        assert!(g <= prev);
        prev = g;
    }
}

#[test]
fn full_box_is_global_gap() {
    let models = vec![
        heisenberg_chain(8, Boundary::Open).unwrap(),
        heisenberg_chain(7, Boundary::Periodic).unwrap(),
        mixed_chain(9, 4).unwrap(),
        random_frustration_free(&[3, 3], Boundary::Open, 2, 9, 2, 4).unwrap().lattice,
    ];
    for m in &models {
        let g = hyperrect_gap(m, m.axis_lengths(), &settings()).unwrap();
        assert!((g - gap_of(m)).abs() < 1e-9);
    }
}

#[test]
fn random_plaquettes_match_brute_force() {
    let m = random_frustration_free(&[3, 3], Boundary::Open, 2, 9, 2, 21).unwrap().lattice;
    let mut brute = f64::INFINITY;
    for a in 1..=2 {
        for b in 1..=2 {
            let (sub, kept) = m
                .restrict(&Region {
                    starts: vec![a, b],
                    lens: vec![2, 2],
                })
                .unwrap();
            assert_eq!(kept.len(), 1);
            brute = brute.min(gap_of(&sub));
        }
    }
    let got = hyperrect_gap(&m, &[2, 2], &settings()).unwrap();
    assert!((got - brute).abs() < 1e-12);
    // a single projector has gap 1
    assert!((got - 1.0).abs() < 1e-10);
}

#[test]
fn mixed_chain_windows() {
    let m = mixed_chain(12, 4).unwrap();
    let g4 = local_gap_1d(&m, 4, &settings()).unwrap();
    assert!((g4 - 0.292_893_218_813_452_4).abs() < 1e-9);
    let inner = region_gap(
        &m,
        &Region {
            starts: vec![7],
            lens: vec![4],
        },
        &settings(),
    )
    .unwrap()
    .unwrap();
    assert!((inner - 1.0).abs() < 1e-12);
    let avg = segment_average_gap(&m, 4, &settings()).unwrap();
    assert!(avg >= 2.0 / 3.0);
    let mva = min_versus_average(&m, 4, &settings()).unwrap();
    assert!(mva.average_breaks_shape);
    assert!((mva.gamma - (1.0 - (PI / 4.0).cos())).abs() < 1e-9);
}

#[test]
fn columnize_first_axis_is_identical() {
    let m = random_frustration_free(&[3, 3], Boundary::Open, 2, 9, 2, 8).unwrap().lattice;
    let view = columnize(&m, 0).unwrap();
    assert_eq!(view.chain.site_dims(), &[8, 8, 8]);
    let a = materialize(&assemble_all(&m).unwrap(), 512).unwrap();
    let b = materialize(&assemble_all(&view.chain).unwrap(), 512).unwrap();
    for i in 0..512 {
        for j in 0..512 {
            assert!((a[(i, j)] - b[(i, j)]).norm() < 1e-14);
        }
    }
}

#[test]
fn columnize_second_axis_is_a_relabelling() {
    let m = random_frustration_free(&[2, 3], Boundary::Open, 2, 9, 2, 13).unwrap().lattice;
    let view = columnize(&m, 1).unwrap();
    let perm = view.basis_permutation(&m).unwrap();
    let a = materialize(&assemble_all(&m).unwrap(), 64).unwrap();
    let b = materialize(&assemble_all(&view.chain).unwrap(), 64).unwrap();
    for i in 0..64 {
        for j in 0..64 {
            let d: C64 = a[(perm[i], perm[j])] - b[(i, j)];
            assert!(d.norm() < 1e-14);
        }
    }
    let la = layer_lattice(&m).unwrap();
    let lb = layer_lattice(&view.chain).unwrap();
    assert_eq!(la.g, lb.g);
}

#[test]
fn columnized_windows_are_slab_rectangles() {
    let m = random_frustration_free(&[4, 2], Boundary::Open, 2, 3, 2, 17).unwrap().lattice;
    let view = columnize(&m, 0).unwrap();
    let direct = hyperrect_gap(&m, &[2, 2], &settings()).unwrap();
    let via_chain = local_gap_1d(&view.chain, 2, &settings()).unwrap();
    assert!((direct - via_chain).abs() < 1e-10);
}

#[test]
fn one_dimensional_chain_view_is_identity() {
    let m = heisenberg_chain(5, Boundary::Open).unwrap();
    let view = columnize(&m, 0).unwrap();
    assert_eq!(view.chain, m);
}

#[test]
fn theorem_one_holds_and_scaling_probe() {
    for m in [
        heisenberg_chain(10, Boundary::Open).unwrap(),
        mixed_chain(10, 4).unwrap(),
    ] {
        for t in [3, 4, 5] {
            let r = verify_theorem_1(&m, t, &settings()).unwrap();
            assert!(r.bound.holds);
            assert!(!r.bound.in_regime);
            assert!(r.passes());
        }
    }
    // gamma(t) t^2 <= 1000 L^2 g^2 + 6 gamma t^2 for the ferromagnet
    let gamma = magnon_gap_oracle(16).unwrap();
    for t in 4..=16 {
        let gt = magnon_gap_oracle(t).unwrap();
        let tt = (t * t) as f64;
        assert!(gt <= theorem_1_rhs(2, 2, t, gamma));
        assert!(gt * tt <= 1e3 * 16.0 + 6.0 * gamma * tt);
    }
}

#[test]
fn regime_needs_long_chains() {
    for n in [20usize, 80, 160] {
        for t in 2..=n / 5 {
            let regime = 8 * 4 < t && 5 * t < n;
            assert!(!regime, "n={n} t={t}");
        }
    }
}

#[test]
fn theorem_two_recursion_ledger() {
    let l = decoupled_ferro_lattice(&[5, 2]).unwrap();
    let r = verify_theorem_2(&l, &[3, 2], &settings()).unwrap();
    assert_eq!(r.recursion.len(), 2);
    assert!((r.recursion[0].gap - magnon_gap_oracle(3).unwrap()).abs() < 1e-9);
    assert!((r.recursion[1].gap - magnon_gap_oracle(3).unwrap()).abs() < 1e-9);
    assert!(r.recursion.iter().all(|s| s.step_holds));
    assert!(r.bound.holds);
    assert!(!r.bound.in_regime);
    let one_d = verify_theorem_2(&heisenberg_chain(8, Boundary::Open).unwrap(), &[4], &settings())
        .unwrap();
    assert_eq!(one_d.recursion.len(), 1);
}

#[test]
fn comparison_inequalities_on_periodic_ferromagnet() {
    let m = heisenberg_chain(10, Boundary::Periodic).unwrap();
    for t in [4, 5, 6] {
        let reports = comparison_bounds(&m, t, &settings()).unwrap();
        let knabe = reports.iter().find(|r| r.name == "knabe").unwrap();
        let gm = reports.iter().find(|r| r.name == "gosset-mozgunov-1d").unwrap();
        assert!(knabe.in_regime && knabe.holds, "{knabe:?}");
        assert!(gm.in_regime && gm.holds, "{gm:?}");
        let gm2 = reports.iter().find(|r| r.name == "gosset-mozgunov-2d").unwrap();
        assert!(!gm2.in_regime);
    }
    let skipped = comparison_bounds(&mixed_chain(8, 3).unwrap(), 4, &settings()).unwrap();
    assert!(skipped.iter().all(|r| !r.in_regime && r.note.is_some()));
}
