use ffgap_core::coarse::{
    absorption_check, coarse_grain, gap_link_check, layout_for, lightcone_lower_check,
    segment_layout, segment_projector, Interval, SegmentLayout,
};
use ffgap_core::models::{heisenberg_chain, mixed_chain, random_frustration_free};
use ffgap_core::operator::{assemble_all, Boundary, LatticeHamiltonian};
use ffgap_core::spectral::{kernel_projector, spectrum, SolverSettings};
use ffgap_core::Error;

fn settings() -> SolverSettings {
    SolverSettings::default()
}

#[test]
fn layouts_satisfy_invariants_exhaustively() {
    let mut count = 0;
    for boundary in [Boundary::Open, Boundary::Periodic] {
        for n in 2..=200 {
            for t in 2..=40.min(n) {
                if n / t < 2 {
                    continue;
                }
                let l = segment_layout(n, t, boundary).unwrap();
                l.validate().unwrap_or_else(|e| panic!("n={n} t={t} {boundary}: {e}"));
                count += 1;
            }
        }
    }
    assert!(count > 10_000);
}

#[test]
fn closed_layouts_keep_slack_within_even_share() {
    for n in 4..=200 {
        for t in 2..=40.min(n / 2) {
            let l = segment_layout(n, t, Boundary::Periodic).unwrap();
            assert!(l.slack_within_even_share, "n={n} t={t}");
        }
    }
}

#[test]
fn overlap_floor_in_theorem_regime() {
    for boundary in [Boundary::Open, Boundary::Periodic] {
        for n in 2..=200 {
            for t in 2..=40.min(n) {
                if n / t < 2 {
                    continue;
                }
                let l = segment_layout(n, t, boundary).unwrap();
                if l.in_theorem_regime(2) {
                    assert!(l.slack_below_quarter(), "n={n} t={t}");
                    assert!(l.min_overlap >= t / 4, "n={n} t={t}");
                }
            }
        }
    }
}

#[test]
fn wrap_segment_sites() {
    let l = segment_layout(37, 5, Boundary::Periodic).unwrap();
    let last = l.t_sets[6].unwrap();
    // S_7 = [33:37], r_7 = 0, T_7 = [36 : 2]
    assert_eq!(last.sites(37), vec![36, 37, 1, 2, 3]);
}

#[test]
fn whole_chain_segment_is_one_projector() {
    let h = heisenberg_chain(6, Boundary::Open).unwrap();
    let cg = coarse_grain(&h, &SegmentLayout::whole(6, Boundary::Open), &settings()).unwrap();
    let hbar = cg.hbar().unwrap();
    let rep = spectrum(&hbar, &settings()).unwrap();
    assert!((rep.gap - 1.0).abs() < 1e-10);
    assert_eq!(rep.kernel_dim, 7);
}

#[test]
fn segment_projector_matches_dense_complement() {
    let h = heisenberg_chain(8, Boundary::Open).unwrap();
    let p = segment_projector(&h, Interval::new(3, 4), &settings()).unwrap();
    assert_eq!(p.num_terms, 3);
    assert_eq!(p.kernel_rank, 5);
    // Q h_S = h_S: Q acts as identity on the range of h_S
    let sub = h.filtered(|k, _| (2..5).contains(&k));
    let hs = ffgap_core::operator::materialize(&assemble_all(&sub).unwrap(), 256).unwrap();
    let q = ffgap_core::coarse::dense_q(&p, 256).unwrap();
    let diff = &q * &hs - &hs;
    assert!(ffgap_core::linalg::frobenius(diff.as_ref()) < 1e-10);
}

fn kernels_coincide(lattice: &LatticeHamiltonian, t: usize) {
    let layout = layout_for(lattice.axis_lengths()[0], t, lattice.boundary()[0]).unwrap();
    let cg = coarse_grain(lattice, &layout, &settings()).unwrap();
    let hbar = cg.hbar().unwrap();
    let kb = kernel_projector(&hbar, &settings()).unwrap();
    let kh = kernel_projector(&assemble_all(lattice).unwrap(), &settings()).unwrap();
    assert_eq!(kb.rank(), kh.rank());
    assert!(kb.max_principal_sine(&kh).unwrap() < 1e-8);
}

#[test]
fn coarse_kernel_is_ground_space() {
    kernels_coincide(&heisenberg_chain(10, Boundary::Open).unwrap(), 5);
    kernels_coincide(&mixed_chain(10, 4).unwrap(), 5);
    kernels_coincide(&heisenberg_chain(9, Boundary::Periodic).unwrap(), 4);
}

#[test]
fn gap_link_on_small_grid() {
    let models = vec![
        heisenberg_chain(10, Boundary::Open).unwrap(),
        mixed_chain(10, 4).unwrap(),
        random_frustration_free(&[10], Boundary::Open, 2, 2, 2, 3).unwrap().lattice,
        heisenberg_chain(8, Boundary::Periodic).unwrap(),
    ];
    for m in &models {
        let n = m.axis_lengths()[0];
        for t in [2usize, 3, 4, 5, n] {
            if t != n && n / t < 2 {
                continue;
            }
            let layout = layout_for(n, t, m.boundary()[0]).unwrap();
            let r = gap_link_check(m, &layout, &settings()).unwrap();
            assert!(r.holds, "n={n} t={t}: {r:?}");
            assert!(r.kernel_sine < 1e-8);
            let lc = lightcone_lower_check(m, &layout, &settings()).unwrap();
            assert!(lc.lower_holds, "n={n} t={t}: {lc:?}");
        }
    }
}

#[test]
fn whole_chain_link_values() {
    let h = heisenberg_chain(6, Boundary::Open).unwrap();
    let layout = SegmentLayout::whole(6, Boundary::Open);
    let r = gap_link_check(&h, &layout, &settings()).unwrap();
    assert!((r.gamma_hbar - 1.0).abs() < 1e-10);
    assert!((r.gamma_t - r.gamma).abs() < 1e-12);
    let lc = lightcone_lower_check(&h, &layout, &settings()).unwrap();
    assert!(lc.lhs.abs() < 1e-10);
    assert!((lc.lower + 2.0).abs() < 1e-10);
}

#[test]
fn lightcone_upper_half_flagged_outside_regime() {
    let h = heisenberg_chain(12, Boundary::Open).unwrap();
    let layout = segment_layout(12, 4, Boundary::Open).unwrap();
    let lc = lightcone_lower_check(&h, &layout, &settings()).unwrap();
    let up = lc.upper.unwrap();
    assert!(!up.in_regime);
    assert!(up.holds.is_none());
    assert!(lc.holds);
}

#[test]
fn absorption_small_chain() {
    let h = heisenberg_chain(12, Boundary::Open).unwrap();
    let r = absorption_check(&h, Interval::new(1, 6), Interval::new(3, 6), 1, 6, 9, &settings())
        .unwrap();
    assert_eq!(r.overlap, 4);
    assert!(r.holds, "{r:?}");
    let r0 = absorption_check(&h, Interval::new(1, 4), Interval::new(4, 4), 0, 3, 9, &settings())
        .unwrap();
    assert!(r0.holds);
}

#[test]
fn absorption_rejects_short_overlap() {
    let h = heisenberg_chain(10, Boundary::Open).unwrap();
    let e = absorption_check(&h, Interval::new(1, 4), Interval::new(4, 4), 1, 3, 9, &settings());
    assert!(matches!(e, Err(Error::Precondition(_))));
}

#[test]
fn absorption_fails_without_overlap() {
    let h = heisenberg_chain(10, Boundary::Open).unwrap();
    let res = ffgap_core::coarse::absorption_residual(
        &h,
        Interval::new(1, 5),
        Interval::new(5, 5),
        1,
        3,
        9,
        &settings(),
    )
    .unwrap();
    assert!(res > 1e-3, "identity should break, residual {res}");
}
