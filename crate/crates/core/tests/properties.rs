use proptest::prelude::*;

use ffgap_core::chebyshev::{
    chebyshev_t, chebyshev_t_closed, step_bound, step_poly, StepPolyParams,
};
use ffgap_core::coarse::segment_layout;
use ffgap_core::detectability::{jordan_decompose, verify_two_dim_claim, NU_MAX};
use ffgap_core::layering::{layer_lattice, noncommutation_graph};
use ffgap_core::models::random_frustration_free;
use ffgap_core::operator::{assemble_all, Boundary, LinearMap};
use ffgap_core::rng::{derive_seed, Stream};
use ffgap_core::spectral::{spectrum, SolverSettings};
use ffgap_core::{linalg, C64};

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

proptest! {
    #[test]
    fn recurrence_matches_closed_form(m in 0u32..40, x in -1.5f64..1.5) {
        let a = chebyshev_t(m, x);
        let b = chebyshev_t_closed(m, x);
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn step_has_degree_ceil_m(m in 0.3f64..16.0, nu in 0.01f64..0.25, x0 in 0.0f64..0.5) {
        let p = StepPolyParams::new(m, nu).unwrap();
        let d = p.degree();
        let h = (1.0 - nu - x0) / (d + 1) as f64;
        // forward difference of order d + 1 on d + 2 points
        let diff: f64 = (0..=d + 1)
            .map(|k| {
                let sign = if (d + 1 - k).is_multiple_of(2) { 1.0 } else { -1.0 };
                sign * binomial(d + 1, k) * step_poly(&p, x0 + k as f64 * h)
            })
            .sum();
        prop_assert!(diff.abs() < 1e-8, "difference {diff}");
    }

    #[test]
    fn step_bound_decreases(m in 0.1f64..30.0, dm in 0.01f64..5.0, nu in 0.01f64..0.24, dnu in 0.001f64..0.01) {
        let base = step_bound(&StepPolyParams::new(m, nu).unwrap());
        prop_assert!(step_bound(&StepPolyParams::new(m + dm, nu).unwrap()) < base);
        prop_assert!(step_bound(&StepPolyParams::new(m, nu + dnu).unwrap()) < base);
    }

    #[test]
    fn step_shrinks_on_the_interval(m in 0.5f64..32.0, nu in 0.01f64..0.25, u in 0.0f64..1.0) {
        let p = StepPolyParams::new(m, nu).unwrap();
        let x = u * (1.0 - nu);
        prop_assert!(step_poly(&p, x).abs() <= 1.0 + 1e-12);
        if x > 0.0 && x < 1.0 - nu {
            prop_assert!(step_poly(&p, x).abs() <= step_bound(&p) + 1e-12);
        }
    }

    #[test]
    fn layouts_are_valid(n in 4usize..400, t in 2usize..60, periodic: bool) {
        prop_assume!(t <= n && n / t >= 2);
        let b = if periodic { Boundary::Periodic } else { Boundary::Open };
        let l = segment_layout(n, t, b).unwrap();
        prop_assert!(l.validate().is_ok(), "{:?}", l.validate());
        let covered: usize = l.s.iter().map(|s| s.len).sum::<usize>() + l.r;
        prop_assert_eq!(covered, n);
    }

    #[test]
    fn block_inequality_below_threshold(nu in 0.0f64..NU_MAX, seed: u64) {
        let r = verify_two_dim_claim(200, nu, seed).unwrap();
        prop_assert!(r.holds, "{r:?}");
        prop_assert!(r.determinant_error < 1e-12);
    }

    #[test]
    fn stream_is_reproducible(seed: u64, idx: u64) {
        let s = derive_seed(seed, idx);
        let mut a = Stream::new(s);
        let mut b = Stream::new(s);
        for _ in 0..8 {
            let u = a.uniform();
            prop_assert_eq!(u.to_bits(), b.uniform().to_bits());
            prop_assert!((0.0..1.0).contains(&u));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn jordan_pairs_reconstruct(n in 2usize..24, r1 in 1usize..24, r2 in 1usize..24, seed: u64) {
        let mut s = Stream::new(seed);
        let mut proj = |r: usize| {
            let cols = linalg::orthonormalize((0..r.min(n)).map(|_| s.complex_vector(n)).collect(), 1e-8);
            linalg::projector_from_columns(linalg::from_columns(n, &cols).as_ref())
        };
        let (p1, p2) = (proj(r1), proj(r2));
        let jb = jordan_decompose(&p1, &p2).unwrap();
        prop_assert!(jb.identity_residuals.iter().all(|&x| x < 1e-9));
        prop_assert!(jb.reconstruction.iter().all(|&x| x < 1e-9));
        prop_assert!(jb.blocks.iter().all(|b| b.dim() <= 2));
    }

    #[test]
    fn random_models_are_frustration_free(n in 3usize..8, rank in 1usize..3, seed: u64) {
        let m = random_frustration_free(&[n], Boundary::Open, 2, rank, 2, seed).unwrap();
        let h = assemble_all(&m.lattice).unwrap();
        let omega = m.state_vector();
        let mut out = linalg::zeros(h.dim());
        h.apply_into(&omega, &mut out);
        prop_assert!(linalg::norm(&out) < 1e-12);
        let rep = spectrum(&h, &SolverSettings::default()).unwrap();
        prop_assert!(rep.ground_energy.abs() < 1e-10);
        prop_assert!(rep.kernel_dim >= 1);
    }

    #[test]
    fn layers_commute_and_respect_g(n in 3usize..9, seed: u64, periodic: bool) {
        let b = if periodic { Boundary::Periodic } else { Boundary::Open };
        let m = random_frustration_free(&[n], b, 2, 2, 2, seed).unwrap();
        let graph = noncommutation_graph(&m.lattice).unwrap();
        let layers = layer_lattice(&m.lattice).unwrap();
        prop_assert_eq!(layers.g, graph.g());
        prop_assert!(layers.num_layers <= layers.g + 1);
        for layer in &layers.layers {
            for (i, &a) in layer.iter().enumerate() {
                for &c in &layer[i + 1..] {
                    prop_assert!(!graph.has_edge(a, c));
                }
            }
        }
        let total: usize = layers.layers.iter().map(Vec::len).sum();
        prop_assert_eq!(total, m.lattice.terms().len() - graph.zero_terms.len());
    }
}

#[test]
fn unit_vectors_are_normalized() {
    let mut s = Stream::new(5);
    for n in [1usize, 3, 64] {
        let v: Vec<C64> = s.unit_vector(n);
        assert!((linalg::norm(&v) - 1.0).abs() < 1e-14);
    }
}
