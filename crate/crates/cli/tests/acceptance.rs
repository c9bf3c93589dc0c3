//! Acceptance criteria, one printed PASS/FAIL line each.
//!
//! Lines go straight to stderr so they show up without `--nocapture`.

use std::f64::consts::PI;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use ffgap_cli::suite::layout_scan;
use ffgap_core::bounds::{comparison_bounds, hyperrect_gap, min_versus_average};
use ffgap_core::chebyshev::{default_grid, verify_step_claim};
use ffgap_core::coarse::{
    absorption_check, gap_link_check, layout_for, lightcone_lower_check, segment_layout, Interval,
};
use ffgap_core::detectability::{
    claim_boundary_probe, verify_converse, verify_detectability, verify_random_pairs,
    verify_two_dim_claim, NU_MAX,
};
use ffgap_core::layering::layer_lattice;
use ffgap_core::models::{
    decoupled_ferro_lattice, heisenberg_chain, magnon_gap_oracle, mixed_chain,
    random_frustration_free,
};
use ffgap_core::operator::{assemble_all, Boundary, LatticeHamiltonian};
use ffgap_core::spectral::{spectrum, Method, SolverSettings};
use ffgap_core::Error;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T>(r: ffgap_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn settings() -> SolverSettings {
    SolverSettings::default()
}

/// Models shared by the detectability and converse criteria.
fn detectability_models() -> Vec<(String, LatticeHamiltonian)> {
    let mut out = vec![];
    for n in 2..=10 {
        out.push((format!("heisenberg({n})"), heisenberg_chain(n, Boundary::Open).unwrap()));
    }
    out.push(("mixed(10,4)".into(), mixed_chain(10, 4).unwrap()));
    for seed in 0..5 {
        let m = random_frustration_free(&[8], Boundary::Open, 2, 2, 2, seed).unwrap();
        out.push((format!("random_ff(8, seed {seed})"), m.lattice));
    }
    let plaquettes = random_frustration_free(&[3, 3], Boundary::Open, 2, 9, 2, 1).unwrap();
    out.push(("random_ff(3x3)".into(), plaquettes.lattice));
    out
}

fn ac1() -> Outcome {
    let dense = SolverSettings {
        method: Method::Dense,
        ..settings()
    };
    let mut worst = 0.0f64;
    for n in 2..=12 {
        let r = ok(spectrum(&ok(assemble_all(&heisenberg_chain(n, Boundary::Open).unwrap()))?, &dense))?;
        let closed = 1.0 - (PI / n as f64).cos();
        let err = (r.gap - ok(magnon_gap_oracle(n))?).abs().max((r.gap - closed).abs());
        worst = worst.max(err);
        ensure(err <= 1e-9, || format!("n={n}: gap {} vs {closed}", r.gap))?;
    }
    let g10 = 1.0 - (PI / 10.0).cos();
    let asym = PI * PI / 200.0;
    let rel = (g10 - asym).abs() / asym;
    ensure(rel <= 0.05, || format!("n=10 relative deviation {rel}"))?;
    Ok(format!("max |gap - oracle| = {worst:.1e}; n=10 vs pi^2/(2n^2) off by {:.2}%", 100.0 * rel))
}

fn ac2() -> Outcome {
    let mut min_margin = f64::INFINITY;
    let models = detectability_models();
    for (name, m) in &models {
        let r = ok(verify_detectability(m, &settings()))?;
        ensure(r.holds, || format!("{name}: lhs {} > rhs {}", r.lhs, r.rhs))?;
        min_margin = min_margin.min(r.margin);
    }
    Ok(format!("{} models, smallest margin {min_margin:.3e}", models.len()))
}

fn ac3() -> Outcome {
    let (mut three, mut four) = (0, 0);
    let mut worst = f64::INFINITY;
    for (name, m) in detectability_models() {
        let layers = ok(layer_lattice(&m))?;
        if layers.num_layers == 2 {
            let r = ok(verify_converse(&m, 3, &settings()))?;
            ensure(r.min_eigenvalue >= -1e-9, || format!("{name}: c=3 min eig {}", r.min_eigenvalue))?;
            worst = worst.min(r.min_eigenvalue);
            three += 1;
        }
        if m.num_axes() == 2 {
            let r = ok(verify_converse(&m, 4, &settings()))?;
            ensure(r.min_eigenvalue >= -1e-9, || format!("{name}: c=4 min eig {}", r.min_eigenvalue))?;
            worst = worst.min(r.min_eigenvalue);
            four += 1;
        }
    }
    ensure(three > 0 && four > 0, || "no instances".into())?;
    Ok(format!("{three} instances with c=3, {four} with c=4, smallest eigenvalue {worst:.2e}"))
}

fn ac4() -> Outcome {
    let pairs = ok(verify_random_pairs(100, 64, 2024))?;
    ensure(pairs.holds && pairs.max_identity_residual <= 1e-9, || format!("{pairs:?}"))?;
    let claim = ok(verify_two_dim_claim(10_000, 1.0 / 3.0, 99))?;
    ensure(claim.holds && claim.samples == 10_000, || format!("{claim:?}"))?;
    let probe = claim_boundary_probe(0.40);
    ensure(0.40 > NU_MAX, || "threshold".into())?;
    ensure(probe.factor_at_unit_a < 0.0, || format!("factor {}", probe.factor_at_unit_a))?;
    let worst = probe.approach.iter().map(|&(_, e)| e).fold(f64::INFINITY, f64::min);
    ensure(worst < 0.0, || format!("no violation near |a| = 1: {:?}", probe.approach))?;
    Ok(format!(
        "100 pairs, max identity residual {:.1e}; nu=1/3 min eig {:.3e}; nu=0.40 factor {:.3} and min eig {worst:.3e} near |a|=1",
        pairs.max_identity_residual, claim.min_eigenvalue, probe.factor_at_unit_a
    ))
}

fn ac5() -> Outcome {
    let r = ok(verify_step_claim(&default_grid(), 10_000))?;
    let violations: usize = r.rows.iter().map(|x| x.violations).sum();
    ensure(violations == 0, || format!("{violations} violations"))?;
    ensure(r.rows.iter().all(|x| x.step_at_one == 1.0), || "Step(1) != 1".into())?;
    ensure(r.holds && r.tolerance == 1e-12, || "report does not hold".into())?;
    let margin = r.rows.iter().map(|x| x.margin).fold(f64::INFINITY, f64::min);
    Ok(format!("{} grid points x 10^4 samples, zero violations, smallest margin {margin:.3e}", r.rows.len()))
}

fn ac6() -> Outcome {
    let mut total = 0;
    let mut regime = 0;
    let mut l1_open = 0;
    for b in [Boundary::Open, Boundary::Periodic] {
        let s = ok(layout_scan(200, 40, b))?;
        ensure(s.invalid == 0, || format!("{b}: {:?}", s.examples))?;
        ensure(s.slack_failures == 0 && s.overlap_failures == 0, || format!("{b}: {:?}", s.examples))?;
        total += s.layouts;
        regime += s.in_regime;
        if b == Boundary::Open {
            l1_open = s.slack_failures_l1;
        }
    }
    for b in [Boundary::Open, Boundary::Periodic] {
        let l = ok(segment_layout(37, 5, b))?;
        ensure(l.r_k[0] == 1 && l.r_k[1] == 1, || format!("{b}: r_k {:?}", l.r_k))?;
    }
    Ok(format!(
        "{total} layouts valid; {regime} in regime (L=2) meet both slack and overlap floors; \
         n=37 t=5 gives r_1=r_2=1; informational: {l1_open} open layouts exceed t/4 under the L=1 regime"
    ))
}

fn coarse_grid() -> Vec<(String, LatticeHamiltonian, Vec<usize>)> {
    vec![
        ("heisenberg(12)".into(), heisenberg_chain(12, Boundary::Open).unwrap(), vec![2, 3, 4, 6, 12]),
        ("mixed(12,4)".into(), mixed_chain(12, 4).unwrap(), vec![4, 6]),
        (
            "random_ff(10, seed 3)".into(),
            random_frustration_free(&[10], Boundary::Open, 2, 2, 2, 3).unwrap().lattice,
            vec![3, 5],
        ),
        ("heisenberg(10, periodic)".into(), heisenberg_chain(10, Boundary::Periodic).unwrap(), vec![4, 5]),
    ]
}

fn ac7_and_8() -> (Outcome, Outcome) {
    let mut link = Ok(0usize);
    let mut cone = Ok(0usize);
    let (mut worst_sine, mut worst_cone) = (0.0f64, f64::INFINITY);
    for (name, m, ts) in coarse_grid() {
        let n = m.axis_lengths()[0];
        assert!(m.dim().unwrap() <= 4096);
        for t in ts {
            let layout = match layout_for(n, t, m.boundary()[0]) {
                Ok(l) => l,
                Err(e) => return (Err(e.to_string()), Err("layout".into())),
            };
            match gap_link_check(&m, &layout, &settings()) {
                Ok(r) if r.holds => {
                    worst_sine = worst_sine.max(r.kernel_sine);
                    link = link.map(|c| c + 1);
                }
                Ok(r) if link.is_ok() => link = Err(format!("{name} t={t}: {r:?}")),
                Err(e) if link.is_ok() => link = Err(format!("{name} t={t}: {e}")),
                _ => {}
            }
            match lightcone_lower_check(&m, &layout, &settings()) {
                Ok(r) if r.lhs >= r.lower - 1e-9 => {
                    worst_cone = worst_cone.min(r.lhs - r.lower);
                    cone = cone.map(|c| c + 1);
                }
                Ok(r) if cone.is_ok() => cone = Err(format!("{name} t={t}: lhs {} < {}", r.lhs, r.lower)),
                Err(e) if cone.is_ok() => cone = Err(format!("{name} t={t}: {e}")),
                _ => {}
            }
        }
    }
    (
        link.map(|c| format!("{c} (model, t) pairs; largest kernel sine {worst_sine:.1e}")),
        cone.map(|c| format!("{c} (model, t) pairs; smallest slack {worst_cone:.3e}")),
    )
}

fn ac9() -> Outcome {
    let h = heisenberg_chain(20, Boundary::Open).unwrap();
    let (s, t) = (Interval::from_ends(1, 8, 20), Interval::from_ends(5, 12, 20));
    let r = ok(absorption_check(&h, s, t, 1, 10, 7, &settings()))?;
    ensure(r.probes == 10 && r.max_residual <= 1e-8, || format!("{r:?}"))?;
    let short = absorption_check(&h, Interval::from_ends(1, 8, 20), Interval::from_ends(8, 15, 20), 1, 10, 7, &settings());
    ensure(matches!(short, Err(Error::Precondition(_))), || "overlap 1 was not rejected".into())?;
    Ok(format!("dim 2^20, overlap {}, max relative residual {:.1e}; overlap 1 rejected", r.overlap, r.max_residual))
}

fn ac10() -> Outcome {
    let l = decoupled_ferro_lattice(&[8, 2]).unwrap();
    let g = ok(hyperrect_gap(&l, &[4, 2], &settings()))?;
    let expect = 1.0 - (PI / 4.0).cos();
    ensure((g - expect).abs() <= 1e-9, || format!("box gap {g}"))?;
    let mva = ok(min_versus_average(&mixed_chain(12, 4).unwrap(), 4, &settings()))?;
    ensure(mva.average >= 2.0 / 3.0, || format!("average {}", mva.average))?;
    ensure((mva.gamma - expect).abs() <= 1e-9, || format!("gamma {}", mva.gamma))?;
    Ok(format!(
        "box gap {g:.12}; mixed chain average {:.4} >= 2/3 with gamma {:.12}",
        mva.average, mva.gamma
    ))
}

fn ac11() -> Outcome {
    let m = heisenberg_chain(12, Boundary::Periodic).unwrap();
    let mut lines = vec![];
    for t in [4, 5, 6] {
        let reports = ok(comparison_bounds(&m, t, &settings()))?;
        for name in ["knabe", "gosset-mozgunov-1d"] {
            let r = reports.iter().find(|r| r.name == name).ok_or("missing report")?;
            ensure(r.in_regime && r.holds, || format!("{name} t={t}: {r:?}"))?;
            lines.push(format!("{name}@{t} margin {:.3}", r.margin));
        }
    }
    Ok(lines.join(", "))
}

fn ac12() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_ffgap");
    let run = || {
        Command::new(bin)
            .args(["run", "--bundled", "verify-all-small", "--json"])
            .env("FFGAP_THREADS", "1")
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    ensure(a.status.code() == Some(0), || String::from_utf8_lossy(&a.stderr).into_owned())?;
    ensure(b.status.code() == Some(0), || "second run failed".into())?;
    ensure(a.stdout == b.stdout, || "reports differ".into())?;
    ensure(!a.stdout.is_empty(), || "empty report".into())?;
    Ok(format!("two runs, exit 0, {} identical bytes", a.stdout.len()))
}

fn line(text: &str) {
    let _ = writeln!(std::io::stderr(), "{text}");
}

fn timed(label: &str, about: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
    report(label, about, budget, start.elapsed(), result)
}

fn report(label: &str, about: &str, budget: Duration, took: Duration, result: Outcome) -> bool {
    let result = result.and_then(|d| {
        if took <= budget {
            Ok(d)
        } else {
            Err(format!("{d}; over the {budget:?} budget"))
        }
    });
    let pass = result.is_ok();
    let detail = result.unwrap_or_else(|e| e);
    line(&format!(
        "{label:<5} {} {about}: {detail} [{:.1} s]",
        if pass { "PASS" } else { "FAIL" },
        took.as_secs_f64()
    ));
    pass
}

#[test]
fn acceptance() {
    let min = |m: u64| Duration::from_secs(60 * m);
    line("");
    let sec = Duration::from_secs;
    let mut results = vec![
        timed("AC1", "exact ferromagnet gaps", sec(30), ac1),
        timed("AC2", "detectability inequality", min(5), ac2),
        timed("AC3", "converse inequalities", min(5), ac3),
        timed("AC4", "Jordan blocks and block inequality", min(1), ac4),
        timed("AC5", "Chebyshev step bound", min(1), ac5),
        timed("AC6", "segment layouts", min(1), ac6),
    ];
    let start = Instant::now();
    let (link, cone) = catch_unwind(ac7_and_8).unwrap_or_else(|_| (Err("panicked".into()), Err("panicked".into())));
    let took = start.elapsed();
    results.push(report("AC7", "coarse-graining gap link", min(10), took, link));
    results.push(report("AC8", "light-cone lower bound", min(10), took, cone));
    results.push(timed("AC9", "absorption at n = 20", min(2), ac9));
    results.push(timed("AC10", "min versus average counterexamples", min(2), ac10));
    results.push(timed("AC11", "comparison bounds", min(1), ac11));
    results.push(timed("AC12", "deterministic reports", min(10), ac12));
    let failed = results.iter().filter(|&&p| !p).count();
    line(&format!("acceptance: {} of {} criteria pass", results.len() - failed, results.len()));
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
