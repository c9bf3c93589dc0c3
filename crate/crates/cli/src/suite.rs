//! Executes configured checks and collects their reports.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use ffgap_core::bounds::{
    comparison_bounds, min_versus_average, region_gaps, sweep_1d, verify_theorem_1,
    verify_theorem_2, BoundReport,
};
use ffgap_core::chebyshev::{default_grid, verify_step_claim};
use ffgap_core::coarse::{
    absorption_check, gap_link_check, layout_for, lightcone_lower_check, segment_layout,
};
use ffgap_core::detectability::{
    claim_boundary_probe, verify_converse, verify_detectability, verify_random_pairs,
    verify_two_dim_claim, NU_MAX,
};
use ffgap_core::operator::{assemble_all, Boundary, LatticeHamiltonian};
use ffgap_core::rng::derive_seed;
use ffgap_core::spectral::{spectrum, SolverSettings};
use ffgap_core::Result;

use crate::config::{interval, CheckSpec, ExperimentConfig, Verifier};
use crate::table::{cell, Table};

pub const REPORT_SCHEMA: &str = "ffgap-report";
pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub index: usize,
    pub verifier: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub asserted: bool,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub report: Value,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl CheckOutcome {
    /// Counts against the exit code.
    pub fn failed(&self) -> bool {
        self.asserted && !self.passed
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub checks: usize,
    pub asserted: usize,
    pub failed: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub version: u32,
    pub name: String,
    pub seed: u64,
    pub solver: SolverSettings,
    pub checks: Vec<CheckOutcome>,
    pub summary: Summary,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.summary.passed {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Writes the JSON report, every table, and one counterexample file per
    /// failed asserted check.
    pub fn write_artifacts(&self, json: Option<&Path>, csv_dir: Option<&Path>) -> std::io::Result<()> {
        if let Some(path) = json {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, self.to_json())?;
        }
        if let Some(dir) = csv_dir {
            std::fs::create_dir_all(dir)?;
            for c in &self.checks {
                for t in &c.tables {
                    let name = format!("{:02}-{}-{}.csv", c.index, c.verifier, t.name);
                    std::fs::write(dir.join(name), t.to_csv())?;
                }
                if c.failed() {
                    let name = format!("{:02}-{}-counterexample.json", c.index, c.verifier);
                    let text = serde_json::to_string_pretty(c).map_err(std::io::Error::other)?;
                    std::fs::write(dir.join(name), text + "\n")?;
                }
            }
        }
        Ok(())
    }
}

/// Number of worker threads from `FFGAP_THREADS`, defaulting to one.
pub fn thread_count() -> usize {
    std::env::var("FFGAP_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(1)
}

/// Runs every check; results keep declaration order whatever the thread count.
pub fn run(config: &ExperimentConfig) -> RunReport {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .expect("thread pool");
    let checks: Vec<CheckOutcome> = pool.install(|| {
        config
            .checks
            .par_iter()
            .enumerate()
            .map(|(i, c)| run_check(config, i, c))
            .collect()
    });
    let failed = checks.iter().filter(|c| c.failed()).count();
    RunReport {
        schema: REPORT_SCHEMA,
        version: REPORT_VERSION,
        name: config.name.clone(),
        seed: config.seed,
        solver: config.solver.clone(),
        summary: Summary {
            checks: checks.len(),
            asserted: checks.iter().filter(|c| c.asserted).count(),
            failed,
            passed: failed == 0,
        },
        checks,
    }
}

fn run_check(config: &ExperimentConfig, index: usize, check: &CheckSpec) -> CheckOutcome {
    let model = config.model_for(check).filter(|_| check.run.needs_model());
    let seed = check.run.randomized().then(|| derive_seed(config.seed, index as u64));
    log::info!("check {index}: {}", check.run.name());
    let result = model
        .map(|m| m.build().map(Some))
        .unwrap_or(Ok(None))
        .and_then(|lattice| execute(&check.run, lattice.as_ref(), seed.unwrap_or(0), &config.solver));
    let (passed, error, report, tables) = match result {
        Ok(done) => (done.passed, None, done.report, done.tables),
        Err(e) => (false, Some(e.to_string()), Value::Null, vec![]),
    };
    CheckOutcome {
        index,
        verifier: check.run.name(),
        model: model.map(|m| m.label()),
        seed,
        asserted: check.asserted(),
        passed,
        error,
        report,
        tables,
    }
}

pub struct Executed {
    pub passed: bool,
    pub report: Value,
    pub tables: Vec<Table>,
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report serializes")
}

fn joined(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("x")
}

/// Empty for values that were not computed.
fn num_cell(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        cell(x)
    }
}

fn opt_cell<T: std::fmt::Display>(x: Option<T>) -> String {
    x.map(cell).unwrap_or_default()
}

fn bound_row(table: &mut Table, r: &BoundReport, t: usize) {
    table.push(vec![
        r.name.clone(),
        cell(t),
        num_cell(r.lhs),
        num_cell(r.rhs),
        num_cell(r.margin),
        cell(r.in_regime),
        cell(r.holds),
    ]);
}

fn chain_params(lattice: &LatticeHamiltonian) -> (usize, Boundary) {
    (lattice.axis_lengths()[0], lattice.boundary()[0])
}

/// Statistics of every layout up to `(n_max, t_max)` for one boundary.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ScanStats {
    pub boundary: String,
    pub layouts: usize,
    pub invalid: usize,
    pub in_regime: usize,
    pub slack_failures: usize,
    pub overlap_failures: usize,
    pub slack_failures_l1: usize,
    /// First few offenders, `(n, t, reason)`.
    pub examples: Vec<(usize, usize, String)>,
}

pub fn layout_scan(n_max: usize, t_max: usize, boundary: Boundary) -> Result<ScanStats> {
    let mut s = ScanStats {
        boundary: boundary.to_string(),
        ..Default::default()
    };
    for n in 2..=n_max {
        for t in 2..=t_max.min(n) {
            if n / t < 2 {
                continue;
            }
            let l = segment_layout(n, t, boundary)?;
            s.layouts += 1;
            let note = |s: &mut ScanStats, why: String| {
                if s.examples.len() < 8 {
                    s.examples.push((n, t, why));
                }
            };
            if let Err(e) = l.validate() {
                s.invalid += 1;
                note(&mut s, e);
            }
            if l.in_theorem_regime(1) && !l.slack_below_quarter() {
                s.slack_failures_l1 += 1;
            }
            if l.in_theorem_regime(2) {
                s.in_regime += 1;
                if !l.slack_below_quarter() {
                    s.slack_failures += 1;
                    note(&mut s, format!("r_k {:?} above t/4", l.r_k));
                }
                if l.min_overlap < t / 4 {
                    s.overlap_failures += 1;
                    note(&mut s, format!("overlap {} below floor(t/4)", l.min_overlap));
                }
            }
        }
    }
    Ok(s)
}

/// Runs one verifier. `lattice` is present exactly when the verifier needs a
/// model.
pub fn execute(
    verifier: &Verifier,
    lattice: Option<&LatticeHamiltonian>,
    seed: u64,
    settings: &SolverSettings,
) -> Result<Executed> {
    let model = || lattice.expect("validated config supplies a model");
    let done = |passed: bool, report: Value, tables: Vec<Table>| Ok(Executed { passed, report, tables });
    match verifier {
        Verifier::Gap { expect, tol } => {
            let r = spectrum(&assemble_all(model())?, settings)?;
            let mut t = Table::new("spectrum");
            t.push(vec![
                cell(r.dim),
                cell(r.ground_energy),
                cell(r.kernel_dim),
                cell(r.gap),
                cell(r.zero_threshold),
                to_value(&r.method).as_str().unwrap_or_default().to_string(),
            ]);
            let passed = expect.is_none_or(|e| (r.gap - e).abs() <= *tol);
            done(passed, json!({ "spectrum": r, "expect": expect, "tolerance": tol }), vec![t])
        }
        Verifier::LocalGap { sides, expect, tol } => {
            let gaps = region_gaps(model(), sides, settings)?;
            let mut t = Table::new("regions");
            for g in &gaps {
                t.push(vec![joined(&g.region.starts), joined(&g.region.lens), opt_cell(g.gap)]);
            }
            let min = gaps.iter().filter_map(|g| g.gap).reduce(f64::min);
            let passed = match (expect, min) {
                (None, _) => true,
                (Some(e), Some(m)) => (m - e).abs() <= *tol,
                (Some(_), None) => false,
            };
            let report = json!({ "sides": sides, "min_gap": min, "expect": expect, "tolerance": tol, "regions": gaps });
            done(passed, report, vec![t])
        }
        Verifier::Layout { n, t, boundary } => {
            let l = layout_for(*n, *t, *boundary)?;
            let valid = l.validate();
            let mut table = Table::new("layout");
            for (k, s) in l.s.iter().enumerate() {
                let tk = l.t_sets.get(k).copied().flatten();
                let ov = l.overlaps.get(k).copied().flatten();
                table.push(vec![
                    cell(k + 1),
                    cell(s.start),
                    cell(s.end(*n)),
                    opt_cell(tk.map(|x| x.start)),
                    opt_cell(tk.map(|x| x.end(*n))),
                    opt_cell(l.r_k.get(k)),
                    opt_cell(ov.map(|o| o.0)),
                    opt_cell(ov.map(|o| o.1)),
                ]);
            }
            let report = json!({ "layout": l, "valid": valid.is_ok(), "violation": valid.as_ref().err() });
            done(valid.is_ok(), report, vec![table])
        }
        Verifier::LayoutScan { n_max, t_max } => {
            let mut table = Table::new("layout_scan");
            let mut all = vec![];
            for b in [Boundary::Open, Boundary::Periodic] {
                let s = layout_scan(*n_max, *t_max, b)?;
                table.push(vec![
                    s.boundary.clone(),
                    cell(s.layouts),
                    cell(s.invalid),
                    cell(s.in_regime),
                    cell(s.slack_failures),
                    cell(s.overlap_failures),
                    cell(s.slack_failures_l1),
                ]);
                all.push(s);
            }
            let passed = all
                .iter()
                .all(|s| s.invalid == 0 && s.slack_failures == 0 && s.overlap_failures == 0);
            done(passed, json!({ "n_max": n_max, "t_max": t_max, "boundaries": all }), vec![table])
        }
        Verifier::Detectability {} => {
            let r = verify_detectability(model(), settings)?;
            done(r.holds, to_value(&r), vec![])
        }
        Verifier::Converse { constant } => {
            let r = verify_converse(model(), *constant, settings)?;
            done(r.holds, to_value(&r), vec![])
        }
        Verifier::JordanPairs { pairs, max_dim } => {
            let r = verify_random_pairs(*pairs, *max_dim, seed)?;
            done(r.holds, to_value(&r), vec![])
        }
        Verifier::BlockInequality { nu, samples } => {
            let r = verify_two_dim_claim(*samples, *nu, seed)?;
            // outside the claimed range a violation is expected, not a failure
            done(r.holds || !r.nu_in_claim_range, to_value(&r), vec![])
        }
        Verifier::BlockBoundary { nu } => {
            let p = claim_boundary_probe(*nu);
            let fails = p.factor_at_unit_a < 0.0 && p.approach.iter().any(|&(_, e)| e < 0.0);
            let passed = fails == (*nu > NU_MAX);
            done(passed, json!({ "probe": p, "nu_max": NU_MAX, "violated": fails }), vec![])
        }
        Verifier::Chebyshev { x_samples, grid } => {
            let grid = grid.clone().unwrap_or_else(default_grid);
            let r = verify_step_claim(&grid, *x_samples)?;
            let mut t = Table::new("step");
            for row in &r.rows {
                t.push(vec![
                    cell(row.m),
                    cell(row.nu),
                    cell(row.degree),
                    cell(row.max_abs_step),
                    cell(row.bound),
                    cell(row.margin),
                    cell(row.violations),
                ]);
            }
            done(r.holds, to_value(&r), vec![t])
        }
        Verifier::GapLink { t } => {
            let (n, b) = chain_params(model());
            let mut table = Table::new("gap_link");
            let mut reports = vec![];
            for &t in t {
                let r = gap_link_check(model(), &layout_for(n, t, b)?, settings)?;
                table.push(vec![
                    cell(t),
                    cell(r.gamma),
                    cell(r.gamma_t),
                    cell(r.gamma_hbar),
                    cell(r.scalar_rhs),
                    cell(r.operator_min_eigenvalue),
                    cell(r.kernel_sine),
                    cell(r.holds),
                ]);
                reports.push(r);
            }
            let passed = reports.iter().all(|r| r.holds);
            done(passed, to_value(&reports), vec![table])
        }
        Verifier::Lightcone { t } => {
            let (n, b) = chain_params(model());
            let mut table = Table::new("lightcone");
            let mut reports = vec![];
            for &t in t {
                let r = lightcone_lower_check(model(), &layout_for(n, t, b)?, settings)?;
                let asserted = r.upper.as_ref().is_some_and(|u| u.holds.is_some());
                table.push(vec![
                    cell(t),
                    cell(r.lhs),
                    cell(r.lower),
                    cell(r.gamma_hbar),
                    cell(asserted),
                    cell(r.holds),
                ]);
                reports.push(r);
            }
            let passed = reports.iter().all(|r| r.holds);
            done(passed, to_value(&reports), vec![table])
        }
        Verifier::Absorb { s, t, q, probes } => {
            let (n, _) = chain_params(model());
            let (s, t) = (interval(*s, n), interval(*t, n));
            let r = absorption_check(model(), s, t, *q, *probes, seed, settings)?;
            done(r.holds, to_value(&r), vec![])
        }
        Verifier::Theorem1 { t } => {
            let mut table = Table::new("bounds");
            let mut reports = vec![];
            for &t in t {
                let r = verify_theorem_1(model(), t, settings)?;
                bound_row(&mut table, &r.bound, t);
                reports.push(r);
            }
            let passed = reports.iter().all(|r| r.passes());
            done(passed, to_value(&reports), vec![table])
        }
        Verifier::Theorem2 { sides } => {
            let r = verify_theorem_2(model(), sides, settings)?;
            let mut bounds = Table::new("bounds");
            bound_row(&mut bounds, &r.bound, sides[0]);
            let mut rec = Table::new("recursion");
            for s in &r.recursion {
                rec.push(vec![
                    cell(s.s),
                    joined(&s.sides),
                    cell(s.gap),
                    cell(s.step_rhs),
                    cell(s.step_holds),
                    cell(s.condition_in),
                    cell(s.condition_out),
                    cell(s.side_in_range),
                ]);
            }
            done(r.passes(), to_value(&r), vec![bounds, rec])
        }
        Verifier::Comparison { t } => {
            let mut table = Table::new("bounds");
            let mut reports = vec![];
            for &t in t {
                for r in comparison_bounds(model(), t, settings)? {
                    bound_row(&mut table, &r, t);
                    reports.push(r);
                }
            }
            let passed = reports.iter().all(BoundReport::passes);
            done(passed, to_value(&reports), vec![table])
        }
        Verifier::MinVsAverage { k } => {
            let r = min_versus_average(model(), *k, settings)?;
            done(r.average_breaks_shape, to_value(&r), vec![])
        }
        Verifier::Sweep { t } => {
            let rows = sweep_1d(model(), t, settings)?;
            let mut table = Table::new("sweep");
            for r in &rows {
                table.push(vec![
                    cell(r.t),
                    cell(r.gamma_t),
                    cell(r.gamma),
                    cell(r.rhs),
                    cell(r.margin),
                    cell(r.scaled),
                ]);
            }
            done(true, to_value(&rows), vec![table])
        }
    }
}
