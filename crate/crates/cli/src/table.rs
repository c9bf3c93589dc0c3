//! CSV tables emitted for plotting, with their column documentation.

use std::io::Write;

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub name: &'static str,
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &'static str) -> Self {
        let headers = columns(name)
            .unwrap_or_else(|| panic!("undocumented table {name}"))
            .iter()
            .map(|(c, _)| *c)
            .collect();
        Self {
            name,
            headers,
            rows: vec![],
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn write_to<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.headers)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = vec![];
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// Formats a cell; floats use the shortest round-trip representation.
pub fn cell<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

type Columns = &'static [(&'static str, &'static str)];

/// Every table the harness writes, with a description of each column.
pub const TABLES: &[(&str, &str, Columns)] = &[
    (
        "spectrum",
        "global spectrum of the model",
        &[
            ("dim", "Hilbert space dimension"),
            ("ground_energy", "smallest eigenvalue"),
            ("kernel_dim", "dimension of the numerical kernel"),
            ("gap", "smallest eigenvalue above the zero threshold"),
            ("zero_threshold", "absolute kernel threshold"),
            ("method", "dense or krylov"),
        ],
    ),
    (
        "regions",
        "gap of every box of the requested size",
        &[
            ("starts", "1-based box origin, axes joined by 'x'"),
            ("lens", "box side lengths, axes joined by 'x'"),
            ("gap", "gap of the restricted Hamiltonian; empty when the box holds no terms"),
        ],
    ),
    (
        "layout",
        "one row per segment pair of a layout",
        &[
            ("k", "1-based segment index"),
            ("s_start", "first site of S_k"),
            ("s_end", "last site of S_k"),
            ("t_start", "first site of T_k; empty when T_k is empty"),
            ("t_end", "last site of T_k; empty when T_k is empty"),
            ("r_k", "slack between S_k and S_k+1"),
            ("overlap_s_k", "sites shared by T_k and S_k"),
            ("overlap_s_next", "sites shared by T_k and S_k+1"),
        ],
    ),
    (
        "layout_scan",
        "summary of an exhaustive layout scan, one row per boundary",
        &[
            ("boundary", "open or periodic"),
            ("layouts", "number of (n, t) pairs with nu_bar >= 2"),
            ("invalid", "layouts violating a structural invariant"),
            ("in_regime", "layouts with 8 L^2 < t and n > 5 t for L = 2"),
            ("slack_failures", "in-regime layouts with some r_k > t/4"),
            ("overlap_failures", "in-regime layouts with an overlap below floor(t/4)"),
            ("slack_failures_l1", "layouts with some r_k > t/4 when L = 1 sets the regime (informational)"),
        ],
    ),
    (
        "step",
        "Chebyshev step polynomial against its bound",
        &[
            ("m", "degree parameter"),
            ("nu", "width of the step"),
            ("degree", "polynomial degree, ceil(m)"),
            ("max_abs_step", "largest |Step| on the sampled open interval (0, 1 - nu)"),
            ("bound", "1/(1 + m^2 nu/(2(1 - nu)))"),
            ("margin", "bound - max_abs_step"),
            ("violations", "samples exceeding bound + 1e-12"),
        ],
    ),
    (
        "gap_link",
        "coarse-grained Hamiltonian against the original, one row per t",
        &[
            ("t", "segment length"),
            ("gamma", "global gap"),
            ("gamma_t", "local gap at length t"),
            ("gamma_hbar", "gap of the coarse-grained Hamiltonian"),
            ("scalar_rhs", "2 gamma / gamma_t"),
            ("operator_min_eigenvalue", "smallest eigenvalue of (2/gamma_t) H - Hbar"),
            ("kernel_sine", "largest principal-angle sine between the two kernels"),
            ("holds", "all three conditions within tolerance"),
        ],
    ),
    (
        "lightcone",
        "coarse-grained detectability operator, one row per t",
        &[
            ("t", "segment length"),
            ("lhs", "max ||DL(t) psi||^2 over the excited space"),
            ("lower", "1 - 3 gamma_hbar"),
            ("gamma_hbar", "gap of the coarse-grained Hamiltonian"),
            ("upper_asserted", "whether the Chebyshev upper half was in its regime"),
            ("holds", "lower half within tolerance (and upper half when asserted)"),
        ],
    ),
    (
        "bounds",
        "inequalities of the form lhs <= rhs",
        &[
            ("name", "inequality name"),
            ("t", "window length (first side for boxes)"),
            ("lhs", "left-hand side"),
            ("rhs", "right-hand side"),
            ("margin", "rhs - lhs"),
            ("in_regime", "every hypothesis of the inequality holds"),
            ("holds", "lhs <= rhs + tolerance"),
        ],
    ),
    (
        "recursion",
        "axis-by-axis recursion of the box bound",
        &[
            ("s", "axis just shrunk (1-based)"),
            ("sides", "box sides after the step, joined by 'x'"),
            ("gap", "box gap after the step"),
            ("step_rhs", "1000 L^2 g^2 / t_s^2 + 6 gamma_(s-1)"),
            ("step_holds", "gap <= step_rhs + tolerance"),
            ("condition_in", "gamma_(s-1) <= g^2 / 16^(D-s+1)"),
            ("condition_out", "gamma_s <= g^2 / 16^(D-s)"),
            ("side_in_range", "2^6 4^D L < t_s < n_s / 5"),
        ],
    ),
    (
        "sweep",
        "local gap against window length",
        &[
            ("t", "window length"),
            ("gamma_t", "local gap"),
            ("gamma", "global gap"),
            ("rhs", "1000 L^2 g^2 / t^2 + 6 gamma"),
            ("margin", "rhs - gamma_t"),
            ("scaled", "gamma_t t^2"),
        ],
    ),
];

pub fn columns(name: &str) -> Option<Columns> {
    TABLES.iter().find(|(n, _, _)| *n == name).map(|(_, _, c)| *c)
}

/// Column reference for `--help` output.
pub fn help_for(names: &[&str]) -> String {
    let mut out = String::from("CSV columns:\n");
    for name in names {
        let (_, about, cols) = TABLES
            .iter()
            .find(|(n, _, _)| n == name)
            .unwrap_or_else(|| panic!("undocumented table {name}"));
        out.push_str(&format!("\n  table `{name}`: {about}\n"));
        for (c, d) in *cols {
            out.push_str(&format!("    {c:<24} {d}\n"));
        }
    }
    out
}
