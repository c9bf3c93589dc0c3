//! Command-line interface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use ffgap_core::models::ModelSpec;
use ffgap_core::operator::{file, Boundary};
use ffgap_core::spectral::{Method, SolverSettings};

use crate::config::{self, CheckSpec, ConfigError, ExperimentConfig, Verifier, CONFIG_VERSION};
use crate::suite::{self, RunReport};
use crate::table::help_for;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

const MODEL_HELP: &str = "Model: heisenberg:N[:periodic], mixed:N:K, decoupled:AxB[x..], \
random:AxB[x..]:RANK[:periodic][:range=R][:d=D] (seeded by --seed), file:PATH";

#[derive(Debug, Parser)]
#[command(name = "ffgap", version, about = "Spectral-gap verifiers for frustration-free lattice Hamiltonians")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct OutputArgs {
    /// Print the JSON report to stdout.
    #[arg(long, conflicts_with = "csv")]
    pub json: bool,
    /// Print the CSV tables to stdout.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args, Clone)]
pub struct ModelArgs {
    #[arg(long, help = MODEL_HELP)]
    pub model: String,
    /// Seed for random models and randomized checks.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Eigensolver path.
    #[arg(long, value_parser = ["auto", "dense", "krylov"], default_value = "auto")]
    pub method: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Global spectrum and gap.
    #[command(after_long_help = help_for(&["spectrum"]))]
    Gap {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Minimum gap over boxes of the given sides.
    #[command(after_long_help = help_for(&["regions"]))]
    LocalGap {
        #[command(flatten)]
        model: ModelArgs,
        /// Box sides, comma separated, one per axis.
        #[arg(long, value_delimiter = ',', required = true)]
        sides: Vec<usize>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Segment layout of a chain.
    #[command(after_long_help = help_for(&["layout"]))]
    Layout {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        periodic: bool,
        /// Draw the segments.
        #[arg(long, conflicts_with_all = ["json", "csv"])]
        ascii: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Coarse-graining checks.
    Coarse {
        #[command(subcommand)]
        action: CoarseAction,
    },
    /// Detectability-lemma checks.
    Dl {
        #[command(subcommand)]
        action: DlAction,
    },
    /// Chebyshev step polynomial checks.
    Cheb {
        #[command(subcommand)]
        action: ChebAction,
    },
    /// Local-gap inequalities.
    Bounds {
        #[command(subcommand)]
        action: BoundsAction,
    },
    /// Absorption identity on a pair of overlapping segments.
    Absorb {
        #[command(flatten)]
        model: ModelArgs,
        /// Segment S as FIRST:LAST.
        #[arg(long, value_parser = parse_segment)]
        s: (usize, usize),
        /// Segment T as FIRST:LAST.
        #[arg(long = "T", value_parser = parse_segment)]
        t_seg: (usize, usize),
        #[arg(long, default_value_t = 1)]
        q: usize,
        #[arg(long, default_value_t = 10)]
        probes: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Model utilities.
    Model {
        #[command(subcommand)]
        action: ModelAction,
    },
    /// Run an experiment configuration.
    #[command(after_long_help = help_for(&[
        "spectrum", "regions", "layout", "layout_scan", "step", "gap_link", "lightcone",
        "bounds", "recursion", "sweep",
    ]))]
    Run {
        /// TOML configuration file.
        #[arg(required_unless_present = "bundled", conflicts_with = "bundled")]
        config: Option<PathBuf>,
        /// Name of a bundled configuration (verify-all-small).
        #[arg(long)]
        bundled: Option<String>,
        /// Override the root seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write report.json and the CSV tables here, overriding the config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum CoarseAction {
    /// Gap link and light-cone lower bound for each t.
    #[command(after_long_help = help_for(&["gap_link", "lightcone"]))]
    Verify {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<usize>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum DlAction {
    /// Detectability inequality, and its converse with constant 3 or 4.
    Verify {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        converse: Option<u32>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum ChebAction {
    /// Step polynomial against its bound on an (m, nu) grid.
    #[command(after_long_help = help_for(&["step"]))]
    Verify {
        #[arg(long, default_value_t = 10_000)]
        x_samples: usize,
        /// Degree parameters; the default grid is used when both lists are absent.
        #[arg(long, value_delimiter = ',')]
        m: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        nu: Vec<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum BoundsAction {
    /// Chain bound at each t (or box bound with --sides) and comparison bounds.
    #[command(after_long_help = help_for(&["bounds", "recursion"]))]
    Verify {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',')]
        t: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        sides: Vec<usize>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Local gap against window length.
    #[command(after_long_help = help_for(&["sweep"]))]
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<usize>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum ModelAction {
    /// Write the model as a JSON model file.
    Dump {
        #[command(flatten)]
        model: ModelArgs,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_segment(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or("expected FIRST:LAST")?;
    Ok((
        a.parse().map_err(|e| format!("first: {e}"))?,
        b.parse().map_err(|e| format!("last: {e}"))?,
    ))
}

fn parse_dims(s: &str) -> Result<Vec<usize>, String> {
    s.split('x')
        .map(|x| x.parse::<usize>().map_err(|e| format!("axis length `{x}`: {e}")))
        .collect()
}

fn parse_boundary(s: &str) -> Result<Boundary, String> {
    s.parse::<Boundary>().map_err(|e| e.to_string())
}

/// Parses the compact model syntax described in `--help`.
pub fn parse_model(text: &str, seed: Option<u64>) -> Result<ModelSpec, String> {
    let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
    let parts: Vec<&str> = rest.split(':').filter(|p| !p.is_empty()).collect();
    let num = |i: usize, what: &str| -> Result<usize, String> {
        parts
            .get(i)
            .ok_or(format!("{kind}: missing {what}"))?
            .parse()
            .map_err(|e| format!("{kind}: {what}: {e}"))
    };
    match kind {
        "heisenberg" => Ok(ModelSpec::HeisenbergChain {
            n: num(0, "n")?,
            boundary: parts.get(1).map(|b| parse_boundary(b)).transpose()?.unwrap_or_default(),
        }),
        "mixed" => Ok(ModelSpec::MixedChain {
            n: num(0, "n")?,
            k: num(1, "k")?,
        }),
        "decoupled" => Ok(ModelSpec::DecoupledFerroLattice {
            axis_lengths: parse_dims(parts.first().ok_or("decoupled: missing axis lengths")?)?,
        }),
        "random" => {
            let axis_lengths = parse_dims(parts.first().ok_or("random: missing axis lengths")?)?;
            let excluded_rank = num(1, "rank")?;
            let (mut boundary, mut range, mut site_dim) = (Boundary::Open, 2, 2);
            for opt in &parts[2..] {
                match opt.split_once('=') {
                    None => boundary = parse_boundary(opt)?,
                    Some(("range", v)) => range = v.parse().map_err(|e| format!("range: {e}"))?,
                    Some(("d", v)) => site_dim = v.parse().map_err(|e| format!("d: {e}"))?,
                    Some((k, _)) => return Err(format!("random: unknown option `{k}`")),
                }
            }
            Ok(ModelSpec::RandomFf {
                axis_lengths,
                boundary,
                range,
                excluded_rank,
                site_dim,
                seed: seed.ok_or("random models need --seed")?,
            })
        }
        "file" if !rest.is_empty() => Ok(ModelSpec::File { path: rest.into() }),
        other => Err(format!("unknown model `{other}`; {MODEL_HELP}")),
    }
}

fn settings(m: &ModelArgs) -> SolverSettings {
    let method = match m.method.as_str() {
        "dense" => Method::Dense,
        "krylov" => Method::Krylov,
        _ => Method::Auto,
    };
    SolverSettings {
        method,
        ..SolverSettings::default()
    }
}

/// Output of a command, before printing.
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn invalid(message: impl std::fmt::Display) -> Self {
        Self {
            stdout: String::new(),
            stderr: format!("error: {message}\n"),
            code: EXIT_INVALID,
        }
    }
}

fn single(
    name: &str,
    model: Option<&ModelArgs>,
    verifiers: Vec<Verifier>,
    seed: u64,
) -> Result<ExperimentConfig, String> {
    let spec = model.map(|m| parse_model(&m.model, m.seed)).transpose()?;
    Ok(ExperimentConfig {
        version: CONFIG_VERSION,
        name: name.into(),
        seed,
        model: spec,
        solver: model.map(settings).unwrap_or_default(),
        output: Default::default(),
        checks: verifiers
            .into_iter()
            .map(|run| CheckSpec {
                model: None,
                assert: None,
                run,
            })
            .collect(),
    })
}

/// Human-readable summary of a run.
pub fn summary_text(report: &RunReport) -> String {
    let mut out = String::new();
    for c in &report.checks {
        let status = match (c.passed, c.asserted) {
            (true, true) => "PASS",
            (false, true) => "FAIL",
            (true, false) => "info",
            (false, false) => "info (failed)",
        };
        let model = c.model.as_deref().map(|m| format!(" {m}")).unwrap_or_default();
        out.push_str(&format!("[{:02}] {status:<5} {}{model}", c.index, c.verifier));
        if let Some(e) = &c.error {
            out.push_str(&format!(": {e}"));
        }
        out.push('\n');
    }
    let s = &report.summary;
    out.push_str(&format!(
        "{}: {} checks, {} asserted, {} failed\n",
        report.name, s.checks, s.asserted, s.failed
    ));
    out
}

fn render(report: &RunReport, out: &OutputArgs) -> String {
    if out.json {
        report.to_json()
    } else if out.csv {
        let tables: Vec<String> = report
            .checks
            .iter()
            .flat_map(|c| c.tables.iter().map(|t| t.to_csv()))
            .collect();
        tables.join("\n")
    } else {
        summary_text(report)
    }
}

fn execute_config(config: &ExperimentConfig, out: &OutputArgs, out_dir: Option<&PathBuf>) -> Outcome {
    if let Err(e) = config.validate() {
        return Outcome::invalid(e);
    }
    let report = suite::run(config);
    let (json, csv) = match out_dir {
        Some(d) => (Some(d.join("report.json")), Some(d.clone())),
        None => (config.output.json.clone(), config.output.csv_dir.clone()),
    };
    let mut stderr = String::new();
    if let Err(e) = report.write_artifacts(json.as_deref(), csv.as_deref()) {
        stderr.push_str(&format!("error: writing artifacts: {e}\n"));
    }
    for c in report.checks.iter().filter(|c| c.failed()) {
        stderr.push_str(&format!("check {} ({}) failed\n", c.index, c.verifier));
    }
    Outcome {
        stdout: render(&report, out),
        stderr,
        code: report.exit_code(),
    }
}

fn load_config(
    config: Option<&PathBuf>,
    bundled: Option<&str>,
) -> Result<ExperimentConfig, ConfigError> {
    match (config, bundled) {
        (_, Some(name)) => {
            let text = config::bundled(name).ok_or_else(|| {
                ConfigError::Invalid(format!("no bundled config `{name}`; known: {:?}", config::BUNDLED))
            })?;
            ExperimentConfig::from_toml(text)
        }
        (Some(path), None) => ExperimentConfig::load(path),
        (None, None) => Err(ConfigError::Invalid("no configuration given".into())),
    }
}

/// Runs a parsed command line.
pub fn dispatch(cli: Cli) -> Outcome {
    let (cfg, out) = match cli.command {
        Command::Run {
            config,
            bundled,
            seed,
            out_dir,
            out,
        } => {
            let mut cfg = match load_config(config.as_ref(), bundled.as_deref()) {
                Ok(c) => c,
                Err(e) => return Outcome::invalid(e),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            return execute_config(&cfg, &out, out_dir.as_ref());
        }
        Command::Layout {
            n,
            t,
            periodic,
            ascii,
            out,
        } => {
            let boundary = if periodic { Boundary::Periodic } else { Boundary::Open };
            if ascii {
                return match ffgap_core::coarse::layout_for(n, t, boundary) {
                    Ok(l) => Outcome {
                        stdout: l.render_ascii(),
                        stderr: String::new(),
                        code: EXIT_OK,
                    },
                    Err(e) => Outcome::invalid(e),
                };
            }
            (single("layout", None, vec![Verifier::Layout { n, t, boundary }], 0), out)
        }
        Command::Model {
            action: ModelAction::Dump { model, out },
        } => return dump(&model, out.as_ref()),
        Command::Gap { model, out } => (
            single("gap", Some(&model), vec![Verifier::Gap { expect: None, tol: 1e-9 }], 0),
            out,
        ),
        Command::LocalGap { model, sides, out } => (
            single(
                "local-gap",
                Some(&model),
                vec![Verifier::LocalGap {
                    sides,
                    expect: None,
                    tol: 1e-9,
                }],
                0,
            ),
            out,
        ),
        Command::Coarse {
            action: CoarseAction::Verify { model, t, out },
        } => (
            single(
                "coarse",
                Some(&model),
                vec![Verifier::GapLink { t: t.clone() }, Verifier::Lightcone { t }],
                0,
            ),
            out,
        ),
        Command::Dl {
            action: DlAction::Verify {
                model,
                converse,
                out,
            },
        } => {
            let mut v = vec![Verifier::Detectability {}];
            v.extend(converse.map(|constant| Verifier::Converse { constant }));
            (single("dl", Some(&model), v, 0), out)
        }
        Command::Cheb {
            action: ChebAction::Verify {
                x_samples,
                m,
                nu,
                out,
            },
        } => {
            let grid = if m.is_empty() && nu.is_empty() {
                None
            } else if m.is_empty() || nu.is_empty() {
                return Outcome::invalid("--m and --nu must be given together");
            } else {
                Some(m.iter().flat_map(|&m| nu.iter().map(move |&nu| (m, nu))).collect())
            };
            (
                single("cheb", None, vec![Verifier::Chebyshev { x_samples, grid }], 0),
                out,
            )
        }
        Command::Bounds {
            action: BoundsAction::Verify {
                model,
                t,
                sides,
                out,
            },
        } => {
            let mut v = vec![];
            if !t.is_empty() {
                v.push(Verifier::Theorem1 { t: t.clone() });
                v.push(Verifier::Comparison { t });
            }
            if !sides.is_empty() {
                v.push(Verifier::Theorem2 { sides });
            }
            (single("bounds", Some(&model), v, 0), out)
        }
        Command::Bounds {
            action: BoundsAction::Sweep { model, t, out },
        } => (single("sweep", Some(&model), vec![Verifier::Sweep { t }], 0), out),
        Command::Absorb {
            model,
            s,
            t_seg,
            q,
            probes,
            out,
        } => {
            let Some(seed) = model.seed else {
                return Outcome::invalid("absorb draws random probes and needs --seed");
            };
            let v = Verifier::Absorb {
                s,
                t: t_seg,
                q,
                probes,
            };
            (single("absorb", Some(&model), vec![v], seed), out)
        }
    };
    match cfg {
        Ok(cfg) => execute_config(&cfg, &out, None),
        Err(e) => Outcome::invalid(e),
    }
}

fn dump(model: &ModelArgs, out: Option<&PathBuf>) -> Outcome {
    let lattice = match parse_model(&model.model, model.seed).map_err(|e| e.to_string()).and_then(|m| {
        m.build().map_err(|e| e.to_string())
    }) {
        Ok(l) => l,
        Err(e) => return Outcome::invalid(e),
    };
    let result = match out {
        Some(path) => file::save(&lattice, path).map(|_| String::new()),
        None => file::to_json(&lattice).map(|s| s + "\n"),
    };
    match result {
        Ok(stdout) => Outcome {
            stdout,
            stderr: String::new(),
            code: EXIT_OK,
        },
        Err(e) => Outcome::invalid(e),
    }
}
