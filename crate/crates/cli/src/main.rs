//! `bellrand`: bounds, solvers, certificates and simulators for the
//! setting-randomness needed to fake a CHSH violation with independent
//! devices.
//!
//! Every run with identical flags and seed produces byte-identical output.
//! Exit codes: 0 success, 1 infeasible/empty result (or failed verify),
//! 2 invalid input.

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use bellrand::checks::{all_pass, run_suite, Suite};
use bellrand::lhvm::{simulate_runs, LhvmStrategy};
use bellrand::math::{asymptotic_bounds, c_q_rational, concave_envelope_g, f_max, C_Q_DECIMAL};
use bellrand::profile::SettingSet;
use bellrand::rational::{parse_rat, rat_to_f64, Rat};
use bellrand::report::{
    BoundsDoc, CertificateDoc, FEvalDoc, SimulationDoc, SolveDoc, TableOneDoc, TableOneRow,
    ThresholdDoc, VerifyDoc, VerifyRowDoc, SCHEMA_VERSION,
};
use bellrand::solver::{
    bracket_p_n, converse_certificate, solve_uniform_exact, threshold_construct, SolveOptions,
};
use bellrand::{Error, Result};

/// Environment variable supplying the default worker count when
/// `--parallel` is set and `--workers` is not.
const WORKERS_ENV: &str = "BELLRAND_WORKERS";

#[derive(Parser)]
#[command(
    name = "bellrand",
    version,
    about = "Randomness bounds and simulators for CHSH tests with independent device settings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report to this file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Enable worker pools in solver and simulator operations.
    #[arg(long, global = true)]
    parallel: bool,
    /// Worker count (overrides the BELLRAND_WORKERS environment variable).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum CPreset {
    /// The 15-digit decimal of (4 - 2*sqrt(2))/8.
    Cq,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Lemmas,
    Profiles,
    Solver,
    Lhvm,
    All,
}

impl SuiteArg {
    fn to_suite(self) -> Suite {
        match self {
            SuiteArg::Lemmas => Suite::Lemmas,
            SuiteArg::Profiles => Suite::Profiles,
            SuiteArg::Solver => Suite::Solver,
            SuiteArg::Lhvm => Suite::Lhvm,
            SuiteArg::All => Suite::All,
        }
    }

}

#[derive(Subcommand)]
enum Command {
    /// Asymptotic randomness bounds at constraint level c.
    Bound {
        /// Constraint level as a decimal or p/q rational.
        #[arg(long, default_value = C_Q_DECIMAL)]
        c: String,
        /// Named constraint level (overrides --c).
        #[arg(long, value_enum, conflicts_with = "c")]
        c_preset: Option<CPreset>,
    },
    /// Evaluate the two-entropy maximum f and its concave envelope g at t.
    FEval {
        /// Abscissa t in [0, 0.25], decimal or rational.
        #[arg(long)]
        c: String,
    },
    /// The four headline values: n = 1 and the large-n limits for the
    /// correlated and independent settings models.
    Table1,
    /// Exact optimum over uniform supports at (n, c).
    SolveUniform {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = C_Q_DECIMAL)]
        c: String,
        /// Allow the expensive n = 4 exhaustive search.
        #[arg(long)]
        allow_n4: bool,
    },
    /// Bracket plus alternating heuristic for the distribution problem.
    SolveDist {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = C_Q_DECIMAL)]
        c: String,
    },
    /// Threshold-set construction rows; a comma list of n values emits the
    /// convergence table.
    Construct {
        /// One or more run counts, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u64>,
        #[arg(long, default_value = C_Q_DECIMAL)]
        c: String,
        /// Fixed threshold level (single n only); default sweeps from
        /// floor(n sqrt c) to the largest feasible level.
        #[arg(long)]
        l: Option<u64>,
    },
    /// Finite-n converse certificate for a pair of setting-set files.
    Certify {
        /// Setting set file for the X side (one bit string per line).
        #[arg(long)]
        x: PathBuf,
        /// Setting set file for the Y side.
        #[arg(long)]
        y: PathBuf,
        /// Discretization grid size (>= 2).
        #[arg(long)]
        m: usize,
        #[arg(long, default_value = C_Q_DECIMAL)]
        c: String,
    },
    /// Monte Carlo simulation of a strategy file.
    Simulate {
        /// Strategy JSON file.
        #[arg(long)]
        strategy: PathBuf,
        /// Number of independent n-run tests.
        #[arg(long)]
        runs: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Seeded self-check property suites.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        /// Override the per-property sample counts (0 keeps defaults).
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() {
    let cli = Cli::parse();
    let workers = resolve_workers(cli.parallel, cli.workers);
    let format = cli.format;
    let out = cli.out.clone();
    match execute(cli.command, format, workers) {
        Ok((text, code)) => {
            if let Some(path) = out {
                if let Err(e) = fs::write(&path, &text) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    std::process::exit(2);
                }
            } else {
                print!("{text}");
            }
            std::process::exit(code);
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Infeasible(_) => 1,
                _ => 2,
            };
            std::process::exit(code);
        }
    }
}

fn resolve_workers(parallel: bool, flag: Option<usize>) -> usize {
    if let Some(w) = flag {
        return w.max(1);
    }
    if let Ok(env) = std::env::var(WORKERS_ENV) {
        if let Ok(w) = env.parse::<usize>() {
            return w.max(1);
        }
    }
    if parallel {
        std::thread::available_parallelism().map_or(1, |p| p.get())
    } else {
        1
    }
}

fn parse_c(s: &str) -> Result<Rat> {
    let c = parse_rat(s)?;
    if c <= Rat::new(0.into(), 1.into()) {
        return Err(Error::Domain(format!("c must be positive, got {s}")));
    }
    Ok(c)
}

fn read_file(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))
}

fn execute(command: Command, format: Format, workers: usize) -> Result<(String, i32)> {
    match command {
        Command::Bound { c, c_preset } => {
            let c_rat = match c_preset {
                Some(CPreset::Cq) => c_q_rational(),
                None => parse_c(&c)?,
            };
            let b = asymptotic_bounds(rat_to_f64(&c_rat))?;
            let doc = BoundsDoc {
                schema: SCHEMA_VERSION,
                c: bellrand::rational::format_rat(&c_rat),
                independent: b.independent,
                correlated: b.correlated,
                correlated_extrapolated: c_rat != c_q_rational(),
            };
            Ok((render(format, doc.to_json(), doc.to_csv()), 0))
        }
        Command::FEval { c } => {
            let t_rat = parse_rat(&c)?;
            let t = rat_to_f64(&t_rat);
            let f = f_max(t)?;
            let g = concave_envelope_g(t)?;
            let doc = FEvalDoc {
                schema: SCHEMA_VERSION,
                t: bellrand::rational::format_rat(&t_rat),
                f_value: f.value,
                f_argmax: f.argmax,
                g_value: g,
            };
            Ok((render(format, doc.to_json(), doc.to_csv()), 0))
        }
        Command::Table1 => {
            let pc = bellrand::math::PhysicsConstants::new();
            let b = asymptotic_bounds(pc.c_q)?;
            let doc = TableOneDoc {
                schema: SCHEMA_VERSION,
                rows: vec![
                    TableOneRow {
                        regime: "n=1".into(),
                        correlated: (pc.s_q + 4.0) / 24.0,
                        independent: pc.s_q / 8.0,
                    },
                    TableOneRow {
                        regime: "limit".into(),
                        correlated: b.correlated,
                        independent: b.independent,
                    },
                ],
            };
            Ok((render(format, doc.to_json(), doc.to_csv()), 0))
        }
        Command::SolveUniform { n, c, allow_n4 } => {
            let c = parse_c(&c)?;
            let r = solve_uniform_exact(n, &c, &SolveOptions { allow_n4, workers })?;
            let doc = SolveDoc::from_result(&r);
            Ok((render(format, doc.to_json(), doc.to_csv()), 0))
        }
        Command::SolveDist { n, c } => {
            let c = parse_c(&c)?;
            let r = bracket_p_n(n, &c, workers)?;
            let doc = SolveDoc::from_result(&r);
            Ok((render(format, doc.to_json(), doc.to_csv()), 0))
        }
        Command::Construct { n, c, l } => {
            let c = parse_c(&c)?;
            if l.is_some() && n.len() != 1 {
                return Err(Error::Invalid(
                    "--l applies to a single n, not a convergence list".into(),
                ));
            }
            let mut reports = Vec::with_capacity(n.len());
            for dim in &n {
                reports.push(threshold_construct(*dim, &c, l)?);
            }
            let doc = ThresholdDoc::from_reports(&c, &reports);
            Ok((render(format, doc.to_json(), doc.to_csv()), 0))
        }
        Command::Certify { x, y, m, c } => {
            let c = parse_c(&c)?;
            let sx = SettingSet::parse_text(&read_file(&x)?)?;
            let sy = SettingSet::parse_text(&read_file(&y)?)?;
            let cert = converse_certificate(&sx, &sy, m, &c)?;
            let doc = CertificateDoc::from_report(&cert);
            Ok((render(format, doc.to_json(), doc.to_csv()), 0))
        }
        Command::Simulate { strategy, runs, seed } => {
            let s = LhvmStrategy::from_json(&read_file(&strategy)?)?;
            let report = simulate_runs(&s, runs, seed, workers)?;
            let doc = SimulationDoc::from_report(&report);
            Ok((render(format, doc.to_json(), doc.to_csv()), 0))
        }
        Command::Verify { suite, samples, seed } => {
            let rows = run_suite(suite.to_suite(), samples, seed);
            let ok = all_pass(&rows);
            let doc = VerifyDoc {
                schema: SCHEMA_VERSION,
                seed,
                samples,
                all_pass: ok,
                rows: rows
                    .iter()
                    .map(|r| VerifyRowDoc {
                        suite: r.suite.clone(),
                        property: r.property.clone(),
                        statement: r.statement.clone(),
                        samples: r.samples,
                        worst_margin: r.worst_margin,
                        informational: r.informational,
                        pass: r.pass,
                    })
                    .collect(),
            };
            Ok((
                render(format, doc.to_json(), doc.to_csv()),
                if ok { 0 } else { 1 },
            ))
        }
    }
}

fn render(format: Format, json: String, csv: String) -> String {
    match format {
        Format::Json => json,
        Format::Csv => csv,
    }
}
