//! Command-line front end and file formats.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{self, Annotation};
use crate::kernel::{ClassLine, Quantifier, QuantifierBlock, Rule, RuleStep};
use crate::lp;
use crate::prover::{self, SafetyViolation, SearchConfig, SearchRecord};
use crate::rational::Rational;
use crate::recurrence::{self, BranchRecurrence, WeightDomain};
use crate::verifier::{self, ProofCertificate};

pub const SCHEMA_VERSION: u32 = 1;
pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECTED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "atlp",
    version,
    about = "Alternation-trading proof search for SAT time-space lower bounds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Best lower-bound exponent for one proof shape.
    Optimize(OptimizeArgs),
    /// Best exponent per proof length; writes a CSV chart.
    Search(SearchArgs),
    /// Same as `search`, CSV output only.
    Chart(ChartArgs),
    /// Check a certificate file.
    Verify(VerifyArgs),
    /// Growth roots of branching recurrences.
    Recur(RecurArgs),
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub annotation: String,
    #[arg(long, default_value = "1e-9")]
    pub tol: Rational,
    #[arg(long, default_value = "1/1000")]
    pub eps: Rational,
    /// Certificate JSON destination.
    #[arg(long, default_value = "certificate.json")]
    pub out: PathBuf,
    /// Also write the LP at the certified exponent, in text form.
    #[arg(long)]
    pub lp_dump: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exhaustive,
    Heuristic,
}

#[derive(Debug, Args)]
pub struct ChartArgs {
    #[arg(long, value_enum, default_value = "exhaustive")]
    pub mode: Mode,
    #[arg(long, default_value_t = 8)]
    pub max_lines: usize,
    /// Number of shape evaluations in heuristic mode.
    #[arg(long, default_value_t = 200)]
    pub budget: usize,
    #[arg(long, default_value = "1e-6")]
    pub tol: Rational,
    #[arg(long, default_value = "1/1000")]
    pub eps: Rational,
    #[arg(long, env = "ATLP_WORKERS")]
    pub workers: Option<usize>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub chart: ChartArgs,
    /// Full records (exact brackets and certificates) as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub path: PathBuf,
}

#[derive(Debug, Args)]
pub struct RecurArgs {
    /// Single-measure decrements, e.g. `1,4`.
    #[arg(long, conflicts_with = "branches")]
    pub decrements: Option<String>,
    /// Branch system, e.g. `3,1;5,4`; repeat for several systems.
    #[arg(long)]
    pub branches: Vec<String>,
    /// Measure weights, e.g. `1/2,1`.
    #[arg(long, conflicts_with = "optimize")]
    pub weights: Option<String>,
    /// Search for the weights minimizing the worst root.
    #[arg(long, requires = "weight_box")]
    pub optimize: bool,
    /// Weight intervals `lo:hi` per measure, comma separated.
    #[arg(long = "box", id = "weight_box")]
    pub weight_box: Option<String>,
    /// Constrain the weights to sum to this value.
    #[arg(long)]
    pub sum: Option<Rational>,
    #[arg(long, default_value = "1e-9")]
    pub tol: Rational,
    #[arg(long, default_value_t = 6)]
    pub digits: u32,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
}

fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}

fn io_error(path: &Path, e: impl ToString) -> CliError {
    CliError::Io(format!("{}: {}", path.display(), e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct BlockJson {
    q: String,
    a: Rational,
    b: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct StepJson {
    rule: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    x: Option<Rational>,
    blocks: Vec<BlockJson>,
    dts: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct CertificateJson {
    schema_version: u32,
    c: Rational,
    eps: Rational,
    a0: Rational,
    steps: Vec<StepJson>,
    nu: Rational,
}

pub fn certificate_to_json(cert: &ProofCertificate) -> String {
    let doc = CertificateJson {
        schema_version: SCHEMA_VERSION,
        c: cert.c.clone(),
        eps: cert.eps.clone(),
        a0: cert.a0.clone(),
        steps: cert
            .steps
            .iter()
            .map(|s| StepJson {
                rule: match s.rule {
                    Rule::Slowdown => "slowdown".into(),
                    Rule::Speedup => "speedup".into(),
                },
                x: s.x.clone(),
                blocks: s
                    .result
                    .blocks()
                    .iter()
                    .map(|b| BlockJson {
                        q: match b.quantifier {
                            Quantifier::Exists => "exists".into(),
                            Quantifier::Forall => "forall".into(),
                        },
                        a: b.guess_exp.clone(),
                        b: b.feed_exp.clone(),
                    })
                    .collect(),
                dts: s.result.dts_exp().clone(),
            })
            .collect(),
        nu: cert.final_ntime_exp.clone(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("certificate serializes");
    text.push('\n');
    text
}

pub fn certificate_from_json(text: &str) -> Result<ProofCertificate, String> {
    let doc: CertificateJson = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(format!("unsupported schema_version {}", doc.schema_version));
    }
    let steps = doc
        .steps
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let rule = match s.rule.as_str() {
                "slowdown" => Rule::Slowdown,
                "speedup" => Rule::Speedup,
                other => return Err(format!("step {}: unknown rule {other:?}", i + 1)),
            };
            let blocks = s
                .blocks
                .into_iter()
                .map(|b| {
                    let quantifier = match b.q.as_str() {
                        "exists" => Quantifier::Exists,
                        "forall" => Quantifier::Forall,
                        other => {
                            return Err(format!("step {}: unknown quantifier {other:?}", i + 1))
                        }
                    };
                    Ok(QuantifierBlock::new(quantifier, b.a, b.b))
                })
                .collect::<Result<Vec<_>, String>>()?;
            let result =
                ClassLine::new(blocks, s.dts).map_err(|e| format!("step {}: {e}", i + 1))?;
            Ok(RuleStep {
                rule,
                x: s.x,
                result,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(ProofCertificate {
        c: doc.c,
        eps: doc.eps,
        a0: doc.a0,
        steps,
        final_ntime_exp: doc.nu,
    })
}

/// Validated run parameters shared by the search commands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub tolerance: Rational,
    pub eps: Rational,
    pub max_lines: usize,
    pub budget: usize,
    pub worker_count: usize,
    pub csv_path: Option<PathBuf>,
    pub json_path: Option<PathBuf>,
}

impl RunConfig {
    fn from_args(args: &ChartArgs, json_path: Option<PathBuf>) -> Result<Self, CliError> {
        if !args.tol.is_positive() || args.tol > Rational::new(1, 100) {
            return Err(usage(format!("--tol {} must lie in (0, 1/100]", args.tol)));
        }
        if !args.eps.is_positive() {
            return Err(usage("--eps must be positive"));
        }
        if args.max_lines < 3 {
            return Err(usage("--max-lines must be at least 3"));
        }
        if args.mode == Mode::Heuristic && args.budget == 0 {
            return Err(usage("--budget must be at least 1"));
        }
        let worker_count = match args.workers {
            Some(0) => return Err(usage("--workers must be at least 1")),
            Some(n) => n,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        Ok(RunConfig {
            tolerance: args.tol.clone(),
            eps: args.eps.clone(),
            max_lines: args.max_lines,
            budget: args.budget,
            worker_count,
            csv_path: args.out.clone(),
            json_path,
        })
    }

    fn search(&self) -> SearchConfig {
        SearchConfig {
            tol: self.tolerance.clone(),
            eps: self.eps.clone(),
            workers: self.worker_count,
        }
    }
}

/// Parses and runs; returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Optimize(a) => cmd_optimize(&a, out),
        Command::Search(a) => cmd_search(&a.chart, a.json, out, err),
        Command::Chart(a) => cmd_search(&a, None, out, err),
        Command::Verify(a) => cmd_verify(&a.path, out),
        Command::Recur(a) => cmd_recur(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Io(e.to_string()))
}

/// The certificate as a chain of inclusions, one rule per line.
pub fn render_derivation(cert: &ProofCertificate) -> String {
    let mut s = format!("assume SAT in DTS[n^c] with c = {}\n", cert.c);
    s += &format!("NTIME[n^{{{}}}]\n", cert.a0);
    for step in &cert.steps {
        let why = match (&step.rule, &step.x) {
            (Rule::Speedup, Some(x)) => format!("Speedup, with x = {x}"),
            (Rule::Speedup, None) => "Speedup".to_string(),
            (Rule::Slowdown, _) => "Slowdown".to_string(),
        };
        s += &format!("  ⊆ {}    ({why})\n", step.result);
    }
    s += &format!("  ⊆ NTIME[n^{{{}}}]\n", cert.final_ntime_exp);
    s += &format!(
        "{} <= a0 - eps = {}: contradicts the nondeterministic time hierarchy\n",
        cert.final_ntime_exp,
        &cert.a0 - &cert.eps
    );
    s
}

pub fn cmd_optimize(args: &OptimizeArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let a = annotation::validate(&args.annotation)
        .map_err(|e| usage(format!("invalid annotation: {e}")))?;
    let best = prover::best_exponent(&a, &args.tol, &args.eps).map_err(usage)?;
    let cert = &best.certificate;
    if let Err(rejected) = verifier::verify(cert) {
        return Err(usage(format!(
            "internal error: produced certificate rejected: {rejected}"
        )));
    }
    fs::write(&args.out, certificate_to_json(cert)).map_err(|e| io_error(&args.out, e))?;
    if let Some(path) = &args.lp_dump {
        let program = lp::build_lp(&a, &best.lower, &args.eps).map_err(usage)?;
        fs::write(path, program.program.to_string()).map_err(|e| io_error(path, e))?;
    }
    let mut text = format!(
        "annotation {a} ({} lines)\nc* in [{}, {}]\nc* ~ {}\n\n",
        a.len(),
        best.lower,
        best.upper,
        best.lower.to_decimal(6)
    );
    text += &render_derivation(cert);
    text += &format!("certificate written to {}\n", args.out.display());
    write_out(out, &text)?;
    Ok(EXIT_OK)
}

pub fn chart_csv(rows: &[SearchRecord]) -> String {
    let mut s = String::from("lines,best_c,annotation\n");
    for r in rows {
        s += &format!(
            "{},{},{}\n",
            r.lines,
            r.midpoint().to_decimal(6),
            r.annotation
        );
    }
    s
}

#[derive(Serialize)]
struct RecordJson {
    lines: usize,
    annotation: String,
    best_c: Rational,
    upper_c: Rational,
    best_c_decimal: String,
    certificate: serde_json::Value,
}

fn records_json(rows: &[SearchRecord]) -> String {
    let docs: Vec<RecordJson> = rows
        .iter()
        .map(|r| RecordJson {
            lines: r.lines,
            annotation: r.annotation.to_string(),
            best_c: r.best_c.clone(),
            upper_c: r.upper_c.clone(),
            best_c_decimal: r.midpoint().to_decimal(6),
            certificate: serde_json::from_str(&certificate_to_json(&r.certificate))
                .expect("certificate JSON round-trips"),
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&docs).expect("records serialize");
    text.push('\n');
    text
}

/// Runs the configured search and returns one row per length.
pub fn search_table(mode: Mode, config: &RunConfig) -> Result<Vec<SearchRecord>, CliError> {
    let search = config.search();
    let seeds = prover::exhaustive_search(config.max_lines, &search).map_err(usage)?;
    match mode {
        Mode::Exhaustive => Ok(seeds),
        Mode::Heuristic => {
            let found = prover::heuristic_search(&seeds, config.budget, &search).map_err(usage)?;
            Ok(prover::frontier(&found))
        }
    }
}

pub fn cmd_search(
    args: &ChartArgs,
    json_path: Option<PathBuf>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let config = RunConfig::from_args(args, json_path)?;
    let rows = search_table(args.mode, &config)?;
    for v in prover::safety_violations(&rows) {
        let msg = match v {
            SafetyViolation::Ceiling(a, c) => {
                format!("warning: {a} reaches c = {c}, at or above 2")
            }
            SafetyViolation::Conjecture(a, c) => {
                format!("warning: {a} reaches c = {c}, above 2cos(pi/7); needs review")
            }
        };
        let _ = writeln!(err, "{msg}");
    }
    let csv = chart_csv(&rows);
    match &config.csv_path {
        Some(path) => fs::write(path, &csv).map_err(|e| io_error(path, e))?,
        None => write_out(out, &csv)?,
    }
    if let Some(path) = &config.json_path {
        fs::write(path, records_json(&rows)).map_err(|e| io_error(path, e))?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_verify(path: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let cert = certificate_from_json(&text).map_err(|e| io_error(path, e))?;
    match verifier::verify(&cert) {
        Ok(()) => {
            write_out(out, "ACCEPTED\n")?;
            Ok(EXIT_OK)
        }
        Err(rejected) => {
            write_out(out, &format!("REJECTED {rejected}\n"))?;
            Ok(EXIT_REJECTED)
        }
    }
}

fn parse_box(text: &str) -> Result<Vec<(Rational, Rational)>, CliError> {
    text.split(',')
        .map(|part| {
            let (lo, hi) = part
                .split_once(':')
                .ok_or_else(|| usage(format!("bad interval {part:?}, expected lo:hi")))?;
            let lo: Rational = lo.trim().parse().map_err(usage)?;
            let hi: Rational = hi.trim().parse().map_err(usage)?;
            Ok((lo, hi))
        })
        .collect()
}

pub fn cmd_recur(args: &RecurArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let digits = args.digits;
    let tol = &args.tol;
    let mut text = String::new();
    if let Some(list) = &args.decrements {
        let d = recurrence::parse_list(list).map_err(usage)?;
        let root = recurrence::growth_root(&d, tol).map_err(usage)?;
        text += &format!("{}  bracket {root}\n", root.midpoint().to_decimal(digits));
        write_out(out, &text)?;
        return Ok(EXIT_OK);
    }
    if args.branches.is_empty() {
        return Err(usage("give --decrements or at least one --branches system"));
    }
    let systems = args
        .branches
        .iter()
        .map(|s| s.parse::<BranchRecurrence>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(usage)?;
    if args.optimize {
        let bounds = parse_box(args.weight_box.as_deref().unwrap_or_default())?;
        let domain = WeightDomain {
            bounds,
            sum: args.sum.clone(),
        };
        let opt = recurrence::optimize_weights(&systems, &domain, tol).map_err(usage)?;
        let weights: Vec<String> = opt.weights.iter().map(ToString::to_string).collect();
        text += &format!("weights {}\n", weights.join(","));
        text += &format!(
            "{}  bracket {}\n",
            opt.objective.midpoint().to_decimal(digits),
            opt.objective
        );
        if !opt.converged {
            text += "warning: coordinate descent did not certify convergence\n";
        }
        write_out(out, &text)?;
        return Ok(EXIT_OK);
    }
    let weights = match &args.weights {
        Some(w) => recurrence::parse_list(w).map_err(usage)?,
        None => {
            let dim = systems[0].dimension();
            vec![Rational::one(); dim]
        }
    };
    let mut worst: Option<recurrence::RootBracket> = None;
    for system in &systems {
        let d = recurrence::combine_weights(system, &weights).map_err(usage)?;
        let root = recurrence::growth_root(&d, tol).map_err(usage)?;
        let shown: Vec<String> = d.iter().map(ToString::to_string).collect();
        text += &format!(
            "decrements {}: {}  bracket {root}\n",
            shown.join(","),
            root.midpoint().to_decimal(digits)
        );
        if worst.as_ref().is_none_or(|w| root.hi > w.hi) {
            worst = Some(root);
        }
    }
    if systems.len() > 1 {
        if let Some(w) = worst {
            text += &format!("worst {}  bracket {w}\n", w.midpoint().to_decimal(digits));
        }
    }
    write_out(out, &text)?;
    Ok(EXIT_OK)
}

/// Annotation strings accepted by every command.
pub fn parse_annotation(text: &str) -> Result<Annotation, CliError> {
    annotation::validate(text).map_err(usage)
}
