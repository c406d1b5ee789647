//! `tailforge` command-line front end.

mod config;
mod output;

use clap::{Parser, Subcommand};
use config::{CommonArgs, ConfigError, RunConfig};
use output::{fmt17, Table};
use serde::Serialize;
use std::process::ExitCode;
use tailforge::closed_forms::{self, ExplicitAsymptotic};
use tailforge::estimates::{default_grid, estimate_with_report, SaddleChoice, TailEstimate};
use tailforge::exact::{exact_pmf, gnedin_cosh_log_pmf, gnedin_sinh_log_pmf, mc_tilted};
use tailforge::regime::{classify, RegimeLabel, RegimeReport, Thresholds};
use tailforge::saddle::{default_residual_tol, solve, SaddleSolution};
use tailforge::sequences::{Family, SequenceDescriptor};
use tailforge::Error;

#[derive(Debug, Parser)]
#[command(name = "tailforge", version, about = "Tail probabilities of infinite sums of independent indicators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve ψ'(s) = n at one level or along a grid.
    Saddle(CommonArgs),
    /// Classify the asymptotic regime along a grid.
    Classify(CommonArgs),
    /// Saddle-point estimate of log P{Y = n}.
    Estimate(CommonArgs),
    /// Estimates against an exact oracle along a grid.
    Compare(CommonArgs),
    /// Exponentially tilted Monte Carlo estimate of log P{Y = n}.
    Mc(CommonArgs),
    /// Named summands of the explicit asymptotic formula.
    Terms(CommonArgs),
}

enum Failure {
    Config(String),
    Unsolvable(String),
    Undetermined(String),
    Oracle(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Unsolvable(_) => 2,
            Failure::Config(_) => 3,
            Failure::Undetermined(_) => 4,
            Failure::Oracle(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m)
            | Failure::Unsolvable(m)
            | Failure::Undetermined(m)
            | Failure::Oracle(m)
            | Failure::Other(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::NoSolution { .. } | Error::LevelTooSmall { .. } | Error::SolverStalled { .. } => {
                Failure::Unsolvable(msg)
            }
            Error::Domain(_) | Error::InvalidPerturbation { .. } | Error::UnsupportedFamily(_) => Failure::Config(msg),
            Error::CannotEstimate(_) => Failure::Undetermined(msg),
            _ => Failure::Other(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Saddle(a) => cmd_saddle(&RunConfig::resolve(&a)?),
        Command::Classify(a) => cmd_classify(&RunConfig::resolve(&a)?),
        Command::Estimate(a) => cmd_estimate(&RunConfig::resolve(&a)?),
        Command::Compare(a) => cmd_compare(&RunConfig::resolve(&a)?),
        Command::Mc(a) => cmd_mc(&RunConfig::resolve(&a)?),
        Command::Terms(a) => cmd_terms(&RunConfig::resolve(&a)?),
    }
}

/// One object for a single level, an array for a grid.
fn emit_json<T: Serialize>(cfg: &RunConfig, rows: &[T]) -> Result<(), Failure> {
    if rows.len() == 1 && cfg.grid.is_none() {
        output::write_json(cfg, &rows[0])
    } else {
        output::write_json(cfg, &rows)
    }
}

fn cmd_saddle(cfg: &RunConfig) -> Result<(), Failure> {
    let mut rows: Vec<SaddleSolution> = Vec::new();
    for n in cfg.levels()? {
        rows.push(solve(&cfg.sequence, n, cfg.residual_tol.unwrap_or_else(|| default_residual_tol(n)))?);
    }
    match cfg.format {
        config::Format::Json => emit_json(cfg, &rows),
        config::Format::Csv => {
            let mut t = Table::new(&["n", "s", "psi", "psi_prime", "psi_double_prime", "residual"]);
            for r in &rows {
                t.row(vec![
                    r.n.to_string(),
                    fmt17(r.s),
                    fmt17(r.psi),
                    fmt17(r.psi_prime),
                    fmt17(r.psi_double_prime),
                    fmt17(r.residual),
                ]);
            }
            t.write(cfg)
        }
    }
}

fn classification_grid(cfg: &RunConfig) -> Result<Vec<u64>, Failure> {
    match (&cfg.grid, cfg.n) {
        (Some(g), _) if g.len() >= 3 => Ok(g.clone()),
        (Some(g), _) => Ok(default_grid(*g.last().expect("non-empty grid"))),
        (None, Some(n)) => Ok(default_grid(n)),
        (None, None) => Err(Failure::Config("no level given; use --n or --grid".into())),
    }
}

fn cmd_classify(cfg: &RunConfig) -> Result<(), Failure> {
    let report = classify(&cfg.sequence, &classification_grid(cfg)?, &Thresholds::default())?;
    match cfg.format {
        config::Format::Json => output::write_json(cfg, &report)?,
        config::Format::Csv => {
            let mut t = Table::new(&["n", "s", "psi_double_prime", "head_sum", "tail_sum", "label"]);
            for g in &report.grid {
                t.row(vec![
                    g.n.to_string(),
                    fmt17(g.s),
                    fmt17(g.psi2),
                    fmt17(g.head_sum),
                    fmt17(g.tail_sum),
                    report.label.to_string(),
                ]);
            }
            t.write(cfg)?;
        }
    }
    if report.label == RegimeLabel::Undetermined {
        return Err(Failure::Undetermined("regime undetermined on this grid".into()));
    }
    Ok(())
}

/// The classification needed for an estimate, unless the regime is given.
fn regime_report(cfg: &RunConfig) -> Result<Option<RegimeReport>, Failure> {
    match cfg.regime {
        Some(RegimeLabel::A) | Some(RegimeLabel::B) => Ok(None),
        _ => {
            let report = classify(&cfg.sequence, &classification_grid(cfg)?, &Thresholds::default())?;
            if cfg.regime.is_none() && report.label == RegimeLabel::Undetermined {
                return Err(Failure::Undetermined("regime undetermined; pass --regime".into()));
            }
            Ok(Some(report))
        }
    }
}

fn estimates(cfg: &RunConfig, levels: &[u64]) -> Result<Vec<TailEstimate>, Failure> {
    let report = regime_report(cfg)?;
    levels
        .iter()
        .map(|&n| Ok(estimate_with_report(&cfg.sequence, n, cfg.regime, report.as_ref(), SaddleChoice::Numeric)?))
        .collect()
}

fn cmd_estimate(cfg: &RunConfig) -> Result<(), Failure> {
    let rows = estimates(cfg, &cfg.levels()?)?;
    match cfg.format {
        config::Format::Json => emit_json(cfg, &rows),
        config::Format::Csv => {
            let mut t = Table::new(&["n", "regime", "log_point", "log_tail", "s", "c0"]);
            for e in &rows {
                t.row(vec![
                    e.n.to_string(),
                    e.regime.to_string(),
                    fmt17(e.log_point),
                    fmt17(e.log_tail),
                    fmt17(e.saddle.s),
                    e.c0_used.map(fmt17).unwrap_or_default(),
                ]);
            }
            t.write(cfg)
        }
    }
}

/// Exact `log P{Y = n}` from a closed form when one exists, otherwise from
/// the exact convolution.
fn oracle(seq: &SequenceDescriptor, levels: &[u64], tol: f64) -> Result<Vec<f64>, Failure> {
    match *seq.family() {
        Family::GnedinSinh { lambda } => Ok(levels.iter().map(|&n| gnedin_sinh_log_pmf(lambda, n)).collect()),
        Family::GnedinCosh { lambda } => Ok(levels.iter().map(|&n| gnedin_cosh_log_pmf(lambda, n)).collect()),
        _ => {
            let top = *levels.iter().max().expect("non-empty grid") as usize;
            let pmf = exact_pmf(seq, 2 * top + 2, tol).map_err(|e| Failure::Oracle(e.to_string()))?;
            Ok(levels.iter().map(|&n| pmf.log_p[n as usize]).collect())
        }
    }
}

/// The explicit asymptotic for the family, if one applies. The sinh family
/// reaches the polynomial formula through the product constant
/// `Π (1 + (λ/πk)²)^{-1} = λ/sinh λ`.
fn explicit(seq: &SequenceDescriptor, n: u64) -> Option<f64> {
    match *seq.family() {
        Family::GnedinSinh { lambda } => {
            let c = (lambda / std::f64::consts::PI).powi(2);
            let base = closed_forms::polynomial(c, 2.0, n as f64).ok()?;
            Some(base.log_value + (lambda / lambda.sinh()).ln())
        }
        ref f => closed_forms::for_family(f, n as f64).ok().map(|e| e.log_value),
    }
}

#[derive(Debug, Serialize)]
struct CompareRow {
    n: u64,
    log_exact: f64,
    log_generic: f64,
    log_explicit: Option<f64>,
    gap_generic: f64,
    gap_explicit: Option<f64>,
    /// `gap_generic` over the previous row's.
    gap_ratio: Option<f64>,
}

fn cmd_compare(cfg: &RunConfig) -> Result<(), Failure> {
    let levels = cfg.levels()?;
    let exact = oracle(&cfg.sequence, &levels, cfg.tol)?;
    let generic = estimates(cfg, &levels)?;
    let mut rows: Vec<CompareRow> = Vec::with_capacity(levels.len());
    for ((&n, &log_exact), est) in levels.iter().zip(&exact).zip(&generic) {
        let log_explicit = explicit(&cfg.sequence, n);
        let gap_generic = (est.log_point - log_exact).abs();
        let gap_ratio = rows.last().map(|p| gap_generic / p.gap_generic);
        rows.push(CompareRow {
            n,
            log_exact,
            log_generic: est.log_point,
            log_explicit,
            gap_generic,
            gap_explicit: log_explicit.map(|v| (v - log_exact).abs()),
            gap_ratio,
        });
    }
    match cfg.format {
        config::Format::Json => output::write_json(cfg, &rows),
        config::Format::Csv => {
            let mut t = Table::new(&[
                "n",
                "log_exact",
                "log_generic",
                "log_explicit",
                "gap_generic",
                "gap_explicit",
                "gap_ratio",
            ]);
            let opt = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
            for r in &rows {
                t.row(vec![
                    r.n.to_string(),
                    fmt17(r.log_exact),
                    fmt17(r.log_generic),
                    opt(r.log_explicit),
                    fmt17(r.gap_generic),
                    opt(r.gap_explicit),
                    opt(r.gap_ratio),
                ]);
            }
            t.write(cfg)
        }
    }
}

fn cmd_mc(cfg: &RunConfig) -> Result<(), Failure> {
    let est = mc_tilted(&cfg.sequence, cfg.single_level()?, cfg.samples, cfg.seed)?;
    match cfg.format {
        config::Format::Json => output::write_json(cfg, &est),
        config::Format::Csv => {
            let mut t = Table::new(&["n", "s", "log_point_estimate", "std_error_log", "samples", "seed", "hits"]);
            t.row(vec![
                est.n.to_string(),
                fmt17(est.s),
                fmt17(est.log_point_estimate),
                fmt17(est.std_error_log),
                est.samples.to_string(),
                est.seed.to_string(),
                est.hits.to_string(),
            ]);
            t.write(cfg)
        }
    }
}

fn cmd_terms(cfg: &RunConfig) -> Result<(), Failure> {
    let n = cfg.single_level()?;
    let form: ExplicitAsymptotic = closed_forms::for_family(cfg.sequence.family(), n as f64)?;
    match cfg.format {
        config::Format::Json => output::write_json(cfg, &form),
        config::Format::Csv => {
            let mut t = Table::new(&["term", "value"]);
            for (name, v) in &form.terms {
                t.row(vec![name.clone(), fmt17(*v)]);
            }
            t.row(vec!["log_value".into(), fmt17(form.log_value)]);
            t.write(cfg)
        }
    }
}
