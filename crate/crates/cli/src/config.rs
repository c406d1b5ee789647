//! Run configuration: command-line flags layered over an optional JSON file.

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use tailforge::regime::RegimeLabel;
use tailforge::sequences::{Family, RangeVariant, SequenceDescriptor, Weights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeArg {
    A,
    B,
    C,
}

impl From<RegimeArg> for RegimeLabel {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::A => RegimeLabel::A,
            RegimeArg::B => RegimeLabel::B,
            RegimeArg::C => RegimeLabel::C,
        }
    }
}

/// Flags shared by every command. Each one overrides the matching field of
/// the `--config` file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON run configuration; flags take precedence over its fields.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Family name, e.g. polynomial, stretched-exp, gnedin-sinh.
    #[arg(long)]
    pub family: Option<String>,
    /// Full sequence descriptor as a JSON file.
    #[arg(long, value_name = "PATH")]
    pub sequence_file: Option<PathBuf>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    /// Record or sampling weights, one number per entry.
    #[arg(long, value_name = "PATH")]
    pub alpha_file: Option<PathBuf>,
    /// Explicit probabilities, one number per entry.
    #[arg(long, value_name = "PATH")]
    pub list_file: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<u64>,
    /// Levels as "a,b,c" or geometric "start:stop:factor".
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub residual_tol: Option<f64>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Regime to assume instead of classifying.
    #[arg(long, value_enum)]
    pub regime: Option<RegimeArg>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// The configuration file schema; every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub sequence: Option<Family>,
    pub family: Option<String>,
    pub c: Option<f64>,
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
    pub t: Option<f64>,
    pub alpha_file: Option<PathBuf>,
    pub list_file: Option<PathBuf>,
    pub n: Option<u64>,
    pub grid: Option<GridSpec>,
    pub tol: Option<f64>,
    pub residual_tol: Option<f64>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub regime: Option<RegimeArg>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<u64>),
    Text(String),
}

/// Validated configuration for one command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub sequence: SequenceDescriptor,
    pub n: Option<u64>,
    pub grid: Option<Vec<u64>>,
    pub tol: f64,
    pub residual_tol: Option<f64>,
    pub samples: u64,
    pub seed: u64,
    pub regime: Option<RegimeLabel>,
    pub format: Format,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_SAMPLES: u64 = 100_000;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn cfg_err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self, ConfigError> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str::<FileConfig>(&text)
                    .map_err(|e| ConfigError(format!("invalid config {}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };

        let family = match (&args.sequence_file, &args.family) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str::<Family>(&text)
                    .map_err(|e| ConfigError(format!("invalid sequence {}: {e}", path.display())))?
            }
            (None, Some(name)) => family_from_flags(name, args, &file)?,
            (None, None) => match (&file.sequence, &file.family) {
                (Some(f), _) => f.clone(),
                (None, Some(name)) => family_from_flags(name, args, &file)?,
                (None, None) => return cfg_err("no sequence given; use --family or --sequence-file"),
            },
        };
        let sequence = SequenceDescriptor::new(family).map_err(|e| ConfigError(e.to_string()))?;

        let grid = match (&args.grid, &file.grid) {
            (Some(text), _) => Some(parse_grid(text)?),
            (None, Some(GridSpec::Text(text))) => Some(parse_grid(text)?),
            (None, Some(GridSpec::List(v))) => Some(check_grid(v.clone())?),
            (None, None) => None,
        };
        let tol = args.tol.or(file.tol).unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol < 1.0) {
            return cfg_err(format!("tolerance must lie in (0, 1), got {tol}"));
        }
        let residual_tol = args.residual_tol.or(file.residual_tol);
        if residual_tol.is_some_and(|r| !(r > 0.0)) {
            return cfg_err("residual tolerance must be positive");
        }
        Ok(RunConfig {
            sequence,
            n: args.n.or(file.n),
            grid,
            tol,
            residual_tol,
            samples: args.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES),
            seed: args.seed.or(file.seed).unwrap_or(0),
            regime: args.regime.or(file.regime).map(Into::into),
            format: args.format.or(file.format).unwrap_or_default(),
            out: args.out.clone().or(file.out),
        })
    }

    /// The levels to run: the grid if given, else the single level.
    pub fn levels(&self) -> Result<Vec<u64>, ConfigError> {
        match (&self.grid, self.n) {
            (Some(g), _) => Ok(g.clone()),
            (None, Some(n)) => Ok(vec![n]),
            (None, None) => cfg_err("no level given; use --n or --grid"),
        }
    }

    pub fn single_level(&self) -> Result<u64, ConfigError> {
        match (self.n, &self.grid) {
            (Some(n), _) => Ok(n),
            (None, Some(g)) if g.len() == 1 => Ok(g[0]),
            _ => cfg_err("this command needs a single level --n"),
        }
    }
}

fn need(name: &str, flag: Option<f64>, file: Option<f64>) -> Result<f64, ConfigError> {
    match flag.or(file) {
        Some(v) => Ok(v),
        None => cfg_err(format!("missing --{name}")),
    }
}

fn family_from_flags(name: &str, args: &CommonArgs, file: &FileConfig) -> Result<Family, ConfigError> {
    let c = || need("c", args.c, file.c);
    let beta = || need("beta", args.beta, file.beta);
    let lambda = || need("lambda", args.lambda, file.lambda);
    let t = || need("t", args.t, file.t);
    let list = |flag: &Option<PathBuf>, from_file: &Option<PathBuf>, what: &str| -> Result<Vec<f64>, ConfigError> {
        match flag.as_ref().or(from_file.as_ref()) {
            Some(path) => read_numbers(path),
            None => cfg_err(format!("missing --{what}")),
        }
    };
    Ok(match name {
        "polynomial" => Family::Polynomial { c: c()?, beta: beta()? },
        "stretched-exp" => Family::StretchedExp { c: c()?, beta: beta()? },
        "gnedin-sinh" => Family::GnedinSinh { lambda: lambda()? },
        "gnedin-cosh" => Family::GnedinCosh { lambda: lambda()? },
        "ginibre-gamma" => Family::GinibreGamma { t: t()? },
        "explicit-list" => Family::ExplicitList { values: list(&args.list_file, &file.list_file, "list-file")? },
        "records-f-alpha" => Family::RecordsFAlpha {
            alpha: Weights::List { values: list(&args.alpha_file, &file.alpha_file, "alpha-file")? },
        },
        "poissonized-range" => Family::PoissonizedRange {
            t: t()?,
            weights: Weights::List { values: list(&args.alpha_file, &file.alpha_file, "alpha-file")? },
            variant: RangeVariant::AtLeast { j: 1 },
        },
        other => return cfg_err(format!("unknown family '{other}'")),
    })
}

/// Numbers separated by whitespace or commas, or a JSON array.
fn read_numbers(path: &Path) -> Result<Vec<f64>, ConfigError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text).map_err(|e| ConfigError(format!("invalid list {}: {e}", path.display())));
    }
    text.split(|ch: char| ch.is_whitespace() || ch == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| ConfigError(format!("bad number '{s}' in {}: {e}", path.display()))))
        .collect()
}

/// `"a,b,c"` or `"start:stop:factor"` (geometric, rounded, inclusive).
pub fn parse_grid(text: &str) -> Result<Vec<u64>, ConfigError> {
    let parts: Vec<&str> = text.split(':').collect();
    let levels = match parts.as_slice() {
        [list] => list
            .split(',')
            .map(|s| s.trim().parse::<u64>().map_err(|e| ConfigError(format!("bad grid entry '{s}': {e}"))))
            .collect::<Result<Vec<_>, _>>()?,
        [start, stop, factor] => {
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| ConfigError(format!("bad grid '{text}': {e}")));
            let (start, stop, factor) = (parse(start)?, parse(stop)?, parse(factor)?);
            if !(start >= 1.0 && stop >= start && factor > 1.0) {
                return cfg_err(format!("grid '{text}' needs 1 <= start <= stop and factor > 1"));
            }
            let mut out = Vec::new();
            let mut x = start;
            while x <= stop * (1.0 + 1e-12) {
                let v = x.round() as u64;
                if out.last() != Some(&v) {
                    out.push(v);
                }
                x *= factor;
            }
            out
        }
        _ => return cfg_err(format!("grid '{text}' is neither a list nor start:stop:factor")),
    };
    check_grid(levels)
}

fn check_grid(levels: Vec<u64>) -> Result<Vec<u64>, ConfigError> {
    if levels.is_empty() {
        return cfg_err("grid is empty");
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return cfg_err("grid must be strictly increasing");
    }
    Ok(levels)
}
