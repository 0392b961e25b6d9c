use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

pub const CONFIG_ENV: &str = "BHATT_CONFIG";

#[derive(Debug, Parser)]
#[command(name = "bhatt", version, about = "Cramér-Rao and Bhattacharyya bounds, estimator existence and MSE scans")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum CommandKind {
    Bounds,
    Exists,
    Scan,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print Cramér-Rao and Bhattacharyya bounds for orders 1..n.
    Bounds(RunArgs),
    /// Decide estimator existence for orders 0..n.
    Exists(RunArgs),
    /// Scan bias, variance and MSE of the saturating estimators over a grid.
    Scan(RunArgs),
}

impl Command {
    pub fn split(self) -> (CommandKind, RunArgs) {
        match self {
            Command::Bounds(a) => (CommandKind::Bounds, a),
            Command::Exists(a) => (CommandKind::Exists, a),
            Command::Scan(a) => (CommandKind::Scan, a),
        }
    }
}

#[derive(Debug, Default, Clone, Args)]
pub struct RunArgs {
    /// Built-in scenario: bernoulli, quadratic, binomial2, binomial3,
    /// zero-score, mach-zehnder, qubit, qutrit-rotation, qutrit-diagonal.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Tabulated model or density-stack file.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: Option<f64>,
    #[arg(long)]
    pub order: Option<usize>,
    /// Qubit purity parameter.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Photons per arm for the interferometer.
    #[arg(long)]
    pub r: Option<u32>,
    /// Scan grid as lo:hi:n.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long)]
    pub tol_rank: Option<f64>,
    #[arg(long)]
    pub p_min: Option<f64>,
    #[arg(long)]
    pub tail_mass: Option<f64>,
    /// Comma-separated interval widths for the integrated MSE gap.
    #[arg(long)]
    pub deltas: Option<String>,
    /// Exit with status 2 when a requested bound diverges.
    #[arg(long)]
    pub strict: bool,
    /// Output CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// TOML configuration file (overrides $BHATT_CONFIG).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Keys accepted in the configuration file.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub scenario: Option<String>,
    pub model_file: Option<PathBuf>,
    pub theta0: Option<f64>,
    pub order: Option<usize>,
    pub lambda: Option<f64>,
    pub r: Option<u32>,
    pub grid: Option<String>,
    pub tol_rank: Option<f64>,
    pub p_min: Option<f64>,
    pub tail_mass: Option<f64>,
    pub deltas: Option<Vec<f64>>,
    pub strict: Option<bool>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl std::str::FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts[..] else {
            return Err(format!("grid must be lo:hi:n, got '{s}'"));
        };
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("invalid grid bound '{v}'"));
        let (lo, hi) = (num(lo)?, num(hi)?);
        let n: usize = n.trim().parse().map_err(|_| format!("invalid grid size '{n}'"))?;
        if n == 0 {
            return Err("grid needs at least one point".into());
        }
        if !(lo.is_finite() && hi.is_finite()) || (n > 1 && !(hi > lo)) {
            return Err(format!("grid bounds must satisfy lo < hi, got {lo}:{hi}"));
        }
        Ok(Self { lo, hi, n })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Scenario(String),
    File(PathBuf),
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub source: Source,
    pub theta0: Option<f64>,
    pub order: usize,
    pub lambda: f64,
    pub r: u32,
    pub grid: Option<GridSpec>,
    pub tol_rank: f64,
    pub p_min: f64,
    pub tail_mass: f64,
    pub deltas: Option<Vec<f64>>,
    pub strict: bool,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

pub const DEFAULT_ORDER: usize = 2;
pub const DEFAULT_LAMBDA: f64 = 0.25;
pub const DEFAULT_R: u32 = 5000;
pub const DEFAULT_TAIL_MASS: f64 = 1e-12;

fn positive(name: &str, v: f64) -> Result<f64, String> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{name} must be positive, got {v}"))
    }
}

fn parse_deltas(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("invalid delta '{t}'"))
        })
        .collect()
}

impl RunConfig {
    /// Merges flags over the configuration file over defaults. The file is
    /// `--config` if given, else `$BHATT_CONFIG` if set.
    pub fn resolve(command: CommandKind, args: RunArgs, env_config: Option<PathBuf>) -> Result<Self, String> {
        let file = match args.config.clone().or(env_config) {
            Some(path) => FileConfig::load(&path)?,
            None => FileConfig::default(),
        };

        let source = match (args.scenario, args.model_file) {
            (Some(_), Some(_)) => return Err("give either --scenario or --model-file, not both".into()),
            (Some(s), None) => Source::Scenario(s),
            (None, Some(p)) => Source::File(p),
            (None, None) => match (file.scenario, file.model_file) {
                (Some(_), Some(_)) => return Err("config sets both scenario and model_file".into()),
                (Some(s), None) => Source::Scenario(s),
                (None, Some(p)) => Source::File(p),
                (None, None) => return Err("no model: use --scenario or --model-file".into()),
            },
        };

        let order = args.order.or(file.order).unwrap_or(DEFAULT_ORDER);
        if order == 0 && command != CommandKind::Exists {
            return Err("order must be at least 1".into());
        }
        let grid = match args.grid.or(file.grid) {
            Some(g) => Some(g.parse::<GridSpec>()?),
            None => None,
        };
        let deltas = match (args.deltas, file.deltas) {
            (Some(s), _) => Some(parse_deltas(&s)?),
            (None, d) => d,
        };
        if let Some(d) = &deltas {
            if d.is_empty() || d.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err("deltas must be non-negative numbers".into());
            }
        }
        let threads = args.threads.or(file.threads);
        if threads == Some(0) {
            return Err("threads must be at least 1".into());
        }
        let theta0 = args.theta0.or(file.theta0);
        if let Some(t) = theta0 {
            if !t.is_finite() {
                return Err(format!("theta0 must be finite, got {t}"));
            }
        }
        let p_min = args.p_min.or(file.p_min).unwrap_or(bhatt_core::DEFAULT_P_MIN);
        if !(p_min >= 0.0) {
            return Err(format!("p_min must be non-negative, got {p_min}"));
        }

        Ok(Self {
            command,
            source,
            theta0,
            order,
            lambda: args.lambda.or(file.lambda).unwrap_or(DEFAULT_LAMBDA),
            r: args.r.or(file.r).unwrap_or(DEFAULT_R),
            grid,
            tol_rank: positive("tol_rank", args.tol_rank.or(file.tol_rank).unwrap_or(bhatt_core::DEFAULT_TOL_RANK))?,
            p_min,
            tail_mass: positive("tail_mass", args.tail_mass.or(file.tail_mass).unwrap_or(DEFAULT_TAIL_MASS))?,
            deltas,
            strict: args.strict || file.strict.unwrap_or(false),
            out: args.out.or(file.out),
            threads,
        })
    }
}
