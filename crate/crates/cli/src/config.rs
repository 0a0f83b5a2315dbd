use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{CommandFactory, Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use rso_core::beta_field::{Backend, SamplerConfig};
use rso_core::operator::Bc;
use rso_core::spectral_stats::MomentKind;

use crate::CliError;

/// Environment variable that overrides `--seed`.
pub const SEED_ENV: &str = "RSO_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Dump retained β configurations, one CSV per chain.
    Sample,
    /// Integrated density of states on an energy grid, with bound audit.
    Ids,
    /// Wegner increments around one energy.
    Wegner,
    /// Green-function moments along an axis; Ω events when `--kappa` is set.
    Decay,
    /// Critical couplings in dimension `--d`.
    Critical,
    /// Resistance identity, one row per sample.
    Resistance,
    /// ψ_L means and brackets for the radii in `--ls`.
    Martingale,
    /// Ordering of E[√ratio] between two couplings or pinnings.
    Monotonicity,
    /// Sampler oracles: Laplace transform, Gamma marginal, RIG moments,
    /// resistance identity.
    Validate,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_possible_value().expect("no skipped variants");
        f.write_str(v.get_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryArg {
    Wired,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendArg {
    Auto,
    Dense,
    Chain,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Auto => Backend::Auto,
            BackendArg::Dense => Backend::Dense,
            BackendArg::Chain => Backend::Chain,
        }
    }
}

/// Real grid given as `a,b,c`, `geom:lo:hi:n` or `lin:lo:hi:n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let spaced = |kind: &str, rest: &str| -> Result<Grid, String> {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(format!("`{kind}:` grids need lo:hi:n, got `{rest}`"));
            }
            let lo: f64 = parts[0].trim().parse().map_err(|e| format!("bad lo `{}`: {e}", parts[0]))?;
            let hi: f64 = parts[1].trim().parse().map_err(|e| format!("bad hi `{}`: {e}", parts[1]))?;
            let n: usize = parts[2].trim().parse().map_err(|e| format!("bad n `{}`: {e}", parts[2]))?;
            if n == 0 || !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return Err(format!("invalid grid `{s}`"));
            }
            if kind == "geom" {
                if lo <= 0.0 {
                    return Err("geometric grids need lo > 0".into());
                }
                Ok(Grid(rso_core::stats::geometric_grid(lo, hi, n)))
            } else {
                Ok(Grid(rso_core::stats::linear_grid(lo, hi, n)))
            }
        };
        if let Some(rest) = s.strip_prefix("geom:") {
            return spaced("geom", rest);
        }
        if let Some(rest) = s.strip_prefix("lin:") {
            return spaced("lin", rest);
        }
        let vals: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
        let vals = vals.map_err(|e| format!("bad number list `{s}`: {e}"))?;
        if vals.is_empty() || vals.iter().any(|v| !v.is_finite()) {
            return Err(format!("grid `{s}` must hold finite numbers"));
        }
        Ok(Grid(vals))
    }
}

/// Comma-separated list of radii.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Radii(pub Vec<usize>);

impl FromStr for Radii {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map(Radii)
            .map_err(|e| format!("bad radius list `{s}`: {e}"))
    }
}

fn parse_bc(s: &str) -> Result<Bc, String> {
    s.parse()
}

fn parse_moment(s: &str) -> Result<MomentKind, String> {
    match s {
        "quarter-green" => Ok(MomentKind::QuarterGreen),
        "ratio-sqrt" => Ok(MomentKind::RatioSqrt),
        other => Err(format!("unknown moment `{other}` (quarter-green, ratio-sqrt)")),
    }
}

/// Everything a run depends on. Serialized verbatim into the JSON summary.
///
/// Flags may also come from `--config FILE`, a list of `key = value` lines
/// whose keys are the flag names without dashes. Flags on the command line
/// win over the file.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[command(name = "rso", version, about = "Random Schrödinger operator laboratory", args_override_self = true)]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,

    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Box half-width (inner box for `resistance`).
    #[arg(long = "L", default_value_t = 10)]
    #[serde(rename = "L")]
    pub l: usize,
    /// Outer box half-width for `resistance` and `martingale`.
    #[arg(long = "K", default_value_t = 8)]
    #[serde(rename = "K")]
    pub k: usize,
    /// Uniform edge weight.
    #[arg(long = "W", default_value_t = 1.0)]
    #[serde(rename = "W")]
    pub w: f64,
    #[arg(long, default_value = "simple", value_parser = parse_bc)]
    pub bc: Bc,
    /// Boundary field of the box (`sample`, `decay`).
    #[arg(long, value_enum, default_value_t = BoundaryArg::Wired)]
    pub boundary: BoundaryArg,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Energy grid (`ids`, Ω implication energies for `decay`).
    #[arg(long)]
    pub energies: Option<Grid>,
    /// Half-widths of the Wegner windows.
    #[arg(long)]
    pub epsilons: Option<Grid>,
    /// Window centre for `wegner`.
    #[arg(long, default_value_t = 0.5)]
    pub energy: f64,
    /// Log-log fit range for `ids`; defaults to the grid ends.
    #[arg(long)]
    pub fit_lo: Option<f64>,
    #[arg(long)]
    pub fit_hi: Option<f64>,
    /// Accepted slope range for the `ids` log-log fit; unchecked if absent.
    #[arg(long)]
    pub slope_min: Option<f64>,
    #[arg(long)]
    pub slope_max: Option<f64>,
    #[arg(long, default_value = "quarter-green", value_parser = parse_moment)]
    pub moment: MomentKind,
    /// Decay rate for the Ω events (`decay`).
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Radii for `martingale`.
    #[arg(long, default_value = "2,3,4")]
    pub ls: Radii,
    /// Upper coupling for `monotonicity`.
    #[arg(long)]
    pub w_upper: Option<f64>,
    /// Compare η ≡ 0 against this pinning at `--j0` instead of two couplings.
    #[arg(long)]
    pub pin: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub j0: usize,
    #[arg(long, default_value_t = 2)]
    pub j: usize,
    /// Quadrature tolerance for three-vertex oracles.
    #[arg(long, default_value_t = 1e-9)]
    pub quad_tol: f64,
    /// Independent ρ_a draws per `a` in `validate`.
    #[arg(long, default_value_t = 1_000_000)]
    pub draws: usize,
    /// Graph dump (`# rso-graph v1`) for the Laplace check in `validate`.
    #[arg(long)]
    pub graph: Option<PathBuf>,

    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    #[arg(long, default_value_t = 500)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 10)]
    pub thinning: usize,
    /// Retained samples over all chains; the default depends on the command.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub refresh_every: Option<usize>,
    #[arg(long, value_enum, default_value_t = BackendArg::Auto)]
    pub backend: BackendArg,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl RunConfig {
    /// Parses `args` (program name first), merging `--config` and
    /// `RSO_SEED` when `env_seed` is given.
    pub fn from_args<I, T>(args: I, env_seed: Option<String>) -> Result<Self, clap::Error>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
        let mut argv = args.iter().take(1).cloned().collect::<Vec<_>>();
        if let Some(path) = config_path(&args) {
            let text = std::fs::read_to_string(&path).map_err(|e| {
                clap::Error::raw(
                    clap::error::ErrorKind::Io,
                    format!("cannot read config {}: {e}\n", path.display()),
                )
            })?;
            argv.extend(file_tokens(&text).map_err(|m| {
                clap::Error::raw(clap::error::ErrorKind::InvalidValue, format!("{}: {m}\n", path.display()))
            })?);
        }
        argv.extend(args.into_iter().skip(1));
        let mut cfg = RunConfig::try_parse_from(argv)?;
        if let Some(s) = env_seed {
            cfg.seed = s.trim().parse().map_err(|_| {
                clap::Error::raw(
                    clap::error::ErrorKind::InvalidValue,
                    format!("{SEED_ENV}={s} is not a 64-bit unsigned integer\n"),
                )
            })?;
        }
        Ok(cfg)
    }

    /// Defaults for a command, as if given on the command line alone.
    pub fn for_command(command: Command) -> Self {
        RunConfig::try_parse_from(["rso", &command.to_string()]).expect("defaults parse")
    }

    pub fn samples(&self) -> usize {
        self.samples.unwrap_or(match self.command {
            Command::Validate => 100_000,
            Command::Resistance => 100,
            _ => 1000,
        })
    }

    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            seed: self.seed,
            burn_in: self.burn_in,
            thinning: self.thinning,
            refresh_every: self.refresh_every,
            chains: self.chains,
            samples: self.samples(),
            allow_zero_eta: self.boundary == BoundaryArg::Zero,
            backend: self.backend.into(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.d == 0 {
            return bad("--d must be at least 1".into());
        }
        if !(self.w > 0.0 && self.w.is_finite()) {
            return bad(format!("--W must be positive and finite, got {}", self.w));
        }
        if self.chains == 0 || self.thinning == 0 || self.samples() == 0 {
            return bad("--chains, --thinning and --samples must be at least 1".into());
        }
        if self.refresh_every == Some(0) {
            return bad("--refresh-every must be at least 1".into());
        }
        if self.workers == Some(0) {
            return bad("--workers must be at least 1".into());
        }
        if !(self.quad_tol > 0.0) {
            return bad("--quad-tol must be positive".into());
        }
        if let (Some(lo), Some(hi)) = (self.slope_min, self.slope_max) {
            if lo > hi {
                return bad("--slope-min exceeds --slope-max".into());
            }
        }
        match self.command {
            Command::Resistance if self.l >= self.k => {
                bad(format!("resistance needs L < K, got L = {} and K = {}", self.l, self.k))
            }
            Command::Martingale if self.ls.0.iter().any(|&l| l == 0 || l >= self.k) => {
                bad(format!("martingale radii must satisfy 1 ≤ L < K = {}", self.k))
            }
            Command::Monotonicity => match (self.w_upper, self.pin) {
                (Some(_), Some(_)) => bad("give either --w-upper or --pin, not both".into()),
                (Some(wu), None) if !(wu >= self.w && wu.is_finite()) => {
                    bad(format!("--w-upper must be finite and at least W = {}", self.w))
                }
                (None, Some(p)) if !(p > 0.0 && p.is_finite()) => bad("--pin must be positive".into()),
                _ => Ok(()),
            },
            Command::Validate if self.draws < 2 => bad("--draws must be at least 2".into()),
            _ => Ok(()),
        }
    }
}

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().skip(1);
    let mut found = None;
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            found = it.next().map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            found = Some(PathBuf::from(p));
        }
    }
    found
}

/// Flags that take no value, so `key = true` in a file maps to a bare flag.
fn is_switch(long: &str) -> bool {
    RunConfig::command()
        .get_arguments()
        .find(|a| a.get_long() == Some(long))
        .is_some_and(|a| !a.get_action().takes_values())
}

fn file_tokens(text: &str) -> Result<Vec<OsString>, String> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", n + 1))?;
        let key = key.trim();
        let key = if key.len() == 1 { key.to_string() } else { key.replace('_', "-") };
        let value = value.trim();
        if key == "config" || key == "command" {
            return Err(format!("line {}: `{key}` cannot be set from a config file", n + 1));
        }
        if !RunConfig::command().get_arguments().any(|a| a.get_long() == Some(key.as_str())) {
            return Err(format!("line {}: unknown key `{key}`", n + 1));
        }
        if is_switch(&key) {
            if value == "true" {
                out.push(format!("--{key}").into());
            }
            continue;
        }
        out.push(format!("--{key}").into());
        out.push(value.into());
    }
    Ok(out)
}

/// Writes `cfg` as a config file that parses back to the same flags.
pub fn to_config_file(cfg: &RunConfig, path: &Path) -> std::io::Result<()> {
    let value = serde_json::to_value(cfg).expect("config serializes");
    let mut text = String::new();
    if let serde_json::Value::Object(map) = value {
        for (k, v) in map {
            if k == "command" || k == "config" || v.is_null() {
                continue;
            }
            let rendered = match v {
                serde_json::Value::String(s) => s,
                serde_json::Value::Array(a) => a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
                other => other.to_string(),
            };
            text.push_str(&format!("{k} = {rendered}\n"));
        }
    }
    std::fs::write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!("1,2.5".parse::<Grid>().unwrap().0, vec![1.0, 2.5]);
        let g: Grid = "geom:1e-4:1e-2:3".parse().unwrap();
        assert!((g.0[1] - 1e-3).abs() < 1e-15);
        assert_eq!("lin:0:1:3".parse::<Grid>().unwrap().0, vec![0.0, 0.5, 1.0]);
        assert!("geom:0:1:3".parse::<Grid>().is_err());
        assert!("a,b".parse::<Grid>().is_err());
    }

    #[test]
    fn flags_and_env() {
        let c = RunConfig::from_args(["rso", "ids", "--d", "2", "--L", "5", "--bc", "dirichlet"], None).unwrap();
        assert_eq!((c.command, c.d, c.l, c.bc), (Command::Ids, 2, 5, Bc::Dirichlet));
        let c = RunConfig::from_args(["rso", "ids", "--seed", "3"], Some("17".into())).unwrap();
        assert_eq!(c.seed, 17);
        assert!(RunConfig::from_args(["rso", "ids"], Some("x".into())).is_err());
        assert!(RunConfig::from_args(["rso", "nope"], None).is_err());
    }

    #[test]
    fn file_keys_mirror_flags() {
        let toks = file_tokens("# comment\nburn_in = 7\nL=3\nW = 0.5 # trailing\n").unwrap();
        let toks: Vec<String> = toks.into_iter().map(|t| t.into_string().unwrap()).collect();
        assert_eq!(toks, ["--burn-in", "7", "--L", "3", "--W", "0.5"]);
        assert!(file_tokens("bogus = 1").is_err());
        assert!(file_tokens("config = x").is_err());
        assert!(file_tokens("no equals sign").is_err());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::for_command(Command::Resistance);
        c.l = 8;
        assert!(c.validate().is_err());
        c.l = 3;
        assert!(c.validate().is_ok());
        c.w = -1.0;
        assert!(c.validate().is_err());
    }
}
