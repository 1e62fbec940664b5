use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use dqrm::hierarchy::{BlockBranch, Parity};
use dqrm::{Eta, QubitBranch};

#[derive(Parser, Debug)]
#[command(name = "dqrm", version, about = "Dissipative quantum Rabi model: stability scans, steady states and spectra")]
pub struct Cli {
    /// Oscillator frequency; rates and couplings are given in the same units
    #[arg(long, global = true, default_value_t = 1.0)]
    pub omega0: f64,

    /// Worker threads (0 uses every core)
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,

    /// Flat key=value file mirroring the flags; command-line flags win
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Minimal unstable order over a (gamma, g) grid plus bisected boundary curves
    Boundary(BoundaryArgs),
    /// Steady-state observables of the full model along a list of eta values
    SweepEta(SweepArgs),
    /// All steady-state diagnostics at one parameter point, as JSON
    Steady(SteadyArgs),
    /// Spin-block eigenvalues and the reduced-Liouvillian spectral edge
    Spectrum(SpectrumArgs),
    /// Mean-field steady branches or trajectories over a g grid
    Meanfield(MeanfieldArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Boundary(_) => "boundary",
            Command::SweepEta(_) => "sweep-eta",
            Command::Steady(_) => "steady",
            Command::Spectrum(_) => "spectrum",
            Command::Meanfield(_) => "meanfield",
        }
    }

    pub const NAMES: [&'static str; 5] = ["boundary", "sweep-eta", "steady", "spectrum", "meanfield"];
}

#[derive(Args, Debug, Clone)]
#[command(args_override_self = true)]
pub struct BoundaryArgs {
    #[arg(long)]
    pub kappa: f64,
    /// Grid `start:stop:count` or comma list
    #[arg(long)]
    pub gamma: Grid,
    #[arg(long)]
    pub g: Grid,
    #[arg(long, default_value = "even", value_parser = parse_parity)]
    pub parity: Parity,
    #[arg(long, default_value = "down", value_parser = parse_block_branch)]
    pub branch: BlockBranch,
    /// Orders whose critical coupling is bisected into `<stem>_curves.csv`
    #[arg(long, value_delimiter = ',', default_value = "2,4,6,8")]
    pub k_list: Vec<usize>,
    #[arg(long, default_value_t = 40)]
    pub k_max: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_g: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
#[command(args_override_self = true)]
pub struct SweepArgs {
    #[arg(long)]
    pub kappa: f64,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub g: f64,
    /// Finite eta values, `start:stop:count` or comma list
    #[arg(long)]
    pub eta: Grid,
    #[arg(long)]
    pub nmax: usize,
    #[arg(long, value_delimiter = ',', default_value = "n")]
    pub obs: Vec<Observable>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
#[command(args_override_self = true)]
pub struct SteadyArgs {
    #[arg(long)]
    pub kappa: f64,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub g: f64,
    /// A number, or `inf` for the reduced model of one qubit branch
    #[arg(long, value_parser = parse_eta)]
    pub eta: Eta,
    #[arg(long, default_value = "down", value_parser = parse_qubit_branch)]
    pub branch: QubitBranch,
    #[arg(long)]
    pub nmax: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
#[command(args_override_self = true)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub kappa: f64,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub g: f64,
    /// Spin-block orders to diagonalize
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
    #[arg(long, default_value = "down", value_parser = parse_block_branch)]
    pub branch: BlockBranch,
    /// Also compute the edge of the reduced Liouvillian
    #[arg(long)]
    pub liouvillian: bool,
    #[arg(long, default_value_t = 60)]
    pub nmax: usize,
    /// Number of edge eigenvalues
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
#[command(args_override_self = true)]
pub struct MeanfieldArgs {
    #[arg(long)]
    pub kappa: f64,
    /// Has no effect on the flow; recorded for provenance
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    #[arg(long)]
    pub g: Grid,
    /// Integrate from a kicked normal state instead of listing fixed points
    #[arg(long)]
    pub trajectory: bool,
    #[arg(long, default_value_t = 10.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 100.0)]
    pub t_final: f64,
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,
    /// Initial real part of `a` in trajectory mode
    #[arg(long, default_value_t = 0.01)]
    pub kick: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Values from `start:stop:count` (inclusive, evenly spaced) or a comma list.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("not a number: {t:?}"));
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 {
                return Err(format!("grid must be start:stop:count, got {s:?}"));
            }
            let (start, stop) = (parse(parts[0])?, parse(parts[1])?);
            let count: usize = parts[2].trim().parse().map_err(|_| format!("bad count in {s:?}"))?;
            if count == 0 {
                return Err("grid count must be >= 1".into());
            }
            if stop < start {
                return Err(format!("grid stop {stop} is below start {start}"));
            }
            if count == 1 {
                return Ok(Grid(vec![start]));
            }
            let step = (stop - start) / (count - 1) as f64;
            let mut v: Vec<f64> = (0..count).map(|i| start + step * i as f64).collect();
            v[count - 1] = stop;
            return Ok(Grid(v));
        }
        let v = s.split(',').filter(|t| !t.trim().is_empty()).map(parse).collect::<Result<Vec<_>, _>>()?;
        if v.is_empty() {
            return Err("empty grid".into());
        }
        Ok(Grid(v))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observable {
    N,
    N2,
    N3,
    Sz,
    Sx,
    A,
}

impl Observable {
    pub fn label(self) -> &'static str {
        match self {
            Observable::N => "n",
            Observable::N2 => "n2",
            Observable::N3 => "n3",
            Observable::Sz => "sz",
            Observable::Sx => "sx",
            Observable::A => "a",
        }
    }
}

impl FromStr for Observable {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "n" => Ok(Observable::N),
            "n2" => Ok(Observable::N2),
            "n3" => Ok(Observable::N3),
            "sz" => Ok(Observable::Sz),
            "sx" => Ok(Observable::Sx),
            "a" => Ok(Observable::A),
            other => Err(format!("unknown observable {other:?} (expected n, n2, n3, sz, sx, a)")),
        }
    }
}

fn parse_parity(s: &str) -> Result<Parity, String> {
    s.parse().map_err(|e: dqrm::Error| e.to_string())
}

fn parse_block_branch(s: &str) -> Result<BlockBranch, String> {
    s.parse().map_err(|e: dqrm::Error| e.to_string())
}

fn parse_qubit_branch(s: &str) -> Result<QubitBranch, String> {
    s.parse().map_err(|e: dqrm::Error| e.to_string())
}

fn parse_eta(s: &str) -> Result<Eta, String> {
    s.parse().map_err(|e: dqrm::Error| e.to_string())
}

/// Turn `key=value` lines into flags inserted right after the subcommand, so
/// that later command-line flags override them.
pub fn merge_config(argv: Vec<String>) -> Result<Vec<String>, String> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().ok_or("--config needs a path")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let mut injected = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("{path}:{}: expected key=value", lineno + 1))?;
        let key = k.trim().replace('_', "-");
        let value = v.trim();
        match value {
            "true" => injected.push(format!("--{key}")),
            "false" => {}
            _ => {
                injected.push(format!("--{key}"));
                injected.push(value.to_string());
            }
        }
    }
    let at = rest
        .iter()
        .position(|a| Command::NAMES.contains(&a.as_str()))
        .map(|i| i + 1)
        .unwrap_or(rest.len());
    rest.splice(at..at, injected);
    Ok(rest)
}
