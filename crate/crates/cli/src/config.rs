use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, ValueEnum};
use qsdlab::model::State;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Run every applicable Lyapunov criterion.
    Check,
    /// Solve for the QSD on a truncation and sweep the truncation level.
    Qsd,
    /// Convergence curves, rate fits, uniformity and the mortality plateau.
    Converge,
    /// Paths, conditioned laws and particle systems against the spectral law.
    Simulate,
}

#[derive(Debug, Parser)]
#[command(name = "qsdlab", version, about = "Quasi-stationary distributions of absorbed birth-death chains")]
pub struct Args {
    /// Model file (TOML).
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum)]
    pub cmd: Command,
    /// Truncation level: largest retained population.
    #[arg(long = "N", default_value_t = 200)]
    pub n: u64,
    /// Required by `simulate`; `check` defaults to 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated times; `a:b:step` expands to a grid.
    #[arg(long)]
    pub times: Option<String>,
    /// Initial states separated by `;`, coordinates by `,`. One-dimensional
    /// models also accept `1,10,100`.
    #[arg(long)]
    pub initials: Option<String>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long = "tol-evolve", default_value_t = 1e-12)]
    pub tol_evolve: f64,
    #[arg(long = "tol-series", default_value_t = 1e-6)]
    pub tol_series: f64,
    #[arg(long = "tol-qsd", default_value_t = 1e-10)]
    pub tol_qsd: f64,
    /// Largest index or shell scanned by `check`.
    #[arg(long)]
    pub range: Option<u64>,
    /// Independent paths per time for `simulate`.
    #[arg(long, default_value_t = 10_000)]
    pub trajectories: usize,
    /// Fleming–Viot ensemble size for `simulate`.
    #[arg(long, default_value_t = 1000)]
    pub particles: usize,
}

/// Validated run settings, echoed into the manifest.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub model: PathBuf,
    pub command: Command,
    pub n: u64,
    pub seed: Option<u64>,
    pub times: Vec<f64>,
    pub initials: Vec<Vec<u32>>,
    pub out: PathBuf,
    pub tol_evolve: f64,
    pub tol_series: f64,
    pub tol_qsd: f64,
    pub range: Option<u64>,
    pub trajectories: usize,
    pub particles: usize,
}

impl RunConfig {
    pub fn from_args(a: Args, dim: usize) -> Result<Self> {
        for (name, v) in [("tol-evolve", a.tol_evolve), ("tol-series", a.tol_series), ("tol-qsd", a.tol_qsd)] {
            if !(v > 0.0 && v.is_finite()) {
                bail!("--{name} must be positive, got {v}");
            }
        }
        if a.cmd == Command::Simulate && a.seed.is_none() {
            bail!("simulate is stochastic and needs --seed");
        }
        if a.cmd == Command::Simulate && (a.trajectories == 0 || a.particles < 2) {
            bail!("simulate needs at least one trajectory and two particles");
        }
        if a.range == Some(0) {
            bail!("--range must be positive");
        }
        let times = match &a.times {
            Some(s) => parse_times(s)?,
            None => default_times(a.cmd),
        };
        let initials = match &a.initials {
            Some(s) => parse_initials(s, dim)?,
            None => default_initials(a.n, dim),
        };
        Ok(RunConfig {
            model: a.model,
            command: a.cmd,
            n: a.n,
            seed: a.seed,
            times,
            initials,
            out: a.out,
            tol_evolve: a.tol_evolve,
            tol_series: a.tol_series,
            tol_qsd: a.tol_qsd,
            range: a.range,
            trajectories: a.trajectories,
            particles: a.particles,
        })
    }

    pub fn initial_states(&self) -> Result<Vec<State>> {
        self.initials.iter().map(|c| State::new(c.clone()).map_err(|e| anyhow!("initial state {c:?}: {e}"))).collect()
    }

    pub fn horizon(&self) -> f64 {
        self.times.iter().copied().fold(0.0, f64::max)
    }
}

fn default_times(cmd: Command) -> Vec<f64> {
    match cmd {
        Command::Simulate => vec![1.0, 2.0, 5.0, 10.0],
        _ => (0..=80).map(|k| k as f64 * 0.25).collect(),
    }
}

fn default_initials(n: u64, dim: usize) -> Vec<Vec<u32>> {
    let n = u32::try_from(n.max(1)).unwrap_or(u32::MAX);
    let mut out: Vec<Vec<u32>> = Vec::new();
    if dim == 1 {
        for k in [1, n.div_ceil(10), n.div_ceil(2), n] {
            if !out.contains(&vec![k]) {
                out.push(vec![k]);
            }
        }
    } else {
        let r = dim as u32;
        let corner = |m: u32| {
            let mut v = vec![1; dim];
            v[0] = m;
            v
        };
        let m = (n / (2 * r)).max(1);
        for x in [vec![1; dim], vec![m; dim], corner(n.saturating_sub(r - 1).max(1))] {
            if !out.contains(&x) {
                out.push(x);
            }
        }
    }
    out
}

pub fn parse_times(s: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [v] => out.push(number(v)?),
            [a, b, step] => {
                let (a, b, step) = (number(a)?, number(b)?, number(step)?);
                if !(step > 0.0) || b < a {
                    bail!("time grid `{item}` needs start ≤ stop and a positive step");
                }
                let n = ((b - a) / step + 1e-9).floor() as usize;
                out.extend((0..=n).map(|k| a + k as f64 * step));
            }
            _ => bail!("cannot read time `{item}`"),
        }
    }
    if out.is_empty() {
        bail!("--times is empty");
    }
    if out.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        bail!("times must be finite and nonnegative");
    }
    if out.windows(2).any(|w| w[1] < w[0]) {
        bail!("times must be nondecreasing");
    }
    Ok(out)
}

fn number(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().with_context(|| format!("`{s}` is not a number"))
}

pub fn parse_initials(s: &str, dim: usize) -> Result<Vec<Vec<u32>>> {
    let coord = |c: &str| c.trim().parse::<u32>().with_context(|| format!("`{c}` is not a population size"));
    let mut out = Vec::new();
    for item in s.split(';').map(str::trim).filter(|t| !t.is_empty()) {
        let coords: Vec<u32> = item.split(',').map(coord).collect::<Result<_>>()?;
        if dim == 1 {
            out.extend(coords.into_iter().map(|k| vec![k]));
        } else if coords.len() == dim {
            out.push(coords);
        } else {
            bail!("initial state `{item}` has {} coordinates, the model has {dim} types", coords.len());
        }
    }
    if out.is_empty() {
        bail!("--initials is empty");
    }
    if out.iter().any(|x| x.iter().all(|&c| c == 0)) {
        bail!("an initial state is the absorbing state");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_grid_expands() {
        assert_eq!(parse_times("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_times("0, 2,5").unwrap(), vec![0.0, 2.0, 5.0]);
        assert!(parse_times("2,1").is_err());
        assert!(parse_times("").is_err());
    }

    #[test]
    fn initials_by_dimension() {
        assert_eq!(parse_initials("1,10,100", 1).unwrap(), vec![vec![1], vec![10], vec![100]]);
        assert_eq!(parse_initials("1,2; 3,0", 2).unwrap(), vec![vec![1, 2], vec![3, 0]]);
        assert!(parse_initials("1,2,3", 2).is_err());
        assert!(parse_initials("0,0", 2).is_err());
    }

    #[test]
    fn defaults_are_distinct() {
        assert_eq!(default_initials(4, 1), vec![vec![1], vec![2], vec![4]]);
        assert_eq!(default_initials(2, 2), vec![vec![1, 1]]);
        assert_eq!(default_initials(8, 2), vec![vec![1, 1], vec![2, 2], vec![7, 1]]);
    }
}
