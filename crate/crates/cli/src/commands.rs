use std::fmt::Write as _;

use anyhow::anyhow;
use qsdlab::analysis::{
    line_plot_svg, plateau_check, time_to_tv, tv_distance, uniformity_report, write_curves_csv, write_fits_csv, AnalysisError,
    BurnIn,
};
use qsdlab::criteria::{run_suite, CriteriaError, SuiteSettings, DEFAULT_MEASURES, DEFAULT_RANGE};
use qsdlab::model::{AbsorbedChain, ModelFileError, ModelSpec, State};
use qsdlab::simulate::{conditional_estimate, fleming_viot, q_process_trajectory, ssa_trajectory, SeededRng, SimError};
use qsdlab::spectral::{
    delta, evolve_times, qsd_solve, truncate, truncation_sweep, write_spectral_csv, write_sweep_csv, SpectralError,
    SpectralResult, TruncatedGenerator,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::Outputs;

/// Largest accepted spread of fitted rates across initial laws.
const GAMMA_SPREAD_LIMIT: f64 = 0.1;
/// Distance to the QSD at which the plateau window starts.
const PLATEAU_TV: f64 = 1e-6;
const PLATEAU_MAX_STEPS: usize = 4000;

pub enum Failure {
    Usage(anyhow::Error),
    Numerical(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Numerical(e) => e,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

impl From<ModelFileError> for Failure {
    fn from(e: ModelFileError) -> Self {
        Failure::Usage(e.into())
    }
}

impl From<SpectralError> for Failure {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::NotConverged { .. } | SpectralError::EvolveBudget { .. } => Failure::Numerical(e.into()),
            _ => Failure::Usage(e.into()),
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Spectral(s) => s.into(),
            other => Failure::Numerical(other.into()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::RateOverflow { .. } => Failure::Numerical(e.into()),
            _ => Failure::Usage(e.into()),
        }
    }
}

impl From<CriteriaError> for Failure {
    fn from(e: CriteriaError) -> Self {
        match e {
            CriteriaError::NotConverged(_) => Failure::Numerical(e.into()),
            _ => Failure::Usage(e.into()),
        }
    }
}

/// Whether every check held; only `check` can report `false`.
pub type Outcome = bool;

pub fn run(cfg: &RunConfig, spec: &ModelSpec, out: &mut Outputs) -> Result<Outcome, Failure> {
    use crate::config::Command::*;
    match cfg.command {
        Check => cmd_check(cfg, spec, out),
        Qsd => cmd_qsd(cfg, spec, out).map(|_| true),
        Converge => cmd_converge(cfg, spec, out).map(|_| true),
        Simulate => cmd_simulate(cfg, spec, out).map(|_| true),
    }
}

fn suite_settings(cfg: &RunConfig, spec: &ModelSpec) -> Result<SuiteSettings, Failure> {
    let c = spec.check();
    let mut s = SuiteSettings {
        range: cfg.range.or(c.range).unwrap_or(DEFAULT_RANGE),
        weight: spec.weight()?,
        eta: c.eta,
        eps: c.eps,
        envelope: spec.envelope()?,
        criteria: c.criteria.clone(),
        measures: c.measures.unwrap_or(DEFAULT_MEASURES),
        seed: cfg.seed.unwrap_or(0),
        ..SuiteSettings::default()
    };
    s.series.tol = cfg.tol_series;
    Ok(s)
}

pub fn cmd_check(cfg: &RunConfig, spec: &ModelSpec, out: &mut Outputs) -> Result<Outcome, Failure> {
    let settings = suite_settings(cfg, spec)?;
    let reports = run_suite(&spec.model, &settings)?;
    let mut summary = String::new();
    for r in &reports {
        out.write(&format!("reports/{}.json", r.criterion), format!("{}\n", r.to_json()).as_bytes())?;
        let _ = writeln!(summary, "{r}");
        for d in &r.diagnostics {
            let _ = writeln!(summary, "    {d}");
        }
    }
    out.write("check.txt", summary.as_bytes())?;
    print!("{summary}");
    Ok(!reports.is_empty() && reports.iter().all(|r| r.holds()))
}

fn solve(cfg: &RunConfig, spec: &ModelSpec) -> Result<(TruncatedGenerator, SpectralResult), Failure> {
    let gen = truncate(&spec.model, cfg.n)?;
    let res = qsd_solve(&gen, cfg.tol_qsd)?;
    Ok((gen, res))
}

#[derive(Serialize)]
struct QsdSummary {
    n: u64,
    states: usize,
    lambda0: f64,
    left_residual: f64,
    right_residual: f64,
    iterations: u64,
    /// Rate at which the QSD loses mass through the truncation boundary.
    truncation_leak: f64,
}

pub fn cmd_qsd(cfg: &RunConfig, spec: &ModelSpec, out: &mut Outputs) -> Result<(), Failure> {
    let (gen, res) = solve(cfg, spec)?;
    out.write_with("qsd.csv", |buf| write_spectral_csv(&gen, &res, buf))?;
    let floor = if spec.model.dim() == 1 { 2 } else { spec.model.dim() as u64 };
    let mut levels: Vec<u64> = [cfg.n / 4, cfg.n / 2, cfg.n].into_iter().filter(|&k| k >= floor).collect();
    levels.dedup();
    let rows = truncation_sweep(&spec.model, &levels, &|x: &State| x.total() as f64, cfg.tol_qsd)?;
    out.write_with("sweep.csv", |buf| write_sweep_csv(&rows, buf))?;
    let summary = QsdSummary {
        n: cfg.n,
        states: gen.len(),
        lambda0: res.lambda0,
        left_residual: res.residuals.0,
        right_residual: res.residuals.1,
        iterations: res.iterations,
        truncation_leak: res.qsd.iter().zip(gen.killed()).map(|(p, k)| p * k).sum(),
    };
    out.write_json("qsd.json", &summary)?;
    println!("lambda0 = {:.15e} on {} states (N = {})", res.lambda0, gen.len(), cfg.n);
    Ok(())
}

fn initial_indices(cfg: &RunConfig, gen: &TruncatedGenerator) -> Result<Vec<(State, usize)>, Failure> {
    cfg.initial_states()?
        .into_iter()
        .map(|x| match gen.index_of(&x) {
            Some(i) => Ok((x, i)),
            None => Err(Failure::Usage(anyhow!("initial state {x} is not retained at N = {}", cfg.n))),
        })
        .collect()
}

fn label(x: &State) -> String {
    x.coords().iter().map(u32::to_string).collect::<Vec<_>>().join("-")
}

pub fn cmd_converge(cfg: &RunConfig, spec: &ModelSpec, out: &mut Outputs) -> Result<(), Failure> {
    let (gen, res) = solve(cfg, spec)?;
    let starts = initial_indices(cfg, &gen)?;
    let initials: Vec<(String, Vec<f64>)> = starts.iter().map(|(x, i)| (label(x), delta(&gen, *i))).collect();
    // The QSD itself is only accurate to tol_qsd, which floors TV as well.
    let policy = BurnIn { floor: 10.0 * cfg.tol_evolve.max(cfg.tol_qsd), ..BurnIn::for_tolerance(cfg.tol_evolve) };
    let report = uniformity_report(&gen, &res, &initials, &cfg.times, cfg.tol_evolve, &policy, GAMMA_SPREAD_LIMIT)?;
    out.write_with("curves.csv", |buf| write_curves_csv(&report.curves, buf))?;
    out.write_with("fits.csv", |buf| write_fits_csv(&report.fits, buf))?;
    out.write_json("uniformity.json", &report)?;
    for c in &report.curves {
        let pts = c.times.iter().copied().zip(c.tv.iter().copied()).collect();
        let svg = line_plot_svg(&[(c.initial.clone(), pts)], "t", "TV to QSD", true);
        out.write(&format!("curve_{}.svg", c.initial), svg.as_bytes())?;
    }
    let (x0, i0) = &starts[0];
    let horizon = cfg.horizon();
    let dt = if horizon > 0.0 { horizon / 20.0 } else { 1.0 };
    let plateau = match time_to_tv(&gen, &res, &delta(&gen, *i0), PLATEAU_TV, dt, PLATEAU_MAX_STEPS, cfg.tol_evolve) {
        Ok(t) => {
            let t = t.max(dt);
            serde_json::to_value(plateau_check(&gen, &res, *i0, t, cfg.tol_evolve)?).map_err(anyhow::Error::from)?
        }
        Err(AnalysisError::InvalidInput(msg)) => serde_json::json!({ "error": msg }),
        Err(e) => return Err(e.into()),
    };
    out.write_json("plateau.json", &serde_json::json!({ "initial": x0.to_string(), "report": plateau }))?;
    for f in &report.fits {
        match &f.fit {
            Some(r) => println!("{}: gamma = {:.6e}, r2 = {:.6}", f.initial, r.gamma, r.r_squared),
            None => println!("{}: no fit ({})", f.initial, f.error.as_deref().unwrap_or("")),
        }
    }
    println!("gamma spread = {:.4}", report.gamma_spread);
    Ok(())
}

#[derive(Serialize)]
struct ComparisonRow {
    time: f64,
    survival_mc: f64,
    survival_spectral: f64,
    tv_mc: Option<f64>,
    outside_mc: Option<f64>,
    tv_fleming_viot: Option<f64>,
    outside_fleming_viot: Option<f64>,
}

pub fn cmd_simulate(cfg: &RunConfig, spec: &ModelSpec, out: &mut Outputs) -> Result<(), Failure> {
    let rng = SeededRng::new(cfg.seed.expect("validated"));
    let (gen, res) = solve(cfg, spec)?;
    let (x0, i0) = initial_indices(cfg, &gen)?.swap_remove(0);
    let horizon = cfg.horizon();
    let chain: &dyn AbsorbedChain = &spec.model;

    let path = ssa_trajectory(chain, &x0, horizon, &rng.substream(1))?;
    out.write_with("trajectory.csv", |buf| path.write_csv(buf))?;

    let times: Vec<f64> = cfg.times.iter().copied().filter(|&t| t > 0.0).collect();
    let ensemble = fleming_viot(chain, cfg.particles, &[(x0.clone(), 1.0)], horizon, &times, &rng.substream(2))?;
    out.write_with("ensemble.csv", |buf| ensemble.write_csv(buf))?;

    let laws = evolve_times(&gen, &delta(&gen, i0), &cfg.times, cfg.tol_evolve)?;
    let mut rows = Vec::with_capacity(cfg.times.len());
    for (k, (t, law)) in cfg.times.iter().zip(&laws).enumerate() {
        let est = conditional_estimate(chain, &x0, *t, cfg.trajectories, &rng.substream(3).child(k as u64))?;
        let (tv_mc, outside_mc) = match est.histogram_on(&gen) {
            Some((h, outside)) => (Some(tv_distance(&h, &law.dist).map_err(Failure::from)?), Some(outside)),
            None => (None, None),
        };
        let fv = ensemble.snapshots.iter().find(|s| s.time == *t).map(|s| s.empirical_on(&gen));
        let (tv_fv, outside_fv) = match fv {
            Some((h, outside)) => (Some(tv_distance(&h, &law.dist).map_err(Failure::from)?), Some(outside)),
            None => (None, None),
        };
        rows.push(ComparisonRow {
            time: *t,
            survival_mc: est.survival_fraction(),
            survival_spectral: law.survival,
            tv_mc,
            outside_mc,
            tv_fleming_viot: tv_fv,
            outside_fleming_viot: outside_fv,
        });
    }
    out.write_with("comparison.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        rows.iter().try_for_each(|r| w.serialize(r))?;
        w.flush().map_err(csv::Error::from)
    })?;

    let qpath = q_process_trajectory(&gen, &res, &x0, horizon.max(f64::MIN_POSITIVE), &rng.substream(4))?;
    out.write_with("qprocess_trajectory.csv", |buf| qpath.write_csv(buf))?;

    for r in &rows {
        println!(
            "t = {}: survival mc {:.4} spectral {:.4}, tv mc {}, tv fleming-viot {}",
            r.time,
            r.survival_mc,
            r.survival_spectral,
            r.tv_mc.map_or("-".into(), |v| format!("{v:.4}")),
            r.tv_fleming_viot.map_or("-".into(), |v| format!("{v:.4}")),
        );
    }
    Ok(())
}
