use serde::Serialize;

use super::{qsd_solve_with, truncate, QsdOptions, SpectralError, SpectralResult, TruncatedGenerator};
use crate::model::{AbsorbedChain, State};
use crate::numeric::compensated_sum;

/// One truncation level of a sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub states: usize,
    pub lambda0: f64,
    /// `|λ₀(N) - λ₀(previous N)|`.
    pub lambda0_step: Option<f64>,
    /// TV distance between this QSD and the previous one, both extended by zero.
    pub tv_step: Option<f64>,
    /// Mean of the probe under the QSD.
    pub probe: f64,
    /// QSD mass on the outermost retained shell.
    pub boundary_mass: f64,
    pub left_residual: f64,
}

/// Solves each truncation level in order, warm-starting from the previous one.
pub fn truncation_sweep(
    chain: &dyn AbsorbedChain,
    ns: &[u64],
    probe: &(dyn Fn(&State) -> f64 + Sync),
    tol: f64,
) -> Result<Vec<SweepRow>, SpectralError> {
    let mut rows = Vec::with_capacity(ns.len());
    let mut prev: Option<(TruncatedGenerator, SpectralResult)> = None;
    for &n in ns {
        let gen = truncate(chain, n)?;
        let mut opts = QsdOptions::new(tol);
        if let Some((pg, pr)) = &prev {
            opts.warm_start = Some(transfer(pg, pr, &gen));
        }
        let res = qsd_solve_with(&gen, &opts)?;
        let probe_mean = compensated_sum(gen.states().iter().zip(&res.qsd).map(|(x, p)| p * probe(x)));
        let level = gen.level();
        let boundary_mass = compensated_sum(gen.lattice().shell_range(level).map(|i| res.qsd[i]));
        let (lambda0_step, tv_step) = match &prev {
            Some((pg, pr)) => (Some((res.lambda0 - pr.lambda0).abs()), Some(tv_across(pg, &pr.qsd, &gen, &res.qsd))),
            None => (None, None),
        };
        rows.push(SweepRow {
            n,
            states: gen.len(),
            lambda0: res.lambda0,
            lambda0_step,
            tv_step,
            probe: probe_mean,
            boundary_mass,
            left_residual: res.residuals.0,
        });
        prev = Some((gen, res));
    }
    Ok(rows)
}

/// `Σ_x |p(x) - q(x)|` for laws on two truncations of the same chain.
pub fn tv_across(ga: &TruncatedGenerator, pa: &[f64], gb: &TruncatedGenerator, pb: &[f64]) -> f64 {
    let mut terms = Vec::with_capacity(ga.len() + gb.len());
    for (x, &q) in gb.states().iter().zip(pb) {
        let p = ga.index_of(x).map_or(0.0, |i| pa[i]);
        terms.push((p - q).abs());
    }
    for (x, &p) in ga.states().iter().zip(pa) {
        if gb.index_of(x).is_none() {
            terms.push(p);
        }
    }
    compensated_sum(terms)
}

/// Positive starting vectors on `to` taken from a solution on `from`.
fn transfer(from: &TruncatedGenerator, res: &SpectralResult, to: &TruncatedGenerator) -> (Vec<f64>, Vec<f64>) {
    let floor = res.qsd.iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min).max(1e-250);
    let eta_edge = res.eta_fn.last().copied().unwrap_or(1.0);
    let mut nu = Vec::with_capacity(to.len());
    let mut eta = Vec::with_capacity(to.len());
    for x in to.states() {
        match from.index_of(x) {
            Some(i) => {
                nu.push(res.qsd[i].max(floor));
                eta.push(res.eta_fn[i].max(f64::MIN_POSITIVE));
            }
            None => {
                nu.push(floor);
                eta.push(eta_edge.max(f64::MIN_POSITIVE));
            }
        }
    }
    (nu, eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;

    #[test]
    fn single_level_gives_single_row() {
        let rows = truncation_sweep(&presets::logistic(1.0, 1.0, 1.0), &[20], &|x| x.total() as f64, 1e-10).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].tv_step.is_none());
    }
}
