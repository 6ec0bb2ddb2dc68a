//! Every applicable criterion for a model, in a fixed order.

use std::sync::Arc;

use super::drift::{measure_from_table, pointwise_from_table, DriftForm, DriftTable, LyapunovPair};
use super::multitype::{check_alt_h1, check_domination, check_h1, check_h2, default_eps, ShellPotential};
use super::one_dim::{build_v_1d, check_oscillation_1d, check_series_s, check_w_condition, suggest_w};
use super::series::SeriesConfig;
use super::{CriteriaError, LyapunovReport, Verdict};
use crate::model::{BdcModel, Lattice, MultiTypeModel, RateModel, SeqFn, State};
use crate::simulate::SeededRng;

pub const DEFAULT_RANGE: u64 = 200;
pub const DEFAULT_MEASURES: usize = 1000;

pub const ONE_DIM_CRITERIA: [&str; 5] = ["series-s", "w-condition", "oscillation-1d", "drift-pointwise-envelope", "drift-measure"];
pub const MULTI_TYPE_CRITERIA: [&str; 6] = ["h1", "h1-alternative", "h2", "domination", "drift-pointwise-envelope", "drift-measure"];

/// Criteria that do not apply to the model are left out unless named in
/// `criteria`, in which case they are reported as inconclusive.
#[derive(Clone)]
pub struct SuiteSettings {
    pub range: u64,
    pub series: SeriesConfig,
    /// One-dimensional weight; suggested from the tail of `S` when absent.
    pub weight: Option<SeqFn>,
    /// Margin for the oscillation check when no strong competition check holds.
    pub eta: Option<f64>,
    pub eps: Option<f64>,
    pub envelope: Option<(SeqFn, SeqFn)>,
    /// Criteria to run; all applicable ones when `None`.
    pub criteria: Option<Vec<String>>,
    pub measures: usize,
    pub seed: u64,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        SuiteSettings {
            range: DEFAULT_RANGE,
            series: SeriesConfig::default(),
            weight: None,
            eta: None,
            eps: None,
            envelope: None,
            criteria: None,
            measures: DEFAULT_MEASURES,
            seed: 0,
        }
    }
}

impl SuiteSettings {
    fn wants(&self, name: &str) -> bool {
        self.criteria.as_ref().map_or(true, |c| c.iter().any(|n| n == name))
    }

    fn explicit(&self, name: &str) -> bool {
        self.criteria.as_ref().is_some_and(|c| c.iter().any(|n| n == name))
    }

    fn validate(&self, known: &[&str]) -> Result<(), CriteriaError> {
        if let Some(list) = &self.criteria {
            if let Some(bad) = list.iter().find(|n| !known.contains(&n.as_str())) {
                return Err(CriteriaError::InvalidParameter(format!(
                    "unknown criterion `{bad}`; expected one of {}",
                    known.join(", ")
                )));
            }
        }
        Ok(())
    }
}

pub fn run_suite(model: &RateModel, settings: &SuiteSettings) -> Result<Vec<LyapunovReport>, CriteriaError> {
    match model {
        RateModel::Bdc(m) => run_one_dim(m, settings),
        RateModel::MultiType(m) => run_multi_type(m, settings),
    }
}

fn skipped(name: &str, why: &str) -> LyapunovReport {
    LyapunovReport::new(name, Verdict::Inconclusive).note(why.to_string())
}

fn rename(mut r: LyapunovReport, name: &str) -> LyapunovReport {
    r.criterion = name.to_string();
    r
}

pub fn run_one_dim(model: &BdcModel, settings: &SuiteSettings) -> Result<Vec<LyapunovReport>, CriteriaError> {
    settings.validate(&ONE_DIM_CRITERIA)?;
    let cfg = &settings.series;
    let mut out = Vec::new();
    if settings.wants("series-s") {
        out.push(check_series_s(model, cfg)?);
    }
    if settings.wants("oscillation-1d") {
        out.push(check_oscillation_1d(model, cfg)?);
    }
    let need_w = ["w-condition", "drift-pointwise-envelope", "drift-measure"].iter().any(|n| settings.wants(n));
    if !need_w {
        return Ok(out);
    }
    let weight = match &settings.weight {
        Some(w) => Ok(w.clone()),
        None => suggest_w(model, cfg),
    };
    let (w, w_report) = match weight {
        Ok(w) => {
            let r = check_w_condition(model, &w, cfg)?;
            (Some(w), r)
        }
        Err(e) => (None, LyapunovReport::new("w-condition", Verdict::Fails).note(format!("no weight: {e}"))),
    };
    let w_ok = w_report.holds();
    let v_sup = w_report.get("value").map(|v| v + w_report.get("tail_bound").unwrap_or(0.0));
    if settings.wants("w-condition") {
        out.push(w_report);
    }
    let want_pw = settings.wants("drift-pointwise-envelope");
    let want_ms = settings.wants("drift-measure");
    let (Some(w), true) = (w, w_ok) else {
        if want_pw {
            out.push(skipped("drift-pointwise-envelope", "the weighted series does not converge; V is undefined"));
        }
        if want_ms {
            out.push(skipped("drift-measure", "the weighted series does not converge; V is undefined"));
        }
        return Ok(out);
    };
    let range = settings.range.max(3);
    let table_v = build_v_1d(model, &w, range, cfg)?;
    let v_fn = table_v.as_state_fn();
    let v = move |x: &State| v_fn(x.coords());
    let wf = w.clone();
    let wv = move |x: &State| wf(x.total());
    let pair = LyapunovPair { v: &v, w: &wv, v_sup };
    let states: Vec<State> = (1..range).map(|k| State::one(k as u32)).collect::<Result<_, _>>()?;
    let table = DriftTable::new(model, &pair, &states)?;
    if want_pw {
        out.push(pointwise_from_table(&table, DriftForm::Envelope));
    }
    if want_ms {
        out.push(measure_from_table(&table, None, settings.measures, &SeededRng::new(settings.seed)));
    }
    Ok(out)
}

pub fn run_multi_type(model: &MultiTypeModel, settings: &SuiteSettings) -> Result<Vec<LyapunovReport>, CriteriaError> {
    settings.validate(&MULTI_TYPE_CRITERIA)?;
    let competitive = model.competitive_rates().is_some();
    let range = settings.range;
    let mut out = Vec::new();
    let mut eta: Option<f64> = None;
    for (name, check) in [("h1", check_h1 as fn(&MultiTypeModel, u64) -> _), ("h1-alternative", check_alt_h1)] {
        if !settings.wants(name) {
            continue;
        }
        if !competitive {
            if settings.explicit(name) {
                out.push(skipped(name, "needs the competitive parametrisation"));
            }
            continue;
        }
        let r = check(model, range)?;
        if eta.is_none() && r.holds() {
            eta = r.get("h1_margin");
        }
        out.push(r);
    }
    let eta = eta.or(settings.eta);
    let mut eta_prime = None;
    if settings.wants("h2") && (competitive || settings.explicit("h2")) {
        match eta {
            Some(e) => {
                let r = check_h2(model, e.min(1.0 - 1e-9), range)?;
                if r.holds() {
                    eta_prime = r.get("eta_prime");
                }
                out.push(r);
            }
            None => out.push(skipped("h2", "no competition margin available; set eta")),
        }
    }
    if settings.wants("domination") {
        match &settings.envelope {
            Some((b, d)) => out.push(check_domination(model, b, d, range, &settings.series)?),
            None if settings.explicit("domination") => out.push(skipped("domination", "no envelope rates given")),
            None => {}
        }
    }
    let want_pw = settings.wants("drift-pointwise-envelope");
    let want_ms = settings.wants("drift-measure");
    if !(want_pw || want_ms) {
        return Ok(out);
    }
    let eps = settings.eps.or_else(|| match (eta, eta_prime) {
        (Some(e), Some(p)) => Some(default_eps(e.min(1.0), p)),
        _ => None,
    });
    let Some(eps) = eps else {
        for (w, name) in [(want_pw, "drift-pointwise-envelope"), (want_ms, "drift-measure")] {
            if w {
                out.push(skipped(name, "no exponent for the potential: the margin checks did not hold; set eps"));
            }
        }
        return Ok(out);
    };
    let pot = Arc::new(ShellPotential::new(eps)?);
    let pv = pot.clone();
    let v = move |x: &State| pv.eval(x);
    let wv = move |x: &State| (x.total() as f64).powf(1.0 - eps);
    let pair = LyapunovPair { v: &v, w: &wv, v_sup: Some(pot.sup()) };
    let lat = Lattice::new(model.types(), range)?;
    let table = DriftTable::new(model, &pair, lat.states())?;
    if want_pw {
        out.push(pointwise_from_table(&table, DriftForm::Envelope).witness("eps", eps));
    }
    if want_ms {
        out.push(rename(
            measure_from_table(&table, None, settings.measures, &SeededRng::new(settings.seed)).witness("eps", eps),
            "drift-measure",
        ));
    }
    Ok(out)
}
