//! Criteria for one-dimensional birth and death chains with catastrophes.
//!
//! With `π` as in [`PiWeights`] and `u_n = 1/(d_n π_n)`:
//!
//! * `S = Σ_k π_k Σ_{n≤k} u_n` (coming down from infinity);
//! * the `W`-weighted series `Σ_k W(k) π_k Σ_{n≤k} u_n`;
//! * `V(x) = Σ_{n=1}^{x} u_n Σ_{k≥n} W(k) π_k` with `V(0) = 0`, for which
//!   `L₀V = -W` where `L₀` is the catastrophe-free generator (including the
//!   jump `1 → ∂` at rate `d_1`);
//! * summability of `(κ⁺_k - κ⁻_k) π_k Σ_{n≤k} u_n` for the running sup and
//!   inf of the catastrophe rates.
//!
//! The summands `s_k = π_k Σ_{n≤k} u_n` obey `s_1 = 1/d_1` and
//! `s_{k+1} = (b_k/d_{k+1}) s_k + 1/d_{k+1}`, which never forms `π` or `u`
//! explicitly and so cannot overflow.

use std::sync::Arc;

use serde::Serialize;

use super::series::{sum_certified, SeriesConfig, SeriesEstimate, SeriesStatus, TailMethod};
use super::{CriteriaError, LyapunovReport, Verdict};
use crate::model::{AbsorbedChain, BdcModel, SeqFn, StateFn};
use crate::numeric::CompensatedSum;

/// Largest exponent used by [`suggest_w`].
const SUGGEST_EXPONENT: f64 = 0.5;
/// Target dyadic block ratio of the weighted series built by [`suggest_w`].
const SUGGEST_BLOCK_RATIO: f64 = 0.9;

fn require_d1(model: &BdcModel) -> Result<(), CriteriaError> {
    let d1 = model.death(1);
    if d1.is_nan() || d1 <= 0.0 {
        return Err(CriteriaError::InvalidModel(format!("d_1 = {d1}; the series need d_1 > 0")));
    }
    Ok(())
}

/// Sequential generator of `s_k`, to be called with `k = 1, 2, ...`.
fn s_terms(model: &BdcModel) -> impl FnMut(u64) -> f64 + '_ {
    let cap = model.capacity();
    let mut prev = 0.0;
    move |k| {
        if cap.is_some_and(|c| k > c) {
            return 0.0;
        }
        let s = if k == 1 {
            1.0 / model.death(1)
        } else {
            let b = model.birth(k - 1);
            let d = model.death(k);
            let carried = if b == 0.0 { 0.0 } else { b / d * prev };
            carried + 1.0 / d
        };
        prev = s;
        s
    }
}

/// `S = Σ_k π_k Σ_{n≤k} 1/(d_n π_n)`.
pub fn series_s(model: &BdcModel, cfg: &SeriesConfig) -> Result<SeriesEstimate, CriteriaError> {
    require_d1(model)?;
    Ok(sum_certified(s_terms(model), cfg))
}

fn series_report(criterion: &str, est: &SeriesEstimate, cfg: &SeriesConfig) -> LyapunovReport {
    let verdict = match est.status {
        SeriesStatus::Converged => Verdict::HoldsOnRange,
        SeriesStatus::Diverges => Verdict::Fails,
        SeriesStatus::Inconclusive => Verdict::Inconclusive,
    };
    let mut report = LyapunovReport::new(criterion, verdict)
        .with_range(1, est.terms_used)
        .with_tolerance(cfg.tol)
        .witness("value", est.value)
        .witness("terms_used", est.terms_used as f64);
    if est.converged {
        report = report.witness("tail_bound", est.tail_bound);
        if let Some(r) = est.ratio {
            report = report.witness("ratio_bound", r);
        }
        if !est.tolerance_met {
            report = report.note("tail bound certified but above the requested tolerance");
        }
    }
    match est.method {
        Some(TailMethod::Exact) => report.note("terms vanish past the summed range"),
        Some(TailMethod::TermRatio) => report.note("tail certified by consecutive term ratios"),
        Some(TailMethod::BlockRatio) => report.note("tail certified by dyadic block ratios"),
        None => report,
    }
}

/// Report form of [`series_s`].
pub fn check_series_s(model: &BdcModel, cfg: &SeriesConfig) -> Result<LyapunovReport, CriteriaError> {
    let est = series_s(model, cfg)?;
    Ok(series_report("series-s", &est, cfg))
}

/// Summability of `Σ_k W(k) π_k Σ_{n≤k} 1/(d_n π_n)`.
///
/// `W` must be nonnegative and nondecreasing on the summed range, and must
/// still be growing over its upper half.
pub fn check_w_condition(model: &BdcModel, w: &SeqFn, cfg: &SeriesConfig) -> Result<LyapunovReport, CriteriaError> {
    require_d1(model)?;
    let mut s = s_terms(model);
    let mut prev: Option<f64> = None;
    let mut violation: Option<String> = None;
    let est = sum_certified(
        |k| {
            let wk = w(k);
            if wk.is_nan() || wk < 0.0 {
                violation = Some(format!("W({k}) = {wk} is not a nonnegative number"));
                return f64::NAN;
            }
            if let Some(p) = prev {
                if wk < p {
                    violation = Some(format!("W decreases at k = {k}: {p} > {wk}"));
                    return f64::NAN;
                }
            }
            prev = Some(wk);
            let sk = s(k);
            if sk == 0.0 {
                0.0
            } else {
                wk * sk
            }
        },
        cfg,
    );
    if let Some(v) = violation {
        return Err(CriteriaError::InvalidW(v));
    }
    let top = est.terms_used.max(2);
    let (w_half, w_top) = (w(top / 2), w(top));
    if !(w_top > w_half) {
        return Err(CriteriaError::InvalidW(format!(
            "W is flat on [{}, {top}] (W = {w_top}); it must be unbounded",
            top / 2
        )));
    }
    Ok(series_report("w-condition", &est, cfg).witness("w_at_range_end", w_top))
}

/// A nondecreasing unbounded `W` satisfying the weighted condition.
///
/// With `T(k)` the tail of the unweighted series from `k`, `W(k) = T(k)^{-θ}`
/// with `θ ≤ 1/2` reduced when needed so that the weighted series keeps a
/// certifiable block ratio. Past the tabulated range `W` continues with the
/// decay law of `T` observed by the certification.
pub fn suggest_w(model: &BdcModel, cfg: &SeriesConfig) -> Result<SeqFn, CriteriaError> {
    require_d1(model)?;
    let mut terms = Vec::new();
    let mut s = s_terms(model);
    let est = sum_certified(
        |k| {
            let t = s(k);
            terms.push(t);
            t
        },
        cfg,
    );
    if !est.converged {
        return Err(CriteriaError::NotConverged(format!(
            "S is {:?} after {} terms; no weight function can be built",
            est.status, est.terms_used
        )));
    }
    let n = terms.len();
    let support = terms.iter().rposition(|&t| t > 0.0).map_or(1, |i| i + 1);
    let mut tail = vec![0.0; n];
    let mut acc = CompensatedSum::new();
    acc.add(est.tail_estimate());
    for k in (0..n).rev() {
        acc.add(terms[k]);
        tail[k] = acc.value();
    }

    let theta = match (est.method, est.ratio) {
        (Some(TailMethod::BlockRatio), Some(rho)) if rho > 0.0 => {
            SUGGEST_EXPONENT.min(1.0 - SUGGEST_BLOCK_RATIO.ln() / rho.ln()).max(0.05)
        }
        _ => SUGGEST_EXPONENT,
    };
    let mut table = Vec::with_capacity(support);
    let mut running: f64 = 0.0;
    for &t in &tail[..support] {
        running = running.max(t.powf(-theta));
        table.push(running);
    }
    let last = *table.last().expect("support is nonempty");
    let top = support as u64;
    let growth: Arc<dyn Fn(u64) -> f64 + Send + Sync> = match (est.method, est.ratio) {
        (Some(TailMethod::BlockRatio), Some(rho)) => {
            let p = -rho.log2() * theta;
            Arc::new(move |k| last * (k as f64 / top as f64).powf(p))
        }
        (Some(TailMethod::TermRatio), Some(rho)) => {
            let step = -rho.ln() * theta;
            Arc::new(move |k| last * (step * (k - top) as f64).exp())
        }
        _ => Arc::new(move |k| last * k as f64 / top as f64),
    };
    Ok(Arc::new(move |k| {
        if k == 0 {
            table[0]
        } else if k <= top {
            table[(k - 1) as usize]
        } else {
            growth(k).max(last)
        }
    }))
}

/// `V` tabulated on `0..=x_max` with `V(0) = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct VTable {
    values: Vec<f64>,
    /// Certification of the innermost tail `Σ_{k≥x_max} W(k) π_k / π_{x_max}`.
    pub inner_tail: SeriesEstimate,
}

impl VTable {
    pub fn x_max(&self) -> u64 {
        (self.values.len() - 1) as u64
    }

    pub fn value(&self, x: u64) -> Option<f64> {
        self.values.get(x as usize).copied()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest tabulated value, `V(x_max)`.
    pub fn max(&self) -> f64 {
        *self.values.last().expect("table is nonempty")
    }

    /// `V` as a function of one-dimensional states; NaN past the table.
    pub fn as_state_fn(&self) -> StateFn {
        let values = self.values.clone();
        Arc::new(move |x: &[u32]| values.get(x[0] as usize).copied().unwrap_or(f64::NAN))
    }
}

/// Tabulates `V(x) = Σ_{n=1}^{x} u_n Σ_{k≥n} W(k) π_k` for `x ≤ x_max`.
///
/// With `R_n = Σ_{k≥n} W(k) π_k / π_n`, the innermost `R_{x_max}` is summed
/// with a certified tail, then `R_n = W(n) + (b_n/d_{n+1}) R_{n+1}` runs
/// downwards and `V(x) = V(x-1) + R_x/d_x` upwards, compensated.
pub fn build_v_1d(model: &BdcModel, w: &SeqFn, x_max: u64, cfg: &SeriesConfig) -> Result<VTable, CriteriaError> {
    require_d1(model)?;
    if x_max == 0 {
        return Err(CriteriaError::InvalidParameter("x_max must be at least 1".into()));
    }
    if let Some(cap) = model.capacity() {
        if x_max > cap {
            return Err(CriteriaError::InvalidParameter(format!("x_max = {x_max} exceeds the capacity {cap}")));
        }
    }
    let m = x_max;
    let mut c = 1.0;
    let inner = sum_certified(
        |j| {
            if j > 1 {
                let b = model.birth(m + j - 2);
                c = if b == 0.0 || c == 0.0 { 0.0 } else { c * b / model.death(m + j - 1) };
            }
            if c == 0.0 {
                0.0
            } else {
                w(m + j - 1) * c
            }
        },
        cfg,
    );
    if !inner.converged {
        return Err(CriteriaError::NotConverged(format!(
            "inner tail from x = {m} is {:?} after {} terms",
            inner.status, inner.terms_used
        )));
    }
    let mut r = vec![0.0; m as usize + 1];
    r[m as usize] = inner.value + inner.tail_estimate();
    for n in (1..m).rev() {
        let b = model.birth(n);
        let carried = if b == 0.0 { 0.0 } else { b / model.death(n + 1) * r[n as usize + 1] };
        r[n as usize] = w(n) + carried;
    }
    let mut values = Vec::with_capacity(m as usize + 1);
    values.push(0.0);
    let mut acc = CompensatedSum::new();
    for x in 1..=m {
        acc.add(r[x as usize] / model.death(x));
        values.push(acc.value());
    }
    Ok(VTable { values, inner_tail: inner })
}

/// Running envelopes `κ⁺_k = max_{ℓ≤k} a_ℓ` and `κ⁻_k = min_{k≤ℓ≤horizon} a_ℓ`
/// for `k ≤ k_max`.
#[derive(Clone, Debug, Serialize)]
pub struct OscillationData {
    pub kappa_plus: Vec<f64>,
    pub kappa_minus: Vec<f64>,
}

impl OscillationData {
    pub fn new(a: impl Fn(u64) -> f64, k_max: u64, horizon: u64) -> Self {
        let horizon = horizon.max(k_max);
        let values: Vec<f64> = (1..=horizon).map(&a).collect();
        let mut kappa_plus = Vec::with_capacity(k_max as usize);
        let mut hi = f64::NEG_INFINITY;
        for &v in &values[..k_max as usize] {
            hi = hi.max(v);
            kappa_plus.push(hi);
        }
        let mut suffix = vec![0.0; horizon as usize];
        let mut lo = f64::INFINITY;
        for i in (0..horizon as usize).rev() {
            lo = lo.min(values[i]);
            suffix[i] = lo;
        }
        suffix.truncate(k_max as usize);
        OscillationData { kappa_plus, kappa_minus: suffix }
    }

    /// `κ⁺_k - κ⁻_k`.
    pub fn osc(&self, k: u64) -> f64 {
        let i = (k - 1) as usize;
        self.kappa_plus[i] - self.kappa_minus[i]
    }

    pub fn len(&self) -> u64 {
        self.kappa_plus.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.kappa_plus.is_empty()
    }
}

/// Summability of `Σ_k (κ⁺_k - κ⁻_k) π_k Σ_{n≤k} 1/(d_n π_n)`, together with
/// `S < ∞`.
///
/// `κ⁻` is computed over the lookahead `[k, 2·max_terms]`, so the scan reads
/// `a` on twice the summed range.
pub fn check_oscillation_1d(model: &BdcModel, cfg: &SeriesConfig) -> Result<LyapunovReport, CriteriaError> {
    require_d1(model)?;
    let s_est = series_s(model, cfg)?;
    let k_max = model.capacity().map_or(cfg.max_terms, |c| c.min(cfg.max_terms)).max(1);
    let horizon = model.capacity().map_or(2 * k_max, |c| c.min(2 * k_max));
    let data = OscillationData::new(|k| model.catastrophe(k), k_max, horizon);
    let mut s = s_terms(model);
    let est = sum_certified(
        |k| {
            let sk = s(k);
            if k > data.len() {
                return 0.0;
            }
            let o = data.osc(k);
            if o == 0.0 {
                0.0
            } else {
                o * sk
            }
        },
        &SeriesConfig { max_terms: k_max, ..*cfg },
    );
    let max_osc = (1..=data.len()).map(|k| data.osc(k)).fold(0.0, f64::max);
    let mut report = series_report("oscillation-1d", &est, cfg).witness("max_osc", max_osc);
    if s_est.status != SeriesStatus::Converged {
        let verdict = match s_est.status {
            SeriesStatus::Diverges => Verdict::Fails,
            _ => Verdict::Inconclusive,
        };
        report.verdict = verdict;
        report = report.note(format!("S is {:?}; the oscillation criterion also needs S < ∞", s_est.status));
    } else {
        report = report.witness("s_value", s_est.value);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{presets, seq_fn};

    fn cfg() -> SeriesConfig {
        SeriesConfig::default()
    }

    #[test]
    fn logistic_s_converges() {
        let est = series_s(&presets::logistic(1.0, 1.0, 1.0), &cfg()).unwrap();
        assert!(est.converged, "{est:?}");
    }

    #[test]
    fn martingale_terms_are_k_over_d() {
        let m = presets::martingale(3.0);
        let mut s = s_terms(&m);
        for k in 1..=200u64 {
            let expected = 1.0 / (k as f64 * k as f64);
            assert!((s(k) - expected).abs() <= 1e-12 * expected);
        }
        assert!(series_s(&m, &cfg()).unwrap().converged);
    }

    #[test]
    fn linear_growth_diverges() {
        let est = series_s(&presets::linear(2.0, 1.0), &cfg()).unwrap();
        assert_eq!(est.status, SeriesStatus::Diverges);
        assert!(suggest_w(&presets::linear(2.0, 1.0), &cfg()).is_err());
    }

    #[test]
    fn constant_w_is_rejected() {
        let err = check_w_condition(&presets::logistic(1.0, 1.0, 1.0), &seq_fn(|_| 1.0), &cfg()).unwrap_err();
        assert!(matches!(err, CriteriaError::InvalidW(_)));
    }

    #[test]
    fn decreasing_w_is_rejected() {
        let err = check_w_condition(&presets::logistic(1.0, 1.0, 1.0), &seq_fn(|k| 1.0 / k as f64), &cfg()).unwrap_err();
        assert!(matches!(err, CriteriaError::InvalidW(_)));
    }

    #[test]
    fn v_is_nondecreasing_and_starts_at_zero() {
        let m = presets::logistic(1.0, 1.0, 1.0);
        let v = build_v_1d(&m, &seq_fn(|k| (k as f64).sqrt()), 50, &cfg()).unwrap();
        assert_eq!(v.value(0), Some(0.0));
        assert!(v.values().windows(2).all(|p| p[1] >= p[0]));
        assert_eq!(v.x_max(), 50);
    }

    #[test]
    fn oscillation_envelopes() {
        let d = OscillationData::new(|k| if k % 2 == 0 { k as f64 } else { 0.0 }, 6, 12);
        assert_eq!(d.kappa_plus, vec![0.0, 2.0, 2.0, 4.0, 4.0, 6.0]);
        assert_eq!(d.kappa_minus, vec![0.0; 6]);
        assert_eq!(d.osc(4), 4.0);
    }
}
