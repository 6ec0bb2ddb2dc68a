//! Criteria for multi-type chains on `ℕ^r`.
//!
//! Every asymptotic hypothesis ("for `|x|` large enough", "`o(|x|^η′)`") is
//! evaluated on the shells `|x| ≤ range` and reported with that range.

use std::sync::Arc;

use rayon::prelude::*;

use super::one_dim::{check_w_condition, series_s, suggest_w};
use super::series::{SeriesConfig, SeriesStatus};
use super::{CriteriaError, LyapunovReport, Verdict};
use crate::model::{BdcModel, CompetitiveRates, Lattice, MultiTypeModel, SeqFn, State, StateFn};
use crate::numeric::{linear_fit, CompensatedSum};

/// Largest lattice the scans will build.
pub const STATE_BUDGET: u64 = 4_000_000;
/// Subtracted from the largest admissible margin so the reported value
/// satisfies the inequality strictly.
const MARGIN_BACKOFF: f64 = 1e-12;
const PREFIX_CACHE: usize = 4096;

fn lattice(r: usize, max_shell: u64) -> Result<Lattice, CriteriaError> {
    let count = Lattice::count(r, max_shell);
    if count > STATE_BUDGET {
        return Err(CriteriaError::InvalidParameter(format!(
            "{count} states with |x| ≤ {max_shell} in dimension {r} exceed the budget of {STATE_BUDGET}"
        )));
    }
    Lattice::new(r, max_shell).map_err(CriteriaError::Model)
}

fn competitive(model: &MultiTypeModel) -> Result<&CompetitiveRates, CriteriaError> {
    model
        .competitive_rates()
        .ok_or_else(|| CriteriaError::Unsupported("this check needs the competitive parametrisation".into()))
}

/// Left side `Σ_{j≠k} c_jk(x) x_j |x|` and bracket `Σ_i c_ii(x) x_i (x_i - 1)`
/// of the strong intra-specific competition inequality.
pub fn h1_sides(rates: &CompetitiveRates, x: &[u32]) -> (f64, f64) {
    let total: f64 = x.iter().map(|&v| f64::from(v)).sum();
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for j in 0..x.len() {
        let xj = f64::from(x[j]);
        for k in 0..x.len() {
            let c = (rates.competition)(j, k, x);
            if j == k {
                rhs += c * xj * (xj - 1.0);
            } else {
                lhs += c * xj * total;
            }
        }
    }
    (lhs, rhs)
}

/// `lhs ≤ (1 - η) rhs`.
pub fn h1_holds_at(rates: &CompetitiveRates, x: &[u32], eta: f64) -> bool {
    let (lhs, rhs) = h1_sides(rates, x);
    lhs <= (1.0 - eta) * rhs
}

/// Left side `Σ_j (x_j/|x|) 𝟙{x_j≠1} Σ_k c_jk(x)(x_k - 𝟙{k=j})` and bracket
/// `Σ_j 𝟙{x_j=1} Σ_k c_jk(x)(x_k - 𝟙{k=j})` of the alternative inequality.
pub fn alt_h1_sides(rates: &CompetitiveRates, x: &[u32]) -> (f64, f64) {
    let total: f64 = x.iter().map(|&v| f64::from(v)).sum();
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for j in 0..x.len() {
        let mut inner = 0.0;
        for k in 0..x.len() {
            let xk = f64::from(x[k]) - if k == j { 1.0 } else { 0.0 };
            inner += (rates.competition)(j, k, x) * xk;
        }
        if x[j] == 1 {
            rhs += inner;
        } else {
            lhs += f64::from(x[j]) / total * inner;
        }
    }
    (lhs, rhs)
}

/// `lhs ≥ rhs / (1 - η)`.
pub fn alt_h1_holds_at(rates: &CompetitiveRates, x: &[u32], eta: f64) -> bool {
    let (lhs, rhs) = alt_h1_sides(rates, x);
    (1.0 - eta) * lhs >= rhs
}

/// Largest `η` admissible at `x` for `lhs ≤ (1-η) rhs`.
fn margin_le(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        1.0 - lhs / rhs
    } else if lhs <= 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    }
}

/// Largest `η` admissible at `x` for `(1-η) lhs ≥ rhs`.
fn margin_ge(lhs: f64, rhs: f64) -> f64 {
    if lhs > 0.0 {
        1.0 - rhs / lhs
    } else if rhs <= 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    }
}

/// Shared policy: with `m(s)` the smallest admissible margin on shell `s` and
/// `η_max(N₀) = min_{N₀ ≤ s ≤ range} m(s)`, the target is `η* = η_max(range/2)`
/// capped at 1, `N₀` is the first shell with `η_max(N₀) ≥ η*`, and the
/// reported margin is `η* - 1e-12`.
fn margin_scan(
    name: &str,
    model: &MultiTypeModel,
    range: u64,
    margin_at: impl Fn(&[u32]) -> f64 + Sync,
) -> Result<LyapunovReport, CriteriaError> {
    let r = model.types();
    let lat = lattice(r, range)?;
    let margins: Vec<f64> = lat.states().par_iter().map(|x| margin_at(x.coords())).collect();
    let first = r as u64;
    let shells = (range - first + 1) as usize;
    let mut shell_min = vec![f64::INFINITY; shells];
    let mut shell_arg: Vec<Option<usize>> = vec![None; shells];
    for (i, x) in lat.states().iter().enumerate() {
        let s = (x.total() - first) as usize;
        if margins[i] < shell_min[s] || margins[i].is_nan() {
            shell_min[s] = if margins[i].is_nan() { f64::NEG_INFINITY } else { margins[i] };
            shell_arg[s] = Some(i);
        }
    }
    let mut suffix = shell_min.clone();
    for s in (0..shells.saturating_sub(1)).rev() {
        suffix[s] = suffix[s].min(suffix[s + 1]);
    }
    let target_shell = (range / 2).max(first);
    let ti = (target_shell - first) as usize;
    let eta_star = suffix[ti].min(1.0);
    let report = LyapunovReport::new(name, Verdict::Fails).with_range(first, range);
    let eta = eta_star - MARGIN_BACKOFF;
    if !(eta > 0.0) {
        let worst = (ti..shells).min_by(|&a, &b| shell_min[a].total_cmp(&shell_min[b])).expect("nonempty");
        let mut report = report.witness("best_margin_upper_half", eta_star);
        if let Some(i) = shell_arg[worst] {
            report = report
                .witness("violating_total", lat.state(i).total() as f64)
                .note(format!("no positive margin on |x| ≥ {target_shell}; worst at x = {}", lat.state(i)));
        }
        return Ok(report);
    }
    let n0 = (0..shells).find(|&s| suffix[s] >= eta_star).expect("target shell qualifies") as u64 + first;
    let mut report = report.witness("h1_margin", eta).witness("n0", n0 as f64);
    report.verdict = Verdict::HoldsOnRange;
    if eta_star >= 1.0 {
        report = report.note("inequality holds for every margin below 1 from N0 on");
    }
    Ok(report)
}

/// Strong intra-specific competition: the largest `η ∈ (0,1)` with
/// `Σ_{j≠k} c_jk(x) x_j |x| ≤ (1-η) Σ_i c_ii(x) x_i(x_i-1)` for all
/// `N₀ ≤ |x| ≤ range`. Witnesses `h1_margin` and `n0`.
pub fn check_h1(model: &MultiTypeModel, range: u64) -> Result<LyapunovReport, CriteriaError> {
    let rates = competitive(model)?;
    margin_scan("h1", model, range, |x| {
        let (lhs, rhs) = h1_sides(rates, x);
        margin_le(lhs, rhs)
    })
}

/// The alternative inequality
/// `Σ_j (x_j/|x|) 𝟙{x_j≠1} Σ_k c_jk(x)(x_k-𝟙{k=j}) ≥ (1-η)⁻¹ Σ_j 𝟙{x_j=1} Σ_k c_jk(x)(x_k-𝟙{k=j})`,
/// with the same margin policy as [`check_h1`].
pub fn check_alt_h1(model: &MultiTypeModel, range: u64) -> Result<LyapunovReport, CriteriaError> {
    let rates = competitive(model)?;
    margin_scan("h1-alternative", model, range, |x| {
        let (lhs, rhs) = alt_h1_sides(rates, x);
        margin_ge(lhs, rhs)
    })
}

/// Shell envelopes of the catastrophe intensity: `κ⁺(s) = max_{|y|≤s} α(y)`,
/// `κ⁻(s) = min_{s≤|y|≤horizon} α(y)`, for `r ≤ s ≤ range`.
#[derive(Clone, Debug)]
pub struct ShellOscillation {
    pub first_shell: u64,
    pub kappa_plus: Vec<f64>,
    pub kappa_minus: Vec<f64>,
}

impl ShellOscillation {
    pub fn new(alpha: &(dyn Fn(&[u32]) -> f64 + Sync), r: usize, range: u64, horizon: u64) -> Result<Self, CriteriaError> {
        let horizon = horizon.max(range);
        let lat = lattice(r, horizon)?;
        let first = r as u64;
        let shells = (horizon - first + 1) as usize;
        let values: Vec<f64> = lat.states().par_iter().map(|x| alpha(x.coords())).collect();
        let mut hi = vec![f64::NEG_INFINITY; shells];
        let mut lo = vec![f64::INFINITY; shells];
        for (x, &a) in lat.states().iter().zip(&values) {
            let s = (x.total() - first) as usize;
            hi[s] = hi[s].max(a);
            lo[s] = lo[s].min(a);
        }
        for s in 1..shells {
            hi[s] = hi[s].max(hi[s - 1]);
        }
        for s in (0..shells - 1).rev() {
            lo[s] = lo[s].min(lo[s + 1]);
        }
        let keep = (range - first + 1) as usize;
        hi.truncate(keep);
        lo.truncate(keep);
        Ok(ShellOscillation { first_shell: first, kappa_plus: hi, kappa_minus: lo })
    }

    /// `Osc(α)` on shell `s`.
    pub fn osc(&self, s: u64) -> f64 {
        let i = (s - self.first_shell) as usize;
        self.kappa_plus[i] - self.kappa_minus[i]
    }
}

/// Sublinear oscillation `Osc(α)(x) = o(|x|^η′)` for some `η′ < η`.
///
/// `κ⁻` looks ahead to shell `2·range`. The growth exponent `g` of `Osc` is
/// fitted on the upper half of the range; the check proposes
/// `η′ = g + (η - g)/2` (at least `η/2`) and holds when `g < η` and
/// `Osc(s)/s^η′` is nonincreasing on the upper half. `Osc ≡ 0` reports
/// `η′ = 0`.
pub fn check_h2(model: &MultiTypeModel, eta: f64, range: u64) -> Result<LyapunovReport, CriteriaError> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(CriteriaError::InvalidParameter(format!("eta = {eta} must lie in (0, 1)")));
    }
    let r = model.types();
    let first = r as u64;
    if range < first + 4 {
        return Err(CriteriaError::InvalidParameter(format!("range {range} is too short for dimension {r}")));
    }
    let alpha = |x: &[u32]| model.catastrophe_rate(x);
    let osc = ShellOscillation::new(&alpha, r, range, 2 * range)?;
    let lo = (range / 2).max(first);
    let upper: Vec<u64> = (lo..=range).collect();
    let values: Vec<f64> = upper.iter().map(|&s| osc.osc(s)).collect();
    let report = LyapunovReport::new("h2", Verdict::Inconclusive)
        .with_range(first, range)
        .witness("eta", eta)
        .witness("max_osc_upper_half", values.iter().copied().fold(0.0, f64::max));
    if values.iter().all(|&v| v == 0.0) {
        let mut report = report.witness("eta_prime", 0.0).witness("osc_exponent", 0.0);
        report.verdict = Verdict::HoldsOnRange;
        return Ok(report.note("oscillation vanishes on the upper half of the range"));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = upper
        .iter()
        .zip(&values)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&s, &v)| ((s as f64).ln(), v.ln()))
        .unzip();
    let Some((g, _, r2)) = linear_fit(&xs, &ys).filter(|_| xs.len() >= 3) else {
        return Ok(report.note("too few shells with positive oscillation to fit a growth exponent"));
    };
    let mut report = report.witness("osc_exponent", g).witness("fit_r2", r2);
    if g >= eta {
        report.verdict = Verdict::Fails;
        return Ok(report.note(format!("oscillation grows like |x|^{g:.4}, not below |x|^{eta}")));
    }
    let eta_prime = (g + (eta - g) / 2.0).max(eta / 2.0);
    report = report.witness("eta_prime", eta_prime);
    let ratios: Vec<f64> = upper.iter().zip(&values).map(|(&s, &v)| v / (s as f64).powf(eta_prime)).collect();
    let monotone = ratios.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-300);
    if monotone {
        report.verdict = Verdict::HoldsOnRange;
        Ok(report)
    } else {
        Ok(report.note("Osc/|x|^eta' is not monotone on the upper half of the range"))
    }
}

/// Default `ε` for the shell potential: the midpoint of `(1-η, 1-η′)`.
pub fn default_eps(eta: f64, eta_prime: f64) -> f64 {
    ((1.0 - eta) + (1.0 - eta_prime)) / 2.0
}

/// Tail `Σ_{j>n} j^{-s}` by Euler–Maclaurin; accurate for `n` in the thousands.
fn zeta_tail(s: f64, n: f64) -> f64 {
    n.powf(1.0 - s) / (s - 1.0) - 0.5 * n.powf(-s) + s * n.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0) / 720.0
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * n.powf(-s - 5.0) / 30240.0
}

/// `V(x) = Σ_{j=1}^{|x|} j^{-1-ε}`, a bounded nondecreasing function of `|x|`.
#[derive(Clone, Debug)]
pub struct ShellPotential {
    eps: f64,
    prefix: Vec<f64>,
    sup: f64,
}

impl ShellPotential {
    pub fn new(eps: f64) -> Result<Self, CriteriaError> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(CriteriaError::InvalidParameter(format!("eps = {eps} must lie in (0, 1)")));
        }
        let s = 1.0 + eps;
        let mut prefix = Vec::with_capacity(PREFIX_CACHE + 1);
        prefix.push(0.0);
        let mut acc = CompensatedSum::new();
        for j in 1..=PREFIX_CACHE {
            acc.add((j as f64).powf(-s));
            prefix.push(acc.value());
        }
        let sup = prefix[PREFIX_CACHE] + zeta_tail(s, PREFIX_CACHE as f64);
        Ok(ShellPotential { eps, prefix, sup })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn at_shell(&self, n: u64) -> f64 {
        match self.prefix.get(n as usize) {
            Some(&v) => v,
            None => self.sup - zeta_tail(1.0 + self.eps, n as f64),
        }
    }

    pub fn eval(&self, x: &State) -> f64 {
        self.at_shell(x.total())
    }

    /// `sup V = ζ(1+ε)`.
    pub fn sup(&self) -> f64 {
        self.sup
    }

    pub fn as_state_fn(&self) -> StateFn {
        let me = self.clone();
        Arc::new(move |x: &[u32]| me.at_shell(x.iter().map(|&c| u64::from(c)).sum()))
    }
}

/// Domination of the total population by a one-dimensional chain:
/// `Σ_i b_i(x) ≤ b̄(|x|)` and `Σ_i d_i(x) + a(x)𝟙{x=(1,…,1)} ≥ d̲(|x|)` for
/// `|x| ≤ range`, then the series and weight checks on the chain with rates
/// `(b̄, d̲)` and no catastrophes.
///
/// Deaths of a type at size one count towards `Σ_i d_i` even though they lead
/// to `∂`. The catastrophe rate at the minimal state enters the death side
/// because the envelope chain leaves `{1, 2, …}` only through its death at 1.
pub fn check_domination(
    model: &MultiTypeModel,
    bar_b: &SeqFn,
    under_d: &SeqFn,
    range: u64,
    cfg: &SeriesConfig,
) -> Result<LyapunovReport, CriteriaError> {
    let r = model.types();
    for s in 1..=range {
        let (b, d) = (bar_b(s), under_d(s));
        if !(b > 0.0 && d > 0.0 && b.is_finite() && d.is_finite()) {
            return Err(CriteriaError::InvalidParameter(format!(
                "envelope rates must be positive and finite; at {s}: b̄ = {b}, d̲ = {d}"
            )));
        }
    }
    let lat = lattice(r, range)?;
    const REL: f64 = 1e-12;
    let violations: Vec<Option<String>> = lat
        .states()
        .par_iter()
        .map(|x| {
            let c = x.coords();
            let s = x.total();
            let births: f64 = (0..r).map(|i| model.birth_rate(i, c)).sum();
            let mut deaths: f64 = (0..r).map(|i| model.death_rate(i, c)).sum();
            deaths += model.absorption_rate(c) - model.catastrophe_rate(c);
            if x.is_unit() {
                deaths += model.catastrophe_rate(c);
            }
            let (bb, dd) = (bar_b(s), under_d(s));
            if births > bb * (1.0 + REL) {
                Some(format!("Σ b_i = {births} > b̄({s}) = {bb} at x = {x}"))
            } else if deaths < dd * (1.0 - REL) {
                Some(format!("Σ d_i = {deaths} < d̲({s}) = {dd} at x = {x}"))
            } else {
                None
            }
        })
        .collect();
    let first_violation = violations.iter().position(Option::is_some);
    let mut report = LyapunovReport::new("domination", Verdict::Fails).with_range(r as u64, range).with_tolerance(cfg.tol);
    if let Some(i) = first_violation {
        let count = violations.iter().filter(|v| v.is_some()).count();
        return Ok(report
            .witness("violating_total", lat.state(i).total() as f64)
            .witness("violations", count as f64)
            .note(violations[i].clone().expect("violation present")));
    }
    let envelope = BdcModel::new(bar_b.clone(), under_d.clone()).named("envelope");
    let s = series_s(&envelope, cfg)?;
    report = report.witness("s_value", s.value).witness("s_terms", s.terms_used as f64);
    match s.status {
        SeriesStatus::Converged => {}
        SeriesStatus::Diverges => return Ok(report.note("the envelope chain does not come down from infinity")),
        SeriesStatus::Inconclusive => {
            report.verdict = Verdict::Inconclusive;
            return Ok(report.note("S of the envelope chain is inconclusive"));
        }
    }
    report = report.witness("s_tail_bound", s.tail_bound);
    let w = suggest_w(&envelope, cfg)?;
    let wr = check_w_condition(&envelope, &w, cfg)?;
    report.verdict = wr.verdict;
    if let Some(v) = wr.get("value") {
        report = report.witness("w_series_value", v);
    }
    if let Some(v) = wr.get("tail_bound") {
        report = report.witness("w_series_tail_bound", v);
    }
    Ok(report.note("rate bounds hold on the whole range; series checked on the envelope chain"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{pair_fn, presets, state_fn};

    fn diag_only() -> MultiTypeModel {
        presets::lotka_volterra(&[1.0, 1.0], &[0.5, 0.5], &[vec![2.0, 0.0], vec![0.0, 3.0]], state_fn(|_| 0.0))
    }

    #[test]
    fn no_interspecific_competition_gives_margin_one() {
        let r = check_h1(&diag_only(), 60).unwrap();
        assert!(r.holds());
        assert!(r.get("h1_margin").unwrap() > 1.0 - 1e-9);
    }

    #[test]
    fn diagonal_competition_satisfies_alternative() {
        let r = check_alt_h1(&diag_only(), 60).unwrap();
        assert!(r.holds(), "{r}");
    }

    #[test]
    fn vanishing_diagonal_fails_alternative() {
        let m = MultiTypeModel::competitive(CompetitiveRates {
            beta: vec![state_fn(|_| 1.0); 2],
            delta: vec![state_fn(|_| 1.0); 2],
            competition: pair_fn(|i, j, _| if i == j { 0.0 } else { 1.0 }),
            alpha: state_fn(|_| 0.0),
        })
        .unwrap();
        assert_eq!(check_alt_h1(&m, 60).unwrap().verdict, Verdict::Fails);
    }

    #[test]
    fn zero_alpha_is_trivial_h2() {
        let r = check_h2(&diag_only(), 0.5, 40).unwrap();
        assert!(r.holds());
        assert_eq!(r.get("eta_prime"), Some(0.0));
    }

    #[test]
    fn zeta_three_halves() {
        let v = ShellPotential::new(0.5).unwrap();
        assert!((v.sup() - 2.612_375_348_685_488).abs() < 1e-12);
        let far = v.at_shell(10_000_000);
        assert!(far < v.sup() && v.sup() - far < 2.0 * 10_000_000f64.powf(-0.5) / 0.5);
    }

    #[test]
    fn potential_is_continuous_across_cache_edge() {
        let v = ShellPotential::new(0.3).unwrap();
        let n = PREFIX_CACHE as u64;
        let step = v.at_shell(n + 1) - v.at_shell(n);
        assert!((step - ((n + 1) as f64).powf(-1.3)).abs() < 1e-13);
    }
}
