use serde::Serialize;

use super::{AbsorbedChain, BdcModel, Lattice, MultiTypeModel, MultiTypeRates, RateModel, State};

/// Issues beyond this count are tallied but not stored.
const MAX_RECORDED: usize = 64;

/// Bounds of the form `0 < β_i(x) ≤ β̄`, `0 ≤ δ_i(x) ≤ δ̄`, `c_ii(x) ≥ c̲`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoefficientBounds {
    pub beta_max: f64,
    pub delta_max: f64,
    pub c_min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationIssue {
    Negative { what: String, state: State, value: f64 },
    NonFinite { what: String, state: State, value: f64 },
    /// A rate required to be strictly positive vanishes.
    NotPositive { what: String, state: State },
    /// A coefficient violates a declared or structural bound.
    Bound { what: String, state: State, value: f64, bound: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub bound: u64,
    pub states_checked: u64,
    pub issue_count: u64,
    pub issues: Vec<ValidationIssue>,
    /// 1D only: whether `a_k = 0` on every scanned state.
    pub catastrophe_free: Option<bool>,
    /// Competitive mode only: `(max β, max δ, min c_ii)` over the scanned states.
    pub observed_bounds: Option<CoefficientBounds>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issue_count == 0
    }

    fn push(&mut self, issue: ValidationIssue) {
        self.issue_count += 1;
        if self.issues.len() < MAX_RECORDED {
            self.issues.push(issue);
        }
    }

    fn check(&mut self, what: &str, x: &State, value: f64, strictly_positive: bool) {
        if !value.is_finite() {
            self.push(ValidationIssue::NonFinite { what: what.into(), state: x.clone(), value });
        } else if value < 0.0 {
            self.push(ValidationIssue::Negative { what: what.into(), state: x.clone(), value });
        } else if strictly_positive && value == 0.0 {
            self.push(ValidationIssue::NotPositive { what: what.into(), state: x.clone() });
        }
    }
}

/// Scans states up to `bound` (`k ≤ bound` in 1D, `|x| ≤ bound` otherwise).
///
/// 1D chains need `b_k > 0` below the capacity, `d_k > 0` for `k ≥ 2`,
/// `a_1 + d_1 > 0` and `a_k ≥ 0`. Competitive multi-type chains are checked
/// against `declared` when given, and always against `β_i > 0`, `δ_i ≥ 0`,
/// `c_ij ≥ 0` and `c_ii > 0`.
pub fn validate(model: &RateModel, bound: u64, declared: Option<&CoefficientBounds>) -> ValidationReport {
    let mut report = ValidationReport {
        bound,
        states_checked: 0,
        issue_count: 0,
        issues: Vec::new(),
        catastrophe_free: None,
        observed_bounds: None,
    };
    match model {
        RateModel::Bdc(m) => validate_bdc(m, bound, &mut report),
        RateModel::MultiType(m) => validate_multitype(m, bound, declared, &mut report),
    }
    report
}

fn validate_bdc(m: &BdcModel, bound: u64, report: &mut ValidationReport) {
    let top = m.capacity().map_or(bound, |c| c.min(bound)).max(1);
    let mut all_zero = true;
    for k in 1..=top {
        let x = State::one(k as u32).expect("k >= 1");
        let at_capacity = m.capacity() == Some(k);
        let b = m.birth(k);
        if at_capacity {
            if b != 0.0 {
                report.push(ValidationIssue::Bound { what: "birth rate at capacity".into(), state: x.clone(), value: b, bound: 0.0 });
            }
        } else {
            report.check("birth rate", &x, b, true);
        }
        let d = m.death(k);
        let a = m.catastrophe(k);
        report.check("death rate", &x, d, k >= 2);
        report.check("catastrophe rate", &x, a, false);
        if k == 1 && d >= 0.0 && a >= 0.0 && a + d <= 0.0 {
            report.push(ValidationIssue::NotPositive { what: "absorption rate a_1 + d_1".into(), state: x.clone() });
        }
        if a != 0.0 {
            all_zero = false;
        }
        report.states_checked += 1;
    }
    report.catastrophe_free = Some(m.catastrophe_free() || all_zero);
}

fn validate_multitype(m: &MultiTypeModel, bound: u64, declared: Option<&CoefficientBounds>, report: &mut ValidationReport) {
    let r = m.types();
    let Ok(lattice) = Lattice::new(r, bound.max(r as u64)) else {
        return;
    };
    let mut observed = CoefficientBounds { beta_max: f64::NEG_INFINITY, delta_max: f64::NEG_INFINITY, c_min: f64::INFINITY };
    for x in lattice.states() {
        let c = x.coords();
        match m.rates() {
            MultiTypeRates::Competitive(rates) => {
                for i in 0..r {
                    let beta = (rates.beta[i])(c);
                    let delta = (rates.delta[i])(c);
                    report.check(&format!("beta_{}", i + 1), x, beta, true);
                    report.check(&format!("delta_{}", i + 1), x, delta, false);
                    for j in 0..r {
                        let cij = (rates.competition)(i, j, c);
                        report.check(&format!("c_{}{}", i + 1, j + 1), x, cij, i == j);
                        if i == j {
                            observed.c_min = observed.c_min.min(cij);
                            if let Some(decl) = declared {
                                if cij < decl.c_min {
                                    report.push(ValidationIssue::Bound {
                                        what: format!("c_{}{} below lower bound", i + 1, i + 1),
                                        state: x.clone(),
                                        value: cij,
                                        bound: decl.c_min,
                                    });
                                }
                            }
                        }
                    }
                    observed.beta_max = observed.beta_max.max(beta);
                    observed.delta_max = observed.delta_max.max(delta);
                    if let Some(decl) = declared {
                        if beta > decl.beta_max {
                            report.push(ValidationIssue::Bound {
                                what: format!("beta_{} above upper bound", i + 1),
                                state: x.clone(),
                                value: beta,
                                bound: decl.beta_max,
                            });
                        }
                        if delta > decl.delta_max {
                            report.push(ValidationIssue::Bound {
                                what: format!("delta_{} above upper bound", i + 1),
                                state: x.clone(),
                                value: delta,
                                bound: decl.delta_max,
                            });
                        }
                    }
                }
                report.check("alpha", x, (rates.alpha)(c), false);
            }
            MultiTypeRates::Plain(rates) => {
                for i in 0..r {
                    report.check(&format!("b_{}", i + 1), x, (rates.birth[i])(c), false);
                    report.check(&format!("d_{}", i + 1), x, (rates.death[i])(c), false);
                }
                report.check("catastrophe rate", x, (rates.catastrophe)(c), false);
            }
        }
        report.states_checked += 1;
    }
    if matches!(m.rates(), MultiTypeRates::Competitive(_)) {
        report.observed_bounds = Some(observed);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{pair_fn, presets, seq_fn, state_fn, CompetitiveRates};

    #[test]
    fn logistic_is_valid() {
        let report = validate(&presets::logistic(1.0, 1.0, 1.0).into(), 10_000, None);
        assert!(report.is_valid(), "{:?}", report.issues);
        assert_eq!(report.states_checked, 10_000);
        assert_eq!(report.catastrophe_free, Some(true));
    }

    #[test]
    fn flags_negative_death_rates() {
        let m = BdcModel::new(seq_fn(|k| k as f64), seq_fn(|k| k as f64 - 5.0));
        let report = validate(&m.into(), 100, None);
        assert!(!report.is_valid());
        // k = 1..4 negative, k = 5 zero
        assert_eq!(report.issue_count, 5);
        for issue in &report.issues {
            let state = match issue {
                ValidationIssue::Negative { state, .. } | ValidationIssue::NotPositive { state, .. } => state,
                other => panic!("unexpected {other:?}"),
            };
            assert!(state.coords()[0] <= 5);
        }
    }

    #[test]
    fn two_state_capacity_is_accepted() {
        let report = validate(&presets::two_state().into(), 100, None);
        assert!(report.is_valid(), "{:?}", report.issues);
        assert_eq!(report.states_checked, 2);
        assert_eq!(report.catastrophe_free, Some(false));
    }

    #[test]
    fn vanishing_intraspecific_competition_is_flagged() {
        let m = MultiTypeModel::competitive(CompetitiveRates {
            beta: vec![state_fn(|_| 1.0); 2],
            delta: vec![state_fn(|_| 0.5); 2],
            competition: pair_fn(|i, j, x| if i == j && x[0] == 3 { 0.0 } else { 1.0 }),
            alpha: state_fn(|_| 0.0),
        })
        .unwrap();
        let decl = CoefficientBounds { beta_max: 1.0, delta_max: 1.0, c_min: 0.5 };
        let report = validate(&m.into(), 8, Some(&decl));
        assert!(!report.is_valid());
        assert!(report.issues.iter().all(|i| match i {
            ValidationIssue::NotPositive { state, .. } | ValidationIssue::Bound { state, .. } => state.coords()[0] == 3,
            _ => false,
        }));
        assert_eq!(report.observed_bounds.unwrap().c_min, 0.0);
    }
}
