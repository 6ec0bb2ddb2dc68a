//! Named model instances.

use super::{
    pair_fn, seq_fn, state_fn, BdcModel, CompetitiveRates, MultiTypeModel, PlainRates, SeqFn, StateFn,
};

/// `b_k = b·k`, `d_k = d·k + c·k(k-1)`, no catastrophes.
pub fn logistic(b: f64, d: f64, c: f64) -> BdcModel {
    BdcModel::new(
        seq_fn(move |k| b * k as f64),
        seq_fn(move |k| {
            let k = k as f64;
            d * k + c * k * (k - 1.0)
        }),
    )
    .named("logistic")
}

/// Logistic chain with catastrophe rate `a_k`.
pub fn logistic_with_catastrophe(b: f64, d: f64, c: f64, catastrophe: SeqFn) -> BdcModel {
    logistic(b, d, c).with_catastrophe(catastrophe).named("logistic-catastrophe")
}

/// `b_k = d_k = k^p`: the catastrophe-free chain is a local martingale.
pub fn martingale(p: f64) -> BdcModel {
    BdcModel::new(seq_fn(move |k| (k as f64).powf(p)), seq_fn(move |k| (k as f64).powf(p))).named("martingale")
}

/// `b_k = b·k`, `d_k = d·k`. Does not come down from infinity.
pub fn linear(b: f64, d: f64) -> BdcModel {
    BdcModel::new(seq_fn(move |k| b * k as f64), seq_fn(move |k| d * k as f64)).named("linear")
}

/// Two states: `1 → 2` at rate 1, `1 → ∂` at rate 1, `2 → 1` at rate 1.
///
/// Generator on `{1, 2}` is `[[-2, 1], [1, -1]]`.
pub fn two_state() -> BdcModel {
    BdcModel::new(
        seq_fn(|k| if k == 1 { 1.0 } else { 0.0 }),
        seq_fn(|k| if k == 2 { 1.0 } else { 0.0 }),
    )
    .with_catastrophe(seq_fn(|k| if k == 1 { 1.0 } else { 0.0 }))
    .with_capacity(2)
    .named("two-state")
}

/// A single state killed at rate `rho`.
pub fn pure_absorption(rho: f64) -> BdcModel {
    BdcModel::new(seq_fn(|_| 0.0), seq_fn(|_| 0.0))
        .with_catastrophe(seq_fn(move |_| rho))
        .with_capacity(1)
        .named("pure-absorption")
}

/// Competitive Lotka–Volterra chain with constant coefficients.
///
/// `competition[i][j]` is `c_ij`.
pub fn lotka_volterra(beta: &[f64], delta: &[f64], competition: &[Vec<f64>], alpha: StateFn) -> MultiTypeModel {
    let comp: Vec<Vec<f64>> = competition.to_vec();
    MultiTypeModel::competitive(CompetitiveRates {
        beta: beta.iter().map(|&b| state_fn(move |_| b)).collect(),
        delta: delta.iter().map(|&d| state_fn(move |_| d)).collect(),
        competition: pair_fn(move |i, j, _| comp[i][j]),
        alpha,
    })
    .expect("one coefficient per type")
    .named("lotka-volterra")
}

/// Birth with mutation and competitive death, rates given directly:
///
/// ```text
/// b_i(x) = β_i x_i + Σ_{j≠i} m_ij x_j
/// d_i(x) = δ_i x_i + c_ii x_i (x_i - 1) + Σ_{j≠i} c_ij x_i x_j
/// ```
pub fn mutation_competition(
    beta: &[f64],
    delta: &[f64],
    mutation: &[Vec<f64>],
    competition: &[Vec<f64>],
    catastrophe: StateFn,
) -> MultiTypeModel {
    let r = beta.len();
    let birth = (0..r)
        .map(|i| {
            let bi = beta[i];
            let mi = mutation[i].clone();
            state_fn(move |x| {
                let mut rate = bi * f64::from(x[i]);
                for (j, &xj) in x.iter().enumerate() {
                    if j != i {
                        rate += mi[j] * f64::from(xj);
                    }
                }
                rate
            })
        })
        .collect();
    let death = (0..r)
        .map(|i| {
            let di = delta[i];
            let ci = competition[i].clone();
            state_fn(move |x| {
                let xi = f64::from(x[i]);
                let mut rate = di * xi + ci[i] * xi * (xi - 1.0);
                for (j, &xj) in x.iter().enumerate() {
                    if j != i {
                        rate += ci[j] * xi * f64::from(xj);
                    }
                }
                rate
            })
        })
        .collect();
    MultiTypeModel::plain(PlainRates { birth, death, catastrophe })
        .expect("one coefficient per type")
        .named("mutation-competition")
}

/// Two types with `c_12(x) = x_1` and `c_11 = c_22 = c_21 = 1`, `β ≡ 1`,
/// `δ ≡ 1`, `α ≡ 0`.
pub fn density_dependent_competition() -> MultiTypeModel {
    MultiTypeModel::competitive(CompetitiveRates {
        beta: vec![state_fn(|_| 1.0); 2],
        delta: vec![state_fn(|_| 1.0); 2],
        competition: pair_fn(|i, j, x| if i == 0 && j == 1 { f64::from(x[0]) } else { 1.0 }),
        alpha: state_fn(|_| 0.0),
    })
    .expect("two types")
    .named("density-dependent-competition")
}
