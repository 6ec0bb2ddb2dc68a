//! Partial sums of nonnegative series with a certified tail bound.
//!
//! Terms are consumed in order `k = 1, 2, ...` and grouped into dyadic blocks
//! `B_j = Σ_{2^j ≤ k < 2^{j+1}} t_k`. At each block boundary two tests run:
//!
//! * term ratio: if every ratio `t_{k+1}/t_k` in the trailing window is at most
//!   `ρ ≤ 0.9` (or a declared bound), the tail is at most `2·t_K·ρ/(1-ρ)`;
//! * block ratio: if the last four ratios `B_{j+1}/B_j` are at most
//!   `ρ_B ≤ 0.95`, the tail is at most `2·B_J·ρ_B/(1-ρ_B)`.
//!
//! The block test certifies polynomially decaying terms, which the term-ratio
//! test cannot. Both bounds assume the observed ratios persist beyond the
//! window and carry a safety factor 2.

use serde::{Deserialize, Serialize};

use crate::numeric::CompensatedSum;

const WINDOW: usize = 64;
const TERM_RATIO_MAX: f64 = 0.9;
const BLOCK_RATIO_MAX: f64 = 0.95;
const BLOCK_DIVERGENCE: f64 = 0.98;
const BLOCK_LOOKBACK: usize = 4;
const MIN_BLOCKS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesConfig {
    /// Target for `tail_bound / |value|`.
    pub tol: f64,
    /// Term budget; summation stops at the last complete dyadic block.
    pub max_terms: u64,
    /// Declared eventual bound on `t_{k+1}/t_k`, used instead of the
    /// empirical window maximum when smaller than 1.
    pub declared_ratio: Option<f64>,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig { tol: 1e-6, max_terms: 1 << 18, declared_ratio: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesStatus {
    Converged,
    Diverges,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailMethod {
    /// The terms vanish identically past the summed range.
    Exact,
    TermRatio,
    BlockRatio,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesEstimate {
    /// Partial sum; the true sum lies in `[value, value + tail_bound]`.
    pub value: f64,
    pub tail_bound: f64,
    /// True iff the tail bound is certified.
    pub converged: bool,
    /// True iff `tail_bound ≤ tol·|value|`.
    pub tolerance_met: bool,
    pub status: SeriesStatus,
    pub method: Option<TailMethod>,
    /// The ratio bound behind `tail_bound`, if any.
    pub ratio: Option<f64>,
    pub terms_used: u64,
}

impl SeriesEstimate {
    /// Un-inflated estimate of the remainder (half the certified bound).
    pub fn tail_estimate(&self) -> f64 {
        match self.method {
            Some(TailMethod::Exact) | None => 0.0,
            _ => self.tail_bound / 2.0,
        }
    }
}

struct Certificate {
    tail: f64,
    method: TailMethod,
    ratio: f64,
}

/// Sums `term(k)` for `k = 1, 2, ...`. `term` is called exactly once per
/// index, in increasing order, so it may carry a recurrence.
pub fn sum_certified(mut term: impl FnMut(u64) -> f64, cfg: &SeriesConfig) -> SeriesEstimate {
    let mut sum = CompensatedSum::new();
    let mut blocks: Vec<f64> = Vec::new();
    let mut block = CompensatedSum::new();
    let mut window: std::collections::VecDeque<f64> = std::collections::VecDeque::with_capacity(WINDOW + 1);
    let mut last_cert: Option<Certificate> = None;
    let mut k: u64 = 0;
    let mut next_boundary: u64 = 2;

    let finish = |value: f64, k: u64, cert: Option<Certificate>, status: SeriesStatus, tol: f64| {
        let (tail, method, ratio) = match cert {
            Some(c) => (c.tail, Some(c.method), Some(c.ratio)),
            None => (f64::INFINITY, None, None),
        };
        let converged = status == SeriesStatus::Converged;
        SeriesEstimate {
            value,
            tail_bound: if converged { tail } else { f64::INFINITY },
            converged,
            tolerance_met: converged && tail <= tol * value.abs(),
            status,
            method: if converged { method } else { None },
            ratio: if converged { ratio } else { None },
            terms_used: k,
        }
    };

    loop {
        if next_boundary - 1 > cfg.max_terms {
            break;
        }
        k += 1;
        let t = term(k);
        if !t.is_finite() {
            return finish(sum.value(), k, None, SeriesStatus::Diverges, cfg.tol);
        }
        debug_assert!(t >= 0.0, "series terms must be nonnegative");
        sum.add(t);
        block.add(t);
        window.push_back(t);
        if window.len() > WINDOW {
            window.pop_front();
        }
        if k + 1 != next_boundary {
            continue;
        }
        blocks.push(block.value());
        block = CompensatedSum::new();
        next_boundary *= 2;

        let n = blocks.len();
        if n < MIN_BLOCKS + 1 {
            continue;
        }
        let recent = &blocks[n - 1 - BLOCK_LOOKBACK..];
        if recent.iter().all(|&b| b == 0.0) {
            let cert = Certificate { tail: 0.0, method: TailMethod::Exact, ratio: 0.0 };
            return finish(sum.value(), k, Some(cert), SeriesStatus::Converged, cfg.tol);
        }
        let block_ratios: Option<Vec<f64>> = if recent.iter().all(|&b| b > 0.0) {
            Some(recent.windows(2).map(|w| w[1] / w[0]).collect())
        } else {
            None
        };
        // Mean term per block not decreasing.
        if let Some(ratios) = &block_ratios {
            if n >= 6 && ratios.iter().all(|&r| r >= 2.0) {
                return finish(sum.value(), k, None, SeriesStatus::Diverges, cfg.tol);
            }
        }

        let mut cert: Option<Certificate> = None;
        if window.iter().all(|&t| t > 0.0) {
            let empirical = window
                .iter()
                .zip(window.iter().skip(1))
                .map(|(a, b)| b / a)
                .fold(0.0_f64, f64::max);
            let accepted = match cfg.declared_ratio {
                Some(r) if r < 1.0 && empirical <= r => Some(r),
                _ if empirical <= TERM_RATIO_MAX => Some(empirical),
                _ => None,
            };
            if let Some(rho) = accepted {
                let last = *window.back().expect("window nonempty");
                cert = Some(Certificate { tail: 2.0 * last * rho / (1.0 - rho), method: TailMethod::TermRatio, ratio: rho });
            }
        }
        if let Some(ratios) = &block_ratios {
            let rho_b = ratios.iter().copied().fold(0.0_f64, f64::max);
            if rho_b <= BLOCK_RATIO_MAX {
                let tail = 2.0 * recent[BLOCK_LOOKBACK] * rho_b / (1.0 - rho_b);
                if cert.as_ref().map_or(true, |c| tail < c.tail) {
                    cert = Some(Certificate { tail, method: TailMethod::BlockRatio, ratio: rho_b });
                }
            }
        }
        if let Some(c) = &cert {
            if c.tail <= cfg.tol * sum.value().abs() {
                return finish(sum.value(), k, cert, SeriesStatus::Converged, cfg.tol);
            }
        }
        last_cert = cert;
    }

    let value = sum.value();
    if last_cert.is_some() {
        return finish(value, k, last_cert, SeriesStatus::Converged, cfg.tol);
    }
    let n = blocks.len();
    if n > BLOCK_LOOKBACK {
        let recent = &blocks[n - 1 - BLOCK_LOOKBACK..];
        if recent.iter().all(|&b| b > 0.0) && recent.windows(2).all(|w| w[1] / w[0] >= BLOCK_DIVERGENCE) {
            return finish(value, k, None, SeriesStatus::Diverges, cfg.tol);
        }
    }
    finish(value, k, None, SeriesStatus::Inconclusive, cfg.tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn geometric_series() {
        let est = sum_certified(|k| 0.5f64.powi(k as i32), &SeriesConfig { tol: 1e-12, ..Default::default() });
        assert!(est.converged && est.tolerance_met);
        assert_eq!(est.method, Some(TailMethod::TermRatio));
        assert!((est.value - 1.0).abs() <= est.tail_bound + 1e-15);
        assert!(est.value <= 1.0);
    }

    #[test]
    fn inverse_squares_bracket_zeta_two() {
        let est = sum_certified(|k| 1.0 / (k as f64 * k as f64), &SeriesConfig::default());
        assert!(est.converged);
        assert_eq!(est.method, Some(TailMethod::BlockRatio));
        let truth = PI * PI / 6.0;
        assert!(est.value <= truth && truth <= est.value + est.tail_bound, "{est:?}");
    }

    #[test]
    fn harmonic_series_diverges() {
        let est = sum_certified(|k| 1.0 / k as f64, &SeriesConfig { max_terms: 1 << 14, ..Default::default() });
        assert_eq!(est.status, SeriesStatus::Diverges);
        assert!(!est.converged);
    }

    #[test]
    fn growing_terms_diverge_early() {
        let est = sum_certified(|k| k as f64, &SeriesConfig::default());
        assert_eq!(est.status, SeriesStatus::Diverges);
        assert!(est.terms_used < 1 << 10);
    }

    #[test]
    fn finite_support_is_exact() {
        let est = sum_certified(|k| if k <= 10 { 1.0 } else { 0.0 }, &SeriesConfig::default());
        assert!(est.converged && est.tolerance_met);
        assert_eq!(est.value, 10.0);
        assert_eq!(est.tail_bound, 0.0);
    }

    #[test]
    fn slowly_decaying_shifted_series_converges() {
        let m = 200.0;
        let est = sum_certified(|k| (m / (m + k as f64)).powf(2.5), &SeriesConfig::default());
        assert!(est.converged, "{est:?}");
    }

    #[test]
    fn non_finite_term_diverges() {
        let est = sum_certified(|k| if k == 7 { f64::INFINITY } else { 1.0 / (k * k) as f64 }, &SeriesConfig::default());
        assert_eq!(est.status, SeriesStatus::Diverges);
    }
}
