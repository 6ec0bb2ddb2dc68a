use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    HoldsOnRange,
    Fails,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::HoldsOnRange => "holds-on-range",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Outcome of one criterion check.
///
/// A `HoldsOnRange` verdict always carries `range` and the constants needed to
/// replay the check in `witnesses`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    pub criterion: String,
    pub verdict: Verdict,
    /// Inclusive `(lo, hi)` bounds of the index or shell range that was scanned.
    pub range: Option<(u64, u64)>,
    pub tolerance: Option<f64>,
    pub witnesses: BTreeMap<String, f64>,
    pub diagnostics: Vec<String>,
}

impl LyapunovReport {
    pub fn new(criterion: impl Into<String>, verdict: Verdict) -> Self {
        LyapunovReport {
            criterion: criterion.into(),
            verdict,
            range: None,
            tolerance: None,
            witnesses: BTreeMap::new(),
            diagnostics: Vec::new(),
        }
    }

    pub fn with_range(mut self, lo: u64, hi: u64) -> Self {
        self.range = Some((lo, hi));
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = Some(tol);
        self
    }

    /// Non-finite values are recorded as a diagnostic line instead.
    pub fn witness(mut self, name: &str, value: f64) -> Self {
        if value.is_finite() {
            self.witnesses.insert(name.to_string(), value);
        } else {
            self.diagnostics.push(format!("{name} = {value}"));
        }
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.diagnostics.push(text.into());
        self
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::HoldsOnRange
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.witnesses.get(name).copied()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for LyapunovReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.criterion, self.verdict)?;
        if let Some((lo, hi)) = self.range {
            write!(f, " on [{lo}, {hi}]")?;
        }
        for (k, v) in &self.witnesses {
            write!(f, " {k}={v:.6e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let r = LyapunovReport::new("demo", Verdict::HoldsOnRange)
            .with_range(1, 10)
            .witness("A", 1.5)
            .witness("B", 0.25)
            .note("pointwise");
        let back: LyapunovReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_json().contains("\"holds-on-range\""));
    }
}
