//! TOML model files.
//!
//! ```toml
//! kind = "bdc"                 # or "multitype"
//! name = "logistic"            # optional label
//! preset = "logistic"          # optional; see below
//! capacity = 2                 # optional, bdc only: states above are never reached
//!
//! [params]                     # constants usable in every expression
//! b = 1.0
//!
//! [rates]                      # bdc: expressions in k
//! birth = "b*k"
//! death = "k + k*(k-1)"
//! catastrophe = "0"
//!
//! [check]                      # optional settings for the criteria
//! range = 200
//! weight = "k^0.5"
//! ```
//!
//! Multi-type files set `mode = "competitive"` in `[rates]` and give `beta`,
//! `delta` (lists), `competition` (matrix) and `alpha`, or `mode = "plain"`
//! with `birth`, `death` (lists) and `catastrophe`. Their expressions use
//! `x1, ..., xr`, `s = |x|` and `r`.
//!
//! One-dimensional presets: `logistic` (params `b`, `d`, `c`; a `catastrophe`
//! expression may be added), `martingale` (`p`), `linear` (`b`, `d`),
//! `two_state`, `pure_absorption` (`rho`). Multi-type preset:
//! `density_dependent_competition`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::expr::Expr;
use super::{
    presets, BdcModel, CompetitiveRates, ModelError, MultiTypeModel, PairFn, PlainRates, RateModel, SeqFn, StateFn,
};

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("cannot read model file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed model file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Bdc,
    Multitype,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateMode {
    Competitive,
    Plain,
}

/// An expression given as a string or a plain number.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExprSource {
    Number(f64),
    Text(String),
}

impl ExprSource {
    fn text(&self) -> String {
        match self {
            ExprSource::Number(v) => format!("{v:e}"),
            ExprSource::Text(s) => s.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(ExprSource),
    Many(Vec<ExprSource>),
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    pub mode: Option<RateMode>,
    pub birth: Option<OneOrMany>,
    pub death: Option<OneOrMany>,
    pub catastrophe: Option<ExprSource>,
    pub beta: Option<Vec<ExprSource>>,
    pub delta: Option<Vec<ExprSource>>,
    pub competition: Option<Vec<Vec<ExprSource>>>,
    pub alpha: Option<ExprSource>,
}

/// Optional settings read by the criteria checks.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSettings {
    /// Largest index or shell scanned.
    pub range: Option<u64>,
    /// One-dimensional weight `W(k)`; suggested automatically when absent.
    pub weight: Option<String>,
    /// Margin used by the oscillation check when the strong competition check is not run.
    pub eta: Option<f64>,
    /// Exponent of the multi-type potential.
    pub eps: Option<f64>,
    /// Envelope rates of the domination check, in `s`.
    pub envelope_birth: Option<String>,
    pub envelope_death: Option<String>,
    /// Subset of criteria to run; all applicable ones when absent.
    pub criteria: Option<Vec<String>>,
    /// Number of random measures in the sampled drift check.
    pub measures: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub kind: ModelKind,
    pub name: Option<String>,
    pub preset: Option<String>,
    pub capacity: Option<u64>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub rates: RatesSection,
    #[serde(default)]
    pub check: CheckSettings,
}

/// A loaded model with its settings.
#[derive(Clone)]
pub struct ModelSpec {
    pub file: ModelFile,
    pub model: RateModel,
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        self.file.kind
    }

    pub fn check(&self) -> &CheckSettings {
        &self.file.check
    }

    /// The weight `W(k)` of `[check]`, if given.
    pub fn weight(&self) -> Result<Option<SeqFn>, ModelFileError> {
        self.file.check.weight.as_deref().map(|s| seq_expr(s, &self.file.params)).transpose()
    }

    /// The envelope rates `(b̄, d̲)` of `[check]`, if both are given.
    pub fn envelope(&self) -> Result<Option<(SeqFn, SeqFn)>, ModelFileError> {
        match (&self.file.check.envelope_birth, &self.file.check.envelope_death) {
            (Some(b), Some(d)) => Ok(Some((seq_expr(b, &self.file.params)?, seq_expr(d, &self.file.params)?))),
            (None, None) => Ok(None),
            _ => Err(ModelFileError::Invalid("envelope_birth and envelope_death must be given together".into())),
        }
    }
}

pub fn load_model_file(path: impl AsRef<Path>) -> Result<ModelSpec, ModelFileError> {
    parse_model_str(&std::fs::read_to_string(path)?)
}

pub fn parse_model_str(text: &str) -> Result<ModelSpec, ModelFileError> {
    if text.trim().is_empty() {
        return Err(ModelFileError::Invalid("model file is empty".into()));
    }
    let file: ModelFile = toml::from_str(text)?;
    let model = match file.kind {
        ModelKind::Bdc => RateModel::from(build_bdc(&file)?),
        ModelKind::Multitype => RateModel::from(build_multitype(&file)?),
    };
    let spec = ModelSpec { file, model };
    spec.weight()?;
    spec.envelope()?;
    Ok(spec)
}

fn param(file: &ModelFile, name: &str, default: f64) -> f64 {
    file.params.get(name).copied().unwrap_or(default)
}

fn seq_expr(src: &str, params: &BTreeMap<String, f64>) -> Result<SeqFn, ModelFileError> {
    let e = Expr::parse(src, params)?;
    e.at_index(1)?;
    Ok(Arc::new(move |k| e.at_index(k).unwrap_or(f64::NAN)))
}

fn state_expr(src: &str, params: &BTreeMap<String, f64>, r: usize) -> Result<StateFn, ModelFileError> {
    let e = Expr::parse(src, params)?;
    e.at_state(&vec![1; r])?;
    Ok(Arc::new(move |x: &[u32]| e.at_state(x).unwrap_or(f64::NAN)))
}

fn one(section: &Option<OneOrMany>, what: &str) -> Result<Option<String>, ModelFileError> {
    match section {
        None => Ok(None),
        Some(OneOrMany::One(e)) => Ok(Some(e.text())),
        Some(OneOrMany::Many(_)) => Err(ModelFileError::Invalid(format!("`{what}` must be a single expression for kind bdc"))),
    }
}

fn many(section: &Option<OneOrMany>, what: &str) -> Result<Option<Vec<String>>, ModelFileError> {
    match section {
        None => Ok(None),
        Some(OneOrMany::Many(v)) => Ok(Some(v.iter().map(ExprSource::text).collect())),
        Some(OneOrMany::One(_)) => Err(ModelFileError::Invalid(format!("`{what}` must be a list for kind multitype"))),
    }
}

fn build_bdc(file: &ModelFile) -> Result<BdcModel, ModelFileError> {
    let rates = &file.rates;
    if rates.mode.is_some() || rates.beta.is_some() || rates.delta.is_some() || rates.competition.is_some() || rates.alpha.is_some() {
        return Err(ModelFileError::Invalid("multi-type rate fields in a bdc model".into()));
    }
    let birth = one(&rates.birth, "birth")?;
    let death = one(&rates.death, "death")?;
    let cat = rates.catastrophe.as_ref().map(ExprSource::text);
    let mut model = match file.preset.as_deref() {
        Some(p) => {
            if birth.is_some() || death.is_some() {
                return Err(ModelFileError::Invalid("a preset fixes birth and death; only catastrophe may be added".into()));
            }
            let m = match p {
                "logistic" => presets::logistic(param(file, "b", 1.0), param(file, "d", 1.0), param(file, "c", 1.0)),
                "martingale" => presets::martingale(param(file, "p", 3.0)),
                "linear" => presets::linear(param(file, "b", 1.0), param(file, "d", 1.0)),
                "two_state" => presets::two_state(),
                "pure_absorption" => presets::pure_absorption(param(file, "rho", 1.0)),
                other => return Err(ModelFileError::Invalid(format!("unknown bdc preset `{other}`"))),
            };
            match cat {
                Some(src) => m.with_catastrophe(seq_expr(&src, &file.params)?),
                None => m,
            }
        }
        None => {
            let (Some(b), Some(d)) = (birth, death) else {
                return Err(ModelFileError::Invalid("a bdc model needs a preset or both birth and death".into()));
            };
            let m = BdcModel::new(seq_expr(&b, &file.params)?, seq_expr(&d, &file.params)?);
            match cat {
                Some(src) => m.with_catastrophe(seq_expr(&src, &file.params)?),
                None => m,
            }
        }
    };
    if let Some(c) = file.capacity {
        model = model.with_capacity(c);
    }
    if let Some(name) = &file.name {
        model = model.named(name.clone());
    }
    Ok(model)
}

fn build_multitype(file: &ModelFile) -> Result<MultiTypeModel, ModelFileError> {
    if file.capacity.is_some() {
        return Err(ModelFileError::Invalid("capacity applies to bdc models only".into()));
    }
    let rates = &file.rates;
    let p = &file.params;
    let model = if let Some(name) = file.preset.as_deref() {
        match name {
            "density_dependent_competition" => presets::density_dependent_competition(),
            other => return Err(ModelFileError::Invalid(format!("unknown multitype preset `{other}`"))),
        }
    } else {
        match rates.mode {
            Some(RateMode::Competitive) => {
                let (Some(beta), Some(delta), Some(comp)) = (&rates.beta, &rates.delta, &rates.competition) else {
                    return Err(ModelFileError::Invalid("competitive mode needs beta, delta and competition".into()));
                };
                let r = beta.len();
                if delta.len() != r || comp.len() != r || comp.iter().any(|row| row.len() != r) {
                    return Err(ModelFileError::Invalid(format!("beta has {r} entries; delta and competition must match")));
                }
                let fns = |v: &[ExprSource]| v.iter().map(|e| state_expr(&e.text(), p, r)).collect::<Result<Vec<_>, _>>();
                let table: Vec<Vec<StateFn>> = comp.iter().map(|row| fns(row)).collect::<Result<_, _>>()?;
                let competition: PairFn = Arc::new(move |i, j, x: &[u32]| (table[i][j])(x));
                let alpha = match &rates.alpha {
                    Some(e) => state_expr(&e.text(), p, r)?,
                    None => Arc::new(|_: &[u32]| 0.0),
                };
                MultiTypeModel::competitive(CompetitiveRates { beta: fns(beta)?, delta: fns(delta)?, competition, alpha })?
            }
            Some(RateMode::Plain) => {
                let (Some(birth), Some(death)) = (many(&rates.birth, "birth")?, many(&rates.death, "death")?) else {
                    return Err(ModelFileError::Invalid("plain mode needs birth and death lists".into()));
                };
                let r = birth.len();
                if death.len() != r {
                    return Err(ModelFileError::Invalid("birth and death lists differ in length".into()));
                }
                let fns = |v: &[String]| v.iter().map(|e| state_expr(e, p, r)).collect::<Result<Vec<_>, _>>();
                let catastrophe = match &rates.catastrophe {
                    Some(e) => state_expr(&e.text(), p, r)?,
                    None => Arc::new(|_: &[u32]| 0.0),
                };
                MultiTypeModel::plain(PlainRates { birth: fns(&birth)?, death: fns(&death)?, catastrophe })?
            }
            None => return Err(ModelFileError::Invalid("a multitype model needs a preset or rates.mode".into())),
        }
    };
    Ok(match &file.name {
        Some(n) => model.named(n.clone()),
        None => model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AbsorbedChain, State};

    #[test]
    fn expression_model_matches_preset() {
        let text = r#"
            kind = "bdc"
            [params]
            c = 1.0
            [rates]
            birth = "k"
            death = "k + c*k*(k-1)"
        "#;
        let spec = parse_model_str(text).unwrap();
        let x = State::one(4).unwrap();
        let preset = presets::logistic(1.0, 1.0, 1.0);
        assert_eq!(spec.model.transitions_from(&x).unwrap(), preset.transitions_from(&x).unwrap());
    }

    #[test]
    fn competitive_file() {
        let text = r#"
            kind = "multitype"
            [rates]
            mode = "competitive"
            beta = [1, 1]
            delta = [1, 1]
            competition = [["1", "x1"], ["1", "1"]]
            alpha = 0
        "#;
        let spec = parse_model_str(text).unwrap();
        let x = State::new(vec![2, 3]).unwrap();
        let reference = presets::density_dependent_competition();
        let a = spec.model.transitions_from(&x).unwrap();
        let b = reference.transitions_from(&x).unwrap();
        assert_eq!(a.total_rate, b.total_rate);
    }

    #[test]
    fn rejects_empty_and_unknown() {
        assert!(parse_model_str("  ").is_err());
        assert!(parse_model_str("kind = \"bdc\"\npreset = \"nope\"").is_err());
        assert!(parse_model_str("kind = \"bdc\"\n[rates]\nbirth = \"q*k\"\ndeath = \"k\"").is_err());
    }
}
