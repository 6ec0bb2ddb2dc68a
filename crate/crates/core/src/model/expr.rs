use std::collections::BTreeMap;
use std::fmt;

use fasteval::{Compiler, Evaler, Instruction, Parser, Slab};

use super::ModelError;

/// A compiled arithmetic expression over named parameters and the state
/// variables `k` (one-dimensional index), `s` (total population `|x|`),
/// `x1, ..., xr` (coordinates) and `r` (number of types).
pub struct Expr {
    source: String,
    slab: Slab,
    code: Instruction,
    params: BTreeMap<String, f64>,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Expr").field(&self.source).finish()
    }
}

impl Expr {
    pub fn parse(source: &str, params: &BTreeMap<String, f64>) -> Result<Self, ModelError> {
        let mut slab = Slab::new();
        let code = Parser::new()
            .parse(source, &mut slab.ps)
            .map_err(|e| ModelError::Invalid(format!("cannot parse `{source}`: {e}")))?
            .from(&slab.ps)
            .compile(&slab.ps, &mut slab.cs);
        Ok(Expr { source: source.to_string(), slab, code, params: params.clone() })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    fn eval_with(&self, var: impl Fn(&str) -> Option<f64>) -> Result<f64, ModelError> {
        let mut ns = |name: &str, args: Vec<f64>| -> Option<f64> {
            if !args.is_empty() {
                return None;
            }
            var(name).or_else(|| self.params.get(name).copied())
        };
        self.code
            .eval(&self.slab, &mut ns)
            .map_err(|e| ModelError::Invalid(format!("cannot evaluate `{}`: {e}", self.source)))
    }

    /// Value at one-dimensional index `k`.
    pub fn at_index(&self, k: u64) -> Result<f64, ModelError> {
        self.eval_with(|name| (name == "k" || name == "s").then_some(k as f64))
    }

    /// Value at a multi-type state.
    pub fn at_state(&self, x: &[u32]) -> Result<f64, ModelError> {
        self.eval_with(|name| match name {
            "s" => Some(x.iter().map(|&c| f64::from(c)).sum()),
            "r" => Some(x.len() as f64),
            _ => {
                let i: usize = name.strip_prefix('x')?.parse().ok()?;
                (1..=x.len()).contains(&i).then(|| f64::from(x[i - 1]))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_and_state_variables() {
        let params = BTreeMap::from([("c".to_string(), 0.5)]);
        let e = Expr::parse("k + c*k*(k-1)", &params).unwrap();
        assert_eq!(e.at_index(3).unwrap(), 6.0);
        let e = Expr::parse("x1 * s + r", &params).unwrap();
        assert_eq!(e.at_state(&[2, 3]).unwrap(), 12.0);
    }

    #[test]
    fn unknown_variable_is_an_error() {
        let e = Expr::parse("q * k", &BTreeMap::new()).unwrap();
        assert!(e.at_index(1).is_err());
        assert!(Expr::parse("x1 +* 2", &BTreeMap::new()).is_err());
    }
}
