//! Integer-valued sequences `α_n` given as short text specs.
//!
//! Accepted forms: `n`, `const:c`, `pow:p` (`n^p`), `exp:c` (`e^{c n}`) and
//! `B^(n^p)` such as `2^(n^2)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SequenceSpec {
    Identity,
    Const(f64),
    Power(f64),
    Exp(f64),
    Tower { base: f64, power: f64 },
}

impl SequenceSpec {
    /// `ln α_n`.
    pub fn log_value(&self, n: usize) -> f64 {
        let x = n as f64;
        match self {
            SequenceSpec::Identity => x.ln(),
            SequenceSpec::Const(c) => c.ln(),
            SequenceSpec::Power(p) => p * x.ln(),
            SequenceSpec::Exp(c) => c * x,
            SequenceSpec::Tower { base, power } => base.ln() * x.powf(*power),
        }
    }

    pub fn value(&self, n: usize) -> f64 {
        self.log_value(n).exp()
    }
}

impl FromStr for SequenceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParameter(format!("unrecognised sequence spec {s:?}"));
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
        let spec = if s == "n" {
            SequenceSpec::Identity
        } else if let Some(v) = s.strip_prefix("const:") {
            SequenceSpec::Const(num(v)?)
        } else if let Some(v) = s.strip_prefix("pow:") {
            SequenceSpec::Power(num(v)?)
        } else if let Some(v) = s.strip_prefix("exp:") {
            SequenceSpec::Exp(num(v)?)
        } else if let Some((base, rest)) = s.split_once("^(") {
            let inner = rest.strip_suffix(')').ok_or_else(bad)?;
            let power = match inner.trim() {
                "n" => 1.0,
                other => num(other.strip_prefix("n^").ok_or_else(bad)?)?,
            };
            SequenceSpec::Tower { base: num(base)?, power }
        } else {
            return Err(bad());
        };
        let ok = match spec {
            SequenceSpec::Const(c) => c > 0.0,
            SequenceSpec::Tower { base, .. } => base > 1.0,
            _ => true,
        };
        if ok {
            Ok(spec)
        } else {
            Err(bad())
        }
    }
}

impl TryFrom<String> for SequenceSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SequenceSpec> for String {
    fn from(s: SequenceSpec) -> String {
        s.to_string()
    }
}

impl fmt::Display for SequenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SequenceSpec::Identity => write!(f, "n"),
            SequenceSpec::Const(c) => write!(f, "const:{c}"),
            SequenceSpec::Power(p) => write!(f, "pow:{p}"),
            SequenceSpec::Exp(c) => write!(f, "exp:{c}"),
            SequenceSpec::Tower { base, power } if *power == 1.0 => write!(f, "{base}^(n)"),
            SequenceSpec::Tower { base, power } => write!(f, "{base}^(n^{power})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_evaluates() {
        let s: SequenceSpec = "2^(n^2)".parse().unwrap();
        assert!((s.log_value(3) - 9.0 * 2f64.ln()).abs() < 1e-12);
        assert_eq!("n".parse::<SequenceSpec>().unwrap().value(7).round(), 7.0);
        assert_eq!("pow:2".parse::<SequenceSpec>().unwrap().value(5).round(), 25.0);
        assert!("const:0".parse::<SequenceSpec>().is_err());
        assert!("fib".parse::<SequenceSpec>().is_err());
        for text in ["n", "const:3", "pow:1.5", "exp:0.5", "2^(n^2)", "3^(n)"] {
            let s: SequenceSpec = text.parse().unwrap();
            assert_eq!(s.to_string().parse::<SequenceSpec>().unwrap(), s);
        }
    }
}
