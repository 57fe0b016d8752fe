use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CertError;

/// Extended class-K∞ function used in the barrier condition `ḣ ≥ −α(h)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ClassKappaInf {
    /// `α(r) = γ·r`
    Linear { gain: f64 },
    /// `α(r) = γ·r³`
    Cubic { gain: f64 },
}

impl ClassKappaInf {
    pub fn linear(gain: f64) -> Result<Self, CertError> {
        check_gain(gain)?;
        Ok(Self::Linear { gain })
    }

    pub fn cubic(gain: f64) -> Result<Self, CertError> {
        check_gain(gain)?;
        Ok(Self::Cubic { gain })
    }

    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            ClassKappaInf::Linear { gain } => gain * r,
            ClassKappaInf::Cubic { gain } => gain * r * r * r,
        }
    }
}

impl Default for ClassKappaInf {
    fn default() -> Self {
        Self::Linear { gain: 1.0 }
    }
}

fn check_gain(gain: f64) -> Result<(), CertError> {
    if gain > 0.0 && gain.is_finite() {
        Ok(())
    } else {
        Err(CertError::Config(format!(
            "class-K gain must be positive, got {gain}"
        )))
    }
}

impl fmt::Display for ClassKappaInf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassKappaInf::Linear { gain } => write!(f, "linear:{gain}"),
            ClassKappaInf::Cubic { gain } => write!(f, "cubic:{gain}"),
        }
    }
}

/// `linear:<gain>` or `cubic:<gain>`.
impl FromStr for ClassKappaInf {
    type Err = CertError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (family, gain) = s
            .split_once(':')
            .ok_or_else(|| CertError::Config(format!("expected `<family>:<gain>`, got `{s}`")))?;
        let gain: f64 = gain
            .trim()
            .parse()
            .map_err(|_| CertError::Config(format!("invalid gain in `{s}`")))?;
        match family.trim() {
            "linear" => Self::linear(gain),
            "cubic" => Self::cubic(gain),
            other => Err(CertError::Config(format!(
                "unknown class-K family `{other}`"
            ))),
        }
    }
}

impl TryFrom<String> for ClassKappaInf {
    type Error = CertError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ClassKappaInf> for String {
    fn from(a: ClassKappaInf) -> Self {
        a.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_at_zero_and_increasing() {
        for a in [
            ClassKappaInf::linear(0.5).unwrap(),
            ClassKappaInf::cubic(3.0).unwrap(),
        ] {
            assert_eq!(a.eval(0.0), 0.0);
            let xs: Vec<f64> = (-50..=50).map(|i| i as f64 * 0.1).collect();
            assert!(xs.windows(2).all(|w| a.eval(w[1]) > a.eval(w[0])));
        }
    }

    #[test]
    fn parse_and_print() {
        let a: ClassKappaInf = "cubic:2.5".parse().unwrap();
        assert_eq!(a, ClassKappaInf::Cubic { gain: 2.5 });
        assert_eq!(a.to_string(), "cubic:2.5");
        assert!("linear:0".parse::<ClassKappaInf>().is_err());
        assert!("quadratic:1".parse::<ClassKappaInf>().is_err());
        assert!("linear".parse::<ClassKappaInf>().is_err());
    }
}
