use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A proper cone with its dimension or parameter.
///
/// `Nonpos(n)` is the non-positive orthant `−ℝⁿ₊`, the dual cone of
/// constraints written as `Ax ≤ b` with multipliers `y ≤ 0`.
/// `DualPower { alpha }` is the dual of `Power { alpha }`: `y` belongs to it
/// iff `(y₁/α, y₂/(1−α), y₃)` belongs to the primal power cone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConeSpec {
    Nonneg { n: usize },
    Nonpos { n: usize },
    Soc { n: usize },
    Rsoc { n: usize },
    /// Symmetric PSD matrices of order `n`, stored as `n(n+1)/2` values.
    Psd { n: usize },
    Exp,
    DualExp,
    Power { alpha: f64 },
    DualPower { alpha: f64 },
}

impl ConeSpec {
    pub fn nonneg(n: usize) -> Self {
        ConeSpec::Nonneg { n }
    }
    pub fn nonpos(n: usize) -> Self {
        ConeSpec::Nonpos { n }
    }
    pub fn soc(n: usize) -> Self {
        ConeSpec::Soc { n }
    }
    pub fn rsoc(n: usize) -> Self {
        ConeSpec::Rsoc { n }
    }
    pub fn psd(n: usize) -> Self {
        ConeSpec::Psd { n }
    }
    pub fn power(alpha: f64) -> Self {
        ConeSpec::Power { alpha }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ConeSpec::Nonneg { n } | ConeSpec::Nonpos { n } | ConeSpec::Psd { n } => n >= 1,
            ConeSpec::Soc { n } => n >= 2,
            ConeSpec::Rsoc { n } => n >= 3,
            ConeSpec::Exp | ConeSpec::DualExp => true,
            ConeSpec::Power { alpha } | ConeSpec::DualPower { alpha } => {
                alpha > 0.0 && alpha < 1.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::validation(format!("invalid cone specification {self}")))
        }
    }

    /// Length of a point of this cone.
    pub fn dim(&self) -> usize {
        match *self {
            ConeSpec::Nonneg { n }
            | ConeSpec::Nonpos { n }
            | ConeSpec::Soc { n }
            | ConeSpec::Rsoc { n } => n,
            ConeSpec::Psd { n } => n * (n + 1) / 2,
            ConeSpec::Exp
            | ConeSpec::DualExp
            | ConeSpec::Power { .. }
            | ConeSpec::DualPower { .. } => 3,
        }
    }

    pub fn dual(&self) -> ConeSpec {
        match *self {
            ConeSpec::Exp => ConeSpec::DualExp,
            ConeSpec::DualExp => ConeSpec::Exp,
            ConeSpec::Power { alpha } => ConeSpec::DualPower { alpha },
            ConeSpec::DualPower { alpha } => ConeSpec::Power { alpha },
            self_dual => self_dual,
        }
    }

    pub fn is_self_dual(&self) -> bool {
        self.dual() == *self
    }

    /// Whether a closed-form Euclidean projection is available.
    pub fn has_euclidean_projection(&self) -> bool {
        !matches!(
            self,
            ConeSpec::Exp | ConeSpec::DualExp | ConeSpec::Power { .. } | ConeSpec::DualPower { .. }
        )
    }
}

impl fmt::Display for ConeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConeSpec::Nonneg { n } => write!(f, "nonneg{n}"),
            ConeSpec::Nonpos { n } => write!(f, "nonpos{n}"),
            ConeSpec::Soc { n } => write!(f, "soc{n}"),
            ConeSpec::Rsoc { n } => write!(f, "rsoc{n}"),
            ConeSpec::Psd { n } => write!(f, "psd{n}"),
            ConeSpec::Exp => write!(f, "exp"),
            ConeSpec::DualExp => write!(f, "dexp"),
            ConeSpec::Power { alpha } => write!(f, "pow{alpha}"),
            ConeSpec::DualPower { alpha } => write!(f, "dpow{alpha}"),
        }
    }
}

/// Parses names such as `soc3`, `rsoc5`, `psd2`, `nonneg4`, `nonpos4`,
/// `exp`, `dexp`, `pow0.3`, `dpow0.3`.
impl FromStr for ConeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let bad = || Error::validation(format!("unknown cone name '{s}'"));
        let dim = |rest: &str| rest.parse::<usize>().map_err(|_| bad());
        let cone = if s == "exp" {
            ConeSpec::Exp
        } else if s == "dexp" || s == "dualexp" {
            ConeSpec::DualExp
        } else if let Some(rest) = s.strip_prefix("dpow") {
            ConeSpec::DualPower {
                alpha: rest.parse().map_err(|_| bad())?,
            }
        } else if let Some(rest) = s.strip_prefix("pow") {
            ConeSpec::Power {
                alpha: rest.parse().map_err(|_| bad())?,
            }
        } else if let Some(rest) = s.strip_prefix("rsoc") {
            ConeSpec::Rsoc { n: dim(rest)? }
        } else if let Some(rest) = s.strip_prefix("soc") {
            ConeSpec::Soc { n: dim(rest)? }
        } else if let Some(rest) = s.strip_prefix("psd") {
            ConeSpec::Psd { n: dim(rest)? }
        } else if let Some(rest) = s.strip_prefix("nonneg") {
            ConeSpec::Nonneg { n: dim(rest)? }
        } else if let Some(rest) = s.strip_prefix("orthant") {
            ConeSpec::Nonneg { n: dim(rest)? }
        } else if let Some(rest) = s.strip_prefix("nonpos") {
            ConeSpec::Nonpos { n: dim(rest)? }
        } else {
            return Err(bad());
        };
        cone.validate()?;
        Ok(cone)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duals() {
        assert_eq!(ConeSpec::soc(5).dual(), ConeSpec::soc(5));
        assert_eq!(ConeSpec::Exp.dual(), ConeSpec::DualExp);
        assert_eq!(ConeSpec::DualExp.dual(), ConeSpec::Exp);
        assert_eq!(
            ConeSpec::power(0.3).dual(),
            ConeSpec::DualPower { alpha: 0.3 }
        );
        for k in [
            ConeSpec::nonneg(3),
            ConeSpec::nonpos(2),
            ConeSpec::rsoc(4),
            ConeSpec::psd(3),
        ] {
            assert!(k.is_self_dual());
        }
    }

    #[test]
    fn validation() {
        assert!(ConeSpec::soc(1).validate().is_err());
        assert!(ConeSpec::rsoc(2).validate().is_err());
        assert!(ConeSpec::nonneg(0).validate().is_err());
        assert!(ConeSpec::power(1.0).validate().is_err());
        assert!(ConeSpec::power(0.0).validate().is_err());
        assert!(ConeSpec::power(0.5).validate().is_ok());
    }

    #[test]
    fn parse_names() {
        assert_eq!("soc3".parse::<ConeSpec>().unwrap(), ConeSpec::soc(3));
        assert_eq!("rsoc4".parse::<ConeSpec>().unwrap(), ConeSpec::rsoc(4));
        assert_eq!("psd2".parse::<ConeSpec>().unwrap(), ConeSpec::psd(2));
        assert_eq!("exp".parse::<ConeSpec>().unwrap(), ConeSpec::Exp);
        assert_eq!("dexp".parse::<ConeSpec>().unwrap(), ConeSpec::DualExp);
        assert_eq!("pow0.5".parse::<ConeSpec>().unwrap(), ConeSpec::power(0.5));
        assert!("soc1".parse::<ConeSpec>().is_err());
        assert!("cube3".parse::<ConeSpec>().is_err());
        for k in [ConeSpec::rsoc(7), ConeSpec::DualPower { alpha: 0.25 }] {
            assert_eq!(k.to_string().parse::<ConeSpec>().unwrap(), k);
        }
    }

    #[test]
    fn dims() {
        assert_eq!(ConeSpec::psd(3).dim(), 6);
        assert_eq!(ConeSpec::Exp.dim(), 3);
        assert_eq!(ConeSpec::soc(7).dim(), 7);
    }
}
