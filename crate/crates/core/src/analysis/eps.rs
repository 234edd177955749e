use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncation schedule `ε_n = n^{-a}` with slack `δ`.
///
/// Valid exactly when `1/2 < a < 1` and `0 < δ < 2a - 1`: then `n ε_n → ∞`
/// (since `1 - a > 0`) and `n^{1+δ} ε_n^2 → 0` (since `1 + δ - 2a < 0`).
/// Exponents are kept as exact rationals so the check has no rounding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ScheduleRepr", into = "ScheduleRepr")]
pub struct EpsSchedule {
    exponent: Ratio<i64>,
    delta: Ratio<i64>,
}

impl EpsSchedule {
    pub fn new(exponent: Ratio<i64>, delta: Ratio<i64>) -> Result<Self> {
        let s = EpsSchedule { exponent, delta };
        let (grows, vanishes) = s.limits();
        if !(grows && vanishes && delta > Ratio::from_integer(0) && exponent > Ratio::new(1, 2)) {
            return Err(Error::domain(format!(
                "schedule n^-({exponent}) with delta {delta} needs 1/2 < a < 1 and 0 < delta < 2a - 1"
            )));
        }
        Ok(s)
    }

    /// Schedule with `δ = (2a - 1)/2`, the midpoint of the admissible range.
    pub fn with_exponent(exponent: Ratio<i64>) -> Result<Self> {
        let delta = (exponent * 2 - 1) / 2;
        Self::new(exponent, delta)
    }

    pub fn exponent(&self) -> Ratio<i64> {
        self.exponent
    }

    pub fn delta(&self) -> Ratio<i64> {
        self.delta
    }

    /// Whether `n ε_n → ∞` and `n^{1+δ} ε_n^2 → 0`, decided on the exponents.
    pub fn limits(&self) -> (bool, bool) {
        let one = Ratio::from_integer(1);
        (
            one - self.exponent > Ratio::from_integer(0),
            one + self.delta - self.exponent * 2 < Ratio::from_integer(0),
        )
    }

    pub fn eps(&self, n: usize) -> f64 {
        let a = *self.exponent.numer() as f64 / *self.exponent.denom() as f64;
        (n as f64).powf(-a)
    }
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule::with_exponent(Ratio::new(3, 4)).expect("3/4 is admissible")
    }
}

/// Parses `"3/4"`, `"0.75"` or `"1"` into an exact rational.
pub fn parse_ratio(s: &str) -> Result<Ratio<i64>> {
    let s = s.trim();
    let bad = || Error::domain(format!("cannot read '{s}' as an exact rational"));
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| bad())?;
        let q: i64 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(p, q));
    }
    let (whole, frac) = s.split_once('.').unwrap_or((s, ""));
    if frac.len() > 15 || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let negative = whole.starts_with('-');
    let w: i64 = if whole.is_empty() || whole == "-" {
        0
    } else {
        whole.parse().map_err(|_| bad())?
    };
    let scale = 10i64.pow(frac.len() as u32);
    let f: i64 = if frac.is_empty() {
        0
    } else {
        frac.parse().map_err(|_| bad())?
    };
    let numer = w.abs() * scale + f;
    Ok(Ratio::new(if negative { -numer } else { numer }, scale))
}

impl FromStr for EpsSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EpsSchedule::with_exponent(parse_ratio(s)?)
    }
}

impl fmt::Display for EpsSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n^-({}), delta {}", self.exponent, self.delta)
    }
}

#[derive(Serialize, Deserialize)]
struct ScheduleRepr {
    exponent: String,
    delta: String,
}

impl From<EpsSchedule> for ScheduleRepr {
    fn from(s: EpsSchedule) -> Self {
        ScheduleRepr {
            exponent: s.exponent.to_string(),
            delta: s.delta.to_string(),
        }
    }
}

impl TryFrom<ScheduleRepr> for EpsSchedule {
    type Error = Error;

    fn try_from(r: ScheduleRepr) -> Result<Self> {
        EpsSchedule::new(parse_ratio(&r.exponent)?, parse_ratio(&r.delta)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_three_quarters() {
        let s = EpsSchedule::default();
        assert_eq!(s.exponent(), Ratio::new(3, 4));
        assert_eq!(s.delta(), Ratio::new(1, 4));
        assert!((s.eps(10_000) - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn boundary_exponents_rejected() {
        assert!(EpsSchedule::with_exponent(Ratio::new(1, 2)).is_err());
        assert!(EpsSchedule::with_exponent(Ratio::new(1, 1)).is_err());
        assert!(EpsSchedule::new(Ratio::new(3, 4), Ratio::new(1, 2)).is_err());
        assert!(EpsSchedule::new(Ratio::new(3, 4), Ratio::new(0, 1)).is_err());
        assert!(EpsSchedule::new(Ratio::new(3, 4), Ratio::new(499, 1000)).is_ok());
    }

    #[test]
    fn decimal_parsing_is_exact() {
        assert_eq!(parse_ratio("0.75").unwrap(), Ratio::new(3, 4));
        assert_eq!(parse_ratio("2/3").unwrap(), Ratio::new(2, 3));
        assert_eq!(parse_ratio("1").unwrap(), Ratio::from_integer(1));
        assert_eq!(parse_ratio("-0.5").unwrap(), Ratio::new(-1, 2));
        assert!(parse_ratio("0.7e1").is_err());
        assert!(parse_ratio("1/0").is_err());
        assert_eq!("0.6".parse::<EpsSchedule>().unwrap().exponent(), Ratio::new(3, 5));
    }

    #[test]
    fn serde_round_trip() {
        let s = EpsSchedule::default();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"exponent":"3/4","delta":"1/4"}"#);
        assert_eq!(serde_json::from_str::<EpsSchedule>(&json).unwrap(), s);
        assert!(serde_json::from_str::<EpsSchedule>(r#"{"exponent":"1/3","delta":"1/4"}"#).is_err());
    }
}
