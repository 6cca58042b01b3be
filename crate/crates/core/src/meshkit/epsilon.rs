use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;

use crate::{Error, Result};

/// Largest admissible denominator of a decimal ε.
const MAX_DECIMAL_DENOMINATOR: i64 = 10_000;

/// Pore-to-domain scale ratio held as an exact rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Epsilon(Ratio<i64>);

impl Epsilon {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Invalid("epsilon denominator is zero".into()));
        }
        let r = Ratio::new(num, den);
        if r <= Ratio::from_integer(0) || r > Ratio::from_integer(1) {
            return Err(Error::Invalid(format!("epsilon {r} outside (0, 1]")));
        }
        Ok(Self(r))
    }

    pub fn one() -> Self {
        Self(Ratio::from_integer(1))
    }

    pub fn ratio(&self) -> Ratio<i64> {
        self.0
    }

    pub fn value(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    /// Number of ε-periods in `length`, which must be an exact multiple.
    pub fn periods_in(&self, length: Ratio<i64>) -> Result<usize> {
        let q = length / self.0;
        if !q.is_integer() || q <= Ratio::from_integer(0) {
            return Err(Error::Geometry(format!(
                "length {length} is not a positive integer multiple of epsilon {}",
                self.0
            )));
        }
        Ok(q.to_integer() as usize)
    }

    /// Number of cell rows filling a unit height.
    pub fn rows(&self) -> Result<usize> {
        self.periods_in(Ratio::from_integer(1))
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Epsilon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Invalid(format!("cannot parse epsilon '{s}'"));
        if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            return Epsilon::new(n, d);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let frac = frac.trim_end_matches('0');
        if frac.len() > 18 {
            return Err(bad());
        }
        let den = 10i64.pow(frac.len() as u32);
        let int_v: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let frac_v: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let r = Ratio::new(int_v * den + frac_v, den);
        if *r.denom() > MAX_DECIMAL_DENOMINATOR {
            return Err(Error::Invalid(format!(
                "decimal epsilon '{s}' needs denominator {} > {MAX_DECIMAL_DENOMINATOR}; write it as p/q",
                r.denom()
            )));
        }
        Epsilon::new(*r.numer(), *r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rationals_and_decimals() {
        assert_eq!("1/31".parse::<Epsilon>().unwrap(), Epsilon::new(1, 31).unwrap());
        assert_eq!("0.1".parse::<Epsilon>().unwrap(), Epsilon::new(1, 10).unwrap());
        assert_eq!("0.0010".parse::<Epsilon>().unwrap(), Epsilon::new(1, 1000).unwrap());
        assert_eq!("1".parse::<Epsilon>().unwrap(), Epsilon::one());
        assert!("0.00001".parse::<Epsilon>().is_err());
        assert!("2".parse::<Epsilon>().is_err());
        assert!("abc".parse::<Epsilon>().is_err());
    }

    #[test]
    fn tiling_counts_are_exact() {
        let e = Epsilon::new(1, 3).unwrap();
        assert_eq!(e.rows().unwrap(), 3);
        assert_eq!(e.periods_in(Ratio::from_integer(2)).unwrap(), 6);
        let e = Epsilon::new(2, 7).unwrap();
        assert!(e.rows().is_err());
        assert_eq!(format!("{}", Epsilon::new(1, 316).unwrap()), "1/316");
    }
}
