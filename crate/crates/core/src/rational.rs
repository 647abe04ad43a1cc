//! Exact rational wavevectors.
//!
//! Carrier wavevectors are kept as rationals so that resonance classification
//! (membership of integer-combinations in the dual lattice) is a discrete,
//! exact decision instead of a floating-point one.

use crate::error::{Error, Result};
use num_rational::Rational64;

/// A wavevector with exact rational components.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalVec(pub Vec<Rational64>);

impl RationalVec {
    pub fn zeros(d: usize) -> Self {
        RationalVec(vec![Rational64::new(0, 1); d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0
            .iter()
            .map(|r| *r.numer() as f64 / *r.denom() as f64)
            .collect()
    }

    /// True if every component is an integer.
    pub fn is_integer(&self) -> bool {
        self.0.iter().all(|r| r.is_integer())
    }

    /// `self - other + third - fourth`, the combination appearing in the cubic
    /// resonance condition.
    pub fn resonance_combination(a: &Self, b: &Self, c: &Self, d: &Self) -> Self {
        RationalVec(
            a.0.iter()
                .zip(&b.0)
                .zip(&c.0)
                .zip(&d.0)
                .map(|(((x, y), z), w)| x - y + z - w)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        RationalVec(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> Self {
        RationalVec(self.0.iter().map(|a| -a).collect())
    }

    /// True if every component lies in `(1/2)·Z`.
    pub fn in_half_lattice(&self) -> bool {
        self.0.iter().all(|r| (r * 2).is_integer())
    }

    /// Parse a single component: `p/q`, an integer, or a finite decimal
    /// (decimals convert exactly, e.g. `-0.2 = -2/10`).
    pub fn parse_component(s: &str) -> Result<Rational64> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p: i64 = p
                .trim()
                .parse()
                .map_err(|_| Error::config(format!("bad rational numerator in `{s}`")))?;
            let q: i64 = q
                .trim()
                .parse()
                .map_err(|_| Error::config(format!("bad rational denominator in `{s}`")))?;
            if q == 0 {
                return Err(Error::config(format!("zero denominator in `{s}`")));
            }
            return Ok(Rational64::new(p, q));
        }
        if let Some((int, frac)) = s.split_once('.') {
            let neg = int.trim_start().starts_with('-');
            let int_part: i64 = if int == "-" || int.is_empty() {
                0
            } else {
                int.parse()
                    .map_err(|_| Error::config(format!("bad decimal `{s}`")))?
            };
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(Error::config(format!("bad decimal `{s}`")));
            }
            let digits = frac.len() as u32;
            if digits > 15 {
                return Err(Error::config(format!("decimal `{s}` has too many digits")));
            }
            let num: i64 = frac
                .parse()
                .map_err(|_| Error::config(format!("bad decimal `{s}`")))?;
            let denom = 10i64.pow(digits);
            let frac_part = Rational64::new(if neg { -num } else { num }, denom);
            return Ok(Rational64::from_integer(int_part) + frac_part);
        }
        let p: i64 = s
            .parse()
            .map_err(|_| Error::config(format!("bad rational `{s}`")))?;
        Ok(Rational64::from_integer(p))
    }

    /// Parse whitespace-separated components.
    pub fn parse(s: &str) -> Result<Self> {
        let comps: Result<Vec<_>> = s.split_whitespace().map(Self::parse_component).collect();
        let comps = comps?;
        if comps.is_empty() {
            return Err(Error::config("empty wavevector"));
        }
        Ok(RationalVec(comps))
    }

    /// Canonical `p/q` serialization, whitespace separated.
    pub fn format(&self) -> String {
        self.0
            .iter()
            .map(|r| {
                if r.is_integer() {
                    format!("{}", r.numer())
                } else {
                    format!("{}/{}", r.numer(), r.denom())
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Distance of a float vector to the nearest integer lattice vector, and that
/// lattice vector. Used where exact rational data is not available (e.g. the
/// perturbation wavevectors `l^(m)` may be arbitrary reals).
pub fn nearest_lattice_vector(v: &[f64]) -> (Vec<i64>, f64) {
    let mut lattice = Vec::with_capacity(v.len());
    let mut dist: f64 = 0.0;
    for &x in v {
        let n = x.round();
        dist = dist.max((x - n).abs());
        lattice.push(n as i64);
    }
    (lattice, dist)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_integers_decimals() {
        assert_eq!(
            RationalVec::parse_component("-1/5").unwrap(),
            Rational64::new(-1, 5)
        );
        assert_eq!(
            RationalVec::parse_component("3").unwrap(),
            Rational64::from_integer(3)
        );
        assert_eq!(
            RationalVec::parse_component("-0.2").unwrap(),
            Rational64::new(-1, 5)
        );
        assert_eq!(
            RationalVec::parse_component("0.25").unwrap(),
            Rational64::new(1, 4)
        );
    }

    #[test]
    fn format_round_trips() {
        let v = RationalVec::parse("-1/5 -2/5").unwrap();
        assert_eq!(RationalVec::parse(&v.format()).unwrap(), v);
    }

    #[test]
    fn resonance_combination_exact() {
        let k1 = RationalVec::parse("-1/5 -2/5").unwrap();
        let k2 = RationalVec::parse("1/5 -2/5").unwrap();
        // k1 - k2 + k1 - k2 is not integer, but k1 - k2 + k2 - k1 = 0 is.
        let r = RationalVec::resonance_combination(&k1, &k2, &k2, &k1);
        assert!(r.is_integer());
        let r = RationalVec::resonance_combination(&k1, &k2, &k1, &k2);
        assert!(!r.is_integer());
    }
}
