//! Eventually periodic sequences written as `prefix;period`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// A sequence indexed from 1: the prefix is read once, then the period
/// repeats forever.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SeqSpec<T> {
    prefix: Vec<T>,
    period: Vec<T>,
}

impl<T: Clone> SeqSpec<T> {
    pub fn new(prefix: Vec<T>, period: Vec<T>) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::SeqSpec {
                spec: String::new(),
                reason: "period must be non-empty".into(),
            });
        }
        Ok(Self { prefix, period })
    }

    pub fn constant(value: T) -> Self {
        Self { prefix: Vec::new(), period: vec![value] }
    }

    pub fn prefix(&self) -> &[T] {
        &self.prefix
    }

    pub fn period(&self) -> &[T] {
        &self.period
    }

    /// Term `n` (1-based). Panics on `n == 0`.
    pub fn get(&self, n: u64) -> &T {
        assert!(n >= 1, "sequences are indexed from 1");
        self.prefix_or_period(n - 1)
    }

    /// Position of term `n` inside `prefix ++ period`.
    pub fn slot(&self, n: u64) -> usize {
        assert!(n >= 1, "sequences are indexed from 1");
        let i = n - 1;
        let lp = self.prefix.len() as u64;
        if i < lp {
            i as usize
        } else {
            (lp + (i - lp) % self.period.len() as u64) as usize
        }
    }

    fn prefix_or_period(&self, i: u64) -> &T {
        let lp = self.prefix.len() as u64;
        if i < lp {
            &self.prefix[i as usize]
        } else {
            &self.period[((i - lp) % self.period.len() as u64) as usize]
        }
    }

    /// Every stored term, prefix first.
    pub fn slots(&self) -> impl Iterator<Item = &T> {
        self.prefix.iter().chain(self.period.iter())
    }

    pub fn map<U, F: FnMut(&T) -> U>(&self, mut f: F) -> SeqSpec<U> {
        SeqSpec {
            prefix: self.prefix.iter().map(&mut f).collect(),
            period: self.period.iter().map(&mut f).collect(),
        }
    }

    pub fn try_map<U, F: FnMut(&T) -> Result<U>>(&self, mut f: F) -> Result<SeqSpec<U>> {
        Ok(SeqSpec {
            prefix: self.prefix.iter().map(&mut f).collect::<Result<_>>()?,
            period: self.period.iter().map(&mut f).collect::<Result<_>>()?,
        })
    }
}

impl<T: Clone + PartialEq> SeqSpec<T> {
    /// The single value of a constant sequence, if it is one.
    pub fn constant_value(&self) -> Option<&T> {
        let first = self.slots().next()?;
        self.slots().all(|x| x == first).then_some(first)
    }
}

impl<T: fmt::Display> fmt::Display for SeqSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |xs: &[T]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        if self.prefix.is_empty() && self.period.len() == 1 {
            write!(f, "{}", self.period[0])
        } else {
            write!(f, "{};{}", join(&self.prefix), join(&self.period))
        }
    }
}

/// Parses `a,b;c,d`. A list without `;` is taken as the period.
pub fn parse_seq<T: Clone>(s: &str, mut elem: impl FnMut(&str) -> Result<T>) -> Result<SeqSpec<T>> {
    let bad = |reason: String| Error::SeqSpec { spec: s.to_string(), reason };
    let mut list = |part: &str| -> Result<Vec<T>> {
        let part = part.trim();
        if part.is_empty() {
            return Ok(Vec::new());
        }
        part.split(',').map(|x| elem(x.trim())).collect()
    };
    let (prefix, period) = match s.split_once(';') {
        Some((a, b)) => (list(a)?, list(b)?),
        None => (Vec::new(), list(s)?),
    };
    if period.is_empty() {
        return Err(bad("empty period".into()));
    }
    Ok(SeqSpec { prefix, period })
}

/// Parses an integer or `num/den` into a reduced rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let int = |t: &str| -> Result<BigInt> {
        t.trim().parse::<BigInt>().map_err(|_| Error::Parse(format!("not a rational: `{s}`")))
    };
    let r = match s.split_once('/') {
        Some((n, d)) => {
            let d = int(d)?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in `{s}`")));
            }
            BigRational::new(int(n)?, d)
        }
        None => BigRational::from_integer(int(s)?),
    };
    Ok(r)
}

pub fn parse_rational_seq(s: &str) -> Result<SeqSpec<BigRational>> {
    let seq = parse_seq(s, parse_rational)?;
    if let Some(x) = seq.slots().find(|x| **x <= BigRational::one()) {
        return Err(Error::SeqSpec { spec: s.into(), reason: format!("term {x} is not > 1") });
    }
    Ok(seq)
}

pub fn parse_branching_seq(s: &str) -> Result<SeqSpec<u32>> {
    let seq = parse_seq(s, |t| {
        t.parse::<u32>().map_err(|_| Error::Parse(format!("not a branching number: `{t}`")))
    })?;
    if let Some(x) = seq.slots().find(|x| **x < 2) {
        return Err(Error::SeqSpec { spec: s.into(), reason: format!("term {x} is not >= 2") });
    }
    Ok(seq)
}

/// Renders a rational as `n` or `n/d`.
pub fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Serde helpers writing rationals as `fmt_rational` strings.
pub(crate) mod rational_text {
    use num_rational::BigRational;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::fmt_rational(r))
    }

    pub fn option<S: Serializer>(r: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&super::fmt_rational(r)),
            None => s.serialize_none(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_then_period() {
        let s = parse_branching_seq("6;3").unwrap();
        assert_eq!(*s.get(1), 6);
        assert_eq!(*s.get(2), 3);
        assert_eq!(*s.get(50), 3);
        let s = parse_branching_seq("2,5;3,4").unwrap();
        let got: Vec<u32> = (1..=7).map(|n| *s.get(n)).collect();
        assert_eq!(got, vec![2, 5, 3, 4, 3, 4, 3]);
        assert_eq!(s.to_string(), "2,5;3,4");
    }

    #[test]
    fn constants_abbreviate() {
        let s = parse_rational_seq("3/2").unwrap();
        assert_eq!(s.constant_value(), Some(&BigRational::new(3.into(), 2.into())));
        assert_eq!(s.to_string(), "3/2");
        assert_eq!(parse_rational_seq(";2").unwrap(), s.map(|_| BigRational::from_integer(2.into())));
    }

    #[test]
    fn rejects_bad_terms() {
        assert!(parse_rational_seq("1").is_err());
        assert!(parse_rational_seq("2;").is_err());
        assert!(parse_rational_seq("1/0").is_err());
        assert!(parse_branching_seq("1;2").is_err());
        assert!(parse_branching_seq("x").is_err());
    }
}
