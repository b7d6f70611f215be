use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::seq::{fmt_rational, parse_rational};

/// The height `coeff·log(base)` with `coeff ≥ 0` and `base > 1`.
#[derive(Clone, Debug)]
pub struct LogHeight {
    coeff: BigRational,
    base: BigRational,
}

/// A real number `±magnitude`, used for differences of heights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedHeight {
    pub negative: bool,
    pub magnitude: LogHeight,
}

fn two() -> BigRational {
    BigRational::from_integer(BigInt::from(2))
}

fn exponent(x: &BigInt) -> u32 {
    x.to_u32().expect("exponent does not fit in u32")
}

impl LogHeight {
    pub fn new(coeff: BigRational, base: BigRational) -> Result<Self> {
        if coeff.is_negative() {
            return Err(Error::InvalidValue(format!("negative coefficient {coeff}")));
        }
        if base <= BigRational::one() {
            return Err(Error::InvalidValue(format!("log base {base} is not > 1")));
        }
        Ok(Self { coeff, base })
    }

    pub fn zero() -> Self {
        Self { coeff: BigRational::zero(), base: two() }
    }

    /// `log(base)`.
    pub fn log(base: &BigRational) -> Result<Self> {
        Self::new(BigRational::one(), base.clone())
    }

    pub fn log_int(n: u64) -> Result<Self> {
        Self::log(&BigRational::from_integer(n.into()))
    }

    pub fn coeff(&self) -> &BigRational {
        &self.coeff
    }

    pub fn base(&self) -> &BigRational {
        &self.base
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    /// `k·self` for a rational `k ≥ 0`.
    pub fn scaled(&self, k: &BigRational) -> Self {
        assert!(!k.is_negative(), "negative scale");
        Self { coeff: &self.coeff * k, base: self.base.clone() }
    }

    pub fn times(&self, k: u64) -> Self {
        self.scaled(&BigRational::from_integer(k.into()))
    }

    pub fn add(&self, other: &LogHeight) -> LogHeight {
        combine([(1, self), (1, other)]).magnitude
    }

    /// `|self − other|`.
    pub fn abs_diff(&self, other: &LogHeight) -> LogHeight {
        combine([(1, self), (-1, other)]).magnitude
    }

    /// `self − other`, which must not be negative.
    pub fn sub(&self, other: &LogHeight) -> LogHeight {
        let d = combine([(1, self), (-1, other)]);
        assert!(!d.negative, "height subtraction went negative");
        d.magnitude
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        self.coeff.to_f64().unwrap_or(f64::INFINITY) * ln_rational(&self.base)
    }
}

fn ln_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    (n >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

pub(crate) fn ln_rational(r: &BigRational) -> f64 {
    ln_biguint(r.numer().magnitude()) - ln_biguint(r.denom().magnitude())
}

/// `bits(x^e)` lies in the returned closed range, for `x ≥ 1`.
fn pow_bits(x: &BigUint, e: u64) -> (u64, u64) {
    if e == 0 {
        return (1, 1);
    }
    let b = x.bits();
    (e * (b - 1) + 1, e * b)
}

/// Compares `a1^e1 · a2^e2` with `b1^f1 · b2^f2`.
fn cmp_power_products(lhs: [(&BigUint, u32); 2], rhs: [(&BigUint, u32); 2]) -> Ordering {
    let range = |side: &[(&BigUint, u32); 2]| {
        let (lo1, hi1) = pow_bits(side[0].0, side[0].1 as u64);
        let (lo2, hi2) = pow_bits(side[1].0, side[1].1 as u64);
        (lo1 + lo2 - 1, hi1 + hi2)
    };
    let (llo, lhi) = range(&lhs);
    let (rlo, rhi) = range(&rhs);
    if lhi < rlo {
        return Ordering::Less;
    }
    if llo > rhi {
        return Ordering::Greater;
    }
    let eval = |side: &[(&BigUint, u32); 2]| side[0].0.pow(side[0].1) * side[1].0.pow(side[1].1);
    eval(&lhs).cmp(&eval(&rhs))
}

/// Exact order of `h1` and `h2`.
pub fn cmp_heights(h1: &LogHeight, h2: &LogHeight) -> Ordering {
    match (h1.is_zero(), h2.is_zero()) {
        (true, true) => return Ordering::Equal,
        (true, false) => return Ordering::Less,
        (false, true) => return Ordering::Greater,
        _ => {}
    }
    if h1.base == h2.base {
        return h1.coeff.cmp(&h2.coeff);
    }
    // c1 = c·e1 and c2 = c·e2 with integers e1, e2; compare b1^e1 with b2^e2.
    let g = h1.coeff.numer().gcd(h2.coeff.numer());
    let l = h1.coeff.denom().lcm(h2.coeff.denom());
    let e1 = exponent(&(h1.coeff.numer() * (&l / h1.coeff.denom()) / &g));
    let e2 = exponent(&(h2.coeff.numer() * (&l / h2.coeff.denom()) / &g));
    let (n1, d1) = (h1.base.numer().magnitude(), h1.base.denom().magnitude());
    let (n2, d2) = (h2.base.numer().magnitude(), h2.base.denom().magnitude());
    cmp_power_products([(n1, e1), (d2, e2)], [(n2, e2), (d1, e1)])
}

/// Exact value of `Σ kᵢ·hᵢ`.
pub fn combine<'a>(terms: impl IntoIterator<Item = (i64, &'a LogHeight)>) -> SignedHeight {
    let parts: Vec<(BigRational, &BigRational)> = terms
        .into_iter()
        .filter(|(k, h)| *k != 0 && !h.is_zero())
        .map(|(k, h)| (&h.coeff * BigRational::from_integer(k.into()), &h.base))
        .collect();
    if parts.is_empty() {
        return SignedHeight::zero();
    }
    let mut g = BigInt::zero();
    let mut l = BigInt::one();
    for (c, _) in &parts {
        g = g.gcd(c.numer());
        l = l.lcm(c.denom());
    }
    let common = BigRational::new(g, l);
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for (c, b) in &parts {
        let e = (c / &common).to_integer();
        let m = exponent(&e.abs());
        if e.is_positive() {
            num *= b.numer().pow(m);
            den *= b.denom().pow(m);
        } else {
            num *= b.denom().pow(m);
            den *= b.numer().pow(m);
        }
    }
    match num.cmp(&den) {
        Ordering::Equal => SignedHeight::zero(),
        Ordering::Greater => SignedHeight {
            negative: false,
            magnitude: LogHeight { coeff: common, base: BigRational::new(num, den) },
        },
        Ordering::Less => SignedHeight {
            negative: true,
            magnitude: LogHeight { coeff: common, base: BigRational::new(den, num) },
        },
    }
}

impl PartialEq for LogHeight {
    fn eq(&self, other: &Self) -> bool {
        cmp_heights(self, other) == Ordering::Equal
    }
}

impl Eq for LogHeight {}

impl PartialOrd for LogHeight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LogHeight {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_heights(self, other)
    }
}

impl fmt::Display for LogHeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            write!(f, "0")
        } else {
            write!(f, "{}*log({})", fmt_rational(&self.coeff), fmt_rational(&self.base))
        }
    }
}

impl FromStr for LogHeight {
    type Err = Error;

    /// Accepts `0`, `log(b)` and `c*log(b)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "0" {
            return Ok(Self::zero());
        }
        let bad = || Error::Parse(format!("not a log height: `{s}`"));
        let (coeff, rest) = match s.split_once('*') {
            Some((c, r)) => (parse_rational(c)?, r.trim()),
            None => (BigRational::one(), s),
        };
        let inner = rest.strip_prefix("log(").and_then(|r| r.strip_suffix(')')).ok_or_else(bad)?;
        Self::new(coeff, parse_rational(inner)?)
    }
}

impl Serialize for LogHeight {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl SignedHeight {
    pub fn zero() -> Self {
        Self { negative: false, magnitude: LogHeight::zero() }
    }

    pub fn positive(h: LogHeight) -> Self {
        Self { negative: false, magnitude: h }
    }

    pub fn is_zero(&self) -> bool {
        self.magnitude.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        let m = self.magnitude.to_f64();
        if self.negative {
            -m
        } else {
            m
        }
    }

    pub fn neg(&self) -> Self {
        Self { negative: !self.negative && !self.is_zero(), magnitude: self.magnitude.clone() }
    }

    pub fn abs(&self) -> &LogHeight {
        &self.magnitude
    }

    fn signed_terms(&self) -> (i64, &LogHeight) {
        (if self.negative { -1 } else { 1 }, &self.magnitude)
    }

    pub fn add(&self, other: &SignedHeight) -> SignedHeight {
        combine([self.signed_terms(), other.signed_terms()])
    }

    pub fn sub(&self, other: &SignedHeight) -> SignedHeight {
        self.add(&other.neg())
    }
}

impl Ord for SignedHeight {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.negative, other.negative) {
            (false, false) => self.magnitude.cmp(&other.magnitude),
            (true, true) => other.magnitude.cmp(&self.magnitude),
            (false, true) => Ordering::Greater,
            (true, false) => Ordering::Less,
        }
    }
}

impl PartialOrd for SignedHeight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SignedHeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negative {
            write!(f, "-{}", self.magnitude)
        } else {
            write!(f, "{}", self.magnitude)
        }
    }
}

impl Serialize for SignedHeight {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(c: &str, b: &str) -> LogHeight {
        LogHeight::new(parse_rational(c).unwrap(), parse_rational(b).unwrap()).unwrap()
    }

    #[test]
    fn spec_comparisons() {
        assert_eq!(cmp_heights(&h("1", "2"), &h("1", "2")), Ordering::Equal);
        assert_eq!(cmp_heights(&h("3", "2"), &h("2", "3")), Ordering::Less);
        assert_eq!(cmp_heights(&h("1/2", "9"), &h("1", "3")), Ordering::Equal);
    }

    #[test]
    fn zero_ignores_base() {
        assert_eq!(h("0", "7"), LogHeight::zero());
        assert!(h("1/1000", "3/2") > LogHeight::zero());
    }

    #[test]
    fn fractional_bases() {
        // log(3/2) + log(4/3) = log 2
        assert_eq!(h("1", "3/2").add(&h("1", "4/3")), h("1", "2"));
        assert_eq!(cmp_heights(&h("2", "3/2"), &h("1", "2")), Ordering::Greater);
        assert_eq!(cmp_heights(&h("5/3", "9/8"), &h("1/7", "5")), Ordering::Less);
    }

    #[test]
    fn combine_signs() {
        let d = combine([(2, &h("1", "3")), (-3, &h("1", "2"))]);
        assert!(!d.negative);
        assert_eq!(d.magnitude, h("1", "9/8"));
        let d = combine([(1, &h("1", "2")), (-1, &h("1/2", "4"))]);
        assert!(d.is_zero());
        assert_eq!(h("3", "2").abs_diff(&h("2", "3")), h("1", "9/8"));
    }

    #[test]
    fn text_round_trip() {
        for s in ["0", "1*log(2)", "3/2*log(9/8)"] {
            assert_eq!(s.parse::<LogHeight>().unwrap().to_string(), s);
        }
        assert_eq!("log(5)".parse::<LogHeight>().unwrap(), h("1", "5"));
        assert!("2*log(1)".parse::<LogHeight>().is_err());
    }

    #[test]
    fn large_bases_to_float() {
        let x = h("1", "2").times(5000);
        assert!((x.to_f64() - 5000.0 * std::f64::consts::LN_2).abs() < 1e-9);
        let big = LogHeight::log(&BigRational::from_integer(BigInt::from(2).pow(3000))).unwrap();
        assert!((big.to_f64() - 3000.0 * std::f64::consts::LN_2).abs() < 1e-9);
    }
}
