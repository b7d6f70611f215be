//! Decision procedures: which trees, Cantor sets and treebolic spaces embed
//! in which, from the two conditions on `(p, q, p', q')`.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::heights::{cmp_heights, log2_enclosure, log2_enclosure_rational, multiplicative_relation, LogHeight};
use crate::pebble::rat;
use crate::seq::fmt_rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PerfectPower {
    pub base: u64,
    pub exponent: u32,
}

/// `n = base^exponent` with the exponent as large as possible.
pub fn perfect_power_decomposition(n: u64) -> Result<PerfectPower> {
    if n < 2 {
        return Err(Error::InvalidValue(format!("{n} is < 2")));
    }
    for k in (2..=63u32).rev() {
        let r = nth_root(n, k);
        if r >= 2 && r.checked_pow(k) == Some(n) {
            return Ok(PerfectPower { base: r, exponent: k });
        }
    }
    Ok(PerfectPower { base: n, exponent: 1 })
}

/// `⌊n^(1/k)⌋`.
fn nth_root(n: u64, k: u32) -> u64 {
    let mut r = (n as f64).powf(1.0 / k as f64).round() as u64;
    while r > 0 && r.checked_pow(k).map_or(true, |v| v > n) {
        r -= 1;
    }
    while (r + 1).checked_pow(k).is_some_and(|v| v <= n) {
        r += 1;
    }
    r
}

/// `p = r^s`, `p' = r^t` with `r` not a perfect power.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CommonBase {
    pub r: u64,
    pub s: u32,
    pub t: u32,
}

pub fn common_power_base(p: u64, p_prime: u64) -> Option<CommonBase> {
    let a = perfect_power_decomposition(p).ok()?;
    let b = perfect_power_decomposition(p_prime).ok()?;
    (a.base == b.base).then_some(CommonBase { r: a.base, s: a.exponent, t: b.exponent })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RatioOrder {
    #[serde(rename = "LT")]
    Less,
    #[serde(rename = "EQ")]
    Equal,
    #[serde(rename = "GT")]
    Greater,
    Undecided,
}

impl From<Ordering> for RatioOrder {
    fn from(o: Ordering) -> Self {
        match o {
            Ordering::Less => RatioOrder::Less,
            Ordering::Equal => RatioOrder::Equal,
            Ordering::Greater => RatioOrder::Greater,
        }
    }
}

/// How a ratio comparison was settled.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RatioCertificate {
    /// Both `log p/log q` and `log p'/log q'` are rationals.
    BothRational { left: String, right: String },
    /// One side is the rational `u/v`.
    OneRational { side: String, ratio: String },
    /// `p^i = p'^j`, reducing to comparing `q'^j` with `q^i`.
    DependentBranching { i: u64, j: u64 },
    /// `q^i = q'^j`, reducing to comparing `p^i` with `p'^j`.
    DependentEdges { i: u64, j: u64 },
    /// Disjoint interval enclosures.
    Intervals,
    None,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RatioComparison {
    pub order: RatioOrder,
    pub certificate: RatioCertificate,
    pub precision_bits: u32,
}

pub const DEFAULT_PRECISION_CAP: u32 = 4096;

fn check_inputs(p: u64, q: &BigRational, p_prime: u64, q_prime: &BigRational) -> Result<()> {
    if p < 2 || p_prime < 2 {
        return Err(Error::InvalidValue("branching numbers must be >= 2".into()));
    }
    if *q <= BigRational::one() || *q_prime <= BigRational::one() {
        return Err(Error::InvalidValue("edge bases must be > 1".into()));
    }
    Ok(())
}

fn pow(x: &BigRational, e: u64) -> BigRational {
    Pow::pow(x, BigInt::from(e))
}

/// Exact order of `log p / log q` against `log p' / log q'`.
pub fn ratio_compare(p: u64, q: &BigRational, p_prime: u64, q_prime: &BigRational, precision_cap: u32) -> Result<RatioComparison> {
    check_inputs(p, q, p_prime, q_prime)?;
    let (pr, ppr) = (rat(p), rat(p_prime));
    let done = |o: Ordering, c: RatioCertificate| RatioComparison { order: o.into(), certificate: c, precision_bits: 0 };
    // p^i = q^j gives log p / log q = j/i.
    let left = multiplicative_relation(&pr, q).map(|(i, j)| BigRational::new(j.into(), i.into()));
    let right = multiplicative_relation(&ppr, q_prime).map(|(i, j)| BigRational::new(j.into(), i.into()));
    match (&left, &right) {
        (Some(l), Some(r)) => {
            return Ok(done(l.cmp(r), RatioCertificate::BothRational { left: fmt_rational(l), right: fmt_rational(r) }));
        }
        (Some(l), None) => {
            // u/v vs log p'/log q'  ⇔  u·log q' vs v·log p'
            let o = cmp_heights(&LogHeight::log(q_prime)?.scaled(l), &LogHeight::log(&ppr)?);
            return Ok(done(o, RatioCertificate::OneRational { side: "left".into(), ratio: fmt_rational(l) }));
        }
        (None, Some(r)) => {
            // log p/log q vs u/v  ⇔  log p vs (u/v)·log q
            let o = cmp_heights(&LogHeight::log(&pr)?, &LogHeight::log(q)?.scaled(r));
            return Ok(done(o, RatioCertificate::OneRational { side: "right".into(), ratio: fmt_rational(r) }));
        }
        (None, None) => {}
    }
    if let Some((i, j)) = multiplicative_relation(&pr, &ppr) {
        // log p' = (i/j)·log p, so compare j·log q' with i·log q.
        let o = pow(q_prime, j).cmp(&pow(q, i));
        return Ok(done(o, RatioCertificate::DependentBranching { i, j }));
    }
    if let Some((i, j)) = multiplicative_relation(q, q_prime) {
        // log q' = (i/j)·log q, so compare i·log p with j·log p'.
        let o = pow(&pr, i).cmp(&pow(&ppr, j));
        return Ok(done(o, RatioCertificate::DependentEdges { i, j }));
    }
    // log p·log q' vs log p'·log q; all four logs are positive.
    let mut bits = 64u32;
    loop {
        let (pl, ph) = log2_enclosure(&p.into(), bits);
        let (ql, qh) = log2_enclosure_rational(q, bits);
        let (ppl, pph) = log2_enclosure(&p_prime.into(), bits);
        let (qql, qqh) = log2_enclosure_rational(q_prime, bits);
        let z = BigInt::from(0);
        let clamp = |x: BigInt| if x < z { z.clone() } else { x };
        let (ll, lh) = (clamp(pl) * clamp(qql), ph * qqh);
        let (rl, rh) = (clamp(ppl) * clamp(ql), pph * qh);
        if lh < rl {
            return Ok(RatioComparison { order: RatioOrder::Less, certificate: RatioCertificate::Intervals, precision_bits: bits });
        }
        if ll > rh {
            return Ok(RatioComparison { order: RatioOrder::Greater, certificate: RatioCertificate::Intervals, precision_bits: bits });
        }
        if bits >= precision_cap {
            return Ok(RatioComparison { order: RatioOrder::Undecided, certificate: RatioCertificate::None, precision_bits: bits });
        }
        bits = (bits * 2).min(precision_cap);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    EmbeddableC1,
    EmbeddableC2,
    NotEmbeddable,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EmbedDecision {
    pub verdict: Verdict,
    pub certificate: Option<CommonBase>,
    pub ratio: RatioComparison,
}

pub fn decide_embedding_existence(p: u64, q: &BigRational, p_prime: u64, q_prime: &BigRational) -> Result<EmbedDecision> {
    decide_embedding_existence_with_cap(p, q, p_prime, q_prime, DEFAULT_PRECISION_CAP)
}

pub fn decide_embedding_existence_with_cap(
    p: u64,
    q: &BigRational,
    p_prime: u64,
    q_prime: &BigRational,
    precision_cap: u32,
) -> Result<EmbedDecision> {
    let ratio = ratio_compare(p, q, p_prime, q_prime, precision_cap)?;
    let (verdict, certificate) = match ratio.order {
        RatioOrder::Less => (Verdict::EmbeddableC1, None),
        RatioOrder::Greater => (Verdict::NotEmbeddable, None),
        RatioOrder::Undecided => (Verdict::Undecided, None),
        RatioOrder::Equal => match c2_certificate(p, q, p_prime, q_prime) {
            Some(c) => (Verdict::EmbeddableC2, Some(c)),
            None => (Verdict::NotEmbeddable, None),
        },
    };
    Ok(EmbedDecision { verdict, certificate, ratio })
}

/// Common base `(r, s, t)` with `q'^s = q^t` checked exactly.
pub fn c2_certificate(p: u64, q: &BigRational, p_prime: u64, q_prime: &BigRational) -> Option<CommonBase> {
    let c = common_power_base(p, p_prime)?;
    (pow(q_prime, c.s as u64) == pow(q, c.t as u64)).then_some(c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum QiVerdict {
    #[serde(rename = "QI")]
    Qi,
    #[serde(rename = "NotQI")]
    NotQi,
    Undecided,
}

pub fn decide_quasiisometry(p: u64, q: &BigRational, p_prime: u64, q_prime: &BigRational) -> Result<QiVerdict> {
    check_inputs(p, q, p_prime, q_prime)?;
    // The common-base test implies equal ratios, so it settles every case.
    Ok(match c2_certificate(p, q, p_prime, q_prime) {
        Some(_) => QiVerdict::Qi,
        None => QiVerdict::NotQi,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BsVerdict {
    Yes,
    No,
}

pub fn decide_bs_embedding(m: u64, n: u64) -> Result<(BsVerdict, Option<CommonBase>)> {
    if m < 2 || n < 2 {
        return Err(Error::InvalidValue("parameters must be >= 2".into()));
    }
    let c = common_power_base(m, n);
    Ok((if c.is_some() { BsVerdict::Yes } else { BsVerdict::No }, c))
}

/// Smallest `(a, b)` by `a` then `b` with `p^a ≤ p'^b` and `q'^b < q^a`.
pub fn c1_exponents(p: u64, q: &BigRational, p_prime: u64, q_prime: &BigRational, cap: u64) -> Result<(u64, u64)> {
    check_inputs(p, q, p_prime, q_prime)?;
    let (pr, ppr) = (rat(p), rat(p_prime));
    let lp = LogHeight::log(&pr)?;
    let lpp = LogHeight::log(&ppr)?;
    let lq = LogHeight::log(q)?;
    let lqq = LogHeight::log(q_prime)?;
    let mut b = 1u64;
    for a in 1..=cap {
        while lpp.times(b) < lp.times(a) {
            b += 1;
        }
        if lqq.times(b) < lq.times(a) {
            debug_assert!(pow(&pr, a) <= pow(&ppr, b) && pow(q_prime, b) < pow(q, a));
            return Ok((a, b));
        }
    }
    Err(Error::SearchCap { what: "exponents (a, b)".into(), cap })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cmp(p: u64, q: u64, pp: u64, qq: u64) -> RatioOrder {
        ratio_compare(p, &rat(q), pp, &rat(qq), DEFAULT_PRECISION_CAP).unwrap().order
    }

    fn verdict(p: u64, q: u64, pp: u64, qq: u64) -> Verdict {
        decide_embedding_existence(p, &rat(q), pp, &rat(qq)).unwrap().verdict
    }

    #[test]
    fn perfect_powers() {
        let pp = |n| perfect_power_decomposition(n).unwrap();
        assert_eq!(pp(8), PerfectPower { base: 2, exponent: 3 });
        assert_eq!(pp(6), PerfectPower { base: 6, exponent: 1 });
        assert_eq!(pp(36), PerfectPower { base: 6, exponent: 2 });
        assert_eq!(pp(1 << 62), PerfectPower { base: 2, exponent: 62 });
        assert_eq!(pp(3u64.pow(40)), PerfectPower { base: 3, exponent: 40 });
        assert_eq!(pp(u64::MAX), PerfectPower { base: u64::MAX, exponent: 1 });
        assert!(perfect_power_decomposition(1).is_err());
    }

    #[test]
    fn common_bases() {
        assert_eq!(common_power_base(4, 8), Some(CommonBase { r: 2, s: 2, t: 3 }));
        assert_eq!(common_power_base(2, 3), None);
        assert_eq!(common_power_base(9, 27), Some(CommonBase { r: 3, s: 2, t: 3 }));
        assert_eq!(common_power_base(12, 18), None);
    }

    #[test]
    fn ratios() {
        assert_eq!(cmp(2, 4, 2, 2), RatioOrder::Less);
        assert_eq!(cmp(2, 2, 3, 3), RatioOrder::Equal);
        assert_eq!(cmp(2, 3, 4, 9), RatioOrder::Equal);
        assert_eq!(cmp(3, 2, 2, 2), RatioOrder::Greater);
        // generic case needs intervals: log 8·log 4 vs log 6·log 5
        let r = ratio_compare(8, &rat(5), 6, &rat(4), 4096).unwrap();
        assert_eq!(r.order, RatioOrder::Less);
        assert_eq!(r.certificate, RatioCertificate::Intervals);
    }

    #[test]
    fn near_ties_escalate_precision() {
        // q' ≈ 5^(log 3/log 2) to about 100 bits
        let qq = BigRational::new("16249530314259513770155762924407".parse().unwrap(), BigInt::from(2).pow(100u32));
        let r = ratio_compare(2, &rat(3), 5, &qq, 64).unwrap();
        assert_eq!(r.order, RatioOrder::Undecided);
        assert_eq!(r.certificate, RatioCertificate::None);
        let r = ratio_compare(2, &rat(3), 5, &qq, 4096).unwrap();
        assert_ne!(r.order, RatioOrder::Undecided);
        assert!(r.precision_bits > 64);
    }

    #[test]
    fn verdicts() {
        assert_eq!(verdict(2, 2, 3, 3), Verdict::NotEmbeddable);
        let d = decide_embedding_existence(2, &rat(2), 4, &rat(4)).unwrap();
        assert_eq!(d.verdict, Verdict::EmbeddableC2);
        assert_eq!(d.certificate, Some(CommonBase { r: 2, s: 1, t: 2 }));
        assert_eq!(verdict(2, 4, 3, 3), Verdict::EmbeddableC1);
        assert_eq!(verdict(3, 2, 2, 2), Verdict::NotEmbeddable);
        assert_eq!(verdict(3, 3, 3, 3), Verdict::EmbeddableC2);
    }

    #[test]
    fn quasiisometry() {
        let qi = |p, q, pp, qq| decide_quasiisometry(p, &rat(q), pp, &rat(qq)).unwrap();
        assert_eq!(qi(2, 2, 4, 4), QiVerdict::Qi);
        assert_eq!(qi(2, 4, 3, 3), QiVerdict::NotQi);
        assert_eq!(qi(3, 3, 3, 3), QiVerdict::Qi);
        assert_eq!(qi(4, 4, 2, 2), QiVerdict::Qi);
    }

    #[test]
    fn baumslag_solitar() {
        assert_eq!(decide_bs_embedding(2, 4).unwrap().0, BsVerdict::Yes);
        assert_eq!(decide_bs_embedding(2, 3).unwrap().0, BsVerdict::No);
        assert_eq!(decide_bs_embedding(8, 4).unwrap().0, BsVerdict::Yes);
    }

    #[test]
    fn smallest_exponents() {
        assert_eq!(c1_exponents(2, &rat(4), 2, &rat(2), 100).unwrap(), (1, 1));
        assert_eq!(c1_exponents(2, &rat(4), 3, &rat(3), 100).unwrap(), (1, 1));
        // log 8/log 5 < log 6/log 4 only barely
        let (a, b) = c1_exponents(8, &rat(5), 6, &rat(4), 100_000).unwrap();
        assert!(a > 1 && b > 1);
    }
}
