//! The pebble sequence: walk the merged event line from 0, multiplying the
//! pebble count at blue heights and splitting it (rounding up) at red ones.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::heights::{
    combine, multiplicative_relation, Event, EventLine, EventStream, EventTag, LogHeight, LogSign, CoprimeBasis,
};
use crate::seq::{fmt_rational, SeqSpec};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PebbleParams {
    pub p: SeqSpec<u32>,
    pub q: SeqSpec<BigRational>,
    pub p_prime: SeqSpec<u32>,
    pub q_prime: SeqSpec<BigRational>,
    pub initial: BigUint,
}

fn check_branching(p: &SeqSpec<u32>) -> Result<()> {
    match p.slots().find(|x| **x < 2) {
        Some(x) => Err(Error::InvalidValue(format!("branching number {x} is < 2"))),
        None => Ok(()),
    }
}

fn check_base(q: &SeqSpec<BigRational>) -> Result<()> {
    match q.slots().find(|x| **x <= BigRational::one()) {
        Some(x) => Err(Error::InvalidValue(format!("edge base {} is not > 1", fmt_rational(x)))),
        None => Ok(()),
    }
}

pub(crate) fn rat(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl PebbleParams {
    pub fn new(
        p: SeqSpec<u32>,
        q: SeqSpec<BigRational>,
        p_prime: SeqSpec<u32>,
        q_prime: SeqSpec<BigRational>,
    ) -> Result<Self> {
        check_branching(&p)?;
        check_branching(&p_prime)?;
        check_base(&q)?;
        check_base(&q_prime)?;
        Ok(Self { p, q, p_prime, q_prime, initial: BigUint::one() })
    }

    /// Constant parameters with integer edge bases.
    pub fn constant(p: u32, q: u64, p_prime: u32, q_prime: u64) -> Result<Self> {
        Self::new(
            SeqSpec::constant(p),
            SeqSpec::constant(rat(q)),
            SeqSpec::constant(p_prime),
            SeqSpec::constant(rat(q_prime)),
        )
    }

    pub fn with_initial(mut self, initial: BigUint) -> Result<Self> {
        if initial.is_zero() {
            return Err(Error::InvalidValue("initial value must be >= 1".into()));
        }
        self.initial = initial;
        Ok(self)
    }

    /// `(p, q, p', q')` when every sequence is constant.
    pub fn as_constant(&self) -> Option<(u32, BigRational, u32, BigRational)> {
        Some((
            *self.p.constant_value()?,
            self.q.constant_value()?.clone(),
            *self.p_prime.constant_value()?,
            self.q_prime.constant_value()?.clone(),
        ))
    }

    /// Value after the transition at `ev`.
    pub fn step(&self, x: &BigUint, ev: &Event) -> BigUint {
        let mut y = x.clone();
        if let Some(a) = ev.blue_index {
            y *= *self.p.get(a + 1);
        }
        if let Some(b) = ev.red_index {
            let d = *self.p_prime.get(b + 1);
            y = (y + (d - 1)) / d;
        }
        y
    }

    pub fn walk(&self) -> Result<PebbleWalk<'_>> {
        Ok(PebbleWalk { params: self, events: EventStream::new(&self.q, &self.q_prime)?, current: None })
    }
}

/// Yields `(event n, Xₙ)` for n = 0, 1, … without storing the trace.
pub struct PebbleWalk<'a> {
    params: &'a PebbleParams,
    events: EventStream,
    current: Option<BigUint>,
}

impl Iterator for PebbleWalk<'_> {
    type Item = (Event, BigUint);

    fn next(&mut self) -> Option<Self::Item> {
        let ev = self.events.next()?;
        let x = match self.current.take() {
            None => self.params.initial.clone(),
            Some(x) => x,
        };
        self.current = Some(self.params.step(&x, &ev));
        Some((ev, x))
    }
}

#[derive(Clone, Debug)]
pub struct PebbleTrace {
    /// Events `h₀..h_N`; the transition at `h_N` is not applied.
    pub events: EventLine,
    /// `X₀..X_N`.
    pub values: Vec<BigUint>,
    pub max_so_far: Vec<BigUint>,
}

impl PebbleTrace {
    pub fn max(&self) -> &BigUint {
        self.max_so_far.last().expect("trace is non-empty")
    }
}

/// `X₀..X_N` for `N = n_events`, with events `h₀..h_N`.
pub fn pebble_sequence(params: &PebbleParams, n_events: usize) -> Result<PebbleTrace> {
    let events = crate::heights::merged_events(&params.q, &params.q_prime, n_events + 1)?;
    let mut values = Vec::with_capacity(n_events + 1);
    let mut max_so_far = Vec::with_capacity(n_events + 1);
    let mut x = params.initial.clone();
    for ev in &events.events()[..n_events] {
        let y = params.step(&x, ev);
        max_so_far.push(max_so_far.last().map_or(x.clone(), |m: &BigUint| m.max(&x).clone()));
        values.push(x);
        x = y;
    }
    max_so_far.push(max_so_far.last().map_or(x.clone(), |m: &BigUint| m.max(&x).clone()));
    values.push(x);
    Ok(PebbleTrace { events, values, max_so_far })
}

/// `Yₙ = p^A / p'^B`: the recurrence without rounding, constant parameters only.
pub fn real_lower_bound(params: &PebbleParams, n_events: usize) -> Result<Vec<BigRational>> {
    let (p, _, pp, _) = params
        .as_constant()
        .ok_or_else(|| Error::Precondition("lower bound needs constant parameters".into()))?;
    let mut out = Vec::with_capacity(n_events + 1);
    let mut num = BigInt::from(params.initial.clone());
    let mut den = BigInt::one();
    let events = EventStream::new(&params.q, &params.q_prime)?;
    for ev in events.take(n_events + 1) {
        out.push(BigRational::new(num.clone(), den.clone()));
        if out.len() == n_events + 1 {
            break;
        }
        if ev.tag.has_blue() {
            num *= p;
        }
        if ev.tag.has_red() {
            den *= pp;
        }
    }
    Ok(out)
}

/// Least `n ≤ max_events` with `Xₙ ≥ threshold`.
pub fn unboundedness_witness(params: &PebbleParams, threshold: u64, max_events: usize) -> Result<Option<usize>> {
    if threshold < 2 {
        return Err(Error::InvalidValue("threshold must be >= 2".into()));
    }
    let t = BigUint::from(threshold);
    Ok(params.walk()?.take(max_events + 1).position(|(_, x)| x >= t))
}

/// One shrinking step of the gap `b·log q' − a·log q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GapStep {
    pub a: u64,
    pub b: u64,
    pub a_next: u64,
    pub b_next: u64,
    pub gap: LogHeight,
    pub gap_next: LogHeight,
}

pub const GAP_SEARCH_CAP: u64 = 1_000_000;

pub fn gap_search(q: &BigRational, q_prime: &BigRational, a: u64) -> Result<GapStep> {
    gap_search_with_cap(q, q_prime, a, GAP_SEARCH_CAP)
}

/// Smallest `a' > a` whose gap is strictly smaller than the gap at `a`.
///
/// Independence of `log q` and `log q'` is decided exactly from exponent
/// vectors over a coprime basis, so no exponent bound is involved.
pub fn gap_search_with_cap(q: &BigRational, q_prime: &BigRational, a: u64, cap: u64) -> Result<GapStep> {
    if a == 0 {
        return Err(Error::InvalidValue("a must be >= 1".into()));
    }
    check_base(&SeqSpec::constant(q.clone()))?;
    check_base(&SeqSpec::constant(q_prime.clone()))?;
    if multiplicative_relation(q, q_prime).is_some() {
        return Err(Error::Dependent(fmt_rational(q), fmt_rational(q_prime)));
    }
    let basis = CoprimeBasis::from_rationals([q, q_prime]);
    let eq = basis.exponents(q).expect("spanned");
    let eqq = basis.exponents(q_prime).expect("spanned");
    let sign = LogSign::new(basis);
    let lin = |x: i64, y: i64| -> Vec<i64> { eqq.iter().zip(&eq).map(|(u, v)| x * u - y * v).collect() };
    // least b with b·log q' > a·log q
    let least_above = |a: u64, mut b: u64| -> u64 {
        while sign.sign(&lin(b as i64, a as i64)) != Ordering::Greater {
            b += 1;
        }
        b
    };
    let b = least_above(a, 0);
    let mut b_next = b;
    for a_next in a + 1..=a.saturating_add(cap) {
        b_next = least_above(a_next, b_next);
        if sign.sign(&lin((b_next - b) as i64, (a_next - a) as i64)) == Ordering::Less {
            let lq = LogHeight::log(q)?;
            let lqq = LogHeight::log(q_prime)?;
            let gap = combine([(b as i64, &lqq), (-(a as i64), &lq)]);
            let gap_next = combine([(b_next as i64, &lqq), (-(a_next as i64), &lq)]);
            let below = combine([((b_next - 1) as i64, &lqq), (-(a_next as i64), &lq)]);
            debug_assert!(!gap.negative && !gap_next.negative && !gap_next.is_zero());
            debug_assert!(below.negative || below.is_zero());
            debug_assert!(gap_next.magnitude < gap.magnitude);
            return Ok(GapStep { a, b, a_next, b_next, gap: gap.magnitude, gap_next: gap_next.magnitude });
        }
    }
    Err(Error::SearchCap { what: "a smaller gap".into(), cap })
}

/// Tags of the first `n` events, for quick inspection.
pub fn event_tags(params: &PebbleParams, n: usize) -> Result<Vec<EventTag>> {
    Ok(EventStream::new(&params.q, &params.q_prime)?.take(n).map(|e| e.tag).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq::{parse_branching_seq, parse_rational_seq};

    fn ints(xs: &[BigUint]) -> Vec<u64> {
        xs.iter().map(|x| x.try_into().unwrap()).collect()
    }

    fn example() -> PebbleParams {
        PebbleParams::new(
            parse_branching_seq("6;3").unwrap(),
            parse_rational_seq("2;4").unwrap(),
            SeqSpec::constant(3),
            SeqSpec::constant(rat(4)),
        )
        .unwrap()
    }

    #[test]
    fn hand_executed_trace() {
        let t = pebble_sequence(&PebbleParams::constant(2, 2, 3, 3).unwrap(), 6).unwrap();
        assert_eq!(ints(&t.values), vec![1, 1, 2, 1, 2, 4, 2]);
        assert_eq!(t.events.len(), 7);
        assert_eq!(ints(&t.max_so_far), vec![1, 1, 2, 2, 2, 4, 4]);
    }

    #[test]
    fn six_arm_example() {
        let t = pebble_sequence(&example(), 2000).unwrap();
        assert_eq!(ints(&t.values[..6]), vec![1, 2, 6, 2, 6, 2]);
        assert_eq!(*t.max(), BigUint::from(6u32));
    }

    #[test]
    fn constant_one() {
        let t = pebble_sequence(&PebbleParams::constant(2, 4, 2, 2).unwrap(), 500).unwrap();
        assert!(t.values.iter().all(|x| x.is_one()));
    }

    #[test]
    fn zero_events_is_initial() {
        let t = pebble_sequence(&PebbleParams::constant(2, 2, 3, 3).unwrap(), 0).unwrap();
        assert_eq!(ints(&t.values), vec![1]);
    }

    #[test]
    fn lower_bound_values() {
        let y = real_lower_bound(&PebbleParams::constant(2, 2, 3, 3).unwrap(), 2).unwrap();
        assert_eq!(y, vec![rat(1), BigRational::new(2.into(), 3.into()), BigRational::new(4.into(), 3.into())]);
        assert_eq!(real_lower_bound(&example(), 1).unwrap_err().to_string(), "precondition failed: lower bound needs constant parameters");
        assert_eq!(real_lower_bound(&PebbleParams::constant(3, 2, 2, 2).unwrap(), 0).unwrap(), vec![rat(1)]);
    }

    #[test]
    fn witnesses() {
        let p = PebbleParams::constant(2, 2, 3, 3).unwrap();
        assert_eq!(unboundedness_witness(&p, 4, 100).unwrap(), Some(5));
        let p = PebbleParams::constant(2, 4, 2, 2).unwrap();
        assert_eq!(unboundedness_witness(&p, 2, 10_000).unwrap(), None);
        assert_eq!(unboundedness_witness(&example(), 7, 20_000).unwrap(), None);
        assert!(unboundedness_witness(&example(), 1, 10).is_err());
    }

    #[test]
    fn gap_steps() {
        let g = gap_search(&rat(2), &rat(3), 1).unwrap();
        assert_eq!((g.a_next, g.b_next), (3, 2));
        assert_eq!(g.gap_next, "1*log(9/8)".parse().unwrap());
        let g = gap_search(&rat(2), &rat(3), 3).unwrap();
        assert_eq!((g.a_next, g.b_next), (11, 7));
        assert!(matches!(gap_search(&rat(2), &rat(2), 1), Err(Error::Dependent(..))));
        assert!(matches!(gap_search(&rat(4), &rat(8), 1), Err(Error::Dependent(..))));
    }
}
