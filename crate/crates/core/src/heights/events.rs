use std::cmp::Ordering;

use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use super::basis::{CoprimeBasis, LogSign};
use super::log_height::{ln_rational, LogHeight};
use crate::error::{Error, Result};
use crate::seq::{fmt_rational, SeqSpec};

/// Which of the two height sets an event height belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum EventTag {
    BlueOnly,
    RedOnly,
    Both,
}

impl EventTag {
    pub fn has_blue(self) -> bool {
        self != EventTag::RedOnly
    }

    pub fn has_red(self) -> bool {
        self != EventTag::BlueOnly
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EventTag::BlueOnly => "Blue",
            EventTag::RedOnly => "Red",
            EventTag::Both => "Both",
        }
    }
}

/// One point of the merged line. Index `a` on the blue side means the height
/// `log q₁ + … + log q_a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Event {
    pub tag: EventTag,
    pub blue_index: Option<u64>,
    pub red_index: Option<u64>,
}

fn check_seq(q: &SeqSpec<BigRational>) -> Result<()> {
    match q.slots().find(|x| **x <= BigRational::one()) {
        Some(x) => Err(Error::InvalidValue(format!("edge base {x} is not > 1"))),
        None => Ok(()),
    }
}

/// Unbounded exact walk along `H(R) ∪ H(R')`.
///
/// Keeps `E(blue a+1) − E(red b+1)` as an exponent vector over a coprime
/// basis of all the edge bases; a zero vector is an exact tie.
#[derive(Clone, Debug)]
pub struct EventStream {
    sign: LogSign,
    blue: SeqSpec<BigRational>,
    red: SeqSpec<BigRational>,
    blue_exps: Vec<Vec<i64>>,
    red_exps: Vec<Vec<i64>>,
    a: u64,
    b: u64,
    diff: Vec<i64>,
    started: bool,
}

impl EventStream {
    pub fn new(blue: &SeqSpec<BigRational>, red: &SeqSpec<BigRational>) -> Result<Self> {
        check_seq(blue)?;
        check_seq(red)?;
        let basis = CoprimeBasis::from_rationals(blue.slots().chain(red.slots()));
        let exps = |s: &SeqSpec<BigRational>| -> Vec<Vec<i64>> {
            s.slots().map(|x| basis.exponents(x).expect("basis spans its inputs")).collect()
        };
        let blue_exps = exps(blue);
        let red_exps = exps(red);
        let mut diff = blue_exps[blue.slot(1)].clone();
        for (d, r) in diff.iter_mut().zip(&red_exps[red.slot(1)]) {
            *d -= r;
        }
        Ok(Self {
            sign: LogSign::new(basis),
            blue: blue.clone(),
            red: red.clone(),
            blue_exps,
            red_exps,
            a: 0,
            b: 0,
            diff,
            started: false,
        })
    }

    fn add_blue(&mut self, n: u64) {
        for (d, e) in self.diff.iter_mut().zip(&self.blue_exps[self.blue.slot(n)]) {
            *d += e;
        }
    }

    fn sub_red(&mut self, n: u64) {
        for (d, e) in self.diff.iter_mut().zip(&self.red_exps[self.red.slot(n)]) {
            *d -= e;
        }
    }
}

impl Iterator for EventStream {
    type Item = Event;

    fn next(&mut self) -> Option<Event> {
        if !self.started {
            self.started = true;
            return Some(Event { tag: EventTag::Both, blue_index: Some(0), red_index: Some(0) });
        }
        let tag = match self.sign.sign(&self.diff) {
            Ordering::Less => EventTag::BlueOnly,
            Ordering::Greater => EventTag::RedOnly,
            Ordering::Equal => EventTag::Both,
        };
        let mut ev = Event { tag, blue_index: None, red_index: None };
        if tag.has_blue() {
            self.a += 1;
            ev.blue_index = Some(self.a);
            self.add_blue(self.a + 1);
        }
        if tag.has_red() {
            self.b += 1;
            ev.red_index = Some(self.b);
            self.sub_red(self.b + 1);
        }
        Some(ev)
    }
}

/// A finite prefix of the merged event line.
#[derive(Clone, Debug)]
pub struct EventLine {
    blue: SeqSpec<BigRational>,
    red: SeqSpec<BigRational>,
    events: Vec<Event>,
}

/// The first `count` events of the merged line of the two height sets.
pub fn merged_events(q: &SeqSpec<BigRational>, q_prime: &SeqSpec<BigRational>, count: usize) -> Result<EventLine> {
    if count == 0 {
        return Err(Error::InvalidValue("event count must be >= 1".into()));
    }
    let events = EventStream::new(q, q_prime)?.take(count).collect();
    Ok(EventLine { blue: q.clone(), red: q_prime.clone(), events })
}

/// `log q₁ + … + log q_n` grouped by distinct base.
pub fn partial_sum_factors(q: &SeqSpec<BigRational>, n: u64) -> Vec<(BigRational, u64)> {
    let lp = q.prefix().len() as u64;
    let per = q.period().len() as u64;
    let mut out: Vec<(BigRational, u64)> = Vec::new();
    let mut push = |v: &BigRational, c: u64| {
        if c == 0 {
            return;
        }
        match out.iter_mut().find(|(w, _)| w == v) {
            Some(slot) => slot.1 += c,
            None => out.push((v.clone(), c)),
        }
    };
    for (i, v) in q.prefix().iter().enumerate() {
        push(v, (n > i as u64) as u64);
    }
    if n > lp {
        let m = n - lp;
        for (j, v) in q.period().iter().enumerate() {
            push(v, m / per + ((j as u64) < m % per) as u64);
        }
    }
    out
}

/// Exact `log q₁ + … + log q_n`.
pub fn partial_sum(q: &SeqSpec<BigRational>, n: u64) -> LogHeight {
    let f = partial_sum_factors(q, n);
    match f.as_slice() {
        [] => LogHeight::zero(),
        [(v, c)] => LogHeight::log(v).expect("bases are > 1").times(*c),
        _ => {
            let base = f.iter().fold(BigRational::one(), |acc, (v, c)| acc * num_traits::pow(v.clone(), *c as usize));
            LogHeight::log(&base).expect("bases are > 1")
        }
    }
}

impl EventLine {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn get(&self, n: usize) -> Option<&Event> {
        self.events.get(n)
    }

    pub fn blue(&self) -> &SeqSpec<BigRational> {
        &self.blue
    }

    pub fn red(&self) -> &SeqSpec<BigRational> {
        &self.red
    }

    fn side(&self, n: usize) -> (&SeqSpec<BigRational>, u64) {
        let ev = &self.events[n];
        match ev.blue_index {
            Some(a) => (&self.blue, a),
            None => (&self.red, ev.red_index.expect("event has a color")),
        }
    }

    /// Exact height of event `n`.
    pub fn height(&self, n: usize) -> LogHeight {
        let (q, k) = self.side(n);
        partial_sum(q, k)
    }

    pub fn height_f64(&self, n: usize) -> f64 {
        let (q, k) = self.side(n);
        partial_sum_factors(q, k).iter().map(|(v, c)| *c as f64 * ln_rational(v)).sum()
    }

    /// Height of event `n` as a product of powers, e.g. `2^1*4^3`.
    pub fn height_power_string(&self, n: usize) -> String {
        let (q, k) = self.side(n);
        let f = partial_sum_factors(q, k);
        if f.is_empty() {
            return "1^0".into();
        }
        f.iter().map(|(v, c)| format!("{}^{}", fmt_rational(v), c)).collect::<Vec<_>>().join("*")
    }
}

/// Floating-point event tags for real edge bases. Never reports a tie after
/// `h₀`: a gap within `tolerance` is an error instead.
pub fn approx_merged_events(q: &SeqSpec<f64>, q_prime: &SeqSpec<f64>, count: usize, tolerance: f64) -> Result<Vec<Event>> {
    if let Some(x) = q.slots().chain(q_prime.slots()).find(|x| !(**x > 1.0) || !x.is_finite()) {
        return Err(Error::InvalidValue(format!("edge base {x} is not > 1")));
    }
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return Ok(out);
    }
    out.push(Event { tag: EventTag::Both, blue_index: Some(0), red_index: Some(0) });
    let (mut a, mut b) = (0u64, 0u64);
    let (mut hb, mut hr) = (q.get(1).ln(), q_prime.get(1).ln());
    while out.len() < count {
        if (hb - hr).abs() <= tolerance * hb.max(hr) {
            return Err(Error::Ambiguous(format!(
                "blue {} and red {} are within tolerance; exact arithmetic needed",
                a + 1,
                b + 1
            )));
        }
        if hb < hr {
            a += 1;
            out.push(Event { tag: EventTag::BlueOnly, blue_index: Some(a), red_index: None });
            hb += q.get(a + 1).ln();
        } else {
            b += 1;
            out.push(Event { tag: EventTag::RedOnly, blue_index: None, red_index: Some(b) });
            hr += q_prime.get(b + 1).ln();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq::parse_rational_seq;
    use EventTag::*;

    fn tags(q: &str, qq: &str, n: usize) -> Vec<EventTag> {
        let line = merged_events(&parse_rational_seq(q).unwrap(), &parse_rational_seq(qq).unwrap(), n).unwrap();
        line.events().iter().map(|e| e.tag).collect()
    }

    #[test]
    fn spec_lines() {
        assert_eq!(tags("2", "3", 4), vec![Both, BlueOnly, RedOnly, BlueOnly]);
        assert_eq!(tags("2", "2", 3), vec![Both, Both, Both]);
        assert_eq!(tags("2;4", "4", 5), vec![Both, BlueOnly, RedOnly, BlueOnly, RedOnly]);
    }

    #[test]
    fn heights_follow_indices() {
        let q = parse_rational_seq("2;4").unwrap();
        let line = merged_events(&q, &parse_rational_seq("4").unwrap(), 5).unwrap();
        let want = ["0", "1*log(2)", "1*log(4)", "1*log(8)", "2*log(4)"];
        for (i, w) in want.iter().enumerate() {
            assert_eq!(line.height(i), w.parse::<LogHeight>().unwrap(), "event {i}");
        }
        assert_eq!(line.height_power_string(3), "2^1*4^1");
        assert_eq!(line.height_power_string(4), "4^2");
    }

    #[test]
    fn rejects_small_bases() {
        let bad = SeqSpec::constant(BigRational::one());
        assert!(merged_events(&bad, &parse_rational_seq("2").unwrap(), 3).is_err());
        assert!(merged_events(&parse_rational_seq("2").unwrap(), &parse_rational_seq("3").unwrap(), 0).is_err());
    }

    #[test]
    fn approx_mode_refuses_ties() {
        let two = SeqSpec::constant(2.0);
        let three = SeqSpec::constant(3.0);
        let ev = approx_merged_events(&two, &three, 4, 1e-12).unwrap();
        assert_eq!(ev.iter().map(|e| e.tag).collect::<Vec<_>>(), vec![Both, BlueOnly, RedOnly, BlueOnly]);
        assert!(approx_merged_events(&two, &SeqSpec::constant(4.0), 4, 1e-12).is_err());
    }
}
