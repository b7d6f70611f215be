//! Coprime bases, exponent vectors and rigorous binary logarithm enclosures.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Pairwise coprime integers `> 1` such that every input factors over them.
#[derive(Clone, Debug)]
pub struct CoprimeBasis {
    elems: Vec<BigUint>,
}

impl CoprimeBasis {
    pub fn new<'a>(values: impl IntoIterator<Item = &'a BigUint>) -> Self {
        let mut elems: Vec<BigUint> = Vec::new();
        for v in values {
            let mut pending = vec![v.clone()];
            while let Some(x) = pending.pop() {
                if x.is_one() || x.is_zero() {
                    continue;
                }
                match elems.iter().position(|b| !x.gcd(b).is_one()) {
                    Some(i) => {
                        let b = elems.swap_remove(i);
                        let g = x.gcd(&b);
                        pending.push(&b / &g);
                        pending.push(&x / &g);
                        pending.push(g);
                    }
                    None => elems.push(x),
                }
            }
        }
        elems.sort();
        Self { elems }
    }

    pub fn from_rationals<'a>(values: impl IntoIterator<Item = &'a BigRational>) -> Self {
        let parts: Vec<BigUint> = values
            .into_iter()
            .flat_map(|r| [r.numer().magnitude().clone(), r.denom().magnitude().clone()])
            .collect();
        Self::new(parts.iter())
    }

    pub fn elems(&self) -> &[BigUint] {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    /// Exponents of `n` over the basis; `None` if `n` does not factor.
    pub fn exponents_int(&self, n: &BigUint) -> Option<Vec<i64>> {
        let mut rest = n.clone();
        let mut out = vec![0i64; self.elems.len()];
        for (e, b) in out.iter_mut().zip(&self.elems) {
            loop {
                let (q, r) = rest.div_rem(b);
                if !r.is_zero() {
                    break;
                }
                rest = q;
                *e += 1;
            }
        }
        rest.is_one().then_some(out)
    }

    pub fn exponents(&self, r: &BigRational) -> Option<Vec<i64>> {
        let n = self.exponents_int(r.numer().magnitude())?;
        let d = self.exponents_int(r.denom().magnitude())?;
        Some(n.iter().zip(&d).map(|(a, b)| a - b).collect())
    }
}

/// Enclosure `[lo, hi]` of `2^frac_bits · log2(n)` for `n ≥ 1`.
///
/// Squares a fixed-point mantissa once per output bit; if rounding makes a
/// bit undecidable the enclosure is returned early at the width reached.
pub fn log2_enclosure(n: &BigUint, frac_bits: u32) -> (BigInt, BigInt) {
    assert!(!n.is_zero(), "log of zero");
    let e = n.bits() - 1;
    let int_part = BigInt::from(e) << frac_bits;
    if n.trailing_zeros() == Some(e) {
        return (int_part.clone(), int_part);
    }
    let w = frac_bits as u64 + 80;
    let (mut lo, mut hi) = if w >= e {
        let x = n << (w - e);
        (x.clone(), x)
    } else {
        let x = n >> (e - w);
        (x.clone(), x + 1u32)
    };
    let two = BigUint::one() << (w + 1);
    let round_up = (BigUint::one() << w) - 1u32;
    let mut acc = BigUint::zero();
    let mut decided = 0u32;
    while decided < frac_bits {
        lo = (&lo * &lo) >> w;
        hi = (&hi * &hi + &round_up) >> w;
        let bit = if lo >= two {
            lo >>= 1;
            hi = (hi + 1u32) >> 1;
            1u32
        } else if hi < two {
            0u32
        } else {
            break;
        };
        acc = (acc << 1) + bit;
        decided += 1;
    }
    let shift = frac_bits - decided;
    let lo_f = BigInt::from(acc.clone() << shift);
    let hi_f = BigInt::from((acc + 1u32) << shift);
    (&int_part + lo_f, int_part + hi_f)
}

/// Enclosure of `2^frac_bits · log2(r)` for a rational `r > 0`.
pub fn log2_enclosure_rational(r: &BigRational, frac_bits: u32) -> (BigInt, BigInt) {
    let (nl, nh) = log2_enclosure(r.numer().magnitude(), frac_bits);
    let (dl, dh) = log2_enclosure(r.denom().magnitude(), frac_bits);
    (nl - dh, nh - dl)
}

/// Decides the sign of `Σ dₖ·log(bₖ)` over a fixed coprime basis.
#[derive(Clone, Debug)]
pub struct LogSign {
    basis: CoprimeBasis,
    enclosures: Vec<(i128, i128)>,
}

const FAST_BITS: u32 = 64;

impl LogSign {
    pub fn new(basis: CoprimeBasis) -> Self {
        let enclosures = basis
            .elems()
            .iter()
            .map(|b| {
                let (lo, hi) = log2_enclosure(b, FAST_BITS);
                (lo.to_i128().expect("log too large"), hi.to_i128().expect("log too large"))
            })
            .collect();
        Self { basis, enclosures }
    }

    pub fn basis(&self) -> &CoprimeBasis {
        &self.basis
    }

    /// Exact sign. Zero only for the zero vector, since the basis is
    /// multiplicatively independent.
    pub fn sign(&self, d: &[i64]) -> Ordering {
        if d.iter().all(|x| *x == 0) {
            return Ordering::Equal;
        }
        if let Some(s) = self.interval_sign(d) {
            return s;
        }
        let mut pos = BigUint::one();
        let mut neg = BigUint::one();
        for (k, b) in d.iter().zip(self.basis.elems()) {
            let m = k.unsigned_abs() as u32;
            match k.cmp(&0) {
                Ordering::Greater => pos *= b.pow(m),
                Ordering::Less => neg *= b.pow(m),
                Ordering::Equal => {}
            }
        }
        pos.cmp(&neg)
    }

    fn interval_sign(&self, d: &[i64]) -> Option<Ordering> {
        let mut lo = 0i128;
        let mut hi = 0i128;
        for (k, (l, h)) in d.iter().zip(&self.enclosures) {
            let k = *k as i128;
            let (a, b) = if k >= 0 { (k.checked_mul(*l)?, k.checked_mul(*h)?) } else { (k.checked_mul(*h)?, k.checked_mul(*l)?) };
            lo = lo.checked_add(a)?;
            hi = hi.checked_add(b)?;
        }
        if lo > 0 {
            Some(Ordering::Greater)
        } else if hi < 0 {
            Some(Ordering::Less)
        } else {
            None
        }
    }
}

/// Least `(i, j)` with `x^i = y^j`, for rationals `x, y > 1`; `None` when
/// `log x / log y` is irrational.
pub fn multiplicative_relation(x: &BigRational, y: &BigRational) -> Option<(u64, u64)> {
    let basis = CoprimeBasis::from_rationals([x, y]);
    let ex = basis.exponents(x)?;
    let ey = basis.exponents(y)?;
    let k = ex.iter().position(|e| *e != 0)?;
    // ey = (i/j)·ex
    let ratio = BigRational::new(BigInt::from(ey[k]), BigInt::from(ex[k]));
    let proportional = ex
        .iter()
        .zip(&ey)
        .all(|(a, b)| BigRational::from_integer(BigInt::from(*b)) == &ratio * BigRational::from_integer(BigInt::from(*a)));
    if !proportional || !ratio.is_positive() {
        return None;
    }
    Some((ratio.numer().to_u64()?, ratio.denom().to_u64()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn basis_is_coprime_and_spans() {
        let vals: Vec<BigUint> = [12u32, 18, 10, 45, 7].iter().map(|x| BigUint::from(*x)).collect();
        let b = CoprimeBasis::new(vals.iter());
        for (i, x) in b.elems().iter().enumerate() {
            for y in &b.elems()[i + 1..] {
                assert!(x.gcd(y).is_one());
            }
        }
        for v in &vals {
            assert!(b.exponents_int(v).is_some());
        }
        assert_eq!(b.exponents_int(&BigUint::from(11u32)), None);
    }

    #[test]
    fn enclosures_contain_float_log() {
        for n in [2u64, 3, 5, 10, 12345, 1 << 40, (1 << 40) + 1, 999_999_937] {
            let (lo, hi) = log2_enclosure(&BigUint::from(n), 64);
            let scale = 2f64.powi(64);
            let lo = lo.to_f64().unwrap() / scale;
            let hi = hi.to_f64().unwrap() / scale;
            let want = (n as f64).log2();
            assert!(lo <= want + 1e-12 && want <= hi + 1e-12, "{n}: {lo} {want} {hi}");
            assert!(hi - lo < 1e-15 * want.max(1.0) + 1e-18);
        }
    }

    #[test]
    fn sign_on_near_ties() {
        let b = CoprimeBasis::new([BigUint::from(2u32), BigUint::from(3u32)].iter());
        let s = LogSign::new(b);
        // 3^12 = 531441 > 2^19 = 524288
        assert_eq!(s.sign(&[-19, 12]), Ordering::Greater);
        assert_eq!(s.sign(&[19, -12]), Ordering::Less);
        // 2^84 vs 3^53: 3^53 ≈ 1.94e25 > 2^84 ≈ 1.93e25
        assert_eq!(s.sign(&[84, -53]), Ordering::Less);
        assert_eq!(s.sign(&[0, 0]), Ordering::Equal);
    }

    #[test]
    fn relations() {
        assert_eq!(multiplicative_relation(&r(4, 1), &r(8, 1)), Some((3, 2)));
        assert_eq!(multiplicative_relation(&r(2, 1), &r(3, 1)), None);
        assert_eq!(multiplicative_relation(&r(9, 4), &r(3, 2)), Some((1, 2)));
        assert_eq!(multiplicative_relation(&r(6, 1), &r(6, 1)), Some((1, 1)));
        assert_eq!(multiplicative_relation(&r(12, 1), &r(18, 1)), None);
    }
}
