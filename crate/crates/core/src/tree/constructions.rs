use num_rational::BigRational;

use super::{MapImage, PointHeight, Tree, TreeMap, TreeVertex};
use crate::criteria::{c1_exponents, c2_certificate, decide_embedding_existence, Verdict};
use crate::error::{Error, Result};
use crate::heights::LogHeight;
use crate::seq::SeqSpec;

/// Targets are never enumerated by the constructions, only addressed, so
/// they get a much larger budget than materialized sources.
const TARGET_BUDGET: u128 = 1 << 48;

const C1_SEARCH_CAP: u64 = 10_000;

fn regular_tree(p: u64, edge: LogHeight, depth: usize, budget: u128) -> Result<Tree> {
    let p = u32::try_from(p).map_err(|_| Error::InvalidValue(format!("branching {p} too large")))?;
    Tree::with_budget(SeqSpec::constant(p), SeqSpec::constant(edge), depth, budget)
}

fn constant_shape(t: &Tree) -> Result<(u32, LogHeight)> {
    match (t.branching_seq().constant_value(), t.edge_seq().constant_value()) {
        (Some(p), Some(e)) => Ok((*p, e.clone())),
        _ => Err(Error::Precondition("construction needs a regular source tree".into())),
    }
}

fn checked_pow(p: u64, e: u64) -> Result<u64> {
    u32::try_from(e)
        .ok()
        .and_then(|e| p.checked_pow(e))
        .filter(|v| *v <= u32::MAX as u64)
        .ok_or_else(|| Error::InvalidValue(format!("{p}^{e} is too large a branching number")))
}

/// Level of the block vertex nearest to `level`; ties go to the ancestor.
fn nearest_block(level: usize, s: usize) -> usize {
    let (k, rem) = (level / s, level % s);
    if 2 * rem <= s {
        k
    } else {
        k + 1
    }
}

/// Recodes consecutive blocks of `s` base-`p` digits as single digits.
fn recode_blocks(digits: &[u32], p: u32, s: usize) -> Vec<u32> {
    debug_assert_eq!(digits.len() % s, 0);
    digits.chunks(s).map(|b| b.iter().fold(0u32, |acc, d| acc * p + d)).collect()
}

/// Expands each digit into `s` base-`p` digits, most significant first.
fn expand_digits(digits: &[u32], p: u32, s: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(digits.len() * s);
    for d in digits {
        let mut block = vec![0u32; s];
        let mut x = *d;
        for slot in block.iter_mut().rev() {
            *slot = x % p;
            x /= p;
        }
        debug_assert_eq!(x, 0, "digit {d} does not fit in {s} base-{p} digits");
        out.extend(block);
    }
    out
}

/// Projection of `v` onto the vertex `s`-block nearest in height, pushed
/// down along zero digits when the nearest block lies below.
fn block_image(v: &TreeVertex, p: u32, s: usize) -> (usize, Vec<u32>) {
    let k = nearest_block(v.level(), s);
    let mut digits = v.digits().to_vec();
    digits.truncate(k * s);
    digits.resize(k * s, 0);
    (k, recode_blocks(&digits, p, s))
}

/// The rough isometry from a regular tree `R(p, e)` onto `R(p^s, s·e)`:
/// vertices at levels divisible by `s` are recoded block by block, the rest
/// go to the nearest such vertex.
pub fn power_map(source: &Tree, s: u32) -> Result<TreeMap> {
    if s == 0 {
        return Err(Error::InvalidValue("power must be >= 1".into()));
    }
    let (p, edge) = constant_shape(source)?;
    let s = s as usize;
    let ps = checked_pow(p as u64, s as u64)?;
    let depth = source.depth().div_ceil(s);
    let target = regular_tree(ps, edge.times(s as u64), depth, TARGET_BUDGET)?;
    let images = source.vertices().map(|v| TreeVertex(block_image(&v, p, s).1)).collect();
    TreeMap::from_vertices(source.clone(), target, images)
}

pub fn power_rough_isometry(p: u64, q: &BigRational, s: u32, depth: usize) -> Result<TreeMap> {
    let source = regular_tree(p, LogHeight::log(q)?, depth, super::DEFAULT_VERTEX_BUDGET)?;
    power_map(&source, s)
}

/// The same images, read in an equally shaped target.
fn retarget(map: &TreeMap, target: Tree) -> Result<TreeMap> {
    if !map.target().same_shape(&target) {
        return Err(Error::Precondition("retargeting to a differently shaped tree".into()));
    }
    let images = map.images().iter().map(|m| m.vertex.clone()).collect();
    TreeMap::from_vertices(map.source().clone(), target, images)
}

/// Rough isometry `R(p, q) → R(p', q')` when `p = r^s`, `p' = r^t` and
/// `q^t = q'^s`, through `R(r, (1/s)·log q)`.
pub fn c2_rough_isometry(p: u64, q: &BigRational, p_prime: u64, q_prime: &BigRational, depth: usize) -> Result<TreeMap> {
    let cert = c2_certificate(p, q, p_prime, q_prime)
        .ok_or_else(|| Error::Precondition(format!("({p}, {q}, {p_prime}, {q_prime}) has no common power base")))?;
    let (r, s, t) = (cert.r as u32, cert.s as usize, cert.t);
    let source = regular_tree(p, LogHeight::log(q)?, depth, super::DEFAULT_VERTEX_BUDGET)?;
    let fine_edge = LogHeight::log(q)?.scaled(&BigRational::new(1.into(), (s as i64).into()));
    let fine = regular_tree(r as u64, fine_edge, depth * s, super::DEFAULT_VERTEX_BUDGET)?;
    let images = source.vertices().map(|v| TreeVertex(expand_digits(v.digits(), r, s))).collect();
    let expand = TreeMap::from_vertices(source, fine.clone(), images)?;
    let coarse = power_map(&fine, t)?;
    let composite = expand.compose(&coarse)?;
    let target = regular_tree(p_prime, LogHeight::log(q_prime)?, composite.target().depth(), TARGET_BUDGET)?;
    retarget(&composite, target)
}

/// A rough isometric embedding built from exponents `(a, b)` with
/// `p^a ≤ p'^b` and `q'^b < q^a`.
#[derive(Clone, Debug)]
pub struct C1Embedding {
    pub map: TreeMap,
    pub a: u64,
    pub b: u64,
}

/// Embedding `R(p, q) → R(p', q')` when `log p / log q < log p' / log q'`.
///
/// Levels are first grouped in blocks of `a`, giving `R(p^a, q^a)`. The
/// child digit of each block vertex, written as `b` base-`p'` digits, is
/// placed on the last `b` target levels ending at the edge that carries the
/// block height; zero digits pad the levels in between. Image points sit at
/// the block heights, so they may lie inside target edges.
pub fn c1_embedding(p: u64, q: &BigRational, p_prime: u64, q_prime: &BigRational, depth: usize) -> Result<C1Embedding> {
    let decision = decide_embedding_existence(p, q, p_prime, q_prime)?;
    if decision.verdict != Verdict::EmbeddableC1 {
        return Err(Error::Precondition(format!(
            "({p}, {q}, {p_prime}, {q_prime}) is {:?}, not a strict ratio inequality",
            decision.verdict
        )));
    }
    let (a, b) = c1_exponents(p, q, p_prime, q_prime, C1_SEARCH_CAP)?;
    let source = regular_tree(p, LogHeight::log(q)?, depth, super::DEFAULT_VERTEX_BUDGET)?;
    let (pu, ppu) = (p as u32, p_prime as u32);
    let big_q = LogHeight::log(q)?.times(a);
    let fine = LogHeight::log(q_prime)?;
    let (au, bu) = (a as usize, b as usize);

    let top_block = depth.div_ceil(au);
    // target level whose edge carries block height k; consecutive ones are
    // at least b apart because log Q > b·log q'
    let mut level = vec![0usize];
    for k in 1..=top_block {
        let h = big_q.times(k as u64);
        let mut m = level[k - 1] + bu;
        while fine.times(m as u64) < h {
            m += 1;
        }
        debug_assert!(fine.times((m - 1) as u64) < h);
        level.push(m);
    }
    let target = regular_tree(p_prime, fine.clone(), level[top_block], TARGET_BUDGET)?;

    let images = source
        .vertices()
        .map(|v| {
            let (k, block_digits) = block_image(&v, pu, au);
            let mut digits = vec![0u32; level[k]];
            for (j, d) in block_digits.iter().enumerate() {
                let end = level[j + 1];
                digits[end - bu..end].copy_from_slice(&expand_digits(&[*d], ppu, bu));
            }
            MapImage { vertex: TreeVertex(digits), height: PointHeight::Source(k * au) }
        })
        .collect();
    let map = TreeMap::new(source, target, images)?;
    Ok(C1Embedding { map, a, b })
}

#[cfg(test)]
mod tests {
    use super::super::{coarse_surjectivity, distortion_report, heightify};
    use super::*;
    use crate::pebble::rat;

    fn log(n: u64) -> LogHeight {
        LogHeight::log_int(n).unwrap()
    }

    #[test]
    fn power_one_is_identity() {
        let m = power_rough_isometry(3, &rat(2), 1, 3).unwrap();
        assert!(m.images().iter().enumerate().all(|(i, im)| im.vertex == m.source().vertex_at(i)));
        let r = distortion_report(&m);
        assert_eq!(r.additive_constant, LogHeight::zero());
        assert_eq!(r.height_deviation, LogHeight::zero());
    }

    #[test]
    fn power_two_recodes_digit_pairs() {
        let m = power_rough_isometry(2, &rat(2), 2, 4).unwrap();
        let img = |s: &str| m.image(&s.parse().unwrap()).vertex.to_string();
        assert_eq!(img("1.0"), "2");
        assert_eq!(img("1.1.0.1"), "3.1");
        // odd levels: tie goes to the ancestor block
        assert_eq!(img("1"), "-");
        assert_eq!(img("1.1.1"), "3");
        let r = distortion_report(&m);
        assert!(r.additive_constant <= log(2).times(2));
        assert!(r.height_deviation <= log(2));
    }

    #[test]
    fn power_three_rounds_to_nearest_block() {
        let m = power_rough_isometry(2, &rat(2), 3, 3).unwrap();
        assert_eq!(m.image(&"1".parse().unwrap()).vertex, TreeVertex::root());
        assert_eq!(m.image(&"1.1".parse().unwrap()).vertex.to_string(), "6");
    }

    #[test]
    fn c2_plateau_two_to_four() {
        let values: Vec<LogHeight> =
            (4..=8).map(|d| distortion_report(&c2_rough_isometry(2, &rat(2), 4, &rat(4), d).unwrap()).additive_constant).collect();
        assert!(values.iter().all(|v| *v == values[0]), "{values:?}");
        assert_eq!(values[0], log(2).times(2));
        let m = c2_rough_isometry(2, &rat(2), 4, &rat(4), 6).unwrap();
        assert!(coarse_surjectivity(&m) <= values[0]);
    }

    #[test]
    fn c2_both_directions_and_identity() {
        let back = c2_rough_isometry(4, &rat(4), 2, &rat(2), 3).unwrap();
        assert_eq!(distortion_report(&back).additive_constant, log(2).times(2));
        let id = c2_rough_isometry(2, &rat(2), 2, &rat(2), 4).unwrap();
        assert!(id.images().iter().enumerate().all(|(i, im)| im.vertex == id.source().vertex_at(i)));
        assert!(c2_rough_isometry(2, &rat(2), 3, &rat(3), 3).is_err());
    }

    fn injective_per_level(m: &TreeMap, step: usize) -> bool {
        (0..=m.source().depth()).step_by(step).all(|l| {
            let mut seen = std::collections::HashSet::new();
            m.source().level_range(l).all(|i| seen.insert(m.images()[i].clone()))
        })
    }

    #[test]
    fn c1_exponents_and_plateau() {
        for (pp, qq) in [(2u64, 2u64), (3, 3)] {
            let values: Vec<LogHeight> = (4..=8)
                .map(|d| {
                    let e = c1_embedding(2, &rat(4), pp, &rat(qq), d).unwrap();
                    assert_eq!((e.a, e.b), (1, 1));
                    assert!(injective_per_level(&e.map, e.a as usize));
                    distortion_report(&e.map).additive_constant
                })
                .collect();
            assert!(values.iter().all(|v| *v == values[0]), "{pp},{qq}: {values:?}");
        }
        assert!(c1_embedding(2, &rat(2), 2, &rat(2), 3).is_err());
        assert!(c1_embedding(2, &rat(2), 3, &rat(3), 3).is_err());
    }

    #[test]
    fn c1_with_larger_exponents_is_injective() {
        // 5 > 4 and 2^2 > 3 rule out small exponents
        let e = c1_embedding(5, &rat(3), 4, &rat(2), 5).unwrap();
        assert_eq!((e.a, e.b), (2, 3));
        assert!(injective_per_level(&e.map, e.a as usize));
        let e = c1_embedding(3, &rat(2), 2, &rat(2), 6).unwrap_err();
        assert!(matches!(e, Error::Precondition(_)));
    }

    #[test]
    fn heightify_c1() {
        let e = c1_embedding(2, &rat(4), 3, &rat(3), 5).unwrap();
        let h = heightify(&e.map).unwrap();
        assert!(h.map.is_height_preserving());
        assert_eq!(distortion_report(&h.map).height_deviation, LogHeight::zero());
        assert!(h.max_shift <= distortion_report(&e.map).height_deviation);
        let again = heightify(&h.map).unwrap();
        assert_eq!(again.map.images(), h.map.images());
        assert_eq!(again.max_shift, LogHeight::zero());
    }
}
