//! Truncated isotropic rooted trees, maps between them, and the constructions
//! that embed one tree in another.

mod constructions;
mod distortion;
mod heightify;
mod map;
mod waterfall;

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::heights::{combine, LogHeight, SignedHeight};
use crate::seq::{parse_branching_seq, parse_rational_seq, parse_seq, SeqSpec};

pub use constructions::{c1_embedding, c2_rough_isometry, power_map, power_rough_isometry, C1Embedding};
pub use distortion::{coarse_surjectivity, distortion_report, DistortionReport};
pub use heightify::{heightify, Heightified};
pub use map::{MapImage, PointHeight, TreeMap};
pub use waterfall::{blue_yellow_probe, check_distributive, distributive_waterfall, preimage_profile};

pub const DEFAULT_VERTEX_BUDGET: u128 = 200_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsotropicTreeSpec {
    pub p: SeqSpec<u32>,
    pub q: SeqSpec<BigRational>,
    pub depth: usize,
}

impl IsotropicTreeSpec {
    pub fn new(p: SeqSpec<u32>, q: SeqSpec<BigRational>, depth: usize) -> Self {
        Self { p, q, depth }
    }

    pub fn regular(p: u32, q: u64, depth: usize) -> Self {
        Self::new(SeqSpec::constant(p), SeqSpec::constant(BigRational::from_integer(q.into())), depth)
    }

    pub fn parse(p: &str, q: &str, depth: usize) -> Result<Self> {
        Ok(Self::new(parse_branching_seq(p)?, parse_rational_seq(q)?, depth))
    }
}

/// A vertex as its digit word; the empty word is the root.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct TreeVertex(pub Vec<u32>);

impl TreeVertex {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn digits(&self) -> &[u32] {
        &self.0
    }

    pub fn level(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn parent(&self) -> Option<TreeVertex> {
        (!self.is_root()).then(|| Self(self.0[..self.0.len() - 1].to_vec()))
    }

    pub fn child(&self, c: u32) -> TreeVertex {
        let mut d = self.0.clone();
        d.push(c);
        Self(d)
    }

    pub fn ancestor(&self, level: usize) -> TreeVertex {
        Self(self.0[..level].to_vec())
    }

    /// True for `self == other` as well.
    pub fn is_ancestor_of(&self, other: &TreeVertex) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn common_prefix_len(&self, other: &TreeVertex) -> usize {
        lcp_len(&self.0, &other.0)
    }

    pub fn meet(&self, other: &TreeVertex) -> TreeVertex {
        self.ancestor(self.common_prefix_len(other))
    }
}

pub(crate) fn lcp_len(a: &[u32], b: &[u32]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

impl fmt::Display for TreeVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_root() {
            return write!(f, "-");
        }
        let s: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", s.join("."))
    }
}

impl FromStr for TreeVertex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "-" {
            return Ok(Self::root());
        }
        s.split('.')
            .map(|d| d.parse::<u32>().map_err(|_| Error::Parse(format!("bad vertex `{s}`"))))
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

impl Serialize for TreeVertex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// A truncated isotropic tree: level `i` vertices have `branching(i+1)`
/// children, joined by edges of length `edge(i+1)`.
#[derive(Clone, Debug)]
pub struct Tree {
    branching: SeqSpec<u32>,
    edges: SeqSpec<LogHeight>,
    depth: usize,
    heights: Vec<LogHeight>,
    level_start: Vec<usize>,
}

impl Tree {
    pub fn new(branching: SeqSpec<u32>, edges: SeqSpec<LogHeight>, depth: usize) -> Result<Self> {
        Self::with_budget(branching, edges, depth, DEFAULT_VERTEX_BUDGET)
    }

    pub fn with_budget(branching: SeqSpec<u32>, edges: SeqSpec<LogHeight>, depth: usize, budget: u128) -> Result<Self> {
        if let Some(p) = branching.slots().find(|p| **p < 2) {
            return Err(Error::InvalidValue(format!("branching number {p} is < 2")));
        }
        if edges.slots().any(|e| e.is_zero()) {
            return Err(Error::InvalidValue("edge lengths must be positive".into()));
        }
        let mut level_start = vec![0usize];
        let mut size: u128 = 1;
        let mut total: u128 = 0;
        for l in 0..=depth {
            total += size;
            if total > budget {
                return Err(Error::Budget { needed: total, budget });
            }
            level_start.push(total as usize);
            if l < depth {
                size *= *branching.get(l as u64 + 1) as u128;
            }
        }
        let mut heights = vec![LogHeight::zero()];
        for l in 1..=depth {
            let h = heights[l - 1].add(edges.get(l as u64));
            heights.push(h);
        }
        Ok(Self { branching, edges, depth, heights, level_start })
    }

    pub fn from_spec(spec: &IsotropicTreeSpec) -> Result<Self> {
        let edges = spec.q.try_map(LogHeight::log)?;
        Self::new(spec.p.clone(), edges, spec.depth)
    }

    /// `R(p, q)` with every edge of the given length.
    pub fn regular(p: u32, edge: LogHeight, depth: usize) -> Result<Self> {
        Self::new(SeqSpec::constant(p), SeqSpec::constant(edge), depth)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn branching_seq(&self) -> &SeqSpec<u32> {
        &self.branching
    }

    pub fn edge_seq(&self) -> &SeqSpec<LogHeight> {
        &self.edges
    }

    /// Number of children of a vertex at `level`.
    pub fn branching(&self, level: usize) -> u32 {
        *self.branching.get(level as u64 + 1)
    }

    /// Length of the edge from `level - 1` to `level`.
    pub fn edge(&self, level: usize) -> &LogHeight {
        self.edges.get(level as u64)
    }

    /// Height of `level`, which may lie below the truncation.
    pub fn level_height(&self, level: usize) -> LogHeight {
        if level <= self.depth {
            return self.heights[level].clone();
        }
        let mut h = self.heights[self.depth].clone();
        for l in self.depth + 1..=level {
            h = h.add(self.edge(l));
        }
        h
    }

    pub fn height(&self, v: &TreeVertex) -> LogHeight {
        self.level_height(v.level())
    }

    pub fn vertex_count(&self) -> usize {
        self.level_start[self.depth + 1]
    }

    pub fn level_size(&self, level: usize) -> usize {
        self.level_start[level + 1] - self.level_start[level]
    }

    pub fn level_range(&self, level: usize) -> std::ops::Range<usize> {
        self.level_start[level]..self.level_start[level + 1]
    }

    pub fn contains(&self, v: &TreeVertex) -> bool {
        v.level() <= self.depth && v.0.iter().enumerate().all(|(i, d)| *d < self.branching(i))
    }

    pub fn index(&self, v: &TreeVertex) -> usize {
        debug_assert!(self.contains(v), "vertex {v} outside the tree");
        let mut x = 0usize;
        for (i, d) in v.0.iter().enumerate() {
            x = x * self.branching(i) as usize + *d as usize;
        }
        self.level_start[v.level()] + x
    }

    pub fn vertex_at(&self, index: usize) -> TreeVertex {
        let level = self.level_start.partition_point(|s| *s <= index) - 1;
        let mut x = index - self.level_start[level];
        let mut digits = vec![0u32; level];
        for i in (0..level).rev() {
            let p = self.branching(i) as usize;
            digits[i] = (x % p) as u32;
            x /= p;
        }
        TreeVertex(digits)
    }

    /// All vertices, level by level, each level in digit order.
    pub fn vertices(&self) -> impl Iterator<Item = TreeVertex> + '_ {
        (0..self.vertex_count()).map(|i| self.vertex_at(i))
    }

    pub fn vertices_at(&self, level: usize) -> impl Iterator<Item = TreeVertex> + '_ {
        self.level_range(level).map(|i| self.vertex_at(i))
    }

    /// Children of `v` (empty at the truncation).
    pub fn children(&self, v: &TreeVertex) -> Vec<TreeVertex> {
        if v.level() >= self.depth {
            return Vec::new();
        }
        (0..self.branching(v.level())).map(|c| v.child(c)).collect()
    }

    pub fn distance(&self, v: &TreeVertex, w: &TreeVertex) -> LogHeight {
        let m = self.level_height(v.common_prefix_len(w));
        combine([(1, &self.height(v)), (1, &self.height(w)), (-2, &m)]).magnitude
    }

    /// Least level whose height is at least `h`, if within `max_level`.
    pub fn level_at_or_above(&self, h: &LogHeight, max_level: usize) -> Option<usize> {
        let mut acc = LogHeight::zero();
        for l in 0..=max_level {
            if l > 0 {
                acc = acc.add(self.edge(l));
            }
            if acc >= *h {
                return Some(l);
            }
        }
        None
    }

    pub fn header(&self) -> String {
        format!(
            "branching={} edges={} depth={}",
            self.branching,
            self.edges,
            self.depth
        )
    }

    pub fn parse_header(s: &str) -> Result<Self> {
        let mut branching = None;
        let mut edges = None;
        let mut depth = None;
        for part in s.split_whitespace() {
            match part.split_once('=') {
                Some(("branching", v)) => branching = Some(parse_branching_seq(v)?),
                Some(("edges", v)) => edges = Some(parse_seq(v, |t| t.parse::<LogHeight>())?),
                Some(("depth", v)) => {
                    depth = Some(v.parse::<usize>().map_err(|_| Error::Parse(format!("bad depth `{v}`")))?)
                }
                _ => return Err(Error::Parse(format!("bad tree header field `{part}`"))),
            }
        }
        let missing = |f: &str| Error::Parse(format!("tree header lacks `{f}`"));
        Self::new(
            branching.ok_or_else(|| missing("branching"))?,
            edges.ok_or_else(|| missing("edges"))?,
            depth.ok_or_else(|| missing("depth"))?,
        )
    }

    /// Same branching and edge lengths on every level up to `depth`.
    pub fn same_shape(&self, other: &Tree) -> bool {
        self.depth == other.depth
            && (1..=self.depth).all(|l| self.branching(l - 1) == other.branching(l - 1) && self.edge(l) == other.edge(l))
    }
}

/// Distinct heights in exact increasing order, addressed by rank.
#[derive(Clone, Debug)]
pub struct HeightTable {
    values: Vec<LogHeight>,
}

impl HeightTable {
    pub fn new(heights: impl IntoIterator<Item = LogHeight>) -> Self {
        let mut values: Vec<LogHeight> = heights.into_iter().collect();
        values.sort();
        values.dedup();
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, rank: usize) -> &LogHeight {
        &self.values[rank]
    }

    pub fn values(&self) -> &[LogHeight] {
        &self.values
    }

    pub fn rank(&self, h: &LogHeight) -> Option<usize> {
        self.values.binary_search(h).ok()
    }

    /// `Σ kᵢ·value(rᵢ)`.
    pub fn combine(&self, terms: &[(i64, usize)]) -> SignedHeight {
        combine(terms.iter().map(|(k, r)| (*k, &self.values[*r])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> TreeVertex {
        s.parse().unwrap()
    }

    #[test]
    fn distances_in_binary_tree() {
        let t = Tree::from_spec(&IsotropicTreeSpec::regular(2, 2, 3)).unwrap();
        let log2: LogHeight = "1*log(2)".parse().unwrap();
        assert_eq!(t.distance(&TreeVertex::root(), &v("0.1.1")), log2.times(3));
        assert_eq!(t.distance(&v("0"), &v("1")), log2.times(2));
        assert_eq!(t.distance(&v("0.0"), &v("0.1")), log2.times(2));
        assert_eq!(t.distance(&v("0.0"), &v("0.0")), LogHeight::zero());
    }

    #[test]
    fn indexing_round_trips() {
        let t = Tree::from_spec(&IsotropicTreeSpec::parse("2;3", "2", 4).unwrap()).unwrap();
        assert_eq!(t.vertex_count(), 1 + 2 + 6 + 18 + 54);
        for i in 0..t.vertex_count() {
            assert_eq!(t.index(&t.vertex_at(i)), i);
        }
        assert_eq!(t.vertex_at(3), v("0.0"));
        assert!(!t.contains(&v("2")));
        assert!(t.contains(&v("1.2")));
    }

    #[test]
    fn budget_is_enforced() {
        let spec = IsotropicTreeSpec::regular(2, 2, 20);
        assert!(matches!(Tree::from_spec(&spec), Err(Error::Budget { .. })));
    }

    #[test]
    fn header_round_trip() {
        let t = Tree::from_spec(&IsotropicTreeSpec::parse("6;3", "2;4", 3).unwrap()).unwrap();
        let back = Tree::parse_header(&t.header()).unwrap();
        assert!(t.same_shape(&back));
        assert_eq!(t.header(), "branching=6;3 edges=1*log(2);1*log(4) depth=3");
    }

    #[test]
    fn vertex_text() {
        assert_eq!(TreeVertex::root().to_string(), "-");
        assert_eq!(v("3.10.0").digits(), &[3, 10, 0]);
        assert_eq!(v("-"), TreeVertex::root());
        assert!(v("1").is_ancestor_of(&v("1.0")));
        assert_eq!(v("1.0.1").meet(&v("1.0.0")), v("1.0"));
    }
}
