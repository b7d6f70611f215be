//! Finite-precision symbolic Cantor sets with the ultrametric
//! `ρ(x, y) = q^(-N)`, clones, and the passage between tree maps and word
//! maps.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::heights::{combine, LogHeight};
use crate::seq::{fmt_rational, parse_rational, SeqSpec};
use crate::tree::{lcp_len, MapImage, Tree, TreeMap, TreeVertex};

/// `Z(p, q)`: words over `p` letters with `ρ = q^(-common prefix)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CantorSpace {
    pub p: u32,
    pub q: BigRational,
}

impl CantorSpace {
    pub fn new(p: u32, q: BigRational) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidValue(format!("alphabet size {p} is < 2")));
        }
        if q <= BigRational::one() {
            return Err(Error::InvalidValue(format!("base {q} is not > 1")));
        }
        Ok(Self { p, q })
    }

    pub fn contains(&self, w: &FiniteWord) -> bool {
        w.0.iter().all(|d| *d < self.p)
    }

    /// `q^(-n)`.
    pub fn scale(&self, n: usize) -> BigRational {
        Pow::pow(&self.q, BigInt::from(n)).recip()
    }

    pub fn word_count(&self, len: usize) -> Result<usize> {
        (self.p as usize)
            .checked_pow(len as u32)
            .ok_or_else(|| Error::Budget { needed: u128::MAX, budget: usize::MAX as u128 })
    }

    /// Index of a word among words of its length, in lexicographic order.
    pub fn word_index(&self, w: &FiniteWord) -> usize {
        w.0.iter().fold(0usize, |acc, d| acc * self.p as usize + *d as usize)
    }

    pub fn word_at(&self, len: usize, mut index: usize) -> FiniteWord {
        let mut digits = vec![0u32; len];
        for slot in digits.iter_mut().rev() {
            *slot = (index % self.p as usize) as u32;
            index /= self.p as usize;
        }
        FiniteWord(digits)
    }

    pub fn words(&self, len: usize) -> Result<impl Iterator<Item = FiniteWord> + '_> {
        let n = self.word_count(len)?;
        Ok((0..n).map(move |i| self.word_at(len, i)))
    }

    fn header(&self) -> String {
        format!("p={} q={}", self.p, fmt_rational(&self.q))
    }
}

/// A point of `Z(p, q)` known to a finite number of digits.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct FiniteWord(pub Vec<u32>);

impl FiniteWord {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn prefix(&self, n: usize) -> FiniteWord {
        FiniteWord(self.0[..n].to_vec())
    }

    pub fn vertex(&self) -> TreeVertex {
        TreeVertex(self.0.clone())
    }
}

impl std::fmt::Display for FiniteWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.vertex().fmt(f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CantorDistance {
    #[serde(with = "crate::seq::rational_text")]
    pub value: BigRational,
    /// the words agree to full precision; `value` is then an upper bound
    pub below_resolution: bool,
}

pub fn cantor_distance(space: &CantorSpace, a: &FiniteWord, b: &FiniteWord) -> CantorDistance {
    let n = lcp_len(&a.0, &b.0);
    let below_resolution = n == a.len().min(b.len());
    CantorDistance { value: space.scale(n), below_resolution }
}

/// A bi-infinite word that is zero before `offset` and after the window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QWindow {
    pub offset: i64,
    pub digits: Vec<u32>,
}

impl QWindow {
    pub fn digit(&self, n: i64) -> u32 {
        let i = n - self.offset;
        if i < 0 {
            return 0;
        }
        self.digits.get(i as usize).copied().unwrap_or(0)
    }

    /// First index where the words differ; `None` when they agree everywhere.
    pub fn first_difference(&self, other: &QWindow) -> Option<i64> {
        let lo = self.offset.min(other.offset);
        let hi = (self.offset + self.digits.len() as i64).max(other.offset + other.digits.len() as i64);
        (lo..hi).find(|n| self.digit(*n) != other.digit(*n))
    }

    /// `q^(-N)` with `N` the first differing index, or 0 for equal words.
    pub fn distance(&self, other: &QWindow, q: &BigRational) -> BigRational {
        match self.first_difference(other) {
            None => BigRational::zero(),
            Some(n) => Pow::pow(q, BigInt::from(-n)),
        }
    }
}

/// All words beginning with `prefix`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct CloneSet {
    pub prefix: FiniteWord,
}

impl CloneSet {
    pub fn diameter(&self, space: &CantorSpace) -> BigRational {
        space.scale(self.prefix.len())
    }

    pub fn contains(&self, w: &FiniteWord) -> bool {
        w.0.starts_with(&self.prefix.0)
    }
}

pub fn minimal_clone<'a>(words: impl IntoIterator<Item = &'a FiniteWord>) -> Result<CloneSet> {
    let mut it = words.into_iter();
    let first = it.next().ok_or_else(|| Error::Precondition("minimal clone of an empty set".into()))?;
    let n = it.fold(first.len(), |n, w| n.min(lcp_len(&first.0, &w.0)));
    Ok(CloneSet { prefix: first.prefix(n) })
}

/// A total map from the words of one length to words of another.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordMap {
    pub source: CantorSpace,
    pub target: CantorSpace,
    pub src_len: usize,
    pub dst_len: usize,
    table: Vec<FiniteWord>,
}

impl WordMap {
    /// `table[i]` is the image of the `i`-th source word in lexicographic order.
    pub fn new(source: CantorSpace, target: CantorSpace, src_len: usize, dst_len: usize, table: Vec<FiniteWord>) -> Result<Self> {
        if table.len() != source.word_count(src_len)? {
            return Err(Error::Precondition("word map is not total".into()));
        }
        if let Some(w) = table.iter().find(|w| w.len() != dst_len || !target.contains(w)) {
            return Err(Error::Precondition(format!("image {w} is not a target word of length {dst_len}")));
        }
        Ok(Self { source, target, src_len, dst_len, table })
    }

    pub fn from_fn(
        source: CantorSpace,
        target: CantorSpace,
        src_len: usize,
        dst_len: usize,
        f: impl Fn(&FiniteWord) -> FiniteWord,
    ) -> Result<Self> {
        let table = source.words(src_len)?.map(|w| f(&w)).collect();
        Self::new(source, target, src_len, dst_len, table)
    }

    pub fn identity(space: CantorSpace, len: usize) -> Result<Self> {
        Self::from_fn(space.clone(), space, len, len, |w| w.clone())
    }

    pub fn apply(&self, w: &FiniteWord) -> &FiniteWord {
        &self.table[self.source.word_index(w)]
    }

    pub fn table(&self) -> &[FiniteWord] {
        &self.table
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "source {} len={}", self.source.header(), self.src_len).unwrap();
        writeln!(s, "target {} len={}", self.target.header(), self.dst_len).unwrap();
        for (i, img) in self.table.iter().enumerate() {
            writeln!(s, "{} -> {img}", self.source.word_at(self.src_len, i)).unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut header = |tag: &str| -> Result<(CantorSpace, usize)> {
            let line = lines.next().ok_or_else(|| Error::Parse(format!("missing `{tag}` header")))?;
            let rest = line
                .strip_prefix(tag)
                .ok_or_else(|| Error::Parse(format!("expected `{tag}` header, got `{line}`")))?;
            parse_space_header(rest)
        };
        let (source, src_len) = header("source")?;
        let (target, dst_len) = header("target")?;
        let mut table: Vec<Option<FiniteWord>> = vec![None; source.word_count(src_len)?];
        for line in lines {
            let (l, r) = line.split_once("->").ok_or_else(|| Error::Parse(format!("bad map line `{line}`")))?;
            let w = FiniteWord(l.parse::<TreeVertex>()?.0);
            if w.len() != src_len || !source.contains(&w) {
                return Err(Error::Parse(format!("{w} is not a source word")));
            }
            table[source.word_index(&w)] = Some(FiniteWord(r.parse::<TreeVertex>()?.0));
        }
        let table = table
            .into_iter()
            .enumerate()
            .map(|(i, w)| w.ok_or_else(|| Error::Parse(format!("no image for {}", source.word_at(src_len, i)))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(source, target, src_len, dst_len, table)
    }
}

fn parse_space_header(s: &str) -> Result<(CantorSpace, usize)> {
    let (mut p, mut q, mut len) = (None, None, None);
    for part in s.split_whitespace() {
        let bad = || Error::Parse(format!("bad word map header field `{part}`"));
        match part.split_once('=') {
            Some(("p", v)) => p = Some(v.parse::<u32>().map_err(|_| bad())?),
            Some(("q", v)) => q = Some(parse_rational(v)?),
            Some(("len", v)) => len = Some(v.parse::<usize>().map_err(|_| bad())?),
            _ => return Err(bad()),
        }
    }
    let missing = |f: &str| Error::Parse(format!("word map header lacks `{f}`"));
    let space = CantorSpace::new(p.ok_or_else(|| missing("p"))?, q.ok_or_else(|| missing("q"))?)?;
    Ok((space, len.ok_or_else(|| missing("len"))?))
}

/// The Cantor set at the end of a regular tree whose edges have length
/// `k·log b` with integral `k`.
pub fn boundary_space(tree: &Tree) -> Result<CantorSpace> {
    let (p, edge) = match (tree.branching_seq().constant_value(), tree.edge_seq().constant_value()) {
        (Some(p), Some(e)) => (*p, e.clone()),
        _ => return Err(Error::Precondition("boundary of a non-regular tree".into())),
    };
    if !edge.coeff().is_integer() {
        return Err(Error::Precondition(format!("edge length {edge} is not the log of a rational")));
    }
    CantorSpace::new(p, Pow::pow(edge.base(), edge.coeff().to_integer()))
}

#[derive(Clone, Debug)]
pub struct BoundaryMap {
    pub map: WordMap,
    /// shortest common prefix length over all words before truncation
    pub stable_len: usize,
    /// the depth below the words covers the recommended margin
    pub margin_ok: bool,
}

/// Levels of margin below the word length that a non-order-preserving map
/// should have before its image rays are trusted.
pub fn recommended_margin(additive: &LogHeight, target_edge: &LogHeight) -> usize {
    let mut k = 0u64;
    while target_edge.times(k) < *additive {
        k += 1;
    }
    4 + k as usize
}

/// The boundary word map of a tree map: each word of length `src_len` is
/// followed down its zero-padded ray to the truncation, and its image is the
/// longest prefix shared by the images of that ray. `dst_len` defaults to
/// the shortest such prefix.
pub fn boundary_functor(f: &TreeMap, src_len: usize, dst_len: Option<usize>) -> Result<BoundaryMap> {
    let source = boundary_space(f.source())?;
    let target = boundary_space(f.target())?;
    let depth = f.source().depth();
    if src_len > depth {
        return Err(Error::Precondition(format!("word length {src_len} exceeds the truncation depth {depth}")));
    }
    let mut prefixes = Vec::with_capacity(source.word_count(src_len)?);
    for w in source.words(src_len)? {
        let mut v = w.0.clone();
        let mut common: Option<Vec<u32>> = None;
        loop {
            let img = f.image(&TreeVertex(v.clone())).vertex.digits();
            common = Some(match common {
                None => img.to_vec(),
                Some(c) => c[..lcp_len(&c, img)].to_vec(),
            });
            if v.len() == depth {
                break;
            }
            v.push(0);
        }
        prefixes.push(common.expect("at least one vertex"));
    }
    let stable_len = prefixes.iter().map(Vec::len).min().unwrap_or(0);
    let len = dst_len.unwrap_or(stable_len);
    if len > stable_len {
        return Err(Error::Truncation(format!(
            "requested image length {len} but images are stable only to {stable_len} digits"
        )));
    }
    let margin_ok = f.is_order_preserving() || {
        let a = crate::tree::distortion_report(f).additive_constant;
        depth - src_len >= recommended_margin(&a, f.target().edge(1))
    };
    let table = prefixes.into_iter().map(|mut p| {
        p.truncate(len);
        FiniteWord(p)
    });
    let map = WordMap::new(source, target, src_len, len, table.collect())?;
    Ok(BoundaryMap { map, stable_len, margin_ok })
}

/// The tree map sending each vertex to the vertex of the minimal clone
/// containing the images of the words through it.
pub fn tree_functor(g: &WordMap) -> Result<TreeMap> {
    let tree = |s: &CantorSpace, depth: usize| -> Result<Tree> {
        Tree::with_budget(SeqSpec::constant(s.p), SeqSpec::constant(LogHeight::log(&s.q)?), depth, u128::MAX)
    };
    let source = tree(&g.source, g.src_len)?;
    let target = tree(&g.target, g.dst_len)?;
    let mut images: Vec<Vec<u32>> = vec![Vec::new(); source.vertex_count()];
    for l in (0..=g.src_len).rev() {
        for i in source.level_range(l) {
            images[i] = if l == g.src_len {
                g.table[i - source.level_range(l).start].0.clone()
            } else {
                let v = source.vertex_at(i);
                let kids: Vec<&Vec<u32>> = source.children(&v).iter().map(|c| &images[source.index(c)]).collect();
                let n = kids[1..].iter().fold(kids[0].len(), |n, k| n.min(lcp_len(kids[0], k)));
                kids[0][..n].to_vec()
            };
        }
    }
    let images = images.into_iter().map(|d| MapImage::at_vertex(TreeVertex(d))).collect();
    TreeMap::new(source, target, images)
}

#[derive(Clone, Debug, Serialize)]
pub struct BilipschitzReport {
    /// max ρ'(gx, gy) / ρ(x, y) over resolved pairs
    #[serde(serialize_with = "crate::seq::rational_text::option")]
    pub lambda_upper: Option<BigRational>,
    /// min of the same ratio
    #[serde(serialize_with = "crate::seq::rational_text::option")]
    pub lambda_lower: Option<BigRational>,
    pub pairs: usize,
    /// distinct words with equal images
    pub collisions: usize,
    pub bilipschitz: bool,
}

pub fn bilipschitz_report(g: &WordMap) -> BilipschitzReport {
    let n = g.table.len();
    let words: Vec<FiniteWord> = (0..n).map(|i| g.source.word_at(g.src_len, i)).collect();
    let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
    let mut collisions = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            let a = lcp_len(&words[i].0, &words[j].0);
            let b = lcp_len(&g.table[i].0, &g.table[j].0);
            if b == g.dst_len {
                collisions += 1;
            } else {
                *counts.entry((a, b)).or_insert(0) += 1;
            }
        }
    }
    let ratios: Vec<BigRational> = counts.keys().map(|(a, b)| g.target.scale(*b) / g.source.scale(*a)).collect();
    BilipschitzReport {
        lambda_upper: ratios.iter().max().cloned(),
        lambda_lower: ratios.iter().min().cloned(),
        pairs: n * n.saturating_sub(1) / 2,
        collisions,
        bilipschitz: collisions == 0,
    }
}

/// Whether `λ ≤ e^(k·A + m·B)` holds exactly, for rational `λ > 0`.
pub fn ratio_within(lambda: &BigRational, terms: &[(i64, &LogHeight)]) -> bool {
    if *lambda <= BigRational::one() {
        return true;
    }
    let log = LogHeight::log(lambda).expect("λ > 1");
    let mut all: Vec<(i64, &LogHeight)> = vec![(1, &log)];
    all.extend(terms.iter().map(|(k, h)| (-k, *h)));
    let d = combine(all);
    d.negative || d.magnitude.is_zero()
}

/// `∂(Δg) = g` on every word.
pub fn round_trip_exact(g: &WordMap) -> Result<bool> {
    let back = boundary_functor(&tree_functor(g)?, g.src_len, Some(g.dst_len))?;
    Ok(back.map == *g)
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundTripReport {
    /// max distance from an image of a ray vertex to the image ray
    pub ray_deviation: LogHeight,
    pub vertices: usize,
    pub violations: usize,
    pub witness: Option<TreeVertex>,
}

/// Compares `Δ(∂f)` with `f` on vertices down to `src_len`, against the
/// bound `2B + |h(v) − h(Δ∂f(v))|` with `B` the ray deviation.
pub fn round_trip_bounded(f: &TreeMap, src_len: usize) -> Result<RoundTripReport> {
    let g = boundary_functor(f, src_len, None)?;
    let back = tree_functor(&g.map)?;
    let source = f.source();
    let table = f.table();
    let ray_rank = |im: &MapImage, u: &TreeVertex| {
        let at = MapImage::at_vertex(u.clone());
        f.image_meet_rank(im, &at)
    };
    let mut b = LogHeight::zero();
    for w in g.map.source.words(src_len)? {
        let u = TreeVertex(g.map.apply(&w).0.clone());
        for l in 0..=src_len {
            let im = f.image(&w.prefix(l).vertex());
            let d = table.combine(&[(1, f.rank(im.height)), (-1, ray_rank(im, &u))]).magnitude;
            if d > b {
                b = d;
            }
        }
    }
    let mut violations = 0;
    let mut witness = None;
    let mut vertices = 0;
    for l in 0..=src_len {
        for v in source.vertices_at(l) {
            vertices += 1;
            let w = &back.image(&v).vertex;
            let fv = f.image(&v);
            let hw = f.target().height(w);
            let hv = source.height(&v);
            let hfv = f.height_of(fv.height);
            let m = f.table().value(ray_rank(fv, w));
            let dist = combine([(1, hfv), (1, &hw), (-2, m)]).magnitude;
            let bound = b.times(2).add(&hv.abs_diff(&hw));
            if dist > bound {
                violations += 1;
                witness.get_or_insert(v);
            }
        }
    }
    Ok(RoundTripReport { ray_deviation: b, vertices, violations, witness })
}
