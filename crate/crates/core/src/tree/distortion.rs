use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::{TreeMap, TreeVertex};
use crate::heights::LogHeight;

/// Exact distortion constants of a tree map over its materialized vertices.
#[derive(Clone, Debug, Serialize)]
pub struct DistortionReport {
    /// max |d(fx, fy) − d(x, y)|
    pub additive_constant: LogHeight,
    /// max |h(fx) − h(x)|
    pub height_deviation: LogHeight,
    /// max d(fx, fx ∧ fy) over descendants y of x
    pub coarse_order_constant: LogHeight,
    /// (height, largest fibre of an image point at that height)
    pub max_preimage: Vec<(LogHeight, usize)>,
    pub pairs: usize,
    /// a pair realizing the additive constant
    pub witness: Option<(TreeVertex, TreeVertex)>,
}

/// Ranks of `h(x), h(y), h(x∧y), h(fx), h(fy), h(fx∧fy)`.
type Signature = [u32; 6];

pub fn distortion_report(map: &TreeMap) -> DistortionReport {
    let source = map.source();
    let n = source.vertex_count();
    let vertices: Vec<TreeVertex> = source.vertices().collect();
    let images = map.images();
    let rank = |i: usize| map.rank(images[i].height) as u32;
    let src = |l: usize| map.src_rank(l) as u32;

    let mut seen: HashMap<Signature, (usize, usize)> = HashMap::new();
    let mut order: HashMap<[u32; 2], ()> = HashMap::new();
    for i in 0..n {
        let (li, fi) = (vertices[i].level(), rank(i));
        for j in i + 1..n {
            let m = vertices[i].common_prefix_len(&vertices[j]);
            let fm = map.image_meet_rank(&images[i], &images[j]) as u32;
            let sig = [src(li), src(vertices[j].level()), src(m), fi, rank(j), fm];
            seen.entry(sig).or_insert((i, j));
            if m == li {
                order.insert([fi, fm], ());
            }
        }
    }

    let table = map.table();
    let mut additive = LogHeight::zero();
    let mut witness = None;
    let mut sigs: Vec<_> = seen.into_iter().collect();
    sigs.sort();
    for ([a, b, m, fa, fb, fm], (i, j)) in sigs {
        let d = table
            .combine(&[
                (1, fa as usize),
                (1, fb as usize),
                (-2, fm as usize),
                (-1, a as usize),
                (-1, b as usize),
                (2, m as usize),
            ])
            .magnitude;
        if d > additive || witness.is_none() {
            additive = d;
            witness = Some((vertices[i].clone(), vertices[j].clone()));
        }
    }

    let mut height_pairs: Vec<[u32; 2]> = (0..n).map(|i| [src(vertices[i].level()), rank(i)]).collect();
    height_pairs.sort();
    height_pairs.dedup();
    let height_deviation = height_pairs
        .iter()
        .map(|[a, b]| table.value(*a as usize).abs_diff(table.value(*b as usize)))
        .max()
        .unwrap_or_else(LogHeight::zero);

    let coarse_order_constant = order
        .keys()
        .map(|[f, m]| table.combine(&[(1, *f as usize), (-1, *m as usize)]).magnitude)
        .max()
        .unwrap_or_else(LogHeight::zero);

    let mut per_height: BTreeMap<usize, usize> = BTreeMap::new();
    for ((_, r), members) in map.fibres() {
        let e = per_height.entry(r).or_insert(0);
        *e = (*e).max(members.len());
    }
    let max_preimage = per_height.into_iter().map(|(r, c)| (table.value(r).clone(), c)).collect();

    DistortionReport {
        additive_constant: additive,
        height_deviation,
        coarse_order_constant,
        max_preimage,
        pairs: n * n.saturating_sub(1) / 2,
        witness,
    }
}

/// Exact value of a signed sum of table heights, cached by its terms.
struct Values<'a> {
    map: &'a TreeMap,
    cache: HashMap<Vec<(i64, usize)>, LogHeight>,
}

impl Values<'_> {
    fn get(&mut self, terms: Vec<(i64, usize)>) -> LogHeight {
        let table = self.map.table();
        self.cache.entry(terms).or_insert_with_key(|t| table.combine(t).magnitude).clone()
    }

    /// Whether `h(a) − 2h(b) < h(c) − 2h(d)`.
    fn less(&self, (a, b): (usize, usize), (c, d): (usize, usize)) -> bool {
        self.map.table().combine(&[(1, a), (-2, b), (-1, c), (2, d)]).negative
    }
}

#[derive(Default)]
struct Node {
    /// lowest and highest image point on the edge above the vertex
    att: Option<(usize, usize)>,
    /// lowest image point strictly below the vertex
    below: Option<usize>,
}

impl Node {
    fn lowest(&self) -> Option<usize> {
        match (self.att, self.below) {
            (Some((a, _)), Some(b)) => Some(a.min(b)),
            (a, b) => a.map(|x| x.0).or(b),
        }
    }
}

/// Largest distance from a target vertex no higher than the source
/// truncation to the nearest image point.
///
/// Only ancestors of image points are visited. Below any other vertex the
/// distance grows with depth, so each image-free subtree is settled by its
/// deepest admissible level.
pub fn coarse_surjectivity(map: &TreeMap) -> LogHeight {
    let target = map.target();
    let top = map.src_rank(map.source().depth());
    let Some(deepest) = (0..=target.depth()).take_while(|l| map.dst_rank(*l) <= top).last() else {
        return LogHeight::zero();
    };
    let mut nodes: HashMap<TreeVertex, Node> = HashMap::new();
    for im in map.images() {
        let r = map.rank(im.height);
        let n = nodes.entry(im.vertex.clone()).or_default();
        n.att = Some(n.att.map_or((r, r), |(lo, hi)| (lo.min(r), hi.max(r))));
        for l in 0..im.vertex.level() {
            nodes.entry(im.vertex.ancestor(l)).or_default();
        }
    }
    let mut order: Vec<TreeVertex> = nodes.keys().cloned().collect();
    order.sort_by_key(|v| std::cmp::Reverse(v.level()));
    for v in &order {
        if let Some(parent) = v.parent() {
            let low = nodes[v].lowest();
            let p = nodes.get_mut(&parent).expect("ancestors are present");
            p.below = match (p.below, low) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
        }
    }

    let mut values = Values { map, cache: HashMap::new() };
    let mut worst = LogHeight::zero();
    let mut raise = |h: LogHeight| {
        if h > worst {
            worst = h;
        }
    };
    // (vertex, highest image point on the root path above it, best `h(p) − 2h(u)` off the path)
    let mut stack: Vec<(TreeVertex, Option<usize>, Option<(usize, usize)>)> = vec![(TreeVertex::root(), None, None)];
    while let Some((w, path, off)) = stack.pop() {
        let node = &nodes[&w];
        let path = path.max(node.att.map(|a| a.1));
        let rw = map.dst_rank(w.level());
        if w.level() > deepest {
            continue;
        }
        let mut cands = Vec::new();
        if let Some(b) = node.below {
            cands.push(vec![(1, b), (-1, rw)]);
        }
        if let Some(p) = path {
            cands.push(vec![(1, rw), (-1, p)]);
        }
        if let Some((p, u)) = off {
            cands.push(vec![(1, rw), (1, p), (-2, u)]);
        }
        if let Some(d) = cands.into_iter().map(|t| values.get(t)).min() {
            raise(d);
        }
        if w.level() == target.depth() {
            continue;
        }
        let kids: Vec<(TreeVertex, usize)> = (0..target.branching(w.level()))
            .map(|c| w.child(c))
            .filter_map(|c| nodes.get(&c).and_then(Node::lowest).map(|low| (c, low)))
            .collect();
        let mut sorted: Vec<usize> = kids.iter().map(|k| k.1).collect();
        sorted.sort();
        let off_for = |excluded: Option<usize>| {
            let other = match excluded {
                Some(x) if sorted[0] == x => sorted.get(1).copied(),
                _ => sorted.first().copied(),
            };
            match (off, other.map(|o| (o, rw))) {
                (Some(a), Some(b)) => Some(if values.less(b, a) { b } else { a }),
                (a, b) => a.or(b),
            }
        };
        for (c, low) in &kids {
            stack.push((c.clone(), path, off_for(Some(*low))));
        }
        let free = target.branching(w.level()) as usize > kids.len();
        if free && w.level() < deepest {
            // an image-free child: the farthest point is at the deepest level
            let rd = map.dst_rank(deepest);
            let mut cands = Vec::new();
            if let Some(p) = path {
                cands.push(vec![(1, rd), (-1, p)]);
            }
            if let Some((p, u)) = off_for(None) {
                cands.push(vec![(1, rd), (1, p), (-2, u)]);
            }
            if let Some(d) = cands.into_iter().map(|t| values.get(t)).min() {
                raise(d);
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::super::{c1_embedding, c2_rough_isometry, IsotropicTreeSpec, MapImage, Tree};
    use super::*;
    use crate::pebble::rat;

    /// Nearest image by scanning every target vertex against every image.
    fn surjectivity_by_scan(map: &TreeMap) -> LogHeight {
        let top = map.src_rank(map.source().depth());
        let mut worst = LogHeight::zero();
        for l in (0..=map.target().depth()).take_while(|l| map.dst_rank(*l) <= top) {
            for w in map.target().vertices_at(l) {
                let at_w = MapImage::at_vertex(w);
                let best = map
                    .images()
                    .iter()
                    .map(|im| {
                        let t = [(1, map.dst_rank(l)), (1, map.rank(im.height)), (-2, map.image_meet_rank(&at_w, im))];
                        map.table().combine(&t).magnitude
                    })
                    .min()
                    .unwrap();
                worst = worst.max(best);
            }
        }
        worst
    }

    #[test]
    fn skeleton_pass_matches_scan() {
        let mut maps = vec![
            c2_rough_isometry(2, &rat(2), 4, &rat(4), 5).unwrap(),
            c2_rough_isometry(4, &rat(4), 2, &rat(2), 3).unwrap(),
            c1_embedding(2, &rat(4), 2, &rat(2), 4).unwrap().map,
            c1_embedding(2, &rat(4), 3, &rat(3), 3).unwrap().map,
        ];
        let src = Tree::from_spec(&IsotropicTreeSpec::regular(2, 2, 3)).unwrap();
        let dst = Tree::from_spec(&IsotropicTreeSpec::regular(3, 2, 4)).unwrap();
        let shifted = src.vertices().map(|v| TreeVertex([v.digits(), &[2]].concat())).collect();
        maps.push(TreeMap::from_vertices(src.clone(), dst.clone(), shifted).unwrap());
        let collapsed = src.vertices().map(|v| v.ancestor(v.level().min(1))).collect();
        maps.push(TreeMap::from_vertices(src, dst, collapsed).unwrap());
        for m in &maps {
            assert_eq!(coarse_surjectivity(m), surjectivity_by_scan(m));
        }
    }
}
