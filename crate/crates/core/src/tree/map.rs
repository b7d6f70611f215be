use std::collections::HashMap;
use std::fmt::Write as _;

use super::{HeightTable, Tree, TreeVertex};
use crate::error::{Error, Result};
use crate::heights::LogHeight;

/// The height of an image point, named by a level of one of the two trees.
/// Source levels may lie below the source truncation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PointHeight {
    Source(usize),
    Target(usize),
}

/// A point of the target tree: the endpoint of the edge it lies on (or the
/// root) and its height.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MapImage {
    pub vertex: TreeVertex,
    pub height: PointHeight,
}

impl MapImage {
    pub fn at_vertex(vertex: TreeVertex) -> Self {
        let l = vertex.level();
        Self { vertex, height: PointHeight::Target(l) }
    }
}

/// A map from the vertices of a truncated source tree to points of a
/// truncated target tree, with every height ranked exactly.
#[derive(Clone, Debug)]
pub struct TreeMap {
    source: Tree,
    target: Tree,
    images: Vec<MapImage>,
    table: HeightTable,
    src_rank: Vec<usize>,
    dst_rank: Vec<usize>,
}

impl TreeMap {
    /// `images[i]` is the image of `source.vertex_at(i)`.
    pub fn new(source: Tree, target: Tree, images: Vec<MapImage>) -> Result<Self> {
        if images.len() != source.vertex_count() {
            return Err(Error::Precondition(format!(
                "map has {} images for {} source vertices",
                images.len(),
                source.vertex_count()
            )));
        }
        let max_src = images
            .iter()
            .filter_map(|m| match m.height {
                PointHeight::Source(l) => Some(l),
                PointHeight::Target(_) => None,
            })
            .max()
            .unwrap_or(0)
            .max(source.depth());
        let src_heights: Vec<LogHeight> = (0..=max_src).map(|l| source.level_height(l)).collect();
        let dst_heights: Vec<LogHeight> = (0..=target.depth()).map(|l| target.level_height(l)).collect();
        let table = HeightTable::new(src_heights.iter().chain(&dst_heights).cloned());
        let src_rank = src_heights.iter().map(|h| table.rank(h).expect("interned")).collect();
        let dst_rank = dst_heights.iter().map(|h| table.rank(h).expect("interned")).collect();
        let map = Self { source, target, images, table, src_rank, dst_rank };
        map.validate()?;
        Ok(map)
    }

    fn validate(&self) -> Result<()> {
        for (i, m) in self.images.iter().enumerate() {
            let bad = |why: &str| {
                Error::Precondition(format!("image of {} is {} ({why})", self.source.vertex_at(i), m.vertex))
            };
            if !self.target.contains(&m.vertex) {
                return Err(bad("outside the target truncation"));
            }
            if let PointHeight::Target(l) = m.height {
                if l > self.target.depth() {
                    return Err(bad("height below the target truncation"));
                }
            }
            let r = self.rank(m.height);
            let l = m.vertex.level();
            let ok = if l == 0 { r == 0 } else { self.dst_rank[l - 1] < r && r <= self.dst_rank[l] };
            if !ok {
                return Err(bad("height not on the edge above the vertex"));
            }
        }
        Ok(())
    }

    /// A map whose images are all target vertices.
    pub fn from_vertices(source: Tree, target: Tree, images: Vec<TreeVertex>) -> Result<Self> {
        let images = images.into_iter().map(MapImage::at_vertex).collect();
        Self::new(source, target, images)
    }

    pub fn source(&self) -> &Tree {
        &self.source
    }

    pub fn target(&self) -> &Tree {
        &self.target
    }

    pub fn images(&self) -> &[MapImage] {
        &self.images
    }

    pub fn image(&self, v: &TreeVertex) -> &MapImage {
        &self.images[self.source.index(v)]
    }

    pub fn table(&self) -> &HeightTable {
        &self.table
    }

    pub fn rank(&self, h: PointHeight) -> usize {
        match h {
            PointHeight::Source(l) => self.src_rank[l],
            PointHeight::Target(l) => self.dst_rank[l],
        }
    }

    pub fn src_rank(&self, level: usize) -> usize {
        self.src_rank[level]
    }

    pub fn dst_rank(&self, level: usize) -> usize {
        self.dst_rank[level]
    }

    pub fn height_of(&self, h: PointHeight) -> &LogHeight {
        self.table.value(self.rank(h))
    }

    /// Rank of the meet of two image points.
    pub fn image_meet_rank(&self, a: &MapImage, b: &MapImage) -> usize {
        let l = a.vertex.common_prefix_len(&b.vertex);
        self.rank(a.height).min(self.rank(b.height)).min(self.dst_rank[l])
    }

    pub fn is_vertex_map(&self) -> bool {
        self.images.iter().all(|m| self.rank(m.height) == self.dst_rank[m.vertex.level()])
    }

    pub fn is_height_preserving(&self) -> bool {
        (0..self.images.len()).all(|i| {
            let l = self.source.vertex_at(i).level();
            self.rank(self.images[i].height) == self.src_rank[l]
        })
    }

    /// Images of descendants lie below images of ancestors.
    pub fn is_order_preserving(&self) -> bool {
        (1..self.images.len()).all(|i| {
            let v = self.source.vertex_at(i);
            let parent = &self.images[self.source.index(&v.parent().expect("non-root"))];
            let child = &self.images[i];
            parent.vertex.is_ancestor_of(&child.vertex) && self.rank(parent.height) <= self.rank(child.height)
        })
    }

    pub fn is_waterfall(&self) -> bool {
        self.images[0].vertex.is_root() && self.is_height_preserving() && self.is_order_preserving()
    }

    /// `next ∘ self` for maps whose images are target vertices.
    pub fn compose(&self, next: &TreeMap) -> Result<TreeMap> {
        if !self.is_vertex_map() {
            return Err(Error::Precondition("composition needs a vertex-valued first map".into()));
        }
        if !self.target.same_shape(&next.source) {
            return Err(Error::Precondition("target and source trees differ".into()));
        }
        let images = self
            .images
            .iter()
            .map(|m| {
                let n = next.image(&m.vertex);
                let height = match n.height {
                    PointHeight::Target(l) => PointHeight::Target(l),
                    PointHeight::Source(_) => {
                        return Err(Error::Precondition("composition needs a vertex-valued second map".into()))
                    }
                };
                Ok(MapImage { vertex: n.vertex.clone(), height })
            })
            .collect::<Result<Vec<_>>>()?;
        TreeMap::new(self.source.clone(), next.target.clone(), images)
    }

    /// Source vertices grouped by image point.
    pub fn fibres(&self) -> HashMap<(TreeVertex, usize), Vec<usize>> {
        let mut out: HashMap<(TreeVertex, usize), Vec<usize>> = HashMap::new();
        for (i, m) in self.images.iter().enumerate() {
            out.entry((m.vertex.clone(), self.rank(m.height))).or_default().push(i);
        }
        out
    }

    /// Line format: two header lines, then `src -> dst` or
    /// `src -> dst @ height` for points inside an edge.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "source {}", self.source.header()).unwrap();
        writeln!(s, "target {}", self.target.header()).unwrap();
        for (i, m) in self.images.iter().enumerate() {
            let v = self.source.vertex_at(i);
            let r = self.rank(m.height);
            if r == self.dst_rank[m.vertex.level()] {
                writeln!(s, "{v} -> {}", m.vertex).unwrap();
            } else {
                writeln!(s, "{v} -> {} @ {}", m.vertex, self.table.value(r)).unwrap();
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<TreeMap> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut header = |tag: &str| -> Result<Tree> {
            let line = lines.next().ok_or_else(|| Error::Parse(format!("missing `{tag}` header")))?;
            let rest = line
                .strip_prefix(tag)
                .ok_or_else(|| Error::Parse(format!("expected `{tag}` header, got `{line}`")))?;
            Tree::parse_header(rest)
        };
        let source = header("source")?;
        let target = header("target")?;
        let mut images: Vec<Option<MapImage>> = vec![None; source.vertex_count()];
        for line in lines {
            let (lhs, rhs) = line.split_once("->").ok_or_else(|| Error::Parse(format!("bad map line `{line}`")))?;
            let v: TreeVertex = lhs.parse()?;
            if !source.contains(&v) {
                return Err(Error::Parse(format!("{v} is not a source vertex")));
            }
            let (w, h) = match rhs.split_once('@') {
                Some((w, h)) => (w.parse::<TreeVertex>()?, Some(h.parse::<LogHeight>()?)),
                None => (rhs.parse::<TreeVertex>()?, None),
            };
            let height = match h {
                None => PointHeight::Target(w.level()),
                Some(h) => locate_height(&source, &target, &h)?,
            };
            images[source.index(&v)] = Some(MapImage { vertex: w, height });
        }
        let images = images
            .into_iter()
            .enumerate()
            .map(|(i, m)| m.ok_or_else(|| Error::Parse(format!("no image for {}", source.vertex_at(i)))))
            .collect::<Result<Vec<_>>>()?;
        TreeMap::new(source, target, images)
    }
}

fn locate_height(source: &Tree, target: &Tree, h: &LogHeight) -> Result<PointHeight> {
    if let Some(l) = (0..=target.depth()).find(|l| target.level_height(*l) == *h) {
        return Ok(PointHeight::Target(l));
    }
    let max = source.depth() + target.depth() + 1;
    match source.level_at_or_above(h, max) {
        Some(l) if source.level_height(l) == *h => Ok(PointHeight::Source(l)),
        _ => Err(Error::Parse(format!("height {h} is not a level height of either tree"))),
    }
}

#[cfg(test)]
mod tests {
    use super::super::IsotropicTreeSpec;
    use super::*;

    fn identity(p: u32, q: u64, d: usize) -> TreeMap {
        let t = Tree::from_spec(&IsotropicTreeSpec::regular(p, q, d)).unwrap();
        let images = t.vertices().collect();
        TreeMap::from_vertices(t.clone(), t, images).unwrap()
    }

    #[test]
    fn identity_properties() {
        let m = identity(2, 2, 3);
        assert!(m.is_waterfall() && m.is_vertex_map());
        assert_eq!(m.table().len(), 4);
    }

    #[test]
    fn rejects_heights_off_the_edge() {
        let t = Tree::from_spec(&IsotropicTreeSpec::regular(2, 2, 2)).unwrap();
        let mut images: Vec<MapImage> = t.vertices().map(MapImage::at_vertex).collect();
        images[1].height = PointHeight::Target(2);
        assert!(TreeMap::new(t.clone(), t.clone(), images).is_err());
        let short: Vec<MapImage> = vec![MapImage::at_vertex(TreeVertex::root())];
        assert!(TreeMap::new(t.clone(), t, short).is_err());
    }

    #[test]
    fn text_round_trip() {
        let m = identity(3, 2, 2);
        let back = TreeMap::from_text(&m.to_text()).unwrap();
        assert_eq!(back.images(), m.images());
        assert_eq!(back.to_text(), m.to_text());
        assert!(TreeMap::from_text("source branching=2 edges=1*log(2) depth=1\n").is_err());
    }

    #[test]
    fn interior_points_serialize_with_height() {
        // R(2,3) into R(2,2): log 3 lies inside the second target edge
        let src = Tree::from_spec(&IsotropicTreeSpec::regular(2, 3, 1)).unwrap();
        let dst = Tree::from_spec(&IsotropicTreeSpec::regular(2, 2, 2)).unwrap();
        let images = vec![
            MapImage::at_vertex(TreeVertex::root()),
            MapImage { vertex: TreeVertex(vec![0, 0]), height: PointHeight::Source(1) },
            MapImage { vertex: TreeVertex(vec![1, 1]), height: PointHeight::Source(1) },
        ];
        let m = TreeMap::new(src, dst, images).unwrap();
        assert!(!m.is_vertex_map());
        let text = m.to_text();
        assert!(text.contains("0 -> 0.0 @ 1*log(3)"), "{text}");
        let back = TreeMap::from_text(&text).unwrap();
        assert_eq!(back.to_text(), text);
    }
}
