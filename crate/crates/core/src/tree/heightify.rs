use super::{MapImage, PointHeight, TreeMap, TreeVertex};
use crate::error::{Error, Result};
use crate::heights::LogHeight;

#[derive(Clone, Debug)]
pub struct Heightified {
    pub map: TreeMap,
    /// max distance between a point and its replacement
    pub max_shift: LogHeight,
}

/// Moves every image point to the height of its source vertex: up towards
/// the root when it sits too low, down along zero digits when too high.
pub fn heightify(map: &TreeMap) -> Result<Heightified> {
    let source = map.source();
    let target = map.target();
    let mut max_shift = LogHeight::zero();
    let mut images = Vec::with_capacity(map.images().len());
    for (i, im) in map.images().iter().enumerate() {
        let level = source.vertex_at(i).level();
        let want = map.src_rank(level);
        let have = map.rank(im.height);
        // target level whose edge carries the wanted height
        let l = (0..=target.depth()).find(|l| map.dst_rank(*l) >= want).ok_or_else(|| {
            Error::Truncation(format!("height of level {level} lies below the target truncation"))
        })?;
        let vertex = if want <= have {
            im.vertex.ancestor(l.min(im.vertex.level()))
        } else {
            let mut d = im.vertex.digits().to_vec();
            d.resize(l.max(d.len()), 0);
            TreeVertex(d)
        };
        let shift = map.table().value(want).abs_diff(map.table().value(have));
        if shift > max_shift {
            max_shift = shift;
        }
        let height = if map.dst_rank(l) == want { PointHeight::Target(l) } else { PointHeight::Source(level) };
        images.push(MapImage { vertex, height });
    }
    let map = TreeMap::new(source.clone(), target.clone(), images)?;
    Ok(Heightified { map, max_shift })
}
