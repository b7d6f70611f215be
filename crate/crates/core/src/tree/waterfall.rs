use std::collections::HashMap;

use super::{IsotropicTreeSpec, MapImage, PointHeight, Tree, TreeMap, TreeVertex};
use crate::error::{Error, Result};
use crate::heights::{EventStream, LogHeight};

/// The canonical distributive waterfall map from `src` to `dst`.
///
/// Walks the merged event line keeping, for each source edge crossing the
/// current height, the target edge it runs along. At a target branching the
/// source edges through one target vertex are dealt to its children in digit
/// order, round robin.
pub fn distributive_waterfall(src: &IsotropicTreeSpec, dst: &IsotropicTreeSpec) -> Result<TreeMap> {
    let source = Tree::from_spec(src)?;
    let target = Tree::from_spec(dst)?;
    let top = source.level_height(source.depth());
    if target.level_height(target.depth()) < top {
        return Err(Error::Truncation(format!(
            "target depth {} does not reach source height {top}",
            target.depth()
        )));
    }
    let mut images: Vec<Option<MapImage>> = vec![None; source.vertex_count()];
    let mut items: Vec<(TreeVertex, TreeVertex)> = vec![(TreeVertex::root(), TreeVertex::root())];
    for ev in EventStream::new(&src.q, &dst.q)? {
        if let Some(a) = ev.blue_index {
            let a = a as usize;
            for (v, w) in &items {
                images[source.index(v)] = Some(MapImage { vertex: w.clone(), height: PointHeight::Source(a) });
            }
            if a == source.depth() {
                break;
            }
        }
        if ev.tag.has_blue() {
            items = items
                .iter()
                .flat_map(|(v, w)| (0..source.branching(v.level())).map(move |c| (v.child(c), w.clone())))
                .collect();
        }
        if ev.tag.has_red() {
            let mut dealt: HashMap<TreeVertex, u32> = HashMap::new();
            for (_, w) in items.iter_mut() {
                let p = target.branching(w.level());
                let k = dealt.entry(w.clone()).or_insert(0);
                let next = w.child(*k % p);
                *k += 1;
                *w = next;
            }
        }
    }
    let images = images.into_iter().map(|m| m.expect("every source level is a blue event")).collect();
    TreeMap::new(source, target, images)
}

/// Least level whose rank is at least `n`.
fn level_for(ranks: impl Fn(usize) -> usize, max: usize, n: usize) -> usize {
    (0..=max).find(|l| ranks(*l) >= n).expect("rank within range")
}

/// For each event height up to the source truncation, the largest number of
/// source points sent to a single target point at that height.
pub fn preimage_profile(map: &TreeMap) -> Result<Vec<usize>> {
    if !map.is_waterfall() {
        return Err(Error::Precondition("preimage profile needs a waterfall map".into()));
    }
    let source = map.source();
    let target = map.target();
    let top = map.src_rank(source.depth());
    let mut out = Vec::with_capacity(top + 1);
    for n in 0..=top {
        let ls = level_for(|l| map.src_rank(l), source.depth(), n);
        let lt = level_for(|l| map.dst_rank(l), target.depth(), n);
        let mut counts: HashMap<&[u32], usize> = HashMap::new();
        for i in source.level_range(ls) {
            let w = &map.images()[i].vertex;
            *counts.entry(&w.digits()[..lt]).or_insert(0) += 1;
        }
        out.push(counts.values().copied().max().unwrap_or(0));
    }
    Ok(out)
}

/// Checks the `⌈P/p'⌉` bound at every target branching below the source
/// truncation. Returns the first offending target vertex.
pub fn check_distributive(map: &TreeMap) -> Result<std::result::Result<(), TreeVertex>> {
    if !map.is_waterfall() {
        return Err(Error::Precondition("distributivity needs a waterfall map".into()));
    }
    let source = map.source();
    let target = map.target();
    let top = map.src_rank(source.depth());
    for lt in 0..target.depth() {
        let n = map.dst_rank(lt);
        if n >= top {
            break;
        }
        // arms: source edges just above height n, by the target child they run along
        let ls = level_for(|l| map.src_rank(l), source.depth(), n + 1);
        let mut per_child: HashMap<&[u32], usize> = HashMap::new();
        for i in source.level_range(ls) {
            let w = &map.images()[i].vertex;
            *per_child.entry(&w.digits()[..lt + 1]).or_insert(0) += 1;
        }
        let mut per_parent: HashMap<&[u32], usize> = HashMap::new();
        for (c, k) in &per_child {
            *per_parent.entry(&c[..lt]).or_insert(0) += k;
        }
        let p = target.branching(lt);
        for (c, k) in &per_child {
            let total = per_parent[&c[..lt]];
            if *k > total.div_ceil(p as usize) {
                return Ok(Err(TreeVertex(c[..lt].to_vec())));
            }
        }
    }
    Ok(Ok(()))
}

/// Largest distance between two source vertices with the same image.
pub fn blue_yellow_probe(map: &TreeMap) -> Result<LogHeight> {
    if !map.is_waterfall() {
        return Err(Error::Precondition("probe needs a waterfall map".into()));
    }
    let source = map.source();
    let mut best = LogHeight::zero();
    for members in map.fibres().values() {
        if members.len() < 2 {
            continue;
        }
        let first = source.vertex_at(members[0]);
        let common = members[1..]
            .iter()
            .map(|i| source.vertex_at(*i).common_prefix_len(&first))
            .min()
            .expect("two members");
        let level = first.level();
        let r = map.src_rank(level);
        let m = map.src_rank(common);
        let d = map.table().combine(&[(2, r), (-2, m)]).magnitude;
        if d > best {
            best = d;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pebble::{pebble_sequence, PebbleParams};

    fn profile(src: IsotropicTreeSpec, dst: IsotropicTreeSpec) -> Vec<usize> {
        let m = distributive_waterfall(&src, &dst).unwrap();
        assert!(m.is_waterfall());
        assert_eq!(check_distributive(&m).unwrap(), Ok(()));
        preimage_profile(&m).unwrap()
    }

    #[test]
    fn identity_shaped() {
        let m = distributive_waterfall(&IsotropicTreeSpec::regular(2, 2, 4), &IsotropicTreeSpec::regular(2, 2, 4)).unwrap();
        assert!(m.images().iter().enumerate().all(|(i, im)| im.vertex == m.source().vertex_at(i)));
        assert!(preimage_profile(&m).unwrap().iter().all(|x| *x == 1));
        assert_eq!(blue_yellow_probe(&m).unwrap(), LogHeight::zero());
    }

    #[test]
    fn matches_pebbles_for_two_three() {
        let prof = profile(IsotropicTreeSpec::regular(2, 2, 6), IsotropicTreeSpec::regular(3, 3, 4));
        assert_eq!(prof[5], 4);
        let t = pebble_sequence(&PebbleParams::constant(2, 2, 3, 3).unwrap(), prof.len() - 1).unwrap();
        let want: Vec<usize> = t.values.iter().map(|x| usize::try_from(x).unwrap()).collect();
        assert_eq!(prof, want);
    }

    #[test]
    fn six_arm_example_is_bounded() {
        let src = IsotropicTreeSpec::parse("6;3", "2;4", 6).unwrap();
        let dst = IsotropicTreeSpec::regular(3, 4, 6);
        let prof = profile(src, dst);
        assert_eq!(prof.iter().max(), Some(&6));
    }

    #[test]
    fn shallow_target_rejected() {
        let r = distributive_waterfall(&IsotropicTreeSpec::regular(2, 2, 6), &IsotropicTreeSpec::regular(3, 3, 2));
        assert!(matches!(r, Err(Error::Truncation(_))));
    }
}
