//! The bi-rooted tree `T(p, q)`, its Busemann heights, points of the
//! treebolic space over it, and the distance bounds used to certify
//! quasiisometric embeddings.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::heights::{combine, LogHeight, SignedHeight};
use crate::tree::{distortion_report, MapImage, Tree, TreeMap, TreeVertex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Half {
    R1,
    R2,
}

impl Half {
    pub fn other(self) -> Half {
        match self {
            Half::R1 => Half::R2,
            Half::R2 => Half::R1,
        }
    }
}

/// A point of `T(p, q)`: either in one of the two rooted halves, at
/// `radius` from that half's root on the edge above `vertex`, or on the
/// join line at the given fraction of its length from the root of `R1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreePointT {
    InHalf { half: Half, vertex: TreeVertex, radius: LogHeight },
    Line(BigRational),
}

impl fmt::Display for TreePointT {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreePointT::InHalf { half, vertex, radius } => write!(f, "{half:?}:{vertex}@{radius}"),
            TreePointT::Line(t) => write!(f, "L:{t}"),
        }
    }
}

impl Serialize for TreePointT {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// A truncated `T(p, q)`: two copies of a regular rooted tree whose roots
/// are joined by a line of one edge length.
#[derive(Clone, Debug)]
pub struct TTree {
    half: Tree,
    line: LogHeight,
}

impl TTree {
    pub fn new(half: Tree) -> Result<Self> {
        let line = match (half.branching_seq().constant_value(), half.edge_seq().constant_value()) {
            (Some(_), Some(e)) => e.clone(),
            _ => return Err(Error::Precondition("T needs a regular rooted tree".into())),
        };
        Ok(Self { half, line })
    }

    pub fn half(&self) -> &Tree {
        &self.half
    }

    pub fn line_len(&self) -> &LogHeight {
        &self.line
    }

    pub fn root(&self, half: Half) -> TreePointT {
        self.vertex(half, TreeVertex::root())
    }

    pub fn vertex(&self, half: Half, vertex: TreeVertex) -> TreePointT {
        let radius = self.half.height(&vertex);
        TreePointT::InHalf { half, vertex, radius }
    }

    /// Midpoint of the edge above a non-root vertex.
    pub fn midpoint(&self, half: Half, vertex: TreeVertex) -> TreePointT {
        let l = vertex.level();
        assert!(l > 0, "the root has no edge above it");
        let radius = self.half.level_height(l - 1).add(&self.half.edge(l).scaled(&half_ratio()));
        TreePointT::InHalf { half, vertex, radius }
    }

    pub fn from_image(&self, half: Half, map: &TreeMap, im: &MapImage) -> TreePointT {
        TreePointT::InHalf { half, vertex: im.vertex.clone(), radius: map.height_of(im.height).clone() }
    }

    /// Vertices and edge midpoints of both halves, then the line midpoint.
    pub fn domain(&self) -> Vec<TreePointT> {
        let mut out = Vec::new();
        for half in [Half::R1, Half::R2] {
            for v in self.half.vertices() {
                if !v.is_root() {
                    out.push(self.midpoint(half, v.clone()));
                }
                out.push(self.vertex(half, v));
            }
        }
        out.push(TreePointT::Line(half_ratio()));
        out
    }

    /// Midpoint of the geodesic between two points of the same half.
    fn geodesic_midpoint(&self, x: &TreePointT, y: &TreePointT) -> TreePointT {
        let (
            TreePointT::InHalf { half, vertex: a, radius: ra },
            TreePointT::InHalf { half: hb, vertex: b, radius: rb },
        ) = (x, y)
        else {
            panic!("midpoints are taken inside one half");
        };
        assert_eq!(half, hb, "midpoints are taken inside one half");
        let m = self.half.level_height(a.common_prefix_len(b)).min(ra.clone()).min(rb.clone());
        // the midpoint lies on the path from the meet to the farther point
        let (far, rf, rn) = if ra >= rb { (a, ra, rb) } else { (b, rb, ra) };
        let radius = m.add(&rf.sub(rn).scaled(&half_ratio()));
        let level = self.half.level_at_or_above(&radius, far.level()).expect("radius lies on the path");
        TreePointT::InHalf { half: *half, vertex: far.ancestor(level), radius }
    }

    fn line_part(&self, t: &BigRational) -> LogHeight {
        self.line.scaled(t)
    }

    /// Distance to the root of `half`.
    fn to_root(&self, x: &TreePointT, half: Half) -> LogHeight {
        match x {
            TreePointT::InHalf { half: h, radius, .. } if *h == half => radius.clone(),
            TreePointT::InHalf { radius, .. } => radius.add(&self.line),
            TreePointT::Line(t) => match half {
                Half::R1 => self.line_part(t),
                Half::R2 => self.line_part(&(BigRational::one() - t)),
            },
        }
    }

    pub fn distance(&self, x: &TreePointT, y: &TreePointT) -> LogHeight {
        match (x, y) {
            (
                TreePointT::InHalf { half: h1, vertex: v1, radius: r1 },
                TreePointT::InHalf { half: h2, vertex: v2, radius: r2 },
            ) if h1 == h2 => {
                let m = self.half.level_height(v1.common_prefix_len(v2)).min(r1.clone()).min(r2.clone());
                combine([(1, r1), (1, r2), (-2, &m)]).magnitude
            }
            (TreePointT::Line(s), TreePointT::Line(t)) => self.line_part(&(s - t).abs()),
            (TreePointT::InHalf { half, .. }, _) | (_, TreePointT::InHalf { half, .. }) => {
                self.to_root(x, *half).add(&self.to_root(y, *half))
            }
        }
    }
}

fn half_ratio() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(2))
}

/// A geodesic ray from the root of `start`: down `start` along `path`
/// when `crosses` is false, otherwise across the join line and down the
/// other half. Paths are extended by zero digits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BaseRay {
    pub start: Half,
    pub crosses: bool,
    pub path: Vec<u32>,
}

impl BaseRay {
    /// From the root of `R1` into `R2` along zeros.
    pub fn standard() -> Self {
        Self { start: Half::R1, crosses: true, path: Vec::new() }
    }

    fn deep_half(&self) -> Half {
        if self.crosses {
            self.start.other()
        } else {
            self.start
        }
    }

    fn path_digit(&self, k: usize) -> u32 {
        self.path.get(k).copied().unwrap_or(0)
    }

    fn lcp_with_path(&self, v: &TreeVertex) -> usize {
        v.digits().iter().enumerate().take_while(|(k, d)| **d == self.path_digit(*k)).count()
    }
}

/// `h(x) = d(b, x) − 2·|γ_x ∩ γ|`, exact.
pub fn busemann_height(t: &TTree, x: &TreePointT, ray: &BaseRay) -> SignedHeight {
    let d = t.to_root(x, ray.start);
    let overlap = match x {
        TreePointT::InHalf { half, vertex, radius } if *half == ray.deep_half() => {
            let m = t.half.level_height(ray.lcp_with_path(vertex)).min(radius.clone());
            if ray.crosses {
                m.add(&t.line)
            } else {
                m
            }
        }
        TreePointT::Line(_) if ray.crosses => d.clone(),
        _ => LogHeight::zero(),
    };
    combine([(1, &d), (-2, &overlap)])
}

/// Distance in the upper half plane.
pub fn h2_distance(a: (f64, f64), b: (f64, f64)) -> Result<f64> {
    if a.1 <= 0.0 || b.1 <= 0.0 {
        return Err(Error::InvalidValue("points must have positive y".into()));
    }
    let (dx, dy) = (a.0 - b.0, a.1 - b.1);
    // arccosh(1 + u) = 2·asinh(sqrt(u/2)), stable for small u
    let s = ((dx * dx + dy * dy) / (4.0 * a.1 * b.1)).sqrt();
    Ok(2.0 * s.asinh())
}

/// Distance between two points of one horocycle at height `h`.
pub fn fiber_distance(h: f64, depth_gap: f64) -> f64 {
    2.0 * (depth_gap.abs() / (2.0 * h.exp())).asinh()
}

/// A point of `HT(p, q)`: a point of `T(p, q)` and a depth.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HtPoint {
    pub point: TreePointT,
    pub depth: f64,
}

/// `min(d(x, y'), d(y, x'))` with `y'` over `πx` at the depth of `y` and
/// `x'` over `πy` at the depth of `x`.
pub fn d_function(t: &TTree, ray: &BaseRay, x: &HtPoint, y: &HtPoint) -> f64 {
    let dz = x.depth - y.depth;
    let hx = busemann_height(t, &x.point, ray).to_f64();
    let hy = busemann_height(t, &y.point, ray).to_f64();
    fiber_distance(hx, dz).min(fiber_distance(hy, dz))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DistanceBounds {
    pub lower: f64,
    pub upper: f64,
}

pub fn ht_distance_bounds(t: &TTree, ray: &BaseRay, x: &HtPoint, y: &HtPoint) -> DistanceBounds {
    let dt = t.distance(&x.point, &y.point).to_f64();
    let d = d_function(t, ray, x, y);
    DistanceBounds { lower: dt.max(d), upper: dt + d }
}

/// A map from the sample domain of one truncated `T` to points of another.
#[derive(Clone, Debug)]
pub struct TMap {
    pub source: TTree,
    pub target: TTree,
    pub domain: Vec<TreePointT>,
    pub images: Vec<TreePointT>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TMapReport {
    /// max |d(Fx, Fy) − d(x, y)| over the domain
    pub additive_constant: LogHeight,
    /// max |h'(Fx) − h(x)| over the domain
    pub height_deviation: LogHeight,
}

impl TMap {
    pub fn index_of(&self, x: &TreePointT) -> Option<usize> {
        self.domain.iter().position(|d| d == x)
    }

    pub fn additive_constant(&self) -> LogHeight {
        let mut worst = LogHeight::zero();
        for i in 0..self.domain.len() {
            for j in i + 1..self.domain.len() {
                let d = self.source.distance(&self.domain[i], &self.domain[j]);
                let e = self.target.distance(&self.images[i], &self.images[j]);
                let diff = d.abs_diff(&e);
                if diff > worst {
                    worst = diff;
                }
            }
        }
        worst
    }

    pub fn height_deviation(&self, ray: &BaseRay, ray_prime: &BaseRay) -> LogHeight {
        self.domain
            .iter()
            .zip(&self.images)
            .map(|(x, y)| {
                let a = busemann_height(&self.source, x, ray);
                let b = busemann_height(&self.target, y, ray_prime);
                a.sub(&b).magnitude
            })
            .max()
            .unwrap_or_else(LogHeight::zero)
    }

    pub fn report(&self, ray: &BaseRay, ray_prime: &BaseRay) -> TMapReport {
        TMapReport { additive_constant: self.additive_constant(), height_deviation: self.height_deviation(ray, ray_prime) }
    }
}

#[derive(Clone, Debug)]
pub struct TExtension {
    pub map: TMap,
    /// d(b', f(b))
    pub kappa: LogHeight,
    /// additive constant of the rooted tree map
    pub tree_additive: LogHeight,
    /// measured additive constant of the extension
    pub measured: LogHeight,
    /// `2κ + 2A`
    pub stated_bound: LogHeight,
    /// `2κ + 2A + |log q' − log q|`, accounting for the two join lines
    pub bound: LogHeight,
}

/// Extends a map of rooted trees to `T` by applying it on each half.
/// An edge midpoint goes to the midpoint of the geodesic between the images
/// of the edge's endpoints. The line midpoint stays fixed, and any other
/// line point goes with the nearer root.
pub fn extend_to_t(f: &TreeMap) -> Result<TExtension> {
    let source = TTree::new(f.source().clone())?;
    let target = TTree::new(f.target().clone())?;
    let domain = source.domain();
    let on_half = |half: Half, v: &TreeVertex| target.from_image(half, f, f.image(v));
    let images = domain
        .iter()
        .map(|x| match x {
            TreePointT::InHalf { half, vertex, radius } => {
                if *radius == f.source().height(vertex) {
                    on_half(*half, vertex)
                } else {
                    let parent = vertex.parent().expect("midpoints lie below the root");
                    target.geodesic_midpoint(&on_half(*half, &parent), &on_half(*half, vertex))
                }
            }
            TreePointT::Line(t) if *t == half_ratio() => TreePointT::Line(t.clone()),
            TreePointT::Line(t) => {
                let half = if *t < half_ratio() { Half::R1 } else { Half::R2 };
                on_half(half, &TreeVertex::root())
            }
        })
        .collect();
    let map = TMap { source, target, domain, images };
    let kappa = f.height_of(f.image(&TreeVertex::root()).height).clone();
    let tree_additive = distortion_report(f).additive_constant;
    let measured = map.additive_constant();
    let stated_bound = kappa.add(&tree_additive).times(2);
    let bound = stated_bound.add(&map.source.line.abs_diff(&map.target.line));
    Ok(TExtension { map, kappa, tree_additive, measured, stated_bound, bound })
}

#[derive(Clone, Debug)]
pub struct THeightified {
    pub map: TMap,
    pub swapped_halves: bool,
    /// vertex path in the deep target half that the image ray followed
    pub tracked_path: Vec<u32>,
    pub report: TMapReport,
}

/// Composes `F` with a target isometry carrying the image of the source
/// base ray onto the target base ray, which makes it coarsely height
/// preserving. The image ray is tracked towards the deepest image of the
/// source ray.
pub fn coarse_heightify_t(f: &TMap, ray: &BaseRay, ray_prime: &BaseRay) -> Result<THeightified> {
    let on_ray = |x: &TreePointT| match x {
        TreePointT::InHalf { half, vertex, radius } => {
            let on_path = ray.lcp_with_path(vertex) == vertex.level() && *radius == f.source.half.height(vertex);
            on_path && (*half == ray.deep_half() || (ray.crosses && vertex.is_root()))
        }
        TreePointT::Line(_) => ray.crosses,
    };
    let mut deepest: Option<(Half, TreeVertex, LogHeight)> = None;
    let mut tie = false;
    for (x, y) in f.domain.iter().zip(&f.images) {
        if !on_ray(x) {
            continue;
        }
        if let TreePointT::InHalf { half, vertex, radius } = y {
            match &deepest {
                Some((_, _, r)) if radius < r => {}
                Some((h, v, r)) if radius == r => {
                    let nested = h == half && (v.is_ancestor_of(vertex) || vertex.is_ancestor_of(v));
                    tie |= !nested;
                    if nested && vertex.level() > v.level() {
                        deepest = Some((*half, vertex.clone(), radius.clone()));
                    }
                }
                _ => {
                    tie = false;
                    deepest = Some((*half, vertex.clone(), radius.clone()));
                }
            }
        }
    }
    if tie {
        return Err(Error::Ambiguous("the image ray splits at its deepest point".into()));
    }
    let (half, end, _) = deepest.ok_or_else(|| Error::Ambiguous("the base ray has no image in either half".into()))?;
    let want = ray_prime.deep_half();
    let swapped = half != want;
    let tracked: Vec<u32> = end.digits().to_vec();
    let relabel = |v: &TreeVertex| -> TreeVertex {
        let mut out = v.digits().to_vec();
        for (k, d) in v.digits().iter().enumerate() {
            if k >= tracked.len() || v.digits()[..k] != tracked[..k] {
                break;
            }
            let (a, b) = (tracked[k], ray_prime.path_digit(k));
            out[k] = if *d == a {
                b
            } else if *d == b {
                a
            } else {
                *d
            };
        }
        TreeVertex(out)
    };
    let psi = |y: &TreePointT| -> TreePointT {
        match y {
            TreePointT::InHalf { half: h, vertex, radius } => {
                let h2 = if swapped { h.other() } else { *h };
                let vertex = if h2 == want { relabel(vertex) } else { vertex.clone() };
                TreePointT::InHalf { half: h2, vertex, radius: radius.clone() }
            }
            TreePointT::Line(t) if swapped => TreePointT::Line(BigRational::one() - t),
            TreePointT::Line(t) => TreePointT::Line(t.clone()),
        }
    };
    let images = f.images.iter().map(psi).collect();
    let map = TMap { source: f.source.clone(), target: f.target.clone(), domain: f.domain.clone(), images };
    let report = map.report(ray, ray_prime);
    Ok(THeightified { map, swapped_halves: swapped, tracked_path: tracked, report })
}

/// `f̂`: the same map on horocycles, keeping depths.
#[derive(Clone, Debug)]
pub struct HoroExtension {
    pub map: TMap,
    pub ray: BaseRay,
    pub ray_prime: BaseRay,
    /// additive constant of the tree map
    pub a: f64,
    /// height deviation of the tree map
    pub b: f64,
}

pub fn horocyclic_extension(g: &THeightified, ray: &BaseRay, ray_prime: &BaseRay) -> HoroExtension {
    HoroExtension {
        map: g.map.clone(),
        ray: ray.clone(),
        ray_prime: ray_prime.clone(),
        a: g.report.additive_constant.to_f64(),
        b: g.report.height_deviation.to_f64(),
    }
}

impl HoroExtension {
    pub fn apply(&self, x: &HtPoint) -> Result<HtPoint> {
        let i = self
            .map
            .index_of(&x.point)
            .ok_or_else(|| Error::Precondition(format!("{} is outside the sampled domain", x.point)))?;
        Ok(self.apply_index(i, x.depth))
    }

    pub fn apply_index(&self, i: usize, depth: f64) -> HtPoint {
        HtPoint { point: self.map.images[i].clone(), depth }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QiWitness {
    pub x: HtPoint,
    pub y: HtPoint,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct QiCertificate {
    pub pairs_checked: usize,
    pub seed: u64,
    pub a: f64,
    pub b: f64,
    #[serde(rename = "max_D_deviation")]
    pub max_d_deviation: f64,
    /// min of `2B − |D − D'|`
    pub worst_slack_i: f64,
    /// min over both bound inequalities of right side minus left side
    pub worst_slack_ii: f64,
    pub witnesses: Vec<QiWitness>,
}

impl QiCertificate {
    pub fn passed(&self) -> bool {
        self.witnesses.is_empty()
    }
}

pub const QI_TOLERANCE: f64 = 1e-9;

/// Checks the coarse preservation of `D` and both bound-level
/// quasiisometry inequalities on seeded random pairs.
pub fn qi_certificate(ext: &HoroExtension, samples: usize, seed: u64) -> QiCertificate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = ext.map.domain.len();
    let (a, b) = (ext.a, ext.b);
    let mut cert = QiCertificate {
        pairs_checked: 0,
        seed,
        a,
        b,
        max_d_deviation: 0.0,
        worst_slack_i: f64::INFINITY,
        worst_slack_ii: f64::INFINITY,
        witnesses: Vec::new(),
    };
    let src = &ext.map.source;
    let dst = &ext.map.target;
    for _ in 0..samples {
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let x = HtPoint { point: ext.map.domain[i].clone(), depth: rng.gen_range(-5.0..=5.0) };
        let y = HtPoint { point: ext.map.domain[j].clone(), depth: rng.gen_range(-5.0..=5.0) };
        let (fx, fy) = (ext.apply_index(i, x.depth), ext.apply_index(j, y.depth));
        let dev = (d_function(src, &ext.ray, &x, &y) - d_function(dst, &ext.ray_prime, &fx, &fy)).abs();
        let slack_i = 2.0 * b - dev;
        let before = ht_distance_bounds(src, &ext.ray, &x, &y);
        let after = ht_distance_bounds(dst, &ext.ray_prime, &fx, &fy);
        let slack_ii = (2.0 * before.lower + a + 2.0 * b - after.upper).min(2.0 * after.upper + a + 2.0 * b - before.lower);
        cert.pairs_checked += 1;
        cert.max_d_deviation = cert.max_d_deviation.max(dev);
        cert.worst_slack_i = cert.worst_slack_i.min(slack_i);
        cert.worst_slack_ii = cert.worst_slack_ii.min(slack_ii);
        let reason = if slack_i < -QI_TOLERANCE {
            Some(format!("D moved by {dev}"))
        } else if slack_ii < -QI_TOLERANCE {
            Some(format!("bound inequality short by {}", -slack_ii))
        } else {
            None
        };
        if let Some(reason) = reason {
            cert.witnesses.push(QiWitness { x, y, reason });
        }
    }
    cert
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pebble::rat;
    use crate::tree::{c1_embedding, c2_rough_isometry, IsotropicTreeSpec};

    fn t(p: u32, q: u64, d: usize) -> TTree {
        TTree::new(Tree::from_spec(&IsotropicTreeSpec::regular(p, q, d)).unwrap()).unwrap()
    }

    fn v(s: &str) -> TreeVertex {
        s.parse().unwrap()
    }

    fn log(n: u64) -> f64 {
        (n as f64).ln()
    }

    #[test]
    fn busemann_examples() {
        let tt = t(2, 2, 3);
        let ray = BaseRay::standard();
        assert!(busemann_height(&tt, &tt.root(Half::R1), &ray).is_zero());
        // on the ray, past the join line and two edges
        let x = tt.vertex(Half::R2, v("0.0"));
        assert!((busemann_height(&tt, &x, &ray).to_f64() + 3.0 * log(2)).abs() < 1e-12);
        // leaves the ray at b2 after one edge of line: d = 3 log 2, overlap log 2
        let x = tt.vertex(Half::R2, v("1.0"));
        assert!((busemann_height(&tt, &x, &ray).to_f64() - log(2)).abs() < 1e-12);
        // down-pointing ray inside R1
        let down = BaseRay { start: Half::R1, crosses: false, path: vec![1] };
        let x = tt.vertex(Half::R1, v("1.1.0"));
        assert!((busemann_height(&tt, &x, &down).to_f64() - log(2)).abs() < 1e-12);
    }

    #[test]
    fn plane_distances() {
        assert_eq!(h2_distance((0.0, 1.0), (0.0, 1.0)).unwrap(), 0.0);
        assert!((h2_distance((0.0, 1.0), (0.0, std::f64::consts::E)).unwrap() - 1.0).abs() < 1e-12);
        assert!((h2_distance((0.0, 1.0), (3.0, 1.0)).unwrap() - 5.5f64.acosh()).abs() < 1e-12);
        assert!(h2_distance((0.0, 0.0), (1.0, 1.0)).is_err());
    }

    #[test]
    fn d_function_examples() {
        let tt = t(2, 2, 3);
        let ray = BaseRay::standard();
        let b1 = tt.root(Half::R1);
        let x = HtPoint { point: b1.clone(), depth: 1.0 };
        assert_eq!(d_function(&tt, &ray, &x, &HtPoint { point: tt.vertex(Half::R1, v("0")), depth: 1.0 }), 0.0);
        let y = HtPoint { point: b1.clone(), depth: 3.0 };
        assert!((d_function(&tt, &ray, &x, &y) - 3f64.acosh()).abs() < 1e-12);
        let bounds = ht_distance_bounds(&tt, &ray, &x, &y);
        assert_eq!(bounds.lower, bounds.upper);
        let z = HtPoint { point: tt.vertex(Half::R1, v("1.1")), depth: -2.0 };
        let h = busemann_height(&tt, &z.point, &ray).to_f64();
        let same = HtPoint { point: z.point.clone(), depth: 2.5 };
        let want = (1.0 + 4.5f64.powi(2) / (2.0 * (2.0 * h).exp())).acosh();
        assert!((d_function(&tt, &ray, &z, &same) - want).abs() < 1e-12);
    }

    #[test]
    fn identity_certificate() {
        let tt = t(2, 2, 3);
        let id = TMap { source: tt.clone(), target: tt.clone(), domain: tt.domain(), images: tt.domain() };
        let tree = tt.half().clone();
        let f = TreeMap::from_vertices(tree.clone(), tree.clone(), tree.vertices().collect()).unwrap();
        let ext = extend_to_t(&f).unwrap();
        assert_eq!(ext.map.images, id.images);
        assert!(ext.measured.is_zero() && ext.bound.is_zero());
        let ray = BaseRay::standard();
        let g = coarse_heightify_t(&id, &ray, &ray).unwrap();
        assert!(!g.swapped_halves);
        assert!(g.report.additive_constant.is_zero() && g.report.height_deviation.is_zero());
        let cert = qi_certificate(&horocyclic_extension(&g, &ray, &ray), 500, 7);
        assert!(cert.passed());
        assert!(cert.worst_slack_i >= 0.0 && cert.worst_slack_ii >= 0.0);
    }

    #[test]
    fn swapped_halves_are_recovered() {
        let tt = t(2, 3, 3);
        let domain = tt.domain();
        let images = domain
            .iter()
            .map(|x| match x {
                TreePointT::InHalf { half, vertex, radius } => {
                    let mut d = vertex.digits().to_vec();
                    if let Some(first) = d.first_mut() {
                        *first = 1 - *first;
                    }
                    TreePointT::InHalf { half: half.other(), vertex: TreeVertex(d), radius: radius.clone() }
                }
                TreePointT::Line(s) => TreePointT::Line(BigRational::one() - s),
            })
            .collect();
        let f = TMap { source: tt.clone(), target: tt.clone(), domain, images };
        let ray = BaseRay::standard();
        let g = coarse_heightify_t(&f, &ray, &ray).unwrap();
        assert!(g.swapped_halves);
        assert_eq!(g.report.height_deviation, LogHeight::zero());
        assert_eq!(g.report.additive_constant, f.additive_constant());
        // relabeling follows the tracked path, which lives in R2
        for (x, y) in g.map.domain.iter().zip(&g.map.images) {
            if let TreePointT::InHalf { half: Half::R2, .. } | TreePointT::Line(_) = x {
                assert_eq!(x, y);
            }
        }
    }

    #[test]
    fn extension_then_certificate_for_c2() {
        let f = c2_rough_isometry(2, &rat(2), 4, &rat(4), 4).unwrap();
        let ext = extend_to_t(&f).unwrap();
        assert!(ext.measured <= ext.bound, "{} > {}", ext.measured, ext.bound);
        let ray = BaseRay::standard();
        let g = coarse_heightify_t(&ext.map, &ray, &ray).unwrap();
        let q_prime = LogHeight::log_int(4).unwrap();
        assert!(g.report.height_deviation <= ext.measured.add(&q_prime));
        let cert = qi_certificate(&horocyclic_extension(&g, &ray, &ray), 1000, 1);
        assert!(cert.passed(), "{:?}", cert.witnesses.first());
    }

    #[test]
    fn extension_then_certificate_for_c1() {
        let e = c1_embedding(2, &rat(4), 2, &rat(2), 4).unwrap();
        let ext = extend_to_t(&e.map).unwrap();
        assert!(ext.measured <= ext.bound);
        let ray = BaseRay::standard();
        let g = coarse_heightify_t(&ext.map, &ray, &ray).unwrap();
        let cert = qi_certificate(&horocyclic_extension(&g, &ray, &ray), 1000, 2);
        assert!(cert.passed(), "{:?}", cert.witnesses.first());
        let x = HtPoint { point: g.map.domain[5].clone(), depth: 0.25 };
        let fx = horocyclic_extension(&g, &ray, &ray).apply(&x).unwrap();
        assert_eq!(fx.depth, 0.25);
        assert_eq!(fx.point, g.map.images[5]);
    }
}
