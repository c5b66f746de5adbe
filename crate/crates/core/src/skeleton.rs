//! Skeletons: coarse-grained cyclic point sequences on the dual lattice.

use serde::{Deserialize, Serialize};

use crate::contour::{Contour, DualPoint};
use crate::error::{invalid, Error, Result};
use crate::geometry::Point;
use crate::wulff::{hausdorff, Geometry, SurfaceTension};

/// Slack for floating comparisons against the scale.
const SCALE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    points: Vec<DualPoint>,
    scale: f64,
}

pub type SkeletonSet = Vec<Skeleton>;

/// Whether every cyclic gap lies in `[s, 2s]`.
pub fn spacing_ok(points: &[DualPoint], s: f64) -> bool {
    let n = points.len();
    n >= 2
        && (0..n).all(|i| {
            let d = points[i].dist(points[(i + 1) % n]);
            d >= s - SCALE_EPS && d <= 2.0 * s + SCALE_EPS
        })
}

impl Skeleton {
    pub fn new(points: Vec<DualPoint>, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(invalid("skeleton scale must be positive"));
        }
        if points.len() < 2 {
            return Err(invalid("a skeleton needs at least two points"));
        }
        if points.iter().any(|p| !p.is_dual_site()) {
            return Err(invalid("skeleton points must be dual-lattice sites"));
        }
        if !spacing_ok(&points, scale) {
            return Err(invalid("consecutive skeleton points must be between s and 2s apart"));
        }
        Ok(Skeleton { points, scale })
    }

    pub fn points(&self) -> &[DualPoint] {
        &self.points
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same points in reverse cyclic order.
    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Skeleton { points, scale: self.scale }
    }

    /// Shift by `(dx2, dy2)` doubled units; both must be even to stay on the dual lattice.
    pub fn translated(&self, dx2: i32, dy2: i32) -> Result<Self> {
        if dx2 % 2 != 0 || dy2 % 2 != 0 {
            return Err(invalid("translation must preserve dual-lattice parity"));
        }
        Ok(Skeleton {
            points: self.points.iter().map(|p| DualPoint::new(p.x2 + dx2, p.y2 + dy2)).collect(),
            scale: self.scale,
        })
    }
}

/// Closed polygonal curve; two vertices describe an out-and-back segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        let p = Polygon { vertices };
        if p.vertices.len() < 2 || !(p.length() > 0.0) {
            return Err(invalid("polygon needs two distinct vertices"));
        }
        Ok(p)
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn length(&self) -> f64 {
        self.edges().map(|(a, b)| a.dist(b)).sum()
    }
}

pub fn polygon_of(s: &Skeleton) -> Polygon {
    Polygon { vertices: s.points.iter().map(|p| p.to_point()).collect() }
}

/// Greedy walk from `start`: each new point is the first contour vertex at distance ≥ s.
fn greedy_indices(verts: &[DualPoint], start: usize, s: f64) -> Vec<usize> {
    let n = verts.len();
    let mut picked = vec![start];
    let mut cur = start;
    for k in 1..n {
        let idx = (start + k) % n;
        if verts[cur].dist(verts[idx]) >= s {
            picked.push(idx);
            cur = idx;
        }
    }
    picked
}

/// Vertex on the arc strictly between `from` and `to` (cyclic, forward) that splits the
/// gap into two admissible gaps, preferring the most balanced split.
fn split_arc(verts: &[DualPoint], from: usize, to: usize, s: f64) -> Option<usize> {
    let n = verts.len();
    let mut best: Option<(f64, usize)> = None;
    let mut k = (from + 1) % n;
    while k != to {
        let d1 = verts[from].dist(verts[k]);
        let d2 = verts[k].dist(verts[to]);
        let ok = |d: f64| d >= s - SCALE_EPS && d <= 2.0 * s + SCALE_EPS;
        if ok(d1) && ok(d2) {
            let score = (d1 - d2).abs();
            if best.map_or(true, |(b, _)| score < b) {
                best = Some((score, k));
            }
        }
        k = (k + 1) % n;
    }
    best.map(|(_, k)| k)
}

fn construct_from(c: &Contour, start: usize, s: f64) -> Option<Skeleton> {
    let verts = &c.vertices;
    let mut idx = greedy_indices(verts, start, s);
    if idx.len() < 2 {
        return None;
    }
    // Closing edge shorter than s: merge the last point into it.
    while idx.len() > 2 && verts[*idx.last().unwrap()].dist(verts[idx[0]]) < s - SCALE_EPS {
        idx.pop();
    }
    let last = *idx.last().unwrap();
    let closing = verts[last].dist(verts[idx[0]]);
    if closing > 2.0 * s + SCALE_EPS {
        let mid = split_arc(verts, last, idx[0], s)?;
        idx.push(mid);
    }
    let points: Vec<DualPoint> = idx.iter().map(|&i| verts[i]).collect();
    let sk = Skeleton::new(points, s).ok()?;
    check_compatible(c, &sk).then_some(sk)
}

/// Builds an `s`-skeleton compatible with `c`.
///
/// The walk starts at the first contour vertex that has another vertex at distance ≥ s;
/// if the closing step cannot be repaired from that start, later starts are tried.
pub fn build_skeleton(c: &Contour, s: f64) -> Result<Skeleton> {
    if !(s > 0.0) {
        return Err(invalid("skeleton scale must be positive"));
    }
    if c.diameter < s - SCALE_EPS {
        return Err(Error::ContourTooSmall { diameter: c.diameter, scale: s });
    }
    if s < 0.5 {
        // adjacent dual sites are one unit apart, so gaps cannot be at most 2s
        return Err(invalid("skeleton scale below 1/2 cannot be realised on the dual lattice"));
    }
    let verts = &c.vertices;
    let s2 = 4.0 * s * s;
    for start in 0..verts.len() {
        let reaches = verts.iter().any(|v| verts[start].dist2_doubled(*v) as f64 >= s2 - 1e-9);
        if !reaches {
            continue;
        }
        if let Some(sk) = construct_from(c, start, s) {
            return Ok(sk);
        }
    }
    Err(Error::Skeleton(format!("no admissible start on a contour of length {}", c.length)))
}

/// Skeleton points occur along the contour in the given cyclic order.
pub fn passes_in_order(c: &Contour, sk: &Skeleton) -> bool {
    let verts = &c.vertices;
    let n = verts.len();
    let pts = sk.points();
    let starts = verts.iter().enumerate().filter(|(_, v)| **v == pts[0]).map(|(i, _)| i);
    'outer: for start in starts {
        let mut offset = 0usize;
        for p in &pts[1..] {
            loop {
                offset += 1;
                if offset >= n {
                    continue 'outer;
                }
                if verts[(start + offset) % n] == *p {
                    break;
                }
            }
        }
        return true;
    }
    false
}

/// Hausdorff distance between the contour curve and the skeleton polygon.
pub fn contour_polygon_distance(c: &Contour, sk: &Skeleton) -> f64 {
    let curve = Geometry::ClosedPolyline(c.points());
    let poly = Geometry::ClosedPolyline(polygon_of(sk).vertices);
    hausdorff(&curve, &poly).expect("both sets are nonempty")
}

/// Ordered passage through the skeleton points and Hausdorff proximity within `s`.
pub fn check_compatible(c: &Contour, sk: &Skeleton) -> bool {
    spacing_ok(sk.points(), sk.scale())
        && passes_in_order(c, sk)
        && contour_polygon_distance(c, sk) <= sk.scale() + SCALE_EPS
}

/// Whether the contours can be matched one-to-one with the skeletons, each pair compatible.
pub fn set_compatible(contours: &[&Contour], set: &[Skeleton]) -> bool {
    if contours.len() != set.len() {
        return false;
    }
    let n = set.len();
    let ok: Vec<Vec<bool>> = contours.iter().map(|c| set.iter().map(|s| check_compatible(c, s)).collect()).collect();
    fn assign(i: usize, used: &mut Vec<bool>, ok: &[Vec<bool>]) -> bool {
        if i == ok.len() {
            return true;
        }
        for j in 0..used.len() {
            if ok[i][j] && !used[j] {
                used[j] = true;
                if assign(i + 1, used, ok) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
    assign(0, &mut vec![false; n], &ok)
}

/// Area of the region with odd crossing parity with respect to all polygons.
///
/// Slab decomposition: between consecutive critical ordinates (vertices and edge
/// crossings) no edges cross, so the odd region is a union of trapezoids.
pub fn winding_region(polygons: &[Polygon]) -> f64 {
    let edges: Vec<(Point, Point)> = polygons
        .iter()
        .flat_map(|p| p.edges())
        .filter(|(a, b)| a.y != b.y)
        .map(|(a, b)| if a.y < b.y { (a, b) } else { (b, a) })
        .collect();
    let mut ys: Vec<f64> = edges.iter().flat_map(|(a, b)| [a.y, b.y]).collect();
    for i in 0..edges.len() {
        for j in i + 1..edges.len() {
            if let Some(y) = crossing_ordinate(edges[i], edges[j]) {
                ys.push(y);
            }
        }
    }
    ys.sort_by(f64::total_cmp);
    ys.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let x_at = |(a, b): (Point, Point), y: f64| a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x);
    let mut area = 0.0;
    for w in ys.windows(2) {
        let (y0, y1) = (w[0], w[1]);
        let ym = 0.5 * (y0 + y1);
        let mut xs: Vec<(f64, f64, f64)> = edges
            .iter()
            .filter(|(a, b)| a.y <= ym && ym < b.y)
            .map(|&e| (x_at(e, ym), x_at(e, y0), x_at(e, y1)))
            .collect();
        xs.sort_by(|p, q| p.0.total_cmp(&q.0));
        for pair in xs.chunks(2) {
            if let [l, r] = pair {
                area += 0.5 * ((r.1 - l.1) + (r.2 - l.2)) * (y1 - y0);
            }
        }
    }
    area
}

fn crossing_ordinate(e: (Point, Point), f: (Point, Point)) -> Option<f64> {
    let r = e.1.sub(e.0);
    let q = f.1.sub(f.0);
    let denom = r.cross(q);
    if denom.abs() < 1e-15 {
        return None;
    }
    let t = f.0.sub(e.0).cross(q) / denom;
    let u = f.0.sub(e.0).cross(r) / denom;
    if t > 0.0 && t < 1.0 && u > 0.0 && u < 1.0 {
        Some(e.0.y + t * r.y)
    } else {
        None
    }
}

/// `Σ τ(n_edge) · |edge|` over the polygon edges.
///
/// The edge normal's orientation does not matter: the surface tension is invariant under
/// quarter turns, hence under `n → -n`.
pub fn wulff_functional(p: &Polygon, tau: &SurfaceTension) -> Result<f64> {
    if !(tau.tau_min() > 0.0) {
        return Err(invalid("surface tension must be strictly positive"));
    }
    Ok(p.edges()
        .map(|(a, b)| {
            let d = b.sub(a);
            let len = d.norm();
            if len == 0.0 {
                0.0
            } else {
                tau.tau(d.y.atan2(d.x) - std::f64::consts::FRAC_PI_2) * len
            }
        })
        .sum())
}

/// Wulff functional of a skeleton collection.
pub fn wulff_functional_set(set: &[Skeleton], tau: &SurfaceTension) -> Result<f64> {
    set.iter().map(|s| wulff_functional(&polygon_of(s), tau)).sum()
}
