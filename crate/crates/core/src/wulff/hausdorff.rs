//! Hausdorff distances between planar sets and droplet-to-shape fitting.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::geometry::{point_in_ring, point_segment_dist, Point};

/// Compact planar set described by its pieces.
#[derive(Debug, Clone)]
pub enum Geometry {
    Points(Vec<Point>),
    /// Open polygonal chain.
    Polyline(Vec<Point>),
    /// Closed polygonal curve.
    ClosedPolyline(Vec<Point>),
    /// Closed region bounded by a simple polygon (boundary and interior).
    Region(Vec<Point>),
}

struct Prepared {
    points: Vec<Point>,
    segments: Vec<(Point, Point)>,
    rings: Vec<Vec<Point>>,
}

impl Prepared {
    fn new(g: &Geometry) -> Result<Self> {
        let closed = |v: &[Point]| -> Vec<(Point, Point)> {
            (0..v.len()).map(|i| (v[i], v[(i + 1) % v.len()])).collect()
        };
        let p = match g {
            Geometry::Points(v) => Prepared { points: v.clone(), segments: vec![], rings: vec![] },
            Geometry::Polyline(v) => Prepared {
                points: v.clone(),
                segments: v.windows(2).map(|w| (w[0], w[1])).collect(),
                rings: vec![],
            },
            Geometry::ClosedPolyline(v) => Prepared { points: v.clone(), segments: closed(v), rings: vec![] },
            Geometry::Region(v) => Prepared { points: v.clone(), segments: closed(v), rings: vec![v.clone()] },
        };
        if p.points.is_empty() {
            return Err(invalid("Hausdorff distance needs nonempty sets"));
        }
        Ok(p)
    }

    fn dist(&self, q: Point) -> f64 {
        if self.rings.iter().any(|r| point_in_ring(q, r)) {
            return 0.0;
        }
        let a = self.points.iter().map(|p| p.dist(q)).fold(f64::INFINITY, f64::min);
        let b = self.segments.iter().map(|&(s, t)| point_segment_dist(q, s, t)).fold(f64::INFINITY, f64::min);
        a.min(b)
    }

    /// Upper bound of the distance over the convex hull of `corners`: distance to each
    /// piece is convex, so its maximum over the hull is attained at a corner.
    fn upper_bound(&self, corners: &[Point]) -> f64 {
        let piece_max = |f: &dyn Fn(Point) -> f64| corners.iter().map(|&c| f(c)).fold(0.0, f64::max);
        let a = self.points.iter().map(|p| piece_max(&|c| p.dist(c))).fold(f64::INFINITY, f64::min);
        let b = self
            .segments
            .iter()
            .map(|&(s, t)| piece_max(&|c| point_segment_dist(c, s, t)))
            .fold(f64::INFINITY, f64::min);
        a.min(b)
    }

    fn bbox(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.points {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        (lo, hi)
    }
}

const MAX_CELLS: usize = 2_000_000;

/// `sup_{a ∈ A} dist(a, B)` by branch and bound.
fn directed(a: &Prepared, b: &Prepared, tol: f64) -> f64 {
    let mut best = a.points.iter().map(|&p| b.dist(p)).fold(0.0, f64::max);
    for &(s, t) in &a.segments {
        let mut stack = vec![(s, t)];
        let mut budget = MAX_CELLS;
        while let Some((p, q)) = stack.pop() {
            if b.upper_bound(&[p, q]) <= best + tol || budget == 0 {
                continue;
            }
            budget -= 1;
            let m = p.add(q).scale(0.5);
            best = best.max(b.dist(m));
            if p.dist(q) > tol {
                stack.push((p, m));
                stack.push((m, q));
            }
        }
    }
    for ring in &a.rings {
        let (lo, hi) = Prepared { points: ring.clone(), segments: vec![], rings: vec![] }.bbox();
        let side = (hi.x - lo.x).max(hi.y - lo.y).max(tol);
        let mut stack = vec![(lo, side)];
        let mut budget = MAX_CELLS;
        while let Some((c0, w)) = stack.pop() {
            let centre = Point::new(c0.x + 0.5 * w, c0.y + 0.5 * w);
            let half_diag = w * std::f64::consts::FRAC_1_SQRT_2;
            if a.dist(centre) > half_diag || budget == 0 {
                continue;
            }
            let corners = [c0, Point::new(c0.x + w, c0.y), Point::new(c0.x, c0.y + w), Point::new(c0.x + w, c0.y + w)];
            if b.upper_bound(&corners) <= best + tol {
                continue;
            }
            budget -= 1;
            if point_in_ring(centre, ring) {
                best = best.max(b.dist(centre));
            }
            if half_diag > tol {
                let h = 0.5 * w;
                for (dx, dy) in [(0.0, 0.0), (h, 0.0), (0.0, h), (h, h)] {
                    stack.push((Point::new(c0.x + dx, c0.y + dy), h));
                }
            }
        }
    }
    best
}

/// Symmetric Hausdorff distance `max(sup_A dist(·,B), sup_B dist(·,A))`.
pub fn hausdorff(a: &Geometry, b: &Geometry) -> Result<f64> {
    let pa = Prepared::new(a)?;
    let pb = Prepared::new(b)?;
    let (lo_a, hi_a) = pa.bbox();
    let (lo_b, hi_b) = pb.bbox();
    let extent = [lo_a.x, lo_a.y, hi_a.x, hi_a.y, lo_b.x, lo_b.y, hi_b.x, hi_b.y]
        .iter()
        .fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-9 * extent;
    Ok(directed(&pa, &pb, tol).max(directed(&pb, &pa, tol)))
}

/// Hausdorff distance between two finite sets of lattice cells, by brute force.
pub fn cell_hausdorff(a: &[(i64, i64)], b: &[(i64, i64)]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("Hausdorff distance needs nonempty sets"));
    }
    let d2 = |p: (i64, i64), q: (i64, i64)| (p.0 - q.0).pow(2) + (p.1 - q.1).pow(2);
    let dir = |x: &[(i64, i64)], y: &[(i64, i64)]| {
        x.iter().map(|&p| y.iter().map(|&q| d2(p, q)).min().unwrap()).max().unwrap()
    };
    Ok((dir(a, b).max(dir(b, a)) as f64).sqrt())
}

/// Stand-in for "no marked cell" that keeps the parabola arithmetic finite.
const FAR: f64 = 1e20;

/// One-dimensional squared Euclidean distance transform (Felzenszwalb–Huttenlocher).
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let inter = |q: usize, p: usize| {
        ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * q as f64 - 2.0 * p as f64)
    };
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let mut s = inter(q, v[k]);
        while s <= z[k] {
            k -= 1;
            s = inter(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared distance from every cell of a `w × h` grid to the nearest marked cell.
pub(crate) fn squared_edt(mask: &[bool], w: usize, h: usize) -> Vec<f64> {
    let n = w.max(h);
    let (mut v, mut z) = (vec![0usize; n], vec![0.0; n + 1]);
    let mut g: Vec<f64> = mask.iter().map(|&m| if m { 0.0 } else { FAR }).collect();
    let mut col = vec![0.0; h];
    let mut col_out = vec![0.0; h];
    for x in 0..w {
        for y in 0..h {
            col[y] = g[y * w + x];
        }
        edt_1d(&col, &mut col_out, &mut v, &mut z);
        for y in 0..h {
            g[y * w + x] = col_out[y];
        }
    }
    let mut row_out = vec![0.0; w];
    for y in 0..h {
        edt_1d(&g[y * w..(y + 1) * w], &mut row_out, &mut v, &mut z);
        g[y * w..(y + 1) * w].copy_from_slice(&row_out);
    }
    g
}

/// Convex polygon split into two chains monotone in `y`, for row queries in `O(log n)`.
struct ConvexRaster {
    chains: [Vec<Point>; 2],
    ylo: f64,
    yhi: f64,
}

impl ConvexRaster {
    fn new(vertices: &[Point]) -> Self {
        let n = vertices.len();
        let by_y = |a: &&Point, b: &&Point| a.y.total_cmp(&b.y);
        let imin = (0..n).min_by(|&a, &b| by_y(&&vertices[a], &&vertices[b])).unwrap();
        let imax = (0..n).max_by(|&a, &b| by_y(&&vertices[a], &&vertices[b])).unwrap();
        let walk = |step: usize| {
            let mut chain = vec![vertices[imin]];
            let mut i = imin;
            while i != imax {
                i = (i + step) % n;
                chain.push(vertices[i]);
            }
            chain
        };
        ConvexRaster { chains: [walk(1), walk(n - 1)], ylo: vertices[imin].y, yhi: vertices[imax].y }
    }

    fn chain_x(chain: &[Point], y: f64) -> f64 {
        let j = chain.partition_point(|p| p.y < y);
        if j == 0 {
            return chain[0].x;
        }
        let j = j.min(chain.len() - 1);
        let (a, b) = (chain[j - 1], chain[j]);
        if b.y == a.y {
            b.x
        } else {
            a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x)
        }
    }

    /// Horizontal extent of the polygon at height `y`, if it meets that line.
    fn row_span(&self, y: f64) -> Option<(f64, f64)> {
        if y < self.ylo || y > self.yhi {
            return None;
        }
        let a = Self::chain_x(&self.chains[0], y);
        let b = Self::chain_x(&self.chains[1], y);
        Some((a.min(b), a.max(b)))
    }

    /// Cells with integer centres inside `scale · polygon + shift`.
    fn cells(&self, scale: f64, shift: Point, out: &mut Vec<(i64, i64)>) {
        out.clear();
        let ylo = (scale * self.ylo + shift.y).ceil() as i64;
        let yhi = (scale * self.yhi + shift.y).floor() as i64;
        for y in ylo..=yhi {
            if let Some((a, b)) = self.row_span((y as f64 - shift.y) / scale) {
                for x in (scale * a + shift.x).ceil() as i64..=(scale * b + shift.x).floor() as i64 {
                    out.push((x, y));
                }
            }
        }
    }
}

/// Best translation found for a droplet-to-shape fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeFit {
    pub best_distance: f64,
    pub best_shift: Point,
}

/// Cells (integer centres) inside `scale · shape + shift` for a convex `shape`.
pub fn rasterize_convex(shape: &[Point], scale: f64, shift: Point) -> Vec<(i64, i64)> {
    let mut cells = Vec::new();
    ConvexRaster::new(shape).cells(scale, shift, &mut cells);
    cells
}

/// Minimizes the cell-resolution Hausdorff distance between `region` and
/// `z + √|region| · shape` over translations `z`.
///
/// Coarse grid of shifts around the centroid match (± diam/4, step diam/64), then a
/// compass search down to `1e-3 · √|region|`. The result is an upper bound on the infimum.
pub fn fit_shape(region: &[(i64, i64)], shape: &[Point]) -> Result<ShapeFit> {
    if region.is_empty() || shape.len() < 3 {
        return Err(invalid("shape fit needs a nonempty region and a polygon"));
    }
    let scale = (region.len() as f64).sqrt();
    let n = region.len() as f64;
    let centroid = Point::new(
        region.iter().map(|c| c.0 as f64).sum::<f64>() / n,
        region.iter().map(|c| c.1 as f64).sum::<f64>() / n,
    );
    let shape_centroid = polygon_centroid(shape);
    let base = centroid.sub(shape_centroid.scale(scale));
    let shape_diam = crate::geometry::diameter(shape) * scale;
    let region_pts: Vec<Point> = region.iter().map(|&(x, y)| Point::new(x as f64, y as f64)).collect();
    let diam = crate::geometry::diameter(&region_pts).max(shape_diam).max(1.0);

    let reach = 0.25 * diam;
    let margin = (shape_diam + reach + 3.0).ceil() as i64;
    let (xmin, xmax) = (region.iter().map(|c| c.0).min().unwrap(), region.iter().map(|c| c.0).max().unwrap());
    let (ymin, ymax) = (region.iter().map(|c| c.1).min().unwrap(), region.iter().map(|c| c.1).max().unwrap());
    let ox = xmin.min((centroid.x - margin as f64).floor() as i64) - 1;
    let oy = ymin.min((centroid.y - margin as f64).floor() as i64) - 1;
    let w = (xmax.max((centroid.x + margin as f64).ceil() as i64) - ox + 2) as usize;
    let h = (ymax.max((centroid.y + margin as f64).ceil() as i64) - oy + 2) as usize;
    let idx = |x: i64, y: i64| ((y - oy) as usize) * w + (x - ox) as usize;
    let mut region_mask = vec![false; w * h];
    for &(x, y) in region {
        region_mask[idx(x, y)] = true;
    }
    let region_edt = squared_edt(&region_mask, w, h);

    let raster = ConvexRaster::new(shape);
    let objective = |z: Point| -> f64 {
        let mut cells = Vec::new();
        raster.cells(scale, z, &mut cells);
        if cells.is_empty() {
            return f64::INFINITY;
        }
        let mut d1: f64 = 0.0;
        for &(x, y) in &cells {
            if x < ox || y < oy || x >= ox + w as i64 || y >= oy + h as i64 {
                return f64::INFINITY;
            }
            d1 = d1.max(region_edt[idx(x, y)]);
        }
        let d2 = if region.len() * cells.len() <= 4 * w * h {
            region
                .iter()
                .map(|&(rx, ry)| cells.iter().map(|&(x, y)| ((x - rx).pow(2) + (y - ry).pow(2)) as f64).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        } else {
            let mut mask = vec![false; w * h];
            for &(x, y) in &cells {
                mask[idx(x, y)] = true;
            }
            let edt = squared_edt(&mask, w, h);
            region.iter().map(|&(x, y)| edt[idx(x, y)]).fold(0.0, f64::max)
        };
        d1.max(d2).sqrt()
    };

    let step = diam / 64.0;
    let mut best = (f64::INFINITY, base);
    for i in -16..=16 {
        for j in -16..=16 {
            let z = base.add(Point::new(i as f64 * step, j as f64 * step));
            let d = objective(z);
            if d < best.0 {
                best = (d, z);
            }
        }
    }
    let mut h_step = step / 2.0;
    let tol = 1e-3 * scale;
    while h_step >= tol {
        let mut improved = false;
        for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let z = best.1.add(Point::new(dx * h_step, dy * h_step));
            let d = objective(z);
            if d < best.0 {
                best = (d, z);
                improved = true;
            }
        }
        if !improved {
            h_step /= 2.0;
        }
    }
    Ok(ShapeFit { best_distance: best.0, best_shift: best.1 })
}

pub fn polygon_centroid(v: &[Point]) -> Point {
    let n = v.len();
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (p, q) = (v[i], v[(i + 1) % n]);
        let c = p.cross(q);
        a += c;
        cx += (p.x + q.x) * c;
        cy += (p.y + q.y) * c;
    }
    if a.abs() < 1e-300 {
        let k = n as f64;
        return Point::new(v.iter().map(|p| p.x).sum::<f64>() / k, v.iter().map(|p| p.y).sum::<f64>() / k);
    }
    Point::new(cx / (3.0 * a), cy / (3.0 * a))
}
