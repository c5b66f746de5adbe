//! Peierls contours.
//!
//! Geometry uses doubled integer coordinates: the centre of site `(x, y)` is `(2x, 2y)` and
//! dual sites sit at odd coordinates. `y` grows southward, matching the row index of
//! [`SpinGrid`]. Where four contour bonds meet, the south bond is paired with the east
//! bond and the north bond with the west bond, so the resolved curves wrap tightly around
//! the south-east and north-west sites of the crossing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::lattice::{Boundary, SpinGrid};

/// Dual-lattice point in doubled coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DualPoint {
    pub x2: i32,
    pub y2: i32,
}

impl DualPoint {
    pub const fn new(x2: i32, y2: i32) -> Self {
        DualPoint { x2, y2 }
    }

    /// Undoubled planar position.
    pub fn to_point(self) -> Point {
        Point::new(self.x2 as f64 / 2.0, self.y2 as f64 / 2.0)
    }

    pub fn is_dual_site(self) -> bool {
        self.x2.rem_euclid(2) == 1 && self.y2.rem_euclid(2) == 1
    }

    pub fn dist(self, o: DualPoint) -> f64 {
        (((self.x2 - o.x2) as f64).powi(2) + ((self.y2 - o.y2) as f64).powi(2)).sqrt() / 2.0
    }

    /// Squared distance in doubled units (four times the planar squared distance).
    pub fn dist2_doubled(self, o: DualPoint) -> i64 {
        let dx = (self.x2 - o.x2) as i64;
        let dy = (self.y2 - o.y2) as i64;
        dx * dx + dy * dy
    }
}

const N: u8 = 1;
const E: u8 = 2;
const S: u8 = 4;
const W: u8 = 8;

fn opposite(d: u8) -> u8 {
    match d {
        N => S,
        S => N,
        E => W,
        _ => E,
    }
}

fn step(d: u8) -> (i32, i32) {
    match d {
        N => (0, -1),
        S => (0, 1),
        E => (1, 0),
        _ => (-1, 0),
    }
}

/// Outgoing side at a four-valent vertex for a curve arriving through side `d_in`.
fn rounding_partner(d_in: u8) -> u8 {
    match d_in {
        S => E,
        E => S,
        N => W,
        _ => N,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    /// Cyclic vertex sequence; consecutive entries (and last → first) are adjacent dual sites.
    pub vertices: Vec<DualPoint>,
    /// Number of dual bonds.
    pub length: usize,
    /// Number of enclosed plaquettes.
    pub interior_area: usize,
    /// Enclosed sites `(x, y)`, sorted row-major.
    pub interior_sites: Vec<(usize, usize)>,
    /// Euclidean diameter of the enclosed region.
    pub diameter: f64,
    pub external: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourMetrics {
    pub length: usize,
    pub area: usize,
    pub sites: usize,
    pub diameter: f64,
}

/// JSON-lines representation of a contour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourRecord {
    pub vertices: Vec<[i32; 2]>,
    pub length: usize,
    pub area: usize,
    pub diameter: f64,
    pub external: bool,
}

impl Contour {
    fn from_vertices(vertices: Vec<DualPoint>) -> Self {
        let interior_sites = winding_sites(&vertices);
        let diameter = hull_diameter(&vertices);
        Contour {
            length: vertices.len(),
            interior_area: interior_sites.len(),
            interior_sites,
            diameter,
            vertices,
            external: true,
        }
    }

    pub fn metrics(&self) -> ContourMetrics {
        contour_metrics(self)
    }

    /// Shoelace area of the vertex polygon, in plaquettes.
    pub fn shoelace_area(&self) -> f64 {
        let n = self.vertices.len();
        let twice4: i64 = (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                a.x2 as i64 * b.y2 as i64 - a.y2 as i64 * b.x2 as i64
            })
            .sum();
        (twice4 as f64 / 8.0).abs()
    }

    pub fn points(&self) -> Vec<Point> {
        self.vertices.iter().map(|v| v.to_point()).collect()
    }

    /// Whether site `(x, y)` lies inside the contour (odd crossing parity of an eastward ray).
    pub fn contains_site(&self, x: usize, y: usize) -> bool {
        let (px, py) = (2 * x as i32, 2 * y as i32);
        let n = self.vertices.len();
        let mut inside = false;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if a.x2 == b.x2 && a.x2 > px && a.y2.min(b.y2) < py && py < a.y2.max(b.y2) {
                inside = !inside;
            }
        }
        inside
    }

    /// Closed, bonds distinct, and every repeated vertex is a rounded crossing: its two
    /// passages use the south/east and north/west bond pairs respectively.
    pub fn is_closed_and_simple(&self) -> bool {
        let n = self.vertices.len();
        if n < 4 || n % 2 != 0 {
            return false;
        }
        let dir = |a: DualPoint, b: DualPoint| -> Option<u8> {
            match (b.x2 - a.x2, b.y2 - a.y2) {
                (0, -2) => Some(N),
                (0, 2) => Some(S),
                (2, 0) => Some(E),
                (-2, 0) => Some(W),
                _ => None,
            }
        };
        let mut passages: std::collections::HashMap<DualPoint, Vec<u8>> = Default::default();
        let mut bonds = std::collections::HashSet::new();
        for i in 0..n {
            let prev = self.vertices[(i + n - 1) % n];
            let cur = self.vertices[i];
            let next = self.vertices[(i + 1) % n];
            if !cur.is_dual_site() {
                return false;
            }
            let (Some(d_in), Some(d_out)) = (dir(cur, prev), dir(cur, next)) else {
                return false;
            };
            if d_in == d_out {
                return false;
            }
            let key = if (cur.x2, cur.y2) < (next.x2, next.y2) { (cur, next) } else { (next, cur) };
            if !bonds.insert(key) {
                return false;
            }
            passages.entry(cur).or_default().push(d_in | d_out);
        }
        passages.values().all(|p| match p.as_slice() {
            [_] => true,
            [a, b] => (*a == S | E && *b == N | W) || (*a == N | W && *b == S | E),
            _ => false,
        })
    }

    pub fn to_record(&self) -> ContourRecord {
        ContourRecord {
            vertices: self.vertices.iter().map(|v| [v.x2, v.y2]).collect(),
            length: self.length,
            area: self.interior_area,
            diameter: self.diameter,
            external: self.external,
        }
    }
}

/// Sites with odd crossing parity with respect to the closed vertex ring.
fn winding_sites(vertices: &[DualPoint]) -> Vec<(usize, usize)> {
    let n = vertices.len();
    // vertical bonds keyed by the site row they cross: row j spans y2 in (2j-1, 2j+1)
    let mut rows: std::collections::BTreeMap<i32, Vec<i32>> = Default::default();
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        if a.x2 == b.x2 {
            let row = (a.y2.min(b.y2) + 1) / 2;
            rows.entry(row).or_default().push(a.x2);
        }
    }
    let mut sites = Vec::new();
    for (row, mut xs) in rows {
        xs.sort_unstable();
        for pair in xs.chunks(2) {
            if let [a, b] = pair {
                // sites with 2x in (a, b)
                let first = (a + 1) / 2;
                let last = (b - 1) / 2;
                for x in first..=last {
                    sites.push((x as usize, row as usize));
                }
            }
        }
    }
    sites.sort_unstable_by_key(|&(x, y)| (y, x));
    sites
}

fn hull_diameter(vertices: &[DualPoint]) -> f64 {
    let mut pts: Vec<(i64, i64)> = vertices.iter().map(|v| (v.x2 as i64, v.y2 as i64)).collect();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 2 {
        return 0.0;
    }
    let cross = |o: (i64, i64), a: (i64, i64), b: (i64, i64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(pts.len() * 2);
    for &p in pts.iter().chain(pts.iter().rev().skip(1)) {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let mut best = 0i64;
    for (i, a) in hull.iter().enumerate() {
        for b in &hull[i + 1..] {
            best = best.max((a.0 - b.0).pow(2) + (a.1 - b.1).pow(2));
        }
    }
    (best as f64).sqrt() / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSet {
    pub contours: Vec<Contour>,
    pub side: usize,
    pub boundary: Boundary,
}

impl ContourSet {
    pub fn len(&self) -> usize {
        self.contours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contours.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Contour> {
        self.contours.iter()
    }

    /// Number of contours enclosing each site (row-major).
    pub fn nesting_depth(&self) -> Vec<u32> {
        let mut depth = vec![0u32; self.side * self.side];
        for c in &self.contours {
            for &(x, y) in &c.interior_sites {
                depth[y * self.side + x] += 1;
            }
        }
        depth
    }

    /// Sites enclosed by an odd number of contours.
    pub fn odd_parity_sites(&self) -> Vec<bool> {
        self.nesting_depth().into_iter().map(|d| d % 2 == 1).collect()
    }
}

/// Site just inside the contour, across its first vertical bond.
fn probe_site(c: &Contour) -> Option<(usize, usize)> {
    let n = c.vertices.len();
    for i in 0..n {
        let a = c.vertices[i];
        let b = c.vertices[(i + 1) % n];
        if a.x2 == b.x2 {
            let row = ((a.y2.min(b.y2) + 1) / 2) as usize;
            for x in [(a.x2 - 1) / 2, (a.x2 + 1) / 2] {
                if x >= 0 && c.interior_sites.binary_search_by_key(&(row, x as usize), |&(sx, sy)| (sy, sx)).is_ok() {
                    return Some((x as usize, row));
                }
            }
        }
    }
    None
}

fn mark_external(contours: &mut [Contour], side: usize) {
    let mut depth = vec![0u32; side * side];
    for c in contours.iter() {
        for &(x, y) in &c.interior_sites {
            depth[y * side + x] += 1;
        }
    }
    for c in contours.iter_mut() {
        c.external = match probe_site(c) {
            Some((x, y)) => depth[y * side + x] == 1,
            None => true,
        };
    }
}

/// Decomposes the plus/minus interface of `grid` into closed contours.
pub fn extract_contours(grid: &SpinGrid) -> Result<ContourSet> {
    if grid.boundary() == Boundary::Free {
        return Err(Error::FreeBoundary);
    }
    let l = grid.side();
    let vl = l + 1;
    let spin = |x: isize, y: isize| grid.spin_or_boundary(x, y);
    // vertex (a, b) sits at doubled (2a - 1, 2b - 1)
    let mut mask = vec![0u8; vl * vl];
    for j in 0..l as isize {
        for a in 0..=l as isize {
            // vertical bond on line a, row j between sites (a-1, j) and (a, j)
            if spin(a - 1, j) != spin(a, j) {
                mask[j as usize * vl + a as usize] |= S;
                mask[(j as usize + 1) * vl + a as usize] |= N;
            }
        }
    }
    for b in 0..=l as isize {
        for i in 0..l as isize {
            // horizontal bond on line b, column i between sites (i, b-1) and (i, b)
            if spin(i, b - 1) != spin(i, b) {
                mask[b as usize * vl + i as usize] |= E;
                mask[b as usize * vl + i as usize + 1] |= W;
            }
        }
    }
    let original = mask.clone();
    let mut contours = Vec::new();
    for start in 0..vl * vl {
        while mask[start] != 0 {
            let d_start = mask[start] & mask[start].wrapping_neg();
            let (sa, sb) = ((start % vl) as i32, (start / vl) as i32);
            let mut verts = vec![DualPoint::new(2 * sa - 1, 2 * sb - 1)];
            let (mut a, mut b) = (sa, sb);
            let mut d_out = d_start;
            loop {
                let here = (b as usize) * vl + a as usize;
                mask[here] &= !d_out;
                let (dx, dy) = step(d_out);
                a += dx;
                b += dy;
                let there = (b as usize) * vl + a as usize;
                let d_in = opposite(d_out);
                mask[there] &= !d_in;
                let orig = original[there];
                let next = if orig.count_ones() == 4 { rounding_partner(d_in) } else { orig & !d_in };
                if there == start && next == d_start {
                    break;
                }
                verts.push(DualPoint::new(2 * a - 1, 2 * b - 1));
                d_out = next;
            }
            contours.push(Contour::from_vertices(verts));
        }
    }
    mark_external(&mut contours, l);
    Ok(ContourSet { contours, side: l, boundary: grid.boundary() })
}

/// Contours not enclosed by any other member of the set.
pub fn external_contours(set: &ContourSet) -> ContourSet {
    let mut contours = set.contours.clone();
    mark_external(&mut contours, set.side);
    contours.retain(|c| c.external);
    ContourSet { contours, side: set.side, boundary: set.boundary }
}

pub fn contour_metrics(c: &Contour) -> ContourMetrics {
    ContourMetrics {
        length: c.length,
        area: c.interior_area,
        sites: c.interior_sites.len(),
        diameter: c.diameter,
    }
}

/// Contours with diameter at least `s`.
pub fn s_large(set: &ContourSet, s: f64) -> ContourSet {
    ContourSet {
        contours: set.contours.iter().filter(|c| c.diameter >= s - 1e-12).cloned().collect(),
        side: set.side,
        boundary: set.boundary,
    }
}

/// Sum of the spins enclosed by `c`.
pub fn interior_magnetization(grid: &SpinGrid, c: &Contour) -> i64 {
    c.interior_sites.iter().map(|&(x, y)| grid.get(x, y) as i64).sum()
}
