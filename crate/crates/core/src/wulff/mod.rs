//! Surface tension models, Wulff shapes, Hausdorff distances and shape fits.

mod hausdorff;
mod transfer;

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::geometry::{signed_area, Point};
use crate::skeleton::{wulff_functional, Polygon};

pub use hausdorff::{cell_hausdorff, fit_shape, hausdorff, polygon_centroid, rasterize_convex, Geometry, ShapeFit};
pub use transfer::{
    axis_tension_closed_form, canonical_direction, dual_beta, estimate_tau, TauEstimate, TauSettings, WidthFit,
    MAX_WINDOW, MIN_R_SQUARED,
};

/// Primitive directions sampled in the first octant for the estimated tension table.
pub const OCTANT_DIRECTIONS: [(i64, i64); 5] = [(1, 0), (3, 1), (2, 1), (3, 2), (1, 1)];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TensionModel {
    Constant(f64),
    Tabulated,
    DualEstimated { beta: f64, max_error: f64 },
}

/// Direction-dependent line tension `τ(θ)`, invariant under quarter turns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceTension {
    model: TensionModel,
    /// `(angle, value)` nodes sorted by angle in `[0, π/2)`.
    table: Vec<(f64, f64)>,
    tau_min: f64,
}

impl SurfaceTension {
    pub fn constant(tau0: f64) -> Result<Self> {
        if !(tau0 > 0.0) || !tau0.is_finite() {
            return Err(invalid("surface tension must be positive"));
        }
        Ok(SurfaceTension { model: TensionModel::Constant(tau0), table: vec![(0.0, tau0)], tau_min: tau0 })
    }

    /// Linear interpolation through nodes given on one quarter period `[0, π/2)`.
    pub fn tabulated(nodes: &[(f64, f64)]) -> Result<Self> {
        Self::from_nodes(TensionModel::Tabulated, nodes)
    }

    fn from_nodes(model: TensionModel, nodes: &[(f64, f64)]) -> Result<Self> {
        if nodes.is_empty() {
            return Err(invalid("tension table is empty"));
        }
        if nodes.iter().any(|&(a, v)| !(0.0..FRAC_PI_2).contains(&a) || !(v > 0.0) || !v.is_finite()) {
            return Err(invalid("tension nodes need angles in [0, pi/2) and positive values"));
        }
        let mut table = nodes.to_vec();
        table.sort_by(|a, b| a.0.total_cmp(&b.0));
        table.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-15);
        let tau_min = table.iter().map(|n| n.1).fold(f64::INFINITY, f64::min);
        Ok(SurfaceTension { model, table, tau_min })
    }

    /// Table built from transfer-matrix estimates along [`OCTANT_DIRECTIONS`], reflected
    /// across the diagonal.
    pub fn dual_estimated(beta: f64, settings: &TauSettings) -> Result<Self> {
        let estimates: Vec<TauEstimate> = OCTANT_DIRECTIONS
            .par_iter()
            .map(|&k| estimate_tau(beta, k, settings))
            .collect::<Result<_>>()?;
        let mut nodes = Vec::new();
        for e in &estimates {
            let theta = (e.direction.1 as f64).atan2(e.direction.0 as f64);
            nodes.push((theta, e.tau));
            if theta > 0.0 && theta < PI / 4.0 - 1e-12 {
                nodes.push((FRAC_PI_2 - theta, e.tau));
            }
        }
        let max_error = estimates.iter().map(|e| e.error).fold(0.0, f64::max);
        Self::from_nodes(TensionModel::DualEstimated { beta, max_error }, &nodes)
    }

    pub fn model(&self) -> &TensionModel {
        &self.model
    }

    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.table
    }

    pub fn tau_min(&self) -> f64 {
        self.tau_min
    }

    pub fn tau_max(&self) -> f64 {
        self.table.iter().map(|n| n.1).fold(0.0, f64::max)
    }

    /// `τ` at the unit normal with angle `theta`.
    pub fn tau(&self, theta: f64) -> f64 {
        if let TensionModel::Constant(t) = self.model {
            return t;
        }
        let t = theta.rem_euclid(FRAC_PI_2);
        let n = self.table.len();
        if n == 1 {
            return self.table[0].1;
        }
        let i = self.table.partition_point(|node| node.0 <= t);
        let (a, b) = if i == 0 {
            let (la, lv) = self.table[n - 1];
            ((la - FRAC_PI_2, lv), self.table[0])
        } else if i == n {
            let (fa, fv) = self.table[0];
            (self.table[n - 1], (fa + FRAC_PI_2, fv))
        } else {
            (self.table[i - 1], self.table[i])
        };
        a.1 + (t - a.0) / (b.0 - a.0) * (b.1 - a.1)
    }

    /// Same angular profile multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(invalid("scale factor must be positive"));
        }
        let model = match &self.model {
            TensionModel::Constant(t) => TensionModel::Constant(t * c),
            other => other.clone(),
        };
        Ok(SurfaceTension {
            model,
            table: self.table.iter().map(|&(a, v)| (a, v * c)).collect(),
            tau_min: self.tau_min * c,
        })
    }

    /// `theta,tau` rows over one quarter period.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("theta,tau\n");
        for &(a, v) in &self.table {
            s.push_str(&format!("{a:.12},{v:.12}\n"));
        }
        s
    }
}

/// Unit-area Wulff shape and its boundary energy `w₁`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WulffShape {
    pub polygon: Polygon,
    pub w1: f64,
    pub tau_ref: SurfaceTension,
    pub n_directions: usize,
}

impl WulffShape {
    pub fn area(&self) -> f64 {
        signed_area(&self.polygon.vertices)
    }

    pub fn diameter(&self) -> f64 {
        crate::geometry::diameter(&self.polygon.vertices)
    }

    pub fn vertices_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.polygon.vertices.iter().map(|p| serde_json::json!([p.x, p.y])).collect(),
        )
    }
}

fn clip(poly: &[Point], normal: Point, bound: f64) -> Vec<Point> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let (fa, fb) = (a.dot(normal) - bound, b.dot(normal) - bound);
        if fa <= 0.0 {
            out.push(a);
        }
        if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) {
            let t = fa / (fa - fb);
            out.push(a.add(b.sub(a).scale(t)));
        }
    }
    out
}

/// Intersection of the half-planes `r·n(θⱼ) ≤ τ(θⱼ)` over `n_directions` equally spaced
/// angles, rescaled to unit area.
pub fn build_wulff(tau: &SurfaceTension, n_directions: usize) -> Result<WulffShape> {
    if n_directions < 8 || n_directions % 4 != 0 {
        return Err(invalid("n_directions must be a multiple of 4 and at least 8"));
    }
    if !(tau.tau_min() > 0.0) {
        return Err(invalid("surface tension must be strictly positive"));
    }
    let b = 4.0 * tau.tau_max();
    let mut poly = vec![Point::new(-b, -b), Point::new(b, -b), Point::new(b, b), Point::new(-b, b)];
    for j in 0..n_directions {
        let theta = 2.0 * PI * j as f64 / n_directions as f64;
        poly = clip(&poly, Point::new(theta.cos(), theta.sin()), tau.tau(theta));
    }
    let eps = 1e-13 * tau.tau_max();
    let mut cleaned: Vec<Point> = Vec::with_capacity(poly.len());
    for p in poly {
        if cleaned.last().map_or(true, |q: &Point| q.dist(p) > eps) {
            cleaned.push(p);
        }
    }
    while cleaned.len() > 1 && cleaned[0].dist(*cleaned.last().unwrap()) <= eps {
        cleaned.pop();
    }
    let area = signed_area(&cleaned);
    if !(area > 0.0) {
        return Err(invalid("degenerate Wulff polygon"));
    }
    let k = 1.0 / area.sqrt();
    let polygon = Polygon::new(cleaned.into_iter().map(|p| p.scale(k)).collect())?;
    let w1 = wulff_functional(&polygon, tau)?;
    Ok(WulffShape { polygon, w1, tau_ref: tau.clone(), n_directions })
}
