//! Per-sample classification against the droplet events.

use serde::{Deserialize, Serialize};

use crate::contour::{extract_contours, external_contours, interior_magnetization, s_large};
use crate::error::Result;
use crate::lattice::SpinGrid;
use crate::variational::{phi, PhiParams};
use crate::wulff::{fit_shape, WulffShape};

/// Thresholds and targets shared by all samples of one deficit point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub scale: f64,
    pub kappa: f64,
    pub epsilon: f64,
    pub v: f64,
    pub delta: f64,
    /// `inf Φ_Δ`.
    pub phi_star: f64,
    pub m_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargestContour {
    pub volume: usize,
    pub diameter: f64,
    pub lambda_hat: f64,
    pub shape_distance: f64,
    /// `|Σ_{x inside} (σ_x + m*)|`.
    pub interior_mag_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub delta: f64,
    pub chain: u64,
    pub index: usize,
    #[serde(rename = "M")]
    pub magnetization: i64,
    /// Number of external contours with diameter at least `s`.
    pub n_s_large: usize,
    pub large_diameters: Vec<f64>,
    pub largest: Option<LargestContour>,
    pub droplet: bool,
    pub event_a: bool,
    pub event_b: bool,
}

/// Event flags implied by the stored fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Flags {
    pub droplet: bool,
    pub event_a: bool,
    pub event_b: bool,
}

impl LargestContour {
    pub fn shape_ok(&self, t: &Thresholds) -> bool {
        self.shape_distance <= (t.epsilon * t.v).sqrt()
    }

    /// A droplet holding more than the whole deficit lies outside `[0, 1]` and fails.
    pub fn volume_ok(&self, t: &Thresholds) -> bool {
        let Ok(params) = PhiParams::new(t.delta, 2) else { return false };
        phi(self.lambda_hat, params).is_ok_and(|p| p <= t.phi_star + t.epsilon)
    }

    pub fn magnetization_ok(&self, t: &Thresholds) -> bool {
        self.interior_mag_deviation <= t.epsilon * t.v
    }
}

impl SampleRecord {
    pub fn lambda_hat(&self) -> f64 {
        self.largest.as_ref().map_or(0.0, |l| l.lambda_hat)
    }

    pub fn derive_flags(&self, t: &Thresholds) -> Flags {
        let cut = t.kappa * t.v.sqrt();
        let droplet = self.large_diameters.iter().any(|&d| d > cut);
        let event_a = self.large_diameters.iter().all(|&d| d > cut);
        let event_b = self.n_s_large <= 1
            && self
                .largest
                .as_ref()
                .map_or(true, |l| l.shape_ok(t) && l.volume_ok(t) && l.magnetization_ok(t));
        Flags { droplet, event_a, event_b }
    }

    pub fn flags(&self) -> Flags {
        Flags { droplet: self.droplet, event_a: self.event_a, event_b: self.event_b }
    }
}

/// Classifies one canonical sample.
pub fn classify_events(grid: &SpinGrid, t: &Thresholds, wulff: &WulffShape) -> Result<SampleRecord> {
    let all = extract_contours(grid)?;
    let large = s_large(&external_contours(&all), t.scale);
    let large_diameters: Vec<f64> = large.contours.iter().map(|c| c.diameter).collect();
    let largest = match large.contours.iter().max_by_key(|c| c.interior_area) {
        None => None,
        Some(c) => {
            let cells: Vec<(i64, i64)> = c.interior_sites.iter().map(|&(x, y)| (x as i64, y as i64)).collect();
            let fit = fit_shape(&cells, &wulff.polygon.vertices)?;
            let inner = interior_magnetization(grid, c) as f64;
            Some(LargestContour {
                volume: c.interior_area,
                diameter: c.diameter,
                lambda_hat: c.interior_area as f64 / t.v,
                shape_distance: fit.best_distance,
                interior_mag_deviation: (inner + t.m_star * c.interior_area as f64).abs(),
            })
        }
    };
    let mut rec = SampleRecord {
        delta: t.delta,
        chain: 0,
        index: 0,
        magnetization: grid.total_magnetization(),
        n_s_large: large.contours.len(),
        large_diameters,
        largest,
        droplet: false,
        event_a: false,
        event_b: false,
    };
    let f = rec.derive_flags(t);
    rec.droplet = f.droplet;
    rec.event_a = f.event_a;
    rec.event_b = f.event_b;
    Ok(rec)
}
