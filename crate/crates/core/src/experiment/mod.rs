//! Deficit sweeps: translate `Δ` into a magnetization target, sample at fixed
//! magnetization, classify every retained grid and aggregate per `Δ`.

mod classify;
mod config;
mod output;
mod sweep;

pub use classify::{classify_events, Flags, LargestContour, SampleRecord, Thresholds};
pub use config::{BulkSource, ExperimentConfig, TauSource};
pub use output::{write_outputs, write_records_jsonl, write_summary_csv, SUMMARY_HEADER};
pub use sweep::{run_sweep, DeltaRow, SweepOutput, SweepSummary, HISTOGRAM_BINS, HISTOGRAM_WIDTH};

use crate::error::{invalid, Result};

/// Deficit volume `v = (Δ χ w₁ L² / (2 m*²))^{2/3}`, rejected when `v ≥ ρ L²`.
pub fn v_from_delta(delta: f64, m_star: f64, chi: f64, w1: f64, side: usize, rho: f64) -> Result<f64> {
    for (name, x) in [("delta", delta), ("m*", m_star), ("chi", chi), ("w1", w1), ("rho", rho)] {
        if !(x > 0.0 && x.is_finite()) {
            return Err(invalid(format!("{name} = {x} must be positive")));
        }
    }
    if side == 0 {
        return Err(invalid("L must be positive"));
    }
    let n = (side * side) as f64;
    let v = (delta * chi * w1 * n / (2.0 * m_star * m_star)).powf(2.0 / 3.0);
    if v >= rho * n {
        return Err(invalid(format!("deficit volume {v:.3} is not below {rho} L^2 = {:.3}", rho * n)));
    }
    Ok(v)
}

/// Inverse of [`v_from_delta`]: `Δ = 2 m*² v^{3/2} / (χ w₁ L²)`.
pub fn delta_from_v(v: f64, m_star: f64, chi: f64, w1: f64, side: usize) -> f64 {
    2.0 * m_star * m_star * v.powf(1.5) / (chi * w1 * (side * side) as f64)
}
