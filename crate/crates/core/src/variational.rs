//! The rate function `Φ_Δ(λ) = λ^{(d-1)/d} + Δ(1-λ)²` and its global minimizers.

use serde::Serialize;

use crate::error::{invalid, Result};

/// Tolerance for declaring the two candidate minima degenerate.
pub const CRITICAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiParams {
    pub delta: f64,
    pub d: u32,
}

impl PhiParams {
    pub fn new(delta: f64, d: u32) -> Result<Self> {
        if d < 2 {
            return Err(invalid("dimension must be at least 2"));
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(invalid("delta must be finite and nonnegative"));
        }
        Ok(PhiParams { delta, d })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiSolution {
    pub phi_star: f64,
    pub minimizers: Vec<f64>,
    /// Largest minimizer; at criticality both candidates are listed in `minimizers`.
    pub lambda_delta: f64,
    pub lambda_plus: Option<f64>,
}

impl PhiSolution {
    pub fn is_critical(&self) -> bool {
        self.minimizers.len() == 2
    }
}

/// Unchecked evaluation for `λ ∈ [0, 1]`.
fn phi_raw(lambda: f64, p: PhiParams) -> f64 {
    let d = p.d as f64;
    lambda.powf((d - 1.0) / d) + p.delta * (1.0 - lambda).powi(2)
}

pub fn phi(lambda: f64, p: PhiParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(invalid("lambda must lie in [0, 1]"));
    }
    Ok(phi_raw(lambda, p))
}

pub fn delta_c(d: u32) -> Result<f64> {
    if d < 2 {
        return Err(invalid("dimension must be at least 2"));
    }
    let d = d as f64;
    Ok(((d + 1.0) / 2.0).powf((d + 1.0) / d) / d)
}

pub fn lambda_c(d: u32) -> f64 {
    2.0 / (d as f64 + 1.0)
}

/// Left side of the stationarity condition minus one.
fn stationarity(lambda: f64, delta: f64, d: u32) -> f64 {
    let d = d as f64;
    2.0 * d / (d - 1.0) * delta * lambda.powf(1.0 / d) * (1.0 - lambda) - 1.0
}

/// Largest root in `(0, 1)` of `(2d/(d-1)) Δ λ^{1/d} (1-λ) = 1`, if any.
///
/// `λ^{1/d}(1-λ)` peaks at `1/(d+1)` and decreases afterwards, so bisection on
/// `[1/(d+1), 1]` brackets the maximal root whenever one exists.
pub fn lambda_plus(delta: f64, d: u32) -> Result<Option<f64>> {
    if d < 2 {
        return Err(invalid("dimension must be at least 2"));
    }
    if !(delta > 0.0) {
        return Err(invalid("delta must be positive"));
    }
    let mut lo = 1.0 / (d as f64 + 1.0);
    let mut hi = 1.0;
    if stationarity(lo, delta, d) < 0.0 {
        return Ok(None);
    }
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if stationarity(mid, delta, d) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if mid == lo && mid == hi {
            break;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

pub fn minimize_phi(p: PhiParams) -> Result<PhiSolution> {
    let at_zero = p.delta;
    let lp = if p.delta > 0.0 { lambda_plus(p.delta, p.d)? } else { None };
    let (minimizers, phi_star) = match lp {
        None => (vec![0.0], at_zero),
        Some(l) => {
            let at_l = phi_raw(l, p);
            if (at_l - at_zero).abs() < CRITICAL_TOL {
                (vec![0.0, l], at_zero.min(at_l))
            } else if at_l < at_zero {
                (vec![l], at_l)
            } else {
                (vec![0.0], at_zero)
            }
        }
    };
    let lambda_delta = *minimizers.last().unwrap();
    Ok(PhiSolution { phi_star, minimizers, lambda_delta, lambda_plus: lp })
}
