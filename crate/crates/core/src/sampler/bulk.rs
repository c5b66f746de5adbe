use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{metropolis_sweep, wolff_step, ChainParams, BETA_C};
use crate::error::{Error, Result};
use crate::lattice::{Boundary, Fill, SpinGrid};
use crate::rng::{purpose_rng, Purpose};
use crate::stats::{integrated_autocorr_time, mean, mean_with_error, variance};

/// Spontaneous magnetization and susceptibility from a plus-boundary run.
///
/// `chi_hat` is the finite-volume fluctuation ratio `Var(M) / L²`; it differs from the
/// infinite-volume correlation sum by boundary corrections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BulkEstimates {
    pub m_star_hat: f64,
    pub m_star_err: f64,
    pub chi_hat: f64,
    pub chi_err: f64,
    pub beta: f64,
    pub side: usize,
}

struct ChainSeries {
    m: Vec<f64>,
}

fn run_bulk_chain(side: usize, params: &ChainParams, chain: u64) -> ChainSeries {
    let mut grid = SpinGrid::new(side, Boundary::Plus, Fill::AllPlus).expect("side > 0");
    let mut rng = purpose_rng(params.seed, Purpose::Bulk, chain);
    let step = |g: &mut SpinGrid, rng: &mut _| {
        metropolis_sweep(g, params.beta, rng);
        wolff_step(g, params.beta, rng);
    };
    for _ in 0..params.thermalization {
        step(&mut grid, &mut rng);
    }
    let mut m = Vec::with_capacity(params.sweeps / params.sample_stride + 1);
    for sweep in 0..params.sweeps {
        step(&mut grid, &mut rng);
        if (sweep + 1) % params.sample_stride == 0 {
            m.push(grid.total_magnetization() as f64);
        }
    }
    ChainSeries { m }
}

fn split_half_check(m: &[f64]) -> Result<()> {
    if m.len() < 8 {
        return Ok(());
    }
    let (a, b) = m.split_at(m.len() / 2);
    let (ma, ea) = mean_with_error(a);
    let (mb, eb) = mean_with_error(b);
    let combined = (ea * ea + eb * eb).sqrt();
    if (ma - mb).abs() > 5.0 * combined {
        return Err(Error::Consistency(format!(
            "split-half means {ma:.4} and {mb:.4} differ by more than 5 combined standard errors ({combined:.4})"
        )));
    }
    Ok(())
}

fn chain_estimates(side: usize, m: &[f64]) -> (f64, f64, f64, f64) {
    let n = (side * side) as f64;
    let (mean_m, err_m) = mean_with_error(m);
    let mu = mean(m);
    let sq: Vec<f64> = m.iter().map(|x| (x - mu) * (x - mu)).collect();
    let chi = variance(m) / n;
    let tau_sq = integrated_autocorr_time(&sq);
    let chi_err = (variance(&sq) * 2.0 * tau_sq / sq.len().max(1) as f64).sqrt() / n;
    (mean_m / n, err_m / n, chi, chi_err)
}

/// Single-chain estimate of `m*` and `χ` on an `L × L` plus-boundary box.
pub fn estimate_bulk(side: usize, params: &ChainParams) -> Result<BulkEstimates> {
    estimate_bulk_parallel(side, params, 1)
}

/// Estimate from `chains` independent chains, merged in chain order.
pub fn estimate_bulk_parallel(side: usize, params: &ChainParams, chains: usize) -> Result<BulkEstimates> {
    params.validate()?;
    if side == 0 || chains == 0 {
        return Err(crate::error::invalid("side and chain count must be positive"));
    }
    if params.beta <= BETA_C {
        log::warn!("beta = {} is not above beta_c = {BETA_C:.6}; bulk estimates are not meaningful", params.beta);
    }
    let series: Vec<ChainSeries> = (0..chains as u64)
        .into_par_iter()
        .map(|c| run_bulk_chain(side, params, c))
        .collect();
    for s in &series {
        split_half_check(&s.m)?;
    }
    let per_chain: Vec<_> = series.iter().map(|s| chain_estimates(side, &s.m)).collect();
    let c = chains as f64;
    let (m_star_hat, m_star_err, chi_hat, chi_err) = if chains == 1 {
        per_chain[0]
    } else {
        let pooled: Vec<f64> = series.iter().flat_map(|s| s.m.iter().copied()).collect();
        let n = (side * side) as f64;
        let m_hat = mean(&pooled) / n;
        let m_err = (per_chain.iter().map(|e| e.1 * e.1).sum::<f64>()).sqrt() / c;
        let chi_hat = variance(&pooled) / n;
        let chis: Vec<f64> = per_chain.iter().map(|e| e.2).collect();
        let spread = (variance(&chis) / c).sqrt();
        let internal = (per_chain.iter().map(|e| e.3 * e.3).sum::<f64>()).sqrt() / c;
        (m_hat, m_err, chi_hat, spread.max(internal))
    };
    Ok(BulkEstimates {
        m_star_hat: m_star_hat.abs().min(1.0),
        m_star_err,
        chi_hat,
        chi_err,
        beta: params.beta,
        side,
    })
}
