use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classify::{classify_events, SampleRecord, Thresholds};
use super::config::{BulkSource, ExperimentConfig, TauSource};
use super::v_from_delta;
use crate::error::{Error, Result};
use crate::lattice::{deficit_target, write_snapshot};
use crate::rng::{purpose_rng, splitmix64, Purpose};
use crate::sampler::{estimate_bulk_parallel, CanonicalChain, ChainParams};
use crate::stats::{bootstrap_groups, median, quantile, wilson_interval};
use crate::variational::{minimize_phi, PhiParams};
use crate::wulff::{build_wulff, SurfaceTension, TauSettings, WulffShape};

/// λ̂ histogram: `HISTOGRAM_BINS` bins of width `HISTOGRAM_WIDTH`, the last one open.
pub const HISTOGRAM_BINS: usize = 16;
pub const HISTOGRAM_WIDTH: f64 = 0.1;
const BOOTSTRAP_RESAMPLES: usize = 400;
const WILSON_Z: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub delta: f64,
    pub v_l: f64,
    pub target_m: i64,
    pub lambda_theory: f64,
    pub phi_star: f64,
    pub n_samples: usize,
    pub lambda_hat_median: f64,
    pub lambda_hat_iqr: f64,
    /// Bootstrap-over-chains standard error of the median.
    pub lambda_hat_median_se: f64,
    pub frac_droplet: f64,
    pub frac_droplet_ci: (f64, f64),
    pub frac_a: f64,
    pub frac_a_ci: (f64, f64),
    pub frac_b: f64,
    pub frac_b_ci: (f64, f64),
    pub lambda_hat_histogram: Vec<u64>,
    pub aborted: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub beta: f64,
    pub side: usize,
    pub scale: f64,
    pub m_star: f64,
    pub m_star_err: f64,
    pub chi: f64,
    pub chi_err: f64,
    pub w1: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub rows: Vec<DeltaRow>,
}

impl SweepSummary {
    pub fn aborted_points(&self) -> usize {
        self.rows.iter().filter(|r| r.aborted.is_some()).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub summary: SweepSummary,
    /// Sorted by `(Δ, chain, index)`.
    pub records: Vec<SampleRecord>,
}

struct Bulk {
    m_star: f64,
    m_star_err: f64,
    chi: f64,
    chi_err: f64,
}

fn bulk_values(cfg: &ExperimentConfig) -> Result<Bulk> {
    match cfg.bulk_source {
        BulkSource::Provided => Ok(Bulk {
            m_star: cfg.m_star.expect("validated"),
            m_star_err: 0.0,
            chi: cfg.chi.expect("validated"),
            chi_err: 0.0,
        }),
        BulkSource::Measured => {
            let params = ChainParams {
                beta: cfg.beta,
                sweeps: cfg.bulk_sweeps,
                thermalization: cfg.bulk_thermalization,
                sample_stride: 1,
                seed: cfg.seed,
                target_m: None,
            };
            let b = estimate_bulk_parallel(cfg.side, &params, cfg.bulk_chains)?;
            Ok(Bulk { m_star: b.m_star_hat, m_star_err: b.m_star_err, chi: b.chi_hat, chi_err: b.chi_err })
        }
    }
}

fn tension(cfg: &ExperimentConfig) -> Result<SurfaceTension> {
    match cfg.tau_source {
        TauSource::Constant => SurfaceTension::constant(cfg.tau0.expect("validated")),
        TauSource::DualEstimated => {
            let settings = TauSettings { widths: cfg.tau_widths.clone(), ..TauSettings::default() };
            SurfaceTension::dual_estimated(cfg.beta, &settings)
        }
    }
}

fn delta_seed(seed: u64, delta_index: usize) -> u64 {
    splitmix64(seed ^ splitmix64(0x5EED_0000 + delta_index as u64))
}

fn run_chain(
    cfg: &ExperimentConfig,
    params: &ChainParams,
    chain: u64,
    t: &Thresholds,
    wulff: &WulffShape,
    spill: Option<&Path>,
) -> Result<Vec<SampleRecord>> {
    let stream = CanonicalChain::new(cfg.side, params, chain)?;
    let mut out = Vec::with_capacity(stream.size_hint().0);
    if let Some(dir) = spill {
        std::fs::create_dir_all(dir.join(chain.to_string()))?;
    }
    for (index, grid) in stream.enumerate() {
        if grid.total_magnetization() != params.target_m.expect("canonical") {
            return Err(Error::Consistency(format!("chain {chain} left the magnetization shell")));
        }
        if let Some(dir) = spill {
            let f = std::fs::File::create(dir.join(chain.to_string()).join(format!("{index}.isd")))?;
            write_snapshot(&grid, std::io::BufWriter::new(f))?;
        }
        let mut rec = classify_events(&grid, t, wulff)?;
        rec.chain = chain;
        rec.index = index;
        out.push(rec);
    }
    Ok(out)
}

fn fraction(k: usize, n: usize) -> (f64, (f64, f64)) {
    (k as f64 / n as f64, wilson_interval(k, n, WILSON_Z))
}

fn histogram(lambdas: &[f64]) -> Vec<u64> {
    let mut h = vec![0u64; HISTOGRAM_BINS];
    for &l in lambdas {
        let b = ((l / HISTOGRAM_WIDTH).floor() as usize).min(HISTOGRAM_BINS - 1);
        h[b] += 1;
    }
    h
}

fn aborted_row(delta: f64, reason: String) -> DeltaRow {
    DeltaRow {
        delta,
        v_l: f64::NAN,
        target_m: 0,
        lambda_theory: f64::NAN,
        phi_star: f64::NAN,
        n_samples: 0,
        lambda_hat_median: f64::NAN,
        lambda_hat_iqr: f64::NAN,
        lambda_hat_median_se: f64::NAN,
        frac_droplet: f64::NAN,
        frac_droplet_ci: (f64::NAN, f64::NAN),
        frac_a: f64::NAN,
        frac_a_ci: (f64::NAN, f64::NAN),
        frac_b: f64::NAN,
        frac_b_ci: (f64::NAN, f64::NAN),
        lambda_hat_histogram: vec![0; HISTOGRAM_BINS],
        aborted: Some(reason),
    }
}

fn run_point(
    cfg: &ExperimentConfig,
    bulk: &Bulk,
    wulff: &WulffShape,
    delta_index: usize,
    delta: f64,
    spill: Option<&Path>,
) -> Result<(DeltaRow, Vec<SampleRecord>)> {
    let v = v_from_delta(delta, bulk.m_star, bulk.chi, wulff.w1, cfg.side, cfg.rho)?;
    let target = deficit_target(bulk.m_star, cfg.side, v)?;
    let sol = minimize_phi(PhiParams::new(delta, 2)?)?;
    let t = Thresholds {
        scale: cfg.scale(),
        kappa: cfg.kappa,
        epsilon: cfg.epsilon,
        v,
        delta,
        phi_star: sol.phi_star,
        m_star: bulk.m_star,
    };
    let seed = delta_seed(cfg.seed, delta_index);
    let params = ChainParams {
        beta: cfg.beta,
        sweeps: cfg.sweeps,
        thermalization: cfg.thermalization,
        sample_stride: cfg.stride,
        seed,
        target_m: Some(target.target_m),
    };
    let spill_dir = spill.map(|d| d.join(format!("delta_{delta_index}")));
    let per_chain: Vec<Vec<SampleRecord>> = (0..cfg.chains as u64)
        .into_par_iter()
        .map(|c| run_chain(cfg, &params, c, &t, wulff, spill_dir.as_deref()))
        .collect::<Result<_>>()?;

    let records: Vec<SampleRecord> = per_chain.iter().flatten().cloned().collect();
    let n = records.len();
    if n == 0 {
        return Err(Error::Consistency("no samples retained".into()));
    }
    let lambdas: Vec<f64> = records.iter().map(|r| r.lambda_hat()).collect();
    let groups: Vec<Vec<f64>> = per_chain.iter().map(|c| c.iter().map(|r| r.lambda_hat()).collect()).collect();
    let mut rng = purpose_rng(seed, Purpose::Bootstrap, 0);
    let se = bootstrap_groups(&groups, BOOTSTRAP_RESAMPLES, &mut rng, median);
    let count = |f: fn(&SampleRecord) -> bool| records.iter().filter(|r| f(r)).count();
    let (frac_droplet, frac_droplet_ci) = fraction(count(|r| r.droplet), n);
    let (frac_a, frac_a_ci) = fraction(count(|r| r.event_a), n);
    let (frac_b, frac_b_ci) = fraction(count(|r| r.event_b), n);
    let row = DeltaRow {
        delta,
        v_l: v,
        target_m: target.target_m,
        lambda_theory: sol.lambda_delta,
        phi_star: sol.phi_star,
        n_samples: n,
        lambda_hat_median: median(&lambdas),
        lambda_hat_iqr: quantile(&lambdas, 0.75) - quantile(&lambdas, 0.25),
        lambda_hat_median_se: se,
        frac_droplet,
        frac_droplet_ci,
        frac_a,
        frac_a_ci,
        frac_b,
        frac_b_ci,
        lambda_hat_histogram: histogram(&lambdas),
        aborted: None,
    };
    Ok((row, records))
}

/// Runs every `Δ` in `cfg.delta_values` (in increasing order). A failing `Δ`-point is
/// recorded as aborted; only errors in the shared bulk and tension stages fail the sweep.
/// With `spill` set, every retained grid is written to
/// `spill/delta_{i}/{chain}/{index}.isd`.
pub fn run_sweep(cfg: &ExperimentConfig, spill: Option<&Path>) -> Result<SweepOutput> {
    cfg.validate()?;
    let bulk = bulk_values(cfg)?;
    log::info!("bulk: m* = {:.5} ± {:.5}, chi = {:.5} ± {:.5}", bulk.m_star, bulk.m_star_err, bulk.chi, bulk.chi_err);
    let tau = tension(cfg)?;
    let wulff = build_wulff(&tau, cfg.n_directions)?;
    log::info!("Wulff shape: w1 = {:.5}", wulff.w1);

    let mut deltas = cfg.delta_values.clone();
    deltas.sort_by(f64::total_cmp);
    let mut rows = Vec::with_capacity(deltas.len());
    let mut records = Vec::new();
    for (i, &delta) in deltas.iter().enumerate() {
        match run_point(cfg, &bulk, &wulff, i, delta, spill) {
            Ok((row, recs)) => {
                log::info!(
                    "delta = {delta}: median lambda_hat = {:.4}, frac_droplet = {:.3}",
                    row.lambda_hat_median,
                    row.frac_droplet
                );
                rows.push(row);
                records.extend(recs);
            }
            Err(e) => {
                log::warn!("delta = {delta} aborted: {e}");
                rows.push(aborted_row(delta, e.to_string()));
            }
        }
    }
    records.sort_by(|a, b| a.delta.total_cmp(&b.delta).then(a.chain.cmp(&b.chain)).then(a.index.cmp(&b.index)));
    Ok(SweepOutput {
        summary: SweepSummary {
            beta: cfg.beta,
            side: cfg.side,
            scale: cfg.scale(),
            m_star: bulk.m_star,
            m_star_err: bulk.m_star_err,
            chi: bulk.chi,
            chi_err: bulk.chi_err,
            w1: wulff.w1,
            tau_min: tau.tau_min(),
            tau_max: tau.tau_max(),
            rows,
        },
        records,
    })
}
