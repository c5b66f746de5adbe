//! Surface tension from two-point decay at the dual temperature on lattice cylinders.
//!
//! The cylinder is `ℤ² / ⟨m·P⟩` with `P = (-k₂, k₁)` perpendicular to the direction
//! `k = (k₁, k₂)`. Sites are ordered by layer `n = k·x` and by position `c ∈ ℤ_m` inside
//! the layer; spins are added one at a time, and the state is the window of the last `R`
//! spins, where `R` is the largest index offset of an earlier neighbour.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Largest transfer window (state space `2^R`).
pub const MAX_WINDOW: usize = 20;

const CONVERGENCE: f64 = 1e-14;
const MAX_LAYERS: usize = 20_000;

pub fn dual_beta(beta: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(invalid("beta must be positive and finite"));
    }
    Ok(0.5 * (1.0 / beta.tanh()).ln())
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// `(g, a, b)` with `k₁a + k₂b = g`.
fn ext_gcd(k1: i64, k2: i64) -> (i64, i64, i64) {
    if k2 == 0 {
        (k1, 1, 0)
    } else {
        let (g, a, b) = ext_gcd(k2, k1 % k2);
        (g, b, a - (k1 / k2) * b)
    }
}

/// Reduces a lattice direction to the primitive representative with `k₁ ≥ k₂ ≥ 0`,
/// using the square lattice symmetries.
pub fn canonical_direction(k: (i64, i64)) -> Result<(i64, i64)> {
    if k == (0, 0) {
        return Err(invalid("direction must be nonzero"));
    }
    let g = gcd(k.0, k.1);
    let (a, b) = ((k.0 / g).abs(), (k.1 / g).abs());
    Ok(if a >= b { (a, b) } else { (b, a) })
}

struct Cylinder {
    m: usize,
    window: usize,
    /// Per position `c`: bit mask of earlier neighbours inside the window.
    neighbour_mask: Vec<u32>,
    /// Layer step between correlated sites: `|k|²`.
    layer_step: i64,
    /// In-layer position shift per step along `k`.
    phase_step: i64,
}

impl Cylinder {
    fn new(k: (i64, i64), m: usize) -> Result<Self> {
        let (k1, k2) = k;
        let (_, a, b) = ext_gcd(k1, k2);
        let norm2 = k1 * k1 + k2 * k2;
        let p = (-k2, k1);
        // position inside the layer along P, relative to the layer base point n·(a, b)
        let t_of = |dx: i64, dy: i64, dn: i64| ((dx - dn * a) * p.0 + (dy - dn * b) * p.1) / norm2;
        let mi = m as i64;
        let mut offsets: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let dn = k1 * dx + k2 * dy;
            let dt = t_of(dx, dy, dn);
            for c in 0..mi {
                let cn = (c + dt).rem_euclid(mi);
                let offset = -dn * mi + (c - cn);
                if offset > 0 {
                    offsets[c as usize].push(offset as usize);
                }
            }
        }
        let window = offsets.iter().flatten().copied().max().unwrap_or(1);
        if window > MAX_WINDOW {
            return Err(invalid(format!(
                "transfer window {window} exceeds {MAX_WINDOW}; use a narrower cylinder"
            )));
        }
        let mut neighbour_mask = Vec::with_capacity(m);
        for list in &offsets {
            let mut mask = 0u32;
            for &o in list {
                let bit = 1u32 << (o - 1);
                if mask & bit != 0 {
                    return Err(invalid("cylinder too narrow: repeated neighbour"));
                }
                mask |= bit;
            }
            neighbour_mask.push(mask);
        }
        let phase_step = k2 * a - k1 * b;
        Ok(Cylinder { m, window, neighbour_mask, layer_step: norm2, phase_step })
    }

    fn states(&self) -> usize {
        1 << self.window
    }
}

/// Boltzmann factors `exp(β* · s · h)` for `h ∈ -4..=4`.
struct Weights([f64; 9]);

impl Weights {
    fn new(beta_star: f64) -> Self {
        let mut w = [0.0; 9];
        for (i, v) in w.iter_mut().enumerate() {
            *v = (beta_star * (i as f64 - 4.0)).exp();
        }
        Weights(w)
    }

    /// Weight for adding spin `bit` next to the window `x` under neighbour mask `mask`.
    #[inline]
    fn get(&self, bit: usize, x: usize, mask: u32) -> f64 {
        let k = mask.count_ones() as i32;
        let h = 2 * (x as u32 & mask).count_ones() as i32 - k;
        let s = if bit == 1 { h } else { -h };
        self.0[(s + 4) as usize]
    }
}

fn forward(cyl: &Cylinder, wts: &Weights, c: usize, v: &[f64], out: &mut [f64]) {
    let r = cyl.window;
    let top = 1usize << (r - 1);
    let mask = cyl.neighbour_mask[c];
    out.par_iter_mut().with_min_len(1024).enumerate().for_each(|(xn, o)| {
        let bit = xn & 1;
        let base = xn >> 1;
        let (x0, x1) = (base, base | top);
        *o = v[x0] * wts.get(bit, x0, mask) + v[x1] * wts.get(bit, x1, mask);
    });
}

fn backward(cyl: &Cylinder, wts: &Weights, c: usize, r_after: &[f64], out: &mut [f64]) {
    let full = cyl.states() - 1;
    let mask = cyl.neighbour_mask[c];
    out.par_iter_mut().with_min_len(1024).enumerate().for_each(|(x, o)| {
        let shifted = (x << 1) & full;
        *o = wts.get(0, x, mask) * r_after[shifted] + wts.get(1, x, mask) * r_after[shifted | 1];
    });
}

fn normalize(v: &mut [f64]) -> f64 {
    let m = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    v.iter_mut().for_each(|x| *x /= m);
    m
}

/// Projects onto the spin-flip odd sector; exact antisymmetry keeps rounding errors from
/// leaking into the dominant even sector.
fn make_odd(w: &mut [f64]) {
    let full = w.len() - 1;
    for x in 0..w.len() / 2 {
        let y = full ^ x;
        let d = 0.5 * (w[x] - w[y]);
        w[x] = d;
        w[y] = -d;
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Converged environment to the left of a layer start.
fn left_environment(cyl: &Cylinder, wts: &Weights) -> Vec<f64> {
    let n = cyl.states();
    let mut v = vec![1.0; n];
    let mut tmp = vec![0.0; n];
    for _ in 0..MAX_LAYERS {
        let prev = v.clone();
        for c in 0..cyl.m {
            forward(cyl, wts, c, &v, &mut tmp);
            std::mem::swap(&mut v, &mut tmp);
            normalize(&mut v);
        }
        if max_diff(&prev, &v) < CONVERGENCE {
            break;
        }
    }
    v
}

/// Converged environments to the right of each in-layer position (after adding site `c`).
fn right_environments(cyl: &Cylinder, wts: &Weights) -> Vec<Vec<f64>> {
    let n = cyl.states();
    let m = cyl.m;
    let mut r = vec![1.0; n];
    let mut tmp = vec![0.0; n];
    let mut envs = vec![Vec::new(); m];
    for _ in 0..MAX_LAYERS {
        let prev = r.clone();
        // r is the environment after site m-1; stepping back over c gives after c-1
        for c in (0..m).rev() {
            envs[c] = r.clone();
            backward(cyl, wts, c, &r, &mut tmp);
            std::mem::swap(&mut r, &mut tmp);
            normalize(&mut r);
        }
        if max_diff(&prev, &r) < CONVERGENCE {
            break;
        }
    }
    envs
}

/// `⟨σ₀ σ_{N·k}⟩` at inverse temperature `beta_star` for every `N` in `ns` on the cylinder
/// of `m` sites per layer.
fn cylinder_correlations(k: (i64, i64), m: usize, beta_star: f64, ns: &[usize]) -> Result<Vec<f64>> {
    let cyl = Cylinder::new(k, m)?;
    let wts = Weights::new(beta_star);
    let n_states = cyl.states();
    let left = left_environment(&cyl, &wts);
    let rights = right_environments(&cyl, &wts);

    let mi = m as i64;
    let targets: Vec<(i64, usize)> = ns
        .iter()
        .map(|&n| (n as i64 * cyl.layer_step, (n as i64 * cyl.phase_step).rem_euclid(mi) as usize))
        .collect();
    let last_layer = targets.iter().map(|t| t.0).max().unwrap_or(0);

    let mut v = left;
    let mut tmp = vec![0.0; n_states];
    let mut w: Vec<f64> = Vec::new();
    let mut out = vec![f64::NAN; ns.len()];
    for layer in 0..=last_layer {
        for c in 0..m {
            forward(&cyl, &wts, c, &v, &mut tmp);
            std::mem::swap(&mut v, &mut tmp);
            if layer == 0 && c == 0 {
                w = v.iter().enumerate().map(|(x, &val)| if x & 1 == 1 { val } else { -val }).collect();
            } else {
                forward(&cyl, &wts, c, &w, &mut tmp);
                std::mem::swap(&mut w, &mut tmp);
                make_odd(&mut w);
            }
            let scale = normalize(&mut v);
            w.iter_mut().for_each(|x| *x /= scale);
            for (i, &(tl, tc)) in targets.iter().enumerate() {
                if tl == layer && tc == c {
                    let r = &rights[c];
                    let num: f64 = (0..n_states).map(|x| if x & 1 == 1 { w[x] * r[x] } else { -w[x] * r[x] }).sum();
                    let den: f64 = (0..n_states).map(|x| v[x] * r[x]).sum();
                    out[i] = num / den;
                }
            }
        }
    }
    Ok(out)
}

/// Settings for the surface-tension estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauSettings {
    /// Cylinder circumferences (in lattice units) used for the width extrapolation.
    pub widths: Vec<usize>,
    /// Separations `N` (in units of the primitive direction vector) used in the decay fit.
    /// Short separations carry a power-law prefactor, so the range should start well past
    /// a few correlation lengths.
    pub lengths: std::ops::RangeInclusive<usize>,
}

impl Default for TauSettings {
    fn default() -> Self {
        TauSettings { widths: vec![10, 12], lengths: 40..=80 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WidthFit {
    pub width: usize,
    pub sites_per_layer: usize,
    pub tau: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauEstimate {
    pub beta: f64,
    pub direction: (i64, i64),
    pub tau: f64,
    pub error: f64,
    pub fits: Vec<WidthFit>,
}

/// Minimum coefficient of determination accepted for the log-linear decay fit.
pub const MIN_R_SQUARED: f64 = 0.999;

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

/// Surface tension in direction `k` at inverse temperature `beta`, from the decay rate of
/// `⟨σ₀σ_{Nk}⟩` at the dual temperature, extrapolated linearly in inverse width.
pub fn estimate_tau(beta: f64, direction: (i64, i64), settings: &TauSettings) -> Result<TauEstimate> {
    use crate::sampler::BETA_C;
    if !(beta > BETA_C) {
        return Err(invalid(format!("surface tension needs beta > beta_c = {BETA_C:.6}")));
    }
    let k = canonical_direction(direction)?;
    let beta_star = dual_beta(beta)?;
    let ns: Vec<usize> = settings.lengths.clone().collect();
    if ns.len() < 3 || ns[0] == 0 {
        return Err(invalid("need at least three positive separations"));
    }
    let mut widths = settings.widths.clone();
    widths.sort_unstable();
    widths.dedup();
    if widths.is_empty() {
        return Err(invalid("need at least one cylinder width"));
    }
    let knorm = ((k.0 * k.0 + k.1 * k.1) as f64).sqrt();
    let fits: Vec<Result<WidthFit>> = widths
        .par_iter()
        .map(|&width| {
            let m = ((width as f64 / knorm).ceil() as usize).max(3);
            let g = cylinder_correlations(k, m, beta_star, &ns)?;
            if g.iter().any(|x| !(*x > 0.0)) {
                return Err(invalid("correlation underflow; shorten the separation range"));
            }
            let xs: Vec<f64> = ns.iter().map(|&n| n as f64 * knorm).collect();
            let ys: Vec<f64> = g.iter().map(|x| x.ln()).collect();
            let (slope, r2) = linear_fit(&xs, &ys);
            Ok(WidthFit { width, sites_per_layer: m, tau: -slope, r_squared: r2 })
        })
        .collect();
    let fits: Vec<WidthFit> = fits.into_iter().collect::<Result<_>>()?;
    if let Some(bad) = fits.iter().find(|f| f.r_squared < MIN_R_SQUARED) {
        return Err(Error::PoorFit { r_squared: bad.r_squared });
    }
    let last = fits.last().unwrap();
    let (tau, error) = if fits.len() >= 2 {
        let prev = &fits[fits.len() - 2];
        let (c1, c2) = (prev.sites_per_layer as f64 * knorm, last.sites_per_layer as f64 * knorm);
        if c1 == c2 {
            (last.tau, (last.tau - prev.tau).abs())
        } else {
            let extrap = (c2 * last.tau - c1 * prev.tau) / (c2 - c1);
            (extrap, (extrap - last.tau).abs())
        }
    } else {
        (last.tau, 0.0)
    };
    Ok(TauEstimate { beta, direction: k, tau, error, fits })
}

/// Axis surface tension in closed form, `2β + ln tanh β`; used only as a cross-check.
pub fn axis_tension_closed_form(beta: f64) -> f64 {
    2.0 * beta + beta.tanh().ln()
}
