//! Exact enumeration of the Gibbs measure on lattices with at most 25 sites.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::contour::{extract_contours, s_large};
use crate::error::{invalid, Result};
use crate::lattice::{Boundary, SpinGrid};
use crate::skeleton::{set_compatible, Skeleton, SkeletonSet};

pub const MAX_SIDE: usize = 5;

const CHUNK: u64 = 1 << 14;

/// Bit-level energy evaluation; bit `i` set means site `i` (row-major) is `+1`.
#[derive(Debug, Clone)]
struct BitLattice {
    side: usize,
    n: usize,
    hmask: u64,
    vmask: u64,
    /// `border[k]`: sites with more than `k` boundary bonds.
    border: [u64; 4],
    border_total: i64,
    bonds: i64,
    boundary_spin: i64,
}

impl BitLattice {
    fn new(side: usize, boundary: Boundary) -> Self {
        let n = side * side;
        let (mut hmask, mut vmask) = (0u64, 0u64);
        let mut border = [0u64; 4];
        let mut border_total = 0;
        for y in 0..side {
            for x in 0..side {
                let i = y * side + x;
                if x + 1 < side {
                    hmask |= 1 << i;
                }
                if y + 1 < side {
                    vmask |= 1 << i;
                }
                let nb = (x == 0) as usize + (x + 1 == side) as usize + (y == 0) as usize + (y + 1 == side) as usize;
                border_total += nb as i64;
                for b in border.iter_mut().take(nb) {
                    *b |= 1 << i;
                }
            }
        }
        let boundary_spin = match boundary {
            Boundary::Plus => 1,
            Boundary::Minus => -1,
            Boundary::Free => 0,
        };
        let bonds = 2 * (side * side.saturating_sub(1)) as i64;
        BitLattice { side, n, hmask, vmask, border, border_total, bonds, boundary_spin }
    }

    #[inline]
    fn energy(&self, c: u64) -> i64 {
        let diff = ((c ^ (c >> 1)) & self.hmask).count_ones() + ((c ^ (c >> self.side)) & self.vmask).count_ones();
        let e_int = -(self.bonds - 2 * diff as i64);
        let plus_weight: i64 = self.border.iter().map(|m| (c & m).count_ones() as i64).sum();
        e_int - self.boundary_spin * (2 * plus_weight - self.border_total)
    }

    #[cfg(test)]
    fn magnetization(&self, c: u64) -> i64 {
        2 * c.count_ones() as i64 - self.n as i64
    }
}

/// One cell of the joint density of states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityEntry {
    pub energy: i64,
    pub magnetization: i64,
    pub count: u64,
}

/// Exact law of the finite-volume Gibbs measure.
#[derive(Debug, Clone, Serialize)]
pub struct ExactLaw {
    pub side: usize,
    pub beta: f64,
    pub boundary: Boundary,
    pub log_z: f64,
    pub magnetization_pmf: BTreeMap<i64, f64>,
    /// Joint counts of configurations by energy and magnetization, sorted.
    pub density: Vec<DensityEntry>,
    #[serde(skip)]
    lattice: BitLattice,
}

fn log_sum_exp(terms: &mut [f64]) -> f64 {
    terms.sort_by(f64::total_cmp);
    let max = terms.last().copied().unwrap_or(f64::NEG_INFINITY);
    if !max.is_finite() {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Sums the Boltzmann factors of all `2^{L²}` configurations.
///
/// The joint histogram of `(E, M)` is accumulated with integer counts, so the result does
/// not depend on how the range is split across workers.
pub fn enumerate_distribution(side: usize, beta: f64, boundary: Boundary) -> Result<ExactLaw> {
    if side == 0 || side > MAX_SIDE {
        return Err(invalid(format!("enumeration supports 1 <= L <= {MAX_SIDE}")));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(invalid("beta must be finite and nonnegative"));
    }
    let lat = BitLattice::new(side, boundary);
    let e_max = lat.bonds + lat.border_total;
    let width = lat.n + 1;
    let cells = (2 * e_max as usize + 1) * width;
    let total = 1u64 << lat.n;
    let hist = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .fold(
            || vec![0u64; cells],
            |mut h, chunk| {
                for c in chunk * CHUNK..((chunk + 1) * CHUNK).min(total) {
                    let e = (lat.energy(c) + e_max) as usize;
                    h[e * width + c.count_ones() as usize] += 1;
                }
                h
            },
        )
        .reduce(|| vec![0u64; cells], |mut a, b| {
            a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            a
        });
    let density: Vec<DensityEntry> = hist
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &count)| DensityEntry {
            energy: (i / width) as i64 - e_max,
            magnetization: 2 * (i % width) as i64 - lat.n as i64,
            count,
        })
        .collect();
    let log_weight = |d: &DensityEntry| (d.count as f64).ln() - beta * d.energy as f64;
    let log_z = log_sum_exp(&mut density.iter().map(log_weight).collect::<Vec<_>>());
    let mut by_m: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for d in &density {
        by_m.entry(d.magnetization).or_default().push(log_weight(d));
    }
    let magnetization_pmf = by_m.into_iter().map(|(m, mut t)| (m, (log_sum_exp(&mut t) - log_z).exp())).collect();
    Ok(ExactLaw { side, beta, boundary, log_z, magnetization_pmf, density, lattice: lat })
}

impl ExactLaw {
    pub fn pmf(&self, m: i64) -> f64 {
        self.magnetization_pmf.get(&m).copied().unwrap_or(0.0)
    }

    /// Exact `(E[M], Var[M])`.
    pub fn magnetization_moments(&self) -> (f64, f64) {
        let mean: f64 = self.magnetization_pmf.iter().map(|(&m, &p)| m as f64 * p).sum();
        let var: f64 = self.magnetization_pmf.iter().map(|(&m, &p)| (m as f64 - mean).powi(2) * p).sum();
        (mean, var)
    }

    /// Exact pmf of `M` conditioned on nothing, as a vector over allowed values ascending.
    pub fn allowed_magnetizations(&self) -> Vec<i64> {
        let n = (self.side * self.side) as i64;
        (0..=n).map(|k| 2 * k - n).collect()
    }

    fn energy_of(&self, c: u64) -> i64 {
        self.lattice.energy(c)
    }

    fn configurations(&self) -> u64 {
        1u64 << self.lattice.n
    }

    /// Lowest energy among configurations with magnetization `m` (or overall).
    fn ground_energy(&self, m: Option<i64>) -> i64 {
        self.density
            .iter()
            .filter(|d| m.map_or(true, |m| d.magnetization == m))
            .map(|d| d.energy)
            .min()
            .unwrap_or(0)
    }

    /// `Σ w(c) f(c)` and `Σ w(c)` over configurations, optionally restricted to `M = m`,
    /// with weights shifted by the ground energy. Chunks are combined in index order.
    fn weighted_sums<F>(&self, m: Option<i64>, dim: usize, f: F) -> (Vec<f64>, f64)
    where
        F: Fn(u64, &mut [f64]) + Sync,
    {
        let e0 = self.ground_energy(m);
        let ones = m.map(|m| ((m + self.lattice.n as i64) / 2) as u32);
        let total = self.configurations();
        let parts: Vec<(Vec<f64>, f64)> = (0..total.div_ceil(CHUNK))
            .into_par_iter()
            .map(|chunk| {
                let mut acc = vec![0.0; dim];
                let mut buf = vec![0.0; dim];
                let mut z = 0.0;
                for c in chunk * CHUNK..((chunk + 1) * CHUNK).min(total) {
                    if ones.is_some_and(|k| c.count_ones() != k) {
                        continue;
                    }
                    let w = (-self.beta * (self.energy_of(c) - e0) as f64).exp();
                    f(c, &mut buf);
                    acc.iter_mut().zip(&buf).for_each(|(a, b)| *a += w * b);
                    z += w;
                }
                (acc, z)
            })
            .collect();
        let mut acc = vec![0.0; dim];
        let mut z = 0.0;
        for (a, w) in parts {
            acc.iter_mut().zip(&a).for_each(|(x, y)| *x += y);
            z += w;
        }
        (acc, z)
    }

    fn check_sector(&self, m: i64) -> Result<()> {
        if self.pmf(m) <= 0.0 {
            return Err(invalid(format!("magnetization {m} has zero probability")));
        }
        Ok(())
    }

    fn grid(&self, c: u64) -> SpinGrid {
        SpinGrid::from_bits(self.side, self.boundary, c)
    }
}

/// Exact `⟨f⟩` under the full Gibbs measure.
pub fn expectation(law: &ExactLaw, observable: impl Fn(&SpinGrid) -> f64 + Sync) -> f64 {
    let (s, z) = law.weighted_sums(None, 1, |c, out| out[0] = observable(&law.grid(c)));
    s[0] / z
}

/// Exact `⟨f | M = m⟩`.
pub fn conditional_expectation(law: &ExactLaw, m: i64, observable: impl Fn(&SpinGrid) -> f64 + Sync) -> Result<f64> {
    law.check_sector(m)?;
    let (s, z) = law.weighted_sums(Some(m), 1, |c, out| out[0] = observable(&law.grid(c)));
    Ok(s[0] / z)
}

/// Exact single-site magnetizations `⟨σ_x⟩`, optionally conditioned on `M = m`.
pub fn site_magnetizations(law: &ExactLaw, m: Option<i64>) -> Result<Vec<f64>> {
    if let Some(m) = m {
        law.check_sector(m)?;
    }
    let n = law.lattice.n;
    let (s, z) = law.weighted_sums(m, n, |c, out| {
        for (i, o) in out.iter_mut().enumerate() {
            *o = if c >> i & 1 == 1 { 1.0 } else { -1.0 };
        }
    });
    Ok(s.into_iter().map(|x| x / z).collect())
}

/// Exact law of the number of contours, conditioned on `M = m`.
pub fn contour_count_pmf(law: &ExactLaw, m: i64) -> Result<BTreeMap<usize, f64>> {
    law.check_sector(m)?;
    let max = 2 * law.side * law.side;
    let (s, z) = law.weighted_sums(Some(m), max + 1, |c, out| {
        out.iter_mut().for_each(|o| *o = 0.0);
        let n = extract_contours(&law.grid(c)).map(|set| set.len()).unwrap_or(0);
        out[n.min(max)] = 1.0;
    });
    Ok(s.into_iter().enumerate().filter(|(_, p)| *p > 0.0).map(|(k, p)| (k, p / z)).collect())
}

/// Relative Boltzmann factor below which configurations are skipped when evaluating
/// skeleton events; the neglected mass is at most `2^{L²} · e^{-40} < 2e-10`.
const NEGLIGIBLE_EXPONENT: f64 = 40.0;

/// Site bit masks around a dual vertex, for a fast "has a contour bond here" test.
#[derive(Debug, Clone, Copy)]
struct VertexProbe {
    inside: u64,
    touches_boundary: bool,
    /// The vertex lies outside the closed box and can never carry a bond.
    unreachable: bool,
}

impl VertexProbe {
    fn new(side: usize, x2: i32, y2: i32) -> Self {
        let (a, b) = ((x2 + 1) / 2, (y2 + 1) / 2);
        let l = side as i32;
        if a < 0 || b < 0 || a > l || b > l {
            return VertexProbe { inside: 0, touches_boundary: true, unreachable: true };
        }
        let mut inside = 0u64;
        let mut touches_boundary = false;
        for (x, y) in [(a - 1, b - 1), (a, b - 1), (a - 1, b), (a, b)] {
            if x < 0 || y < 0 || x >= l || y >= l {
                touches_boundary = true;
            } else {
                inside |= 1 << (y * l + x);
            }
        }
        VertexProbe { inside, touches_boundary, unreachable: false }
    }

    #[inline]
    fn has_bond(&self, c: u64, boundary: Boundary) -> bool {
        if self.unreachable {
            return false;
        }
        let s = c & self.inside;
        if self.touches_boundary {
            match boundary {
                Boundary::Minus => s != 0,
                _ => s != self.inside,
            }
        } else {
            s != 0 && s != self.inside
        }
    }
}

/// Exact probabilities that the `s`-large contours of a configuration are compatible with
/// each skeleton collection.
pub fn skeleton_event_probabilities(law: &ExactLaw, sets: &[SkeletonSet], s: f64) -> Result<Vec<f64>> {
    if law.boundary == Boundary::Free {
        return Err(crate::error::Error::FreeBoundary);
    }
    if !(s > 0.0) {
        return Err(invalid("scale must be positive"));
    }
    let side = law.side;
    // no interior can be wider than the box diagonal
    if s > side as f64 * std::f64::consts::SQRT_2 + 1e-9 {
        return Ok(sets.iter().map(|set| if set.is_empty() { 1.0 } else { 0.0 }).collect());
    }
    let probes: Vec<Vec<VertexProbe>> = sets
        .iter()
        .map(|set| {
            set.iter()
                .flat_map(|sk: &Skeleton| sk.points().iter().map(|p| VertexProbe::new(side, p.x2, p.y2)))
                .collect()
        })
        .collect();
    let e0 = law.ground_energy(None);
    let z: f64 = law
        .density
        .iter()
        .map(|d| d.count as f64 * (-law.beta * (d.energy - e0) as f64).exp())
        .sum();
    let total = law.configurations();
    let k = sets.len();
    let boundary = law.boundary;
    let parts: Vec<Vec<f64>> = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut acc = vec![0.0; k];
            let mut candidates = Vec::with_capacity(k);
            for c in chunk * CHUNK..((chunk + 1) * CHUNK).min(total) {
                let x = law.beta * (law.energy_of(c) - e0) as f64;
                if x > NEGLIGIBLE_EXPONENT {
                    continue;
                }
                candidates.clear();
                candidates.extend((0..k).filter(|&j| probes[j].iter().all(|p| p.has_bond(c, boundary))));
                if candidates.is_empty() {
                    continue;
                }
                let grid = law.grid(c);
                let Ok(all) = extract_contours(&grid) else { continue };
                let large = s_large(&all, s);
                let refs: Vec<_> = large.contours.iter().collect();
                let w = (-x).exp();
                for &j in &candidates {
                    if set_compatible(&refs, &sets[j]) {
                        acc[j] += w;
                    }
                }
            }
            acc
        })
        .collect();
    let mut acc = vec![0.0; k];
    for p in parts {
        acc.iter_mut().zip(&p).for_each(|(a, b)| *a += b);
    }
    Ok(acc.into_iter().map(|a| (a / z).clamp(0.0, 1.0)).collect())
}

/// Probability that no contour reaches diameter `s`.
pub fn no_large_contour_probability(law: &ExactLaw, s: f64) -> Result<f64> {
    Ok(skeleton_event_probabilities(law, &[Vec::new()], s)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::DualPoint;

    fn binom(n: u64, k: u64) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn bit_energy_matches_grid_energy() {
        for boundary in [Boundary::Plus, Boundary::Minus, Boundary::Free] {
            for side in 1..=4 {
                let lat = BitLattice::new(side, boundary);
                for c in (0..1u64 << (side * side)).step_by(7) {
                    let g = SpinGrid::from_bits(side, boundary, c);
                    assert_eq!(lat.energy(c), g.energy());
                    assert_eq!(lat.magnetization(c), g.total_magnetization());
                }
            }
        }
    }

    #[test]
    fn single_spin_law() {
        let b = 0.37;
        let law = enumerate_distribution(1, b, Boundary::Plus).unwrap();
        let z = (4.0 * b).exp() + (-4.0 * b).exp();
        assert!((law.pmf(1) - (4.0 * b).exp() / z).abs() < 1e-15);
        assert!((law.pmf(-1) - (-4.0 * b).exp() / z).abs() < 1e-15);
        assert!((law.log_z - z.ln()).abs() < 1e-14);
    }

    #[test]
    fn infinite_temperature_is_binomial() {
        let law = enumerate_distribution(2, 0.0, Boundary::Plus).unwrap();
        for k in 0..=4u64 {
            let m = 4 - 2 * k as i64;
            assert!((law.pmf(m) - binom(4, k) / 16.0).abs() < 1e-15);
        }
        assert_eq!(law.pmf(1), 0.0);
    }

    #[test]
    fn pmf_normalized_and_symmetric() {
        let plus = enumerate_distribution(4, 0.6, Boundary::Plus).unwrap();
        let minus = enumerate_distribution(4, 0.6, Boundary::Minus).unwrap();
        let total: f64 = plus.magnetization_pmf.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for (&m, &p) in &plus.magnetization_pmf {
            assert_eq!(m.rem_euclid(2), 0);
            assert_eq!(p, minus.pmf(-m));
        }
        assert_eq!(plus.log_z, minus.log_z);
        assert_eq!(plus.density.iter().map(|d| d.count).sum::<u64>(), 1 << 16);
    }

    #[test]
    fn log_z_matches_direct_sum() {
        let law = enumerate_distribution(3, 0.45, Boundary::Plus).unwrap();
        let direct: f64 = (0..1u64 << 9)
            .map(|c| (-0.45 * SpinGrid::from_bits(3, Boundary::Plus, c).energy() as f64).exp())
            .sum();
        assert!((law.log_z - direct.ln()).abs() < 1e-12);
    }

    #[test]
    fn large_beta_does_not_overflow() {
        let law = enumerate_distribution(4, 50.0, Boundary::Plus).unwrap();
        assert!(law.log_z.is_finite());
        assert!((law.pmf(16) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conditional_expectations() {
        let law = enumerate_distribution(2, 0.0, Boundary::Plus).unwrap();
        let v = conditional_expectation(&law, 0, |g| g.get(0, 0) as f64).unwrap();
        assert!(v.abs() < 1e-15);
        let law = enumerate_distribution(3, 0.6, Boundary::Plus).unwrap();
        let v = conditional_expectation(&law, 3, |g| g.total_magnetization() as f64).unwrap();
        assert!((v - 3.0).abs() < 1e-12);
        assert!(conditional_expectation(&law, 2, |_| 0.0).is_err());
        let sites = site_magnetizations(&law, Some(3)).unwrap();
        assert!((sites.iter().sum::<f64>() - 3.0).abs() < 1e-12);
        let direct = conditional_expectation(&law, 3, |g| g.get(1, 1) as f64).unwrap();
        assert!((sites[4] - direct).abs() < 1e-12);
    }

    #[test]
    fn grand_canonical_moments_agree_with_observables() {
        let law = enumerate_distribution(3, 0.5, Boundary::Plus).unwrap();
        let (mean, _) = law.magnetization_moments();
        let direct = expectation(&law, |g| g.total_magnetization() as f64);
        assert!((mean - direct).abs() < 1e-12);
    }

    #[test]
    fn contour_count_law_sums_to_one() {
        let law = enumerate_distribution(3, 0.6, Boundary::Plus).unwrap();
        let pmf = contour_count_pmf(&law, 5).unwrap();
        assert!((pmf.values().sum::<f64>() - 1.0).abs() < 1e-12);
        // M = 5 means two minus spins: one or two contours
        assert!(pmf.keys().all(|&k| k == 1 || k == 2));
    }

    #[test]
    fn empty_event_at_huge_scale() {
        let law = enumerate_distribution(3, 30.0, Boundary::Plus).unwrap();
        assert_eq!(no_large_contour_probability(&law, 10.0).unwrap(), 1.0);
        // at scale 1 every contour is large, so "none" means the all-plus ground state
        let p = no_large_contour_probability(&law, 1.0).unwrap();
        assert!((p - law.pmf(9)).abs() < 1e-12);
    }

    #[test]
    fn single_skeleton_event_is_a_probability() {
        let law = enumerate_distribution(3, 0.9, Boundary::Plus).unwrap();
        let sk = Skeleton::new(
            vec![DualPoint::new(1, 1), DualPoint::new(3, 1), DualPoint::new(3, 3), DualPoint::new(1, 3)],
            1.0,
        )
        .unwrap();
        let p = skeleton_event_probabilities(&law, &[vec![sk]], 1.0).unwrap()[0];
        assert!((0.0..=1.0).contains(&p));
        // the single minus spin at (1,1) realises the event
        assert!(p > 0.0);
    }

    #[test]
    fn rejects_large_lattices() {
        assert!(enumerate_distribution(6, 0.5, Boundary::Plus).is_err());
        assert!(enumerate_distribution(0, 0.5, Boundary::Plus).is_err());
    }
}
