//! Markov-chain Monte Carlo for the plus-boundary Ising model.
//!
//! Grand-canonical runs use single-site Metropolis (optionally interleaved with Wolff
//! clusters); canonical runs at fixed magnetization use nonlocal Kawasaki exchanges that
//! swap an arbitrary plus site with an arbitrary minus site.

mod bulk;
mod canonical;

pub use bulk::{estimate_bulk, estimate_bulk_parallel, BulkEstimates};
pub use canonical::{sample_canonical, CanonicalChain};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lattice::{Boundary, SpinGrid};

/// Critical inverse temperature `½ ln(1 + √2)`.
pub const BETA_C: f64 = 0.440_686_793_509_771_5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub beta: f64,
    /// Production sweeps after thermalization.
    pub sweeps: usize,
    pub thermalization: usize,
    /// Sweeps between retained samples.
    pub sample_stride: usize,
    pub seed: u64,
    /// Canonical mode when present.
    pub target_m: Option<i64>,
}

impl ChainParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(invalid(format!("beta = {} must be positive", self.beta)));
        }
        if self.sample_stride == 0 {
            return Err(invalid("sample_stride must be at least 1"));
        }
        Ok(())
    }
}

/// Metropolis acceptance probabilities indexed by `ΔE / 2`.
#[derive(Debug, Clone)]
struct AcceptTable {
    probs: Vec<f64>,
}

impl AcceptTable {
    fn new(beta: f64, max_delta: i32) -> Self {
        let probs = (0..=max_delta / 2)
            .map(|half| if half == 0 { 1.0 } else { (-beta * 2.0 * half as f64).exp() })
            .collect();
        AcceptTable { probs }
    }

    #[inline]
    fn accept<R: Rng>(&self, delta_e: i32, rng: &mut R) -> bool {
        if delta_e <= 0 {
            return true;
        }
        let p = self.probs[(delta_e / 2) as usize];
        p > 0.0 && rng.gen::<f64>() < p
    }
}

/// One sweep of `L²` single-site Metropolis proposals at uniformly random sites.
pub fn metropolis_sweep<R: Rng>(grid: &mut SpinGrid, beta: f64, rng: &mut R) {
    let table = AcceptTable::new(beta, 8);
    let n = grid.side() * grid.side();
    for _ in 0..n {
        let i = rng.gen_range(0..n);
        let s = grid.spins()[i] as i32;
        let de = 2 * s * grid.local_field(i);
        if table.accept(de, rng) {
            grid.spins_mut()[i] = -(s as i8);
        }
    }
}

/// Plus/minus site lists supporting O(1) uniform choice and swap.
#[derive(Debug, Clone)]
pub struct Kawasaki {
    plus: Vec<u32>,
    minus: Vec<u32>,
    /// Position of each site inside its list.
    slot: Vec<u32>,
}

impl Kawasaki {
    pub fn new(grid: &SpinGrid) -> Self {
        let n = grid.side() * grid.side();
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        let mut slot = vec![0u32; n];
        for (i, &s) in grid.spins().iter().enumerate() {
            if s > 0 {
                slot[i] = plus.len() as u32;
                plus.push(i as u32);
            } else {
                slot[i] = minus.len() as u32;
                minus.push(i as u32);
            }
        }
        Kawasaki { plus, minus, slot }
    }

    /// One sweep of `L²` plus/minus exchange proposals; a no-op on monochromatic grids.
    pub fn sweep<R: Rng>(&mut self, grid: &mut SpinGrid, beta: f64, rng: &mut R) {
        if self.plus.is_empty() || self.minus.is_empty() {
            return;
        }
        #[cfg(debug_assertions)]
        let m_before = grid.total_magnetization();
        let table = AcceptTable::new(beta, 20);
        let l = grid.side();
        let n = l * l;
        for _ in 0..n {
            let a = rng.gen_range(0..self.plus.len());
            let b = rng.gen_range(0..self.minus.len());
            let i = self.plus[a] as usize;
            let j = self.minus[b] as usize;
            let adjacent = {
                let (xi, yi, xj, yj) = (i % l, i / l, j % l, j / l);
                xi.abs_diff(xj) + yi.abs_diff(yj) == 1
            };
            // σ_i = +1, σ_j = -1; flipping both changes E by 2h_i - 2h_j (+4 when adjacent).
            let de = 2 * grid.local_field(i) - 2 * grid.local_field(j) + if adjacent { 4 } else { 0 };
            if table.accept(de, rng) {
                let spins = grid.spins_mut();
                spins[i] = -1;
                spins[j] = 1;
                self.plus[a] = j as u32;
                self.minus[b] = i as u32;
                self.slot[j] = a as u32;
                self.slot[i] = b as u32;
            }
        }
        #[cfg(debug_assertions)]
        debug_assert_eq!(grid.total_magnetization(), m_before, "Kawasaki sweep changed M");
    }
}

/// One Kawasaki sweep on a grid without persistent site lists.
pub fn kawasaki_sweep<R: Rng>(grid: &mut SpinGrid, beta: f64, rng: &mut R) {
    Kawasaki::new(grid).sweep(grid, beta, rng);
}

/// One Wolff cluster update.
///
/// Fixed boundary spins act as frozen cluster members: if the growing cluster activates a
/// bond to the boundary, the move is rejected and nothing flips. Returns the flipped size.
pub fn wolff_step<R: Rng>(grid: &mut SpinGrid, beta: f64, rng: &mut R) -> usize {
    let l = grid.side();
    let n = l * l;
    let p_add = 1.0 - (-2.0 * beta).exp();
    let seed = rng.gen_range(0..n);
    let s = grid.spins()[seed];
    let b = grid.boundary().spin();
    let boundary_same = b == s as i32;
    let mut in_cluster = vec![false; n];
    let mut stack = vec![seed];
    let mut cluster = vec![seed];
    in_cluster[seed] = true;
    while let Some(i) = stack.pop() {
        let (x, y) = (i % l, i / l);
        let border = (x == 0) as usize + (x + 1 == l) as usize + (y == 0) as usize + (y + 1 == l) as usize;
        if boundary_same && grid.boundary() != Boundary::Free {
            for _ in 0..border {
                if rng.gen::<f64>() < p_add {
                    return 0;
                }
            }
        }
        let mut try_add = |j: usize, stack: &mut Vec<usize>, cluster: &mut Vec<usize>| {
            if !in_cluster[j] && grid.spins()[j] == s && rng.gen::<f64>() < p_add {
                in_cluster[j] = true;
                stack.push(j);
                cluster.push(j);
            }
        };
        if x > 0 {
            try_add(i - 1, &mut stack, &mut cluster);
        }
        if x + 1 < l {
            try_add(i + 1, &mut stack, &mut cluster);
        }
        if y > 0 {
            try_add(i - l, &mut stack, &mut cluster);
        }
        if y + 1 < l {
            try_add(i + l, &mut stack, &mut cluster);
        }
    }
    let spins = grid.spins_mut();
    for &i in &cluster {
        spins[i] = -s;
    }
    cluster.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Fill;
    use crate::rng::chain_rng;

    #[test]
    fn infinite_temperature_metropolis_accepts_everything() {
        let mut g = SpinGrid::new(6, Boundary::Plus, Fill::AllPlus).unwrap();
        let mut rng = chain_rng(1, 0);
        let mut flips = 0usize;
        for _ in 0..200 {
            let before = g.clone();
            metropolis_sweep(&mut g, 0.0, &mut rng);
            flips += before.spins().iter().zip(g.spins()).filter(|(a, b)| a != b).count();
        }
        // With acceptance 1, a site flips once per proposal; parity of proposals only
        // matters, so roughly half the sites differ each sweep.
        assert!(flips > 200 * 36 / 4);
        // Single-site marginal is uniform.
        let mut plus = 0usize;
        let mut total = 0usize;
        for _ in 0..2000 {
            metropolis_sweep(&mut g, 0.0, &mut rng);
            plus += g.spins().iter().filter(|&&s| s > 0).count();
            total += 36;
        }
        let frac = plus as f64 / total as f64;
        assert!((frac - 0.5).abs() < 0.01, "frac = {frac}");
    }

    #[test]
    fn zero_temperature_keeps_ground_state() {
        let mut g = SpinGrid::new(8, Boundary::Plus, Fill::AllPlus).unwrap();
        let mut rng = chain_rng(2, 0);
        for _ in 0..50 {
            metropolis_sweep(&mut g, f64::INFINITY, &mut rng);
            wolff_step(&mut g, f64::INFINITY, &mut rng);
        }
        assert_eq!(g.total_magnetization(), 64);
    }

    #[test]
    fn kawasaki_conserves_magnetization() {
        let mut g = SpinGrid::new(10, Boundary::Plus, Fill::KMinus { k: 37, seed: 5 }).unwrap();
        let mut rng = chain_rng(3, 0);
        let mut kw = Kawasaki::new(&g);
        for beta in [0.0, 0.3, 0.7, 2.0] {
            for _ in 0..20 {
                kw.sweep(&mut g, beta, &mut rng);
                assert_eq!(g.total_magnetization(), 100 - 74);
            }
        }
        // lists stay consistent with the grid
        for &i in &kw.plus {
            assert_eq!(g.spins()[i as usize], 1);
        }
        for &i in &kw.minus {
            assert_eq!(g.spins()[i as usize], -1);
        }
    }

    #[test]
    fn kawasaki_on_monochromatic_grid_is_noop() {
        let mut g = SpinGrid::new(5, Boundary::Plus, Fill::AllPlus).unwrap();
        let mut rng = chain_rng(4, 0);
        kawasaki_sweep(&mut g, 0.5, &mut rng);
        assert_eq!(g.total_magnetization(), 25);
    }

    #[test]
    fn kawasaki_infinite_temperature_is_uniform_over_placements() {
        // 3x3 with two minus spins: every site is minus with probability 2/9.
        let mut g = SpinGrid::new(3, Boundary::Plus, Fill::KMinus { k: 2, seed: 9 }).unwrap();
        let mut rng = chain_rng(5, 0);
        let mut kw = Kawasaki::new(&g);
        let sweeps = 40_000;
        let mut counts = [0usize; 9];
        for _ in 0..sweeps {
            kw.sweep(&mut g, 0.0, &mut rng);
            for (i, &s) in g.spins().iter().enumerate() {
                if s < 0 {
                    counts[i] += 1;
                }
            }
        }
        let p = 2.0 / 9.0;
        // at beta = 0 every swap is accepted and successive sweeps are nearly independent
        let se = (p * (1.0 - p) / sweeps as f64).sqrt();
        for c in counts {
            let f = c as f64 / sweeps as f64;
            assert!((f - p).abs() < 3.0 * se * 1.5, "f = {f}");
        }
    }

    #[test]
    fn wolff_at_infinite_temperature_flips_single_sites() {
        let mut g = SpinGrid::new(6, Boundary::Plus, Fill::Random { seed: 1 }).unwrap();
        let mut rng = chain_rng(6, 0);
        for _ in 0..100 {
            let before = g.clone();
            let flipped = wolff_step(&mut g, 0.0, &mut rng);
            assert_eq!(flipped, 1);
            let diff = before.spins().iter().zip(g.spins()).filter(|(a, b)| a != b).count();
            assert_eq!(diff, 1);
        }
    }

    #[test]
    fn params_validation() {
        let mut p = ChainParams { beta: 0.5, sweeps: 10, thermalization: 0, sample_stride: 1, seed: 0, target_m: None };
        assert!(p.validate().is_ok());
        p.sample_stride = 0;
        assert!(p.validate().is_err());
        p.sample_stride = 1;
        p.beta = 0.0;
        assert!(p.validate().is_err());
    }
}
