use super::{ChainParams, Kawasaki};
use crate::error::{Error, Result};
use crate::lattice::{Boundary, Fill, SpinGrid};
use crate::rng::{chain_rng, derive_seed, splitmix64, ChainRng, Purpose};

/// Stream of plus-boundary grids at fixed magnetization.
///
/// The chain starts from `k = (L² - M) / 2` minus spins placed uniformly at random,
/// performs `thermalization` Kawasaki sweeps and then yields a grid every
/// `sample_stride` sweeps until `sweeps` production sweeps are spent.
#[derive(Debug, Clone)]
pub struct CanonicalChain {
    grid: SpinGrid,
    kawasaki: Kawasaki,
    rng: ChainRng,
    beta: f64,
    stride: usize,
    remaining: usize,
    thermalization: usize,
}

impl CanonicalChain {
    pub fn new(side: usize, params: &ChainParams, chain: u64) -> Result<Self> {
        params.validate()?;
        let target = params
            .target_m
            .ok_or_else(|| crate::error::invalid("canonical sampling needs target_m"))?;
        if !SpinGrid::is_allowed_magnetization(side, target) {
            return Err(Error::DisallowedMagnetization { m: target, side });
        }
        let k = ((side * side) as i64 - target) / 2;
        let fill_seed = splitmix64(derive_seed(params.seed, Purpose::InitialFill) ^ splitmix64(chain));
        let grid = SpinGrid::new(side, Boundary::Plus, Fill::KMinus { k: k as usize, seed: fill_seed })?;
        let kawasaki = Kawasaki::new(&grid);
        Ok(CanonicalChain {
            grid,
            kawasaki,
            rng: chain_rng(derive_seed(params.seed, Purpose::Chain), chain),
            beta: params.beta,
            stride: params.sample_stride,
            remaining: params.sweeps / params.sample_stride,
            thermalization: params.thermalization,
        })
    }

    pub fn grid(&self) -> &SpinGrid {
        &self.grid
    }

    fn sweep(&mut self) {
        self.kawasaki.sweep(&mut self.grid, self.beta, &mut self.rng);
    }
}

impl Iterator for CanonicalChain {
    type Item = SpinGrid;

    fn next(&mut self) -> Option<SpinGrid> {
        while self.thermalization > 0 {
            self.sweep();
            self.thermalization -= 1;
        }
        if self.remaining == 0 {
            return None;
        }
        for _ in 0..self.stride {
            self.sweep();
        }
        self.remaining -= 1;
        Some(self.grid.clone())
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

/// Canonical stream for chain 0.
pub fn sample_canonical(params: &ChainParams, side: usize) -> Result<CanonicalChain> {
    CanonicalChain::new(side, params, 0)
}
