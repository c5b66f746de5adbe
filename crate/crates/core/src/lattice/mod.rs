//! Spin configurations on an `L × L` box with fixed boundary spins.
//!
//! Sites are addressed as `(x, y)` with `x` the column (growing east) and `y` the row
//! (growing south); storage is row-major, `index = y * L + x`.

mod snapshot;

pub use snapshot::{read_snapshot, write_snapshot, SNAPSHOT_HEADER_LEN, SNAPSHOT_MAGIC};

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{purpose_rng, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Plus,
    Minus,
    Free,
}

impl Boundary {
    /// Spin value felt through a boundary bond; zero for free boundaries.
    pub fn spin(self) -> i32 {
        match self {
            Boundary::Plus => 1,
            Boundary::Minus => -1,
            Boundary::Free => 0,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Boundary::Plus => 0,
            Boundary::Minus => 1,
            Boundary::Free => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Boundary::Plus),
            1 => Some(Boundary::Minus),
            2 => Some(Boundary::Free),
            _ => None,
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" => Ok(Boundary::Plus),
            "minus" | "-" => Ok(Boundary::Minus),
            "free" => Ok(Boundary::Free),
            other => Err(invalid(format!("unknown boundary '{other}'"))),
        }
    }
}

/// Initial fill of a new grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fill {
    AllPlus,
    AllMinus,
    /// Independent fair coin per site.
    Random { seed: u64 },
    /// Exactly `k` minus spins at uniformly random positions.
    KMinus { k: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinGrid {
    side: usize,
    boundary: Boundary,
    spins: Vec<i8>,
}

impl SpinGrid {
    pub fn new(side: usize, boundary: Boundary, fill: Fill) -> Result<Self> {
        if side == 0 {
            return Err(invalid("lattice side must be positive"));
        }
        let n = side * side;
        let spins = match fill {
            Fill::AllPlus => vec![1; n],
            Fill::AllMinus => vec![-1; n],
            Fill::Random { seed } => {
                let mut rng = purpose_rng(seed, Purpose::InitialFill, 0);
                (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect()
            }
            Fill::KMinus { k, seed } => {
                if k > n {
                    return Err(invalid(format!("k = {k} exceeds the {n} sites")));
                }
                let mut rng = purpose_rng(seed, Purpose::InitialFill, 0);
                let mut s = vec![1; n];
                for i in sample(&mut rng, n, k) {
                    s[i] = -1;
                }
                s
            }
        };
        Ok(SpinGrid { side, boundary, spins })
    }

    /// Builds a grid from explicit spins (row-major).
    pub fn from_spins(side: usize, boundary: Boundary, spins: Vec<i8>) -> Result<Self> {
        if side == 0 || spins.len() != side * side {
            return Err(invalid("spin vector does not match the lattice side"));
        }
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(invalid("spins must be +1 or -1"));
        }
        Ok(SpinGrid { side, boundary, spins })
    }

    /// Plus-boundary grid of side `side` with the listed sites set to minus.
    pub fn with_minus_sites(side: usize, boundary: Boundary, sites: &[(usize, usize)]) -> Result<Self> {
        let mut g = SpinGrid::new(side, boundary, Fill::AllPlus)?;
        for &(x, y) in sites {
            if x >= side || y >= side {
                return Err(invalid(format!("site ({x},{y}) outside the lattice")));
            }
            g.set(x, y, -1);
        }
        Ok(g)
    }

    /// Grid whose bits (bit `i` = site `i`, 1 = plus) are taken from `bits`.
    pub fn from_bits(side: usize, boundary: Boundary, bits: u64) -> Self {
        let spins = (0..side * side)
            .map(|i| if bits >> i & 1 == 1 { 1 } else { -1 })
            .collect();
        SpinGrid { side, boundary, spins }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub(crate) fn spins_mut(&mut self) -> &mut [i8] {
        &mut self.spins
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> i8 {
        self.spins[y * self.side + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, s: i8) {
        debug_assert!(s == 1 || s == -1);
        self.spins[y * self.side + x] = s;
    }

    /// Spin at possibly out-of-box coordinates; outside sites carry the boundary spin.
    #[inline]
    pub fn spin_or_boundary(&self, x: isize, y: isize) -> i32 {
        let l = self.side as isize;
        if x < 0 || y < 0 || x >= l || y >= l {
            self.boundary.spin()
        } else {
            self.spins[y as usize * self.side + x as usize] as i32
        }
    }

    /// Sum of the four neighbours of site `i`, boundary spins included.
    #[inline]
    pub fn local_field(&self, i: usize) -> i32 {
        let l = self.side;
        let (x, y) = (i % l, i / l);
        let b = self.boundary.spin();
        let s = &self.spins;
        let w = if x > 0 { s[i - 1] as i32 } else { b };
        let e = if x + 1 < l { s[i + 1] as i32 } else { b };
        let n = if y > 0 { s[i - l] as i32 } else { b };
        let so = if y + 1 < l { s[i + l] as i32 } else { b };
        w + e + n + so
    }

    pub fn total_magnetization(&self) -> i64 {
        self.spins.iter().map(|&s| s as i64).sum()
    }

    pub fn minus_count(&self) -> usize {
        self.spins.iter().filter(|&&s| s < 0).count()
    }

    /// `H = -Σ σ_x σ_y` over bonds with at least one end inside the box.
    pub fn energy(&self) -> i64 {
        let l = self.side;
        let b = self.boundary.spin() as i64;
        let mut e = 0i64;
        for y in 0..l {
            for x in 0..l {
                let s = self.get(x, y) as i64;
                if x + 1 < l {
                    e -= s * self.get(x + 1, y) as i64;
                }
                if y + 1 < l {
                    e -= s * self.get(x, y + 1) as i64;
                }
                let border = (x == 0) as i64 + (x + 1 == l) as i64 + (y == 0) as i64 + (y + 1 == l) as i64;
                e -= s * b * border;
            }
        }
        e
    }

    /// Every spin negated; the boundary is kept.
    pub fn flipped(&self) -> Self {
        SpinGrid {
            side: self.side,
            boundary: self.boundary,
            spins: self.spins.iter().map(|&s| -s).collect(),
        }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    /// Checks the value and parity invariants.
    pub fn check_invariants(&self) -> bool {
        let n = (self.side * self.side) as i64;
        let m = self.total_magnetization();
        self.spins.iter().all(|&s| s == 1 || s == -1) && m.abs() <= n && (m - n).rem_euclid(2) == 0
    }

    /// Magnetizations reachable on this lattice: `-L², -L²+2, …, L²`.
    pub fn is_allowed_magnetization(side: usize, m: i64) -> bool {
        let n = (side * side) as i64;
        m.abs() <= n && (m - n).rem_euclid(2) == 0
    }
}

/// Magnetization target for a droplet-scale deficit volume `v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeficitSpec {
    pub v: f64,
    pub m_star: f64,
    pub target_m: i64,
}

/// Nearest allowed magnetization to `m* L² - 2 m* v`; ties go to the smaller magnitude.
pub fn deficit_target(m_star: f64, side: usize, v: f64) -> Result<DeficitSpec> {
    let n = (side * side) as f64;
    if !(m_star > 0.0 && m_star <= 1.0) {
        return Err(invalid(format!("m* = {m_star} must lie in (0, 1]")));
    }
    if !(v > 0.0) {
        return Err(invalid(format!("deficit volume v = {v} must be positive")));
    }
    if v >= n {
        return Err(invalid(format!("deficit volume v = {v} exceeds the {n} sites")));
    }
    let ideal = m_star * n - 2.0 * m_star * v;
    let parity = (side * side % 2) as i64;
    // Allowed values are parity + 2j.
    let j = ((ideal - parity as f64) / 2.0).floor() as i64;
    let lo = parity + 2 * j;
    let hi = lo + 2;
    let (dlo, dhi) = (ideal - lo as f64, hi as f64 - ideal);
    let target_m = if dlo < dhi {
        lo
    } else if dhi < dlo {
        hi
    } else if lo.abs() <= hi.abs() {
        lo
    } else {
        hi
    };
    let nn = (side * side) as i64;
    Ok(DeficitSpec { v, m_star, target_m: target_m.clamp(-nn, nn) })
}
