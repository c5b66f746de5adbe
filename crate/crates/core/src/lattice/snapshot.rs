//! `ISD1` snapshot files.
//!
//! Layout (little-endian): magic `"ISD1"`, `u32` side, `u8` boundary code, three reserved
//! zero bytes, `u32` CRC-32 (IEEE) of the payload; then `ceil(L²/8)` payload bytes holding
//! the spins row-major, site `i` in bit `i % 8` (LSB first) of byte `i / 8`, bit set = +1.

use std::io::{Read, Write};

use super::{Boundary, SpinGrid};
use crate::error::{Error, Result};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"ISD1";
pub const SNAPSHOT_HEADER_LEN: usize = 16;

fn pack(grid: &SpinGrid) -> Vec<u8> {
    let n = grid.side() * grid.side();
    let mut out = vec![0u8; n.div_ceil(8)];
    for (i, &s) in grid.spins().iter().enumerate() {
        if s > 0 {
            out[i / 8] |= 1 << (i % 8);
        }
    }
    out
}

pub fn write_snapshot<W: Write>(grid: &SpinGrid, mut w: W) -> Result<()> {
    let payload = pack(grid);
    let side = u32::try_from(grid.side()).map_err(|_| Error::Snapshot("side does not fit in u32".into()))?;
    let mut header = [0u8; SNAPSHOT_HEADER_LEN];
    header[..4].copy_from_slice(SNAPSHOT_MAGIC);
    header[4..8].copy_from_slice(&side.to_le_bytes());
    header[8] = grid.boundary().code();
    header[12..16].copy_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    w.write_all(&header)?;
    w.write_all(&payload)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<SpinGrid> {
    let mut header = [0u8; SNAPSHOT_HEADER_LEN];
    r.read_exact(&mut header)?;
    if &header[..4] != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let side = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let boundary = Boundary::from_code(header[8])
        .ok_or_else(|| Error::Snapshot(format!("unknown boundary code {}", header[8])))?;
    let checksum = u32::from_le_bytes(header[12..16].try_into().unwrap());
    if side == 0 {
        return Err(Error::Snapshot("zero lattice side".into()));
    }
    let n = side * side;
    let mut payload = vec![0u8; n.div_ceil(8)];
    r.read_exact(&mut payload)?;
    if crc32fast::hash(&payload) != checksum {
        return Err(Error::Snapshot("checksum mismatch".into()));
    }
    let spins = (0..n)
        .map(|i| if payload[i / 8] >> (i % 8) & 1 == 1 { 1 } else { -1 })
        .collect();
    SpinGrid::from_spins(side, boundary, spins)
}
