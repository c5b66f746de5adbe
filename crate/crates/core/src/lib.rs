//! Droplet formation in the two-dimensional Ising model at fixed magnetization.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`] – spin configurations, boundary conditions, deficit targets and snapshots.
//! * [`sampler`] – Metropolis, nonlocal Kawasaki and Wolff updates, bulk estimation and
//!   canonical (fixed-magnetization) sample streams.
//! * [`enum_oracle`] – exact enumeration on tiny lattices.
//! * [`contour`] – Peierls contours with the south-east/north-west rounding rule.
//! * [`skeleton`] – coarse-grained skeletons, polygons, winding-parity areas and the Wulff
//!   functional on polygons.
//! * [`wulff`] – surface tension from dual-temperature transfer matrices, Wulff shapes,
//!   Hausdorff distances and droplet shape fits.
//! * [`variational`] – the rate function `Φ_Δ` and its minimizers in dimension `d`.
//! * [`experiment`] – sweep configuration, event classification and aggregation.

pub mod contour;
pub mod enum_oracle;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod lattice;
pub mod rng;
pub mod sampler;
pub mod skeleton;
pub mod stats;
pub mod variational;
pub mod wulff;

pub use error::{Error, Result};
