//! Spherical geometry and optimization kernels for drag-based editing of
//! equirectangular (ERP) panoramas.
//!
//! The crate is `no_std` with `alloc`. Everything here is a pure function of
//! its inputs; file formats, the CLI and the benchmark harness live in the
//! `panodrag` crate.
//!
//! Module map:
//! - [`sphere`]: pixel / spherical / Cartesian conversions, alignment
//!   rotations, tangent bases, great-circle direction and distance.
//! - [`raster`]: ERP images, masks and planar rasters.
//! - [`reproject`]: adaptive reprojection of drag cases and perspective views.
//! - [`drag`]: feature field, motion supervision, spherical search regions,
//!   point tracking and the drag loop.
//! - [`metrics`]: image fidelity, Fréchet distance and the feature extractors
//!   the distances are computed over.

#![cfg_attr(not(any(test, feature = "std")), no_std)]
#![deny(missing_debug_implementations)]

extern crate alloc;

pub mod drag;
mod error;
pub mod hash;
pub mod linalg;
pub mod metrics;
pub mod raster;
pub mod reproject;
pub mod sphere;

pub use error::{Error, Result};
pub use raster::{ErpImage, MaskImage, Raster};
pub use sphere::{
    DirectionVec2, PixelCoord, RotationMatrix3, SphericalCoord, TangentBasis, UnitVec3, Vec3,
};
