//! Dense two-view stereo matching with Semi-Global Matching and
//! surface-orientation priors.
//!
//! The pipeline is split into small modules that can be used on their own:
//!
//! - [`io`]: image, PFM disparity, calibration and prior file formats.
//! - [`cost`]: truncated NCC matching cost volumes, or externally computed ones.
//! - [`sgm`]: 8-direction scanline aggregation with optional prior-shifted
//!   smoothness, winner selection and the per-pixel uncertainty measure.
//! - [`priors`]: offset images (one prior surface per pixel) and offset
//!   volumes (several surfaces per pixel, nearest one along the disparity axis).
//! - [`normals`]: converting surface-normal maps into disparity-space priors.
//! - [`estimation`]: coarse-to-fine plane priors and ground-truth oracle priors.
//! - [`eval`]: bad-t error rates, uncertainty sweeps and error maps.
//!
//! Geometry is generic over the scalar type (see [`Real`]); the aliases at
//! the crate root fix it to `f64`, which is what the pipeline uses.

pub mod cost;
pub mod error;
pub mod estimation;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod normals;
pub mod priors;
pub mod scalar;
pub mod sgm;

pub use cost::{ncc_cost, CostVolume, NccParams};
pub use error::{Error, Result};
pub use io::{CalibInfo, DisparityMap, FloatMap, GrayImage, UncertaintyMap};
pub use priors::{OffsetImage, OffsetVolume, Prior};
pub use scalar::Real;
pub use sgm::{AggregatedVolume, Direction, PenaltyParams};

/// Disparity-space plane `d(u, v) = a*u + b*v + c` in `f64`.
pub type PlaneD = geometry::Plane<f64>;
/// Real-valued disparity surface sampled per pixel, in `f64`.
pub type DisparitySurface = geometry::Surface<f64>;
/// Surface-normal map in `f64`.
pub type NormalMap = normals::NormalMap<f64>;
/// Integrated depth surface in `f64`.
pub type ZSurface = normals::ZSurface<f64>;
/// Plane hypotheses fitted to a disparity map, in `f64`.
pub type PlaneHypothesisSet = estimation::PlaneHypothesisSet<f64>;
