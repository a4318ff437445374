//! Numerics for a two-magnet fingertip pulse sensor.
//!
//! - [`magnetostatics`]: dipole, finite-cylinder and induced-susceptibility fields.
//! - [`perturbation`]: first-order sensor signals from magnet displacement,
//!   rotation and blood susceptibility change.
//! - [`placement`]: sensitivity maps over candidate sensor positions and the
//!   dipole-validity sweep.
//! - [`dsp`]: synthetic two-channel pulse recordings and the
//!   magnetic-vs-vibration agreement pipeline.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dsp;
pub mod error;
pub mod io;
pub mod magnetostatics;
pub mod perturbation;
pub mod placement;
pub mod rotation;
pub mod units;
pub mod vec3;

pub use error::{Error, Result};
pub use rotation::{rotation_matrix, Mat3, RotationAngles};
pub use vec3::Vec3;
