//! Simulation and control library for robotized coil placement on a head:
//! pose algebra and camera calibration, guarded approach planning, hybrid
//! force/torque control, a penalty-contact plant, and a scenario runner.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contact_sim;
pub mod controller;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod trajectory;

pub use error::{Error, Result};
