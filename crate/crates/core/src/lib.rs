//! Phasor-based dehomogenisation of multi-layer lamination fields.
//!
//! A coarse homogenised solution (per-layer relative thickness and
//! orientation) is turned into a fine binary design: every intermediate
//! element emits an oriented complex oscillator, the phases are aligned,
//! the summed field is sampled, branch singularities are repaired and each
//! layer is thresholded against its local thickness. A separate boundary
//! wave smooths the staircase outline of the coarse indicator.

pub mod align;
pub mod bc;
pub mod assemble;
pub mod boundary;
pub mod branches;
pub mod case;
pub mod contour;
pub mod error;
pub mod evaluate;
pub mod fem;
pub mod filter;
pub mod grid;
pub mod interp;
pub mod math;
pub mod metrics;
pub mod output;
pub mod plan;
pub mod sample;
pub mod synth;
pub mod sweep;
pub mod vec2;

pub use error::{Error, Result, Stage};
pub use grid::{ComplexField, Field, Grid, Mask, ScalarField};
pub use math::Anisotropy;
pub use vec2::Vec2;
