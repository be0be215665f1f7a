//! Numerical toolkit for limit sets of discrete subgroups of `SL(d, ℝ)`.
//!
//! The crate is layered bottom-up: [`matrix`] holds the dense kernel,
//! [`boundary`] the flag model of the visual boundary, [`symspace`] the
//! Riemannian geometry of `SL(d,ℝ)/SO(d)`, [`hilbert`] the projective plane,
//! [`group`] word balls and projections, and [`classify`] the limit-point
//! tests built on all of them.

pub mod error;
pub mod group;
pub mod hilbert;
pub mod boundary;
pub mod classify;
pub mod matrix;
pub mod symspace;

pub use error::{Error, Result};
