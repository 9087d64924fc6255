//! Deterministic vehicle-dynamics simulation for estimating the maximum safe
//! speed of a vehicle on a superelevated horizontal curve, compared against
//! the AASHTO design speed.

// `!(x > 0.0)` is used on purpose so NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod report;
pub mod search;
pub mod tire;
pub mod units;

pub use error::{Error, Result};
