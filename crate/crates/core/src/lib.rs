//! Simulation, perception and planning for shaping a lump of dough into a
//! flat disk with a rolling pin.

pub mod control;
pub mod dcd;
pub mod error;
pub mod geometry;
pub mod perception;
pub mod planner;
pub mod presets;
pub mod sim;
pub mod spatial;
pub mod summary;
pub mod tactile;

pub use error::{Error, Result};
