//! Heightfield plasticity simulator standing in for the physical dough and robot.

mod deform;
mod heightmap;
mod material;
mod snapshot;

pub use deform::{apply_action, apply_roll, apply_shrink, crumble, ActionReport};
pub use heightmap::{
    connected_components, init_cylinder, total_volume, HeightMap, DEFAULT_EPSILON, DEFAULT_RESOLUTION,
    DEFAULT_WORKSPACE,
};
pub use material::{material_presets, preset, preset_version, MaterialParams};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotError};

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;

pub const DEFAULT_PIN_RADIUS: f64 = 0.0125;
pub const DEFAULT_PIN_LENGTH: f64 = 0.12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionKind {
    Roll,
    ForwardShrink,
    SideShrink,
}

impl ActionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::Roll => "Roll",
            ActionKind::ForwardShrink => "ForwardShrink",
            ActionKind::SideShrink => "SideShrink",
        }
    }

    pub fn is_shrink(self) -> bool {
        !matches!(self, ActionKind::Roll)
    }
}

impl std::fmt::Display for ActionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One planned pin motion from `start` to `end`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RollAction {
    pub kind: ActionKind,
    pub start: Vec3,
    pub end: Vec3,
    pub pin_radius: f64,
    pub pin_length: f64,
}

impl RollAction {
    pub fn roll(start: Vec3, end: Vec3) -> Self {
        Self { kind: ActionKind::Roll, start, end, pin_radius: DEFAULT_PIN_RADIUS, pin_length: DEFAULT_PIN_LENGTH }
    }

    /// Shrink actions run on the plate, so both z coordinates are forced to zero.
    pub fn shrink(kind: ActionKind, start: Vec3, end: Vec3) -> Self {
        debug_assert!(kind.is_shrink());
        Self {
            kind,
            start: start.xy().with_z(0.0),
            end: end.xy().with_z(0.0),
            pin_radius: DEFAULT_PIN_RADIUS,
            pin_length: DEFAULT_PIN_LENGTH,
        }
    }
}

/// Knobs of the deformation model that are not material properties.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    /// Pin travel speed, m/s. Feeds the rate-dependent press depth.
    pub pin_speed: f64,
    /// Commanded press depth as a fraction of the contact height `start.z`.
    pub press_ratio: f64,
    /// Share of displaced volume a forward shrink carries ahead; the rest is rolled over.
    pub forward_shrink_transfer: f64,
    /// Lowest pin bottom height a roll may command, m. Shrinks run on the plate regardless.
    pub min_pin_height: f64,
    /// Pushed-off dough settles at most this far above the pin bottom, in pin radii.
    pub settle_ratio: f64,
    /// Cohesive materials only: detached pieces thinner than this count as film
    /// and pieces up to `crumb_area` (m²) rejoin the main body after each action.
    pub film_height: f64,
    pub crumb_area: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self { pin_speed: 0.05, press_ratio: 0.4, forward_shrink_transfer: 0.5, min_pin_height: 0.003, settle_ratio: 0.25, film_height: DEFAULT_EPSILON, crumb_area: 5e-5 }
    }
}
