//! The experiment matrix: each preset expands to the run conditions of one
//! experiment, three seeded repetitions each.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::control::{standard_target, RunConfig};
use crate::error::Error;
use crate::planner::{EndMethod, ShrinkMode, StartMethod};
use crate::sim::MaterialParams;

/// Repetitions per condition.
pub const REPETITIONS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentPreset {
    Materials,
    StartMethods,
    EndMethods,
    Shrink,
    TargetShapes,
    DcdSynthetic,
    Tactile,
}

impl ExperimentPreset {
    pub const ALL: [ExperimentPreset; 7] = [
        Self::Materials,
        Self::StartMethods,
        Self::EndMethods,
        Self::Shrink,
        Self::TargetShapes,
        Self::DcdSynthetic,
        Self::Tactile,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Materials => "materials",
            Self::StartMethods => "start-methods",
            Self::EndMethods => "end-methods",
            Self::Shrink => "shrink",
            Self::TargetShapes => "target-shapes",
            Self::DcdSynthetic => "dcd-synthetic",
            Self::Tactile => "tactile",
        }
    }

    /// Run conditions, one config per condition with `base.seed` as the first seed.
    /// Tactile has no shaping runs.
    pub fn expand(self, base: &RunConfig) -> Vec<RunConfig> {
        use EndMethod::*;
        use ShrinkMode::*;
        use StartMethod::*;
        let starts = [Centroid2D, Centroid3D, HighestPoint];
        let make = |m: &MaterialParams, t: f64, s: StartMethod, e: EndMethod, sh: ShrinkMode| {
            let mut c = base.clone();
            c.material = m.clone();
            c.target = standard_target(t);
            c.plan.start_method = s;
            c.plan.end_method = e;
            c.plan.shrink = sh;
            c.name = format!("{}/{}/T{t:.1}/{s}/{e}/{sh}", self.as_str(), m.name);
            c
        };
        let pd = MaterialParams::play_doh();
        let pl = MaterialParams::plasticine();
        let ks = MaterialParams::kinetic_sand();
        match self {
            Self::Materials => [&pd, &pl, &ks]
                .into_iter()
                .flat_map(|m| starts.map(|s| make(m, 4.0, s, Target, Disabled)))
                .collect(),
            Self::StartMethods => {
                [&pd, &pl].into_iter().flat_map(|m| starts.map(|s| make(m, 4.0, s, Target, Disabled))).collect()
            }
            Self::EndMethods => [Target, Current].map(|e| make(&pd, 4.5, HighestPoint, e, Disabled)).to_vec(),
            Self::Shrink => [Disabled, Forward, Side].map(|sh| make(&pd, 3.5, HighestPoint, Target, sh)).to_vec(),
            Self::TargetShapes => [3.5, 4.0, 4.5].map(|t| make(&pd, t, HighestPoint, Target, Disabled)).to_vec(),
            Self::DcdSynthetic => [&pd, &pl, &ks].map(|m| make(m, 4.5, DcdGradient, Target, Disabled)).to_vec(),
            Self::Tactile => Vec::new(),
        }
    }
}

impl fmt::Display for ExperimentPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == key)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown preset {s:?}")))
    }
}
