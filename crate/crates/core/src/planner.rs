//! Chooses the next pin motion from one look at the dough.

use serde::{Deserialize, Serialize};

use crate::dcd::{dcd_gradient, discretize_target, max_grad_point, DcdParams, HeightProfile};
use crate::error::{Error, Result};
use crate::geometry::{ray_circle_far_hit, ray_contour_exit, Disk, Vec2, Vec3};
use crate::perception::{centroid_2d, centroid_3d, highest_point, knn_z, ShapeState};
use crate::sim::{ActionKind, HeightMap, RollAction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StartMethod {
    Centroid2D,
    Centroid3D,
    HighestPoint,
    DcdGradient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EndMethod {
    /// Roll until the target outline.
    Target,
    /// Roll until the current dough outline.
    Current,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShrinkMode {
    Disabled,
    Forward,
    Side,
}

/// Where a `DcdGradient` roll points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DcdDirection {
    /// Along the negative xy gradient at the start point.
    Gradient,
    /// Same largest-gap scan the other start methods use.
    LargestGap,
}

macro_rules! name_parsing {
    ($t:ident { $($v:ident => $s:literal),* $(,)? }) => {
        impl $t {
            pub fn as_str(self) -> &'static str {
                match self { $($t::$v => $s),* }
            }
        }

        impl std::fmt::Display for $t {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl std::str::FromStr for $t {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
                $(
                    let name: String = $s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
                    if key == name {
                        return Ok($t::$v);
                    }
                )*
                Err(Error::InvalidConfig(format!("unknown {} `{s}`", stringify!($t))))
            }
        }
    };
}

name_parsing!(StartMethod { Centroid2D => "Centroid2D", Centroid3D => "Centroid3D", HighestPoint => "HighestPoint", DcdGradient => "DcdGradient" });
name_parsing!(EndMethod { Target => "Target", Current => "Current" });
name_parsing!(ShrinkMode { Disabled => "Disabled", Forward => "Forward", Side => "Side" });
name_parsing!(DcdDirection { Gradient => "Gradient", LargestGap => "LargestGap" });

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanConfig {
    pub start_method: StartMethod,
    pub end_method: EndMethod,
    pub shrink: ShrinkMode,
    /// Outside distance a contour point may have before a shrink fires, m.
    pub shrink_threshold: f64,
    pub n_directions: usize,
    pub dcd_direction: DcdDirection,
    /// Target points used by the `DcdGradient` start method.
    pub dcd_target_points: usize,
    pub dcd: DcdParams,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            start_method: StartMethod::HighestPoint,
            end_method: EndMethod::Target,
            shrink: ShrinkMode::Disabled,
            shrink_threshold: 0.003,
            n_directions: 360,
            dcd_direction: DcdDirection::Gradient,
            dcd_target_points: 1000,
            dcd: DcdParams::default(),
        }
    }
}

impl PlanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.shrink_threshold >= 0.0) {
            return Err(Error::InvalidConfig("shrink_threshold must be >= 0".into()));
        }
        if self.n_directions < 8 {
            return Err(Error::InvalidConfig("n_directions must be >= 8".into()));
        }
        if !(self.dcd.alpha > 0.0) {
            return Err(Error::InvalidConfig("dcd alpha must be > 0".into()));
        }
        if self.dcd_target_points < 16 {
            return Err(Error::InvalidConfig("dcd_target_points must be >= 16".into()));
        }
        Ok(())
    }
}

/// Cells within this of the maximum height count as the top, m.
pub const TOP_TIE: f64 = 1e-9;

/// The highest cell; among a plateau of equally high cells, the one nearest
/// `center` (then the lexicographically first), so a flat top starts in its
/// middle rather than on its rim.
pub fn central_highest_point(hm: &HeightMap, center: Vec2) -> Result<Vec3> {
    let top = highest_point(hm)?.z;
    let mut best: Option<(usize, f64)> = None;
    for (i, &h) in hm.heights.iter().enumerate() {
        if h >= top - TOP_TIE {
            let d = (hm.center_of_index(i) - center).norm();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
    }
    let (i, _) = best.ok_or(Error::EmptyDough)?;
    Ok(hm.center_of_index(i).with_z(hm.heights[i]))
}

/// Start point and, for `DcdGradient`, the gradient found there.
fn start_and_gradient(cfg: &PlanConfig, state: &ShapeState, hm: &HeightMap, target: &Disk) -> Result<(Vec3, Option<Vec3>)> {
    Ok(match cfg.start_method {
        StartMethod::Centroid2D => {
            let xy = centroid_2d(&state.mask)?;
            (xy.with_z(knn_z(&state.cloud, xy, 3)?), None)
        }
        StartMethod::Centroid3D => (centroid_3d(hm)?, None),
        StartMethod::HighestPoint => (central_highest_point(hm, centroid_2d(&state.mask)?)?, None),
        StartMethod::DcdGradient => {
            if state.cloud.is_empty() {
                return Err(Error::EmptyDough);
            }
            let s1 = discretize_target(target, cfg.dcd_target_points, HeightProfile::VolumePreserving(hm.total_volume()))?;
            let grads = dcd_gradient(&s1, &state.cloud, &cfg.dcd)?;
            let k = max_grad_point(&grads);
            (state.cloud.points[k], Some(grads[k]))
        }
    })
}

pub fn plan_start(cfg: &PlanConfig, state: &ShapeState, hm: &HeightMap, target: &Disk) -> Result<Vec3> {
    start_and_gradient(cfg, state, hm, target).map(|(s, _)| s)
}

/// Radial gap along `dir`, or `None` when the direction is excluded.
fn gap_along(state: &ShapeState, target: &Disk, s: Vec2, dir: Vec2) -> Result<Option<f64>> {
    let dough_exit = ray_contour_exit(s, dir, &state.contour)?;
    if !target.contains(dough_exit) {
        return Ok(None);
    }
    Ok(ray_circle_far_hit(s, dir, target).map(|t| (t - s).norm() - (dough_exit - s).norm()))
}

/// Gaps closer than this count as equal, m.
pub const GAP_TIE: f64 = 1e-12;

/// Unit direction at angle index `i` of `n`.
pub fn scan_direction(i: usize, n: usize) -> Vec2 {
    Vec2::from_angle(std::f64::consts::TAU * i as f64 / n as f64)
}

/// Gap for every scanned direction; `None` marks excluded ones.
pub fn direction_gaps(state: &ShapeState, target: &Disk, s: Vec2, n: usize) -> Result<Vec<Option<f64>>> {
    (0..n).map(|i| gap_along(state, target, s, scan_direction(i, n))).collect()
}

/// Direction from `s` with the widest dough-to-target gap. Directions whose
/// dough exit already lies outside the target are skipped; ties keep the
/// smallest angle.
pub fn largest_gap_direction(state: &ShapeState, target: &Disk, s: Vec2, n: usize) -> Result<Vec2> {
    let gaps = direction_gaps(state, target, s, n)?;
    let mut best: Option<(usize, f64)> = None;
    for (i, g) in gaps.into_iter().enumerate() {
        if let Some(g) = g {
            if best.is_none_or(|(_, bg)| g > bg + GAP_TIE) {
                best = Some((i, g));
            }
        }
    }
    best.map(|(i, _)| scan_direction(i, n)).ok_or(Error::AllDirectionsExcluded)
}

pub fn plan_end(method: EndMethod, s: Vec3, dir: Vec2, state: &ShapeState, target: &Disk) -> Result<Vec3> {
    let xy = match method {
        // Starts outside the target still get the far crossing of the outline.
        EndMethod::Target => ray_circle_far_hit(s.xy(), dir, target).ok_or(Error::OriginOutside)?,
        EndMethod::Current => ray_contour_exit(s.xy(), dir, &state.contour)?,
    };
    Ok(xy.with_z(s.z))
}

/// Start and end of a shrink when some contour vertex lies more than
/// `threshold` outside the target.
pub fn shrink_plan(state: &ShapeState, target: &Disk, threshold: f64) -> Option<(Vec3, Vec3)> {
    let mut best: Option<(Vec2, f64)> = None;
    for &p in &state.contour.points {
        let d = target.outside_distance(p);
        if best.is_none_or(|(_, bd)| d > bd) {
            best = Some((p, d));
        }
    }
    let (p, d) = best?;
    if d <= threshold {
        return None;
    }
    let bearing = (p - target.center).normalized()?;
    Some((p.with_z(0.0), (target.center + bearing * target.radius).with_z(0.0)))
}

pub fn plan(cfg: &PlanConfig, state: &ShapeState, hm: &HeightMap, target: &Disk) -> Result<RollAction> {
    let kind = match cfg.shrink {
        ShrinkMode::Disabled => None,
        ShrinkMode::Forward => Some(ActionKind::ForwardShrink),
        ShrinkMode::Side => Some(ActionKind::SideShrink),
    };
    if let Some(kind) = kind {
        if let Some((s, e)) = shrink_plan(state, target, cfg.shrink_threshold) {
            return Ok(RollAction::shrink(kind, s, e));
        }
    }
    let (s, grad) = start_and_gradient(cfg, state, hm, target)?;
    let downhill = match (grad, cfg.dcd_direction) {
        (Some(g), DcdDirection::Gradient) => (-g.xy()).normalized(),
        _ => None,
    };
    let dir = match downhill {
        Some(d) => d,
        None => largest_gap_direction(state, target, s.xy(), cfg.n_directions)?,
    };
    let e = plan_end(cfg.end_method, s, dir, state, target)?;
    Ok(RollAction::roll(s, e))
}
