//! Flat TOML run configuration. Every key is optional; missing keys keep the
//! library defaults.

use std::path::Path;

use dough_core::control::{parse_target_label, RunConfig};
use dough_core::geometry::{Disk, Vec2, INCH};
use dough_core::sim::preset;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub name: Option<String>,
    pub seed: Option<u64>,
    /// Seconds.
    pub t_max: Option<f64>,
    pub iou_min: Option<f64>,
    pub action_duration: Option<f64>,

    /// Bundled preset name; the keys below override single parameters.
    pub material: Option<String>,
    pub stiffness: Option<f64>,
    pub flow_forward: Option<f64>,
    pub flow_lateral: Option<f64>,
    pub rate_sensitivity: Option<f64>,
    pub cohesion_threshold: Option<f64>,
    pub press_depth_factor: Option<f64>,

    /// "T3.5", "T4.0" or "T4.5".
    pub target: Option<String>,
    pub target_diameter_in: Option<f64>,
    pub target_diameter_cm: Option<f64>,
    pub target_x: Option<f64>,
    pub target_y: Option<f64>,

    pub start_method: Option<String>,
    pub end_method: Option<String>,
    pub shrink: Option<String>,
    pub shrink_threshold: Option<f64>,
    pub n_directions: Option<usize>,
    pub dcd_direction: Option<String>,
    pub dcd_target_points: Option<usize>,
    pub dcd_alpha: Option<f64>,

    pub dough_diameter: Option<f64>,
    pub dough_height: Option<f64>,
    pub dough_offset_x: Option<f64>,
    pub dough_offset_y: Option<f64>,
    pub dough_jitter: Option<f64>,

    pub pin_speed: Option<f64>,
    pub press_ratio: Option<f64>,
    pub forward_shrink_transfer: Option<f64>,
    pub min_pin_height: Option<f64>,
    pub settle_ratio: Option<f64>,
    pub film_height: Option<f64>,
    pub crumb_area: Option<f64>,

    pub resolution: Option<f64>,
    pub workspace: Option<f64>,
    pub epsilon: Option<f64>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn parsed<T: std::str::FromStr>(slot: &mut T, v: &Option<String>) -> Result<(), ConfigError>
where
    T::Err: std::fmt::Display,
{
    if let Some(s) = v {
        *slot = s.parse().map_err(|e: T::Err| ConfigError::Invalid(e.to_string()))?;
    }
    Ok(())
}

impl ConfigFile {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    /// Applies the file on top of `base` and validates the result.
    pub fn apply(&self, base: &RunConfig) -> Result<RunConfig, ConfigError> {
        let mut c = base.clone();
        set(&mut c.name, self.name.clone());
        set(&mut c.seed, self.seed);
        set(&mut c.t_max, self.t_max);
        set(&mut c.iou_min, self.iou_min);
        set(&mut c.action_duration, self.action_duration);

        if let Some(m) = &self.material {
            c.material = preset(m).ok_or_else(|| ConfigError::Invalid(format!("unknown material {m:?}")))?;
        }
        let m = &mut c.material;
        set(&mut m.stiffness, self.stiffness);
        set(&mut m.flow_forward, self.flow_forward);
        set(&mut m.flow_lateral, self.flow_lateral);
        set(&mut m.rate_sensitivity, self.rate_sensitivity);
        set(&mut m.cohesion_threshold, self.cohesion_threshold);
        set(&mut m.press_depth_factor, self.press_depth_factor);

        let sizes = [self.target.is_some(), self.target_diameter_in.is_some(), self.target_diameter_cm.is_some()];
        if sizes.iter().filter(|b| **b).count() > 1 {
            return Err(ConfigError::Invalid("give only one of target, target_diameter_in, target_diameter_cm".into()));
        }
        let mut radius = c.target.radius;
        if let Some(label) = &self.target {
            radius = parse_target_label(label)
                .ok_or_else(|| ConfigError::Invalid(format!("unknown target {label:?}, expected T3.5, T4.0 or T4.5")))?
                .radius;
        }
        if let Some(d) = self.target_diameter_in {
            radius = 0.5 * d * INCH;
        }
        if let Some(d) = self.target_diameter_cm {
            radius = 0.005 * d;
        }
        let center = Vec2::new(self.target_x.unwrap_or(c.target.center.x), self.target_y.unwrap_or(c.target.center.y));
        c.target = Disk::new(center, radius).map_err(|e| ConfigError::Invalid(format!("target: {e}")))?;

        let p = &mut c.plan;
        parsed(&mut p.start_method, &self.start_method)?;
        parsed(&mut p.end_method, &self.end_method)?;
        parsed(&mut p.shrink, &self.shrink)?;
        parsed(&mut p.dcd_direction, &self.dcd_direction)?;
        set(&mut p.shrink_threshold, self.shrink_threshold);
        set(&mut p.n_directions, self.n_directions);
        set(&mut p.dcd_target_points, self.dcd_target_points);
        set(&mut p.dcd.alpha, self.dcd_alpha);

        let d = &mut c.dough;
        set(&mut d.diameter, self.dough_diameter);
        set(&mut d.height, self.dough_height);
        set(&mut d.offset.x, self.dough_offset_x);
        set(&mut d.offset.y, self.dough_offset_y);
        set(&mut d.jitter, self.dough_jitter);

        let s = &mut c.sim;
        set(&mut s.pin_speed, self.pin_speed);
        set(&mut s.press_ratio, self.press_ratio);
        set(&mut s.forward_shrink_transfer, self.forward_shrink_transfer);
        set(&mut s.min_pin_height, self.min_pin_height);
        set(&mut s.settle_ratio, self.settle_ratio);
        set(&mut s.film_height, self.film_height);
        set(&mut s.crumb_area, self.crumb_area);

        set(&mut c.resolution, self.resolution);
        set(&mut c.workspace, self.workspace);
        set(&mut c.epsilon, self.epsilon);

        c.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(c)
    }
}
