use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Plasticity, flow and tactile parameters of one dough-like material.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub name: String,
    /// Tactile spring constant, N/m.
    pub stiffness: f64,
    /// Fraction of displaced volume pushed ahead of the pin.
    pub flow_forward: f64,
    /// Fraction of displaced volume squeezed out along the pin axis.
    pub flow_lateral: f64,
    /// Viscous term, N·s/m. Large for materials that only yield slowly.
    pub rate_sensitivity: f64,
    /// Minimum height that still holds together, m. Zero disables fracture.
    pub cohesion_threshold: f64,
    /// Fraction of the commanded press depth the material actually yields, in (0, 1].
    pub press_depth_factor: f64,
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.stiffness,
            self.flow_forward,
            self.flow_lateral,
            self.rate_sensitivity,
            self.cohesion_threshold,
            self.press_depth_factor,
        ];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidConfig(format!("{}: parameters must be finite and >= 0", self.name)));
        }
        if self.flow_forward > 1.0 || self.flow_lateral > 1.0 || self.flow_forward + self.flow_lateral > 1.0 {
            return Err(Error::InvalidConfig(format!("{}: flow fractions must sum to <= 1", self.name)));
        }
        if !(self.press_depth_factor > 0.0 && self.press_depth_factor <= 1.0) {
            return Err(Error::InvalidConfig(format!("{}: press_depth_factor must lie in (0, 1]", self.name)));
        }
        if self.stiffness <= 0.0 {
            return Err(Error::InvalidConfig(format!("{}: stiffness must be positive", self.name)));
        }
        Ok(())
    }

    /// Fraction of the commanded press depth achieved at pin speed `speed` (m/s):
    /// `press_depth_factor * k / (k + rate_sensitivity * speed)`.
    pub fn achieved_depth_fraction(&self, speed: f64) -> f64 {
        self.press_depth_factor * self.stiffness / (self.stiffness + self.rate_sensitivity * speed.max(0.0))
    }

    pub fn play_doh() -> Self {
        preset("Play-Doh").expect("bundled preset")
    }

    pub fn plasticine() -> Self {
        preset("Plasticine").expect("bundled preset")
    }

    pub fn kinetic_sand() -> Self {
        preset("Kinetic sand").expect("bundled preset")
    }
}

#[derive(Deserialize)]
struct PresetFile {
    version: u32,
    material: Vec<MaterialParams>,
}

const PRESET_SOURCE: &str = include_str!("../../presets/materials.toml");

/// Version of the bundled preset file.
pub fn preset_version() -> u32 {
    parsed().0
}

fn parsed() -> &'static (u32, Vec<MaterialParams>) {
    static PRESETS: OnceLock<(u32, Vec<MaterialParams>)> = OnceLock::new();
    PRESETS.get_or_init(|| {
        let file: PresetFile = toml::from_str(PRESET_SOURCE).expect("bundled material presets parse");
        (file.version, file.material)
    })
}

/// Bundled presets in file order.
pub fn material_presets() -> &'static [MaterialParams] {
    &parsed().1
}

/// Case-insensitive lookup; also accepts names without spaces or dashes ("playdoh").
pub fn preset(name: &str) -> Option<MaterialParams> {
    let key = normalize(name);
    material_presets().iter().find(|m| normalize(&m.name) == key).cloned()
}

fn normalize(s: &str) -> String {
    s.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_presets_are_valid() {
        assert_eq!(preset_version(), 2);
        assert_eq!(material_presets().len(), 3);
        for m in material_presets() {
            m.validate().unwrap();
        }
    }

    #[test]
    fn lookup_is_forgiving() {
        assert_eq!(preset("playdoh").unwrap().name, "Play-Doh");
        assert_eq!(preset("KINETIC_SAND").unwrap().name, "Kinetic sand");
        assert!(preset("clay").is_none());
    }

    #[test]
    fn rejects_overfull_flow() {
        let mut m = MaterialParams::play_doh();
        m.flow_forward = 0.9;
        m.flow_lateral = 0.2;
        assert!(m.validate().is_err());
    }

    #[test]
    fn fast_presses_yield_less_for_rate_sensitive_material() {
        let ks = MaterialParams::kinetic_sand();
        assert!(ks.achieved_depth_fraction(0.05) < ks.achieved_depth_fraction(0.001));
        let pd = MaterialParams::play_doh();
        assert_eq!(pd.achieved_depth_fraction(0.05), pd.achieved_depth_fraction(0.001));
    }
}
