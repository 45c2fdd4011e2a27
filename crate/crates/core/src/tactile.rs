//! Force-sensitive-resistor press model: material reaction force, divider
//! readout, compliance and nearest-preset classification.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::MaterialParams;

/// Voltage divider with the FSR on the high side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FsrCircuit {
    /// Reference resistor, Ω.
    pub r_ref: f64,
    /// Supply voltage, V.
    pub v_cc: f64,
    /// FSR resistance at a light touch, Ω.
    pub r0: f64,
    /// Force scale of the FSR response, N.
    pub f0: f64,
}

impl Default for FsrCircuit {
    fn default() -> Self {
        Self { r_ref: 10_000.0, v_cc: 5.0, r0: 1.0e6, f0: 0.02 }
    }
}

impl FsrCircuit {
    pub fn validate(&self) -> Result<()> {
        if [self.r_ref, self.v_cc, self.r0, self.f0].iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidConfig("circuit constants must be finite and positive".into()))
        }
    }

    /// `R0 / (1 + F/F0)`; infinite with nothing pressing on the sensor.
    pub fn resistance(&self, force: f64) -> f64 {
        if force <= 0.0 {
            f64::INFINITY
        } else {
            self.r0 / (1.0 + force / self.f0)
        }
    }

    /// Divider output for a given sensor resistance. An infinite resistance reads 0 V.
    pub fn v_out(&self, r_fsr: f64) -> f64 {
        if r_fsr.is_infinite() {
            return 0.0;
        }
        self.r_ref / (self.r_ref + r_fsr) * self.v_cc
    }

    pub fn v_out_for_force(&self, force: f64) -> f64 {
        self.v_out(self.resistance(force))
    }
}

/// Shared press protocol: every material is pressed by the same depth at the same rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub delta_x: f64,
    pub rate: f64,
}

impl Default for Protocol {
    fn default() -> Self {
        Self { delta_x: 0.001, rate: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressReading {
    pub material: String,
    pub delta_x: f64,
    pub rate: f64,
    pub force: f64,
    pub v_out: f64,
}

/// Noiseless reaction force: `(k + c·rate)·Δx`.
pub fn reaction_force(m: &MaterialParams, delta_x: f64, rate: f64) -> f64 {
    (m.stiffness + m.rate_sensitivity * rate) * delta_x
}

/// One press of depth `delta_x` at `rate`, with Gaussian force noise seeded by `seed`.
/// Negative noisy forces are clipped to zero.
pub fn press_measure(
    m: &MaterialParams,
    circuit: &FsrCircuit,
    delta_x: f64,
    rate: f64,
    noise_sd: f64,
    seed: u64,
) -> Result<PressReading> {
    if !(delta_x > 0.0 && rate > 0.0) {
        return Err(Error::InvalidConfig("press depth and rate must be positive".into()));
    }
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::InvalidConfig("noise_sd must be finite and >= 0".into()));
    }
    let mut force = reaction_force(m, delta_x, rate);
    if noise_sd > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        force += Normal::new(0.0, noise_sd).expect("checked sd").sample(&mut rng);
    }
    let force = force.max(0.0);
    Ok(PressReading { material: m.name.clone(), delta_x, rate, force, v_out: circuit.v_out_for_force(force) })
}

/// `n` presses of each material under `protocol`; reading `i` of material `j` uses seed `seed + j*n + i`.
pub fn measure_all(
    materials: &[MaterialParams],
    circuit: &FsrCircuit,
    protocol: Protocol,
    n: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<Vec<PressReading>> {
    let mut out = Vec::with_capacity(materials.len() * n);
    for (j, m) in materials.iter().enumerate() {
        for i in 0..n {
            let s = seed.wrapping_add((j * n + i) as u64);
            out.push(press_measure(m, circuit, protocol.delta_x, protocol.rate, noise_sd, s)?);
        }
    }
    Ok(out)
}

/// Deflection over force, m/N.
pub fn compliance(delta_x: f64, force: f64) -> Result<f64> {
    if force == 0.0 {
        return Err(Error::ZeroForce);
    }
    Ok(delta_x / force)
}

/// Nearest preset by mean force, each preset evaluated at the readings' own
/// depth and rate. Ties go to the lexicographically first name.
pub fn classify<'a>(readings: &[PressReading], presets: &'a [MaterialParams]) -> Option<&'a str> {
    if readings.is_empty() {
        return None;
    }
    let n = readings.len() as f64;
    let measured = readings.iter().map(|r| r.force).sum::<f64>() / n;
    presets
        .iter()
        .map(|m| {
            let expected = readings.iter().map(|r| reaction_force(m, r.delta_x, r.rate)).sum::<f64>() / n;
            ((measured - expected).abs(), m.name.as_str())
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)))
        .map(|(_, name)| name)
}

/// Writes readings as CSV with header `material,delta_x,rate,force,v_out`.
pub fn write_readings<W: Write>(readings: &[PressReading], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for r in readings {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

/// Reads the CSV written by [`write_readings`], e.g. a real sensor trace.
pub fn read_readings<R: Read>(input: R) -> Result<Vec<PressReading>> {
    let mut rd = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in rd.deserialize() {
        let r: PressReading = rec.map_err(|e| Error::InvalidConfig(format!("readings csv: {e}")))?;
        if !(r.delta_x > 0.0) || r.force < 0.0 {
            return Err(Error::InvalidConfig(format!("readings csv: bad row for {}", r.material)));
        }
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::MaterialParams;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn presets() -> Vec<MaterialParams> {
        vec![MaterialParams::play_doh(), MaterialParams::plasticine(), MaterialParams::kinetic_sand()]
    }

    #[test]
    fn divider_values() {
        let c = FsrCircuit::default();
        assert_eq!(c.v_out(c.r_ref), c.v_cc / 2.0);
        assert_eq!(c.v_out(f64::INFINITY), 0.0);
        assert_eq!(c.v_out_for_force(0.0), 0.0);
        assert_relative_eq!(c.v_out(30_000.0), 1.25, max_relative = 1e-12);
    }

    #[test]
    fn spring_law() {
        let mut m = MaterialParams::play_doh();
        m.stiffness = 2000.0;
        m.rate_sensitivity = 0.0;
        let r = press_measure(&m, &FsrCircuit::default(), 0.001, 0.01, 0.0, 1).unwrap();
        assert_relative_eq!(r.force, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn material_orderings() {
        let c = FsrCircuit::default();
        let p = Protocol::default();
        let f = |m: &MaterialParams, rate| press_measure(m, &c, p.delta_x, rate, 0.0, 0).unwrap().force;
        assert!(f(&MaterialParams::play_doh(), p.rate) < f(&MaterialParams::plasticine(), p.rate));
        let ks = MaterialParams::kinetic_sand();
        assert!(f(&ks, 0.001) < f(&ks, 0.05));
    }

    #[test]
    fn compliance_cases() {
        assert_relative_eq!(compliance(0.001, 2.0).unwrap(), 5e-4);
        assert_relative_eq!(compliance(0.001, 4.0).unwrap(), 0.5 * compliance(0.001, 2.0).unwrap());
        assert!(matches!(compliance(0.001, 0.0), Err(Error::ZeroForce)));
    }

    #[test]
    fn classify_noiseless_and_tie() {
        let ps = presets();
        let c = FsrCircuit::default();
        let p = Protocol::default();
        for m in &ps {
            let rs: Vec<_> = (0..5).map(|i| press_measure(m, &c, p.delta_x, p.rate, 0.0, i).unwrap()).collect();
            assert_eq!(classify(&rs, &ps), Some(m.name.as_str()));
        }
        // Midway between Kinetic sand and Play-Doh: alphabetical order decides.
        let mid = 0.5 * (reaction_force(&ps[0], p.delta_x, p.rate) + reaction_force(&ps[2], p.delta_x, p.rate));
        let r = PressReading { material: "?".into(), delta_x: p.delta_x, rate: p.rate, force: mid, v_out: 0.0 };
        assert_eq!(classify(&[r], &ps), Some("Kinetic sand"));
        assert_eq!(classify(&[], &ps), None);
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let m = MaterialParams::plasticine();
        let c = FsrCircuit::default();
        let a = press_measure(&m, &c, 0.001, 0.01, 0.1, 42).unwrap();
        let b = press_measure(&m, &c, 0.001, 0.01, 0.1, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noisy_mean_is_close() {
        let m = MaterialParams::plasticine();
        let c = FsrCircuit::default();
        let sd = 0.05;
        let truth = reaction_force(&m, 0.001, 0.01);
        let rs = measure_all(std::slice::from_ref(&m), &c, Protocol::default(), 5, sd, 9).unwrap();
        let mean = rs.iter().map(|r| r.force).sum::<f64>() / 5.0;
        assert!((mean - truth).abs() <= 2.0 * sd / 5f64.sqrt(), "{mean} vs {truth}");
    }

    #[test]
    fn csv_round_trip() {
        let rs = measure_all(&presets(), &FsrCircuit::default(), Protocol::default(), 2, 0.01, 3).unwrap();
        let mut buf = Vec::new();
        write_readings(&rs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("material,delta_x,rate,force,v_out\n"));
        assert!(!text.contains('\r'));
        assert_eq!(read_readings(buf.as_slice()).unwrap(), rs);
        assert!(read_readings("material,delta_x,rate,force,v_out\nX,0,0.01,1,1\n".as_bytes()).is_err());
    }

    #[test]
    fn rejects_bad_press() {
        let m = MaterialParams::play_doh();
        assert!(press_measure(&m, &FsrCircuit::default(), 0.0, 0.01, 0.0, 0).is_err());
        assert!(press_measure(&m, &FsrCircuit::default(), 0.001, 0.0, 0.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn v_out_monotone_and_bounded(f1 in 0.0f64..50.0, df in 1e-6f64..50.0, r in 0.0f64..1e9) {
            let c = FsrCircuit::default();
            prop_assert!(c.v_out_for_force(f1) < c.v_out_for_force(f1 + df));
            let v = c.v_out(r);
            prop_assert!((0.0..=c.v_cc).contains(&v));
        }

        #[test]
        fn play_doh_softer_for_every_depth(dx in 1e-6f64..0.05) {
            let rate = Protocol::default().rate;
            prop_assert!(reaction_force(&MaterialParams::play_doh(), dx, rate) < reaction_force(&MaterialParams::plasticine(), dx, rate));
        }
    }
}
