//! Synthetic two-channel pulse recordings.
//!
//! One latent skin displacement d(t) drives both channels: a sum of three
//! Gaussian lobes per beat (systolic, dicrotic notch, diastolic) on a
//! respiration baseline. The magnetic channel sees `gain · d`; the
//! vibrometer sees `d` plus the pitch lever term `−β·L_x`, with the pitch
//! following the slope of the passing pulse wave (β·L_x = −τ·ḋ).

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Channel, PulseTrace};
use crate::error::{Error, Result};
use crate::magnetostatics::{dipole_moment, CylindricalMagnet, SensorSpec};
use crate::perturbation::displacement_signal_farfield;
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lobe {
    /// Relative to the latent displacement scale.
    pub amplitude: f64,
    /// Fraction of the beat period.
    pub center: f64,
    /// Gaussian SD as a fraction of the beat period.
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub heart_rate_bpm: f64,
    pub duration_s: f64,
    pub fs: f64,
    pub respiration_hz: f64,
    /// Relative to the latent displacement scale.
    pub respiration_amplitude: f64,
    /// Scale of the latent displacement, m.
    pub displacement_m: f64,
    /// Systolic, dicrotic, diastolic.
    pub lobes: [Lobe; 3],
    /// Magnetic channel volts per metre of displacement.
    pub magnetic_gain: f64,
    /// Pulse-wave lever time constant τ, s; 0 disables rotation mixing.
    pub rotation_mixing_s: f64,
    /// V.
    pub noise_sd_magnetic: f64,
    /// m.
    pub noise_sd_vibration: f64,
    pub seed: u64,
}

/// |dV/dz| of the reference sensor 15 mm from the moving magnet's axis,
/// from the far-field displacement law.
pub fn reference_magnetic_gain() -> f64 {
    let magnet = CylindricalMagnet::reference(Vec3::ZERO);
    let sensor = SensorSpec::reference(Vec3::new(15e-3, 0.0, 0.0));
    displacement_signal_farfield(&sensor, dipole_moment(&magnet).norm(), 15e-3, 1.0)
        .expect("reference geometry is valid")
        .abs()
}

const DISPLACEMENT_M: f64 = 20e-6;
const NOISE_REL: f64 = 0.1;

impl Default for SynthConfig {
    fn default() -> Self {
        let gain = reference_magnetic_gain();
        SynthConfig {
            heart_rate_bpm: 72.0,
            duration_s: 90.0,
            fs: 240.0,
            respiration_hz: 0.25,
            respiration_amplitude: 0.5,
            displacement_m: DISPLACEMENT_M,
            lobes: [
                Lobe { amplitude: 1.0, center: 0.18, width: 0.11 },
                Lobe { amplitude: -0.2, center: 0.31, width: 0.03 },
                Lobe { amplitude: 0.3, center: 0.42, width: 0.07 },
            ],
            magnetic_gain: gain,
            rotation_mixing_s: 2e-3,
            noise_sd_magnetic: NOISE_REL * DISPLACEMENT_M * gain,
            noise_sd_vibration: NOISE_REL * DISPLACEMENT_M,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(30.0..=180.0).contains(&self.heart_rate_bpm) {
            return Err(Error::config(format!(
                "heart_rate_bpm must be in [30, 180], got {}",
                self.heart_rate_bpm
            )));
        }
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return Err(Error::config("fs must be positive"));
        }
        if !(self.duration_s * self.fs >= 2.0) || !self.duration_s.is_finite() {
            return Err(Error::config("duration must cover at least 2 samples"));
        }
        for (i, l) in self.lobes.iter().enumerate() {
            if !(l.center > 0.0 && l.center < 1.0) {
                return Err(Error::config(format!("lobe {i} center must be in (0, 1), got {}", l.center)));
            }
            if !(l.width > 0.0) || !l.amplitude.is_finite() {
                return Err(Error::config(format!("lobe {i} needs a positive width and finite amplitude")));
            }
        }
        let finite_nonneg = [
            self.respiration_hz,
            self.noise_sd_magnetic,
            self.noise_sd_vibration,
            self.displacement_m,
        ];
        if finite_nonneg.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::config(
                "respiration_hz, displacement_m and noise SDs must be finite and non-negative",
            ));
        }
        if ![self.respiration_amplitude, self.magnetic_gain, self.rotation_mixing_s]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::config("gains must be finite"));
        }
        Ok(())
    }

    pub fn period_s(&self) -> f64 {
        60.0 / self.heart_rate_bpm
    }

    /// Systolic peak times inside the recording.
    pub fn beat_times(&self) -> Vec<f64> {
        let t = self.period_s();
        let c = self.lobes[0].center * t;
        (0..)
            .map(|k| k as f64 * t + c)
            .take_while(|&s| s < self.duration_s)
            .collect()
    }

    /// Latent displacement and its time derivative, in units of
    /// `displacement_m`.
    pub fn latent(&self, t: f64) -> (f64, f64) {
        let period = self.period_s();
        let k0 = (t / period).floor() as i64;
        let (mut d, mut dd) = (0.0, 0.0);
        for k in k0 - 2..=k0 + 1 {
            let phase = t / period - k as f64;
            for l in &self.lobes {
                let u = (phase - l.center) / l.width;
                let g = l.amplitude * (-0.5 * u * u).exp();
                d += g;
                dd -= g * u / (l.width * period);
            }
        }
        let w = 2.0 * PI * self.respiration_hz;
        d += self.respiration_amplitude * (w * t).sin();
        dd += self.respiration_amplitude * w * (w * t).cos();
        (d, dd)
    }
}

/// Magnetic (V) and vibration (m) traces; deterministic in `cfg.seed`.
pub fn synth_pulse_train(cfg: &SynthConfig) -> Result<(PulseTrace, PulseTrace)> {
    cfg.validate()?;
    let n = (cfg.duration_s * cfg.fs).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise_m = Normal::new(0.0, cfg.noise_sd_magnetic).map_err(|e| Error::config(e.to_string()))?;
    let noise_v = Normal::new(0.0, cfg.noise_sd_vibration).map_err(|e| Error::config(e.to_string()))?;
    let mut mag = Vec::with_capacity(n);
    let mut vib = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / cfg.fs;
        let (d, dd) = cfg.latent(t);
        let z = cfg.displacement_m * d;
        let lever = cfg.displacement_m * cfg.rotation_mixing_s * dd;
        mag.push(cfg.magnetic_gain * z + noise_m.sample(&mut rng));
        vib.push(z + lever + noise_v.sample(&mut rng));
    }
    Ok((
        PulseTrace::new(mag, cfg.fs, Channel::Magnetic)?,
        PulseTrace::new(vib, cfg.fs, Channel::Vibration)?,
    ))
}
