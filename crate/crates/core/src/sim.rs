//! Synthetic IQ from a commutated four-element array.
//!
//! The buffer models the SDR output after complex downconversion: the
//! emitter is a tone at `frequency_offset_hz` from the tuned centre, and the
//! active element advances counter-clockwise every `samples_per_antenna / 2`
//! samples. Element switching is instantaneous.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::osc::Oscillator;
use crate::error::{invalid, Result};
use crate::types::{ArrayGeometry, IqBuffer, RadioConfig, Vec2, NUM_ANTENNAS};

/// Far-field emitter as seen from the array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterSpec {
    /// True angle of incidence in the array frame.
    #[serde(default)]
    pub bearing_deg: f64,
    pub frequency_offset_hz: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub phase_rad: f64,
    /// Sorted, non-overlapping `[start, end)` transmit windows in seconds.
    /// Empty means the emitter never transmits.
    pub active_intervals: Vec<(f64, f64)>,
}

impl EmitterSpec {
    /// Continuous-wave emitter transmitting for all time.
    pub fn continuous(bearing_deg: f64, frequency_offset_hz: f64) -> Self {
        Self {
            bearing_deg,
            frequency_offset_hz,
            amplitude: 1.0,
            phase_rad: 0.0,
            active_intervals: vec![(f64::NEG_INFINITY, f64::INFINITY)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0) {
            return Err(invalid(format!("emitter amplitude must be positive, got {}", self.amplitude)));
        }
        let mut last_end = f64::NEG_INFINITY;
        for &(start, end) in &self.active_intervals {
            if !(start < end) {
                return Err(invalid(format!("empty or reversed interval [{start}, {end})")));
            }
            if start < last_end {
                return Err(invalid("active intervals must be sorted and non-overlapping"));
            }
            last_end = end;
        }
        Ok(())
    }

    pub fn is_active(&self, t: f64) -> bool {
        self.active_intervals.iter().any(|&(s, e)| t >= s && t < e)
    }
}

/// Propagation and receiver impairments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    /// Emitter power over complex noise power, dB. `inf` disables noise.
    pub snr_db: f64,
    /// Standard deviation of the per-cycle isotropic element displacement.
    #[serde(default)]
    pub geometry_jitter_std_m: f64,
    #[serde(default)]
    pub rng_seed: u64,
    /// Receiver DC spike amplitude (the SDR has no DC blocking).
    #[serde(default)]
    pub dc_offset: f64,
}

impl ChannelSpec {
    pub fn noiseless() -> Self {
        Self {
            snr_db: f64::INFINITY,
            geometry_jitter_std_m: 0.0,
            rng_seed: 0,
            dc_offset: 0.0,
        }
    }

    pub fn with_snr(snr_db: f64, rng_seed: u64) -> Self {
        Self {
            snr_db,
            rng_seed,
            ..Self::noiseless()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.geometry_jitter_std_m >= 0.0) {
            return Err(invalid("geometry jitter must be non-negative"));
        }
        if self.snr_db.is_nan() {
            return Err(invalid("snr_db must not be NaN"));
        }
        Ok(())
    }

    /// Total complex noise power for an emitter of the given amplitude.
    pub fn noise_power(&self, amplitude: f64) -> f64 {
        if self.snr_db == f64::INFINITY {
            0.0
        } else {
            amplitude * amplitude * 10f64.powf(-self.snr_db / 10.0)
        }
    }
}

/// Spatial phase of one element for a far-field emitter at `bearing_deg`:
/// `(2 pi / lambda) * (p_k . u)`, i.e. `(2 pi R / lambda) cos(phi_k - alpha)`.
pub fn element_phase(
    geometry: &ArrayGeometry,
    element_index: usize,
    bearing_deg: f64,
    wavelength_m: f64,
) -> Result<f64> {
    if element_index >= NUM_ANTENNAS {
        return Err(invalid(format!("element index {element_index} out of range 0..4")));
    }
    if !(wavelength_m > 0.0) {
        return Err(invalid("wavelength must be positive"));
    }
    let p = geometry.element_positions()[element_index];
    Ok(position_phase(p, bearing_deg, wavelength_m))
}

fn position_phase(p: Vec2, bearing_deg: f64, wavelength_m: f64) -> f64 {
    TAU / wavelength_m * p.dot(Vec2::from_bearing(bearing_deg))
}

/// Full-rotation commutation frequency, `2 S / (4 Samples_antenna)`.
pub fn switching_frequency(radio: &RadioConfig) -> f64 {
    radio.switching_frequency_hz()
}

/// Synthesises `duration_s` of commutated-array IQ starting at
/// `start_time_s`. Both must be whole numbers of commutation cycles so every
/// capture begins on element 0.
pub fn simulate_capture(
    radio: &RadioConfig,
    geometry: &ArrayGeometry,
    emitter: &EmitterSpec,
    channel: &ChannelSpec,
    start_time_s: f64,
    duration_s: f64,
) -> Result<IqBuffer> {
    radio.validate()?;
    emitter.validate()?;
    channel.validate()?;
    if !(duration_s > 0.0) {
        return Err(invalid(format!("duration must be positive, got {duration_s}")));
    }
    let fs = radio.sample_rate_hz as f64;
    let per_rotation = radio.samples_per_rotation();
    let len = whole_cycles(duration_s, fs, per_rotation, "duration")?;
    let first = whole_cycles_signed(start_time_s, fs, per_rotation, "start time")?;

    let lambda = radio.wavelength_m();
    let mut rng = ChaCha8Rng::seed_from_u64(channel.rng_seed);
    let noise_power = channel.noise_power(emitter.amplitude);
    let noise = (noise_power > 0.0)
        .then(|| Normal::new(0.0, (noise_power / 2.0).sqrt()).expect("finite std"));
    let jitter = (channel.geometry_jitter_std_m > 0.0)
        .then(|| Normal::new(0.0, channel.geometry_jitter_std_m).expect("finite std"));

    let nominal: [f64; NUM_ANTENNAS] = std::array::from_fn(|k| {
        position_phase(geometry.element_positions()[k], emitter.bearing_deg, lambda)
    });
    let gain = |phase: f64| Complex64::from_polar(emitter.amplitude, phase + emitter.phase_rad);
    let mut gains: [Complex64; NUM_ANTENNAS] = std::array::from_fn(|k| gain(nominal[k]));
    let dc = Complex64::new(channel.dc_offset, 0.0);
    let mut samples = Vec::with_capacity(len as usize);
    let carrier = Oscillator::new(emitter.frequency_offset_hz, fs, first);

    for (i, tone) in (0..len).zip(carrier) {
        let abs = first + i as i64;
        let in_cycle = abs.rem_euclid(per_rotation as i64) as u64;
        if in_cycle == 0 {
            if let Some(j) = &jitter {
                for (k, g) in gains.iter_mut().enumerate() {
                    let d = Vec2::new(j.sample(&mut rng), j.sample(&mut rng));
                    *g = gain(position_phase(geometry.element_positions()[k] + d, emitter.bearing_deg, lambda));
                }
            }
        }
        let element = (NUM_ANTENNAS as u64 * in_cycle / per_rotation) as usize;
        let mut x = dc;
        if emitter.is_active(abs as f64 / fs) {
            x += tone * gains[element];
        }
        if let Some(n) = &noise {
            x += Complex64::new(n.sample(&mut rng), n.sample(&mut rng));
        }
        samples.push(x);
    }
    IqBuffer::new(samples, fs, first as f64 / fs)
}

fn whole_cycles(seconds: f64, fs: f64, per_rotation: u64, what: &str) -> Result<u64> {
    let n = whole_cycles_signed(seconds, fs, per_rotation, what)?;
    u64::try_from(n).map_err(|_| invalid(format!("{what} must be non-negative")))
}

fn whole_cycles_signed(seconds: f64, fs: f64, per_rotation: u64, what: &str) -> Result<i64> {
    let samples = seconds * fs;
    let rounded = samples.round();
    let rotations = rounded / per_rotation as f64;
    if (samples - rounded).abs() > 1e-6 * samples.abs().max(1.0)
        || rotations.fract() != 0.0
    {
        return Err(invalid(format!(
            "{what} {seconds} s is not a whole number of commutation cycles ({per_rotation} samples each)"
        )));
    }
    Ok(rounded as i64)
}
