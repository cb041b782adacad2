//! Shared domain types and unit conventions.
//!
//! Angles cross API boundaries in degrees wrapped to `[0, 360)`, measured
//! counter-clockwise from `+x` (east). Times are seconds on the simulation
//! clock unless a field says otherwise.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::circular::wrap_degrees;
use crate::error::{invalid, Error, Result};

/// Speed of light in vacuum, m/s (exact SI value).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Number of array elements. Only four-element square arrays are supported.
pub const NUM_ANTENNAS: usize = 4;

/// Hard spatial-Nyquist bound on element spacing, in wavelengths.
pub const MAX_SPACING_WAVELENGTHS: f64 = 0.5;

/// Spacing above which bearing quality is known to degrade, in wavelengths.
pub const RECOMMENDED_SPACING_WAVELENGTHS: f64 = 0.22;

/// The 0.22 figure is quoted to two digits; the 0.44 m / 150 MHz reference
/// design sits at 0.2201 lambda and must pass.
const RECOMMENDED_SPACING_ROUNDING: f64 = 0.005;

/// Wavelength in meters for a carrier frequency in hertz.
pub fn wavelength(carrier_frequency_hz: f64) -> Result<f64> {
    if !(carrier_frequency_hz > 0.0) || !carrier_frequency_hz.is_finite() {
        return Err(invalid(format!(
            "carrier frequency must be positive, got {carrier_frequency_hz}"
        )));
    }
    Ok(SPEED_OF_LIGHT / carrier_frequency_hz)
}

/// Planar vector in meters (or m/s, m/s^2 depending on context).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector pointing at `angle_deg` (counter-clockwise from `+x`).
    pub fn from_bearing(angle_deg: f64) -> Self {
        let (s, c) = angle_deg.to_radians().sin_cos();
        Self { x: c, y: s }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Bearing of this vector in degrees, `[0, 360)`.
    pub fn bearing_deg(self) -> f64 {
        wrap_degrees(self.y.atan2(self.x).to_degrees())
    }

    /// Rotates by `angle_deg` counter-clockwise.
    pub fn rotated(self, angle_deg: f64) -> Self {
        let (s, c) = angle_deg.to_radians().sin_cos();
        Self {
            x: c * self.x - s * self.y,
            y: s * self.x + c * self.y,
        }
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl fmt::Display for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.3}, {:.3})", self.x, self.y)
    }
}

/// SDR and flowgraph parameters.
///
/// `sample_rate_hz` is the raw SDR rate; the DSP chain runs at
/// `sample_rate_hz / decimation` after the frequency-translating FIR.
/// `samples_per_antenna` counts interleaved I/Q values, so each element
/// dwells for `samples_per_antenna / 2` complex samples and one full
/// rotation of the virtual antenna takes `2 * samples_per_antenna` samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioConfig {
    pub carrier_frequency_hz: f64,
    pub sample_rate_hz: u64,
    pub samples_per_antenna: u32,
    pub fft_length: usize,
    pub decimation: u32,
}

impl Default for RadioConfig {
    /// 150 MHz carrier; rotation at 105.6 kHz lands on FFT bin 320 and the
    /// chain emits 330 bearings per second.
    fn default() -> Self {
        Self {
            carrier_frequency_hz: 150e6,
            sample_rate_hz: 3_379_200,
            samples_per_antenna: 16,
            fft_length: 2048,
            decimation: 5,
        }
    }
}

impl RadioConfig {
    /// Checks every construction invariant, including that the rotation
    /// tone falls exactly on an FFT bin below Nyquist.
    pub fn validate(&self) -> Result<()> {
        if self.sample_rate_hz == 0 {
            return Err(Error::Configuration("sample_rate_hz must be positive".into()));
        }
        if !(self.carrier_frequency_hz > 0.0) {
            return Err(Error::Configuration("carrier_frequency_hz must be positive".into()));
        }
        if self.samples_per_antenna == 0 {
            return Err(Error::Configuration("samples_per_antenna must be >= 1".into()));
        }
        if self.decimation == 0 {
            return Err(Error::Configuration("decimation must be >= 1".into()));
        }
        if self.fft_length < 64 || !self.fft_length.is_power_of_two() {
            return Err(Error::Configuration(format!(
                "fft_length must be a power of two >= 64, got {}",
                self.fft_length
            )));
        }
        if self.sample_rate_hz % self.decimation as u64 != 0 {
            return Err(Error::Configuration(format!(
                "decimation {} does not divide sample rate {}",
                self.decimation, self.sample_rate_hz
            )));
        }
        let bin = self.rotation_bin_exact();
        if !bin.is_integer() {
            return Err(Error::Configuration(format!(
                "rotation tone is not on a bin centre: switching {} Hz * fft_length {} / effective rate {} Hz = {}",
                self.switching_frequency_hz(),
                self.fft_length,
                self.effective_sample_rate_hz(),
                bin
            )));
        }
        if bin.to_integer() as usize >= self.fft_length / 2 {
            return Err(Error::Configuration(format!(
                "rotation bin {} is not below Nyquist for fft_length {}",
                bin, self.fft_length
            )));
        }
        Ok(())
    }

    /// Full-rotation switching frequency `2 S / (4 Samples_antenna)` as an
    /// exact rational.
    pub fn switching_frequency_exact(&self) -> Ratio<u64> {
        Ratio::new(2 * self.sample_rate_hz, 4 * self.samples_per_antenna as u64)
    }

    pub fn switching_frequency_hz(&self) -> f64 {
        let r = self.switching_frequency_exact();
        *r.numer() as f64 / *r.denom() as f64
    }

    pub fn effective_sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz as f64 / self.decimation as f64
    }

    /// `switching * fft_length / effective_rate`, exact.
    pub(crate) fn rotation_bin_exact(&self) -> Ratio<u64> {
        // f_sw * N * D / S
        self.switching_frequency_exact() * Ratio::from_integer(self.fft_length as u64)
            * Ratio::new(self.decimation as u64, self.sample_rate_hz)
    }

    /// Complex samples per full rotation at the raw rate.
    pub fn samples_per_rotation(&self) -> u64 {
        2 * self.samples_per_antenna as u64
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency_hz
    }

    /// Bearing measurements per second of capture.
    pub fn measurement_rate_hz(&self) -> f64 {
        self.effective_sample_rate_hz() / self.fft_length as f64
    }
}

/// Four-element square array, elements indexed counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    element_positions: [Vec2; NUM_ANTENNAS],
    radius_m: f64,
    side_m: f64,
}

const GEOMETRY_TOL_M: f64 = 1e-9;

impl ArrayGeometry {
    /// Square of the given side with element 0 on the `+x` axis.
    pub fn square(side_m: f64) -> Result<Self> {
        if !(side_m > 0.0) || !side_m.is_finite() {
            return Err(invalid(format!("side must be positive, got {side_m}")));
        }
        let radius = side_m / std::f64::consts::SQRT_2;
        let positions = std::array::from_fn(|k| Vec2::from_bearing(90.0 * k as f64) * radius);
        Self::from_positions(positions)
    }

    /// Builds from explicit offsets. They must form a square centred on the
    /// origin, ordered counter-clockwise, within 1e-9 m.
    pub fn from_positions(element_positions: [Vec2; NUM_ANTENNAS]) -> Result<Self> {
        let radius = element_positions[0].norm();
        if !(radius > 0.0) {
            return Err(invalid("array elements must not sit at the centre"));
        }
        for k in 0..NUM_ANTENNAS {
            let here = element_positions[k];
            let next = element_positions[(k + 1) % NUM_ANTENNAS];
            if (here.norm() - radius).abs() > GEOMETRY_TOL_M {
                return Err(invalid(format!("element {k} is not at radius {radius}")));
            }
            if (next - here.rotated(90.0)).norm() > GEOMETRY_TOL_M {
                return Err(invalid(format!(
                    "elements {k} and {} do not form a counter-clockwise square",
                    (k + 1) % NUM_ANTENNAS
                )));
            }
        }
        Ok(Self {
            element_positions,
            radius_m: radius,
            side_m: radius * std::f64::consts::SQRT_2,
        })
    }

    pub fn element_positions(&self) -> &[Vec2; NUM_ANTENNAS] {
        &self.element_positions
    }

    pub fn radius_m(&self) -> f64 {
        self.radius_m
    }

    pub fn side_m(&self) -> f64 {
        self.side_m
    }

    /// The same physical array with labels advanced by `shift`: new element
    /// `k` is old element `k + shift`.
    pub fn relabeled(&self, shift: usize) -> Self {
        let positions =
            std::array::from_fn(|k| self.element_positions[(k + shift) % NUM_ANTENNAS]);
        Self {
            element_positions: positions,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryOutcome {
    Ok,
    Warn,
    Reject,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryReport {
    pub outcome: GeometryOutcome,
    pub messages: Vec<String>,
}

/// Checks element spacing against the carrier wavelength.
pub fn validate_geometry(geometry: &ArrayGeometry, radio: &RadioConfig) -> GeometryReport {
    let lambda = radio.wavelength_m();
    let ratio = geometry.side_m() / lambda;
    let (outcome, message) = if ratio > MAX_SPACING_WAVELENGTHS {
        (
            GeometryOutcome::Reject,
            format!("side {:.4} m is {ratio:.4} lambda, above the lambda/2 limit", geometry.side_m()),
        )
    } else if ratio > RECOMMENDED_SPACING_WAVELENGTHS * (1.0 + RECOMMENDED_SPACING_ROUNDING) {
        (
            GeometryOutcome::Warn,
            format!("side {:.4} m is {ratio:.4} lambda, above 0.22 lambda", geometry.side_m()),
        )
    } else {
        (GeometryOutcome::Ok, format!("side {:.4} m is {ratio:.4} lambda", geometry.side_m()))
    };
    GeometryReport {
        outcome,
        messages: vec![message],
    }
}

/// Contiguous complex baseband samples.
#[derive(Debug, Clone, PartialEq)]
pub struct IqBuffer {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
    start_time_s: f64,
}

impl IqBuffer {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64, start_time_s: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("IQ buffer must not be empty"));
        }
        if !(sample_rate_hz > 0.0) {
            return Err(invalid(format!("sample rate must be positive, got {sample_rate_hz}")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            start_time_s,
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn start_time_s(&self) -> f64 {
        self.start_time_s
    }

    pub fn time_of(&self, index: usize) -> f64 {
        self.start_time_s + index as f64 / self.sample_rate_hz
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    /// Copy of samples `[start, start + len)` as a new buffer.
    pub fn segment(&self, start: usize, len: usize) -> Result<Self> {
        if len == 0 || start + len > self.samples.len() {
            return Err(invalid(format!(
                "segment [{start}, {}) outside buffer of length {}",
                start + len,
                self.samples.len()
            )));
        }
        Self::new(
            self.samples[start..start + len].to_vec(),
            self.sample_rate_hz,
            self.time_of(start),
        )
    }
}

/// One angle-of-incidence estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BearingMeasurement {
    angle_deg: f64,
    pub timestamp_us: i64,
    confidence: f64,
}

impl BearingMeasurement {
    pub fn new(angle_deg: f64, timestamp_us: i64, confidence: f64) -> Result<Self> {
        if !angle_deg.is_finite() {
            return Err(invalid(format!("bearing must be finite, got {angle_deg}")));
        }
        if !(0.0..=1.0).contains(&confidence) {
            return Err(invalid(format!("confidence must be in [0, 1], got {confidence}")));
        }
        Ok(Self {
            angle_deg: wrap_degrees(angle_deg),
            timestamp_us,
            confidence,
        })
    }

    /// Measurement with full confidence.
    pub fn certain(angle_deg: f64, timestamp_us: i64) -> Result<Self> {
        Self::new(angle_deg, timestamp_us, 1.0)
    }

    pub fn angle_deg(&self) -> f64 {
        self.angle_deg
    }

    pub fn confidence(&self) -> f64 {
        self.confidence
    }

    pub fn timestamp_s(&self) -> f64 {
        self.timestamp_us as f64 * 1e-6
    }
}

/// Platform state in the world frame. Acceleration is expressed on world
/// axes so it can be applied directly in the sensor-centred filter frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldPose {
    pub position_m: Vec2,
    pub velocity_mps: Vec2,
    heading_deg: f64,
    pub acceleration_mps2: Vec2,
}

impl WorldPose {
    pub fn new(position_m: Vec2, velocity_mps: Vec2, heading_deg: f64, acceleration_mps2: Vec2) -> Self {
        Self {
            position_m,
            velocity_mps,
            heading_deg: wrap_degrees(heading_deg),
            acceleration_mps2,
        }
    }

    /// Stationary pose at `position_m` facing `heading_deg`.
    pub fn at(position_m: Vec2, heading_deg: f64) -> Self {
        Self::new(position_m, Vec2::ZERO, heading_deg, Vec2::ZERO)
    }

    pub fn heading_deg(&self) -> f64 {
        self.heading_deg
    }
}
