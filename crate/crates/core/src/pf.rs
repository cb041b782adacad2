//! Bearing-only particle filter in a sensor-centred frame.
//!
//! The origin follows the array. Particle velocities are relative to the
//! platform, so each step subtracts the platform's acceleration. Weights live
//! in the log domain and are renormalised after every update.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::circular::{wrap_degrees, wrap_signed_degrees};
use crate::error::{invalid, Error, Result};
use crate::types::{BearingMeasurement, Vec2, WorldPose};

/// Particles closer than this to the sensor have no defined bearing.
const ORIGIN_EPSILON_M: f64 = 1e-6;

/// Fraction of eliminated particles that triggers resampling.
pub const RESAMPLE_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub position_m: Vec2,
    pub velocity_mps: Vec2,
    pub orientation_deg: f64,
    pub log_weight: f64,
}

impl Particle {
    pub fn at(position_m: Vec2) -> Self {
        Self {
            position_m,
            velocity_mps: Vec2::ZERO,
            orientation_deg: 0.0,
            log_weight: 0.0,
        }
    }

    /// Bearing from the sensor (origin) to this particle, `None` at the origin.
    pub fn bearing_deg(&self) -> Option<f64> {
        (self.position_m.norm() > ORIGIN_EPSILON_M).then(|| self.position_m.bearing_deg())
    }
}

/// Sign applied to the platform acceleration in the velocity update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccelerationCoupling {
    /// `U += -A dt`: keeps the cloud in the sensor-centred frame.
    #[default]
    Subtract,
    Add,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionNoise {
    pub position_noise_std_m: f64,
    pub velocity_noise_std_mps: f64,
    pub dt_s: f64,
    #[serde(default)]
    pub coupling: AccelerationCoupling,
}

impl Default for MotionNoise {
    /// Position variance 0.5 m^2, velocity variance 25 (m/s)^2, 1 s steps.
    fn default() -> Self {
        Self {
            position_noise_std_m: 0.5f64.sqrt(),
            velocity_noise_std_mps: 5.0,
            dt_s: 1.0,
            coupling: AccelerationCoupling::Subtract,
        }
    }
}

impl MotionNoise {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_s > 0.0) {
            return Err(invalid(format!("dt must be positive, got {}", self.dt_s)));
        }
        if !(self.position_noise_std_m >= 0.0) || !(self.velocity_noise_std_mps >= 0.0) {
            return Err(invalid("motion noise standard deviations must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementNoise {
    pub bearing_variance_deg2: f64,
    /// Divide the variance by the measurement's confidence.
    #[serde(default)]
    pub confidence_scaling: bool,
}

impl Default for MeasurementNoise {
    fn default() -> Self {
        Self {
            bearing_variance_deg2: 100.0,
            confidence_scaling: false,
        }
    }
}

/// Gaussian log-likelihood of a bearing residual `theta` (degrees):
/// `-0.5 ln(2 pi sigma^2) - theta^2 / (2 sigma^2)`.
pub fn gaussian_log_likelihood(residual_deg: f64, variance_deg2: f64) -> f64 {
    -0.5 * (TAU * variance_deg2).ln() - residual_deg * residual_deg / (2.0 * variance_deg2)
}

/// Log-likelihood of `measured_bearing_deg` given a particle. A particle at
/// the sensor gets the worst case, a 180 degree residual.
pub fn log_likelihood(particle: &Particle, measured_bearing_deg: f64, variance_deg2: f64) -> f64 {
    let residual = match particle.bearing_deg() {
        Some(b) => wrap_signed_degrees(b - measured_bearing_deg),
        None => 180.0,
    };
    gaussian_log_likelihood(residual, variance_deg2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateFrame {
    Sensor,
    World,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionEstimate {
    pub mean_m: Vec2,
    pub variance_m2: Vec2,
    pub frame: EstimateFrame,
}

impl PositionEstimate {
    /// Translates a sensor-frame estimate into the world frame.
    pub fn to_world(&self, platform: &WorldPose) -> Result<PositionEstimate> {
        if self.frame != EstimateFrame::Sensor {
            return Err(invalid("estimate is already in the world frame"));
        }
        Ok(PositionEstimate {
            mean_m: self.mean_m + platform.position_m,
            variance_m2: self.variance_m2,
            frame: EstimateFrame::World,
        })
    }
}

/// Weighted particle ensemble with its own random stream.
#[derive(Debug, Clone)]
pub struct ParticleSet {
    particles: Vec<Particle>,
    rng: ChaCha8Rng,
    seed: u64,
    step_index: usize,
    elimination_threshold: f64,
}

impl ParticleSet {
    /// Positions uniform over `[-extent, extent]^2`, zero velocity, uniform
    /// orientation, equal weights.
    pub fn init_uniform(grid_half_extent_m: f64, count: usize, seed: u64) -> Result<Self> {
        if !(grid_half_extent_m > 0.0) {
            return Err(invalid("grid extent must be positive"));
        }
        if count < 100 {
            return Err(invalid(format!("need at least 100 particles, got {count}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let log_w = -(count as f64).ln();
        let particles = (0..count)
            .map(|_| Particle {
                position_m: Vec2::new(
                    rng.random_range(-grid_half_extent_m..=grid_half_extent_m),
                    rng.random_range(-grid_half_extent_m..=grid_half_extent_m),
                ),
                velocity_mps: Vec2::ZERO,
                orientation_deg: rng.random_range(0.0..360.0),
                log_weight: log_w,
            })
            .collect();
        Ok(Self::with_rng(particles, rng, seed))
    }

    /// Wraps explicit particles; their log-weights are normalised.
    pub fn from_particles(particles: Vec<Particle>, seed: u64) -> Result<Self> {
        if particles.is_empty() {
            return Err(invalid("particle set must not be empty"));
        }
        let mut set = Self::with_rng(particles, ChaCha8Rng::seed_from_u64(seed), seed);
        set.normalize()?;
        Ok(set)
    }

    fn with_rng(particles: Vec<Particle>, rng: ChaCha8Rng, seed: u64) -> Self {
        let n = particles.len();
        Self {
            particles,
            rng,
            seed,
            step_index: 0,
            elimination_threshold: 1.0 / (10.0 * n as f64),
        }
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn elimination_threshold(&self) -> f64 {
        self.elimination_threshold
    }

    pub fn set_elimination_threshold(&mut self, threshold: f64) {
        self.elimination_threshold = threshold;
    }

    /// Shifts every particle's velocity, e.g. to start relative to a moving
    /// platform.
    pub fn offset_velocities(&mut self, delta: Vec2) {
        for p in &mut self.particles {
            p.velocity_mps += delta;
        }
    }

    /// Normalised linear weights.
    pub fn weights(&self) -> Vec<f64> {
        self.particles.iter().map(|p| p.log_weight.exp()).collect()
    }

    /// Motion step: `U += -A dt + Q`, `S += U dt + Z`, orientation unchanged.
    pub fn predict(&mut self, platform: &WorldPose, noise: &MotionNoise) -> Result<()> {
        noise.validate()?;
        let dt = noise.dt_s;
        let sign = match noise.coupling {
            AccelerationCoupling::Subtract => -1.0,
            AccelerationCoupling::Add => 1.0,
        };
        let dv = platform.acceleration_mps2 * (sign * dt);
        let q = Normal::new(0.0, noise.velocity_noise_std_mps).expect("finite std");
        let z = Normal::new(0.0, noise.position_noise_std_m).expect("finite std");
        for p in &mut self.particles {
            let qv = Vec2::new(q.sample(&mut self.rng), q.sample(&mut self.rng));
            p.velocity_mps += dv + qv;
            let zp = Vec2::new(z.sample(&mut self.rng), z.sample(&mut self.rng));
            p.position_m += p.velocity_mps * dt + zp;
        }
        self.step_index += 1;
        Ok(())
    }

    /// Adds each particle's bearing log-likelihood to its log-weight and
    /// renormalises. With confidence scaling, a zero-confidence measurement
    /// leaves the set untouched.
    pub fn update(&mut self, measurement: &BearingMeasurement, noise: &MeasurementNoise) -> Result<()> {
        if !(noise.bearing_variance_deg2 > 0.0) {
            return Err(invalid("bearing variance must be positive"));
        }
        let mut variance = noise.bearing_variance_deg2;
        if noise.confidence_scaling {
            let c = measurement.confidence();
            if c <= 0.0 {
                return Ok(());
            }
            variance /= c;
        }
        let measured = wrap_degrees(measurement.angle_deg());
        for p in &mut self.particles {
            p.log_weight += log_likelihood(p, measured, variance);
        }
        self.normalize()
    }

    fn normalize(&mut self) -> Result<()> {
        let max = self
            .particles
            .iter()
            .map(|p| p.log_weight)
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(self.divergence(format!("no particle has a finite weight (max log-weight {max})")));
        }
        let sum: f64 = self.particles.iter().map(|p| (p.log_weight - max).exp()).sum();
        let lse = max + sum.ln();
        for p in &mut self.particles {
            p.log_weight -= lse;
        }
        Ok(())
    }

    fn divergence(&self, reason: String) -> Error {
        Error::FilterDivergence {
            step: self.step_index,
            reason: format!("{reason}; {} particles", self.particles.len()),
        }
    }

    /// Share of particles whose normalised weight is below the elimination
    /// threshold.
    pub fn eliminated_fraction(&self) -> f64 {
        let t = self.elimination_threshold;
        let eliminated = self.particles.iter().filter(|p| p.log_weight.exp() < t).count();
        eliminated as f64 / self.particles.len() as f64
    }

    /// Systematic resampling once at least half the particles are
    /// eliminated. Returns whether resampling happened.
    pub fn maybe_resample(&mut self) -> Result<bool> {
        let weights = self.weights();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(self.divergence(format!("degenerate weights (sum {total})")));
        }
        if self.eliminated_fraction() < RESAMPLE_FRACTION {
            return Ok(false);
        }
        let n = self.particles.len();
        let step = total / n as f64;
        let mut u = self.rng.random_range(0.0..step);
        let mut cumulative = weights[0];
        let mut i = 0;
        let log_w = -(n as f64).ln();
        let mut next = Vec::with_capacity(n);
        for _ in 0..n {
            while u > cumulative && i + 1 < n {
                i += 1;
                cumulative += weights[i];
            }
            let mut p = self.particles[i];
            p.log_weight = log_w;
            next.push(p);
            u += step;
        }
        self.particles = next;
        Ok(true)
    }

    /// Weighted mean and per-axis variance of particle positions.
    pub fn estimate(&self) -> PositionEstimate {
        let weights = self.weights();
        let total: f64 = weights.iter().sum();
        let mut mean = Vec2::ZERO;
        for (p, w) in self.particles.iter().zip(&weights) {
            mean += p.position_m * (w / total);
        }
        let mut var = Vec2::ZERO;
        for (p, w) in self.particles.iter().zip(&weights) {
            let d = p.position_m - mean;
            var += Vec2::new(d.x * d.x, d.y * d.y) * (w / total);
        }
        PositionEstimate {
            mean_m: mean,
            variance_m2: var,
            frame: EstimateFrame::Sensor,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meas(angle: f64, confidence: f64) -> BearingMeasurement {
        BearingMeasurement::new(angle, 0, confidence).unwrap()
    }

    fn set_with_weights(weights: &[f64]) -> ParticleSet {
        let particles = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| Particle {
                log_weight: w.ln(),
                ..Particle::at(Vec2::new(i as f64 + 1.0, 0.0))
            })
            .collect();
        ParticleSet::from_particles(particles, 1).unwrap()
    }

    #[test]
    fn likelihood_closed_forms() {
        let zero = gaussian_log_likelihood(0.0, 100.0);
        assert!((zero - (-3.2215)).abs() < 1e-4, "{zero}");
        let opposite = gaussian_log_likelihood(180.0, 100.0);
        assert!((opposite - (-165.2215)).abs() < 1e-4);
        let east = Particle::at(Vec2::new(100.0, 0.0));
        assert!((log_likelihood(&east, 0.0, 100.0) - zero).abs() < 1e-12);
        let origin = Particle::at(Vec2::ZERO);
        assert_eq!(log_likelihood(&origin, 0.0, 100.0), opposite);
    }

    #[test]
    fn predict_deterministic_kinematics() {
        let noise = MotionNoise {
            position_noise_std_m: 0.0,
            velocity_noise_std_mps: 0.0,
            dt_s: 1.0,
            coupling: AccelerationCoupling::Subtract,
        };
        let mut p = Particle::at(Vec2::new(3.0, 4.0));
        p.velocity_mps = Vec2::new(1.0, 0.0);
        let mut set = ParticleSet::from_particles(vec![p], 0).unwrap();
        set.predict(&WorldPose::at(Vec2::ZERO, 0.0), &noise).unwrap();
        assert_eq!(set.particles()[0].position_m, Vec2::new(4.0, 4.0));

        let mut set = ParticleSet::from_particles(vec![Particle::at(Vec2::new(1.0, 1.0))], 0).unwrap();
        let pose = WorldPose::new(Vec2::ZERO, Vec2::ZERO, 0.0, Vec2::new(0.5, 0.0));
        set.predict(&pose, &noise).unwrap();
        assert_eq!(set.particles()[0].velocity_mps, Vec2::new(-0.5, 0.0));

        let flipped = MotionNoise { coupling: AccelerationCoupling::Add, ..noise };
        set.predict(&pose, &flipped).unwrap();
        assert_eq!(set.particles()[0].velocity_mps, Vec2::ZERO);

        let bad = MotionNoise { dt_s: 0.0, ..noise };
        assert!(set.predict(&pose, &bad).is_err());
    }

    #[test]
    fn aligned_particles_keep_equal_weights() {
        let particles = (1..=5).map(|r| Particle::at(Vec2::from_bearing(30.0) * (r as f64 * 10.0))).collect();
        let mut set = ParticleSet::from_particles(particles, 0).unwrap();
        set.update(&meas(30.0, 1.0), &MeasurementNoise::default()).unwrap();
        for w in set.weights() {
            assert!((w - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn opposite_particle_ratio() {
        let particles = vec![Particle::at(Vec2::new(10.0, 0.0)), Particle::at(Vec2::new(-10.0, 0.0))];
        let mut set = ParticleSet::from_particles(particles, 0).unwrap();
        set.update(&meas(0.0, 1.0), &MeasurementNoise::default()).unwrap();
        let p = set.particles();
        assert!((p[0].log_weight - p[1].log_weight - 162.0).abs() < 1e-9);
    }

    #[test]
    fn vanishing_confidence_is_a_no_op() {
        let mut set = ParticleSet::init_uniform(100.0, 500, 3).unwrap();
        let before = set.weights();
        let noise = MeasurementNoise {
            confidence_scaling: true,
            ..MeasurementNoise::default()
        };
        set.update(&meas(45.0, 1e-9), &noise).unwrap();
        for (a, b) in before.iter().zip(set.weights()) {
            assert!((a - b).abs() <= 1e-6 * a, "{a} vs {b}");
        }
        set.update(&meas(45.0, 0.0), &noise).unwrap();
    }

    #[test]
    fn resampling_thresholds() {
        let mut equal = set_with_weights(&[0.2; 5]);
        assert!(!equal.maybe_resample().unwrap());

        let mut half = set_with_weights(&[0.25, 0.25, 0.25, 0.25, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(half.eliminated_fraction(), 0.5);
        assert!(half.maybe_resample().unwrap());
        let w = half.weights();
        assert!(w.iter().all(|&x| (x - 0.125).abs() < 1e-12));
        assert!(half.particles().iter().all(|p| p.position_m.x <= 4.0));

        let mut mild = set_with_weights(&[0.7, 0.1, 0.1, 0.05, 0.05]);
        mild.set_elimination_threshold(1.0 / 50.0);
        assert_eq!(mild.eliminated_fraction(), 0.0);
        assert!(!mild.maybe_resample().unwrap());

        let mut peaked = set_with_weights(&[0.97, 0.01, 0.01, 0.005, 0.005]);
        peaked.set_elimination_threshold(0.02);
        // hand count: 0.01, 0.01, 0.005, 0.005 are all below 0.02
        assert_eq!(peaked.eliminated_fraction(), 0.8);
        assert!(peaked.maybe_resample().unwrap());
    }

    #[test]
    fn estimate_two_point_and_degenerate() {
        let same = vec![Particle::at(Vec2::new(10.0, -5.0)); 4];
        let e = ParticleSet::from_particles(same, 0).unwrap().estimate();
        assert_eq!(e.mean_m, Vec2::new(10.0, -5.0));
        assert_eq!(e.variance_m2, Vec2::ZERO);

        let two = vec![Particle::at(Vec2::ZERO), Particle::at(Vec2::new(2.0, 0.0))];
        let e = ParticleSet::from_particles(two, 0).unwrap().estimate();
        assert!((e.mean_m.x - 1.0).abs() < 1e-12 && e.mean_m.y == 0.0);
        assert!((e.variance_m2.x - 1.0).abs() < 1e-12 && e.variance_m2.y == 0.0);
    }

    #[test]
    fn world_translation() {
        let e = PositionEstimate {
            mean_m: Vec2::ZERO,
            variance_m2: Vec2::new(2.0, 3.0),
            frame: EstimateFrame::Sensor,
        };
        let pose = WorldPose::at(Vec2::new(37.0, -41.0), 0.0);
        let w = e.to_world(&pose).unwrap();
        assert_eq!(w.mean_m, Vec2::new(37.0, -41.0));
        assert_eq!(w.variance_m2, e.variance_m2);
        assert_eq!((w.mean_m - pose.position_m), e.mean_m);
        assert!(w.to_world(&pose).is_err());
        let identity = e.to_world(&WorldPose::at(Vec2::ZERO, 0.0)).unwrap();
        assert_eq!(identity.mean_m, e.mean_m);
    }

    #[test]
    fn init_rejects_bad_arguments() {
        assert!(ParticleSet::init_uniform(0.0, 1000, 0).is_err());
        assert!(ParticleSet::init_uniform(10.0, 99, 0).is_err());
    }

    #[test]
    fn divergence_when_no_weight_survives() {
        let particles = vec![Particle { log_weight: f64::NEG_INFINITY, ..Particle::at(Vec2::new(1.0, 0.0)) }; 3];
        assert!(matches!(
            ParticleSet::from_particles(particles, 0),
            Err(Error::FilterDivergence { .. })
        ));
    }
}
