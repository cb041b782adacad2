#![allow(dead_code)]

use std::f64::consts::TAU;

use pddf::pf::{MeasurementNoise, MotionNoise, ParticleSet};
use pddf::{BearingMeasurement, Vec2, WorldPose};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Static-target bearing-only problem seen from a sensor moving at constant
/// velocity from the origin.
pub struct OracleCase {
    pub target: Vec2,
    pub sensor_velocity: Vec2,
    pub bearings_deg: Vec<f64>,
    pub noise_std_deg: f64,
}

impl OracleCase {
    pub fn new(seed: u64, steps: usize) -> Self {
        let target = Vec2::new(40.0, 60.0);
        let sensor_velocity = Vec2::new(3.0, 0.0);
        let noise_std_deg = 3.0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, noise_std_deg).unwrap();
        let bearings_deg = (0..steps)
            .map(|k| {
                let d = target - sensor_velocity * k as f64;
                d.y.atan2(d.x).to_degrees() + n.sample(&mut rng)
            })
            .collect();
        Self { target, sensor_velocity, bearings_deg, noise_std_deg }
    }

    fn sensor(&self, k: usize) -> Vec2 {
        self.sensor_velocity * k as f64
    }

    /// Posterior mean over 1 m cells covering `[-half, half]^2` around the
    /// initial sensor position, uniform prior.
    pub fn grid_posterior_mean(&self, half: f64) -> Vec2 {
        let var = self.noise_std_deg * self.noise_std_deg;
        let cells = (2.0 * half) as usize;
        let mut log_post = vec![0.0f64; cells * cells];
        for (k, &z) in self.bearings_deg.iter().enumerate() {
            let s = self.sensor(k);
            for iy in 0..cells {
                for ix in 0..cells {
                    let x = -half + ix as f64 + 0.5 - s.x;
                    let y = -half + iy as f64 + 0.5 - s.y;
                    let mut r = y.atan2(x).to_degrees() - z;
                    r -= 360.0 * (r / 360.0).round();
                    log_post[iy * cells + ix] += -0.5 * (TAU * var).ln() - r * r / (2.0 * var);
                }
            }
        }
        let max = log_post.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
        for iy in 0..cells {
            for ix in 0..cells {
                let w = (log_post[iy * cells + ix] - max).exp();
                sx += w * (-half + ix as f64 + 0.5);
                sy += w * (-half + iy as f64 + 0.5);
                sw += w;
            }
        }
        Vec2::new(sx / sw, sy / sw)
    }

    /// Particle-filter posterior mean in the same world frame.
    pub fn particle_posterior_mean(&self, half: f64, count: usize, seed: u64) -> Vec2 {
        let motion = MotionNoise { position_noise_std_m: 0.0, velocity_noise_std_mps: 0.0, ..MotionNoise::default() };
        let measurement = MeasurementNoise {
            bearing_variance_deg2: self.noise_std_deg * self.noise_std_deg,
            confidence_scaling: false,
        };
        let mut set = ParticleSet::init_uniform(half, count, seed).unwrap();
        set.offset_velocities(-self.sensor_velocity);
        let pose = WorldPose::new(Vec2::ZERO, self.sensor_velocity, 0.0, Vec2::ZERO);
        for (k, &z) in self.bearings_deg.iter().enumerate() {
            if k > 0 {
                set.predict(&pose, &motion).unwrap();
            }
            set.update(&BearingMeasurement::certain(z, k as i64 * 1_000_000).unwrap(), &measurement).unwrap();
            set.maybe_resample().unwrap();
        }
        set.estimate().mean_m + self.sensor(self.bearings_deg.len() - 1)
    }
}
