//! Scenario files: human-editable TOML describing tracks, radio, channel and
//! filter settings for one simulated run.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pf::{MeasurementNoise, MotionNoise};
use crate::sim::{ChannelSpec, EmitterSpec};
use crate::types::{ArrayGeometry, RadioConfig, Vec2, WorldPose};
use crate::dsp::DEFAULT_TUNING_OFFSET_HZ;

/// Epoch length of the filter and GPS track, seconds.
pub const EPOCH_S: f64 = 1.0;

/// Platform trajectory generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TrackSpec {
    /// Constant velocity from `start`.
    Straight { start: Vec2, velocity: Vec2 },
    /// Constant-speed circle; `start_angle_deg` is the platform's polar
    /// angle about `center` at t = 0.
    Circle {
        center: Vec2,
        radius_m: f64,
        speed_mps: f64,
        #[serde(default)]
        start_angle_deg: f64,
        #[serde(default = "yes")]
        counter_clockwise: bool,
    },
    /// Piecewise-linear through `[t_s, x_m, y_m]` points.
    Waypoints { points: Vec<[f64; 3]> },
}

fn yes() -> bool {
    true
}

impl TrackSpec {
    pub fn position_at(&self, t: f64) -> Vec2 {
        match self {
            TrackSpec::Straight { start, velocity } => *start + *velocity * t,
            TrackSpec::Circle {
                center,
                radius_m,
                speed_mps,
                start_angle_deg,
                counter_clockwise,
            } => {
                let sweep = (speed_mps / radius_m * t).to_degrees();
                let angle = if *counter_clockwise { start_angle_deg + sweep } else { start_angle_deg - sweep };
                *center + Vec2::from_bearing(angle) * *radius_m
            }
            TrackSpec::Waypoints { points } => interpolate(points, t),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            TrackSpec::Circle { radius_m, .. } if !(*radius_m > 0.0) => {
                Err(invalid("circle radius must be positive"))
            }
            TrackSpec::Waypoints { points } => {
                if points.is_empty() {
                    return Err(invalid("waypoint track needs at least one point"));
                }
                if points.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                    return Err(invalid("waypoint timestamps must be strictly increasing"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn interpolate(points: &[[f64; 3]], t: f64) -> Vec2 {
    let first = points[0];
    let last = points[points.len() - 1];
    if t <= first[0] {
        return Vec2::new(first[1], first[2]);
    }
    if t >= last[0] {
        return Vec2::new(last[1], last[2]);
    }
    let i = points.partition_point(|p| p[0] <= t) - 1;
    let (a, b) = (points[i], points[i + 1]);
    let f = (t - a[0]) / (b[0] - a[0]);
    Vec2::new(a[1] + f * (b[1] - a[1]), a[2] + f * (b[2] - a[2]))
}

/// Emitter position over time (world frame).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterTrack {
    pub position: Vec2,
    #[serde(default)]
    pub velocity: Vec2,
}

impl EmitterTrack {
    pub fn position_at(&self, t: f64) -> Vec2 {
        self.position + self.velocity * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Motion and measurement noise as published.
    #[default]
    Default,
    /// Reduced motion noise and confidence-scaled bearing variance.
    Tuned,
}

impl std::str::FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Profile::Default),
            "tuned" => Ok(Profile::Tuned),
            other => Err(Error::Parse(format!("unknown profile {other:?}"))),
        }
    }
}

/// Particle-filter settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub particle_count: usize,
    pub grid_half_extent_m: f64,
    pub motion: MotionNoise,
    pub measurement: MeasurementNoise,
    /// Start particle velocities at minus the platform velocity, i.e. a
    /// stationary emitter in the sensor-centred frame.
    #[serde(default = "yes")]
    pub relative_initial_velocity: bool,
    /// Bearings whose confidence falls below this are not used for updates.
    #[serde(default)]
    pub min_confidence: f64,
}

impl FilterConfig {
    pub fn for_profile(profile: Profile, grid_half_extent_m: f64) -> Self {
        match profile {
            Profile::Default => Self {
                particle_count: 10_000,
                grid_half_extent_m,
                motion: MotionNoise::default(),
                measurement: MeasurementNoise::default(),
                relative_initial_velocity: true,
                min_confidence: 0.0,
            },
            Profile::Tuned => Self {
                particle_count: 10_000,
                grid_half_extent_m,
                motion: MotionNoise {
                    position_noise_std_m: 0.3,
                    velocity_noise_std_mps: 0.005,
                    ..MotionNoise::default()
                },
                measurement: MeasurementNoise {
                    bearing_variance_deg2: 100.0,
                    confidence_scaling: true,
                },
                relative_initial_velocity: true,
                min_confidence: 0.5,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub side_m: f64,
}

/// Everything needed for one end-to-end run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Whole seconds; one filter epoch per second.
    pub duration_s: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tuning")]
    pub tuning_offset_hz: f64,
    #[serde(default)]
    pub radio: RadioConfig,
    pub geometry: GeometrySpec,
    /// Template; `bearing_deg` is overwritten each epoch from the tracks.
    pub emitter: EmitterSpec,
    pub channel: ChannelSpec,
    pub platform: TrackSpec,
    pub emitter_track: EmitterTrack,
    pub filter: FilterConfig,
}

fn default_tuning() -> f64 {
    DEFAULT_TUNING_OFFSET_HZ
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s >= EPOCH_S) || self.duration_s.fract() != 0.0 {
            return Err(Error::Configuration(format!(
                "duration_s must be a whole number of seconds >= 1, got {}",
                self.duration_s
            )));
        }
        self.radio.validate()?;
        self.geometry()?;
        self.emitter.validate().map_err(config)?;
        self.channel.validate().map_err(config)?;
        self.platform.validate().map_err(config)?;
        self.filter.motion.validate().map_err(config)?;
        if !(0.0..=1.0).contains(&self.filter.min_confidence) {
            return Err(Error::Configuration("min_confidence must lie in [0, 1]".into()));
        }
        if self.filter.particle_count < 100 || !(self.filter.grid_half_extent_m > 0.0) {
            return Err(Error::Configuration("filter needs >= 100 particles and a positive grid".into()));
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<ArrayGeometry> {
        ArrayGeometry::square(self.geometry.side_m).map_err(config)
    }

    pub fn epochs(&self) -> usize {
        (self.duration_s / EPOCH_S) as usize
    }

    /// Centre of epoch `k`, where the track is sampled.
    pub fn epoch_time(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * EPOCH_S
    }

    /// GPS-style track at every epoch centre; heading follows the velocity
    /// (central differences, one-sided at the ends).
    pub fn platform_track(&self) -> Vec<TrackPoint> {
        let times: Vec<f64> = (0..self.epochs()).map(|k| self.epoch_time(k)).collect();
        let pos: Vec<Vec2> = times.iter().map(|&t| self.platform.position_at(t)).collect();
        let vel = differentiate(&pos, &times);
        times
            .iter()
            .zip(pos.iter().zip(&vel))
            .map(|(&t, (&p, &v))| TrackPoint {
                timestamp_us: seconds_to_us(t),
                position_m: p,
                heading_deg: if v.norm() > 0.0 { v.bearing_deg() } else { 0.0 },
            })
            .collect()
    }

    /// Platform poses at every epoch centre, as the filter sees them (see
    /// [`poses_from_track`]).
    pub fn platform_poses(&self) -> Vec<WorldPose> {
        poses_from_track(&self.platform_track()).expect("scenario track timestamps increase")
    }

    /// Emitter ground truth at every epoch centre.
    pub fn emitter_truth(&self) -> Vec<(i64, Vec2)> {
        (0..self.epochs())
            .map(|k| {
                let t = self.epoch_time(k);
                (seconds_to_us(t), self.emitter_track.position_at(t))
            })
            .collect()
    }

    /// Same scenario with the filter settings of `profile`, keeping the grid.
    pub fn with_profile(mut self, profile: Profile) -> Self {
        self.filter = FilterConfig::for_profile(profile, self.filter.grid_half_extent_m);
        self
    }

    /// Shipped straight-pass geometry: the cart walks 150 m north-east at
    /// 1 m/s and passes the emitter 100 m abeam 20 s in; the emitter is
    /// silent for the middle third. The start is chosen so the emitter lies
    /// inside a 200 m sensor-centred grid.
    pub fn straight_pass() -> Self {
        let duration = 150.0;
        Self {
            name: "straight-pass".into(),
            duration_s: duration,
            seed: 1,
            tuning_offset_hz: DEFAULT_TUNING_OFFSET_HZ,
            radio: RadioConfig::default(),
            geometry: GeometrySpec { side_m: 0.44 },
            emitter: EmitterSpec {
                bearing_deg: 0.0,
                frequency_offset_hz: DEFAULT_TUNING_OFFSET_HZ,
                amplitude: 1.0,
                phase_rad: 0.0,
                active_intervals: vec![(0.0, 50.0), (100.0, duration)],
            },
            channel: ChannelSpec {
                snr_db: 20.0,
                geometry_jitter_std_m: 0.005,
                rng_seed: 0,
                dc_offset: 0.1,
            },
            platform: TrackSpec::Straight {
                start: Vec2::new(68.0, -76.0),
                velocity: Vec2::new(0.6, 0.8),
            },
            emitter_track: EmitterTrack {
                position: Vec2::ZERO,
                velocity: Vec2::ZERO,
            },
            filter: FilterConfig::for_profile(Profile::Tuned, 1000.0),
        }
    }

    /// Shipped loop geometry: one full circle of radius 30 m around the
    /// emitter.
    pub fn loop_around() -> Self {
        let radius = 30.0;
        let speed = 2.0;
        let duration = (std::f64::consts::TAU * radius / speed).ceil();
        Self {
            name: "loop".into(),
            duration_s: duration,
            seed: 1,
            tuning_offset_hz: DEFAULT_TUNING_OFFSET_HZ,
            radio: RadioConfig::default(),
            geometry: GeometrySpec { side_m: 0.44 },
            emitter: EmitterSpec {
                bearing_deg: 0.0,
                frequency_offset_hz: DEFAULT_TUNING_OFFSET_HZ,
                amplitude: 1.0,
                phase_rad: 0.0,
                active_intervals: vec![(0.0, duration)],
            },
            channel: ChannelSpec {
                snr_db: 20.0,
                geometry_jitter_std_m: 0.005,
                rng_seed: 0,
                dc_offset: 0.1,
            },
            platform: TrackSpec::Circle {
                center: Vec2::new(0.0, 0.0),
                radius_m: radius,
                speed_mps: speed,
                start_angle_deg: -90.0,
                counter_clockwise: true,
            },
            emitter_track: EmitterTrack {
                position: Vec2::ZERO,
                velocity: Vec2::ZERO,
            },
            filter: FilterConfig::for_profile(Profile::Tuned, 100.0),
        }
    }
}

fn config(e: Error) -> Error {
    match e {
        Error::InvalidArgument(m) => Error::Configuration(m),
        other => other,
    }
}

pub(crate) fn seconds_to_us(t: f64) -> i64 {
    (t * 1e6).round() as i64
}

/// One GPS fix: time, world position and heading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub timestamp_us: i64,
    pub position_m: Vec2,
    pub heading_deg: f64,
}

/// Rebuilds full poses from a track, aligned with how the filter integrates
/// them. The velocity at fix `k` is the backward difference over the step
/// ending there (forward difference at the first fix), and the acceleration
/// is the change in that velocity, i.e. the central second difference of
/// the positions at fix `k - 1` (zero at the first step). Integrating the
/// acceleration into a velocity and the velocity into a position therefore
/// reproduces the track exactly.
pub fn poses_from_track(track: &[TrackPoint]) -> Result<Vec<WorldPose>> {
    if track.windows(2).any(|w| w[1].timestamp_us <= w[0].timestamp_us) {
        return Err(invalid("track timestamps must be strictly increasing"));
    }
    let t: Vec<f64> = track.iter().map(|p| p.timestamp_us as f64 * 1e-6).collect();
    let p: Vec<Vec2> = track.iter().map(|p| p.position_m).collect();
    let n = track.len();
    let backward = |k: usize| (p[k] - p[k - 1]) * (1.0 / (t[k] - t[k - 1]));
    let vel: Vec<Vec2> = (0..n)
        .map(|k| match k {
            _ if n < 2 => Vec2::ZERO,
            0 => backward(1),
            _ => backward(k),
        })
        .collect();
    Ok((0..n)
        .map(|k| {
            let acc = if k == 0 { Vec2::ZERO } else { (vel[k] - vel[k - 1]) * (1.0 / (t[k] - t[k - 1])) };
            WorldPose::new(track[k].position_m, vel[k], track[k].heading_deg, acc)
        })
        .collect())
}

/// Central differences, one-sided at the ends.
fn differentiate(v: &[Vec2], t: &[f64]) -> Vec<Vec2> {
    let n = v.len();
    if n < 2 {
        return vec![Vec2::ZERO; n];
    }
    (0..n)
        .map(|k| {
            let (a, b) = if k == 0 {
                (0, 1)
            } else if k == n - 1 {
                (n - 2, n - 1)
            } else {
                (k - 1, k + 1)
            };
            (v[b] - v[a]) * (1.0 / (t[b] - t[a]))
        })
        .collect()
}
