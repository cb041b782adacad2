//! End-to-end driver: per-epoch capture synthesis, the bearing chain,
//! 1 Hz downsampling and the particle filter.

use std::collections::BTreeMap;

use crate::circular::{weighted_resultant, wrap_degrees};
use crate::dsp::{run_chain, ChainConfig};
use crate::error::{invalid, Result};
use crate::harness::metrics::{attach_truth, TraceRow};
use crate::harness::scenario::{poses_from_track, seconds_to_us, FilterConfig, Scenario, TrackPoint, EPOCH_S};
use crate::pf::ParticleSet;
use crate::sim::simulate_capture;
use crate::types::{ArrayGeometry, BearingMeasurement, IqBuffer, Vec2, WorldPose};

/// Array-frame bearing from the platform to the emitter.
pub fn true_bearing(platform: &WorldPose, emitter_position: Vec2) -> Result<f64> {
    let d = emitter_position - platform.position_m;
    if d.norm() == 0.0 {
        return Err(invalid("emitter coincides with the platform"));
    }
    Ok(wrap_degrees(d.bearing_deg() - platform.heading_deg()))
}

/// One confidence-weighted circular mean per non-empty epoch, stamped at
/// the epoch centre. Epochs whose confidences are all zero fall back to an
/// unweighted mean (and report zero confidence).
pub fn downsample_bearings(measurements: &[BearingMeasurement], epoch_s: f64) -> Result<Vec<BearingMeasurement>> {
    if !(epoch_s > 0.0) {
        return Err(invalid(format!("epoch must be positive, got {epoch_s}")));
    }
    if measurements.windows(2).any(|w| w[1].timestamp_us < w[0].timestamp_us) {
        return Err(invalid("measurements must be time-sorted"));
    }
    let mut epochs: BTreeMap<i64, Vec<&BearingMeasurement>> = BTreeMap::new();
    for m in measurements {
        let k = (m.timestamp_s() / epoch_s).floor() as i64;
        epochs.entry(k).or_default().push(m);
    }
    epochs
        .into_iter()
        .map(|(k, group)| {
            let weighted = weighted_resultant(group.iter().map(|m| (m.angle_deg(), m.confidence())));
            let (angle, _) = weighted
                .or_else(|| weighted_resultant(group.iter().map(|m| (m.angle_deg(), 1.0))))
                .unwrap_or((group[0].angle_deg(), 0.0));
            let confidence = group.iter().map(|m| m.confidence()).sum::<f64>() / group.len() as f64;
            let centre = (k as f64 + 0.5) * epoch_s;
            BearingMeasurement::new(angle, seconds_to_us(centre), confidence.clamp(0.0, 1.0))
        })
        .collect()
}

fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    // splitmix64 finaliser over (seed, epoch)
    let mut z = seed ^ (epoch as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The raw capture for epoch `k`: one epoch of IQ starting at `k` seconds,
/// with the emitter at its true array-frame bearing.
pub fn epoch_capture(scenario: &Scenario, k: usize) -> Result<IqBuffer> {
    let geometry = scenario.geometry()?;
    let pose = scenario
        .platform_poses()
        .get(k)
        .copied()
        .ok_or_else(|| invalid(format!("epoch {k} is past the end of the scenario")))?;
    capture_at(scenario, &geometry, &pose, k)
}

fn capture_at(scenario: &Scenario, geometry: &ArrayGeometry, pose: &WorldPose, k: usize) -> Result<IqBuffer> {
    let t = scenario.epoch_time(k);
    let mut emitter = scenario.emitter.clone();
    emitter.bearing_deg = true_bearing(pose, scenario.emitter_track.position_at(t))?;
    let mut channel = scenario.channel.clone();
    channel.rng_seed = epoch_seed(scenario.seed ^ scenario.channel.rng_seed, k);
    simulate_capture(&scenario.radio, geometry, &emitter, &channel, k as f64 * EPOCH_S, EPOCH_S)
}

/// Full-rate array-frame bearing log for the scenario (about 330 per
/// second with the default radio).
pub fn synthesize_bearings(scenario: &Scenario, chain: &ChainConfig) -> Result<Vec<BearingMeasurement>> {
    let geometry = scenario.geometry()?;
    let mut log = Vec::new();
    for (k, pose) in scenario.platform_poses().iter().enumerate() {
        let capture = capture_at(scenario, &geometry, pose, k)?;
        log.extend(run_chain(&capture, chain)?);
    }
    Ok(log)
}

/// Steps the filter once per track point. `bearings` are 1 Hz array-frame
/// measurements; they are matched to track points by timestamp and turned
/// into world bearings with the track heading. Track points without a
/// bearing, or whose bearing is below `min_confidence`, get a predict only.
/// Returns the world-frame estimate trace.
pub fn run_filter(
    bearings: &[BearingMeasurement],
    track: &[TrackPoint],
    config: &FilterConfig,
    seed: u64,
) -> Result<Vec<TraceRow>> {
    run_filter_with(bearings, track, config, seed, |_, _| Ok(()))
}

/// [`run_filter`] with a hook that sees the particle set after each step.
pub fn run_filter_with(
    bearings: &[BearingMeasurement],
    track: &[TrackPoint],
    config: &FilterConfig,
    seed: u64,
    mut on_step: impl FnMut(usize, &ParticleSet) -> Result<()>,
) -> Result<Vec<TraceRow>> {
    let poses = poses_from_track(track)?;
    let first = poses.first().ok_or_else(|| invalid("empty track"))?;
    let by_time: BTreeMap<i64, &BearingMeasurement> = bearings.iter().map(|b| (b.timestamp_us, b)).collect();
    if let Some(orphan) = bearings.iter().find(|b| !track.iter().any(|p| p.timestamp_us == b.timestamp_us)) {
        return Err(invalid(format!("bearing at {} us has no track point", orphan.timestamp_us)));
    }

    let mut set = ParticleSet::init_uniform(config.grid_half_extent_m, config.particle_count, seed)?;
    if config.relative_initial_velocity {
        set.offset_velocities(-first.velocity_mps);
    }
    let mut trace = Vec::with_capacity(track.len());
    for (step, (point, pose)) in track.iter().zip(&poses).enumerate() {
        if step > 0 {
            set.predict(pose, &config.motion)?;
        }
        if let Some(b) = by_time.get(&point.timestamp_us).filter(|b| b.confidence() >= config.min_confidence) {
            let world = BearingMeasurement::new(b.angle_deg() + pose.heading_deg(), b.timestamp_us, b.confidence())?;
            set.update(&world, &config.measurement)?;
            set.maybe_resample()?;
        }
        on_step(step, &set)?;
        let est = set.estimate().to_world(pose)?;
        trace.push(TraceRow {
            step,
            timestamp_us: point.timestamp_us,
            mean_m: est.mean_m,
            variance_m2: est.variance_m2,
            error_m: None,
        });
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// Full-rate array-frame bearings.
    pub bearing_log: Vec<BearingMeasurement>,
    /// 1 Hz array-frame bearings fed to the filter.
    pub downsampled: Vec<BearingMeasurement>,
    pub track: Vec<TrackPoint>,
    pub truth: Vec<(i64, Vec2)>,
    pub trace: Vec<TraceRow>,
    /// (x, y, total) error at the last step.
    pub final_errors: (f64, f64, f64),
}

pub fn filter_seed(scenario_seed: u64) -> u64 {
    epoch_seed(scenario_seed, usize::MAX)
}

/// Runs the filter half of a scenario on an existing bearing log.
pub fn run_with_bearings(scenario: &Scenario, bearing_log: Vec<BearingMeasurement>) -> Result<RunResult> {
    let downsampled = downsample_bearings(&bearing_log, EPOCH_S)?;
    let track = scenario.platform_track();
    let truth = scenario.emitter_truth();
    let mut trace = run_filter(&downsampled, &track, &scenario.filter, filter_seed(scenario.seed))?;
    attach_truth(&mut trace, &truth)?;
    let last = trace.last().and_then(|r| r.error_m).ok_or_else(|| invalid("empty trace"))?;
    Ok(RunResult {
        bearing_log,
        downsampled,
        track,
        truth,
        trace,
        final_errors: (last.x, last.y, last.norm()),
    })
}

pub fn run_scenario(scenario: &Scenario) -> Result<RunResult> {
    scenario.validate()?;
    let chain = ChainConfig::calibrated(scenario.radio.clone(), &scenario.geometry()?, scenario.tuning_offset_hz)?;
    let log = synthesize_bearings(scenario, &chain)?;
    run_with_bearings(scenario, log)
}
