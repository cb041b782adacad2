//! Anechoic-chamber analogue: two static captures 180° apart, pooled into a
//! 1° bearing histogram.

use crate::circular::{angular_distance, circular_mean, circular_std, wrap_degrees};
use crate::dsp::{run_chain, ChainConfig, DEFAULT_TUNING_OFFSET_HZ};
use crate::error::Result;
use crate::sim::{simulate_capture, ChannelSpec, EmitterSpec};
use crate::types::{ArrayGeometry, RadioConfig};

pub const HISTOGRAM_BINS: usize = 360;
/// Frames dropped at the start of each capture while the notch settles.
const SETTLE_FRAMES: usize = 4;
/// Peaks below this share of the tallest smoothed bin are ignored.
const PEAK_FLOOR: f64 = 0.1;
const SMOOTH_HALF_WIDTH: usize = 2;
/// Estimates within this arc of a peak count towards its mode.
const MODE_ARC_DEG: f64 = 45.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ChamberConfig {
    pub radio: RadioConfig,
    pub side_m: f64,
    pub bearings_deg: [f64; 2],
    pub snr_db: f64,
    pub capture_s: f64,
    pub seed: u64,
}

impl Default for ChamberConfig {
    fn default() -> Self {
        Self {
            radio: RadioConfig::default(),
            side_m: 0.44,
            bearings_deg: [50.0, 230.0],
            snr_db: 20.0,
            capture_s: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChamberResult {
    pub estimates_deg: Vec<f64>,
    /// Counts per 1° bin; bin `i` covers `[i, i + 1)`.
    pub histogram: Vec<u64>,
    /// Circular mean of the estimates around each detected peak.
    pub modes_deg: Vec<f64>,
    pub mode_std_deg: Vec<f64>,
}

impl ChamberResult {
    pub fn separation_deg(&self) -> Option<f64> {
        match self.modes_deg.as_slice() {
            [a, b] => Some(angular_distance(*a, *b)),
            _ => None,
        }
    }

    /// Two modes, 180° ± `tolerance_deg` apart.
    pub fn check(&self, tolerance_deg: f64) -> std::result::Result<(), String> {
        let sep = self
            .separation_deg()
            .ok_or_else(|| format!("expected 2 modes, found {} at {:?}", self.modes_deg.len(), self.modes_deg))?;
        if (sep - 180.0).abs() > tolerance_deg {
            return Err(format!("modes {:?} are {sep:.2}° apart", self.modes_deg));
        }
        Ok(())
    }

    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("bin_deg,count\n");
        for (i, c) in self.histogram.iter().enumerate() {
            out.push_str(&format!("{i},{c}\n"));
        }
        out
    }
}

pub fn chamber_test(config: &ChamberConfig) -> Result<ChamberResult> {
    let geometry = ArrayGeometry::square(config.side_m)?;
    let chain = ChainConfig::calibrated(config.radio.clone(), &geometry, DEFAULT_TUNING_OFFSET_HZ)?;
    let mut estimates = Vec::new();
    for (i, &bearing) in config.bearings_deg.iter().enumerate() {
        let emitter = EmitterSpec::continuous(bearing, DEFAULT_TUNING_OFFSET_HZ);
        let channel = ChannelSpec::with_snr(config.snr_db, config.seed.wrapping_mul(2).wrapping_add(i as u64));
        let capture = simulate_capture(&config.radio, &geometry, &emitter, &channel, 0.0, config.capture_s)?;
        let bearings = run_chain(&capture, &chain)?;
        estimates.extend(bearings.iter().skip(SETTLE_FRAMES).map(|b| b.angle_deg()));
    }
    Ok(analyse(estimates))
}

pub fn histogram(estimates_deg: &[f64]) -> Vec<u64> {
    let mut h = vec![0u64; HISTOGRAM_BINS];
    for &a in estimates_deg {
        let bin = (wrap_degrees(a).floor() as usize).min(HISTOGRAM_BINS - 1);
        h[bin] += 1;
    }
    h
}

/// Builds the histogram and finds its modes: local maxima of the lightly
/// smoothed histogram above a floor, closer peaks merged.
pub fn analyse(estimates_deg: Vec<f64>) -> ChamberResult {
    let hist = histogram(&estimates_deg);
    let n = HISTOGRAM_BINS;
    let smooth: Vec<f64> = (0..n)
        .map(|i| {
            (0..=2 * SMOOTH_HALF_WIDTH)
                .map(|d| hist[(i + n + d - SMOOTH_HALF_WIDTH) % n] as f64)
                .sum()
        })
        .collect();
    let top = smooth.iter().copied().fold(0.0, f64::max);
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| {
            let (l, r) = (smooth[(i + n - 1) % n], smooth[(i + 1) % n]);
            smooth[i] > 0.0 && smooth[i] >= PEAK_FLOOR * top && smooth[i] > l && smooth[i] >= r
        })
        .collect();
    // merge peaks closer than the mode arc, keeping the taller
    peaks.sort_by(|a, b| smooth[*b].total_cmp(&smooth[*a]));
    let mut kept: Vec<usize> = Vec::new();
    for p in peaks {
        if kept.iter().all(|&k| angular_distance(k as f64 + 0.5, p as f64 + 0.5) > MODE_ARC_DEG) {
            kept.push(p);
        }
    }
    kept.sort_unstable();

    let mut modes = Vec::new();
    let mut stds = Vec::new();
    for p in kept {
        let centre = p as f64 + 0.5;
        let members: Vec<f64> = estimates_deg
            .iter()
            .copied()
            .filter(|&a| angular_distance(a, centre) <= MODE_ARC_DEG)
            .collect();
        if let Some(mean) = circular_mean(&members) {
            modes.push(mean);
            stds.push(circular_std(&members));
        }
    }
    ChamberResult {
        estimates_deg,
        histogram: hist,
        modes_deg: modes,
        mode_std_deg: stds,
    }
}
