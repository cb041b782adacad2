//! Scenarios, the end-to-end driver, metrics and the chamber experiment.

pub mod chamber;
pub mod metrics;
pub mod run;
pub mod scenario;

pub use chamber::{chamber_test, ChamberConfig, ChamberResult};
pub use metrics::{attach_truth, summarize, ErrorSummary, TraceRow};
pub use run::{
    downsample_bearings, epoch_capture, filter_seed, run_filter, run_filter_with, run_scenario, run_with_bearings, synthesize_bearings, true_bearing,
    RunResult,
};
pub use scenario::{poses_from_track, FilterConfig, Profile, Scenario, TrackPoint, TrackSpec, EPOCH_S};
