use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pddf::dsp::{run_chain, ChainConfig, DEFAULT_TUNING_OFFSET_HZ};
use pddf::harness::{
    attach_truth, chamber_test, downsample_bearings, epoch_capture, filter_seed, run_filter_with, run_scenario,
    summarize, ChamberConfig, FilterConfig, Profile, Scenario, EPOCH_S,
};
use pddf::{io, ArrayGeometry, Error, RadioConfig};

const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;
const EXIT_ACCEPTANCE: u8 = 4;

#[derive(Parser)]
#[command(name = "pddf", version, about = "Pseudo-Doppler direction finding: simulation, bearings and localisation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Default,
    Tuned,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Default => Profile::Default,
            ProfileArg::Tuned => Profile::Tuned,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Filter settings; the scenario's own settings when omitted.
    #[arg(long, value_enum)]
    profile: Option<ProfileArg>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario end to end and write bearings, track, truth and trace.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Initial grid half-extent in metres, overriding the scenario.
        #[arg(long)]
        grid: Option<f64>,
        /// Also write the raw IQ of these epochs.
        #[arg(long, value_delimiter = ',')]
        iq_epochs: Vec<usize>,
        /// Fail with exit code 4 when the final error exceeds this many metres.
        #[arg(long)]
        max_final_error: Option<f64>,
    },
    /// Two static captures 180 degrees apart, pooled into a bearing histogram.
    Chamber {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20.0)]
        snr_db: f64,
        #[arg(long, default_value_t = 50.0)]
        bearing_deg: f64,
        /// Allowed deviation of the mode separation from 180 degrees.
        #[arg(long, default_value_t = 3.0)]
        tolerance_deg: f64,
    },
    /// Demodulate a raw IQ file (`<name>_<rate>sps_<freq>hz.cf32`) into a bearing CSV.
    Bearings {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        iq: PathBuf,
        /// Array side length in metres (scenario geometry when a scenario is given).
        #[arg(long, default_value_t = 0.44)]
        side_m: f64,
        #[arg(long, default_value_t = DEFAULT_TUNING_OFFSET_HZ)]
        tuning_offset_hz: f64,
    },
    /// Run the particle filter over a bearing CSV and a track CSV.
    Filter {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        bearings: PathBuf,
        #[arg(long)]
        track: PathBuf,
        #[arg(long)]
        grid: Option<f64>,
        /// Write particle snapshots at these steps.
        #[arg(long, value_delimiter = ',')]
        snapshots: Vec<usize>,
    },
    /// Error table for an estimate trace against truth.
    Metrics {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 40.0)]
        convergence_m: f64,
        #[arg(long)]
        max_final_error: Option<f64>,
    },
}

enum Failure {
    Core(Error),
    Acceptance(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { common, grid, iq_epochs, max_final_error } => {
            simulate(&common, grid, &iq_epochs, max_final_error)
        }
        Command::Chamber { common, snr_db, bearing_deg, tolerance_deg } => {
            chamber(&common, snr_db, bearing_deg, tolerance_deg)
        }
        Command::Bearings { common, iq, side_m, tuning_offset_hz } => bearings(&common, &iq, side_m, tuning_offset_hz),
        Command::Filter { common, bearings, track, grid, snapshots } => {
            filter(&common, &bearings, &track, grid, &snapshots)
        }
        Command::Metrics { trace, truth, out, convergence_m, max_final_error } => {
            metrics(&trace, &truth, out.as_deref(), convergence_m, max_final_error)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Acceptance(msg)) => {
            eprintln!("acceptance failure: {msg}");
            ExitCode::from(EXIT_ACCEPTANCE)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::FilterDivergence { .. } => ExitCode::from(EXIT_DIVERGENCE),
                _ => ExitCode::from(EXIT_CONFIG),
            }
        }
    }
}

fn load_scenario(common: &Common, grid: Option<f64>) -> pddf::Result<Scenario> {
    let mut s = match &common.scenario {
        Some(path) => Scenario::from_path(path)?,
        None => return Err(Error::Configuration("--scenario is required".into())),
    };
    if let Some(seed) = common.seed {
        s.seed = seed;
    }
    let grid = grid.unwrap_or(s.filter.grid_half_extent_m);
    s.filter = match common.profile {
        Some(p) => FilterConfig::for_profile(p.into(), grid),
        None => FilterConfig { grid_half_extent_m: grid, ..s.filter },
    };
    s.validate()?;
    Ok(s)
}

fn write(dir: &Path, name: &str, contents: &str) -> pddf::Result<()> {
    io::write_atomic(dir.join(name), contents.as_bytes())
}

fn simulate(common: &Common, grid: Option<f64>, iq_epochs: &[usize], max_final_error: Option<f64>) -> CliResult {
    let s = load_scenario(common, grid)?;
    std::fs::create_dir_all(&common.out).map_err(Error::from)?;
    for &k in iq_epochs {
        let capture = epoch_capture(&s, k)?;
        let path = io::write_iq(&common.out, &format!("{}_epoch{k}", s.name), &capture, s.radio.carrier_frequency_hz)?;
        println!("wrote {}", path.display());
    }
    let r = run_scenario(&s)?;
    write(&common.out, "bearings.csv", &io::bearings_csv(&r.bearing_log))?;
    write(&common.out, "bearings_1hz.csv", &io::bearings_csv(&r.downsampled))?;
    write(&common.out, "track.csv", &io::track_csv(&r.track))?;
    write(&common.out, "truth.csv", &io::truth_csv(&r.truth))?;
    write(&common.out, "trace.csv", &io::trace_csv(&r.trace))?;
    let summary = summarize(&r.trace, 40.0)?;
    write(&common.out, "summary.txt", &format!("{summary}\n"))?;
    println!("{summary}");
    check_final(summary.final_error_m, max_final_error)
}

fn check_final(final_error_m: f64, limit: Option<f64>) -> CliResult {
    match limit {
        Some(limit) if !(final_error_m <= limit) => Err(Failure::Acceptance(format!(
            "final error {final_error_m:.3} m exceeds {limit} m"
        ))),
        _ => Ok(()),
    }
}

fn chamber(common: &Common, snr_db: f64, bearing_deg: f64, tolerance_deg: f64) -> CliResult {
    let radio = match &common.scenario {
        Some(_) => load_scenario(common, None)?.radio,
        None => RadioConfig::default(),
    };
    let config = ChamberConfig {
        radio,
        snr_db,
        bearings_deg: [bearing_deg, bearing_deg + 180.0],
        seed: common.seed.unwrap_or(0),
        ..ChamberConfig::default()
    };
    let r = chamber_test(&config)?;
    std::fs::create_dir_all(&common.out).map_err(Error::from)?;
    write(&common.out, "chamber_histogram.csv", &r.histogram_csv())?;
    for (m, sd) in r.modes_deg.iter().zip(&r.mode_std_deg) {
        println!("mode {m:.2} deg, std {sd:.2} deg");
    }
    r.check(tolerance_deg).map_err(Failure::Acceptance)
}

fn bearings(common: &Common, iq: &Path, side_m: f64, tuning_offset_hz: f64) -> CliResult {
    let (capture, carrier) = io::read_iq(iq)?;
    let (radio, geometry, offset) = match &common.scenario {
        Some(_) => {
            let s = load_scenario(common, None)?;
            (s.radio.clone(), s.geometry()?, s.tuning_offset_hz)
        }
        None => (RadioConfig::default(), ArrayGeometry::square(side_m)?, tuning_offset_hz),
    };
    let radio = RadioConfig {
        carrier_frequency_hz: carrier,
        sample_rate_hz: capture.sample_rate_hz().round() as u64,
        ..radio
    };
    let chain = ChainConfig::calibrated(radio, &geometry, offset)?;
    let out = run_chain(&capture, &chain)?;
    std::fs::create_dir_all(&common.out).map_err(Error::from)?;
    write(&common.out, "bearings.csv", &io::bearings_csv(&out))?;
    println!("{} bearings", out.len());
    Ok(())
}

fn filter(common: &Common, bearings: &Path, track: &Path, grid: Option<f64>, snapshots: &[usize]) -> CliResult {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(Error::from);
    let config = match (&common.scenario, common.profile) {
        (Some(_), _) => load_scenario(common, grid)?.filter,
        (None, p) => FilterConfig::for_profile(p.map(Profile::from).unwrap_or(Profile::Default), grid.unwrap_or(100.0)),
    };
    let measurements = downsample_bearings(&io::parse_bearings(&read(bearings)?)?, EPOCH_S)?;
    let track = io::parse_track(&read(track)?)?;
    let seed = filter_seed(common.seed.unwrap_or(0));
    std::fs::create_dir_all(&common.out).map_err(Error::from)?;
    let trace = run_filter_with(&measurements, &track, &config, seed, |step, set| {
        if snapshots.contains(&step) {
            write(&common.out, &format!("snapshot_{step}.csv"), &io::snapshot_csv(set))?;
        }
        Ok(())
    })?;
    write(&common.out, "trace.csv", &io::trace_csv(&trace))?;
    if let Some(last) = trace.last() {
        println!("final estimate ({:.2}, {:.2}) m after {} steps", last.mean_m.x, last.mean_m.y, trace.len());
    }
    Ok(())
}

fn metrics(trace: &Path, truth: &Path, out: Option<&Path>, convergence_m: f64, max_final_error: Option<f64>) -> CliResult {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(Error::from);
    let mut rows = io::parse_trace(&read(trace)?)?;
    let truth = io::parse_truth(&read(truth)?)?;
    attach_truth(&mut rows, &truth)?;
    let summary = summarize(&rows, convergence_m)?;
    println!("{summary}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
        write(dir, "trace_with_errors.csv", &io::trace_csv(&rows))?;
        write(dir, "summary.txt", &format!("{summary}\n"))?;
    }
    check_final(summary.final_error_m, max_final_error)
}
