//! File formats: bearing, track, trace and snapshot CSVs, and raw
//! interleaved float32 IQ. Every write goes to a temporary file in the
//! target directory and is renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::harness::{TraceRow, TrackPoint};
use crate::pf::ParticleSet;
use crate::types::{BearingMeasurement, IqBuffer, Vec2};

pub const BEARING_HEADER: &str = "timestamp_us,angle_deg,confidence";
pub const TRACK_HEADER: &str = "timestamp_us,x_m,y_m,heading_deg";
pub const TRACE_HEADER: &str = "step,timestamp_us,mean_x,mean_y,var_x,var_y,err_x,err_y,err_total";
pub const SNAPSHOT_HEADER: &str = "step,x_m,y_m,vx,vy,orientation_deg,weight";
pub const TRUTH_HEADER: &str = "timestamp_us,x_m,y_m";

/// Writes `contents` to `path` atomically.
pub fn write_atomic(path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn with_header(header: &str, rows: impl Iterator<Item = String>) -> String {
    let mut out = String::with_capacity(64);
    out.push_str(header);
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

pub fn bearings_csv(bearings: &[BearingMeasurement]) -> String {
    with_header(
        BEARING_HEADER,
        bearings
            .iter()
            .map(|b| format!("{},{},{}", b.timestamp_us, b.angle_deg(), b.confidence())),
    )
}

pub fn track_csv(track: &[TrackPoint]) -> String {
    with_header(
        TRACK_HEADER,
        track
            .iter()
            .map(|p| format!("{},{},{},{}", p.timestamp_us, p.position_m.x, p.position_m.y, p.heading_deg)),
    )
}

pub fn truth_csv(truth: &[(i64, Vec2)]) -> String {
    with_header(TRUTH_HEADER, truth.iter().map(|(t, p)| format!("{t},{},{}", p.x, p.y)))
}

pub fn trace_csv(trace: &[TraceRow]) -> String {
    with_header(
        TRACE_HEADER,
        trace.iter().map(|r| {
            let err = match r.error_m {
                Some(e) => format!("{},{},{}", e.x, e.y, e.norm()),
                None => ",,".to_string(),
            };
            format!(
                "{},{},{},{},{},{},{err}",
                r.step, r.timestamp_us, r.mean_m.x, r.mean_m.y, r.variance_m2.x, r.variance_m2.y
            )
        }),
    )
}

pub fn snapshot_csv(set: &ParticleSet) -> String {
    let step = set.step_index();
    with_header(
        SNAPSHOT_HEADER,
        set.particles().iter().map(|p| {
            format!(
                "{step},{},{},{},{},{},{}",
                p.position_m.x,
                p.position_m.y,
                p.velocity_mps.x,
                p.velocity_mps.y,
                p.orientation_deg,
                p.log_weight.exp()
            )
        }),
    )
}

fn parse_rows(text: &str, header: &str) -> Result<Vec<csv::StringRecord>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let found = reader.headers().map_err(parse_err)?.iter().collect::<Vec<_>>().join(",");
    if found != header {
        return Err(Error::Parse(format!("expected header {header:?}, found {found:?}")));
    }
    reader.records().map(|r| r.map_err(parse_err)).collect()
}

fn parse_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = record.get(i).unwrap_or("");
    raw.parse().map_err(|_| {
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        Error::Parse(format!("line {line}: cannot parse column {i} value {raw:?}"))
    })
}

fn opt_field(record: &csv::StringRecord, i: usize) -> Result<Option<f64>> {
    match record.get(i) {
        None | Some("") => Ok(None),
        Some(_) => field(record, i).map(Some),
    }
}

pub fn parse_bearings(text: &str) -> Result<Vec<BearingMeasurement>> {
    parse_rows(text, BEARING_HEADER)?
        .iter()
        .map(|r| {
            BearingMeasurement::new(field(r, 1)?, field(r, 0)?, field(r, 2)?)
                .map_err(|e| Error::Parse(e.to_string()))
        })
        .collect()
}

pub fn parse_track(text: &str) -> Result<Vec<TrackPoint>> {
    parse_rows(text, TRACK_HEADER)?
        .iter()
        .map(|r| {
            Ok(TrackPoint {
                timestamp_us: field(r, 0)?,
                position_m: Vec2::new(field(r, 1)?, field(r, 2)?),
                heading_deg: field(r, 3)?,
            })
        })
        .collect()
}

pub fn parse_truth(text: &str) -> Result<Vec<(i64, Vec2)>> {
    parse_rows(text, TRUTH_HEADER)?
        .iter()
        .map(|r| Ok((field(r, 0)?, Vec2::new(field(r, 1)?, field(r, 2)?))))
        .collect()
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRow>> {
    parse_rows(text, TRACE_HEADER)?
        .iter()
        .map(|r| {
            let err = match (opt_field(r, 6)?, opt_field(r, 7)?) {
                (Some(x), Some(y)) => Some(Vec2::new(x, y)),
                _ => None,
            };
            Ok(TraceRow {
                step: field(r, 0)?,
                timestamp_us: field(r, 1)?,
                mean_m: Vec2::new(field(r, 2)?, field(r, 3)?),
                variance_m2: Vec2::new(field(r, 4)?, field(r, 5)?),
                error_m: err,
            })
        })
        .collect()
}

/// `{prefix}_{rate}sps_{freq}hz.cf32`
pub fn iq_file_name(prefix: &str, sample_rate_hz: u64, carrier_frequency_hz: f64) -> String {
    format!("{prefix}_{sample_rate_hz}sps_{}hz.cf32", carrier_frequency_hz.round() as u64)
}

/// Recovers (sample rate, centre frequency) from an IQ file name.
pub fn parse_iq_file_name(path: impl AsRef<Path>) -> Result<(u64, f64)> {
    let path = path.as_ref();
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::Parse(format!("bad IQ file name {}", path.display())))?;
    let parts: Vec<&str> = stem.rsplitn(3, '_').collect();
    let bad = || Error::Parse(format!("IQ file name {stem:?} must end in _<rate>sps_<freq>hz"));
    if parts.len() < 3 {
        return Err(bad());
    }
    let freq: f64 = parts[0].strip_suffix("hz").and_then(|f| f.parse().ok()).ok_or_else(bad)?;
    let rate: u64 = parts[1].strip_suffix("sps").and_then(|r| r.parse().ok()).ok_or_else(bad)?;
    Ok((rate, freq))
}

pub fn iq_bytes(buffer: &IqBuffer) -> Vec<u8> {
    let mut out = Vec::with_capacity(buffer.len() * 8);
    for s in buffer.samples() {
        out.extend_from_slice(&(s.re as f32).to_le_bytes());
        out.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    out
}

pub fn iq_from_bytes(bytes: &[u8], sample_rate_hz: f64, start_time_s: f64) -> Result<IqBuffer> {
    if bytes.len() % 8 != 0 {
        return Err(Error::Parse(format!("IQ length {} is not a multiple of 8 bytes", bytes.len())));
    }
    let samples: Vec<Complex64> = bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    IqBuffer::new(samples, sample_rate_hz, start_time_s)
}

/// Writes an IQ capture into `dir`, naming it from its rate and carrier.
pub fn write_iq(dir: impl AsRef<Path>, prefix: &str, buffer: &IqBuffer, carrier_frequency_hz: f64) -> Result<PathBuf> {
    let path = dir
        .as_ref()
        .join(iq_file_name(prefix, buffer.sample_rate_hz().round() as u64, carrier_frequency_hz));
    write_atomic(&path, &iq_bytes(buffer))?;
    Ok(path)
}

/// Reads an IQ file; returns the buffer (starting at t = 0) and the centre
/// frequency from its name.
pub fn read_iq(path: impl AsRef<Path>) -> Result<(IqBuffer, f64)> {
    let (rate, freq) = parse_iq_file_name(&path)?;
    let bytes = fs::read(path)?;
    Ok((iq_from_bytes(&bytes, rate as f64, 0.0)?, freq))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bearing_csv_round_trip() {
        let b = vec![
            BearingMeasurement::new(12.345678901234, 5, 0.25).unwrap(),
            BearingMeasurement::new(359.9, 3_030, 1.0).unwrap(),
        ];
        let text = bearings_csv(&b);
        assert!(text.starts_with("timestamp_us,angle_deg,confidence\n5,"));
        assert_eq!(parse_bearings(&text).unwrap(), b);
    }

    #[test]
    fn trace_csv_round_trip_with_and_without_errors() {
        let mut rows = vec![TraceRow {
            step: 0,
            timestamp_us: 500_000,
            mean_m: Vec2::new(1.5, -2.0),
            variance_m2: Vec2::new(3.0, 4.0),
            error_m: None,
        }];
        rows.push(TraceRow { step: 1, error_m: Some(Vec2::new(3.0, 4.0)), ..rows[0] });
        let text = trace_csv(&rows);
        assert!(text.lines().nth(1).unwrap().ends_with(",,"));
        assert!(text.lines().nth(2).unwrap().ends_with(",3,4,5"));
        assert_eq!(parse_trace(&text).unwrap(), rows);
    }

    #[test]
    fn wrong_header_and_bad_values_are_parse_errors() {
        assert!(matches!(parse_bearings("a,b,c\n1,2,3\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_track("timestamp_us,x_m,y_m,heading_deg\n1,x,2,3\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_bearings("timestamp_us,angle_deg,confidence\n1,2,7\n"), Err(Error::Parse(_))));
    }

    #[test]
    fn iq_round_trip_through_named_file() {
        let dir = tempfile::tempdir().unwrap();
        let samples = vec![Complex64::new(0.5, -0.25), Complex64::new(1.0, 2.0)];
        let buf = IqBuffer::new(samples.clone(), 3_379_200.0, 0.0).unwrap();
        let path = write_iq(dir.path(), "cap", &buf, 150e6).unwrap();
        assert_eq!(path.file_name().unwrap(), "cap_3379200sps_150000000hz.cf32");
        assert_eq!(fs::metadata(&path).unwrap().len(), 16);
        let (back, freq) = read_iq(&path).unwrap();
        assert_eq!(freq, 150e6);
        assert_eq!(back.sample_rate_hz(), 3_379_200.0);
        assert_eq!(back.samples(), samples.as_slice());
    }

    #[test]
    fn iq_name_parsing_handles_underscored_prefix() {
        assert_eq!(parse_iq_file_name("a_b_1000sps_2hz.cf32").unwrap(), (1000, 2.0));
        assert!(parse_iq_file_name("capture.cf32").is_err());
        assert!(iq_from_bytes(&[0; 7], 1.0, 0.0).is_err());
    }

    #[test]
    fn atomic_write_replaces_existing_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
