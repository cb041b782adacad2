use std::path::{Path, PathBuf};
use std::process::Command;

fn pddf(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_pddf")).args(args).output().unwrap();
    let text = format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
    (out.status.code().unwrap_or(-1), text)
}

fn short_loop(dir: &Path) -> PathBuf {
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/loop.toml")).unwrap();
    let path = dir.join("short.toml");
    std::fs::write(&path, src.replace("duration_s = 95.0", "duration_s = 6.0")).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn invalid_scenario_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "name = \"x\"\n").unwrap();
    let (code, text) = pddf(&["simulate", "--scenario", s(&bad), "--out", s(dir.path())]);
    assert_eq!(code, 2, "{text}");
    let (code, _) = pddf(&["simulate", "--scenario", s(&dir.path().join("missing.toml"))]);
    assert_eq!(code, 2);
    let (code, _) = pddf(&["simulate", "--profile", "sideways"]);
    assert_eq!(code, 2);
}

#[test]
fn simulate_filter_metrics_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = short_loop(dir.path());
    let out = dir.path().join("run");
    let (code, text) = pddf(&[
        "simulate", "--scenario", s(&scenario), "--seed", "3", "--out", s(&out), "--profile", "tuned", "--iq-epochs", "0",
    ]);
    assert_eq!(code, 0, "{text}");
    for f in ["bearings.csv", "bearings_1hz.csv", "track.csv", "truth.csv", "trace.csv", "summary.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let iq = out.join("loop_epoch0_3379200sps_150000000hz.cf32");
    assert!(iq.exists());

    let b = dir.path().join("iq");
    let (code, text) = pddf(&["bearings", "--iq", s(&iq), "--out", s(&b)]);
    assert_eq!(code, 0, "{text}");
    assert!(std::fs::read_to_string(b.join("bearings.csv")).unwrap().starts_with("timestamp_us,angle_deg,confidence\n"));

    let f = dir.path().join("filter");
    let (code, text) = pddf(&[
        "filter", "--scenario", s(&scenario), "--seed", "3", "--bearings", s(&out.join("bearings.csv")),
        "--track", s(&out.join("track.csv")), "--out", s(&f), "--snapshots", "0,5",
    ]);
    assert_eq!(code, 0, "{text}");
    assert_eq!(
        std::fs::read_to_string(f.join("trace.csv")).unwrap(),
        std::fs::read_to_string(out.join("trace.csv")).unwrap().lines().map(|l| {
            // the simulate trace carries errors; drop them for comparison
            let cols: Vec<&str> = l.split(',').collect();
            if cols[0] == "step" { l.to_string() } else { format!("{},,,", cols[..6].join(",")) }
        }).collect::<Vec<_>>().join("\n") + "\n"
    );
    assert!(f.join("snapshot_5.csv").exists());

    let (code, text) = pddf(&["metrics", "--trace", s(&f.join("trace.csv")), "--truth", s(&out.join("truth.csv"))]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("final_error_m"));
    let (code, _) = pddf(&[
        "metrics", "--trace", s(&f.join("trace.csv")), "--truth", s(&out.join("truth.csv")), "--max-final-error", "0",
    ]);
    assert_eq!(code, 4);
}

#[test]
fn chamber_passes_and_writes_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = pddf(&["chamber", "--out", s(dir.path())]);
    assert_eq!(code, 0, "{text}");
    let hist = std::fs::read_to_string(dir.path().join("chamber_histogram.csv")).unwrap();
    assert_eq!(hist.lines().count(), 361);
}
