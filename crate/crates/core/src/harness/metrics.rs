//! Localisation error accounting against ground truth.

use std::fmt;

use crate::error::{invalid, Result};
use crate::types::Vec2;

/// One filter step as written to the estimate trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub timestamp_us: i64,
    /// World-frame posterior mean.
    pub mean_m: Vec2,
    pub variance_m2: Vec2,
    /// Mean minus truth; absent when no truth is known.
    pub error_m: Option<Vec2>,
}

impl TraceRow {
    pub fn error_total_m(&self) -> Option<f64> {
        self.error_m.map(Vec2::norm)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSummary {
    pub steps: usize,
    pub final_error_m: f64,
    pub final_error_xy_m: Vec2,
    /// First step whose total error is at or below the convergence
    /// threshold.
    pub convergence_step: Option<usize>,
    /// Worst total error from the convergence step onward.
    pub max_error_after_convergence_m: Option<f64>,
    pub rms_error_m: f64,
}

impl fmt::Display for ErrorSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "metric                       value")?;
        writeln!(f, "steps                        {}", self.steps)?;
        writeln!(f, "final_error_x_m              {:.3}", self.final_error_xy_m.x)?;
        writeln!(f, "final_error_y_m              {:.3}", self.final_error_xy_m.y)?;
        writeln!(f, "final_error_m                {:.3}", self.final_error_m)?;
        writeln!(f, "rms_error_m                  {:.3}", self.rms_error_m)?;
        match self.convergence_step {
            Some(s) => writeln!(f, "convergence_step             {s}")?,
            None => writeln!(f, "convergence_step             none")?,
        }
        match self.max_error_after_convergence_m {
            Some(e) => write!(f, "max_error_after_convergence  {e:.3}"),
            None => write!(f, "max_error_after_convergence  n/a"),
        }
    }
}

/// Fills in `error_m` on every row from `truth` (timestamp, position) pairs.
/// Timestamps must match one for one.
pub fn attach_truth(trace: &mut [TraceRow], truth: &[(i64, Vec2)]) -> Result<()> {
    if trace.len() != truth.len() {
        return Err(invalid(format!(
            "trace has {} rows but truth has {}",
            trace.len(),
            truth.len()
        )));
    }
    for (row, (ts, pos)) in trace.iter_mut().zip(truth) {
        if row.timestamp_us != *ts {
            return Err(invalid(format!(
                "timestamp mismatch at step {}: trace {} vs truth {ts}",
                row.step, row.timestamp_us
            )));
        }
        row.error_m = Some(row.mean_m - *pos);
    }
    Ok(())
}

pub fn summarize(trace: &[TraceRow], convergence_threshold_m: f64) -> Result<ErrorSummary> {
    let errors: Vec<Vec2> = trace
        .iter()
        .map(|r| r.error_m.ok_or_else(|| invalid(format!("step {} has no truth", r.step))))
        .collect::<Result<_>>()?;
    let last = *errors.last().ok_or_else(|| invalid("empty trace"))?;
    let totals: Vec<f64> = errors.iter().map(|e| e.norm()).collect();
    let convergence = totals.iter().position(|&e| e <= convergence_threshold_m);
    let max_after = convergence.map(|c| totals[c..].iter().copied().fold(0.0, f64::max));
    let rms = (totals.iter().map(|e| e * e).sum::<f64>() / totals.len() as f64).sqrt();
    Ok(ErrorSummary {
        steps: trace.len(),
        final_error_m: last.norm(),
        final_error_xy_m: last,
        convergence_step: convergence.map(|c| trace[c].step),
        max_error_after_convergence_m: max_after,
        rms_error_m: rms,
    })
}
