use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::osc::Oscillator;
use crate::types::IqBuffer;

/// Frequency-translating decimating FIR.
#[derive(Debug, Clone, PartialEq)]
pub struct FirSpec {
    pub taps: Vec<f64>,
    pub translation_hz: f64,
    pub decimation: usize,
}

impl FirSpec {
    /// Blackman-windowed sinc lowpass with unity DC gain.
    pub fn lowpass(
        cutoff_hz: f64,
        sample_rate_hz: f64,
        num_taps: usize,
        translation_hz: f64,
        decimation: usize,
    ) -> Result<Self> {
        if num_taps == 0 || !(cutoff_hz > 0.0) || cutoff_hz >= sample_rate_hz / 2.0 {
            return Err(invalid(format!(
                "lowpass needs taps > 0 and 0 < cutoff < fs/2 (cutoff {cutoff_hz}, fs {sample_rate_hz})"
            )));
        }
        let fc = cutoff_hz / sample_rate_hz;
        let centre = (num_taps - 1) as f64 / 2.0;
        let mut taps: Vec<f64> = (0..num_taps)
            .map(|m| {
                let n = m as f64 - centre;
                let sinc = if n == 0.0 { 2.0 * fc } else { (TAU * fc * n).sin() / (PI * n) };
                sinc * blackman(m, num_taps)
            })
            .collect();
        let sum: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|t| *t /= sum);
        let spec = Self {
            taps,
            translation_hz,
            decimation,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.taps.is_empty() {
            return Err(invalid("FIR needs at least one tap"));
        }
        if self.decimation == 0 {
            return Err(invalid("decimation must be >= 1"));
        }
        Ok(())
    }
}

fn blackman(m: usize, len: usize) -> f64 {
    if len == 1 {
        return 1.0;
    }
    let x = m as f64 / (len - 1) as f64;
    0.42 - 0.5 * (TAU * x).cos() + 0.08 * (2.0 * TAU * x).cos()
}

#[inline]
fn interleaved_dot(iq: &[f64], taps: &[f64]) -> Complex64 {
    let mut acc = [0.0; 8];
    let (ci, ct) = (iq.chunks_exact(8), taps.chunks_exact(8));
    let (ri, rt) = (ci.remainder(), ct.remainder());
    for (x, t) in ci.zip(ct) {
        for k in 0..8 {
            acc[k] += x[k] * t[k];
        }
    }
    for (k, (x, t)) in ri.iter().zip(rt).enumerate() {
        acc[k] += x * t;
    }
    Complex64::new(
        (acc[0] + acc[2]) + (acc[4] + acc[6]),
        (acc[1] + acc[3]) + (acc[5] + acc[7]),
    )
}

/// `decimate(convolve(x * exp(-i 2 pi f t), taps), D)`.
///
/// The taps are applied centred on each output instant, so a symmetric
/// (linear-phase) filter adds no delay: output sample `j` is at time
/// `start + j D / fs`. Samples beyond the buffer edges count as zero.
pub fn frequency_translate_fir(input: &IqBuffer, spec: &FirSpec) -> Result<IqBuffer> {
    spec.validate()?;
    let d = spec.decimation;
    let n = input.len();
    if n % d != 0 {
        return Err(invalid(format!("decimation {d} does not divide buffer length {n}")));
    }
    let fs = input.sample_rate_hz();
    let taps = &spec.taps;
    let len = taps.len();
    let centre = (len - 1) / 2;
    // Zero-padded input, interleaved re/im, against reversed taps with each
    // coefficient doubled: every output is one contiguous dot product whose
    // even lanes accumulate I and odd lanes Q.
    let pad_front = len - 1 - centre;
    let mut iq = vec![0.0; 2 * (n + len - 1)];
    let first = (input.start_time_s() * fs).round() as i64;
    let osc = Oscillator::new(-spec.translation_hz, fs, first);
    for (i, (x, lo)) in input.samples().iter().zip(osc).enumerate() {
        let y = if spec.translation_hz == 0.0 { *x } else { x * lo };
        iq[2 * (pad_front + i)] = y.re;
        iq[2 * (pad_front + i) + 1] = y.im;
    }
    let doubled: Vec<f64> = taps.iter().rev().flat_map(|&t| [t, t]).collect();
    let out: Vec<Complex64> = (0..n / d)
        .map(|j| {
            let at = 2 * j * d;
            interleaved_dot(&iq[at..at + 2 * len], &doubled)
        })
        .collect();
    IqBuffer::new(out, fs / d as f64, input.start_time_s())
}
