use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::circular::wrap_radians;
use crate::error::{invalid, Error, Result};
use crate::types::RadioConfig;

/// Planned FFT of a fixed length, reporting the phase of one bin.
pub struct BinPhase {
    fft: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    buf: Vec<Complex64>,
}

impl BinPhase {
    pub fn new(len: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(len);
        let scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        Self {
            fft,
            scratch,
            buf: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// `X[bin] = sum x[n] e^{-i 2 pi bin n / N}`.
    pub fn bin(&mut self, frame: &[Complex64], bin: usize) -> Result<Complex64> {
        if frame.len() != self.buf.len() {
            return Err(invalid(format!(
                "frame length {} does not match FFT length {}",
                frame.len(),
                self.buf.len()
            )));
        }
        if bin >= frame.len() {
            return Err(invalid(format!("bin {bin} outside 0..{}", frame.len())));
        }
        self.buf.copy_from_slice(frame);
        self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
        Ok(self.buf[bin])
    }

    /// `arg(X[bin])` in `(-pi, pi]`.
    pub fn phase(&mut self, frame: &[Complex64], bin: usize) -> Result<f64> {
        Ok(principal_arg(self.bin(frame, bin)?))
    }
}

pub(crate) fn principal_arg(z: Complex64) -> f64 {
    let a = z.arg();
    if a == -PI {
        PI
    } else {
        a
    }
}

/// Phase of FFT bin `bin` of `frame`, in `(-pi, pi]`.
pub fn fft_phase_at_bin(frame: &[Complex64], bin: usize) -> Result<f64> {
    if frame.is_empty() {
        return Err(invalid("empty frame"));
    }
    BinPhase::new(frame.len()).phase(frame, bin)
}

/// FFT bin of the rotation tone for the radio's own effective rate.
pub fn rotation_bin(radio: &RadioConfig) -> Result<usize> {
    let exact = radio.rotation_bin_exact();
    if !exact.is_integer() {
        return Err(Error::Configuration(format!(
            "rotation tone off bin centre: switching {} Hz, fft_length {}, effective rate {} Hz",
            radio.switching_frequency_hz(),
            radio.fft_length,
            radio.effective_sample_rate_hz()
        )));
    }
    Ok(exact.to_integer() as usize)
}

/// FFT bin for an arbitrary tone, rate and length; the tone must sit on a
/// bin centre to 1e-9 bins.
pub fn rotation_bin_for(switching_hz: f64, effective_sample_rate_hz: f64, fft_length: usize) -> Result<usize> {
    let bin = switching_hz * fft_length as f64 / effective_sample_rate_hz;
    let rounded = bin.round();
    if !bin.is_finite() || (bin - rounded).abs() > 1e-9 || rounded < 0.0 {
        return Err(Error::Configuration(format!(
            "switching {switching_hz} Hz * fft_length {fft_length} / effective rate {effective_sample_rate_hz} Hz = {bin} is not an integer bin"
        )));
    }
    Ok(rounded as usize)
}

/// Phase at the tone's bin of the reference `-sin(2 pi f t)`, sampled from
/// `t = offset_s` on. Exact when `f` sits on a bin centre.
pub fn reference_phase_closed_form(freq_hz: f64, offset_s: f64) -> f64 {
    let cycles = (freq_hz * offset_s).rem_euclid(1.0);
    wrap_radians(TAU * cycles + FRAC_PI_2)
}

/// Same quantity computed by sampling the reference and running the FFT.
pub fn reference_phase_fft(freq_hz: f64, offset_s: f64, sample_rate_hz: f64, bin: usize, fft: &mut BinPhase) -> Result<f64> {
    let start = (freq_hz * offset_s).rem_euclid(1.0);
    let frame: Vec<Complex64> = (0..fft.len())
        .map(|n| {
            let cycles = start + freq_hz * n as f64 / sample_rate_hz;
            Complex64::new(-(TAU * cycles).sin(), 0.0)
        })
        .collect();
    fft.phase(&frame, bin)
}
