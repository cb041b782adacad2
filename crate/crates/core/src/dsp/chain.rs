use num_complex::Complex64;

use super::fir::{frequency_translate_fir, FirSpec};
use super::notch::{notch_bandpass, NotchSpec};
use super::phase::{reference_phase_closed_form, rotation_bin, BinPhase};
use crate::circular::{weighted_resultant, wrap_degrees};
use crate::error::{invalid, Result};
use crate::sim::{simulate_capture, ChannelSpec, EmitterSpec};
use crate::types::{ArrayGeometry, BearingMeasurement, IqBuffer, RadioConfig};

/// Receiver tuned this far below the emitter so the DC spike is translated
/// outside the FIR passband.
pub const DEFAULT_TUNING_OFFSET_HZ: f64 = 500_000.0;

/// Envelope coefficient of variation at which confidence drops to 1/2.
/// Noise-only frames through the default chain have cv >= ~0.003, so they
/// score below 0.3; the emitter at 20 dB SNR sits near cv 4e-5 (about 0.96).
pub const DEFAULT_CONFIDENCE_KAPPA: f64 = 0.001;

/// FIR length per unit of decimation. A sharp transition matters: the third
/// commutation harmonic sits at 0.47 of the decimated rate, and attenuating
/// it partially bends the discriminator output by up to a degree.
const TAPS_PER_DECIMATION: usize = 32;

/// Lowpass cutoff as a fraction of the decimated rate.
const CUTOFF_FRACTION: f64 = 0.49;

/// Frames discarded when estimating the calibration offset (notch start-up).
const CALIBRATION_SETTLE_FRAMES: usize = 4;

/// Simulation-clock instant on which every commutation cycle is aligned.
const CYCLE_ORIGIN_S: f64 = 0.0;

/// Fixed parameters of the bearing chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub radio: RadioConfig,
    pub fir: FirSpec,
    pub notch: NotchSpec,
    /// Added to every raw bearing; absorbs constant pipeline phase terms.
    pub calibration_offset_deg: f64,
    pub confidence_kappa: f64,
}

impl ChainConfig {
    /// Uncalibrated chain for a receiver tuned `tuning_offset_hz` away from
    /// the emitter.
    pub fn new(radio: RadioConfig, tuning_offset_hz: f64) -> Result<Self> {
        radio.validate()?;
        let fs = radio.sample_rate_hz as f64;
        let d = radio.decimation as usize;
        let fir = FirSpec::lowpass(
            CUTOFF_FRACTION * radio.effective_sample_rate_hz(),
            fs,
            TAPS_PER_DECIMATION * d + 1,
            tuning_offset_hz,
            d,
        )?;
        let notch = NotchSpec::for_radio(&radio);
        Ok(Self {
            radio,
            fir,
            notch,
            calibration_offset_deg: 0.0,
            confidence_kappa: DEFAULT_CONFIDENCE_KAPPA,
        })
    }

    /// Builds the chain and fixes its calibration offset against a
    /// noiseless bearing-0 simulation through `geometry`.
    pub fn calibrated(radio: RadioConfig, geometry: &ArrayGeometry, tuning_offset_hz: f64) -> Result<Self> {
        let mut chain = Self::new(radio, tuning_offset_hz)?;
        chain.calibrate(geometry)?;
        Ok(chain)
    }

    pub fn calibrate(&mut self, geometry: &ArrayGeometry) -> Result<()> {
        self.calibration_offset_deg = 0.0;
        let frames = CALIBRATION_SETTLE_FRAMES + 12;
        let duration = frames as f64 / self.radio.measurement_rate_hz();
        let emitter = EmitterSpec::continuous(0.0, self.fir.translation_hz);
        let capture = simulate_capture(&self.radio, geometry, &emitter, &ChannelSpec::noiseless(), 0.0, duration)?;
        let raw = run_chain(&capture, self)?;
        let (mean, _) = weighted_resultant(
            raw[CALIBRATION_SETTLE_FRAMES..].iter().map(|m| (m.angle_deg(), 1.0)),
        )
        .ok_or_else(|| invalid("calibration capture produced no coherent bearing"))?;
        self.calibration_offset_deg = wrap_degrees(-mean);
        Ok(())
    }

    pub fn rotation_bin(&self) -> Result<usize> {
        rotation_bin(&self.radio)
    }
}

/// Instantaneous frequency in radians per sample, `arg(x[n] conj(x[n-1]))`,
/// returned as a real-valued buffer. The first sample is zero.
pub fn fm_discriminate(input: &IqBuffer) -> Result<IqBuffer> {
    let s = input.samples();
    let mut out = Vec::with_capacity(s.len());
    out.push(Complex64::new(0.0, 0.0));
    out.extend(s.windows(2).map(|w| {
        let d = w[1] * w[0].conj();
        let f = if d.norm_sqr() == 0.0 { 0.0 } else { d.arg() };
        Complex64::new(f, 0.0)
    }));
    IqBuffer::new(out, input.sample_rate_hz(), input.start_time_s())
}

/// Bearing confidence from the flatness of the notch output's envelope:
/// `1 / (1 + cv / kappa)` with `cv = std(|z|) / mean(|z|)`.
pub fn envelope_confidence(notched: &[Complex64], kappa: f64) -> f64 {
    if notched.is_empty() {
        return 0.0;
    }
    let n = notched.len() as f64;
    let mean = notched.iter().map(|z| z.norm()).sum::<f64>() / n;
    if !(mean > 0.0) {
        return 0.0;
    }
    let var = notched.iter().map(|z| (z.norm() - mean).powi(2)).sum::<f64>() / n;
    let cv = var.sqrt() / mean;
    1.0 / (1.0 + cv / kappa)
}

/// Bearing from one notch-filtered frame of length `fft_length`.
///
/// The frame must start on a commutation-cycle boundary counted from
/// `reference_origin_time_s`. `theta_1` is the FFT phase of the frame at
/// the rotation bin, `theta_2` the phase of `-sin(w_r t)` over the same
/// samples. Commutating counter-clockwise makes the tone phase lag by the
/// angle of incidence, so the bearing is `theta_2 - theta_1` plus the
/// calibration offset.
pub fn estimate_bearing(notched: &IqBuffer, config: &ChainConfig, reference_origin_time_s: f64) -> Result<BearingMeasurement> {
    let mut fft = BinPhase::new(config.radio.fft_length);
    estimate_with(&mut fft, notched.samples(), notched.start_time_s(), notched.sample_rate_hz(), config, reference_origin_time_s)
}

fn estimate_with(
    fft: &mut BinPhase,
    frame: &[Complex64],
    start_time_s: f64,
    sample_rate_hz: f64,
    config: &ChainConfig,
    origin_s: f64,
) -> Result<BearingMeasurement> {
    let radio = &config.radio;
    if frame.len() != radio.fft_length {
        return Err(invalid(format!(
            "frame length {} does not match fft_length {}",
            frame.len(),
            radio.fft_length
        )));
    }
    let f_rot = radio.switching_frequency_hz();
    let cycles = (start_time_s - origin_s) * f_rot;
    if (cycles - cycles.round()).abs() > 1e-6 {
        return Err(invalid(format!(
            "frame at {start_time_s} s is not aligned to a commutation cycle ({cycles} cycles from origin)"
        )));
    }
    let timestamp_us = (start_time_s * 1e6).round() as i64;
    if frame.iter().all(|z| z.norm_sqr() == 0.0) {
        return BearingMeasurement::new(0.0, timestamp_us, 0.0);
    }
    let bin = rotation_bin(radio)?;
    // the discriminator output lags the phase it differentiates by half a sample
    let discriminator_lag = std::f64::consts::PI * f_rot / sample_rate_hz;
    let theta_1 = fft.phase(frame, bin)? + discriminator_lag;
    let theta_2 = reference_phase_closed_form(f_rot, start_time_s - origin_s);
    let angle = (theta_2 - theta_1).to_degrees() + config.calibration_offset_deg;
    let confidence = envelope_confidence(frame, config.confidence_kappa);
    BearingMeasurement::new(wrap_degrees(angle), timestamp_us, confidence)
}

/// Runs the full chain over a capture and returns one bearing per FFT frame.
/// The capture must start on a commutation-cycle boundary.
pub fn run_chain(capture: &IqBuffer, config: &ChainConfig) -> Result<Vec<BearingMeasurement>> {
    let (notched, _) = filtered(capture, config)?;
    let n = config.radio.fft_length;
    let frames = notched.len() / n;
    if frames == 0 {
        return Err(invalid(format!(
            "capture too short: {} samples after decimation, need {n}",
            notched.len()
        )));
    }
    let mut fft = BinPhase::new(n);
    (0..frames)
        .map(|f| {
            let start = f * n;
            estimate_with(
                &mut fft,
                &notched.samples()[start..start + n],
                notched.time_of(start),
                notched.sample_rate_hz(),
                config,
                CYCLE_ORIGIN_S,
            )
        })
        .collect()
}

/// Translating FIR, discriminator and notch. Returns the notch output and
/// the decimated IQ.
pub(crate) fn filtered(capture: &IqBuffer, config: &ChainConfig) -> Result<(IqBuffer, IqBuffer)> {
    let expected = config.radio.sample_rate_hz as f64;
    if (capture.sample_rate_hz() - expected).abs() > 1e-9 * expected {
        return Err(invalid(format!(
            "capture rate {} Hz does not match radio rate {expected} Hz",
            capture.sample_rate_hz()
        )));
    }
    let decimated = frequency_translate_fir(capture, &config.fir)?;
    let demod = fm_discriminate(&decimated)?;
    let notched = notch_bandpass(&demod, &config.notch)?;
    Ok((notched, decimated))
}
