use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::types::{IqBuffer, RadioConfig};

/// Narrow band around the rotation tone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotchSpec {
    pub center_hz: f64,
    pub width_hz: f64,
}

/// Two identical one-pole sections; each is this much wider than the
/// cascade's half-power width (`sqrt(sqrt(2) - 1)`).
const CASCADE_WIDTH_FACTOR: f64 = 0.643_594_252_905_582_6;
const STAGES: usize = 2;

impl NotchSpec {
    /// Band centred on the rotation frequency, one tenth of an FFT bin wide.
    pub fn for_radio(radio: &RadioConfig) -> Self {
        let bin_hz = radio.effective_sample_rate_hz() / radio.fft_length as f64;
        Self {
            center_hz: radio.switching_frequency_hz(),
            width_hz: bin_hz / 10.0,
        }
    }
}

/// Complex resonator bandpass at `center_hz`.
///
/// Each stage is `y[n] = (1 - r) x[n] + r e^{i w0} y[n-1]`, whose response at
/// `w0` is exactly one, so the tone at the centre passes with unit gain and
/// zero phase shift; no group-delay correction is needed at the centre.
/// Negative-frequency content (the mirror of a real input) is rejected.
pub fn notch_bandpass(input: &IqBuffer, spec: &NotchSpec) -> Result<IqBuffer> {
    let fs = input.sample_rate_hz();
    if spec.center_hz.abs() >= fs / 2.0 {
        return Err(invalid(format!(
            "notch centre {} Hz is not below Nyquist ({} Hz)",
            spec.center_hz,
            fs / 2.0
        )));
    }
    if !(spec.width_hz > 0.0) {
        return Err(invalid("notch width must be positive"));
    }
    let stage_width = spec.width_hz / CASCADE_WIDTH_FACTOR;
    let r = (-PI * stage_width / fs).exp();
    let pole = Complex64::from_polar(r, TAU * spec.center_hz / fs);
    let gain = 1.0 - r;

    let mut state = [Complex64::new(0.0, 0.0); STAGES];
    let out = input
        .samples()
        .iter()
        .map(|&x| {
            let mut v = x;
            for s in state.iter_mut() {
                *s = v * gain + pole * *s;
                v = *s;
            }
            v
        })
        .collect();
    IqBuffer::new(out, fs, input.start_time_s())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FS: f64 = 675_840.0;
    const N: usize = 2048;

    fn spec() -> NotchSpec {
        NotchSpec::for_radio(&RadioConfig::default())
    }

    fn tone(freq: f64, phase: f64, len: usize) -> IqBuffer {
        let s = (0..len)
            .map(|i| Complex64::cis(TAU * freq * i as f64 / FS + phase))
            .collect();
        IqBuffer::new(s, FS, 0.0).unwrap()
    }

    /// Steady-state amplitude and phase error over the last frame.
    fn response(freq: f64) -> (f64, f64) {
        let len = 40 * N;
        let input = tone(freq, 0.3, len);
        let out = notch_bandpass(&input, &spec()).unwrap();
        let tail = len - N..len;
        let mut amp = 0.0;
        let mut ph = Complex64::new(0.0, 0.0);
        for i in tail {
            amp += out.samples()[i].norm();
            ph += out.samples()[i] * input.samples()[i].conj();
        }
        (amp / N as f64, ph.arg())
    }

    #[test]
    fn spec_follows_bin_rule() {
        let s = spec();
        assert_eq!(s.center_hz, 105_600.0);
        assert!((s.width_hz - 33.0).abs() < 1e-9);
    }

    #[test]
    fn centre_tone_passes_unchanged() {
        let (amp, phase) = response(spec().center_hz);
        assert!((amp - 1.0).abs() < 0.01, "{amp}");
        assert!(phase.abs() < 1e-3, "{phase}");
    }

    #[test]
    fn tones_two_and_three_bins_away_are_rejected() {
        let bin = FS / N as f64;
        let c = spec().center_hz;
        // swept oracle: measured steady-state gain at each offset
        for k in [2.0, -2.0, 3.0, -3.0, 10.0] {
            let (amp, _) = response(c + k * bin);
            let db = 20.0 * amp.log10();
            assert!(db <= -40.0, "{k} bins: {db:.1} dB");
        }
        let (mirror, _) = response(-c);
        assert!(20.0 * mirror.log10() <= -40.0);
    }

    #[test]
    fn half_power_width_matches_spec() {
        let s = spec();
        let (amp, _) = response(s.center_hz + s.width_hz / 2.0);
        assert!((amp * amp - 0.5).abs() < 0.02, "{}", amp * amp);
    }

    #[test]
    fn zero_in_zero_out() {
        let input = IqBuffer::new(vec![Complex64::new(0.0, 0.0); 1000], FS, 0.0).unwrap();
        let out = notch_bandpass(&input, &spec()).unwrap();
        assert!(out.samples().iter().all(|s| s.norm() == 0.0));
    }

    #[test]
    fn rejects_centre_above_nyquist() {
        let input = tone(0.0, 0.0, 16);
        let bad = NotchSpec {
            center_hz: FS * 0.6,
            width_hz: 10.0,
        };
        assert!(notch_bandpass(&input, &bad).is_err());
    }
}
