//! Bearing demodulation: IQ capture in, angle-of-incidence measurements out.
//!
//! Stages, in order:
//!
//! 1. [`frequency_translate_fir`]: shift the emitter to 0 Hz, lowpass,
//!    decimate. Moves the receiver DC spike out of band.
//! 2. [`fm_discriminate`]: instantaneous frequency, which carries the
//!    commutation tone at the rotation frequency.
//! 3. [`notch_bandpass`]: isolate that tone with a band one tenth of an FFT
//!    bin wide.
//! 4. [`estimate_bearing`]: FFT phase at the rotation bin compared with the
//!    phase of the `-sin(w_r t)` reference.

mod chain;
mod fir;
mod notch;
mod phase;

pub use chain::{
    envelope_confidence, estimate_bearing, fm_discriminate, run_chain, ChainConfig,
    DEFAULT_CONFIDENCE_KAPPA, DEFAULT_TUNING_OFFSET_HZ,
};
pub use fir::{frequency_translate_fir, FirSpec};
pub use notch::{notch_bandpass, NotchSpec};
pub use phase::{
    fft_phase_at_bin, reference_phase_closed_form, reference_phase_fft, rotation_bin,
    rotation_bin_for, BinPhase,
};
