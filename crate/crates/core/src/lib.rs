//! Pseudo-Doppler direction finding, end to end in software.
//!
//! The crate is organised as a pipeline:
//!
//! - [`types`]: shared domain types (radio configuration, array geometry,
//!   IQ buffers, bearing measurements, platform poses).
//! - [`sim`]: synthesis of the IQ stream a commutated four-element array
//!   produces for a far-field emitter.
//! - [`dsp`]: frequency-translating FIR, FM discrimination, narrow
//!   bandpass at the rotation tone, FFT phase comparison and envelope
//!   confidence.
//! - [`pf`]: bearing-only particle filter in a sensor-centred frame.
//! - [`harness`]: scenarios, end-to-end runs, downsampling, metrics and the
//!   chamber experiment.

pub mod circular;
pub mod dsp;
pub mod error;
pub mod harness;
pub mod io;
mod osc;
pub mod pf;
pub mod sim;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    validate_geometry, wavelength, ArrayGeometry, BearingMeasurement, GeometryOutcome,
    GeometryReport, IqBuffer, RadioConfig, Vec2, WorldPose, SPEED_OF_LIGHT,
};
