use num_complex::Complex64;
use pddf::dsp::{run_chain, ChainConfig, DEFAULT_TUNING_OFFSET_HZ};
use pddf::harness::{self, Profile};
use pddf::pf::{MeasurementNoise, MotionNoise};
use pddf::sim::{simulate_capture, ChannelSpec, EmitterSpec};
use pddf::{ArrayGeometry, BearingMeasurement, Error, IqBuffer, Vec2, WorldPose};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: Error) -> PyErr {
    match e {
        Error::FilterDivergence { .. } | Error::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn profile(name: &str) -> PyResult<Profile> {
    name.parse().map_err(err)
}

#[pyclass(module = "pddf_py")]
#[derive(Clone)]
struct RadioConfig {
    inner: pddf::RadioConfig,
}

#[pymethods]
impl RadioConfig {
    #[new]
    #[pyo3(signature = (carrier_frequency_hz=150e6, sample_rate_hz=3_379_200, samples_per_antenna=16, fft_length=2048, decimation=5))]
    fn new(
        carrier_frequency_hz: f64,
        sample_rate_hz: u64,
        samples_per_antenna: u32,
        fft_length: usize,
        decimation: u32,
    ) -> PyResult<Self> {
        let inner = pddf::RadioConfig { carrier_frequency_hz, sample_rate_hz, samples_per_antenna, fft_length, decimation };
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn switching_frequency_hz(&self) -> f64 {
        self.inner.switching_frequency_hz()
    }

    #[getter]
    fn measurement_rate_hz(&self) -> f64 {
        self.inner.measurement_rate_hz()
    }

    #[getter]
    fn wavelength_m(&self) -> f64 {
        self.inner.wavelength_m()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Simulated IQ for a static emitter, as a list of complex samples.
#[pyfunction]
#[pyo3(signature = (radio, bearing_deg, duration_s, side_m=0.44, snr_db=None, seed=0))]
fn simulate(
    radio: &RadioConfig,
    bearing_deg: f64,
    duration_s: f64,
    side_m: f64,
    snr_db: Option<f64>,
    seed: u64,
) -> PyResult<Vec<Complex64>> {
    let g = ArrayGeometry::square(side_m).map_err(err)?;
    let channel = snr_db.map_or_else(ChannelSpec::noiseless, |snr| ChannelSpec::with_snr(snr, seed));
    let emitter = EmitterSpec::continuous(bearing_deg, DEFAULT_TUNING_OFFSET_HZ);
    let cap = simulate_capture(&radio.inner, &g, &emitter, &channel, 0.0, duration_s).map_err(err)?;
    Ok(cap.into_samples())
}

/// Bearings `(timestamp_us, angle_deg, confidence)` from a capture that
/// starts at t = 0.
#[pyfunction]
#[pyo3(signature = (radio, samples, side_m=0.44))]
fn bearings(radio: &RadioConfig, samples: Vec<Complex64>, side_m: f64) -> PyResult<Vec<(i64, f64, f64)>> {
    let g = ArrayGeometry::square(side_m).map_err(err)?;
    let chain = ChainConfig::calibrated(radio.inner.clone(), &g, DEFAULT_TUNING_OFFSET_HZ).map_err(err)?;
    let cap = IqBuffer::new(samples, radio.inner.sample_rate_hz as f64, 0.0).map_err(err)?;
    let out = run_chain(&cap, &chain).map_err(err)?;
    Ok(out.iter().map(|b| (b.timestamp_us, b.angle_deg(), b.confidence())).collect())
}

#[pyfunction]
fn circular_mean(angles_deg: Vec<f64>) -> Option<f64> {
    pddf::circular::circular_mean(&angles_deg)
}

#[pyclass(module = "pddf_py")]
struct ParticleFilter {
    set: pddf::pf::ParticleSet,
    motion: MotionNoise,
    measurement: MeasurementNoise,
}

#[pymethods]
impl ParticleFilter {
    #[new]
    #[pyo3(signature = (grid_half_extent_m=100.0, count=10_000, seed=0, profile="default"))]
    fn new(grid_half_extent_m: f64, count: usize, seed: u64, profile: &str) -> PyResult<Self> {
        let config = harness::FilterConfig::for_profile(self::profile(profile)?, grid_half_extent_m);
        let set = pddf::pf::ParticleSet::init_uniform(grid_half_extent_m, count, seed).map_err(err)?;
        Ok(Self { set, motion: config.motion, measurement: config.measurement })
    }

    /// Motion step for a platform with the given velocity and acceleration.
    #[pyo3(signature = (velocity=(0.0, 0.0), acceleration=(0.0, 0.0)))]
    fn predict(&mut self, velocity: (f64, f64), acceleration: (f64, f64)) -> PyResult<()> {
        let pose = WorldPose::new(
            Vec2::ZERO,
            Vec2::new(velocity.0, velocity.1),
            0.0,
            Vec2::new(acceleration.0, acceleration.1),
        );
        self.set.predict(&pose, &self.motion).map_err(err)
    }

    /// Weight update with a sensor-frame bearing; resamples when due and
    /// returns whether it did.
    #[pyo3(signature = (bearing_deg, confidence=1.0))]
    fn update(&mut self, bearing_deg: f64, confidence: f64) -> PyResult<bool> {
        let m = BearingMeasurement::new(bearing_deg, 0, confidence).map_err(err)?;
        self.set.update(&m, &self.measurement).map_err(err)?;
        self.set.maybe_resample().map_err(err)
    }

    /// `((mean_x, mean_y), (var_x, var_y))` in the sensor frame.
    fn estimate(&self) -> ((f64, f64), (f64, f64)) {
        let e = self.set.estimate();
        ((e.mean_m.x, e.mean_m.y), (e.variance_m2.x, e.variance_m2.y))
    }

    fn weights(&self) -> Vec<f64> {
        self.set.weights()
    }

    fn __len__(&self) -> usize {
        self.set.len()
    }
}

#[pyclass(module = "pddf_py")]
#[derive(Clone)]
struct Scenario {
    inner: harness::Scenario,
}

#[pymethods]
impl Scenario {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: harness::Scenario::from_path(path).map_err(err)? })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self { inner: harness::Scenario::from_toml_str(text).map_err(err)? })
    }

    #[staticmethod]
    fn straight_pass() -> Self {
        Self { inner: harness::Scenario::straight_pass() }
    }

    #[staticmethod]
    fn loop_around() -> Self {
        Self { inner: harness::Scenario::loop_around() }
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml_string().map_err(err)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn duration_s(&self) -> f64 {
        self.inner.duration_s
    }

    #[setter]
    fn set_duration_s(&mut self, value: f64) {
        self.inner.duration_s = value;
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, value: u64) {
        self.inner.seed = value;
    }

    fn with_profile(&self, profile: &str) -> PyResult<Self> {
        Ok(Self { inner: self.inner.clone().with_profile(self::profile(profile)?) })
    }

    /// Runs the scenario end to end.
    fn run(&self, py: Python<'_>) -> PyResult<RunResult> {
        let inner = py.allow_threads(|| harness::run_scenario(&self.inner)).map_err(err)?;
        Ok(RunResult { inner })
    }
}

#[pyclass(module = "pddf_py")]
struct RunResult {
    inner: harness::RunResult,
}

#[pymethods]
impl RunResult {
    /// `(err_x, err_y, err_total)` at the last step.
    #[getter]
    fn final_errors(&self) -> (f64, f64, f64) {
        self.inner.final_errors
    }

    #[getter]
    fn bearing_count(&self) -> usize {
        self.inner.bearing_log.len()
    }

    /// Rows of `(step, timestamp_us, mean_x, mean_y, err_total)`.
    fn trace(&self) -> Vec<(usize, i64, f64, f64, Option<f64>)> {
        self.inner
            .trace
            .iter()
            .map(|r| (r.step, r.timestamp_us, r.mean_m.x, r.mean_m.y, r.error_total_m()))
            .collect()
    }

    fn trace_csv(&self) -> String {
        pddf::io::trace_csv(&self.inner.trace)
    }

    fn bearings_csv(&self) -> String {
        pddf::io::bearings_csv(&self.inner.bearing_log)
    }
}

/// Chamber experiment; returns `(modes_deg, histogram)`.
#[pyfunction]
#[pyo3(signature = (bearing_deg=50.0, snr_db=20.0, seed=0))]
fn chamber(py: Python<'_>, bearing_deg: f64, snr_db: f64, seed: u64) -> PyResult<(Vec<f64>, Vec<u64>)> {
    let config = harness::ChamberConfig {
        bearings_deg: [bearing_deg, bearing_deg + 180.0],
        snr_db,
        seed,
        ..harness::ChamberConfig::default()
    };
    let r = py.allow_threads(|| harness::chamber_test(&config)).map_err(err)?;
    Ok((r.modes_deg, r.histogram))
}

#[pymodule]
fn pddf_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<RadioConfig>()?;
    m.add_class::<ParticleFilter>()?;
    m.add_class::<Scenario>()?;
    m.add_class::<RunResult>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(bearings, m)?)?;
    m.add_function(wrap_pyfunction!(circular_mean, m)?)?;
    m.add_function(wrap_pyfunction!(chamber, m)?)?;
    Ok(())
}
