//! Python bindings for `ewalk`.
//!
//! Configurations are exposed as small value classes; experiment drivers
//! return plain dictionaries of lists so results drop straight into numpy.

use std::f64::consts::FRAC_PI_4;
use std::path::PathBuf;

use ewalk::config::{parse_config as parse_text, serialize};
use ewalk::experiments::{self, theory};
use ewalk::observables::{CentroidRecorder, DensityRecorder, NormRecorder};
use ewalk::output;
use ewalk::spectral::{self, Branch};
use ewalk::walk::{self, Recorder};
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(
    ewalk_py,
    WalkError,
    PyException,
    "Simulation or analysis failure."
);
create_exception!(
    ewalk_py,
    EdgeLeakError,
    WalkError,
    "The wavefunction reached the lattice edge."
);
create_exception!(
    ewalk_py,
    ConfigError,
    PyValueError,
    "Invalid experiment configuration."
);

fn to_py(err: impl Into<ewalk::Error>) -> PyErr {
    match err.into() {
        e @ ewalk::Error::Walk(ewalk::WalkError::EdgeLeak { .. }) => {
            EdgeLeakError::new_err(e.to_string())
        }
        e @ ewalk::Error::Config(_) => ConfigError::new_err(e.to_string()),
        e => WalkError::new_err(e.to_string()),
    }
}

/// Static plus harmonic phase field `G(t) = 2π/m + ΔΦ sin(ωt + φ)`.
#[pyclass(name = "FieldConfig", module = "ewalk_py", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
pub struct PyFieldConfig {
    inner: walk::FieldConfig,
}

#[pymethods]
impl PyFieldConfig {
    #[new]
    #[pyo3(signature = (m, delta_phi = 0.0, omega = 0.0, phi = 0.0))]
    fn new(m: f64, delta_phi: f64, omega: f64, phi: f64) -> PyResult<Self> {
        let inner = walk::FieldConfig::new(m, delta_phi, omega, phi);
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Field with `ΔΦ = ratio · Φ0` at `ω = ω_B + detuning`.
    #[staticmethod]
    #[pyo3(signature = (m, detuning, ratio = 1.0, phi = 0.0))]
    fn detuned(m: f64, detuning: f64, ratio: f64, phi: f64) -> PyResult<Self> {
        let inner = walk::FieldConfig::detuned(m, ratio, detuning, phi);
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Field driven exactly at the Bloch frequency.
    #[staticmethod]
    #[pyo3(signature = (m, ratio = 1.0, phi = 0.0))]
    fn resonant(m: f64, ratio: f64, phi: f64) -> PyResult<Self> {
        Self::detuned(m, 0.0, ratio, phi)
    }

    #[getter]
    fn m(&self) -> f64 {
        self.inner.m
    }

    #[getter]
    fn delta_phi(&self) -> f64 {
        self.inner.delta_phi
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.inner.omega
    }

    #[getter]
    fn phi(&self) -> f64 {
        self.inner.phi
    }

    #[getter]
    fn bloch_frequency(&self) -> f64 {
        self.inner.bloch_frequency()
    }

    #[getter]
    fn bloch_period(&self) -> f64 {
        self.inner.bloch_period()
    }

    #[getter]
    fn detuning(&self) -> f64 {
        self.inner.detuning()
    }

    /// Phase increment `G(t)` applied at step `t`.
    fn phase_at(&self, t: usize) -> f64 {
        walk::PhaseDrive::phase_at(&self.inner, t)
    }

    fn __repr__(&self) -> String {
        let f = &self.inner;
        format!(
            "FieldConfig(m={}, delta_phi={}, omega={}, phi={})",
            f.m, f.delta_phi, f.omega, f.phi
        )
    }
}

/// Lattice, coin, field, duration and initial spinor of one walk.
#[pyclass(
    name = "SimulationConfig",
    module = "ewalk_py",
    frozen,
    skip_from_py_object
)]
#[derive(Clone, Copy)]
pub struct PySimulationConfig {
    inner: walk::SimulationConfig,
}

#[pymethods]
impl PySimulationConfig {
    /// The walker starts at `origin` (default `n_sites // 2`) in the spinor
    /// `(up, down)`, by default `(1, i)/√2`.
    #[new]
    #[pyo3(signature = (n_sites, steps, field, theta = FRAC_PI_4, origin = None, spinor = None))]
    fn new(
        n_sites: usize,
        steps: usize,
        field: &PyFieldConfig,
        theta: f64,
        origin: Option<usize>,
        spinor: Option<(Complex64, Complex64)>,
    ) -> PyResult<Self> {
        let mut inner =
            walk::SimulationConfig::new(n_sites, steps, walk::CoinParams::new(theta), field.inner);
        if let Some(o) = origin {
            inner = inner.with_origin(o);
        }
        if let Some((up, down)) = spinor {
            inner = inner.with_spinor(up, down);
        }
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n_sites(&self) -> usize {
        self.inner.n_sites
    }

    #[getter]
    fn steps(&self) -> usize {
        self.inner.steps
    }

    #[getter]
    fn origin(&self) -> usize {
        self.inner.origin
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.coin.theta
    }

    #[getter]
    fn field(&self) -> PyFieldConfig {
        PyFieldConfig {
            inner: self.inner.field,
        }
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "SimulationConfig(n_sites={}, steps={}, theta={}, origin={})",
            c.n_sites, c.steps, c.coin.theta, c.origin
        )
    }
}

/// Two-component amplitudes on the chain.
#[pyclass(name = "WalkerState", module = "ewalk_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyWalkerState {
    inner: walk::WalkerState,
}

#[pymethods]
impl PyWalkerState {
    #[new]
    fn new(up: Vec<Complex64>, down: Vec<Complex64>) -> PyResult<Self> {
        walk::WalkerState::from_amplitudes(up, down)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    /// Localized state at `config`'s origin.
    #[staticmethod]
    fn initial(config: &PySimulationConfig) -> PyResult<Self> {
        walk::initial_state(&config.inner)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[getter]
    fn n_sites(&self) -> usize {
        self.inner.n_sites()
    }

    #[getter]
    fn up(&self) -> Vec<Complex64> {
        self.inner.up().to_vec()
    }

    #[getter]
    fn down(&self) -> Vec<Complex64> {
        self.inner.down().to_vec()
    }

    fn probabilities(&self) -> Vec<f64> {
        ewalk::probability_distribution(&self.inner)
    }

    fn centroid(&self) -> f64 {
        ewalk::centroid(&self.inner)
    }

    fn norm_sqr(&self) -> f64 {
        self.inner.norm_sqr()
    }

    /// Advance by one step of the walk at time index `t`.
    #[pyo3(signature = (field, t, theta = FRAC_PI_4))]
    fn step(&self, field: &PyFieldConfig, t: usize, theta: f64) -> PyResult<Self> {
        let coin = walk::CoinParams::new(theta);
        coin.validate().map_err(to_py)?;
        self.inner
            .step(&coin, &field.inner, t)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.n_sites()
    }
}

/// Run `config` and return a dict with the final state and the requested
/// per-step records: `centroid` (always), `norm`, and `density` rows every
/// `density_stride` steps.
#[pyfunction]
#[pyo3(signature = (config, record_norm = false, density_stride = None, discard_edges = false))]
fn evolve<'py>(
    py: Python<'py>,
    config: &PySimulationConfig,
    record_norm: bool,
    density_stride: Option<usize>,
    discard_edges: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config.inner;
    cfg.validate().map_err(to_py)?;
    let policy = if discard_edges {
        walk::EdgePolicy::Discard
    } else {
        walk::EdgePolicy::Guard
    };
    let (state, centroids, norms, density) = py
        .detach(|| {
            let mut centroids = CentroidRecorder::with_capacity(cfg.steps);
            let mut norms = NormRecorder::default();
            let mut density = density_stride.map(DensityRecorder::new);
            let mut recorders: Vec<&mut dyn Recorder> = vec![&mut centroids];
            if record_norm {
                recorders.push(&mut norms);
            }
            if let Some(d) = density.as_mut() {
                recorders.push(d);
            }
            let start = walk::initial_state(&cfg)?;
            let state = walk::propagate_with(
                start,
                &cfg.coin,
                &cfg.field,
                cfg.steps,
                policy,
                &mut recorders,
            )?;
            Ok::<_, ewalk::WalkError>((state, centroids, norms, density))
        })
        .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("state", PyWalkerState { inner: state })?;
    out.set_item("centroid", centroids.into_trace().samples)?;
    if record_norm {
        out.set_item("norm", norms.norms)?;
    }
    if let Some(d) = density {
        let map = d.into_map();
        out.set_item("density_times", map.times)?;
        out.set_item("density", map.rows)?;
    }
    Ok(out)
}

/// Same as [`evolve`] but computed with explicit `2N × 2N` matrices
/// (`n_sites ≤ 64`). Returns the state after `t` steps.
#[pyfunction]
fn dense_oracle(config: &PySimulationConfig, t: usize) -> PyResult<PyWalkerState> {
    walk::oracle::dense_unitary_oracle(&config.inner, t)
        .map(|inner| PyWalkerState { inner })
        .map_err(to_py)
}

/// Least-squares centroid velocity over `samples[start..=end]`.
#[pyfunction]
fn drift_velocity(samples: Vec<f64>, start: usize, end: usize) -> PyResult<f64> {
    ewalk::drift_velocity(&ewalk::CentroidTrace::new(samples), start..=end).map_err(to_py)
}

/// One-sided amplitude spectrum of a mean-subtracted sequence, as
/// `(angular_frequencies, magnitudes)`.
#[pyfunction]
fn spectrum(samples: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let s = spectral::spectrum_of_samples(&samples).map_err(to_py)?;
    Ok((s.freqs, s.mags))
}

/// Frequency of the strongest bin at or above `min_freq` (default: one bin).
#[pyfunction]
#[pyo3(signature = (samples, min_freq = None))]
fn dominant_frequency(samples: Vec<f64>, min_freq: Option<f64>) -> PyResult<f64> {
    let s = spectral::spectrum_of_samples(&samples).map_err(to_py)?;
    let floor = min_freq.unwrap_or(s.resolution);
    ewalk::dominant_frequency(&s, floor).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (m, theta = FRAC_PI_4, n_sites = 1000, steps = 1000))]
fn run_bloch<'py>(
    py: Python<'py>,
    m: f64,
    theta: f64,
    n_sites: usize,
    steps: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let params = experiments::BlochParams {
        m,
        theta,
        n_sites,
        steps,
        density_stride: None,
    };
    let run = py
        .detach(|| experiments::run_bloch(&params))
        .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("centroid", run.trace.samples)?;
    out.set_item("omega", run.spectrum.freqs)?;
    out.set_item("magnitude", run.spectrum.mags)?;
    out.set_item("dominant_frequency", run.dominant)?;
    out.set_item("bloch_frequency", run.config.field.bloch_frequency())?;
    Ok(out)
}

#[pyfunction]
#[pyo3(signature = (m, detuning, theta = FRAC_PI_4, phi = 0.0, amplitude_ratio = 1.0, n_sites = 1000, steps = 20_000))]
#[allow(clippy::too_many_arguments)]
fn run_sbo<'py>(
    py: Python<'py>,
    m: f64,
    detuning: f64,
    theta: f64,
    phi: f64,
    amplitude_ratio: f64,
    n_sites: usize,
    steps: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let params = experiments::SboParams {
        m,
        detuning,
        theta,
        phi,
        amplitude_ratio,
        n_sites,
        steps,
    };
    let run = py.detach(|| experiments::run_sbo(&params)).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("centroid", run.trace.samples)?;
    out.set_item("omega", run.spectrum.freqs)?;
    out.set_item("magnitude", run.spectrum.mags)?;
    out.set_item("primary", run.primary)?;
    out.set_item("secondary", run.secondary)?;
    out.set_item("third_component", run.third_component)?;
    Ok(out)
}

fn drift_params(
    m: f64,
    theta: f64,
    amplitude_ratio: f64,
    n_sites: usize,
    window: (usize, usize),
    steps: Option<usize>,
) -> experiments::DriftParams {
    experiments::DriftParams {
        m,
        theta,
        phi: 0.0,
        amplitude_ratio,
        n_sites,
        steps: steps.unwrap_or((window.1 as f64 * m).round() as usize),
        window_periods: window,
    }
}

#[pyfunction]
#[pyo3(signature = (m, phi, theta = FRAC_PI_4, amplitude_ratio = 1.0, n_sites = 2000, window = (5, 25), steps = None))]
#[allow(clippy::too_many_arguments)]
fn run_resonant_drift<'py>(
    py: Python<'py>,
    m: f64,
    phi: f64,
    theta: f64,
    amplitude_ratio: f64,
    n_sites: usize,
    window: (usize, usize),
    steps: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let params = drift_params(m, theta, amplitude_ratio, n_sites, window, steps).with_phi(phi);
    let run = py
        .detach(|| experiments::run_resonant_drift(&params))
        .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("centroid", run.trace.samples)?;
    out.set_item("velocity", run.velocity)?;
    Ok(out)
}

/// Drift velocity on `phi_points` phases over `[0, 2π)` plus the drift-law fits.
#[pyfunction]
#[pyo3(signature = (m, theta = FRAC_PI_4, phi_points = 64, amplitude_ratio = 1.0, n_sites = 2000, window = (5, 25), steps = None))]
#[allow(clippy::too_many_arguments)]
fn velocity_curve<'py>(
    py: Python<'py>,
    m: f64,
    theta: f64,
    phi_points: usize,
    amplitude_ratio: f64,
    n_sites: usize,
    window: (usize, usize),
    steps: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let params = drift_params(m, theta, amplitude_ratio, n_sites, window, steps);
    let phis = experiments::phase_grid(phi_points);
    let curve = py.detach(|| experiments::velocity_curve(&params, &phis));
    let out = PyDict::new(py);
    out.set_item("argmax", curve.argmax())?;
    out.set_item("argmin", curve.argmin())?;
    out.set_item("phi", curve.phis)?;
    out.set_item("velocity", curve.velocities)?;
    out.set_item("errors", curve.errors)?;
    out.set_item("fit_v0", curve.fit.v0)?;
    out.set_item("fit_residual", curve.fit.residual)?;
    out.set_item("fit_offset", curve.fit_with_offset.offset)?;
    out.set_item("fit_offset_v0", curve.fit_with_offset.v0)?;
    out.set_item("fit_offset_residual", curve.fit_with_offset.residual)?;
    Ok(out)
}

/// Dominant centroid frequency across a band of detunings, with the branch of
/// each point and the crossover estimate (`None` if not bracketed).
#[pyfunction]
#[pyo3(signature = (m, theta = FRAC_PI_4, n_sites = 2500, steps = 100_000, grid_points = 30, band = (0.0, 1.0)))]
fn crossover_scan<'py>(
    py: Python<'py>,
    m: f64,
    theta: f64,
    n_sites: usize,
    steps: usize,
    grid_points: usize,
    band: (f64, f64),
) -> PyResult<Bound<'py, PyDict>> {
    let params = experiments::CrossoverParams {
        m,
        theta,
        n_sites,
        steps,
        grid_points,
        grid_range: band,
        ..experiments::CrossoverParams::default()
    };
    let res = py
        .detach(|| experiments::run_crossover(&params))
        .map_err(to_py)?;
    let branches: Vec<String> = res
        .branches
        .iter()
        .map(|b| match b {
            Branch::Failed(e) => format!("failed: {e}"),
            other => other.to_string(),
        })
        .collect();
    let out = PyDict::new(py);
    out.set_item("crossover_ratio", res.crossover_ratio())?;
    out.set_item("crossover", res.crossover)?;
    out.set_item("detuning", res.detunings)?;
    out.set_item("dominant", res.dominant)?;
    out.set_item("branch", branches)?;
    out.set_item("resolution", res.resolution)?;
    Ok(out)
}

/// Normalized drift law `cos(δΦ cos φ - φ)`.
#[pyfunction]
fn drift_law(relative_amplitude: f64, phi: f64) -> f64 {
    theory::drift_law(relative_amplitude, phi)
}

/// Phases `(φ1, φ2)` of strongest positive and negative drift.
#[pyfunction]
fn drift_extrema(relative_amplitude: f64) -> (f64, f64) {
    theory::drift_extrema(relative_amplitude)
}

/// Parse a config file's text and return it with every default filled in.
#[pyfunction]
fn parse_config(text: &str) -> PyResult<String> {
    parse_text(text).map(|c| serialize(&c)).map_err(to_py)
}

/// Run a config file's text into `out_dir`, as `ewalk run` does. Returns the
/// manifest as a dict.
#[pyfunction]
#[pyo3(signature = (text, out_dir, jobs = 0))]
fn run_config<'py>(
    py: Python<'py>,
    text: &str,
    out_dir: PathBuf,
    jobs: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let config = parse_text(text).map_err(to_py)?;
    let report = py
        .detach(|| output::run(&config, &out_dir, jobs))
        .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("experiment", config.experiment().name())?;
    out.set_item("success", report.success())?;
    out.set_item("files", report.files)?;
    out.set_item(
        "results",
        report
            .results
            .into_iter()
            .collect::<std::collections::BTreeMap<_, _>>(),
    )?;
    out.set_item("errors", report.errors)?;
    Ok(out)
}

#[pymodule]
fn ewalk_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<PyFieldConfig>()?;
    m.add_class::<PySimulationConfig>()?;
    m.add_class::<PyWalkerState>()?;
    m.add("WalkError", py.get_type::<WalkError>())?;
    m.add("EdgeLeakError", py.get_type::<EdgeLeakError>())?;
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(dense_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(drift_velocity, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(dominant_frequency, m)?)?;
    m.add_function(wrap_pyfunction!(run_bloch, m)?)?;
    m.add_function(wrap_pyfunction!(run_sbo, m)?)?;
    m.add_function(wrap_pyfunction!(run_resonant_drift, m)?)?;
    m.add_function(wrap_pyfunction!(velocity_curve, m)?)?;
    m.add_function(wrap_pyfunction!(crossover_scan, m)?)?;
    m.add_function(wrap_pyfunction!(drift_law, m)?)?;
    m.add_function(wrap_pyfunction!(drift_extrema, m)?)?;
    m.add_function(wrap_pyfunction!(parse_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
