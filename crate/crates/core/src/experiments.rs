//! Named experiment drivers: regular Bloch oscillations, super-Bloch
//! oscillations, resonant drift, velocity curves and maps, the detuning
//! crossover, and density snapshots.
//!
//! Every driver is a pure function of its parameters. Sweeps fan out over the
//! current rayon pool and write into pre-indexed slots, so results do not
//! depend on the number of worker threads.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use rayon::prelude::*;

use crate::error::{AnalysisError, Result, WalkError};
use crate::observables::{
    bloch_window, drift_velocity, CentroidRecorder, CentroidTrace, DensityMap, DensityRecorder,
};
use crate::spectral::{self, dominant_frequency, spectrum, CrossoverResult, Spectrum};
use crate::walk::{evolve, CoinParams, FieldConfig, SimulationConfig};

pub mod theory;

/// Static field only (`ΔΦ = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochParams {
    pub m: f64,
    pub theta: f64,
    pub n_sites: usize,
    pub steps: usize,
    /// Density recording interval; `None` skips the density map.
    pub density_stride: Option<usize>,
}

impl Default for BlochParams {
    fn default() -> Self {
        Self {
            m: 100.0,
            theta: FRAC_PI_4,
            n_sites: 1000,
            steps: 1000,
            density_stride: None,
        }
    }
}

impl BlochParams {
    pub fn simulation(&self) -> SimulationConfig {
        SimulationConfig::new(
            self.n_sites,
            self.steps,
            CoinParams::new(self.theta),
            FieldConfig::static_field(self.m),
        )
    }
}

#[derive(Debug, Clone)]
pub struct BlochRun {
    pub config: SimulationConfig,
    pub trace: CentroidTrace,
    pub spectrum: Spectrum,
    pub dominant: f64,
    pub density: Option<DensityMap>,
}

/// Regular Bloch-like oscillations under the static field alone.
pub fn run_bloch(params: &BlochParams) -> Result<BlochRun> {
    let config = params.simulation();
    let mut centroids = CentroidRecorder::with_capacity(config.steps);
    let mut density = params.density_stride.map(DensityRecorder::new);
    match density.as_mut() {
        Some(d) => evolve(&config, &mut [&mut centroids, d])?,
        None => evolve(&config, &mut [&mut centroids])?,
    };
    let trace = centroids.into_trace();
    let spectrum = spectrum(&trace)?;
    let dominant = dominant_frequency(&spectrum, spectrum.resolution)?;
    Ok(BlochRun {
        config,
        trace,
        spectrum,
        dominant,
        density: density.map(DensityRecorder::into_map),
    })
}

/// Harmonic drive slightly detuned from the Bloch frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SboParams {
    pub m: f64,
    /// `Δω = ω - ω_B`.
    pub detuning: f64,
    pub theta: f64,
    pub phi: f64,
    /// `ΔΦ / Φ0`.
    pub amplitude_ratio: f64,
    pub n_sites: usize,
    pub steps: usize,
}

impl Default for SboParams {
    fn default() -> Self {
        Self {
            m: 100.0,
            detuning: 0.01,
            theta: FRAC_PI_4,
            phi: 0.0,
            amplitude_ratio: 1.0,
            n_sites: 1000,
            steps: 20_000,
        }
    }
}

impl SboParams {
    pub fn simulation(&self) -> SimulationConfig {
        SimulationConfig::new(
            self.n_sites,
            self.steps,
            CoinParams::new(self.theta),
            FieldConfig::detuned(self.m, self.amplitude_ratio, self.detuning, self.phi),
        )
    }
}

#[derive(Debug, Clone)]
pub struct SboRun {
    pub config: SimulationConfig,
    pub trace: CentroidTrace,
    pub spectrum: Spectrum,
    /// Strongest spectral peak `(Ω, magnitude)`.
    pub primary: (f64, f64),
    /// Second strongest peak.
    pub secondary: Option<(f64, f64)>,
    /// Magnitude near `ω_B + ω + Δω`; reported, never used for classification.
    pub third_component: f64,
}

/// Super-Bloch oscillations.
pub fn run_sbo(params: &SboParams) -> Result<SboRun> {
    let config = params.simulation();
    let mut centroids = CentroidRecorder::with_capacity(config.steps);
    evolve(&config, &mut [&mut centroids])?;
    let trace = centroids.into_trace();
    let spectrum = spectrum(&trace)?;
    let peaks = spectrum.peaks(spectrum.resolution);
    let primary = *peaks.first().ok_or(AnalysisError::EmptyRange {
        min_freq: spectrum.resolution,
    })?;
    let omega_b = config.field.bloch_frequency();
    let third = omega_b + config.field.omega + params.detuning;
    let third_component = if third < PI {
        spectrum.magnitude_near(third, 2)
    } else {
        0.0
    };
    Ok(SboRun {
        config,
        trace,
        secondary: peaks.get(1).copied(),
        spectrum,
        primary,
        third_component,
    })
}

/// Harmonic drive exactly at the Bloch frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftParams {
    pub m: f64,
    pub theta: f64,
    pub phi: f64,
    pub amplitude_ratio: f64,
    pub n_sites: usize,
    pub steps: usize,
    /// Fit window in whole Bloch periods, `[first, last]`.
    pub window_periods: (usize, usize),
}

impl Default for DriftParams {
    fn default() -> Self {
        Self {
            m: 100.0,
            theta: FRAC_PI_4,
            phi: 0.0,
            amplitude_ratio: 1.0,
            n_sites: 2000,
            steps: 2500,
            window_periods: (5, 25),
        }
    }
}

impl DriftParams {
    pub fn simulation(&self) -> SimulationConfig {
        SimulationConfig::new(
            self.n_sites,
            self.steps,
            CoinParams::new(self.theta),
            FieldConfig::resonant(self.m, self.amplitude_ratio, self.phi),
        )
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }
}

#[derive(Debug, Clone)]
pub struct DriftRun {
    pub config: SimulationConfig,
    pub trace: CentroidTrace,
    /// Least-squares centroid slope over the fit window, sites per step.
    pub velocity: f64,
}

/// Unidirectional drift at resonance.
pub fn run_resonant_drift(params: &DriftParams) -> Result<DriftRun> {
    let config = params.simulation();
    config.validate()?;
    let (first, last) = params.window_periods;
    let window = bloch_window(config.field.bloch_period(), first, last)?;
    if *window.end() > config.steps {
        return Err(AnalysisError::WindowOutOfRange {
            start: *window.start(),
            end: *window.end(),
            len: config.steps + 1,
        }
        .into());
    }
    let mut centroids = CentroidRecorder::with_capacity(config.steps);
    evolve(&config, &mut [&mut centroids])?;
    let trace = centroids.into_trace();
    let velocity = drift_velocity(&trace, window)?;
    Ok(DriftRun {
        config,
        trace,
        velocity,
    })
}

/// `count` evenly spaced phases `2πk/count` over `[0, 2π)`.
pub fn phase_grid(count: usize) -> Vec<f64> {
    (0..count).map(|k| TAU * k as f64 / count as f64).collect()
}

/// `count` evenly spaced gate angles `πk/(count + 1)` strictly inside `(0, π)`.
pub fn theta_grid(count: usize) -> Vec<f64> {
    (1..=count)
        .map(|k| PI * k as f64 / (count + 1) as f64)
        .collect()
}

/// Least-squares fit of `v(φ) = v0 · cos(δΦ cos(φ + δ) - (φ + δ))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftLawFit {
    pub v0: f64,
    /// Global phase offset `δ`; zero unless the offset was fitted.
    pub offset: f64,
    /// `max_φ |v(φ) - v0 · model(φ)|`, sites per step.
    pub residual: f64,
}

impl DriftLawFit {
    pub fn relative_residual(&self) -> f64 {
        self.residual / self.v0.abs()
    }
}

fn fit_fixed_offset(phis: &[f64], velocities: &[f64], rel: f64, offset: f64) -> (DriftLawFit, f64) {
    let model: Vec<f64> = phis
        .iter()
        .map(|&p| theory::drift_law(rel, p + offset))
        .collect();
    let gg: f64 = model.iter().map(|g| g * g).sum();
    let vg: f64 = model.iter().zip(velocities).map(|(g, v)| g * v).sum();
    let v0 = if gg > 0.0 { vg / gg } else { 0.0 };
    let mut sse = 0.0;
    let mut residual: f64 = 0.0;
    for (g, v) in model.iter().zip(velocities) {
        let r = v - v0 * g;
        sse += r * r;
        residual = residual.max(r.abs());
    }
    (
        DriftLawFit {
            v0,
            offset,
            residual,
        },
        sse,
    )
}

/// Fit the resonant drift law to measured velocities. With `fit_offset` the
/// offset is searched over `[-π, π)` on a fine grid and refined by golden
/// section.
pub fn fit_drift_law(
    phis: &[f64],
    velocities: &[f64],
    relative_amplitude: f64,
    fit_offset: bool,
) -> DriftLawFit {
    assert_eq!(phis.len(), velocities.len());
    if !fit_offset {
        return fit_fixed_offset(phis, velocities, relative_amplitude, 0.0).0;
    }
    let sse = |d: f64| fit_fixed_offset(phis, velocities, relative_amplitude, d).1;
    const COARSE: usize = 3600;
    let step = TAU / COARSE as f64;
    let best = (0..COARSE)
        .map(|k| -PI + k as f64 * step)
        .map(|d| (d, sse(d)))
        .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });

    // golden-section refinement around the best coarse point
    let (mut a, mut b) = (best.0 - step, best.0 + step);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (sse(c), sse(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = sse(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = sse(d);
        }
    }
    let refined = 0.5 * (a + b);
    let pick = if sse(refined) <= best.1 {
        refined
    } else {
        best.0
    };
    fit_fixed_offset(phis, velocities, relative_amplitude, pick).0
}

#[derive(Debug, Clone)]
pub struct VelocityCurve {
    pub phis: Vec<f64>,
    /// Drift velocity per phase; `NaN` where the run failed.
    pub velocities: Vec<f64>,
    /// Per-point failures as `(index, message)`.
    pub errors: Vec<(usize, String)>,
    /// `δΦ = ΔΦ / Φ0` used by the model.
    pub relative_amplitude: f64,
    /// Fit with the offset pinned to zero.
    pub fit: DriftLawFit,
    /// Fit with a free global phase offset.
    pub fit_with_offset: DriftLawFit,
}

impl VelocityCurve {
    pub fn argmax(&self) -> f64 {
        let k = argmax(&self.velocities);
        self.phis[k]
    }

    pub fn argmin(&self) -> f64 {
        let neg: Vec<f64> = self.velocities.iter().map(|v| -v).collect();
        self.phis[argmax(&neg)]
    }

    pub fn max_abs(&self) -> f64 {
        self.velocities.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

fn argmax(xs: &[f64]) -> usize {
    xs.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        })
        .0
}

fn drift_sweep(points: &[(f64, f64)], base: &DriftParams) -> Vec<std::result::Result<f64, String>> {
    points
        .par_iter()
        .map(|&(theta, phi)| {
            run_resonant_drift(&base.with_theta(theta).with_phi(phi))
                .map(|r| r.velocity)
                .map_err(|e| e.to_string())
        })
        .collect()
}

/// Drift velocity as a function of the harmonic phase, with the drift-law fit.
pub fn velocity_curve(base: &DriftParams, phis: &[f64]) -> VelocityCurve {
    let points: Vec<(f64, f64)> = phis.iter().map(|&p| (base.theta, p)).collect();
    let results = drift_sweep(&points, base);
    let mut errors = Vec::new();
    let velocities: Vec<f64> = results
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.unwrap_or_else(|e| {
                errors.push((i, e));
                f64::NAN
            })
        })
        .collect();
    let rel = base.amplitude_ratio;
    let (ok_phis, ok_v): (Vec<f64>, Vec<f64>) = phis
        .iter()
        .zip(&velocities)
        .filter(|(_, v)| v.is_finite())
        .map(|(p, v)| (*p, *v))
        .unzip();
    VelocityCurve {
        phis: phis.to_vec(),
        fit: fit_drift_law(&ok_phis, &ok_v, rel, false),
        fit_with_offset: fit_drift_law(&ok_phis, &ok_v, rel, true),
        velocities,
        errors,
        relative_amplitude: rel,
    }
}

#[derive(Debug, Clone)]
pub struct VelocityMap {
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
    /// `v[i][j]` at `(thetas[i], phis[j])`; failed points hold their error.
    pub v: Vec<Vec<std::result::Result<f64, String>>>,
}

impl VelocityMap {
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.v[i]
            .iter()
            .map(|r| *r.as_ref().unwrap_or(&f64::NAN))
            .collect()
    }

    pub fn errors(&self) -> Vec<(usize, usize, &str)> {
        let mut out = Vec::new();
        for (i, row) in self.v.iter().enumerate() {
            for (j, r) in row.iter().enumerate() {
                if let Err(e) = r {
                    out.push((i, j, e.as_str()));
                }
            }
        }
        out
    }
}

/// Drift velocity over a `θ × φ` grid, one independent run per point.
pub fn velocity_map(base: &DriftParams, thetas: &[f64], phis: &[f64]) -> VelocityMap {
    let points: Vec<(f64, f64)> = thetas
        .iter()
        .flat_map(|&t| phis.iter().map(move |&p| (t, p)))
        .collect();
    let mut flat = drift_sweep(&points, base).into_iter();
    let v = thetas
        .iter()
        .map(|_| flat.by_ref().take(phis.len()).collect())
        .collect();
    VelocityMap {
        thetas: thetas.to_vec(),
        phis: phis.to_vec(),
        v,
    }
}

/// Detuning scan around the Bloch frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossoverParams {
    pub m: f64,
    pub theta: f64,
    pub phi: f64,
    pub amplitude_ratio: f64,
    pub n_sites: usize,
    pub steps: usize,
    pub grid_points: usize,
    /// Grid bounds as fractions of `ω_B`, endpoints excluded.
    pub grid_range: (f64, f64),
}

impl Default for CrossoverParams {
    fn default() -> Self {
        Self {
            m: 100.0,
            theta: FRAC_PI_4,
            phi: 0.0,
            amplitude_ratio: 1.0,
            n_sites: 2500,
            steps: 100_000,
            grid_points: 30,
            grid_range: (0.0, 1.0),
        }
    }
}

impl CrossoverParams {
    pub fn simulation(&self) -> SimulationConfig {
        SimulationConfig::new(
            self.n_sites,
            self.steps,
            CoinParams::new(self.theta),
            FieldConfig::detuned(self.m, self.amplitude_ratio, 0.0, self.phi),
        )
    }

    pub fn grid(&self) -> Vec<f64> {
        let omega_b = TAU / self.m;
        let (lo, hi) = self.grid_range;
        spectral::banded_detuning_grid(omega_b, lo, hi, self.grid_points)
    }
}

pub fn run_crossover(params: &CrossoverParams) -> Result<CrossoverResult> {
    let base = params.simulation();
    base.validate()?;
    let (lo, hi) = params.grid_range;
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(AnalysisError::Invalid(format!(
            "detuning band ({lo}, {hi}) must lie within [0, 1]"
        ))
        .into());
    }
    Ok(spectral::crossover_scan(&base, &params.grid())?)
}

/// The three density-map configurations: static field, small detuning,
/// exact resonance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityParams {
    pub m: f64,
    pub theta: f64,
    pub phi: f64,
    pub n_sites: usize,
    pub steps: usize,
    pub stride: usize,
    /// Detuning for the super-Bloch panel.
    pub detuning: f64,
}

impl Default for DensityParams {
    fn default() -> Self {
        Self {
            m: 100.0,
            theta: FRAC_PI_4,
            phi: 0.0,
            n_sites: 1000,
            steps: 1000,
            stride: 1,
            detuning: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityPanel {
    StaticField,
    SuperBloch,
    Resonant,
}

impl DensityPanel {
    pub const ALL: [DensityPanel; 3] = [
        DensityPanel::StaticField,
        DensityPanel::SuperBloch,
        DensityPanel::Resonant,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            DensityPanel::StaticField => "static",
            DensityPanel::SuperBloch => "sbo",
            DensityPanel::Resonant => "resonant",
        }
    }
}

impl DensityParams {
    pub fn simulation(&self, panel: DensityPanel) -> SimulationConfig {
        let field = match panel {
            DensityPanel::StaticField => FieldConfig::static_field(self.m),
            DensityPanel::SuperBloch => FieldConfig::detuned(self.m, 1.0, self.detuning, self.phi),
            DensityPanel::Resonant => FieldConfig::resonant(self.m, 1.0, self.phi),
        };
        SimulationConfig::new(self.n_sites, self.steps, CoinParams::new(self.theta), field)
    }
}

/// Density maps for the three canonical panels, in [`DensityPanel::ALL`] order.
pub fn density_experiment(params: &DensityParams) -> Result<Vec<(DensityPanel, DensityMap)>> {
    DensityPanel::ALL
        .par_iter()
        .map(|&panel| {
            let mut rec = DensityRecorder::new(params.stride);
            evolve(&params.simulation(panel), &mut [&mut rec])?;
            Ok((panel, rec.into_map()))
        })
        .collect::<std::result::Result<Vec<_>, WalkError>>()
        .map_err(Into::into)
}
