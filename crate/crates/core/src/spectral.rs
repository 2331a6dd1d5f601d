//! Frequency-domain analysis of centroid traces.

use std::f64::consts::{PI, TAU};
use std::fmt;

use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::AnalysisError;
use crate::observables::{CentroidRecorder, CentroidTrace};
use crate::walk::{evolve, SimulationConfig};

/// One-sided amplitude spectrum on the grid `k · 2π/T`, `0 ≤ k ≤ T/2`.
///
/// Magnitudes are scaled so that a mean-free tone `A cos(Ω t)` sitting on a bin
/// shows up with magnitude `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub mags: Vec<f64>,
    /// Bin spacing `2π/T` in radians per step.
    pub resolution: f64,
    /// Number of samples `T` that went into the transform.
    pub n_samples: usize,
}

impl Spectrum {
    /// Bin index closest to `freq`.
    pub fn bin_of(&self, freq: f64) -> usize {
        ((freq / self.resolution).round().max(0.0) as usize).min(self.freqs.len() - 1)
    }

    /// Largest magnitude within `bins` bins of `freq`.
    pub fn magnitude_near(&self, freq: f64, bins: usize) -> f64 {
        let k = self.bin_of(freq);
        let lo = k.saturating_sub(bins);
        let hi = (k + bins).min(self.mags.len() - 1);
        self.mags[lo..=hi].iter().copied().fold(0.0, f64::max)
    }

    /// Local maxima at or above `min_freq`, strongest first.
    pub fn peaks(&self, min_freq: f64) -> Vec<(f64, f64)> {
        let n = self.mags.len();
        let mut out: Vec<(f64, f64)> = (1..n)
            .filter(|&k| self.freqs[k] >= min_freq - 1e-9 * self.resolution)
            .filter(|&k| {
                let m = self.mags[k];
                m > 0.0 && m >= self.mags[k - 1] && (k + 1 == n || m > self.mags[k + 1])
            })
            .map(|k| (self.freqs[k], self.mags[k]))
            .collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
        out
    }

    /// Signal energy `Σ_t y_t²` reconstructed from the one-sided magnitudes.
    pub fn parseval_energy(&self) -> f64 {
        let t = self.n_samples as f64;
        let last = self.mags.len() - 1;
        let nyquist_bin = self.n_samples.is_multiple_of(2);
        let power: f64 = self
            .mags
            .iter()
            .enumerate()
            .map(|(k, a)| {
                if k == 0 || (nyquist_bin && k == last) {
                    a * a
                } else {
                    a * a / 2.0
                }
            })
            .sum();
        power * t
    }
}

/// Spectrum of the mean-subtracted samples, used as given.
pub fn spectrum_of_samples(samples: &[f64]) -> Result<Spectrum, AnalysisError> {
    let t = samples.len();
    if t < 2 {
        return Err(AnalysisError::TraceTooShort(t));
    }
    let mean = samples.iter().sum::<f64>() / t as f64;
    let mut buf: Vec<Complex<f64>> = samples
        .iter()
        .map(|&y| Complex::new(y - mean, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(t).process(&mut buf);

    let half = t / 2;
    let resolution = TAU / t as f64;
    let scale = 1.0 / t as f64;
    let mags = (0..=half)
        .map(|k| {
            let a = buf[k].norm() * scale;
            if k == 0 || (t.is_multiple_of(2) && k == half) {
                a
            } else {
                2.0 * a
            }
        })
        .collect();
    let freqs = (0..=half).map(|k| k as f64 * resolution).collect();
    Ok(Spectrum {
        freqs,
        mags,
        resolution,
        n_samples: t,
    })
}

/// Spectrum of a centroid trace over its first `t_max` samples (steps
/// `0..t_max`), so the bin spacing is `2π/t_max`.
pub fn spectrum(trace: &CentroidTrace) -> Result<Spectrum, AnalysisError> {
    if trace.len() < 2 {
        return Err(AnalysisError::TraceTooShort(trace.len()));
    }
    let used = if trace.len() > 2 { trace.len() - 1 } else { 2 };
    spectrum_of_samples(&trace.samples[..used])
}

/// Frequency of the strongest bin at or above `min_freq`.
pub fn dominant_frequency(spec: &Spectrum, min_freq: f64) -> Result<f64, AnalysisError> {
    if min_freq.is_nan() || min_freq < spec.resolution * (1.0 - 1e-9) {
        return Err(AnalysisError::Invalid(format!(
            "min_freq {min_freq} below the bin spacing {}; DC would be admissible",
            spec.resolution
        )));
    }
    let floor = min_freq - 1e-9 * spec.resolution;
    spec.freqs
        .iter()
        .zip(&spec.mags)
        .filter(|(f, _)| **f >= floor)
        .fold(None, |best: Option<(f64, f64)>, (&f, &m)| match best {
            Some((_, bm)) if bm >= m => best,
            _ => Some((f, m)),
        })
        .map(|(f, _)| f)
        .ok_or(AnalysisError::EmptyRange { min_freq })
}

/// Regime a crossover grid point falls in.
#[derive(Debug, Clone, PartialEq)]
pub enum Branch {
    /// Dominant frequency tracks the detuning.
    SuperBloch,
    /// Dominant frequency sits at `ω_B`.
    Bloch,
    /// Dominant frequency on neither branch.
    Unclassified,
    /// The simulation for this point failed.
    Failed(String),
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Branch::SuperBloch => f.write_str("sbo"),
            Branch::Bloch => f.write_str("bloch"),
            Branch::Unclassified => f.write_str("unclassified"),
            Branch::Failed(msg) => write!(f, "failed: {msg}"),
        }
    }
}

/// Classification tolerance in frequency bins.
pub const BRANCH_TOLERANCE_BINS: f64 = 2.0;

/// Place `dominant` on the super-Bloch branch (tracks `detuning`) or the Bloch
/// branch (sits at `bloch_frequency`), within two bins of `resolution`.
pub fn classify(dominant: f64, detuning: f64, bloch_frequency: f64, resolution: f64) -> Branch {
    let tol = BRANCH_TOLERANCE_BINS * resolution * (1.0 + 1e-9);
    if (dominant - detuning).abs() <= tol {
        Branch::SuperBloch
    } else if (dominant - bloch_frequency).abs() <= tol {
        Branch::Bloch
    } else {
        Branch::Unclassified
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverResult {
    pub m: f64,
    pub theta: f64,
    pub detunings: Vec<f64>,
    /// Dominant centroid frequency per grid point; `None` where the run failed.
    pub dominant: Vec<Option<f64>>,
    pub branches: Vec<Branch>,
    /// Bin spacing used for classification.
    pub resolution: f64,
    /// Midpoint between the last super-Bloch point and the Bloch point that
    /// follows it; `None` when no such pair exists.
    pub crossover: Option<f64>,
}

impl CrossoverResult {
    pub fn bloch_frequency(&self) -> f64 {
        TAU / self.m
    }

    /// `Δω_c / ω_B`.
    pub fn crossover_ratio(&self) -> Option<f64> {
        self.crossover.map(|c| c / self.bloch_frequency())
    }

    /// Indices of points that failed or landed on neither branch.
    pub fn anomalies(&self) -> Vec<usize> {
        self.branches
            .iter()
            .enumerate()
            .filter(|(_, b)| matches!(b, Branch::Unclassified | Branch::Failed(_)))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Locate `Δω_c` from classified grid points.
pub fn locate_crossover(detunings: &[f64], branches: &[Branch]) -> Option<f64> {
    let last_sbo = branches.iter().rposition(|b| *b == Branch::SuperBloch)?;
    let next_bloch = branches[last_sbo + 1..]
        .iter()
        .position(|b| *b == Branch::Bloch)
        .map(|k| last_sbo + 1 + k)?;
    Some(0.5 * (detunings[last_sbo] + detunings[next_bloch]))
}

/// Scan the detuning of the harmonic drive and classify the dominant centroid
/// frequency of each run.
///
/// Every grid point runs `base` with `ω = ω_B + Δω`; all other parameters are
/// taken from `base` unchanged. Points are independent and run on the current
/// rayon pool; results keep the order of `detuning_grid`.
pub fn crossover_scan(
    base: &SimulationConfig,
    detuning_grid: &[f64],
) -> Result<CrossoverResult, AnalysisError> {
    let omega_b = base.field.bloch_frequency();
    if let Some(bad) = detuning_grid.iter().find(|&&d| !(d > 0.0 && d < omega_b)) {
        return Err(AnalysisError::Invalid(format!(
            "detuning {bad} outside (0, ω_B = {omega_b})"
        )));
    }
    if base.steps < 2 {
        return Err(AnalysisError::TraceTooShort(base.steps + 1));
    }
    let resolution = TAU / base.steps as f64;
    let floor = spectral_floor(detuning_grid, resolution);

    let outcomes: Vec<(Option<f64>, Branch)> = detuning_grid
        .par_iter()
        .map(|&dw| {
            let mut cfg = *base;
            cfg.field.omega = omega_b + dw;
            let mut rec = CentroidRecorder::with_capacity(cfg.steps);
            if let Err(e) = evolve(&cfg, &mut [&mut rec]) {
                return (None, Branch::Failed(e.to_string()));
            }
            let dominant = spectrum(&rec.into_trace()).and_then(|s| dominant_frequency(&s, floor));
            match dominant {
                Ok(f) => (Some(f), classify(f, dw, omega_b, resolution)),
                Err(e) => (None, Branch::Failed(e.to_string())),
            }
        })
        .collect();

    let (dominant, branches): (Vec<_>, Vec<_>) = outcomes.into_iter().unzip();
    let crossover = locate_crossover(detuning_grid, &branches);
    Ok(CrossoverResult {
        m: base.field.m,
        theta: base.coin.theta,
        detunings: detuning_grid.to_vec(),
        dominant,
        branches,
        resolution,
        crossover,
    })
}

/// Lowest frequency considered by [`crossover_scan`]: half the smallest
/// detuning on the grid, and at least one bin. Slow secular motion of a
/// partially delocalized packet piles up in the lowest bins and belongs to
/// neither branch.
pub fn spectral_floor(detuning_grid: &[f64], resolution: f64) -> f64 {
    let smallest = detuning_grid.iter().copied().fold(f64::INFINITY, f64::min);
    (0.5 * smallest).max(resolution)
}

/// `count` detunings `ω_B · k/(count + 1)`, `k = 1..=count`, strictly inside
/// `(0, ω_B)`.
pub fn uniform_detuning_grid(bloch_frequency: f64, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|k| bloch_frequency * k as f64 / (count + 1) as f64)
        .collect()
}

/// Same as [`uniform_detuning_grid`] but restricted to the fraction interval
/// `(lo, hi)` of `ω_B`, endpoints excluded.
pub fn banded_detuning_grid(bloch_frequency: f64, lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(0.0 <= lo && lo < hi && hi <= 1.0);
    (1..=count)
        .map(|k| bloch_frequency * (lo + (hi - lo) * k as f64 / (count + 1) as f64))
        .collect()
}

/// Upper edge of the returned frequency axis.
pub const NYQUIST: f64 = PI;
