//! Observables of a walker state and of recorded state sequences.

use std::ops::RangeInclusive;

use crate::error::AnalysisError;
use crate::walk::{Recorder, WalkerState};

/// Spin-summed site probabilities `P(n) = |up_n|² + |down_n|²`.
pub fn probability_distribution(state: &WalkerState) -> Vec<f64> {
    state
        .up()
        .iter()
        .zip(state.down())
        .map(|(u, d)| u.norm_sqr() + d.norm_sqr())
        .collect()
}

/// Mean lattice position `Σ_n n P(n)`, in absolute site indices.
pub fn centroid(state: &WalkerState) -> f64 {
    let (lo, hi) = state.support();
    let (up, down) = (state.up(), state.down());
    (lo..=hi)
        .map(|n| n as f64 * (up[n].norm_sqr() + down[n].norm_sqr()))
        .sum()
}

/// Centroid sampled once per step; index 0 is the initial state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CentroidTrace {
    pub samples: Vec<f64>,
}

impl CentroidTrace {
    pub fn new(samples: Vec<f64>) -> Self {
        Self { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of steps covered, `len - 1`.
    pub fn steps(&self) -> usize {
        self.samples.len().saturating_sub(1)
    }

    /// Largest minus smallest sample over `window`.
    pub fn peak_to_peak(&self, window: RangeInclusive<usize>) -> f64 {
        let slice = &self.samples[window];
        let max = slice.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = slice.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

/// Site probabilities recorded every `stride` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMap {
    pub stride: usize,
    /// Step index of each row.
    pub times: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

impl DensityMap {
    pub fn n_sites(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Largest `|Σ_n P_t(n) - 1|` over all rows.
    pub fn max_row_defect(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Least-squares slope of the centroid over the inclusive sample window.
pub fn drift_velocity(
    trace: &CentroidTrace,
    window: RangeInclusive<usize>,
) -> Result<f64, AnalysisError> {
    let (start, end) = (*window.start(), *window.end());
    if end >= trace.len() {
        return Err(AnalysisError::WindowOutOfRange {
            start,
            end,
            len: trace.len(),
        });
    }
    if end <= start {
        return Err(AnalysisError::WindowTooShort { start, end });
    }
    let ys = &trace.samples[start..=end];
    let count = ys.len() as f64;
    let t_mean = (start + end) as f64 / 2.0;
    let y_mean = ys.iter().sum::<f64>() / count;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, &y) in ys.iter().enumerate() {
        let dt = (start + k) as f64 - t_mean;
        sxy += dt * (y - y_mean);
        sxx += dt * dt;
    }
    Ok(sxy / sxx)
}

/// Inclusive window `[first · T_B, last · T_B]` spanning whole Bloch periods.
///
/// Fails unless `T_B · (last - first)` rounds to an integer number of steps
/// equal to at least two periods.
pub fn bloch_window(
    bloch_period: f64,
    first: usize,
    last: usize,
) -> Result<RangeInclusive<usize>, AnalysisError> {
    if !(bloch_period.is_finite() && bloch_period >= 1.0) {
        return Err(AnalysisError::Invalid(format!(
            "Bloch period {bloch_period} is not a usable step count"
        )));
    }
    if last < first + 2 {
        return Err(AnalysisError::Invalid(format!(
            "fit window must span at least 2 Bloch periods, got {}",
            last.saturating_sub(first)
        )));
    }
    let start = (first as f64 * bloch_period).round() as usize;
    let end = (last as f64 * bloch_period).round() as usize;
    Ok(start..=end)
}

/// Records the centroid after every step.
#[derive(Debug, Default)]
pub struct CentroidRecorder {
    samples: Vec<f64>,
}

impl CentroidRecorder {
    pub fn with_capacity(steps: usize) -> Self {
        Self {
            samples: Vec::with_capacity(steps + 1),
        }
    }

    pub fn into_trace(self) -> CentroidTrace {
        CentroidTrace::new(self.samples)
    }
}

impl Recorder for CentroidRecorder {
    fn record(&mut self, _t: usize, state: &WalkerState) {
        self.samples.push(centroid(state));
    }
}

/// Records the squared norm after every step.
#[derive(Debug, Default)]
pub struct NormRecorder {
    pub norms: Vec<f64>,
}

impl Recorder for NormRecorder {
    fn record(&mut self, _t: usize, state: &WalkerState) {
        self.norms.push(state.norm_sqr());
    }
}

/// Records the full site distribution every `stride` steps.
#[derive(Debug)]
pub struct DensityRecorder {
    map: DensityMap,
}

impl DensityRecorder {
    pub fn new(stride: usize) -> Self {
        Self {
            map: DensityMap {
                stride: stride.max(1),
                times: Vec::new(),
                rows: Vec::new(),
            },
        }
    }

    pub fn into_map(self) -> DensityMap {
        self.map
    }
}

impl Recorder for DensityRecorder {
    fn record(&mut self, t: usize, state: &WalkerState) {
        if t.is_multiple_of(self.map.stride) {
            self.map.times.push(t);
            self.map.rows.push(probability_distribution(state));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{
        evolve, symmetric_spinor, CoinParams, FieldConfig, NoField, SimulationConfig,
    };
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64 as C64;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn delta_state() {
        let s = WalkerState::localized(1000, 500, symmetric_spinor()).unwrap();
        let p = probability_distribution(&s);
        assert_abs_diff_eq!(p[500], 1.0, epsilon = 1e-15);
        assert_eq!(p.iter().filter(|&&x| x != 0.0).count(), 1);
        assert_abs_diff_eq!(centroid(&s), 500.0, epsilon = 1e-12);
    }

    #[test]
    fn equal_split() {
        let z = C64::new(0.0, 0.0);
        let mut up = vec![z; 10];
        let mut down = vec![z; 10];
        up[3] = C64::new(FRAC_1_SQRT_2, 0.0);
        down[7] = C64::new(FRAC_1_SQRT_2, 0.0);
        let s = WalkerState::from_amplitudes(up, down).unwrap();
        let p = probability_distribution(&s);
        assert_abs_diff_eq!(p[3], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[7], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(centroid(&s), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_pair_centroid() {
        let z = C64::new(0.0, 0.0);
        let mut up = vec![z; 11];
        up[4] = C64::new(FRAC_1_SQRT_2, 0.0);
        up[6] = C64::new(0.0, FRAC_1_SQRT_2);
        let s = WalkerState::from_amplitudes(up, vec![z; 11]).unwrap();
        assert_abs_diff_eq!(centroid(&s), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn hadamard_walk_stays_centered() {
        let start = WalkerState::localized(401, 200, symmetric_spinor()).unwrap();
        let mut worst: f64 = 0.0;
        let mut asym: f64 = 0.0;
        let mut rec = |_t: usize, s: &WalkerState| {
            worst = worst.max((centroid(s) - 200.0).abs());
            let p = probability_distribution(s);
            for k in 0..=199 {
                asym = asym.max((p[200 - k] - p[200 + k]).abs());
            }
        };
        crate::walk::propagate(
            start,
            &CoinParams::hadamard(),
            &NoField,
            190,
            &mut [&mut rec],
        )
        .unwrap();
        assert!(worst < 1e-9, "centroid drifted by {worst}");
        assert!(asym < 1e-12, "asymmetry {asym}");
    }

    #[test]
    fn distribution_sums_to_one_after_evolution() {
        let cfg = SimulationConfig::new(
            300,
            120,
            CoinParams::new(0.9),
            FieldConfig::detuned(37.0, 0.8, 0.01, 0.4),
        );
        let last = evolve(&cfg, &mut []).unwrap();
        assert_abs_diff_eq!(
            probability_distribution(&last).iter().sum::<f64>(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn centroid_paths_agree() {
        let cfg = SimulationConfig::new(
            200,
            80,
            CoinParams::new(1.1),
            FieldConfig::resonant(20.0, 1.0, 0.3),
        );
        let mut rec = |_t: usize, s: &WalkerState| {
            let p = probability_distribution(s);
            let via_p: f64 = p.iter().enumerate().map(|(n, x)| n as f64 * x).sum();
            assert!((via_p - centroid(s)).abs() < 1e-12);
        };
        evolve(&cfg, &mut [&mut rec]).unwrap();
    }

    #[test]
    fn velocity_of_lines() {
        let flat = CentroidTrace::new(vec![3.0; 50]);
        assert_eq!(drift_velocity(&flat, 0..=49).unwrap(), 0.0);
        let line = CentroidTrace::new((0..1000).map(|t| 500.0 - 0.02 * t as f64).collect());
        assert_abs_diff_eq!(
            drift_velocity(&line, 100..=900).unwrap(),
            -0.02,
            epsilon = 1e-12
        );
    }

    #[test]
    fn velocity_window_errors() {
        let line = CentroidTrace::new(vec![0.0; 10]);
        assert_eq!(
            drift_velocity(&line, 2..=10),
            Err(AnalysisError::WindowOutOfRange {
                start: 2,
                end: 10,
                len: 10
            })
        );
        assert_eq!(
            drift_velocity(&line, 4..=4),
            Err(AnalysisError::WindowTooShort { start: 4, end: 4 })
        );
    }

    #[test]
    fn bloch_windows() {
        assert_eq!(bloch_window(100.0, 5, 25).unwrap(), 500..=2500);
        assert_eq!(bloch_window(37.5, 2, 6).unwrap(), 75..=225);
        assert!(bloch_window(100.0, 5, 6).is_err());
        assert!(bloch_window(0.5, 0, 4).is_err());
    }

    #[test]
    fn density_rows_are_normalized_and_strided() {
        let cfg = SimulationConfig::new(
            200,
            50,
            CoinParams::hadamard(),
            FieldConfig::static_field(10.0),
        );
        let mut rec = DensityRecorder::new(7);
        evolve(&cfg, &mut [&mut rec]).unwrap();
        let map = rec.into_map();
        assert_eq!(map.times, (0..=50).step_by(7).collect::<Vec<_>>());
        assert_eq!(map.n_sites(), 200);
        assert!(map.max_row_defect() < 1e-10);
    }
}
