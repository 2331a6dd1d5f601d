//! Discrete-time quantum walks driven by superposed static and harmonic
//! position-dependent phases.
//!
//! The crate is organised bottom-up:
//!
//! * [`walk`] holds the walker state and the single-step update, plus a dense
//!   reference propagator for small lattices.
//! * [`observables`] extracts site probabilities, centroids and drift
//!   velocities.
//! * [`spectral`] computes centroid spectra, dominant peaks and the
//!   regular/super-Bloch crossover scan.
//! * [`experiments`] bundles the named experiment drivers and sweeps.
//! * [`config`] and [`output`] back the `ewalk` command line.

pub mod config;
pub mod error;
pub mod experiments;
pub mod observables;
pub mod output;
pub mod spectral;
pub mod walk;

pub use error::{AnalysisError, Error, Result, WalkError};
pub use observables::{
    centroid, drift_velocity, probability_distribution, CentroidTrace, DensityMap,
};
pub use spectral::{dominant_frequency, spectrum, CrossoverResult, Spectrum};
pub use walk::{
    evolve, initial_state, propagate, CoinParams, EdgePolicy, FieldConfig, NoField, PhaseDrive,
    Recorder, SimulationConfig, WalkerState,
};
