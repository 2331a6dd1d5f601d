//! State representation and single-step evolution of the electrified
//! two-component walk on an open chain.
//!
//! One step applies the coin `[[cos θ, sin θ], [sin θ, -cos θ]]` to the
//! internal state, shifts spin-up one site right and spin-down one site left,
//! then multiplies site `n` by `exp(i G(t) (n - N/2))` with
//! `G(t) = Φ0 + ΔΦ sin(ω t + φ)`. The field operator is sometimes written as
//! `exp(i G n)`; the two forms differ by the site-independent factor
//! `exp(-i G N/2)`, which leaves every probability unchanged.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use num_complex::Complex64 as C64;

use crate::error::WalkError;

pub mod oracle;

pub use oracle::{dense_propagate, dense_unitary_oracle, DENSE_ORACLE_MAX_SITES};

/// Probability allowed within [`EDGE_WIDTH`] sites of either boundary before a
/// step is refused.
pub const EDGE_TOLERANCE: f64 = 1e-8;

/// Number of boundary sites watched by the edge guard on each side.
pub const EDGE_WIDTH: usize = 2;

/// Tolerance on the squared norm of a user-supplied spinor.
pub const SPINOR_NORM_TOLERANCE: f64 = 1e-12;

/// Gate angle of the coin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinParams {
    pub theta: f64,
}

impl CoinParams {
    pub const fn new(theta: f64) -> Self {
        Self { theta }
    }

    pub const fn hadamard() -> Self {
        Self { theta: PI / 4.0 }
    }

    pub fn validate(&self) -> Result<(), WalkError> {
        if self.theta.is_finite() && (0.0..=PI).contains(&self.theta) {
            Ok(())
        } else {
            Err(WalkError::CoinAngle(self.theta))
        }
    }

    /// The real symmetric coin matrix, row major.
    pub fn matrix(&self) -> [[C64; 2]; 2] {
        let (s, c) = self.theta.sin_cos();
        [
            [C64::new(c, 0.0), C64::new(s, 0.0)],
            [C64::new(s, 0.0), C64::new(-c, 0.0)],
        ]
    }
}

impl Default for CoinParams {
    fn default() -> Self {
        Self::hadamard()
    }
}

/// Anything that imprints a position-linear phase increment at each step.
pub trait PhaseDrive {
    /// Phase increment `G` used by the step that takes step `t` to `t + 1`.
    fn phase_at(&self, t: usize) -> f64;
}

/// Superposed static and harmonic phase field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldConfig {
    /// Static field denominator; `Φ0 = 2π/m`.
    pub m: f64,
    /// Harmonic amplitude `ΔΦ` in radians.
    pub delta_phi: f64,
    /// Harmonic angular frequency in radians per step.
    pub omega: f64,
    /// Harmonic phase in radians.
    pub phi: f64,
}

impl FieldConfig {
    pub const fn new(m: f64, delta_phi: f64, omega: f64, phi: f64) -> Self {
        Self {
            m,
            delta_phi,
            omega,
            phi,
        }
    }

    /// Static field only.
    pub const fn static_field(m: f64) -> Self {
        Self::new(m, 0.0, 0.0, 0.0)
    }

    /// Harmonic amplitude `ΔΦ = ratio · Φ0` at frequency `ω_B + detuning`.
    pub fn detuned(m: f64, ratio: f64, detuning: f64, phi: f64) -> Self {
        let phi0 = TAU / m;
        Self::new(m, ratio * phi0, phi0 + detuning, phi)
    }

    /// Harmonic drive with `ΔΦ = ratio · Φ0` exactly at the Bloch frequency.
    pub fn resonant(m: f64, ratio: f64, phi: f64) -> Self {
        Self::detuned(m, ratio, 0.0, phi)
    }

    pub fn validate(&self) -> Result<(), WalkError> {
        let bad = |name, value, reason| {
            Err(WalkError::Field {
                name,
                value,
                reason,
            })
        };
        if !(self.m.is_finite() && self.m > 0.0) {
            return bad("m", self.m, "must be a positive finite number");
        }
        if !self.delta_phi.is_finite() {
            return bad("delta_phi", self.delta_phi, "must be finite");
        }
        if !(self.omega.is_finite() && self.omega >= 0.0) {
            return bad("omega", self.omega, "must be finite and non-negative");
        }
        if !self.phi.is_finite() {
            return bad("phi", self.phi, "must be finite");
        }
        Ok(())
    }

    /// Static phase increment `Φ0 = 2π/m`.
    pub fn phi0(&self) -> f64 {
        TAU / self.m
    }

    /// `ω_B = Φ0`.
    pub fn bloch_frequency(&self) -> f64 {
        self.phi0()
    }

    /// `T_B = m` steps.
    pub fn bloch_period(&self) -> f64 {
        self.m
    }

    /// `ω - ω_B`.
    pub fn detuning(&self) -> f64 {
        self.omega - self.bloch_frequency()
    }

    /// Relative drive strength `δΦ = ΔΦ / Φ0`.
    pub fn relative_amplitude(&self) -> f64 {
        self.delta_phi / self.phi0()
    }
}

impl PhaseDrive for FieldConfig {
    fn phase_at(&self, t: usize) -> f64 {
        self.phi0() + self.delta_phi * (self.omega * t as f64 + self.phi).sin()
    }
}

/// `G ≡ 0`: the plain walk without any field.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NoField;

impl PhaseDrive for NoField {
    fn phase_at(&self, _t: usize) -> f64 {
        0.0
    }
}

impl<F: Fn(usize) -> f64> PhaseDrive for F {
    fn phase_at(&self, t: usize) -> f64 {
        self(t)
    }
}

/// Spinor `(|↑⟩ + i|↓⟩)/√2`, which spreads symmetrically under the Hadamard coin.
pub fn symmetric_spinor() -> [C64; 2] {
    [C64::new(FRAC_1_SQRT_2, 0.0), C64::new(0.0, FRAC_1_SQRT_2)]
}

/// Everything needed to run one walk from a localized initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub n_sites: usize,
    pub origin: usize,
    pub steps: usize,
    pub coin: CoinParams,
    pub field: FieldConfig,
    pub spinor: [C64; 2],
}

impl SimulationConfig {
    /// Walker starting at `N/2` in the symmetric spinor.
    pub fn new(n_sites: usize, steps: usize, coin: CoinParams, field: FieldConfig) -> Self {
        Self {
            n_sites,
            origin: n_sites / 2,
            steps,
            coin,
            field,
            spinor: symmetric_spinor(),
        }
    }

    pub fn with_origin(mut self, origin: usize) -> Self {
        self.origin = origin;
        self
    }

    pub fn with_spinor(mut self, up: C64, down: C64) -> Self {
        self.spinor = [up, down];
        self
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn with_field(mut self, field: FieldConfig) -> Self {
        self.field = field;
        self
    }

    pub fn with_coin(mut self, coin: CoinParams) -> Self {
        self.coin = coin;
        self
    }

    pub fn validate(&self) -> Result<(), WalkError> {
        if self.n_sites < 3 {
            return Err(WalkError::TooFewSites(self.n_sites));
        }
        if self.origin >= self.n_sites {
            return Err(WalkError::OriginOutOfRange {
                origin: self.origin,
                n_sites: self.n_sites,
            });
        }
        let norm = self.spinor[0].norm_sqr() + self.spinor[1].norm_sqr();
        if norm.is_nan() || (norm - 1.0).abs() > SPINOR_NORM_TOLERANCE {
            return Err(WalkError::SpinorNorm(norm));
        }
        self.coin.validate()?;
        self.field.validate()
    }
}

/// Spin-up and spin-down amplitudes over the chain at one instant.
///
/// Besides the amplitudes the state carries the index range `[lo, hi]` outside
/// of which every amplitude is exactly zero. A step widens it by at most one
/// site on each side, so work is confined to the light cone of the initial
/// condition.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkerState {
    up: Vec<C64>,
    down: Vec<C64>,
    lo: usize,
    hi: usize,
}

impl WalkerState {
    pub fn from_amplitudes(up: Vec<C64>, down: Vec<C64>) -> Result<Self, WalkError> {
        if up.len() != down.len() {
            return Err(WalkError::LengthMismatch {
                up: up.len(),
                down: down.len(),
            });
        }
        if up.len() < 3 {
            return Err(WalkError::TooFewSites(up.len()));
        }
        let mut state = Self {
            lo: 0,
            hi: up.len() - 1,
            up,
            down,
        };
        state.tighten_support();
        Ok(state)
    }

    /// Localized state `spinor ⊗ |origin⟩`.
    pub fn localized(n_sites: usize, origin: usize, spinor: [C64; 2]) -> Result<Self, WalkError> {
        if n_sites < 3 {
            return Err(WalkError::TooFewSites(n_sites));
        }
        if origin >= n_sites {
            return Err(WalkError::OriginOutOfRange { origin, n_sites });
        }
        let mut up = vec![C64::new(0.0, 0.0); n_sites];
        let mut down = up.clone();
        up[origin] = spinor[0];
        down[origin] = spinor[1];
        Ok(Self {
            up,
            down,
            lo: origin,
            hi: origin,
        })
    }

    fn zeros(n_sites: usize) -> Self {
        Self {
            up: vec![C64::new(0.0, 0.0); n_sites],
            down: vec![C64::new(0.0, 0.0); n_sites],
            lo: 0,
            hi: 0,
        }
    }

    fn tighten_support(&mut self) {
        let nonzero =
            |n: &usize| self.up[*n] != C64::new(0.0, 0.0) || self.down[*n] != C64::new(0.0, 0.0);
        let n = self.up.len();
        match (0..n).find(nonzero) {
            Some(lo) => {
                self.lo = lo;
                self.hi = (0..n).rev().find(nonzero).unwrap_or(lo);
            }
            None => {
                self.lo = 0;
                self.hi = 0;
            }
        }
    }

    pub fn n_sites(&self) -> usize {
        self.up.len()
    }

    pub fn up(&self) -> &[C64] {
        &self.up
    }

    pub fn down(&self) -> &[C64] {
        &self.down
    }

    /// Inclusive site range that may hold non-zero amplitude.
    pub fn support(&self) -> (usize, usize) {
        (self.lo, self.hi)
    }

    pub fn into_parts(self) -> (Vec<C64>, Vec<C64>) {
        (self.up, self.down)
    }

    /// `Σ_n |up_n|² + |down_n|²`.
    pub fn norm_sqr(&self) -> f64 {
        (self.lo..=self.hi)
            .map(|n| self.up[n].norm_sqr() + self.down[n].norm_sqr())
            .sum()
    }

    /// Probability held by the `EDGE_WIDTH` outermost sites on each side,
    /// as `(left, right)`.
    pub fn edge_probabilities(&self) -> (f64, f64) {
        let n = self.n_sites();
        let width = EDGE_WIDTH.min(n);
        let site = |k: usize| self.up[k].norm_sqr() + self.down[k].norm_sqr();
        let left = if self.lo < width {
            (0..width).map(site).sum()
        } else {
            0.0
        };
        let right = if self.hi >= n - width {
            (n - width..n).map(site).sum()
        } else {
            0.0
        };
        (left, right)
    }

    fn check_edges(&self, step: usize) -> Result<(), WalkError> {
        let (left, right) = self.edge_probabilities();
        let probability = left.max(right);
        if probability > EDGE_TOLERANCE {
            Err(WalkError::EdgeLeak { step, probability })
        } else {
            Ok(())
        }
    }

    /// Coin, shift and field phase with a given increment `g`, written into
    /// `next`. Amplitude pushed past either end of the chain is dropped.
    pub fn step_into(&self, next: &mut WalkerState, coin: &CoinParams, g: f64) {
        let n_sites = self.n_sites();
        debug_assert_eq!(next.n_sites(), n_sites);
        let (s, c) = coin.theta.sin_cos();
        let half = (n_sites / 2) as f64;
        let zero = C64::new(0.0, 0.0);

        // clear whatever the previous contents of `next` occupied
        for n in next.lo..=next.hi {
            next.up[n] = zero;
            next.down[n] = zero;
        }

        let lo = self.lo.saturating_sub(1);
        let hi = (self.hi + 1).min(n_sites - 1);
        let mut phase = PhaseRamp::new(g, lo as f64 - half);
        for n in lo..=hi {
            let p = phase.next();
            if n >= 1 {
                let (u, d) = (self.up[n - 1], self.down[n - 1]);
                next.up[n] = p * (u * c + d * s);
            }
            if n + 1 < n_sites {
                let (u, d) = (self.up[n + 1], self.down[n + 1]);
                next.down[n] = p * (u * s - d * c);
            }
        }
        next.lo = lo;
        next.hi = hi;
    }

    /// One step of the electrified walk using `G` evaluated at the current
    /// step index `t`.
    pub fn step<D: PhaseDrive + ?Sized>(
        &self,
        coin: &CoinParams,
        drive: &D,
        t: usize,
    ) -> Result<WalkerState, WalkError> {
        self.check_edges(t)?;
        let mut next = WalkerState::zeros(self.n_sites());
        self.step_into(&mut next, coin, drive.phase_at(t));
        Ok(next)
    }
}

/// Sequence `exp(i g x0), exp(i g (x0 + 1)), ...`, re-anchored to an exact
/// `sin_cos` every few sites to keep rounding from accumulating.
struct PhaseRamp {
    g: f64,
    x: f64,
    unit: C64,
    current: C64,
    count: usize,
}

impl PhaseRamp {
    const REANCHOR: usize = 16;

    fn new(g: f64, x0: f64) -> Self {
        Self {
            g,
            x: x0,
            unit: C64::cis(g),
            current: C64::cis(g * x0),
            count: 0,
        }
    }

    #[inline]
    fn next(&mut self) -> C64 {
        if self.count == Self::REANCHOR {
            self.current = C64::cis(self.g * self.x);
            self.count = 0;
        }
        let out = self.current;
        self.current *= self.unit;
        self.x += 1.0;
        self.count += 1;
        out
    }
}

/// Callback invoked with the state at `t = 0` and after every step.
pub trait Recorder {
    fn record(&mut self, t: usize, state: &WalkerState);
}

impl<F: FnMut(usize, &WalkerState)> Recorder for F {
    fn record(&mut self, t: usize, state: &WalkerState) {
        self(t, state)
    }
}

/// Initial localized state described by `config`.
pub fn initial_state(config: &SimulationConfig) -> Result<WalkerState, WalkError> {
    config.validate()?;
    WalkerState::localized(config.n_sites, config.origin, config.spinor)
}

/// What to do when the wavefunction approaches the ends of the chain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum EdgePolicy {
    /// Refuse the step with [`WalkError::EdgeLeak`] once more than
    /// [`EDGE_TOLERANCE`] sits within [`EDGE_WIDTH`] sites of a boundary.
    #[default]
    Guard,
    /// Silently drop amplitude shifted past the ends.
    Discard,
}

/// Apply `steps` steps to `state`, handing every intermediate state to the
/// recorders. Returns the final state. Only two buffers are alive at once.
pub fn propagate<D: PhaseDrive + ?Sized>(
    state: WalkerState,
    coin: &CoinParams,
    drive: &D,
    steps: usize,
    recorders: &mut [&mut dyn Recorder],
) -> Result<WalkerState, WalkError> {
    propagate_with(state, coin, drive, steps, EdgePolicy::Guard, recorders)
}

/// [`propagate`] with an explicit boundary policy.
pub fn propagate_with<D: PhaseDrive + ?Sized>(
    state: WalkerState,
    coin: &CoinParams,
    drive: &D,
    steps: usize,
    policy: EdgePolicy,
    recorders: &mut [&mut dyn Recorder],
) -> Result<WalkerState, WalkError> {
    let mut current = state;
    let mut next = WalkerState::zeros(current.n_sites());
    for rec in recorders.iter_mut() {
        rec.record(0, &current);
    }
    for t in 0..steps {
        if policy == EdgePolicy::Guard {
            current.check_edges(t)?;
        }
        current.step_into(&mut next, coin, drive.phase_at(t));
        std::mem::swap(&mut current, &mut next);
        for rec in recorders.iter_mut() {
            rec.record(t + 1, &current);
        }
    }
    Ok(current)
}

/// Run the walk described by `config` from its initial state.
pub fn evolve(
    config: &SimulationConfig,
    recorders: &mut [&mut dyn Recorder],
) -> Result<WalkerState, WalkError> {
    let state = initial_state(config)?;
    propagate(state, &config.coin, &config.field, config.steps, recorders)
}
