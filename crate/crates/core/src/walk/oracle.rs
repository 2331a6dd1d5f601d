//! Dense-matrix reference propagation.
//!
//! Builds the full `2N × 2N` step operator `F_E(t) · S · (C ⊗ I)` for every step
//! and multiplies it into the state vector. Quadratic in `N`, so reserved for
//! small lattices; it shares no code with the banded update in the parent
//! module. The shift is the open-chain one, so on a state that never touches
//! the boundary the product is unitary.

use num_complex::Complex64 as C64;

use super::{initial_state, CoinParams, PhaseDrive, SimulationConfig, WalkerState};
use crate::error::WalkError;

pub const DENSE_ORACLE_MAX_SITES: usize = 64;

const UNITARITY_TOLERANCE: f64 = 1e-12;

/// Row-major square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = DenseMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.dim, v.len());
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn adjoint(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    /// Largest entry of `|A† A - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.adjoint().matmul(self);
        let id = DenseMatrix::identity(self.dim);
        prod.data
            .iter()
            .zip(&id.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

// basis ordering: index 2n is |n, ↑⟩, index 2n + 1 is |n, ↓⟩
fn up_idx(n: usize) -> usize {
    2 * n
}

fn down_idx(n: usize) -> usize {
    2 * n + 1
}

/// `C ⊗ I_P`.
pub fn coin_operator(n_sites: usize, coin: &CoinParams) -> DenseMatrix {
    let c = coin.matrix();
    let mut m = DenseMatrix::zeros(2 * n_sites);
    for n in 0..n_sites {
        m[(up_idx(n), up_idx(n))] = c[0][0];
        m[(up_idx(n), down_idx(n))] = c[0][1];
        m[(down_idx(n), up_idx(n))] = c[1][0];
        m[(down_idx(n), down_idx(n))] = c[1][1];
    }
    m
}

/// Conditional shift on the open chain: `|n, ↑⟩ → |n+1, ↑⟩` and
/// `|n, ↓⟩ → |n-1, ↓⟩`, with the two components that would leave the chain
/// (`|N-1, ↑⟩` and `|0, ↓⟩`) mapped to zero.
pub fn shift_operator(n_sites: usize) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(2 * n_sites);
    for n in 0..n_sites {
        if n + 1 < n_sites {
            m[(up_idx(n + 1), up_idx(n))] = C64::new(1.0, 0.0);
        }
        if n >= 1 {
            m[(down_idx(n - 1), down_idx(n))] = C64::new(1.0, 0.0);
        }
    }
    m
}

/// Largest entry of `|S† S - (I - P)|` where `P` projects onto the two
/// outgoing boundary components. Zero means the shift is an exact isometry on
/// every state that keeps its amplitude off those components.
pub fn shift_isometry_defect(n_sites: usize, shift: &DenseMatrix) -> f64 {
    let mut target = DenseMatrix::identity(2 * n_sites);
    target[(up_idx(n_sites - 1), up_idx(n_sites - 1))] = C64::new(0.0, 0.0);
    target[(down_idx(0), down_idx(0))] = C64::new(0.0, 0.0);
    let prod = shift.adjoint().matmul(shift);
    prod.data
        .iter()
        .zip(&target.data)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

/// Diagonal `exp(i g (n - N/2)) ⊗ I_C`.
pub fn field_operator(n_sites: usize, g: f64) -> DenseMatrix {
    let half = (n_sites / 2) as f64;
    let mut m = DenseMatrix::zeros(2 * n_sites);
    for n in 0..n_sites {
        let p = C64::cis(g * (n as f64 - half));
        m[(up_idx(n), up_idx(n))] = p;
        m[(down_idx(n), down_idx(n))] = p;
    }
    m
}

/// Full step operator `F_E(g) · S · (C ⊗ I)`, with each factor checked:
/// coin and field unitary, shift an isometry away from the boundary.
pub fn step_operator(
    n_sites: usize,
    coin: &CoinParams,
    g: f64,
    t: usize,
) -> Result<DenseMatrix, WalkError> {
    let c = coin_operator(n_sites, coin);
    let s = shift_operator(n_sites);
    let f = field_operator(n_sites, g);
    let deviation = c
        .unitarity_defect()
        .max(f.unitarity_defect())
        .max(shift_isometry_defect(n_sites, &s));
    if deviation > UNITARITY_TOLERANCE {
        return Err(WalkError::NotUnitary { t, deviation });
    }
    Ok(f.matmul(&s).matmul(&c))
}

/// Propagate `state` by `steps` explicit matrix-vector products. No edge guard
/// is applied; amplitude leaving the chain is lost exactly as in
/// [`EdgePolicy::Discard`](super::EdgePolicy::Discard).
pub fn dense_propagate<D: PhaseDrive + ?Sized>(
    state: &WalkerState,
    coin: &CoinParams,
    drive: &D,
    steps: usize,
) -> Result<WalkerState, WalkError> {
    let n_sites = state.n_sites();
    if n_sites > DENSE_ORACLE_MAX_SITES {
        return Err(WalkError::OracleTooLarge {
            n_sites,
            max: DENSE_ORACLE_MAX_SITES,
        });
    }
    let mut v = vec![C64::new(0.0, 0.0); 2 * n_sites];
    for n in 0..n_sites {
        v[up_idx(n)] = state.up()[n];
        v[down_idx(n)] = state.down()[n];
    }
    for t in 0..steps {
        v = step_operator(n_sites, coin, drive.phase_at(t), t)?.apply(&v);
    }
    let up = (0..n_sites).map(|n| v[up_idx(n)]).collect();
    let down = (0..n_sites).map(|n| v[down_idx(n)]).collect();
    WalkerState::from_amplitudes(up, down)
}

/// State after `t` steps of `config`, computed with dense matrices.
pub fn dense_unitary_oracle(config: &SimulationConfig, t: usize) -> Result<WalkerState, WalkError> {
    if config.n_sites > DENSE_ORACLE_MAX_SITES {
        return Err(WalkError::OracleTooLarge {
            n_sites: config.n_sites,
            max: DENSE_ORACLE_MAX_SITES,
        });
    }
    let state = initial_state(config)?;
    dense_propagate(&state, &config.coin, &config.field, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{FieldConfig, NoField};

    #[test]
    fn factors_are_unitary() {
        let n = 9;
        assert!(coin_operator(n, &CoinParams::new(0.4)).unitarity_defect() < 1e-14);
        assert!(field_operator(n, 0.77).unitarity_defect() < 1e-14);
        assert_eq!(shift_isometry_defect(n, &shift_operator(n)), 0.0);
        // the open-chain shift alone is not unitary
        assert!(shift_operator(n).unitarity_defect() > 0.5);
        assert!(step_operator(n, &CoinParams::new(2.1), 0.3, 0).is_ok());
    }

    #[test]
    fn coin_squares_to_identity() {
        let c = coin_operator(4, &CoinParams::new(1.234));
        let sq = c.matmul(&c);
        let id = DenseMatrix::identity(8);
        for i in 0..8 {
            for j in 0..8 {
                assert!((sq[(i, j)] - id[(i, j)]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_steps_is_identity() {
        let cfg = SimulationConfig::new(
            16,
            5,
            CoinParams::hadamard(),
            FieldConfig::static_field(7.0),
        );
        let a = dense_unitary_oracle(&cfg, 0).unwrap();
        assert_eq!(a, initial_state(&cfg).unwrap());
    }

    #[test]
    fn rejects_large_lattice() {
        let cfg = SimulationConfig::new(
            65,
            5,
            CoinParams::hadamard(),
            FieldConfig::static_field(7.0),
        );
        assert_eq!(
            dense_unitary_oracle(&cfg, 1),
            Err(WalkError::OracleTooLarge {
                n_sites: 65,
                max: 64
            })
        );
        let s = initial_state(&cfg).unwrap();
        assert!(dense_propagate(&s, &cfg.coin, &NoField, 1).is_err());
    }
}
