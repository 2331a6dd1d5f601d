//! Continuous-time drift law `v ∝ cos(δΦ cos φ - φ)` and helpers for its
//! extrema, zeros and sign structure.

use std::f64::consts::{PI, TAU};

/// Normalized drift law `cos(δΦ cos φ - φ)`.
pub fn drift_law(relative_amplitude: f64, phi: f64) -> f64 {
    (relative_amplitude * phi.cos() - phi).cos()
}

/// Root of `f` in `[a, b]` by bisection; `f(a)` and `f(b)` must differ in sign.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> Option<f64> {
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 || (b - a) < 1e-15 {
            return Some(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}

/// Phases of maximal positive and negative drift, `(φ1, φ2)` with
/// `φ1 = δΦ cos φ1` and `φ2 = π - φ1`.
pub fn drift_extrema(relative_amplitude: f64) -> (f64, f64) {
    let phi1 = bisect(|p| p - relative_amplitude * p.cos(), -PI / 2.0, PI / 2.0)
        .expect("φ - δΦ cos φ changes sign on [-π/2, π/2]");
    let phi1 = phi1.rem_euclid(TAU);
    (phi1, (PI - phi1).rem_euclid(TAU))
}

/// Zeros of the drift law in `[0, 2π)`, found by scanning a fine grid and
/// bisecting every bracket.
pub fn drift_law_zeros(relative_amplitude: f64) -> Vec<f64> {
    const SCAN: usize = 4096;
    let f = |p: f64| drift_law(relative_amplitude, p);
    let mut out = Vec::new();
    for k in 0..SCAN {
        let a = TAU * k as f64 / SCAN as f64;
        let b = TAU * (k + 1) as f64 / SCAN as f64;
        if f(a) == 0.0 {
            out.push(a);
        } else if f(a).signum() != f(b).signum() && f(b) != 0.0 {
            if let Some(r) = bisect(f, a, b) {
                out.push(r);
            }
        }
    }
    out
}

/// Number of sign changes around a periodic sequence, ignoring entries whose
/// magnitude is within `dead_band`.
pub fn count_sign_changes(values: &[f64], dead_band: f64) -> usize {
    let signs: Vec<f64> = values
        .iter()
        .filter(|v| v.abs() > dead_band)
        .map(|v| v.signum())
        .collect();
    if signs.len() < 2 {
        return 0;
    }
    (0..signs.len())
        .filter(|&i| signs[i] != signs[(i + 1) % signs.len()])
        .count()
}
