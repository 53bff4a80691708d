#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slipflow::{FlowState, Grid1D, SlipConfig};

pub fn cfg(k0: f64, k1: f64, mu: f64) -> SlipConfig {
    SlipConfig::new(k0, k1, mu).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// y(1−y) times a short Chebyshev series with decaying random coefficients.
fn smooth_profile(r: &mut ChaCha8Rng, grid: &Grid1D, terms: usize) -> Vec<f64> {
    let c: Vec<f64> = (0..terms).map(|k| r.random_range(-1.0..1.0) / (1.0 + k as f64).powi(2)).collect();
    grid.nodes()
        .iter()
        .map(|&y| {
            let x = 2.0 * y - 1.0;
            let (mut t0, mut t1) = (1.0, x);
            let mut s = c[0];
            for &ck in &c[1..] {
                s += ck * t1;
                let t2 = 2.0 * x * t1 - t0;
                t0 = t1;
                t1 = t2;
            }
            y * (1.0 - y) * s
        })
        .collect()
}

/// Random smooth divergence-free state with wall-normal velocity zero.
pub fn random_state(r: &mut ChaCha8Rng, grid: &Grid1D, period: f64, n_modes: usize) -> FlowState {
    let mut s = FlowState::zeros(period, n_modes, grid).unwrap();
    s.mean = smooth_profile(r, grid, 6);
    for m in s.modes.iter_mut() {
        let a = smooth_profile(r, grid, 6);
        let b = smooth_profile(r, grid, 6);
        *m = a.iter().zip(&b).map(|(x, y)| Complex64::new(*x, *y)).collect();
    }
    s
}

/// Single mode ψ̂₁ = iψ/ξ on the period 2π/ξ, the streamfunction of
/// (u¹, u²) = (−iφ, ψ) e^{iξx}.
pub fn eigenmode_state(psi: &[f64], xi: f64, grid: &Grid1D, n_modes: usize) -> FlowState {
    let mut s = FlowState::zeros(2.0 * std::f64::consts::PI / xi, n_modes, grid).unwrap();
    s.modes[0] = psi.iter().map(|v| Complex64::new(0.0, v / xi)).collect();
    s
}
