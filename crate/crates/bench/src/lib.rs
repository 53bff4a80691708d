//! Fixtures shared by the benchmarks.

use slipflow::modes::eigenmode_comb;
use slipflow::{CombLayout, Cutoff, FlowState, Grid1D, SlipConfig};

/// Unstable configuration used throughout, ξ_c² ≈ 1.47.
pub fn unstable() -> SlipConfig {
    SlipConfig::new(1.0, 1.0, 0.4).expect("valid configuration")
}

pub fn grid(n: usize) -> Grid1D {
    Grid1D::new(n).expect("valid node count")
}

/// Eigenmode comb with unit H² norm scaled by `amplitude`.
pub fn comb_state(cfg: &SlipConfig, grid: &Grid1D, amplitude: f64) -> FlowState {
    let cutoff = Cutoff::new(0.6, 0.3, 1.0).expect("valid cutoff");
    let layout = CombLayout::for_cutoff(&cutoff, 3);
    let s = eigenmode_comb(&cutoff, cfg, grid, &layout, 0.0).expect("comb state");
    let h2 = s.h2_norm();
    s.scaled(amplitude / h2)
}
