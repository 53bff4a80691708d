use super::energy::{EnergyLedger, LedgerBuilder};
use super::state::FlowState;
use super::stepper::{Integrator, StepMode};
use crate::error::{Error, Result};
use crate::functionals::Grid1D;
use crate::model::{critical_viscosity, SlipConfig};
use crate::modes::{normalized_seed_on, CombLayout, Cutoff, DEFAULT_COMB_POINTS};
use crate::thresholds::{critical_frequency, growth_envelope_below, lambda_at, spectral_bound};

/// dt = DT_FACTOR / ρ, ρ the largest |λ| among Λ and the seeded modes.
/// Crank–Nicolson then keeps the per-unit-growth amplitude error near 1e-5.
pub const DT_FACTOR: f64 = 0.02;

/// Grid, step and comb choices shared by the experiments; `None` picks the
/// default.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub grid: Grid1D,
    pub dt: Option<f64>,
    pub layout: Option<CombLayout>,
}

impl RunOptions {
    pub fn new(grid: &Grid1D) -> Self {
        Self { grid: grid.clone(), dt: None, layout: None }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn with_layout(mut self, layout: CombLayout) -> Self {
        self.layout = Some(layout);
        self
    }
}

/// (n, λ(ξ_n²)) for every Fourier mode of the state with nonzero amplitude.
pub fn mode_rates(state: &FlowState, cfg: &SlipConfig) -> Result<Vec<(usize, f64)>> {
    use rayon::prelude::*;
    let mut ns: Vec<usize> = Vec::new();
    if state.mean.iter().any(|v| *v != 0.0) {
        ns.push(0);
    }
    for (i, m) in state.modes.iter().enumerate() {
        if m.iter().any(|v| v.norm() != 0.0) {
            ns.push(i + 1);
        }
    }
    ns.par_iter()
        .map(|&n| Ok((n, lambda_at(cfg, state.xi(n).powi(2), &state.grid)?)))
        .collect()
}

pub fn default_dt(capital_lambda: f64, rates: &[(usize, f64)]) -> f64 {
    let rho = rates.iter().fold(capital_lambda.abs(), |m, (_, l)| m.max(l.abs()));
    DT_FACTOR / rho.max(1e-3)
}

/// Values below this fraction of the first one are rounding noise and are
/// left out of rate fits.
pub const FIT_FLOOR: f64 = 1e-9;

/// Least-squares slope of ln(v) against t, up to the first sample below
/// FIT_FLOOR times the first value.
pub fn fit_rate(t: &[f64], v: &[f64]) -> f64 {
    let floor = v.first().map_or(0.0, |v0| v0.abs() * FIT_FLOOR);
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(v)
        .take_while(|(_, y)| **y > floor)
        .map(|(x, y)| (*x, y.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// −μ‖∇w‖² + Σ k_i ∫|w¹(x, i)|² − Λ‖w‖²; nonpositive when Λ bounds the
/// spectrum.
pub fn key_inequality_gap(state: &FlowState, cfg: &SlipConfig, capital_lambda: f64) -> f64 {
    state.production_rate(cfg) - state.dissipation_rate(cfg) - capital_lambda * state.l2_squared()
}

#[derive(Debug, Clone)]
pub struct EscapeReport {
    pub delta: f64,
    pub epsilon: f64,
    pub escape_time: Option<f64>,
    /// ln(ε/δ)/λ with λ the largest growth rate on the seeded comb
    pub predicted_time: f64,
    pub principal_lambda: f64,
    /// slope of ln‖u‖ while ‖u‖ ≤ 10‖u(0)‖
    pub growth_fit: f64,
    pub lambda_f: f64,
    pub capital_lambda: f64,
    pub dt: f64,
    pub period: f64,
    pub n_modes: usize,
    /// (t, ‖u‖_{L²}) per step
    pub history: Vec<(f64, f64)>,
}

pub fn escape_experiment(cfg: &SlipConfig, cutoff: &Cutoff, delta: f64, epsilon: f64, horizon: f64) -> Result<EscapeReport> {
    let grid = Grid1D::new(crate::eigensolver::MIN_EIGEN_NODES)?;
    escape_experiment_with(cfg, cutoff, delta, epsilon, horizon, &RunOptions::new(&grid))
}

pub fn escape_experiment_with(
    cfg: &SlipConfig,
    cutoff: &Cutoff,
    delta: f64,
    epsilon: f64,
    horizon: f64,
    opts: &RunOptions,
) -> Result<EscapeReport> {
    if !(delta > 0.0 && delta < epsilon) {
        return Err(Error::InvalidParameter(format!("need 0 < delta < epsilon, got {delta}, {epsilon}")));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    let grid = &opts.grid;
    let (a, b) = cutoff.support();
    let cf = critical_frequency(cfg, grid)?.ok_or(Error::Support { low: a, high: b, limit: 0.0 })?;
    let env = growth_envelope_below(cfg, (a, b), cf.xi_c2, grid)?;
    let layout = opts.layout.unwrap_or_else(|| CombLayout::for_cutoff(cutoff, DEFAULT_COMB_POINTS));
    let seed = normalized_seed_on(cutoff, cfg, grid, &layout)?;
    let rates = mode_rates(&seed, cfg)?;
    let principal_lambda = rates.iter().fold(f64::NEG_INFINITY, |m, (_, l)| m.max(*l));
    let dt = opts.dt.unwrap_or_else(|| default_dt(env.capital_lambda, &rates));
    let mut it = Integrator::new(cfg, grid, layout.period, layout.n_modes, dt, StepMode::Nonlinear)?;
    let mut state = seed.scaled(delta);
    let l0 = state.l2_norm();
    let mut history = vec![(0.0, l0)];
    let mut escape_time = None;
    let steps = (horizon / dt).ceil() as usize;
    for _ in 0..steps {
        it.step(&mut state)?;
        let l = state.l2_norm();
        let (t0, l_prev) = *history.last().unwrap();
        history.push((state.time, l));
        if l >= epsilon {
            // log-linear interpolation inside the step
            let s = (epsilon / l_prev).ln() / (l / l_prev).ln();
            escape_time = Some(t0 + s * (state.time - t0));
            break;
        }
    }
    let window: Vec<(f64, f64)> = history.iter().copied().take_while(|(_, l)| *l <= 10.0 * l0).collect();
    let (ts, ls): (Vec<f64>, Vec<f64>) = window.into_iter().unzip();
    Ok(EscapeReport {
        delta,
        epsilon,
        escape_time,
        predicted_time: (epsilon / delta).ln() / principal_lambda,
        principal_lambda,
        growth_fit: fit_rate(&ts, &ls),
        lambda_f: env.lambda_f,
        capital_lambda: env.capital_lambda,
        dt,
        period: layout.period,
        n_modes: layout.n_modes,
        history,
    })
}

#[derive(Debug, Clone)]
pub struct DecayReport {
    pub ledger: EnergyLedger,
    pub l2_rate: f64,
    pub h1_rate: f64,
    pub h2_rate: f64,
    /// sampled sup of λ over ξ² ≥ 0
    pub capital_lambda: f64,
    /// largest one-step increase of ‖u‖_{L²}
    pub max_l2_increase: f64,
    pub dt: f64,
}

impl DecayReport {
    pub fn monotone(&self) -> bool {
        self.max_l2_increase <= 0.0
    }
}

pub fn decay_experiment(cfg: &SlipConfig, seed: &FlowState, horizon: f64) -> Result<DecayReport> {
    decay_experiment_with(cfg, seed, horizon, &RunOptions::new(&seed.grid))
}

pub fn decay_experiment_with(cfg: &SlipConfig, seed: &FlowState, horizon: f64, opts: &RunOptions) -> Result<DecayReport> {
    let mu_c = critical_viscosity(cfg);
    if cfg.mu < mu_c * (1.0 - 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "decay runs need mu >= mu_c = {mu_c}, got {}",
            cfg.mu
        )));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    let (_, capital_lambda) = spectral_bound(cfg, &seed.grid)?;
    let rates = mode_rates(seed, cfg)?;
    let dt = opts.dt.unwrap_or_else(|| default_dt(capital_lambda, &rates));
    let mut it = Integrator::new(cfg, &seed.grid, seed.period, seed.n_modes(), dt, StepMode::Nonlinear)?;
    let mut state = seed.clone();
    let mut ledger = LedgerBuilder::new(cfg);
    ledger.push(&state);
    let steps = (horizon / dt).ceil() as usize;
    let mut max_l2_increase = f64::NEG_INFINITY;
    let mut prev = state.l2_norm();
    for _ in 0..steps {
        if state.is_zero() {
            state.time += dt;
            ledger.push(&state);
            max_l2_increase = max_l2_increase.max(0.0);
            continue;
        }
        it.step(&mut state)?;
        let row = ledger.push(&state);
        max_l2_increase = max_l2_increase.max(row.l2 - prev);
        prev = row.l2;
    }
    let ledger = ledger.finish();
    let t: Vec<f64> = ledger.rows.iter().map(|r| r.time).collect();
    let col = |f: fn(&super::energy::LedgerRow) -> f64| ledger.rows.iter().map(f).collect::<Vec<f64>>();
    let (l2, h1, h2) = (col(|r| r.l2), col(|r| r.h1), col(|r| r.h2));
    Ok(DecayReport {
        l2_rate: fit_rate(&t, &l2),
        h1_rate: fit_rate(&t, &h1),
        h2_rate: fit_rate(&t, &h2),
        capital_lambda,
        max_l2_increase,
        dt,
        ledger,
    })
}
