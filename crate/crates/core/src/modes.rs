//! Growing solutions of the linearized problem built from a band of normal
//! modes, either as a continuous frequency integral or as a periodic comb.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::eigensolver::{solve_principal_eigen, ModeProblem, SpectrumPoint};
use crate::error::{Error, Result};
use crate::functionals::gauss_legendre_on;
use crate::functionals::Grid1D;
use crate::model::SlipConfig;
use crate::simulator::FlowState;
use crate::thresholds::{critical_frequency, growth_envelope_below};

/// Frequency nodes used for the continuous integral.
pub const XI_NODES: usize = 64;

/// Smooth bump in ξ², A·exp(1 − 1/(1 − t²)) with t = (ξ² − center)/halfwidth,
/// zero for |t| ≥ 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub center: f64,
    pub halfwidth: f64,
    pub amplitude: f64,
}

impl Cutoff {
    pub fn new(center: f64, halfwidth: f64, amplitude: f64) -> Result<Self> {
        if !(halfwidth > 0.0) || !center.is_finite() || !halfwidth.is_finite() || !amplitude.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cutoff needs finite center/amplitude and positive halfwidth, got ({center}, {halfwidth}, {amplitude})"
            )));
        }
        Ok(Self { center, halfwidth, amplitude })
    }

    /// (ξ_c²/2, ξ_c²/4) with unit amplitude.
    pub fn default_for(xi_c2: f64) -> Self {
        Self { center: 0.5 * xi_c2, halfwidth: 0.25 * xi_c2, amplitude: 1.0 }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.halfwidth, self.center + self.halfwidth)
    }

    pub fn eval(&self, xi2: f64) -> f64 {
        let t = (xi2 - self.center) / self.halfwidth;
        if t.abs() >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 - 1.0 / (1.0 - t * t)).exp()
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { amplitude: self.amplitude * c, ..*self }
    }

    fn check_inside(&self, xi_c2: f64) -> Result<()> {
        let (a, b) = self.support();
        if !(a > 0.0 && b < xi_c2) {
            return Err(Error::Support { low: a, high: b, limit: xi_c2 });
        }
        Ok(())
    }
}

/// Critical frequency, or the support error if there is none.
fn xi_c2_for(cutoff: &Cutoff, cfg: &SlipConfig, grid: &Grid1D) -> Result<f64> {
    let (a, b) = cutoff.support();
    let cf = critical_frequency(cfg, grid)?.ok_or(Error::Support { low: a, high: b, limit: 0.0 })?;
    Ok(cf.xi_c2)
}

/// Frequency-integral representation of a growing mode.
#[derive(Debug, Clone)]
pub struct SynthesizedMode {
    pub cutoff: Cutoff,
    pub cfg: SlipConfig,
    /// (ξ, weight) of the Gauss–Legendre rule on [√a, √b]
    pub quadrature_xi: Vec<(f64, f64)>,
    pub per_xi_modes: Vec<SpectrumPoint>,
    pub lambda_f: f64,
    pub capital_lambda: f64,
    pub xi_c2: f64,
}

/// Field samples on x_samples × grid nodes, indexed [x][y].
#[derive(Debug, Clone)]
pub struct FieldSamples {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub u1: Vec<Vec<f64>>,
    pub u2: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    /// largest imaginary part left after summing ±ξ
    pub max_imag: f64,
    /// max |∂_x u¹ + ∂_y u²|
    pub divergence: f64,
}

impl SynthesizedMode {
    pub fn build(cutoff: &Cutoff, cfg: &SlipConfig, grid: &Grid1D) -> Result<Self> {
        let xi_c2 = xi_c2_for(cutoff, cfg, grid)?;
        Self::build_below(cutoff, cfg, grid, xi_c2)
    }

    /// As [`SynthesizedMode::build`] with a known ξ_c².
    pub fn build_below(cutoff: &Cutoff, cfg: &SlipConfig, grid: &Grid1D, xi_c2: f64) -> Result<Self> {
        cutoff.check_inside(xi_c2)?;
        let (a, b) = cutoff.support();
        let (x, w) = gauss_legendre_on(XI_NODES, a.sqrt(), b.sqrt());
        let quadrature_xi: Vec<(f64, f64)> = x.into_iter().zip(w).collect();
        let per_xi_modes = quadrature_xi
            .par_iter()
            .map(|&(xi, _)| solve_principal_eigen(&ModeProblem::new(*cfg, xi * xi)?, grid))
            .collect::<Result<Vec<_>>>()?;
        let env = growth_envelope_below(cfg, (a, b), xi_c2, grid)?;
        Ok(Self {
            cutoff: *cutoff,
            cfg: *cfg,
            quadrature_xi,
            per_xi_modes,
            lambda_f: env.lambda_f,
            capital_lambda: env.capital_lambda,
            xi_c2,
        })
    }

    /// u¹ = −(1/2π)∫ f iφ e^{λt+ixξ}, u² = (1/2π)∫ f ψ e^{λt+ixξ},
    /// q = (1/2π)∫ f π e^{λt+ixξ} over ξ ∈ ℝ, with both signs of ξ summed
    /// explicitly.
    pub fn fields(&self, t: f64, xs: &[f64]) -> FieldSamples {
        let grid = &self.per_xi_modes[0].psi.grid;
        let ny = grid.n();
        let mut out = FieldSamples {
            t,
            x: xs.to_vec(),
            y: grid.nodes().to_vec(),
            u1: Vec::with_capacity(xs.len()),
            u2: Vec::with_capacity(xs.len()),
            q: Vec::with_capacity(xs.len()),
            max_imag: 0.0,
            divergence: 0.0,
        };
        let i = Complex64::i();
        for &x in xs {
            let mut u1 = vec![Complex64::new(0.0, 0.0); ny];
            let mut u2 = vec![Complex64::new(0.0, 0.0); ny];
            let mut q = vec![Complex64::new(0.0, 0.0); ny];
            let mut du1 = vec![Complex64::new(0.0, 0.0); ny];
            for ((xi, w), sp) in self.quadrature_xi.iter().zip(&self.per_xi_modes) {
                let amp = self.cutoff.eval(xi * xi) * (sp.lambda * t).exp() * w / (2.0 * PI);
                let phi = &sp.phi.as_ref().expect("xi > 0 modes carry phi").values;
                let pi = &sp.pi.as_ref().expect("xi > 0 modes carry pi").values;
                for sign in [1.0, -1.0] {
                    let k = sign * xi;
                    let e = Complex64::from_polar(amp, k * x);
                    for j in 0..ny {
                        let ph = sign * phi[j];
                        let v1 = -i * ph * e;
                        u1[j] += v1;
                        du1[j] += i * k * v1;
                        u2[j] += sp.psi.values[j] * e;
                        q[j] += pi[j] * e;
                    }
                }
            }
            let re = |v: &[Complex64]| v.iter().map(|c| c.re).collect::<Vec<f64>>();
            let imag = |v: &[Complex64]| v.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
            out.max_imag = out.max_imag.max(imag(&u1)).max(imag(&u2)).max(imag(&q));
            let u2r = re(&u2);
            let dy = grid.apply_d1(&u2r);
            for j in 0..ny {
                out.divergence = out.divergence.max((du1[j].re + dy[j]).abs());
            }
            out.u1.push(re(&u1));
            out.u2.push(u2r);
            out.q.push(re(&q));
        }
        out
    }

    /// ∫∫|u|² over ℝ × (0, 1) by Plancherel, (1/π)∫_{ξ>0} f² ‖(φ, ψ)‖² e^{2λt}.
    pub fn l2_squared(&self, t: f64) -> f64 {
        self.quadrature_xi
            .iter()
            .zip(&self.per_xi_modes)
            .map(|((xi, w), sp)| {
                let f = self.cutoff.eval(xi * xi);
                let phi = sp.phi.as_ref().expect("xi > 0 modes carry phi");
                let g = &sp.psi.grid;
                let m = g.inner(&phi.values, &phi.values) + g.inner(&sp.psi.values, &sp.psi.values);
                w * f * f * m * (2.0 * sp.lambda * t).exp() / PI
            })
            .sum()
    }
}

/// Continuous-integral fields at time t.
pub fn synthesize(cutoff: &Cutoff, cfg: &SlipConfig, t: f64, xs: &[f64], grid: &Grid1D) -> Result<FieldSamples> {
    Ok(SynthesizedMode::build(cutoff, cfg, grid)?.fields(t, xs))
}

/// Period and mode count of the periodic comb ξ_n = 2πn/L.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombLayout {
    pub period: f64,
    pub n_modes: usize,
}

impl CombLayout {
    /// Spacing so that about `points` comb frequencies fall in the support,
    /// with room for twice the highest one.
    pub fn for_cutoff(cutoff: &Cutoff, points: usize) -> Self {
        let (a, b) = cutoff.support();
        let (ra, rb) = (a.max(0.0).sqrt(), b.sqrt());
        let dxi = (rb - ra) / points.max(1) as f64;
        let period = 2.0 * PI / dxi;
        let top = (rb / dxi).floor() as usize;
        Self { period, n_modes: (2 * top).max(8) }
    }

    pub fn xi(&self, n: usize) -> f64 {
        2.0 * PI * n as f64 / self.period
    }
}

/// Comb points per support used by [`normalized_seed`].
pub const DEFAULT_COMB_POINTS: usize = 3;

/// Linear growing solution on the periodic strip at time t,
/// ψ̂_n = (1/L) f(ξ_n²) e^{λ_n t} iψ(ξ_n²)/ξ_n, i.e. the Riemann sum of the
/// frequency integral on the comb.
pub fn comb_state(cutoff: &Cutoff, cfg: &SlipConfig, grid: &Grid1D, layout: &CombLayout, t: f64) -> Result<FlowState> {
    let xi_c2 = xi_c2_for(cutoff, cfg, grid)?;
    comb_state_below(cutoff, cfg, grid, layout, t, xi_c2)
}

pub fn comb_state_below(
    cutoff: &Cutoff,
    cfg: &SlipConfig,
    grid: &Grid1D,
    layout: &CombLayout,
    t: f64,
    xi_c2: f64,
) -> Result<FlowState> {
    cutoff.check_inside(xi_c2)?;
    eigenmode_comb(cutoff, cfg, grid, layout, t)
}

/// Comb of principal eigenmodes of `cfg` weighted by the cutoff, with no
/// support check, so any viscosity is allowed. Each mode satisfies the
/// wall conditions of `cfg`.
pub fn eigenmode_comb(cutoff: &Cutoff, cfg: &SlipConfig, grid: &Grid1D, layout: &CombLayout, t: f64) -> Result<FlowState> {
    let mut state = FlowState::zeros(layout.period, layout.n_modes, grid)?;
    let filled: Vec<(usize, Vec<Complex64>)> = (1..=layout.n_modes)
        .into_par_iter()
        .filter_map(|n| {
            let xi = layout.xi(n);
            let f = cutoff.eval(xi * xi);
            if f == 0.0 {
                return None;
            }
            Some(solve_principal_eigen(&ModeProblem::new(*cfg, xi * xi).ok()?, grid).map(|sp| {
                let c = f * (sp.lambda * t).exp() / layout.period / xi;
                (n, sp.psi.values.iter().map(|v| Complex64::new(0.0, c * v)).collect())
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    for (n, v) in filled {
        state.modes[n - 1] = v;
    }
    state.time = t;
    Ok(state)
}

/// Comb state at t = 0 rescaled to unit H² norm over one period, on the
/// default layout.
pub fn normalized_seed(cutoff: &Cutoff, cfg: &SlipConfig, grid: &Grid1D) -> Result<FlowState> {
    normalized_seed_on(cutoff, cfg, grid, &CombLayout::for_cutoff(cutoff, DEFAULT_COMB_POINTS))
}

pub fn normalized_seed_on(cutoff: &Cutoff, cfg: &SlipConfig, grid: &Grid1D, layout: &CombLayout) -> Result<FlowState> {
    let state = comb_state(cutoff, cfg, grid, layout, 0.0)?;
    let h2 = state.h2_norm();
    if !(h2 > 0.0) || state.is_zero() {
        return Err(Error::ZeroField);
    }
    Ok(state.scaled(1.0 / h2))
}
