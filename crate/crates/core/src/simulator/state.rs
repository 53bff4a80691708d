use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::functionals::Grid1D;
use crate::model::SlipConfig;

/// Velocity field on the strip [0, L) × [0, 1] in streamfunction form,
///
/// u¹ = ∂_y Ψ, u² = −∂_x Ψ, Ψ = ψ̂₀(y) + Σ_{n≠0} ψ̂_n(y) e^{iξ_n x},
///
/// with ξ_n = 2πn/L and ψ̂_{−n} = conj(ψ̂_n). ψ̂₀ vanishes at both walls, so
/// the mean flow ū = ψ̂₀' carries no net flux.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub period: f64,
    pub grid: Grid1D,
    /// ψ̂_n at the grid nodes for n = 1..=n_modes
    pub modes: Vec<Vec<Complex64>>,
    /// ψ̂₀ at the grid nodes
    pub mean: Vec<f64>,
    pub time: f64,
}

impl FlowState {
    pub fn zeros(period: f64, n_modes: usize, grid: &Grid1D) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidParameter(format!("period must be positive, got {period}")));
        }
        Ok(Self {
            period,
            grid: grid.clone(),
            modes: vec![vec![Complex64::new(0.0, 0.0); grid.n()]; n_modes],
            mean: vec![0.0; grid.n()],
            time: 0.0,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// ξ_n = 2πn/L
    pub fn xi(&self, n: usize) -> f64 {
        2.0 * PI * n as f64 / self.period
    }

    /// ū = ψ̂₀'
    pub fn mean_flow(&self) -> Vec<f64> {
        self.grid.apply_d1(&self.mean)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut s = self.clone();
        s.scale_in_place(c);
        s
    }

    pub fn scale_in_place(&mut self, c: f64) {
        for m in self.modes.iter_mut() {
            for v in m.iter_mut() {
                *v *= c;
            }
        }
        for v in self.mean.iter_mut() {
            *v *= c;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mean.iter().all(|v| *v == 0.0) && self.modes.iter().all(|m| m.iter().all(|v| v.norm() == 0.0))
    }

    fn check_compatible(&self, other: &FlowState) -> Result<()> {
        if self.period != other.period || self.n_modes() != other.n_modes() || self.grid.n() != other.grid.n() {
            return Err(Error::StateMismatch(format!(
                "(L={}, modes={}, n={}) vs (L={}, modes={}, n={})",
                self.period,
                self.n_modes(),
                self.grid.n(),
                other.period,
                other.n_modes(),
                other.grid.n()
            )));
        }
        Ok(())
    }

    /// Σ over n ≥ 0 of weight_n · ψ̂_nᴴ F_n ψ̂_n with F = form(ξ_n²), weight 1 for
    /// the mean and 2 for the conjugate pairs, times L.
    fn cell_form(&self, form: impl Fn(f64) -> DMatrix<f64>) -> f64 {
        let mut acc = quad_real(&form(0.0), &self.mean);
        for (i, m) in self.modes.iter().enumerate() {
            let f = form(self.xi(i + 1).powi(2));
            acc += 2.0 * quad_complex(&f, m);
        }
        self.period * acc
    }

    /// ∫∫|u|² over one period
    pub fn l2_squared(&self) -> f64 {
        let g = &self.grid;
        self.cell_form(|x2| g.kinetic_form(x2))
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_squared().max(0.0).sqrt()
    }

    /// ½‖u‖²
    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.l2_squared()
    }

    /// ∫∫|∇u|²
    pub fn grad_squared(&self) -> f64 {
        let g = &self.grid;
        self.cell_form(|x2| g.s2() + g.s1() * (2.0 * x2) + g.s0() * (x2 * x2))
    }

    /// ∫∫ Σ_ij |∂_i∂_j u|²
    pub fn hessian_squared(&self) -> f64 {
        let g = &self.grid;
        let s0 = g.s0();
        let third = |re: &[f64]| g.spectral_derivative(re, 3);
        let mean3 = third(&self.mean);
        let d2 = |v: &[f64]| quad_real(g.s2(), v);
        let d1 = |v: &[f64]| quad_real(g.s1(), v);
        let d0 = |v: &[f64]| quad_real(s0, v);
        let mut acc = quad_real(s0, &mean3);
        for (i, m) in self.modes.iter().enumerate() {
            let x2 = self.xi(i + 1).powi(2);
            let re: Vec<f64> = m.iter().map(|c| c.re).collect();
            let im: Vec<f64> = m.iter().map(|c| c.im).collect();
            let mut part = 0.0;
            for v in [&re, &im] {
                let t = third(v);
                part += x2.powi(3) * d0(v) + 3.0 * x2 * x2 * d1(v) + 3.0 * x2 * d2(v) + quad_real(s0, &t);
            }
            acc += 2.0 * part;
        }
        self.period * acc
    }

    pub fn h1_norm(&self) -> f64 {
        (self.l2_squared() + self.grad_squared()).max(0.0).sqrt()
    }

    pub fn h2_norm(&self) -> f64 {
        (self.l2_squared() + self.grad_squared() + self.hessian_squared()).max(0.0).sqrt()
    }

    /// μ∫∫|∇u|²
    pub fn dissipation_rate(&self, cfg: &SlipConfig) -> f64 {
        cfg.mu * self.grad_squared()
    }

    /// Σ_i k_i ∫|u¹(x, i)|² dx
    pub fn production_rate(&self, cfg: &SlipConfig) -> f64 {
        let (m0, m1) = self.end_slopes_real(&self.mean);
        let mut acc = cfg.k0 * m0 * m0 + cfg.k1 * m1 * m1;
        for m in &self.modes {
            let (a, b) = self.end_slopes_complex(m);
            acc += 2.0 * (cfg.k0 * a.norm_sqr() + cfg.k1 * b.norm_sqr());
        }
        self.period * acc
    }

    fn end_slopes_real(&self, v: &[f64]) -> (f64, f64) {
        let d1 = self.grid.d1();
        let n = v.len();
        let row = |i: usize| (0..n).map(|j| d1[(i, j)] * v[j]).sum::<f64>();
        (row(0), row(n - 1))
    }

    fn end_slopes_complex(&self, v: &[Complex64]) -> (Complex64, Complex64) {
        let d1 = self.grid.d1();
        let n = v.len();
        let row = |i: usize| (0..n).map(|j| v[j] * d1[(i, j)]).sum::<Complex64>();
        (row(0), row(n - 1))
    }

    /// Largest violation of the Navier-slip conditions over the mean and
    /// all modes, relative to the largest |ψ̂''| in the state.
    pub fn slip_residual(&self, cfg: &SlipConfig) -> f64 {
        let g = &self.grid;
        let (a0, a1) = (cfg.k0 / cfg.mu, cfg.k1 / cfg.mu);
        let check = |v: &[f64]| -> (f64, f64) {
            let d1 = g.spectral_derivative(v, 1);
            let d2 = g.spectral_derivative(v, 2);
            let n = v.len();
            let scale = d2.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let r1 = d2[n - 1] - a1 * d1[n - 1];
            let r0 = d2[0] + a0 * d1[0];
            (r1.abs().max(r0.abs()), scale)
        };
        let (mut worst, mut scale) = check(&self.mean);
        for m in &self.modes {
            for part in [0, 1] {
                let v: Vec<f64> = m.iter().map(|c| if part == 0 { c.re } else { c.im }).collect();
                let (r, s) = check(&v);
                worst = worst.max(r);
                scale = scale.max(s);
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    /// max |ψ̂_n| at the walls; zero by construction of the stepper.
    pub fn wall_normal_velocity(&self) -> f64 {
        let n = self.grid.n();
        let mut worst = self.mean[0].abs().max(self.mean[n - 1].abs());
        for (i, m) in self.modes.iter().enumerate() {
            let xi = self.xi(i + 1);
            worst = worst.max(xi * m[0].norm()).max(xi * m[n - 1].norm());
        }
        worst
    }

    /// max |∂_x u¹ + ∂_y u²| at the nodes, from the mode amplitudes.
    pub fn divergence_residual(&self) -> f64 {
        let g = &self.grid;
        let mut worst: f64 = 0.0;
        for (i, m) in self.modes.iter().enumerate() {
            let xi = self.xi(i + 1);
            let re: Vec<f64> = m.iter().map(|c| c.re).collect();
            let im: Vec<f64> = m.iter().map(|c| c.im).collect();
            let (dr, di) = (g.apply_d1(&re), g.apply_d1(&im));
            for j in 0..m.len() {
                let dpsi = Complex64::new(dr[j], di[j]);
                // iξ ψ̂' + ∂_y(−iξ ψ̂)
                let div = Complex64::i() * xi * dpsi - Complex64::i() * xi * dpsi;
                worst = worst.max(div.norm());
            }
        }
        worst
    }

    /// Velocity (u¹, u²) at the grid nodes for the given x positions,
    /// indexed [x][y].
    pub fn velocity(&self, xs: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let g = &self.grid;
        let ubar = self.mean_flow();
        let derivs: Vec<Vec<Complex64>> = self
            .modes
            .iter()
            .map(|m| {
                let re: Vec<f64> = m.iter().map(|c| c.re).collect();
                let im: Vec<f64> = m.iter().map(|c| c.im).collect();
                let (dr, di) = (g.apply_d1(&re), g.apply_d1(&im));
                dr.iter().zip(&di).map(|(a, b)| Complex64::new(*a, *b)).collect()
            })
            .collect();
        let mut u1 = Vec::with_capacity(xs.len());
        let mut u2 = Vec::with_capacity(xs.len());
        for &x in xs {
            let mut r1 = ubar.clone();
            let mut r2 = vec![0.0; g.n()];
            for (i, m) in self.modes.iter().enumerate() {
                let xi = self.xi(i + 1);
                let e = Complex64::from_polar(1.0, xi * x);
                for j in 0..g.n() {
                    r1[j] += 2.0 * (derivs[i][j] * e).re;
                    r2[j] += 2.0 * (Complex64::new(0.0, -xi) * m[j] * e).re;
                }
            }
            u1.push(r1);
            u2.push(r2);
        }
        (u1, u2)
    }

    pub fn add_assign(&mut self, other: &FlowState) -> Result<()> {
        self.check_compatible(other)?;
        for (a, b) in self.modes.iter_mut().zip(&other.modes) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (x, y) in self.mean.iter_mut().zip(&other.mean) {
            *x += y;
        }
        Ok(())
    }

    /// Largest |difference| of mode amplitudes relative to the larger state.
    pub fn relative_difference(&self, other: &FlowState) -> Result<f64> {
        self.check_compatible(other)?;
        let mut diff: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (a, b) in self.modes.iter().zip(&other.modes) {
            for (x, y) in a.iter().zip(b) {
                diff = diff.max((x - y).norm());
                scale = scale.max(x.norm()).max(y.norm());
            }
        }
        for (x, y) in self.mean.iter().zip(&other.mean) {
            diff = diff.max((x - y).abs());
            scale = scale.max(x.abs()).max(y.abs());
        }
        Ok(if scale == 0.0 { 0.0 } else { diff / scale })
    }
}

pub(crate) fn quad_real(m: &DMatrix<f64>, v: &[f64]) -> f64 {
    let x = DVector::from_column_slice(v);
    x.dot(&(m * &x))
}

pub(crate) fn quad_complex(m: &DMatrix<f64>, v: &[Complex64]) -> f64 {
    let re: Vec<f64> = v.iter().map(|c| c.re).collect();
    let im: Vec<f64> = v.iter().map(|c| c.im).collect();
    quad_real(m, &re) + quad_real(m, &im)
}
