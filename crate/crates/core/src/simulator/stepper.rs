use std::sync::Arc;

use nalgebra::{DMatrix, LU};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::state::FlowState;
use crate::error::{Error, Result};
use crate::functionals::Grid1D;
use crate::model::SlipConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    Linear,
    Nonlinear,
}

impl StepMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            StepMode::Linear => "linear",
            StepMode::Nonlinear => "nonlinear",
        }
    }
}

/// Fourier coefficients of -ωu², ωu¹ and |u|²/2 along one quadrature row,
/// with the largest speed on that row.
type QuadRow = (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>, f64);

/// Mass and stiffness of one Fourier mode, interior nodes only.
struct ModeOps {
    stiff: DMatrix<f64>,
    lhs: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    rhs: DMatrix<f64>,
    mass_lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

/// Fourier coefficients of the nonlinear term at the quadrature points,
/// indexed [quad point][n], n = 0..=K.
pub(crate) struct Advection {
    pub n1: Vec<Vec<Complex64>>,
    pub n2: Vec<Vec<Complex64>>,
    /// |u|²/2
    pub head: Vec<Vec<Complex64>>,
    pub max_speed: f64,
}

/// Time stepper for a fixed configuration, period, mode count and dt.
///
/// Each Fourier mode is advanced with Crank–Nicolson for the viscous and
/// wall terms; the nonlinear term is Adams–Bashforth 2 (explicit Euler on
/// the first step). The advection term is evaluated in rotational form on
/// an x grid with at least 3K+1 points, so the Galerkin projection keeps
/// exactly the energy it is given.
pub struct Integrator {
    cfg: SlipConfig,
    grid: Grid1D,
    period: f64,
    n_modes: usize,
    dt: f64,
    mode: StepMode,
    ops: Vec<ModeOps>,
    previous: Option<Vec<Vec<Complex64>>>,
    nx: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Integrator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Integrator")
            .field("cfg", &self.cfg)
            .field("period", &self.period)
            .field("n_modes", &self.n_modes)
            .field("dt", &self.dt)
            .field("mode", &self.mode)
            .field("nx", &self.nx)
            .finish()
    }
}

/// Smallest 2^a 3^b 5^c not below n.
pub fn fft_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

impl Integrator {
    pub fn new(cfg: &SlipConfig, grid: &Grid1D, period: f64, n_modes: usize, dt: f64, mode: StepMode) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidParameter(format!("period must be positive, got {period}")));
        }
        let ops = (0..=n_modes)
            .into_par_iter()
            .map(|n| {
                let xi2 = (2.0 * std::f64::consts::PI * n as f64 / period).powi(2);
                let mass = grid.interior(&grid.kinetic_form(xi2));
                let stiff = grid.interior(&grid.energy_form(cfg, xi2));
                let lhs_m = &mass + &stiff * (0.5 * dt);
                let rhs = &mass - &stiff * (0.5 * dt);
                let lhs = LU::new(lhs_m);
                if !lhs.is_invertible() {
                    return Err(Error::SingularMode(n));
                }
                let mass_lu = LU::new(mass);
                Ok(ModeOps { stiff, lhs, rhs, mass_lu })
            })
            .collect::<Result<Vec<_>>>()?;
        let nx = fft_size(3 * n_modes + 1).max(4);
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(nx);
        let inv = planner.plan_fft_inverse(nx);
        Ok(Self { cfg: *cfg, grid: grid.clone(), period, n_modes, dt, mode, ops, previous: None, nx, fwd, inv })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn mode(&self) -> StepMode {
        self.mode
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn config(&self) -> &SlipConfig {
        &self.cfg
    }

    /// Forget the stored nonlinear term, so the next step starts over with
    /// explicit Euler.
    pub fn reset(&mut self) {
        self.previous = None;
    }

    pub(crate) fn check(&self, state: &FlowState) -> Result<()> {
        if state.period != self.period || state.n_modes() != self.n_modes || !state.grid.same_as(&self.grid) {
            return Err(Error::StateMismatch(format!(
                "integrator has L={}, modes={}, n={}; state has L={}, modes={}, n={}",
                self.period,
                self.n_modes,
                self.grid.n(),
                state.period,
                state.n_modes(),
                state.grid.n()
            )));
        }
        Ok(())
    }

    /// Stacked coefficients, column 0 the mean.
    pub(crate) fn columns(state: &FlowState) -> Vec<Vec<Complex64>> {
        let mut out = Vec::with_capacity(state.n_modes() + 1);
        out.push(state.mean.iter().map(|v| Complex64::new(*v, 0.0)).collect());
        out.extend(state.modes.iter().cloned());
        out
    }

    pub(crate) fn xi(&self, n: usize) -> f64 {
        2.0 * std::f64::consts::PI * n as f64 / self.period
    }

    /// Advection term in rotational form, ω × u = (−ω u², ω u¹), as Fourier
    /// coefficients at the quadrature points.
    pub(crate) fn advection(&self, state: &FlowState) -> Advection {
        let g = &self.grid;
        self.advection_with(state, g.interp(), g.interp_d1(), g.interp_d2())
    }

    /// As [`Integrator::advection`] at the rows of the given value and
    /// derivative operators.
    pub(crate) fn advection_with(
        &self,
        state: &FlowState,
        p: &DMatrix<f64>,
        pd1: &DMatrix<f64>,
        pd2: &DMatrix<f64>,
    ) -> Advection {
        let cols = Self::columns(state);
        let k = self.n_modes;
        let g = &self.grid;
        let (re, im) = split(&cols, g.n());
        let mul = |m: &DMatrix<f64>| (m * &re, m * &im);
        let (p_re, p_im) = mul(p);
        let (d1_re, d1_im) = mul(pd1);
        let (d2_re, d2_im) = mul(pd2);
        let q = p.nrows();
        let nx = self.nx;
        let rows: Vec<QuadRow> = (0..q)
            .into_par_iter()
            .map(|iq| {
                let mut u1 = vec![Complex64::new(0.0, 0.0); nx];
                let mut u2 = vec![Complex64::new(0.0, 0.0); nx];
                let mut om = vec![Complex64::new(0.0, 0.0); nx];
                for n in 0..=k {
                    let xi = self.xi(n);
                    let psi = Complex64::new(p_re[(iq, n)], p_im[(iq, n)]);
                    let d1 = Complex64::new(d1_re[(iq, n)], d1_im[(iq, n)]);
                    let d2 = Complex64::new(d2_re[(iq, n)], d2_im[(iq, n)]);
                    let a = d1;
                    let b = Complex64::new(0.0, -xi) * psi;
                    let w = psi * (xi * xi) - d2;
                    if n == 0 {
                        u1[0] = Complex64::new(a.re, 0.0);
                        om[0] = Complex64::new(w.re, 0.0);
                    } else {
                        u1[n] = a;
                        u2[n] = b;
                        om[n] = w;
                        u1[nx - n] = a.conj();
                        u2[nx - n] = b.conj();
                        om[nx - n] = w.conj();
                    }
                }
                self.inv.process(&mut u1);
                self.inv.process(&mut u2);
                self.inv.process(&mut om);
                let mut speed: f64 = 0.0;
                let mut n1 = vec![Complex64::new(0.0, 0.0); nx];
                let mut n2 = vec![Complex64::new(0.0, 0.0); nx];
                let mut hd = vec![Complex64::new(0.0, 0.0); nx];
                for j in 0..nx {
                    let (a, b, w) = (u1[j].re, u2[j].re, om[j].re);
                    speed = speed.max(a.abs()).max(b.abs());
                    n1[j] = Complex64::new(-w * b, 0.0);
                    n2[j] = Complex64::new(w * a, 0.0);
                    hd[j] = Complex64::new(0.5 * (a * a + b * b), 0.0);
                }
                self.fwd.process(&mut n1);
                self.fwd.process(&mut n2);
                self.fwd.process(&mut hd);
                let s = 1.0 / nx as f64;
                let c1: Vec<Complex64> = n1[..=k].iter().map(|v| v * s).collect();
                let c2: Vec<Complex64> = n2[..=k].iter().map(|v| v * s).collect();
                let c3: Vec<Complex64> = hd[..=k].iter().map(|v| v * s).collect();
                (c1, c2, c3, speed)
            })
            .collect();
        let mut n1 = Vec::with_capacity(q);
        let mut n2 = Vec::with_capacity(q);
        let mut head = Vec::with_capacity(q);
        let mut max_speed: f64 = 0.0;
        for (a, b, c, s) in rows {
            n1.push(a);
            n2.push(b);
            head.push(c);
            max_speed = max_speed.max(s);
        }
        Advection { n1, n2, head, max_speed }
    }

    /// Galerkin load −∫(χ_j' N̂¹_n + iξ_n χ_j N̂²_n) for interior j, per mode.
    pub(crate) fn project(&self, adv: &Advection) -> Vec<Vec<Complex64>> {
        let g = &self.grid;
        let w = g.quad_weights();
        let q = w.len();
        let k = self.n_modes;
        let mut a_re = DMatrix::zeros(q, k + 1);
        let mut a_im = DMatrix::zeros(q, k + 1);
        let mut b_re = DMatrix::zeros(q, k + 1);
        let mut b_im = DMatrix::zeros(q, k + 1);
        for iq in 0..q {
            for n in 0..=k {
                let v1 = adv.n1[iq][n] * w[iq];
                let v2 = adv.n2[iq][n] * w[iq];
                a_re[(iq, n)] = v1.re;
                a_im[(iq, n)] = v1.im;
                b_re[(iq, n)] = v2.re;
                b_im[(iq, n)] = v2.im;
            }
        }
        let pd1t = g.interp_d1().transpose();
        let pt = g.interp().transpose();
        let (f1_re, f1_im) = (&pd1t * &a_re, &pd1t * &a_im);
        let (f2_re, f2_im) = (&pt * &b_re, &pt * &b_im);
        let nn = g.n();
        (0..=k)
            .map(|n| {
                let xi = self.xi(n);
                (1..nn - 1)
                    .map(|j| {
                        let f1 = Complex64::new(f1_re[(j, n)], f1_im[(j, n)]);
                        let f2 = Complex64::new(f2_re[(j, n)], f2_im[(j, n)]);
                        -(f1 + Complex64::new(0.0, xi) * f2)
                    })
                    .collect()
            })
            .collect()
    }

    /// Time derivative of the interior coefficients, M⁻¹(−Aψ + F).
    pub fn time_derivative(&self, state: &FlowState) -> Result<Vec<Vec<Complex64>>> {
        self.check(state)?;
        let cols = Self::columns(state);
        let forcing = match self.mode {
            StepMode::Linear => None,
            StepMode::Nonlinear => Some(self.project(&self.advection(state))),
        };
        let nn = self.grid.n();
        Ok((0..=self.n_modes)
            .map(|n| {
                let op = &self.ops[n];
                let (re, im) = interior_parts(&cols[n], nn);
                let mut r_re = -(&op.stiff * &re);
                let mut r_im = -(&op.stiff * &im);
                if let Some(f) = &forcing {
                    for (j, v) in f[n].iter().enumerate() {
                        r_re[j] += v.re;
                        r_im[j] += v.im;
                    }
                }
                let x_re = op.mass_lu.solve(&r_re).expect("mass matrix is positive definite");
                let x_im = op.mass_lu.solve(&r_im).expect("mass matrix is positive definite");
                let mut out = vec![Complex64::new(0.0, 0.0); nn];
                for j in 0..nn - 2 {
                    out[j + 1] = Complex64::new(x_re[j], if n == 0 { 0.0 } else { x_im[j] });
                }
                out
            })
            .collect())
    }

    /// Largest stable dt from the advective speed at the quadrature points.
    pub fn cfl_bound(&self, state: &FlowState) -> f64 {
        let speed = self.advection(state).max_speed;
        self.cfl_from_speed(speed)
    }

    fn cfl_from_speed(&self, speed: f64) -> f64 {
        let h = self.grid.min_spacing().min(self.period / self.nx as f64);
        if speed == 0.0 {
            f64::INFINITY
        } else {
            0.5 * h / speed
        }
    }

    /// Advance the state by one step in place.
    pub fn step(&mut self, state: &mut FlowState) -> Result<()> {
        self.check(state)?;
        let cols = Self::columns(state);
        let forcing = match self.mode {
            StepMode::Linear => None,
            StepMode::Nonlinear => {
                let adv = self.advection(state);
                let bound = self.cfl_from_speed(adv.max_speed);
                if self.dt > bound {
                    return Err(Error::Cfl { dt: self.dt, bound });
                }
                Some(self.project(&adv))
            }
        };
        let nn = self.grid.n();
        let dt = self.dt;
        let prev = self.previous.as_ref();
        let next: Vec<Vec<Complex64>> = (0..=self.n_modes)
            .into_par_iter()
            .map(|n| {
                let op = &self.ops[n];
                let (re, im) = interior_parts(&cols[n], nn);
                let mut r_re = &op.rhs * &re;
                let mut r_im = &op.rhs * &im;
                if let Some(f) = &forcing {
                    for j in 0..nn - 2 {
                        let v = match prev {
                            Some(p) => f[n][j] * 1.5 - p[n][j] * 0.5,
                            None => f[n][j],
                        };
                        r_re[j] += dt * v.re;
                        r_im[j] += dt * v.im;
                    }
                }
                let x_re = op.lhs.solve(&r_re).expect("step matrix is invertible");
                let x_im = op.lhs.solve(&r_im).expect("step matrix is invertible");
                let mut out = vec![Complex64::new(0.0, 0.0); nn];
                for j in 0..nn - 2 {
                    out[j + 1] = Complex64::new(x_re[j], if n == 0 { 0.0 } else { x_im[j] });
                }
                out
            })
            .collect();
        if forcing.is_some() {
            self.previous = forcing;
        }
        let mut it = next.into_iter();
        state.mean = it.next().unwrap().iter().map(|c| c.re).collect();
        for (dst, src) in state.modes.iter_mut().zip(it) {
            *dst = src;
        }
        state.time += dt;
        Ok(())
    }
}

fn split(cols: &[Vec<Complex64>], n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let k = cols.len();
    let re = DMatrix::from_fn(n, k, |i, j| cols[j][i].re);
    let im = DMatrix::from_fn(n, k, |i, j| cols[j][i].im);
    (re, im)
}

fn interior_parts(v: &[Complex64], n: usize) -> (nalgebra::DVector<f64>, nalgebra::DVector<f64>) {
    let re = nalgebra::DVector::from_fn(n - 2, |i, _| v[i + 1].re);
    let im = nalgebra::DVector::from_fn(n - 2, |i, _| v[i + 1].im);
    (re, im)
}

/// One step from a fresh integrator (explicit Euler for the advection term).
pub fn step(state: &FlowState, cfg: &SlipConfig, dt: f64, mode: StepMode) -> Result<FlowState> {
    let mut it = Integrator::new(cfg, &state.grid, state.period, state.n_modes(), dt, mode)?;
    let mut next = state.clone();
    it.step(&mut next)?;
    Ok(next)
}
