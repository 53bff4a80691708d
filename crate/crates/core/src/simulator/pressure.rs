use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::state::FlowState;
use super::stepper::{Integrator, StepMode};
use crate::error::{Error, Result};
use crate::model::SlipConfig;

/// Pressure of a state, q = Σ q̂_n(y) e^{iξ_n x} + G·x.
#[derive(Debug, Clone)]
pub struct PressureField {
    pub period: f64,
    /// q̂_n at the grid nodes for n = 1..=n_modes
    pub modes: Vec<Vec<Complex64>>,
    /// q̂₀, zero mean in y
    pub mean: Vec<f64>,
    /// uniform x-gradient G that holds the mean flux at zero
    pub mean_gradient: f64,
    /// momentum residual relative to the largest term
    pub residual: f64,
}

/// Pressure from the Neumann problem for the Stokes system with right side
/// −u_t (linear) or −u_t − u·∇u (nonlinear), u_t from the stepper's own
/// right side at this state.
pub fn recover_pressure(state: &FlowState, mode: StepMode, cfg: &SlipConfig) -> Result<PressureField> {
    let it = Integrator::new(cfg, &state.grid, state.period, state.n_modes(), 1.0, mode)?;
    recover_pressure_with(&it, state)
}

pub fn recover_pressure_with(it: &Integrator, state: &FlowState) -> Result<PressureField> {
    it.check(state)?;
    let cfg = *it.config();
    let g = &state.grid;
    let nn = g.n();
    let k = state.n_modes();
    let nonlinear = it.mode() == StepMode::Nonlinear;
    let cols = Integrator::columns(state);
    let psi_t = it.time_derivative(state)?;
    let eye = DMatrix::<f64>::identity(nn, nn);
    let (quad, nodal) = if nonlinear {
        (Some(it.advection(state)), Some(it.advection_with(state, &eye, g.d1(), g.d2())))
    } else {
        (None, None)
    };
    let w = g.quad_weights();
    let nq = w.len();
    let p = g.interp();
    let pd1 = g.interp_d1();
    let zero = Complex64::new(0.0, 0.0);

    // P = q + |u|²/2 with the rotational advection term
    let mut big_p: Vec<Vec<Complex64>> = Vec::with_capacity(k + 1);
    for n in 0..=k {
        let xi = it.xi(n);
        let mut b = vec![zero; nn];
        if let Some(adv) = &quad {
            for iq in 0..nq {
                let a1 = adv.n1[iq][n] * w[iq];
                let a2 = adv.n2[iq][n] * w[iq];
                for j in 0..nn {
                    b[j] += Complex64::new(0.0, xi) * a1 * p[(iq, j)] - a2 * pd1[(iq, j)];
                }
            }
        }
        if n > 0 {
            let d = g.d1();
            let slope = |i: usize| (0..nn).map(|j| cols[n][j] * d[(i, j)]).sum::<Complex64>();
            b[nn - 1] += Complex64::new(0.0, -xi * cfg.k1) * slope(nn - 1);
            b[0] -= Complex64::new(0.0, xi * cfg.k0) * slope(0);
        }
        let sol = if n == 0 { solve_gauged(g, &b)? } else { solve_neumann(g, xi * xi, &b, n)? };
        big_p.push(sol);
    }

    // momentum residual, and the uniform gradient from the mean balance
    let sd = |v: &[f64], o: usize| g.spectral_derivative(v, o);
    let parts = |v: &[Complex64]| -> (Vec<f64>, Vec<f64>) {
        (v.iter().map(|c| c.re).collect(), v.iter().map(|c| c.im).collect())
    };
    let cd = |v: &[Complex64], o: usize| -> Vec<Complex64> {
        let (r, i) = parts(v);
        sd(&r, o).into_iter().zip(sd(&i, o)).map(|(a, b)| Complex64::new(a, b)).collect()
    };
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let mut mean_gradient = 0.0;
    for n in 0..=k {
        let xi = it.xi(n);
        let ix = Complex64::new(0.0, xi);
        let psi = &cols[n];
        let d1 = cd(psi, 1);
        let d3 = cd(psi, 3);
        let dt1 = cd(&psi_t[n], 1);
        let pp = cd(&big_p[n], 1);
        let d2 = cd(psi, 2);
        let (n1, n2): (Vec<Complex64>, Vec<Complex64>) = match &nodal {
            Some(adv) => ((0..nn).map(|j| adv.n1[j][n]).collect(), (0..nn).map(|j| adv.n2[j][n]).collect()),
            None => (vec![zero; nn], vec![zero; nn]),
        };
        // x: ψ̂_t' + N̂¹ + iξP − μ(ψ̂''' − ξ²ψ̂')
        let mut rx: Vec<Complex64> = (0..nn)
            .map(|j| dt1[j] + n1[j] + ix * big_p[n][j] - (d3[j] - d1[j] * (xi * xi)) * cfg.mu)
            .collect();
        for j in 0..nn {
            scale = scale
                .max(dt1[j].norm())
                .max(n1[j].norm())
                .max((ix * big_p[n][j]).norm())
                .max(cfg.mu * d3[j].norm())
                .max(cfg.mu * xi * xi * d1[j].norm());
        }
        if n == 0 {
            // what remains must be the uniform gradient −G
            let r: Vec<f64> = rx.iter().map(|c| c.re).collect();
            mean_gradient = -g.inner(&r, &vec![1.0; nn]);
            for v in rx.iter_mut() {
                *v += mean_gradient;
            }
        }
        // y: −iξψ̂_t + N̂² + P' − μ(−iξψ̂'' + iξ³ψ̂)
        let ry: Vec<Complex64> = (0..nn)
            .map(|j| -ix * psi_t[n][j] + n2[j] + pp[j] - (-ix * d2[j] + ix * (xi * xi) * psi[j]) * cfg.mu)
            .collect();
        for j in 0..nn {
            scale = scale.max(n2[j].norm()).max(pp[j].norm()).max(cfg.mu * xi * d2[j].norm());
            worst = worst.max(rx[j].norm()).max(ry[j].norm());
        }
    }
    let residual = if scale == 0.0 { 0.0 } else { worst / scale };

    // q = P − |u|²/2
    let mut q = big_p;
    if let Some(adv) = &nodal {
        for (n, v) in q.iter_mut().enumerate() {
            for j in 0..nn {
                v[j] -= adv.head[j][n];
            }
        }
    }
    let mut mean: Vec<f64> = q[0].iter().map(|c| c.re).collect();
    let avg = g.inner(&mean, &vec![1.0; nn]);
    for v in mean.iter_mut() {
        *v -= avg;
    }
    let modes = q.into_iter().skip(1).collect();
    Ok(PressureField { period: state.period, modes, mean, mean_gradient, residual })
}

fn solve_neumann(g: &crate::functionals::Grid1D, xi2: f64, b: &[Complex64], n: usize) -> Result<Vec<Complex64>> {
    let k = g.kinetic_form(xi2);
    let chol = k.cholesky().ok_or(Error::SingularMode(n))?;
    let re = chol.solve(&DVector::from_iterator(b.len(), b.iter().map(|c| c.re)));
    let im = chol.solve(&DVector::from_iterator(b.len(), b.iter().map(|c| c.im)));
    Ok(re.iter().zip(im.iter()).map(|(a, c)| Complex64::new(*a, *c)).collect())
}

/// ∫q'χ' = b with ∫q = 0 as a bordered system.
fn solve_gauged(g: &crate::functionals::Grid1D, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let nn = g.n();
    let ones = vec![1.0; nn];
    let mass: Vec<f64> = (0..nn)
        .map(|j| {
            let mut e = vec![0.0; nn];
            e[j] = 1.0;
            g.inner(&e, &ones)
        })
        .collect();
    let mut m = DMatrix::zeros(nn + 1, nn + 1);
    m.view_mut((0, 0), (nn, nn)).copy_from(g.s1());
    for j in 0..nn {
        m[(nn, j)] = mass[j];
        m[(j, nn)] = mass[j];
    }
    let lu = m.lu();
    let mut rhs = DVector::zeros(nn + 1);
    for j in 0..nn {
        rhs[j] = b[j].re;
    }
    let x = lu.solve(&rhs).ok_or(Error::SingularMode(0))?;
    Ok((0..nn).map(|j| Complex64::new(x[j], 0.0)).collect())
}
