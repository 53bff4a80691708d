//! Principal growth rate λ(ξ²) of the normal-mode problem
//!
//! −λ(ξ²ψ − ψ'') = μ(ψ'''' − 2ξ²ψ'' + ξ⁴ψ), ψ(0) = ψ(1) = 0,
//! ψ''(1) = (k1/μ)ψ'(1), ψ''(0) = −(k0/μ)ψ'(0),
//!
//! solved as the Rayleigh–Ritz minimum of E/J over polynomials vanishing at
//! the walls (the Robin conditions are natural for E), and checked against
//! the boundary determinant of the constant-coefficient ODE.

mod dispersion;

pub use dispersion::{
    dispersion_determinant, dispersion_lambda, neutral_determinant, principal_bracket, principal_dispersion, DispersionRoot, SCAN_SAMPLES,
};

use crate::error::{Error, Result};
use crate::functionals::{pad_interior, Forms, Grid1D, Profile};
use crate::linalg::sym_gen_eig;
use crate::model::SlipConfig;

pub const MIN_EIGEN_NODES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeProblem {
    pub cfg: SlipConfig,
    pub xi2: f64,
}

impl ModeProblem {
    pub fn new(cfg: SlipConfig, xi2: f64) -> Result<Self> {
        if !(xi2 >= 0.0) || !xi2.is_finite() {
            return Err(Error::InvalidParameter(format!("xi2 must be >= 0, got {xi2}")));
        }
        Ok(Self { cfg, xi2 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Discrete,
    Dispersion,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Discrete => "discrete",
            Method::Dispersion => "dispersion",
        }
    }
}

/// Principal eigenpair at one frequency.
#[derive(Debug, Clone)]
pub struct SpectrumPoint {
    pub xi2: f64,
    pub lambda: f64,
    /// vertical amplitude, J(ψ, ξ²) = 1, ψ'(0) ≥ 0
    pub psi: Profile,
    /// horizontal amplitude, ξφ + ψ' = 0; absent at ξ = 0
    pub phi: Option<Profile>,
    /// pressure amplitude; absent at ξ = 0
    pub pi: Option<Profile>,
    pub method: Method,
    /// all discrete eigenvalues, descending (empty for the determinant route)
    pub spectrum: Vec<f64>,
}

/// Largest λ and its eigenfunction by Rayleigh–Ritz.
pub fn solve_principal_eigen(prob: &ModeProblem, grid: &Grid1D) -> Result<SpectrumPoint> {
    if grid.n() < MIN_EIGEN_NODES {
        return Err(Error::GridTooCoarse(format!(
            "eigensolver needs at least {MIN_EIGEN_NODES} nodes, got {}",
            grid.n()
        )));
    }
    let cfg = &prob.cfg;
    let a = grid.interior(&grid.energy_form(cfg, prob.xi2));
    let b = grid.interior(&grid.kinetic_form(prob.xi2));
    let eig = sym_gen_eig(&a, &b)?;
    let spectrum: Vec<f64> = eig.values.iter().map(|t| -t).collect();
    let x: Vec<f64> = eig.vectors.column(0).iter().copied().collect();
    let psi = Profile::new(grid, pad_interior(grid, &x))?;
    let (psi, lambda) = normalize(psi, cfg, prob.xi2);
    let psi = smoothest_vector(prob, grid, lambda, psi)?;
    let mut sp = SpectrumPoint {
        xi2: prob.xi2,
        lambda,
        psi: psi.with_label("psi"),
        phi: None,
        pi: None,
        method: Method::Discrete,
        spectrum,
    };
    if prob.xi2 > 0.0 {
        sp = recover_mode(&sp, prob)?;
    }
    Ok(sp)
}

const COARSE_LADDER: [usize; 4] = [24, 32, 48, 64];

/// The eigenvector with the least rounding noise.
///
/// Dense eigenvectors carry noise of about eps times the condition of the
/// stiffness form, which grows like N⁸ and swamps third and fourth
/// derivatives. The same polynomial solved on a coarser grid is far
/// cleaner when that grid resolves it. Each coarse candidate whose λ agrees
/// with the fine one is embedded exactly and scored by its ODE residual on
/// the fine grid; the best one wins.
fn smoothest_vector(prob: &ModeProblem, grid: &Grid1D, lambda: f64, fine: Profile) -> Result<Profile> {
    let cfg = &prob.cfg;
    let score = |p: &Profile| {
        let sp = SpectrumPoint {
            xi2: prob.xi2,
            lambda,
            psi: p.clone(),
            phi: None,
            pi: None,
            method: Method::Discrete,
            spectrum: Vec::new(),
        };
        mode_residuals(&sp, cfg).ode
    };
    let mut best_score = score(&fine);
    let mut best = fine;
    for &n in COARSE_LADDER.iter().filter(|&&n| n < grid.n()) {
        let g = Grid1D::new(n)?;
        let eig = sym_gen_eig(
            &g.interior(&g.energy_form(cfg, prob.xi2)),
            &g.interior(&g.kinetic_form(prob.xi2)),
        )?;
        let x: Vec<f64> = eig.vectors.column(0).iter().copied().collect();
        let coarse = Profile::new(&g, pad_interior(&g, &x))?;
        let (coarse, l) = normalize(coarse, cfg, prob.xi2);
        if (l - lambda).abs() > 1e-10 * lambda.abs().max(1.0) {
            continue;
        }
        let mut c = g.to_chebyshev(&coarse.values);
        c.resize(grid.n(), 0.0);
        let embedded = Profile::new(grid, grid.from_chebyshev(&c))?;
        let s = score(&embedded);
        if s < best_score {
            best_score = s;
            best = embedded;
        }
    }
    Ok(normalize(best, cfg, prob.xi2).0)
}

/// Scale to J = 1 with ψ'(0) ≥ 0 and return the refined Rayleigh quotient.
fn normalize(psi: Profile, cfg: &SlipConfig, xi2: f64) -> (Profile, f64) {
    let f = Forms::of(&psi);
    let two_j = f.kinetic(xi2);
    let lambda = -f.energy(cfg, xi2) / two_j;
    let mut c = (2.0 / two_j).sqrt();
    let (s0, s1) = psi.end_slopes();
    let lead = if s0.abs() > 1e-8 * s1.abs().max(psi.max_abs()) {
        s0
    } else {
        // antisymmetric-like modes with ψ'(0) ≈ 0: fix the sign of the
        // largest excursion instead
        psi.values
            .iter()
            .copied()
            .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m })
    };
    if lead < 0.0 {
        c = -c;
    }
    (psi.scaled(c), lambda)
}

/// φ = −ψ'/ξ and π = (λφ + μξ²φ − μφ'')/ξ with ξ = +√ξ².
pub fn recover_mode(sp: &SpectrumPoint, prob: &ModeProblem) -> Result<SpectrumPoint> {
    recover_mode_with_xi(sp, &prob.cfg, prob.xi2.sqrt())
}

/// As [`recover_mode`] with an explicit sign of ξ.
pub fn recover_mode_with_xi(sp: &SpectrumPoint, cfg: &SlipConfig, xi: f64) -> Result<SpectrumPoint> {
    if xi == 0.0 || !xi.is_finite() {
        return Err(Error::InvalidParameter(
            "phi and pi are not recoverable at xi = 0".into(),
        ));
    }
    let g = &sp.psi.grid;
    let d1 = g.apply_d1(&sp.psi.values);
    let d3 = g.spectral_derivative(&sp.psi.values, 3);
    let xi2 = xi * xi;
    let phi: Vec<f64> = d1.iter().map(|v| -v / xi).collect();
    // φ'' = −ψ'''/ξ
    let pi: Vec<f64> = phi
        .iter()
        .zip(&d3)
        .map(|(p, t)| (sp.lambda * p + cfg.mu * xi2 * p + cfg.mu * t / xi) / xi)
        .collect();
    let mut out = sp.clone();
    out.phi = Some(Profile::new(g, phi)?.with_label("phi"));
    out.pi = Some(Profile::new(g, pi)?.with_label("pi"));
    Ok(out)
}

/// Residuals of an eigenfunction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeResiduals {
    /// max(|ψ(0)|, |ψ(1)|) / max|ψ|
    pub dirichlet: f64,
    /// Robin conditions on ψ'', relative to max|ψ''|
    pub robin: f64,
    /// fourth-order ODE, relative to its largest term
    pub ode: f64,
    /// second line of the (φ, ψ, π) system, relative to its largest term
    pub momentum: Option<f64>,
    /// max |ξφ + ψ'| / max |ψ'|
    pub divergence: Option<f64>,
}

pub fn mode_residuals(sp: &SpectrumPoint, cfg: &SlipConfig) -> ModeResiduals {
    let g = &sp.psi.grid;
    let v = &sp.psi.values;
    let n = v.len();
    let d: Vec<Vec<f64>> = (0..=4).map(|k| if k == 0 { v.clone() } else { g.spectral_derivative(v, k) }).collect();
    let max_abs = |w: &[f64]| w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let dirichlet = v[0].abs().max(v[n - 1].abs()) / max_abs(v).max(f64::MIN_POSITIVE);
    let r1 = d[2][n - 1] - cfg.k1 / cfg.mu * d[1][n - 1];
    let r0 = d[2][0] + cfg.k0 / cfg.mu * d[1][0];
    let robin = r1.abs().max(r0.abs()) / max_abs(&d[2]).max(f64::MIN_POSITIVE);
    let xi2 = sp.xi2;
    let lam = sp.lambda;
    let mu = cfg.mu;
    let mut ode_res: f64 = 0.0;
    let mut ode_scale: f64 = 0.0;
    for i in 0..n {
        let lhs = -lam * (xi2 * d[0][i] - d[2][i]);
        let rhs = mu * (d[4][i] - 2.0 * xi2 * d[2][i] + xi2 * xi2 * d[0][i]);
        ode_res = ode_res.max((lhs - rhs).abs());
        ode_scale = ode_scale
            .max((lam * xi2 * d[0][i]).abs())
            .max((lam * d[2][i]).abs())
            .max((mu * d[4][i]).abs())
            .max((mu * 2.0 * xi2 * d[2][i]).abs());
    }
    let (momentum, divergence) = match (&sp.phi, &sp.pi) {
        (Some(phi), Some(pi)) if xi2 > 0.0 => {
            let dpi = g.spectral_derivative(&pi.values, 1);
            let mut res: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for i in 0..n {
                let terms = [lam * v[i], dpi[i], mu * xi2 * v[i], -mu * d[2][i]];
                res = res.max(terms.iter().sum::<f64>().abs());
                scale = terms.iter().fold(scale, |m, t| m.max(t.abs()));
            }
            let xi = xi2.sqrt();
            let d1n = g.apply_d1(v);
            let div = phi
                .values
                .iter()
                .zip(&d1n)
                .fold(0.0f64, |m, (p, q)| m.max((xi * p + q).abs()));
            (
                Some(res / scale.max(f64::MIN_POSITIVE)),
                Some(div / max_abs(&d1n).max(f64::MIN_POSITIVE)),
            )
        }
        _ => (None, None),
    };
    ModeResiduals {
        dirichlet,
        robin,
        ode: ode_res / ode_scale.max(f64::MIN_POSITIVE),
        momentum,
        divergence,
    }
}

/// Eigenpair from the boundary determinant: the principal root and the
/// matching null-space combination sampled on `grid`.
pub fn dispersion_mode(prob: &ModeProblem, grid: &Grid1D) -> Result<SpectrumPoint> {
    let root = principal_dispersion(&prob.cfg, prob.xi2)?;
    let coef = dispersion::null_vector(&prob.cfg, prob.xi2, root.lambda);
    let psi = Profile::from_fn(grid, |y| {
        dispersion::eigenfunction_at(&prob.cfg, prob.xi2, root.lambda, &coef, y)
    });
    let (psi, _) = normalize(psi, &prob.cfg, prob.xi2);
    let sp = SpectrumPoint {
        xi2: prob.xi2,
        lambda: root.lambda,
        psi: psi.with_label("psi"),
        phi: None,
        pi: None,
        method: Method::Dispersion,
        spectrum: Vec::new(),
    };
    recover_mode(&sp, prob)
}

/// λ at one frequency with a resolution check: the value on a grid with
/// about twice the nodes must agree to `tol` relative (absolute below 1).
pub fn solve_with_doubling(prob: &ModeProblem, grid: &Grid1D, tol: f64) -> Result<SpectrumPoint> {
    let sp = solve_principal_eigen(prob, grid)?;
    let fine = Grid1D::new(2 * grid.n() - 1)?;
    let sp2 = solve_principal_eigen(prob, &fine)?;
    let change = (sp.lambda - sp2.lambda).abs() / sp2.lambda.abs().max(1.0);
    if change > tol {
        return Err(Error::GridTooCoarse(format!(
            "lambda changed by {change:e} when doubling {} nodes",
            grid.n()
        )));
    }
    Ok(sp)
}

/// λ(ξ²) on a list of frequencies, computed in parallel, input order kept.
pub fn sweep(cfg: &SlipConfig, xi2: &[f64], grid: &Grid1D) -> Result<Vec<SpectrumPoint>> {
    use rayon::prelude::*;
    xi2.par_iter()
        .map(|&x| solve_principal_eigen(&ModeProblem::new(*cfg, x)?, grid))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(k0: f64, k1: f64, mu: f64) -> SlipConfig {
        SlipConfig::new(k0, k1, mu).unwrap()
    }

    #[test]
    fn free_slip_principal_mode() {
        let g = Grid1D::new(64).unwrap();
        let c = cfg(0.0, 0.0, 0.5);
        let sp = solve_principal_eigen(&ModeProblem::new(c, 1.5).unwrap(), &g).unwrap();
        let exact = -0.5 * (std::f64::consts::PI.powi(2) + 1.5);
        assert!((sp.lambda - exact).abs() < 1e-10, "{}", sp.lambda);
    }

    #[test]
    fn pinned_reference_value() {
        let g = Grid1D::new(96).unwrap();
        let sp = solve_principal_eigen(&ModeProblem::new(cfg(1.0, 1.0, 0.05), 1.0).unwrap(), &g).unwrap();
        assert!((sp.lambda - 19.116904298).abs() < 1e-8, "{}", sp.lambda);
        let j = crate::functionals::functional_j(&sp.psi, 1.0).unwrap();
        assert!((j - 1.0).abs() < 1e-10);
    }

    #[test]
    fn coarse_grid_rejected() {
        let g = Grid1D::new(32).unwrap();
        assert!(solve_principal_eigen(&ModeProblem::new(cfg(1.0, 1.0, 1.0), 1.0).unwrap(), &g).is_err());
    }

    #[test]
    fn residuals_are_small() {
        let g = Grid1D::new(96).unwrap();
        let c = cfg(1.0, 1.0, 0.05);
        let sp = solve_principal_eigen(&ModeProblem::new(c, 1.0).unwrap(), &g).unwrap();
        let r = mode_residuals(&sp, &c);
        assert!(r.dirichlet < 1e-14);
        assert!(r.robin < 1e-8, "{r:?}");
        assert!(r.momentum.unwrap() < 1e-6, "{r:?}");
        assert!(r.divergence.unwrap() < 1e-8, "{r:?}");
    }

    #[test]
    fn determinant_eigenfunction_matches() {
        let g = Grid1D::new(96).unwrap();
        let prob = ModeProblem::new(cfg(1.0, -0.5, 0.2), 2.0).unwrap();
        let a = solve_principal_eigen(&prob, &g).unwrap();
        let b = dispersion_mode(&prob, &g).unwrap();
        assert!((a.lambda - b.lambda).abs() < 1e-9 * a.lambda.abs().max(1.0));
        let diff = a.psi.values.iter().zip(&b.psi.values).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(diff < 1e-7 * a.psi.max_abs(), "{diff}");
    }

    #[test]
    fn negative_xi_flips_phi_keeps_pi() {
        let g = Grid1D::new(64).unwrap();
        let c = cfg(1.0, 0.0, 0.2);
        let sp = solve_principal_eigen(&ModeProblem::new(c, 1.0).unwrap(), &g).unwrap();
        let m = recover_mode_with_xi(&sp, &c, -1.0).unwrap();
        let (p, q) = (sp.phi.as_ref().unwrap(), m.phi.as_ref().unwrap());
        assert!(p.values.iter().zip(&q.values).all(|(a, b)| (a + b).abs() < 1e-12));
        let (p, q) = (sp.pi.as_ref().unwrap(), m.pi.as_ref().unwrap());
        assert!(p.values.iter().zip(&q.values).all(|(a, b)| (a - b).abs() < 1e-12 * p.max_abs()));
    }
}
