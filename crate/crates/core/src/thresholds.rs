//! N*(s²), the critical frequency ξ_c², and growth-rate envelopes.

use rayon::prelude::*;

use crate::eigensolver::{solve_principal_eigen, ModeProblem};
use crate::error::{Error, Result};
use crate::functionals::{pad_interior, Forms, Grid1D, Profile};
use crate::linalg::sym_gen_eig;
use crate::model::{critical_viscosity, SlipConfig};

/// sup over admissible ψ of N₁(ψ)/N₂(ψ, s²), with
/// N₁ = k1ψ'(1)² + k0ψ'(0)² − μ∫(ψ'')² and N₂ = μ∫(2(ψ')² + s²ψ²).
pub fn n_star(s2: f64, cfg: &SlipConfig, grid: &Grid1D) -> Result<f64> {
    Ok(n_star_with_profile(s2, cfg, grid)?.0)
}

pub fn n_star_with_profile(s2: f64, cfg: &SlipConfig, grid: &Grid1D) -> Result<(f64, Profile)> {
    if !(s2 >= 0.0) {
        return Err(Error::InvalidParameter(format!("s2 must be >= 0, got {s2}")));
    }
    let num = grid.boundary_form(cfg) - grid.s2() * cfg.mu;
    let den = (grid.s1() * 2.0 + grid.s0() * s2) * cfg.mu;
    let eig = sym_gen_eig(&grid.interior(&num), &grid.interior(&den))?;
    let top = eig.values.len() - 1;
    let x: Vec<f64> = eig.vectors.column(top).iter().copied().collect();
    let p = Profile::new(grid, pad_interior(grid, &x))?;
    let f = Forms::of(&p);
    let n1 = f.boundary(cfg) - cfg.mu * f.i2;
    let n2 = cfg.mu * (2.0 * f.i1 + s2 * f.i0);
    Ok((n1 / n2, p))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalFrequency {
    pub xi_c2: f64,
    pub n_star_at_fixed_point: f64,
    pub iterations: usize,
    pub bracket_history: Vec<(f64, f64)>,
}

const INITIAL_BRACKET: (f64, f64) = (1e-6, 1.0);
const MAX_EXPANSIONS: usize = 64;

/// Fixed point s² = N*(s²), or `None` when μ ≥ μ_c.
///
/// Bisection on s² − N*(s²), which is strictly increasing.
pub fn critical_frequency(cfg: &SlipConfig, grid: &Grid1D) -> Result<Option<CriticalFrequency>> {
    if cfg.mu >= critical_viscosity(cfg) {
        return Ok(None);
    }
    let g = |s: f64| -> Result<f64> { Ok(s - n_star(s, cfg, grid)?) };
    let (mut lo, mut hi) = INITIAL_BRACKET;
    let mut history = Vec::new();
    let mut g_lo = g(lo)?;
    let mut shrinks = 0;
    while g_lo >= 0.0 {
        // root below the initial bracket, only when μ is very close to μ_c
        hi = lo;
        lo *= 0.5;
        shrinks += 1;
        if shrinks > MAX_EXPANSIONS {
            return Err(Error::BracketExpansion { low: lo, high: INITIAL_BRACKET.1 });
        }
        g_lo = g(lo)?;
    }
    let mut expansions = 0;
    while g(hi)? <= 0.0 {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(Error::BracketExpansion { low: INITIAL_BRACKET.0, high: hi });
        }
    }
    history.push((lo, hi));
    let mut iterations = 0;
    while hi - lo > 4.0 * f64::EPSILON * hi && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if g(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
        history.push((lo, hi));
    }
    let xi_c2 = 0.5 * (lo + hi);
    Ok(Some(CriticalFrequency {
        xi_c2,
        n_star_at_fixed_point: n_star(xi_c2, cfg, grid)?,
        iterations,
        bracket_history: history,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthEnvelope {
    /// smallest λ over the support
    pub lambda_f: f64,
    /// λ(0)
    pub capital_lambda: f64,
    pub support: (f64, f64),
}

pub const SAMPLES_PER_DECADE: usize = 64;

/// Points covering [a, b] at the given density per decade, endpoints
/// included, plus a denser tail next to `b`.
pub fn log_samples(a: f64, b: f64, per_decade: usize) -> Vec<f64> {
    if a == b {
        return vec![a];
    }
    let decades = (b / a).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(2);
    let mut v: Vec<f64> = (0..=n)
        .map(|i| a * 10f64.powf(decades * i as f64 / n as f64))
        .collect();
    v[n] = b;
    let step = v[n] - v[n - 1];
    for k in 1..8 {
        v.push(b - step * 0.5f64.powi(k));
    }
    v.sort_by(|x, y| x.total_cmp(y));
    v.dedup();
    v
}

/// λ_f over a support inside (0, ξ_c²) and Λ = λ(0).
pub fn growth_envelope(cfg: &SlipConfig, support: (f64, f64), grid: &Grid1D) -> Result<GrowthEnvelope> {
    let cf = critical_frequency(cfg, grid)?.ok_or(Error::Support {
        low: support.0,
        high: support.1,
        limit: 0.0,
    })?;
    growth_envelope_below(cfg, support, cf.xi_c2, grid)
}

/// As [`growth_envelope`] with a known ξ_c².
pub fn growth_envelope_below(
    cfg: &SlipConfig,
    support: (f64, f64),
    xi_c2: f64,
    grid: &Grid1D,
) -> Result<GrowthEnvelope> {
    let (a, b) = support;
    if !(a > 0.0 && a <= b && b < xi_c2) {
        return Err(Error::Support { low: a, high: b, limit: xi_c2 });
    }
    let samples = log_samples(a, b, SAMPLES_PER_DECADE);
    let lambdas: Vec<f64> = samples
        .par_iter()
        .map(|&x| Ok(solve_principal_eigen(&ModeProblem::new(*cfg, x)?, grid)?.lambda))
        .collect::<Result<_>>()?;
    let lambda_f = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let capital_lambda = lambda_at(cfg, 0.0, grid)?;
    Ok(GrowthEnvelope { lambda_f, capital_lambda, support })
}

pub fn lambda_at(cfg: &SlipConfig, xi2: f64, grid: &Grid1D) -> Result<f64> {
    Ok(solve_principal_eigen(&ModeProblem::new(*cfg, xi2)?, grid)?.lambda)
}

/// Sampled supremum of λ over ξ² ≥ 0 and where it is attained.
///
/// Equal to λ(0) for μ < μ_c. For dissipative walls above μ_c the maximum
/// can sit at positive ξ², so the stable-regime bounds use this value.
pub fn spectral_bound(cfg: &SlipConfig, grid: &Grid1D) -> Result<(f64, f64)> {
    let mut xs = vec![0.0];
    xs.extend(log_samples(1e-4, 1e4, 8));
    let ls: Vec<f64> = xs
        .par_iter()
        .map(|&x| lambda_at(cfg, x, grid))
        .collect::<Result<_>>()?;
    let (imax, _) = ls
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    if imax == 0 {
        return Ok((0.0, ls[0]));
    }
    // golden section between the neighbours of the best sample
    let mut a = xs[imax - 1];
    let mut b = xs[(imax + 1).min(xs.len() - 1)];
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = lambda_at(cfg, c, grid)?;
    let mut fd = lambda_at(cfg, d, grid)?;
    for _ in 0..60 {
        if (b - a) < 1e-10 * b.max(1e-12) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = lambda_at(cfg, c, grid)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = lambda_at(cfg, d, grid)?;
        }
    }
    let (x, v) = if fc > fd { (c, fc) } else { (d, fd) };
    if v >= ls[imax] {
        Ok((x, v))
    } else {
        Ok((xs[imax], ls[imax]))
    }
}
