//! Boundary determinant for the constant-coefficient form of the mode ODE.
//!
//! Solutions of μ(D² − ξ²)²ψ = λ(D² − ξ²)ψ are spanned by cosh ξy, sinh ξy
//! and cosh my, sinh my with m² = κ = ξ² + λ/μ. The last two are replaced by
//! divided differences in κ against κ₀ = ξ², which span the same space for
//! κ ≠ κ₀, reduce to the confluent pair y·sinh ξy, y·cosh ξy at κ = κ₀, and
//! keep the determinant entire in λ.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::SlipConfig;

/// C(z) = cosh √z, continued to z < 0 as cos √−z.
pub(crate) fn c_fn(z: f64) -> f64 {
    if z >= 0.0 {
        z.sqrt().cosh()
    } else {
        (-z).sqrt().cos()
    }
}

/// S(z) = sinh √z / √z, continued to z < 0 as sin √−z / √−z.
pub(crate) fn s_fn(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 + z / 6.0 + z * z / 120.0
    } else if z > 0.0 {
        let r = z.sqrt();
        r.sinh() / r
    } else {
        let r = (-z).sqrt();
        r.sin() / r
    }
}

/// (F(z) − F(z0)) / (z − z0) for F = C (`odd = false`) or F = S (`odd = true`).
pub(crate) fn divided_difference(z: f64, z0: f64, odd: bool) -> f64 {
    let d = z - z0;
    if d.abs() > 0.5 * z0.abs().max(1.0) {
        let f = if odd { s_fn } else { c_fn };
        return (f(z) - f(z0)) / d;
    }
    // Σ_j h_j / (2j)! or / (2j+1)!, h_j = Σ_{i<j} z^i z0^{j-1-i}
    let mut h = 1.0;
    let mut z0_pow = 1.0;
    let mut fact = if odd { 6.0 } else { 2.0 };
    let mut sum = h / fact;
    for j in 2..400usize {
        z0_pow *= z0;
        h = z0_pow + z * h;
        let jf = j as f64;
        fact *= if odd {
            (2.0 * jf) * (2.0 * jf + 1.0)
        } else {
            (2.0 * jf - 1.0) * (2.0 * jf)
        };
        let term = h / fact;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() && j > 3 {
            break;
        }
    }
    sum
}

/// The 3×3 block left after eliminating ψ(0) = 0, columns
/// [s(κ₀), Δc, Δs] and rows [ψ(1), ψ''(0) + (k0/μ)ψ'(0), ψ''(1) − (k1/μ)ψ'(1)].
pub(crate) fn boundary_block(cfg: &SlipConfig, xi2: f64, lambda: f64) -> [[f64; 3]; 3] {
    let k0 = cfg.k0 / cfg.mu;
    let k1 = cfg.k1 / cfg.mu;
    let kap0 = xi2;
    let kap = xi2 + lambda / cfg.mu;
    let c0 = c_fn(kap0);
    let s0 = s_fn(kap0);
    let c = c_fn(kap);
    let s = s_fn(kap);
    let dc = divided_difference(kap, kap0, false);
    let ds = divided_difference(kap, kap0, true);
    [
        [s0, dc, ds],
        [k0, 1.0, 0.0],
        [
            kap0 * s0 - k1 * c0,
            (c + kap0 * dc) - k1 * (s + kap0 * ds),
            (s + kap0 * ds) - k1 * dc,
        ],
    ]
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Determinant and its size relative to the product of column norms.
pub(crate) fn scaled_determinant(cfg: &SlipConfig, xi2: f64, lambda: f64) -> (f64, f64) {
    let m = boundary_block(cfg, xi2, lambda);
    let d = det3(&m);
    let mut scale = 1.0;
    for j in 0..3 {
        let norm = (0..3).map(|i| m[i][j] * m[i][j]).sum::<f64>().sqrt();
        scale *= norm.max(f64::MIN_POSITIVE);
    }
    (d, d.abs() / scale)
}

/// Boundary determinant at (ξ², λ) and its size relative to the column
/// norms of the boundary matrix.
pub fn dispersion_determinant(cfg: &SlipConfig, xi2: f64, lambda: f64) -> (f64, f64) {
    scaled_determinant(cfg, xi2, lambda)
}

/// Boundary determinant at λ = 0, relative to its column norms, as a
/// function of ξ². Vanishes exactly at the critical frequency.
///
/// For ξ ≥ 1 the basis is {e^{−ξy}, y e^{−ξy}, e^{−ξ(1−y)}, (1−y) e^{−ξ(1−y)}},
/// which stays well conditioned where cosh/sinh columns become parallel.
pub fn neutral_determinant(cfg: &SlipConfig, xi2: f64) -> f64 {
    let xi = xi2.sqrt();
    if xi < 1.0 {
        let (d, rel) = scaled_determinant(cfg, xi2, 0.0);
        return d.signum() * rel;
    }
    let e = (-xi).exp();
    let (a0, a1) = (cfg.k0 / cfg.mu, cfg.k1 / cfg.mu);
    // (value, slope, curvature) at y = 0 and y = 1 for each basis function
    let cols = [
        [(1.0, -xi, xi2), (e, -xi * e, xi2 * e)],
        [(0.0, 1.0, -2.0 * xi), (e, (1.0 - xi) * e, (xi2 - 2.0 * xi) * e)],
        [(e, xi * e, xi2 * e), (1.0, xi, xi2)],
        [(e, (xi - 1.0) * e, (xi2 - 2.0 * xi) * e), (0.0, -1.0, -2.0 * xi)],
    ];
    let mut m = nalgebra::Matrix4::zeros();
    for (j, [l, r]) in cols.iter().enumerate() {
        m[(0, j)] = l.0;
        m[(1, j)] = r.0;
        m[(2, j)] = l.2 + a0 * l.1;
        m[(3, j)] = r.2 - a1 * r.1;
    }
    let scale: f64 = (0..4).map(|j| m.column(j).norm()).product();
    m.determinant() / scale
}

/// Root of the boundary determinant in λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionRoot {
    pub lambda: f64,
    /// m with m² = ξ² + λ/μ
    pub m: Complex64,
    pub det_residual: f64,
}

pub const SCAN_SAMPLES: usize = 4000;

/// All sign changes of the boundary determinant in `bracket`, each refined
/// by bisection to 1e-12 (relative for |λ| > 1).
pub fn dispersion_lambda(
    cfg: &SlipConfig,
    xi2: f64,
    bracket: (f64, f64),
) -> Result<Vec<DispersionRoot>> {
    let (lo, hi) = bracket;
    if !(xi2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dispersion oracle needs xi2 > 0, got {xi2}"
        )));
    }
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::InvalidParameter(format!(
            "bracket [{lo}, {hi}] is not a finite interval"
        )));
    }
    let eval = |l: f64| -> Result<f64> {
        let (d, _) = scaled_determinant(cfg, xi2, l);
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::Degenerate(l))
        }
    };
    let mut roots = Vec::new();
    let h = (hi - lo) / SCAN_SAMPLES as f64;
    let mut a = lo;
    let mut fa = eval(a)?;
    for i in 1..=SCAN_SAMPLES {
        let b = if i == SCAN_SAMPLES { hi } else { lo + h * i as f64 };
        let fb = eval(b)?;
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            roots.push(bisect(&eval, a, b, fa)?);
        }
        a = b;
        fa = fb;
    }
    if fa == 0.0 {
        roots.push(hi);
    }
    Ok(roots
        .into_iter()
        .map(|l| {
            let kap = Complex64::new(xi2 + l / cfg.mu, 0.0);
            DispersionRoot {
                lambda: l,
                m: kap.sqrt(),
                det_residual: scaled_determinant(cfg, xi2, l).1,
            }
        })
        .collect())
}

fn bisect(f: &impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, mut fa: f64) -> Result<f64> {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a) <= 1e-12 * m.abs().max(1.0) || m == a || m == b {
            break;
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Ok(0.5 * (a + b))
}

/// Bracket certain to contain the principal eigenvalue: the Rayleigh
/// quotient of sin πy from below and C₀ from above.
pub fn principal_bracket(cfg: &SlipConfig, xi2: f64) -> (f64, f64) {
    let p2 = std::f64::consts::PI.powi(2);
    let e2 = cfg.mu * (p2 * p2 + 2.0 * xi2 * p2 + xi2 * xi2) / 2.0 - (cfg.k0 + cfg.k1) * p2;
    let j2 = (xi2 + p2) / 2.0;
    let lower = -e2 / j2;
    (lower - 1.0, crate::model::constant_c0(cfg) + 1.0)
}

/// Largest root of the boundary determinant.
pub fn principal_dispersion(cfg: &SlipConfig, xi2: f64) -> Result<DispersionRoot> {
    let bracket = principal_bracket(cfg, xi2);
    let roots = dispersion_lambda(cfg, xi2, bracket)?;
    roots
        .into_iter()
        .max_by(|a, b| a.lambda.total_cmp(&b.lambda))
        .ok_or_else(|| {
            Error::NoConvergence(format!(
                "no determinant root in [{}, {}]",
                bracket.0, bracket.1
            ))
        })
}

/// Coefficients (s(κ₀), Δc, Δs) of the null vector at a root.
pub(crate) fn null_vector(cfg: &SlipConfig, xi2: f64, lambda: f64) -> [f64; 3] {
    let m = boundary_block(cfg, xi2, lambda);
    let cross = |a: &[f64; 3], b: &[f64; 3]| {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    };
    let norm = |v: &[f64; 3]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let unit = |v: &[f64; 3]| {
        let n = norm(v).max(f64::MIN_POSITIVE);
        [v[0] / n, v[1] / n, v[2] / n]
    };
    let rows = [unit(&m[0]), unit(&m[1]), unit(&m[2])];
    let mut best = [0.0; 3];
    let mut best_norm = -1.0;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let c = cross(&rows[i], &rows[j]);
        let n = norm(&c);
        if n > best_norm {
            best_norm = n;
            best = c;
        }
    }
    best
}

/// Eigenfunction at a root, evaluated at `y`.
pub(crate) fn eigenfunction_at(cfg: &SlipConfig, xi2: f64, lambda: f64, coef: &[f64; 3], y: f64) -> f64 {
    let kap0 = xi2;
    let kap = xi2 + lambda / cfg.mu;
    let y2 = y * y;
    let s = y * s_fn(kap0 * y2);
    let dc = y2 * divided_difference(kap * y2, kap0 * y2, false);
    let ds = y * y2 * divided_difference(kap * y2, kap0 * y2, true);
    coef[0] * s + coef[1] * dc + coef[2] * ds
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn divided_difference_branches_agree() {
        for &(z0, dz) in &[(1.0, 0.49), (1.0, 0.51), (30.0, 14.9), (30.0, 15.1), (0.2, -0.49)] {
            let z = z0 + dz;
            for odd in [false, true] {
                let f = if odd { s_fn } else { c_fn };
                let direct = (f(z) - f(z0)) / (z - z0);
                let series = divided_difference(z, z0, odd);
                assert!((direct - series).abs() < 1e-12 * direct.abs().max(1.0), "{z0} {dz} {odd}");
            }
        }
    }

    #[test]
    fn confluent_limit_is_derivative() {
        // C'(z) = S(z) / 2
        let z0 = 2.5;
        let d = divided_difference(z0, z0, false);
        assert!((d - s_fn(z0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn free_slip_roots_are_sine_modes() {
        let cfg = SlipConfig::new(0.0, 0.0, 1.0).unwrap();
        let xi2 = 2.0;
        let roots = dispersion_lambda(&cfg, xi2, (-120.0, 1.0)).unwrap();
        let p2 = std::f64::consts::PI.powi(2);
        let expect: Vec<f64> = (1..=3).map(|n| -(p2 * (n * n) as f64 + xi2)).collect();
        for e in expect {
            assert!(roots.iter().any(|r| (r.lambda - e).abs() < 1e-9), "missing {e}");
        }
    }
}
