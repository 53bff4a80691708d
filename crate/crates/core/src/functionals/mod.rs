//! Nodal profiles on [0, 1] and the quadratic functionals built on them.

mod grid;
mod quadrature;

pub use grid::{Grid1D, GridKind, DEFAULT_NODES, MIN_NODES};
pub use quadrature::{gauss_legendre, gauss_legendre_on};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::sym_gen_eig;
use crate::model::SlipConfig;

/// Nodal values of a function of y on a [`Grid1D`].
#[derive(Debug, Clone)]
pub struct Profile {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    pub label: Option<String>,
}

/// A functional value and, optionally, its gradient with respect to the
/// nodal values.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalValue {
    pub value: f64,
    pub gradient: Option<Vec<f64>>,
}

const ADMISSIBLE_TOL: f64 = 1e-10;

impl Profile {
    pub fn new(grid: &Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidParameter(format!(
                "profile has {} values on a grid of {} nodes",
                values.len(),
                grid.n()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
            label: None,
        })
    }

    pub fn from_fn(grid: &Grid1D, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: grid.clone(),
            values: grid.nodes().iter().map(|&y| f(y)).collect(),
            label: None,
        }
    }

    pub fn zeros(grid: &Grid1D) -> Self {
        Self::from_fn(grid, |_| 0.0)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// ψ(0) = ψ(1) = 0 up to a relative tolerance.
    pub fn is_admissible(&self) -> bool {
        let scale = self.max_abs().max(1.0);
        self.values[0].abs() <= ADMISSIBLE_TOL * scale
            && self.values[self.values.len() - 1].abs() <= ADMISSIBLE_TOL * scale
    }

    fn require_admissible(&self) -> Result<()> {
        if self.is_admissible() {
            Ok(())
        } else {
            Err(Error::NotAdmissible {
                left: self.values[0],
                right: self.values[self.values.len() - 1],
            })
        }
    }

    /// ψ'(0), ψ'(1) from the end rows of the differentiation matrix.
    pub fn end_slopes(&self) -> (f64, f64) {
        let d1 = self.grid.d1();
        let n = self.grid.n();
        let row = |i: usize| (0..n).map(|j| d1[(i, j)] * self.values[j]).sum::<f64>();
        (row(0), row(n - 1))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            label: self.label.clone(),
        }
    }

    pub fn as_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }

    /// Value of the interpolant at an arbitrary y.
    pub fn eval(&self, y: f64) -> f64 {
        let c = self.grid.to_chebyshev(&self.values);
        let x = 1.0 - 2.0 * y;
        // Clenshaw
        let (mut b1, mut b2) = (0.0, 0.0);
        for ck in c.iter().skip(1).rev() {
            let b0 = ck + 2.0 * x * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        c[0] + x * b1 - b2
    }
}

fn quad_form(m: &DMatrix<f64>, v: &[f64]) -> f64 {
    let x = DVector::from_column_slice(v);
    x.dot(&(m * &x))
}

/// Nodal first or second derivative.
pub fn derivative(p: &Profile, order: usize) -> Result<Profile> {
    let values = match order {
        1 => p.grid.apply_d1(&p.values),
        2 => p.grid.apply_d2(&p.values),
        _ => {
            return Err(Error::InvalidParameter(format!(
                "derivative order must be 1 or 2, got {order}"
            )))
        }
    };
    Ok(Profile {
        grid: p.grid.clone(),
        values,
        label: p.label.clone(),
    })
}

/// ∫ψ², ∫(ψ')², ∫(ψ'')²
///
/// Derivatives are taken in coefficient space and integrated with the mass
/// form, which avoids the O(N⁴) entries of the stiffness forms.
pub fn norms(p: &Profile) -> (f64, f64, f64) {
    let f = Forms::of(p);
    (f.i0, f.i1, f.i2)
}

/// Quadratic quantities of a profile evaluated through coefficient-space
/// derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forms {
    pub i0: f64,
    pub i1: f64,
    pub i2: f64,
    pub slope0: f64,
    pub slope1: f64,
}

impl Forms {
    pub fn of(p: &Profile) -> Self {
        let g = &p.grid;
        let d1 = g.spectral_derivative(&p.values, 1);
        let d2 = g.spectral_derivative(&p.values, 2);
        Self {
            i0: quad_form(g.s0(), &p.values),
            i1: quad_form(g.s0(), &d1),
            i2: quad_form(g.s0(), &d2),
            slope0: d1[0],
            slope1: d1[d1.len() - 1],
        }
    }

    /// 2E at frequency ξ².
    pub fn energy(&self, cfg: &SlipConfig, xi2: f64) -> f64 {
        cfg.mu * (self.i2 + 2.0 * xi2 * self.i1 + xi2 * xi2 * self.i0) - self.boundary(cfg)
    }

    /// 2J at frequency ξ².
    pub fn kinetic(&self, xi2: f64) -> f64 {
        xi2 * self.i0 + self.i1
    }

    /// k1 ψ'(1)² + k0 ψ'(0)²
    pub fn boundary(&self, cfg: &SlipConfig) -> f64 {
        cfg.k1 * self.slope1 * self.slope1 + cfg.k0 * self.slope0 * self.slope0
    }
}

pub fn functional_e(p: &Profile, xi2: f64, cfg: &SlipConfig) -> Result<f64> {
    p.require_admissible()?;
    let (i0, i1, i2) = norms(p);
    let (a, b) = p.end_slopes();
    Ok(0.5 * cfg.mu * (i2 + 2.0 * xi2 * i1 + xi2 * xi2 * i0)
        - 0.5 * cfg.k1 * b * b
        - 0.5 * cfg.k0 * a * a)
}

/// E with its gradient in nodal coordinates.
pub fn first_variation_e(p: &Profile, xi2: f64, cfg: &SlipConfig) -> Result<FunctionalValue> {
    let value = functional_e(p, xi2, cfg)?;
    let a = p.grid.energy_form(cfg, xi2);
    let g = a * p.as_vector();
    let gradient: Vec<f64> = g.iter().copied().collect();
    if gradient.iter().any(|v| !v.is_finite()) {
        return Ok(FunctionalValue {
            value,
            gradient: None,
        });
    }
    Ok(FunctionalValue {
        value,
        gradient: Some(gradient),
    })
}

pub fn functional_j(p: &Profile, xi2: f64) -> Result<f64> {
    p.require_admissible()?;
    let (i0, i1, _) = norms(p);
    Ok(0.5 * (xi2 * i0 + i1))
}

pub fn functional_z(p: &Profile, cfg: &SlipConfig) -> Result<f64> {
    p.require_admissible()?;
    let (a, b) = p.end_slopes();
    Ok(0.5 * cfg.k1 * b * b + 0.5 * cfg.k0 * a * a)
}

/// (N₁, N₂) for the modified quotient at s².
pub fn functional_n_parts(p: &Profile, s2: f64, cfg: &SlipConfig) -> Result<(f64, f64)> {
    p.require_admissible()?;
    let (i0, i1, i2) = norms(p);
    let (a, b) = p.end_slopes();
    let n1 = cfg.k1 * b * b + cfg.k0 * a * a - cfg.mu * i2;
    let n2 = cfg.mu * (2.0 * i1 + s2 * i0);
    Ok((n1, n2))
}

pub fn functional_n(p: &Profile, s2: f64, cfg: &SlipConfig) -> Result<f64> {
    let (n1, n2) = functional_n_parts(p, s2, cfg)?;
    if n2 <= 0.0 {
        return Err(Error::ZeroDenominator("N(psi, s2)"));
    }
    Ok(n1 / n2)
}

/// Bound on |Z| over the sphere (1/2)∫(ψ'')² = 1 from the integration by
/// parts Z = ½∫[((k1+k0)y − k0)(ψ')²]' and ‖ψ'‖ ≤ ‖ψ''‖.
pub fn z_sphere_bound(cfg: &SlipConfig) -> f64 {
    (cfg.k0 + cfg.k1).abs() + 2.0 * cfg.k0.abs().max(cfg.k1.abs())
}

/// Extend interior values with zero end values.
pub(crate) fn pad_interior(grid: &Grid1D, interior: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; grid.n()];
    v[1..grid.n() - 1].copy_from_slice(interior);
    v
}

/// Largest Z on the discrete sphere, as the top eigenpair of the boundary
/// form against the ∫(ψ'')² form on admissible profiles.
pub fn maximize_z_on_sphere(cfg: &SlipConfig, grid: &Grid1D) -> Result<(f64, Profile)> {
    if grid.n() < 32 {
        return Err(Error::GridTooCoarse(format!(
            "maximizing Z needs at least 32 nodes, got {}",
            grid.n()
        )));
    }
    let bd = grid.interior(&grid.boundary_form(cfg));
    let s2 = grid.interior(grid.s2());
    let eig = sym_gen_eig(&bd, &s2)?;
    let top = eig.values.len() - 1;
    let x: Vec<f64> = eig.vectors.column(top).iter().copied().collect();
    let mut p = Profile::new(grid, pad_interior(grid, &x))?;
    let f = Forms::of(&p);
    // Rayleigh quotient of the computed vector; the dense eigenvalue carries
    // rounding of order eps times the largest stiffness eigenvalue
    let value = if f.i2 > 0.0 { f.boundary(cfg) / f.i2 } else { eig.values[top] };
    let mut c = (2.0 / f.i2).sqrt();
    let (a, b) = p.end_slopes();
    let lead = if a.abs() > 1e-8 * b.abs() { a } else { -b };
    if lead < 0.0 {
        c = -c;
    }
    p = p.scaled(c).with_label("argmax_z");
    Ok((value, p))
}

/// Value at n and 2n - 1 nodes and their relative change.
pub fn doubling_check(
    grid: &Grid1D,
    f: impl Fn(&Grid1D) -> Result<f64>,
) -> Result<(f64, f64, f64)> {
    let coarse = f(grid)?;
    let fine_grid = Grid1D::new(2 * grid.n() - 1)?;
    let fine = f(&fine_grid)?;
    let rel = (fine - coarse).abs() / fine.abs().max(1e-300);
    Ok((coarse, fine, rel))
}
