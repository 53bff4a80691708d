use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::quadrature::gauss_legendre;
use crate::error::{Error, Result};
use crate::model::SlipConfig;

/// Collocation family of a [`Grid1D`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    ChebyshevLobatto,
}

/// Chebyshev–Gauss–Lobatto nodes on [0, 1] with differentiation matrices
/// and a Gauss–Legendre rule exact for products of three nodal polynomials.
#[derive(Debug, Clone)]
pub struct Grid1D {
    inner: Arc<GridData>,
}

#[derive(Debug)]
struct GridData {
    nodes: Vec<f64>,
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
    quad_nodes: Vec<f64>,
    quad_weights: Vec<f64>,
    interp: DMatrix<f64>,
    interp_d1: DMatrix<f64>,
    interp_d2: DMatrix<f64>,
    s0: DMatrix<f64>,
    s1: DMatrix<f64>,
    s2: DMatrix<f64>,
    cos_table: Vec<f64>,
}

pub const DEFAULT_NODES: usize = 128;
pub const MIN_NODES: usize = 16;

impl Grid1D {
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::GridTooCoarse(format!(
                "node count {n} is below the minimum {MIN_NODES}"
            )));
        }
        let order = n - 1;
        let nf = order as f64;
        let x: Vec<f64> = (0..n).map(|j| (PI * j as f64 / nf).cos()).collect();
        let nodes: Vec<f64> = (0..n)
            .map(|j| {
                let s = (PI * j as f64 / (2.0 * nf)).sin();
                s * s
            })
            .collect();

        let dx = cheb_diff(order);
        let d1 = dx * -2.0;
        let d2 = &d1 * &d1;

        let q = (3 * order) / 2 + 2;
        let (g, gw) = gauss_legendre(q);
        let quad_nodes: Vec<f64> = g.iter().map(|t| 0.5 * (1.0 + t)).collect();
        let quad_weights: Vec<f64> = gw.iter().map(|w| 0.5 * w).collect();
        let xq: Vec<f64> = quad_nodes.iter().map(|y| 1.0 - 2.0 * y).collect();
        let interp = barycentric_matrix(&x, &xq);
        let interp_d1 = &interp * &d1;
        let interp_d2 = &interp * &d2;
        let s0 = weighted_gram(&interp, &quad_weights);
        let s1 = weighted_gram(&interp_d1, &quad_weights);
        let s2 = weighted_gram(&interp_d2, &quad_weights);

        let cos_table = (0..2 * order).map(|m| (PI * m as f64 / nf).cos()).collect();

        Ok(Self {
            inner: Arc::new(GridData {
                nodes,
                d1,
                d2,
                quad_nodes,
                quad_weights,
                interp,
                interp_d1,
                interp_d2,
                s0,
                s1,
                s2,
                cos_table,
            }),
        })
    }

    pub fn kind(&self) -> GridKind {
        GridKind::ChebyshevLobatto
    }

    /// Node count.
    pub fn n(&self) -> usize {
        self.inner.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.inner.nodes
    }

    pub fn d1(&self) -> &DMatrix<f64> {
        &self.inner.d1
    }

    pub fn d2(&self) -> &DMatrix<f64> {
        &self.inner.d2
    }

    /// Mass form: v^T S0 v = ∫ v².
    pub fn s0(&self) -> &DMatrix<f64> {
        &self.inner.s0
    }

    /// v^T S1 v = ∫ (v')².
    pub fn s1(&self) -> &DMatrix<f64> {
        &self.inner.s1
    }

    /// v^T S2 v = ∫ (v'')².
    pub fn s2(&self) -> &DMatrix<f64> {
        &self.inner.s2
    }

    pub fn quad_nodes(&self) -> &[f64] {
        &self.inner.quad_nodes
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.inner.quad_weights
    }

    /// Nodal values to values at the quadrature nodes.
    pub fn interp(&self) -> &DMatrix<f64> {
        &self.inner.interp
    }

    pub fn interp_d1(&self) -> &DMatrix<f64> {
        &self.inner.interp_d1
    }

    pub fn interp_d2(&self) -> &DMatrix<f64> {
        &self.inner.interp_d2
    }

    /// Smallest node spacing.
    pub fn min_spacing(&self) -> f64 {
        self.inner.nodes[1] - self.inner.nodes[0]
    }

    /// Grids are fully determined by their node count.
    pub fn same_as(&self, other: &Grid1D) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.n() == other.n()
    }

    /// Restriction of a full nodal matrix to the interior nodes.
    pub fn interior(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let k = self.n() - 2;
        m.view((1, 1), (k, k)).into_owned()
    }

    /// Boundary form with v^T B v = k1 v'(1)² + k0 v'(0)².
    pub fn boundary_form(&self, cfg: &SlipConfig) -> DMatrix<f64> {
        let n = self.n();
        let r0 = self.inner.d1.row(0).transpose();
        let r1 = self.inner.d1.row(n - 1).transpose();
        &r1 * r1.transpose() * cfg.k1 + &r0 * r0.transpose() * cfg.k0
    }

    /// Bilinear form of 2E at frequency ξ², full nodal size.
    pub fn energy_form(&self, cfg: &SlipConfig, xi2: f64) -> DMatrix<f64> {
        let visc = self.s2() + self.s1() * (2.0 * xi2) + self.s0() * (xi2 * xi2);
        visc * cfg.mu - self.boundary_form(cfg)
    }

    /// Bilinear form of 2J at frequency ξ².
    pub fn kinetic_form(&self, xi2: f64) -> DMatrix<f64> {
        self.s0() * xi2 + self.s1()
    }

    pub fn apply_d1(&self, v: &[f64]) -> Vec<f64> {
        matvec(&self.inner.d1, v)
    }

    pub fn apply_d2(&self, v: &[f64]) -> Vec<f64> {
        matvec(&self.inner.d2, v)
    }

    /// ∫ u v of the nodal interpolants.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let s0 = self.s0();
        let n = self.n();
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += s0[(i, j)] * v[j];
            }
            acc += u[i] * row;
        }
        acc
    }

    /// Chebyshev coefficients of the nodal interpolant, in x = 1 - 2y.
    pub fn to_chebyshev(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        let order = n - 1;
        let tab = &self.inner.cos_table;
        let mut c = vec![0.0; n];
        for (k, ck) in c.iter_mut().enumerate() {
            let mut s = 0.5 * (v[0] + if k % 2 == 0 { v[order] } else { -v[order] });
            for (j, vj) in v.iter().enumerate().take(order).skip(1) {
                s += vj * tab[(j * k) % (2 * order)];
            }
            *ck = 2.0 * s / order as f64;
        }
        c[0] *= 0.5;
        c[order] *= 0.5;
        c
    }

    pub fn from_chebyshev(&self, c: &[f64]) -> Vec<f64> {
        let n = self.n();
        let order = n - 1;
        let tab = &self.inner.cos_table;
        (0..n)
            .map(|j| {
                c.iter()
                    .enumerate()
                    .map(|(k, ck)| ck * tab[(j * k) % (2 * order)])
                    .sum()
            })
            .collect()
    }

    /// Derivative of any order through Chebyshev coefficients, with the
    /// rounding tail of the expansion removed first.
    ///
    /// High derivatives of nodal data are dominated by amplified rounding
    /// noise in the top coefficients. The cut is placed at the start of the
    /// noise plateau, or at 64 eps times the peak when no plateau is found.
    pub fn spectral_derivative(&self, v: &[f64], order: usize) -> Vec<f64> {
        let mut c = self.to_chebyshev(v);
        let peak = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if peak == 0.0 {
            return vec![0.0; v.len()];
        }
        let keep = match chop_point(&c, CHOP_TOL) {
            Some(k) => k,
            None => {
                let floor = 64.0 * f64::EPSILON * peak;
                c.iter().rposition(|x| x.abs() > floor).unwrap_or(0) + 1
            }
        };
        for ck in c.iter_mut().skip(keep) {
            *ck = 0.0;
        }
        for _ in 0..order {
            c = cheb_derivative_coeffs(&c);
            for ck in c.iter_mut() {
                *ck *= -2.0;
            }
        }
        self.from_chebyshev(&c)
    }
}

const CHOP_TOL: f64 = 1e-13;

/// Number of Chebyshev coefficients worth keeping: the plateau rule of
/// Aurentz and Trefethen ("Chopping a Chebyshev series", 2017).
fn chop_point(c: &[f64], tol: f64) -> Option<usize> {
    let n = c.len();
    if n < 17 {
        return None;
    }
    let mut env = vec![0.0; n];
    let mut m = 0.0f64;
    for j in (0..n).rev() {
        m = m.max(c[j].abs());
        env[j] = m;
    }
    if env[0] == 0.0 {
        return Some(1);
    }
    for e in env.iter_mut().rev() {
        *e /= m;
    }
    let mut plateau = None;
    let mut j2 = 0;
    for j in 2..=n {
        j2 = (1.25 * j as f64 + 5.0).round() as usize;
        if j2 > n {
            return None;
        }
        let e1 = env[j - 1];
        let e2 = env[j2 - 1];
        let r = 3.0 * (1.0 - e1.ln() / tol.ln());
        if e1 == 0.0 || e2 / e1 > r {
            plateau = Some(j - 1);
            break;
        }
    }
    let p = plateau?;
    if env[p - 1] == 0.0 {
        return Some(p);
    }
    let t76 = tol.powf(7.0 / 6.0);
    let j3 = env.iter().filter(|&&e| e >= t76).count();
    if j3 < j2 {
        j2 = j3 + 1;
        env[j2 - 1] = t76;
    }
    let slope = -tol.log10() / 3.0;
    let mut best = (f64::INFINITY, 0);
    for (i, e) in env[..j2].iter().enumerate() {
        let t = if j2 > 1 { i as f64 / (j2 - 1) as f64 } else { 0.0 };
        let v = e.log10() + slope * t;
        if v < best.0 {
            best = (v, i + 1);
        }
    }
    Some((best.1 - 1).max(1))
}

fn cheb_derivative_coeffs(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    let mut d = vec![0.0; n];
    if n < 2 {
        return d;
    }
    let top = n - 1;
    for k in (1..=top).rev() {
        let above = if k < top { d[k + 1] } else { 0.0 };
        d[k - 1] = above + 2.0 * k as f64 * c[k];
    }
    d[0] *= 0.5;
    d
}

fn matvec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    let out = m * DVector::from_column_slice(v);
    out.as_slice().to_vec()
}

/// Chebyshev differentiation matrix on x_j = cos(πj/N).
fn cheb_diff(order: usize) -> DMatrix<f64> {
    let n = order + 1;
    let nf = order as f64;
    let c = |i: usize| if i == 0 || i == order { 2.0 } else { 1.0 };
    let mut d = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let sgn = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            let dx = -2.0
                * (PI * (i + j) as f64 / (2.0 * nf)).sin()
                * (PI * (i as f64 - j as f64) / (2.0 * nf)).sin();
            d[(i, j)] = c(i) / c(j) * sgn / dx;
        }
    }
    for i in 0..n {
        let mut off: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| d[(i, j)]).collect();
        off.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
        d[(i, i)] = -off.iter().sum::<f64>();
    }
    d
}

/// Barycentric interpolation from Lobatto nodes `x` to points `t`.
fn barycentric_matrix(x: &[f64], t: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let w: Vec<f64> = (0..n)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n - 1 {
                0.5 * s
            } else {
                s
            }
        })
        .collect();
    let mut p = DMatrix::<f64>::zeros(t.len(), n);
    for (i, &ti) in t.iter().enumerate() {
        if let Some(j) = x.iter().position(|&xj| (ti - xj).abs() < 1e-15) {
            p[(i, j)] = 1.0;
            continue;
        }
        let mut denom = 0.0;
        for j in 0..n {
            let q = w[j] / (ti - x[j]);
            p[(i, j)] = q;
            denom += q;
        }
        for j in 0..n {
            p[(i, j)] /= denom;
        }
    }
    p
}

fn weighted_gram(a: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let mut aw = a.clone();
    for (i, wi) in w.iter().enumerate() {
        aw.row_mut(i).scale_mut(*wi);
    }
    let g = a.transpose() * aw;
    (&g + g.transpose()) * 0.5
}
