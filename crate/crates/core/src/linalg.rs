//! Dense symmetric-definite generalized eigenproblems.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenpairs of A x = θ B x, θ ascending, eigenvectors B-orthonormal.
#[derive(Debug, Clone)]
pub struct GenEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn sym_gen_eig(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<GenEigen> {
    let n = a.nrows();
    let a = (a + a.transpose()) * 0.5;
    let b = (b + b.transpose()) * 0.5;
    let chol = b
        .cholesky()
        .ok_or(Error::NotPositiveDefinite("generalized eigenproblem metric"))?;
    let l = chol.l();
    // C = L^-1 A L^-T
    let la = l
        .solve_lower_triangular(&a)
        .ok_or(Error::NotPositiveDefinite("triangular factor"))?;
    let c = l
        .solve_lower_triangular(&la.transpose())
        .ok_or(Error::NotPositiveDefinite("triangular factor"))?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(c, 1e-15, 10_000 * n.max(1))
        .ok_or_else(|| Error::NoConvergence(format!("symmetric eigensolve of size {n}")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence("non-finite eigenvalue".into()));
    }
    let mut y = DMatrix::<f64>::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        y.set_column(k, &eig.eigenvectors.column(i));
    }
    let vectors = l
        .transpose()
        .solve_upper_triangular(&y)
        .ok_or(Error::NotPositiveDefinite("triangular factor"))?;
    Ok(GenEigen { values, vectors })
}
