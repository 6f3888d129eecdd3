//! Ridge-regularized least squares on the normal equations,
//! `(G^T G + lambda I) v = G^T t`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Ridge term used by the ELM and RBF output-weight solves.
pub const RIDGE_LAMBDA: f64 = 1e-8;

/// Builds the `rows x cols` design matrix from an element function.
pub fn design_matrix(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, f)
}

/// Solves for the output weights. Cholesky first, LU if the factorization fails.
pub fn solve(g: &DMatrix<f64>, t: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if g.nrows() != t.len() {
        return Err(Error::invalid(format!(
            "design matrix has {} rows but {} targets",
            g.nrows(),
            t.len()
        )));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid("ridge term must be non-negative"));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("hidden responses are not finite".into()));
    }
    let t = DVector::from_column_slice(t);
    let gt = g.transpose();
    let mut a = &gt * g;
    for i in 0..a.nrows() {
        a[(i, i)] += lambda;
    }
    let b = &gt * t;
    let v = match a.clone().cholesky() {
        Some(ch) => ch.solve(&b),
        None => a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Numeric("regularized normal equations are singular".into()))?,
    };
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("output weights are not finite".into()));
    }
    Ok(v.iter().copied().collect())
}

/// `||G^T (G v - t) + lambda v||`, the normal-equation residual.
pub fn normal_equation_residual(g: &DMatrix<f64>, t: &[f64], v: &[f64], lambda: f64) -> f64 {
    let t = DVector::from_column_slice(t);
    let v = DVector::from_column_slice(v);
    (g.transpose() * (g * &v - t) + v * lambda).norm()
}
