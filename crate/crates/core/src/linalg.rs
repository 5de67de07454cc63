//! Thin wrappers over faer for the dense kernels used everywhere else.

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};

use crate::error::{HeomError, Result};

pub type C64 = num_complex::Complex64;

pub fn zeros(nrows: usize, ncols: usize) -> Mat<C64> {
    Mat::zeros(nrows, ncols)
}

pub fn identity(n: usize) -> Mat<C64> {
    Mat::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

pub fn kron(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Mat<C64> {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn frobenius(a: MatRef<'_, C64>) -> f64 {
    a.norm_l2()
}

pub fn all_finite(a: MatRef<'_, C64>) -> bool {
    (0..a.ncols()).all(|j| (0..a.nrows()).all(|i| a[(i, j)].re.is_finite() && a[(i, j)].im.is_finite()))
}

pub fn eigenvalues(a: MatRef<'_, C64>) -> Result<Vec<C64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    a.eigenvalues()
        .map_err(|e| HeomError::Numerical(format!("eigensolve: {e:?}")))
}

pub fn singular_values(a: MatRef<'_, C64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    a.singular_values()
        .map_err(|e| HeomError::Numerical(format!("svd: {e:?}")))
}

/// Thin SVD `a = U diag(s) V^dag`.
pub fn thin_svd(a: MatRef<'_, C64>) -> Result<(Mat<C64>, Vec<f64>, Mat<C64>)> {
    let svd = a
        .thin_svd()
        .map_err(|e| HeomError::Numerical(format!("svd: {e:?}")))?;
    let s = svd.S().column_vector().iter().map(|x| x.re).collect();
    Ok((svd.U().to_owned(), s, svd.V().to_owned()))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eig(a: MatRef<'_, C64>) -> Result<(Vec<f64>, Mat<C64>)> {
    let e = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| HeomError::Numerical(format!("hermitian eigensolve: {e:?}")))?;
    let vals = e.S().column_vector().iter().map(|x| x.re).collect();
    Ok((vals, e.U().to_owned()))
}

/// LU-factored square matrix, reusable across right-hand sides.
pub struct Lu {
    lu: faer::linalg::solvers::PartialPivLu<C64>,
    n: usize,
}

impl Lu {
    pub fn new(a: MatRef<'_, C64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(HeomError::DimMismatch { expected: a.nrows(), got: a.ncols() });
        }
        Ok(Self { lu: a.partial_piv_lu(), n: a.nrows() })
    }

    pub fn solve(&self, b: MatRef<'_, C64>) -> Result<Mat<C64>> {
        if b.nrows() != self.n {
            return Err(HeomError::DimMismatch { expected: self.n, got: b.nrows() });
        }
        let x = self.lu.solve(b);
        if !all_finite(x.as_ref()) {
            return Err(HeomError::Numerical("singular linear system".into()));
        }
        Ok(x)
    }
}

/// Solve `a x = b` and require a small relative residual.
pub fn solve_checked(a: MatRef<'_, C64>, b: MatRef<'_, C64>, tol: f64) -> Result<Mat<C64>> {
    let x = Lu::new(a)?.solve(b)?;
    let r = residual(a, x.as_ref(), b);
    if r > tol {
        return Err(HeomError::Residual { residual: r, tol });
    }
    Ok(x)
}

/// `|a x - b| / (|a| |x| + |b|)` in Frobenius norms.
pub fn residual(a: MatRef<'_, C64>, x: MatRef<'_, C64>, b: MatRef<'_, C64>) -> f64 {
    let r = a * x - b;
    let scale = frobenius(a) * frobenius(x) + frobenius(b);
    if scale == 0.0 {
        0.0
    } else {
        frobenius(r.as_ref()) / scale
    }
}

pub fn set_threads(n: usize) {
    let par = if n <= 1 { faer::Par::Seq } else { faer::Par::rayon(n) };
    faer::set_global_parallelism(par);
}
