//! Dense Hermitian helpers on top of faer.

use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMat = Mat<C64>;

/// Eigendecomposition `A = V diag(values) V†`, values ascending.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

fn solver_err(e: impl std::fmt::Debug) -> Error {
    Error::Solver { message: format!("{e:?}"), residual: f64::NAN }
}

fn is_real(m: &CMat) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].im == 0.0))
}

fn real_part(m: &CMat) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re)
}

/// Hermitian eigendecomposition. Real matrices take the faster symmetric path.
pub fn eigh(m: &CMat) -> Result<Eigh> {
    if is_real(m) {
        let e = real_part(m).self_adjoint_eigen(Side::Lower).map_err(solver_err)?;
        let values = e.S().column_vector().iter().copied().collect();
        let u = e.U();
        let vectors = Mat::from_fn(u.nrows(), u.ncols(), |i, j| C64::new(u[(i, j)], 0.0));
        Ok(Eigh { values, vectors })
    } else {
        let e = m.self_adjoint_eigen(Side::Lower).map_err(solver_err)?;
        let values = e.S().column_vector().iter().map(|z| z.re).collect();
        Ok(Eigh { values, vectors: e.U().to_owned() })
    }
}

pub fn eigvalsh(m: &CMat) -> Result<Vec<f64>> {
    if is_real(m) {
        real_part(m).self_adjoint_eigenvalues(Side::Lower).map_err(solver_err)
    } else {
        m.self_adjoint_eigenvalues(Side::Lower).map_err(solver_err)
    }
}

pub fn eigh_real(m: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let e = m.self_adjoint_eigen(Side::Lower).map_err(solver_err)?;
    Ok((e.S().column_vector().iter().copied().collect(), e.U().to_owned()))
}

pub fn eigvalsh_real(m: &Mat<f64>) -> Result<Vec<f64>> {
    m.self_adjoint_eigenvalues(Side::Lower).map_err(solver_err)
}

impl Eigh {
    /// `V diag(f(values)) V†`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMat {
        let d: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        let v = &self.vectors;
        let w = Mat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * d[j]);
        &w * v.adjoint()
    }

    pub fn trace(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.values.iter().map(|&x| f(x)).sum()
    }
}

pub fn adjoint(m: &CMat) -> CMat {
    m.adjoint().to_owned()
}

pub fn conj(m: &CMat) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].conj())
}

pub fn trace(m: &CMat) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// `Tr(A B)` without forming the product.
pub fn trace_prod(a: &CMat, b: &CMat) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for j in 0..b.ncols() {
        for i in 0..a.nrows() {
            s += a[(j, i)] * b[(i, j)];
        }
    }
    s
}

pub fn max_abs(m: &CMat) -> f64 {
    let mut s: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s = s.max(m[(i, j)].norm());
        }
    }
    s
}

pub fn frobenius_sq(m: &CMat) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m[(i, j)].norm_sqr();
        }
    }
    s
}

pub fn sub(a: &CMat, b: &CMat) -> CMat {
    a - b
}

/// Largest entry of `|A - A†|`.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut s: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            s = s.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    s
}

/// Average the matrix with its adjoint in place.
pub fn symmetrize(m: &mut CMat) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
        m[(j, j)] = C64::new(m[(j, j)].re, 0.0);
    }
}

/// `s A`.
pub fn scale(m: &CMat, s: C64) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)
}

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

/// 2x2 block matrix `[[a, b], [c, d]]`.
pub fn blocks(a: &CMat, b: &CMat, c: &CMat, d: &CMat) -> CMat {
    let (n, m) = (a.nrows(), a.ncols());
    Mat::from_fn(n + c.nrows(), m + b.ncols(), |i, j| match (i < n, j < m) {
        (true, true) => a[(i, j)],
        (true, false) => b[(i, j - m)],
        (false, true) => c[(i - n, j)],
        (false, false) => d[(i - n, j - m)],
    })
}

/// Block `(r, c)` of size `n x n` from a `2n x 2n` matrix.
pub fn block(m: &CMat, n: usize, r: usize, c: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| m[(r * n + i, c * n + j)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_reconstructs_complex_and_real() {
        let n = 7;
        let m = Mat::from_fn(n, n, |i, j| {
            let (a, b) = (i.min(j) as f64, i.max(j) as f64);
            let im = 0.3 * (i as f64 - j as f64);
            C64::new((a * 1.3 + b * 0.7).sin(), im)
        });
        for mat in [m.clone(), Mat::from_fn(n, n, |i, j| C64::new(m[(i, j)].re, 0.0))] {
            let e = eigh(&mat).unwrap();
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            let back = e.apply(|x| x);
            assert!(max_abs(&(&back - &mat)) < 1e-12);
        }
    }
}
