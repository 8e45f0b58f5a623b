use std::collections::BTreeMap;
use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{mode_basis, GlCoefficients, GlField};
use crate::error::{Error, Result};
use crate::linalg::{eigh, eigvalsh, CMat};
use crate::model::{ExternalFields, Mode};

/// Default plane-wave cutoff per axis.
pub fn default_cutoff(dim: usize) -> usize {
    match dim {
        1 => 32,
        2 => 16,
        _ => 6,
    }
}

/// Largest basis used for the cutoff-doubling check.
const CHECK_BASIS_LIMIT: usize = 4225;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlSpectralResult {
    pub dc: f64,
    /// Lowest eigenvalue `Λ₂ D_c` of the linearized operator.
    pub eigenvalue: f64,
    pub psi_star: GlField,
    pub eigen_gap: f64,
    pub basis_cutoff: usize,
    pub residual_norm: f64,
    /// Cutoff of the convergence check and the change of `D_c` there.
    pub check_cutoff: Option<usize>,
    pub cutoff_change: Option<f64>,
}

fn add(a: &Mode, b: &Mode) -> Mode {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub(a: &Mode, b: &Mode) -> Mode {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn momentum(n: &Mode) -> [f64; 3] {
    [2.0 * PI * n[0] as f64, 2.0 * PI * n[1] as f64, 2.0 * PI * n[2] as f64]
}

/// Fourier coefficients of `A·Λ₀A`.
fn a_lambda_a(coeffs: &GlCoefficients, fields: &ExternalFields) -> BTreeMap<Mode, C64> {
    let d = coeffs.dim;
    let mut out = BTreeMap::new();
    for (m1, a1) in &fields.a_hat {
        for (m2, a2) in &fields.a_hat {
            let mut s = C64::new(0.0, 0.0);
            for i in 0..d {
                for j in 0..d {
                    s += a1[i] * a2[j] * coeffs.lambda0[i][j];
                }
            }
            if s != C64::new(0.0, 0.0) {
                *out.entry(add(m1, m2)).or_insert(C64::new(0.0, 0.0)) += s;
            }
        }
    }
    out
}

/// Galerkin matrix of `(-i∇ + 2A)·Λ₀(-i∇ + 2A) + Λ₁W` in the plane waves
/// `e^{2πi n·x}`, `|n_i| <= cutoff`.
///
/// The entry for `(n, n')` is `δ p·Λ₀p + 2Â(n-n')·Λ₀(p+p') + 4(AΛ₀A)^(n-n') + Λ₁Ŵ(n-n')`.
/// Only the upper triangle is computed; the lower one is its conjugate.
pub fn assemble_gl_operator(coeffs: &GlCoefficients, fields: &ExternalFields, cutoff: usize) -> Result<CMat> {
    coeffs.check()?;
    let d = coeffs.dim;
    let m = fields.max_mode() as usize;
    if cutoff < 2 * m {
        return Err(Error::Assembly(format!(
            "cutoff {cutoff} is below twice the largest field mode {m}"
        )));
    }
    let out_of_dim = |n: &Mode| n.iter().skip(d).any(|&v| v != 0);
    if fields.w_hat.keys().chain(fields.a_hat.keys()).any(out_of_dim)
        || fields.a_hat.values().any(|a| a.iter().skip(d).any(|c| c.norm() != 0.0))
    {
        return Err(Error::Assembly(format!("field data has components beyond dimension {d}")));
    }
    let basis = mode_basis(d, cutoff)?;
    let len = basis.len();
    let aa = a_lambda_a(coeffs, fields);
    let mut diffs: Vec<Mode> = fields.w_hat.keys().chain(fields.a_hat.keys()).chain(aa.keys()).copied().collect();
    diffs.push([0; 3]);
    diffs.sort();
    diffs.dedup();

    let mut g = Mat::<C64>::zeros(len, len);
    for i in 0..len {
        let n = basis.mode(i);
        let p = momentum(&n);
        for k in &diffs {
            let np = sub(&n, k);
            let Some(j) = basis.index_of(&np) else { continue };
            if j < i {
                continue;
            }
            let q = momentum(&np);
            let mut v = coeffs.lambda1 * fields.w(k);
            if let Some(c) = aa.get(k) {
                v += 4.0 * c;
            }
            if let Some(a) = fields.a_hat.get(k) {
                let s: [f64; 3] = [p[0] + q[0], p[1] + q[1], p[2] + q[2]];
                for r in 0..d {
                    let l: f64 = (0..d).map(|c| coeffs.lambda0[r][c] * s[c]).sum();
                    v += 2.0 * a[r] * l;
                }
            }
            if i == j {
                v = C64::new(v.re + coeffs.quad_form(&p, &p), 0.0);
            }
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    Ok(g)
}

/// Fix the phase so the largest-magnitude coefficient is real positive.
fn fix_phase(v: &mut [C64]) {
    let big = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if big == 0.0 {
        return;
    }
    // first coefficient within rounding of the maximum, so ties resolve deterministically
    let k = v.iter().position(|c| c.norm() >= big * (1.0 - 1e-12)).unwrap_or(0);
    let ph = v[k].conj() / v[k].norm();
    for c in v.iter_mut() {
        *c *= ph;
    }
    v[k] = C64::new(v[k].re, 0.0);
}

/// `D_c = Λ₂⁻¹ inf spec` of the linearized operator with `ψ_*`, checked by
/// enlarging the cutoff.
pub fn compute_dc(coeffs: &GlCoefficients, fields: &ExternalFields, cutoff: usize) -> Result<GlSpectralResult> {
    compute_dc_with(coeffs, fields, cutoff, true)
}

pub fn compute_dc_with(
    coeffs: &GlCoefficients,
    fields: &ExternalFields,
    cutoff: usize,
    check_cutoff: bool,
) -> Result<GlSpectralResult> {
    if !(coeffs.lambda2 > 0.0) {
        return Err(Error::Precondition(format!("Λ₂ must be positive, got {}", coeffs.lambda2)));
    }
    let g = assemble_gl_operator(coeffs, fields, cutoff)?;
    let e = eigh(&g)?;
    let lam = e.values[0];
    let gap = e.values.get(1).map(|v| v - lam).unwrap_or(f64::INFINITY);
    let mut v: Vec<C64> = (0..g.nrows()).map(|i| e.vectors[(i, 0)]).collect();
    let nrm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|c| *c /= nrm);
    fix_phase(&mut v);
    let mut residual = 0.0;
    for i in 0..g.nrows() {
        let r: C64 = (0..g.ncols()).map(|j| g[(i, j)] * v[j]).sum::<C64>() - lam * v[i];
        residual += r.norm_sqr();
    }
    let (check, change) = if check_cutoff {
        let d = coeffs.dim;
        let mut m2 = 2 * cutoff;
        while m2 > cutoff + 1 && (2 * m2 + 1).pow(d as u32) > CHECK_BASIS_LIMIT {
            m2 -= 1;
        }
        let l2 = eigvalsh(&assemble_gl_operator(coeffs, fields, m2)?)?[0];
        (Some(m2), Some((l2 - lam).abs() / coeffs.lambda2))
    } else {
        (None, None)
    };
    Ok(GlSpectralResult {
        dc: lam / coeffs.lambda2,
        eigenvalue: lam,
        psi_star: GlField { dim: coeffs.dim, cutoff, coeffs: v },
        eigen_gap: gap,
        basis_cutoff: cutoff,
        residual_norm: residual.sqrt(),
        check_cutoff: check,
        cutoff_change: change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_defect;

    #[test]
    fn free_operator_is_diagonal() {
        let c = GlCoefficients::isotropic(1, 1.0, 1.0, 1.0, 1.0);
        let g = assemble_gl_operator(&c, &ExternalFields::zero(), 3).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                let want = if i == j { (2.0 * PI * (i as f64 - 3.0)).powi(2) } else { 0.0 };
                assert!((g[(i, j)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_small_cutoff() {
        let c = GlCoefficients::isotropic(1, 1.0, 1.0, 1.0, 1.0);
        let f = ExternalFields::cosine_w([3, 0, 0], 1.0);
        assert!(matches!(assemble_gl_operator(&c, &f, 5), Err(Error::Assembly(_))));
        assert!(assemble_gl_operator(&c, &f, 6).is_ok());
    }

    #[test]
    fn magnetic_operator_is_hermitian() {
        let c = GlCoefficients::isotropic(2, 0.7, 0.3, 1.0, 1.0);
        let mut f = ExternalFields::cosine_w([1, 0, 0], 0.4);
        f.a_hat.insert([0, 1, 0], [C64::new(0.1, 0.2), C64::new(-0.3, 0.05), C64::new(0.0, 0.0)]);
        f.a_hat.insert([0, -1, 0], [C64::new(0.1, -0.2), C64::new(-0.3, -0.05), C64::new(0.0, 0.0)]);
        let g = assemble_gl_operator(&c, &f, 4).unwrap();
        assert_eq!(hermitian_defect(&g), 0.0);
    }
}
