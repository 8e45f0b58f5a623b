use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::operator::{assemble_gl_operator, compute_dc_with, GlSpectralResult};
use super::{GlCoefficients, GlField};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::model::ExternalFields;

/// Separable synthesis of a mode expansion with cutoff `M` on `K = 4M + 1`
/// equispaced points per axis. `|ψ|⁴` has modes up to `4M`, so its mean over
/// the grid is the exact cell integral.
pub(crate) struct Synthesis {
    dim: usize,
    modes: usize,
    points: usize,
    /// `S[k, j] = e^{2πi (j - M) k / K}`, row-major.
    table: Vec<C64>,
}

impl Synthesis {
    pub(crate) fn new(dim: usize, cutoff: usize) -> Self {
        let modes = 2 * cutoff + 1;
        let points = 4 * cutoff + 1;
        let mut table = Vec::with_capacity(points * modes);
        for k in 0..points {
            for j in 0..modes {
                let n = j as f64 - cutoff as f64;
                table.push(C64::from_polar(1.0, 2.0 * PI * n * k as f64 / points as f64));
            }
        }
        Self { dim, modes, points, table }
    }

    /// Apply along `axis` of a row-major tensor with the given shape.
    fn apply(&self, data: &[C64], shape: &mut [usize; 3], axis: usize, inverse: bool) -> Vec<C64> {
        let (rows, cols) = if inverse { (self.modes, self.points) } else { (self.points, self.modes) };
        debug_assert_eq!(shape[axis], cols);
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..self.dim].iter().product();
        let mut out = vec![C64::new(0.0, 0.0); outer * rows * inner];
        for o in 0..outer {
            for r in 0..rows {
                for c in 0..cols {
                    let s = if inverse { self.table[c * self.modes + r].conj() } else { self.table[r * self.modes + c] };
                    let src = &data[(o * cols + c) * inner..(o * cols + c + 1) * inner];
                    let dst = &mut out[(o * rows + r) * inner..(o * rows + r + 1) * inner];
                    for (d, x) in dst.iter_mut().zip(src) {
                        *d += s * x;
                    }
                }
            }
        }
        shape[axis] = rows;
        out
    }

    fn to_grid(&self, coeffs: &[C64]) -> Vec<C64> {
        let mut shape = [1; 3];
        shape[..self.dim].fill(self.modes);
        let mut v = coeffs.to_vec();
        for axis in 0..self.dim {
            v = self.apply(&v, &mut shape, axis, false);
        }
        v
    }

    /// Mode coefficients `∫ f e^{-2πi n·x}` of grid samples (exact for degree `<= 3M`).
    fn to_modes(&self, values: &[C64]) -> Vec<C64> {
        let mut shape = [1; 3];
        shape[..self.dim].fill(self.points);
        let mut v = values.to_vec();
        for axis in 0..self.dim {
            v = self.apply(&v, &mut shape, axis, true);
        }
        let scale = 1.0 / (self.points as f64).powi(self.dim as i32);
        v.iter_mut().for_each(|c| *c *= scale);
        v
    }

    pub(crate) fn quartic(&self, coeffs: &[C64]) -> f64 {
        let g = self.to_grid(coeffs);
        g.iter().map(|c| c.norm_sqr().powi(2)).sum::<f64>() / g.len() as f64
    }
}

/// The functional `𝓔_D` on a fixed plane-wave basis, with its gradient.
pub struct GlEnergy {
    pub coeffs: GlCoefficients,
    pub cutoff: usize,
    pub d: f64,
    operator: CMat,
    synthesis: Synthesis,
}

impl GlEnergy {
    pub fn new(coeffs: &GlCoefficients, fields: &ExternalFields, cutoff: usize, d: f64) -> Result<Self> {
        let operator = assemble_gl_operator(coeffs, fields, cutoff)?;
        Ok(Self { coeffs: coeffs.clone(), cutoff, d, operator, synthesis: Synthesis::new(coeffs.dim, cutoff) })
    }

    pub fn len(&self) -> usize {
        self.operator.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(L₀ - Λ₂D) ψ`.
    fn linear(&self, psi: &[C64]) -> Vec<C64> {
        let shift = self.coeffs.lambda2 * self.d;
        (0..self.len())
            .map(|i| (0..self.len()).map(|j| self.operator[(i, j)] * psi[j]).sum::<C64>() - shift * psi[i])
            .collect()
    }

    pub fn value(&self, psi: &[C64]) -> f64 {
        let lin = self.linear(psi);
        let quad: f64 = psi.iter().zip(&lin).map(|(a, b)| (a.conj() * b).re).sum();
        quad + self.coeffs.lambda3 * self.synthesis.quartic(psi)
    }

    /// Value and `∂𝓔/∂ψ̂*`. The real gradient in `(Re ψ̂, Im ψ̂)` is twice this.
    pub fn value_and_gradient(&self, psi: &[C64]) -> (f64, Vec<C64>) {
        let lin = self.linear(psi);
        let quad: f64 = psi.iter().zip(&lin).map(|(a, b)| (a.conj() * b).re).sum();
        let grid = self.synthesis.to_grid(psi);
        let quartic = grid.iter().map(|c| c.norm_sqr().powi(2)).sum::<f64>() / grid.len() as f64;
        let cubic: Vec<C64> = grid.iter().map(|c| c * c.norm_sqr()).collect();
        let proj = self.synthesis.to_modes(&cubic);
        let l3 = self.coeffs.lambda3;
        let grad = lin.iter().zip(&proj).map(|(a, b)| a + 2.0 * l3 * b).collect();
        (quad + l3 * quartic, grad)
    }

    fn diagonal(&self, i: usize) -> f64 {
        self.operator[(i, i)].re
    }
}

/// `𝓔_D(ψ)` for a field on any cutoff; the basis is enlarged to hold the field modes.
pub fn eval_gl_functional(psi: &GlField, d: f64, coeffs: &GlCoefficients, fields: &ExternalFields) -> Result<f64> {
    if psi.dim != coeffs.dim {
        return Err(Error::Domain(format!("field dimension {} differs from {}", psi.dim, coeffs.dim)));
    }
    let cutoff = psi.cutoff.max(2 * fields.max_mode() as usize);
    let psi = psi.embedded(cutoff)?;
    Ok(GlEnergy::new(coeffs, fields, cutoff, d)?.value(&psi.coeffs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayMinimum {
    pub theta: f64,
    pub value: f64,
}

/// Minimum of `θ ↦ 𝓔_D(θψ_*) = Λ₂(D_c - D)θ² + Λ₃‖ψ_*‖₄⁴θ⁴` over `θ >= 0`.
pub fn minimize_gl_ray(d: f64, coeffs: &GlCoefficients, spectral: &GlSpectralResult) -> Result<RayMinimum> {
    if !(coeffs.lambda3 > 0.0) {
        return Err(Error::Precondition(format!("Λ₃ must be positive, got {}", coeffs.lambda3)));
    }
    if d <= spectral.dc {
        return Ok(RayMinimum { theta: 0.0, value: 0.0 });
    }
    let q = coeffs.lambda3 * spectral.psi_star.l4_norm_pow4();
    let a = coeffs.lambda2 * (d - spectral.dc);
    Ok(RayMinimum { theta: (a / (2.0 * q)).sqrt(), value: -a * a / (4.0 * q) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlMinimum {
    pub psi: GlField,
    pub value: f64,
    pub iterations: usize,
    pub grad_norm: f64,
}

/// Stopping rule of the descent.
pub const GRADIENT_TOLERANCE: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 100_000;

/// Minimize `𝓔_D` over the plane-wave basis by preconditioned gradient descent
/// with Armijo backtracking, started from the ray minimizer.
pub fn minimize_gl_full(d: f64, coeffs: &GlCoefficients, fields: &ExternalFields, cutoff: usize) -> Result<GlMinimum> {
    let spectral = compute_dc_with(coeffs, fields, cutoff, false)?;
    let ray = minimize_gl_ray(d, coeffs, &spectral)?;
    let energy = GlEnergy::new(coeffs, fields, cutoff, d)?;
    let n = energy.len();
    // diagonal preconditioner; the floor is the amplitude curvature 4Λ₂(D - D_c) of the ray
    // minimum halved for the Wirtinger gradient, so a unit step is a Newton step there
    let floor = 2.0 * coeffs.lambda2 * (d - spectral.dc).abs().max(1e-3);
    let precond: Vec<f64> = (0..n).map(|i| 1.0 / ((energy.diagonal(i) - spectral.eigenvalue).max(0.0) + floor)).collect();

    let mut psi = spectral.psi_star.scaled(ray.theta).coeffs;
    let (mut value, mut grad) = energy.value_and_gradient(&psi);
    let mut step: f64 = 1.0;
    let mut iterations = 0;
    let norm = |g: &[C64]| g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    while norm(&grad) >= GRADIENT_TOLERANCE {
        if iterations == MAX_ITERATIONS {
            return Err(Error::Optimization { iterations, grad_norm: norm(&grad) });
        }
        iterations += 1;
        let dir: Vec<C64> = grad.iter().zip(&precond).map(|(g, p)| -g * *p).collect();
        let slope: f64 = grad.iter().zip(&dir).map(|(g, v)| 2.0 * (g.conj() * v).re).sum();
        let mut accepted = false;
        let mut t = (2.0 * step).min(1.0);
        for _ in 0..60 {
            let trial: Vec<C64> = psi.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
            let (v, g) = energy.value_and_gradient(&trial);
            // near the minimum the decrease drops below rounding; accept on a smaller gradient then
            let flat = (v - value).abs() <= 8.0 * f64::EPSILON * value.abs() && norm(&g) < norm(&grad);
            if v <= value + 1e-4 * t * slope || flat {
                psi = trial;
                value = v;
                grad = g;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // no decrease left at working precision
            break;
        }
        step = t;
    }
    let grad_norm = norm(&grad);
    let psi = GlField { dim: coeffs.dim, cutoff, coeffs: psi };
    if value > 0.0 {
        let zero = GlField::zeros(coeffs.dim, cutoff)?;
        return Ok(GlMinimum { psi: zero, value: 0.0, iterations, grad_norm: 0.0 });
    }
    Ok(GlMinimum { psi, value, iterations, grad_norm })
}
