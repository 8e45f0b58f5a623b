//! Ginzburg-Landau coefficients, the periodic linearized operator and the
//! quartic functional on the unit cell.

mod energy;
mod operator;

use serde::{Deserialize, Serialize};

pub use energy::{eval_gl_functional, minimize_gl_full, minimize_gl_ray, GlEnergy, GlMinimum, RayMinimum};
pub use operator::{assemble_gl_operator, compute_dc, compute_dc_with, default_cutoff, GlSpectralResult};

use crate::bdg_lattice::TorusGrid;
use crate::error::{Error, Result};
use crate::model::{sphere_area, Mode};
use crate::quad::composite_breaks;
use crate::specfun;
use crate::ti_bcs::PairingData;
use num_complex::Complex64 as C64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlCoefficients {
    pub dim: usize,
    /// `d × d` effective mass matrix.
    pub lambda0: Vec<Vec<f64>>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub beta_c: f64,
    /// Largest change of a coefficient when the quadrature is refined.
    pub quadrature_error_estimate: f64,
}

impl GlCoefficients {
    /// Coefficients with `Λ₀ = lambda0 · 1`.
    pub fn isotropic(dim: usize, lambda0: f64, lambda1: f64, lambda2: f64, lambda3: f64) -> Self {
        let l0 = (0..dim).map(|i| (0..dim).map(|j| if i == j { lambda0 } else { 0.0 }).collect()).collect();
        Self {
            dim,
            lambda0: l0,
            lambda1,
            lambda2,
            lambda3,
            beta_c: f64::NAN,
            quadrature_error_estimate: 0.0,
        }
    }

    /// `p·Λ₀q` over the first `dim` components.
    pub fn quad_form(&self, p: &[f64], q: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += p[i] * self.lambda0[i][j] * q[j];
            }
        }
        s
    }

    fn check(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) || self.lambda0.len() != self.dim || self.lambda0.iter().any(|r| r.len() != self.dim)
        {
            return Err(Error::Domain(format!("Λ₀ must be a {0}×{0} matrix", self.dim)));
        }
        Ok(())
    }
}

/// Relative tolerance on the quadrature refinement change.
pub const COEFFICIENT_TOLERANCE: f64 = 1e-8;

/// `Λ₀ … Λ₃` from `t_*` at `β_c`.
///
/// The integrands depend on `|p|` only (with `p_i p_j → δ_ij p²/d` under the
/// angular average), so the integrals are one-dimensional: composite
/// Gauss-Legendre on `[0, Q]` split at the Fermi momentum, with `Q` the point
/// past which `|t_*| < 1e-10 max|t_*|`. The estimate is the change under
/// halving the panel width.
pub fn compute_gl_coefficients(pairing: &PairingData) -> Result<GlCoefficients> {
    let beta = pairing.beta_c;
    let (dim, mu) = (pairing.dim, pairing.mu);
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::Precondition(format!("β_c must be positive, got {beta}")));
    }
    let q = pairing.momentum_cutoff();
    let mut breaks = vec![0.0];
    if mu > 0.0 && mu.sqrt() < q {
        breaks.push(mu.sqrt());
    }
    breaks.push(q);
    let width = 0.25f64.min(pairing.tc / (1.0 + 2.0 * mu.max(0.0).sqrt()));
    let integrals = |w: f64| -> [f64; 4] {
        let (nodes, weights) = if q > 0.0 { composite_breaks(&breaks, w, 16) } else { (vec![], vec![]) };
        let mut s = [0.0; 5];
        for (&p, &wt) in nodes.iter().zip(&weights) {
            let t = pairing.t(p);
            let e = p * p - mu;
            let z = beta * e;
            let m = wt * p.powi(dim as i32 - 1) * t * t;
            let g1 = specfun::g1(z);
            s[0] += m * g1;
            s[1] += m * 2.0 * beta * p * p / dim as f64 * specfun::g2(z);
            s[2] += m * g1;
            let ch = (0.5 * z).cosh();
            s[3] += m / (ch * ch);
            s[4] += m * t * t * beta * specfun::g1_over_z(z);
        }
        let c = sphere_area(dim) / (2.0 * std::f64::consts::PI).powi(dim as i32);
        let b2 = beta * beta;
        [
            c * b2 / 16.0 * (s[0] + s[1]),
            c * b2 / 4.0 * s[2],
            c * beta / 8.0 * s[3],
            c * b2 / 16.0 * s[4],
        ]
    };
    let coarse = integrals(width);
    let fine = integrals(0.5 * width);
    let err = (0..4).map(|i| (fine[i] - coarse[i]).abs()).fold(0.0, f64::max);
    let scale = (0..4).map(|i| fine[i].abs()).fold(0.0, f64::max);
    if err > COEFFICIENT_TOLERANCE * scale {
        return Err(Error::Accuracy { estimate: err, tol: COEFFICIENT_TOLERANCE * scale });
    }
    let mut c = GlCoefficients::isotropic(dim, fine[0], fine[1], fine[2], fine[3]);
    c.beta_c = beta;
    c.quadrature_error_estimate = err;
    Ok(c)
}

/// Plane-wave expansion `ψ(x) = Σ ψ̂(n) e^{2πi n·x}` with `|n_i| <= cutoff`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlField {
    pub dim: usize,
    pub cutoff: usize,
    /// Coefficients in the mode order of [`GlField::basis`].
    pub coeffs: Vec<C64>,
}

impl GlField {
    pub fn zeros(dim: usize, cutoff: usize) -> Result<Self> {
        let basis = mode_basis(dim, cutoff)?;
        Ok(Self { dim, cutoff, coeffs: vec![C64::new(0.0, 0.0); basis.len()] })
    }

    pub fn constant(dim: usize, cutoff: usize, c: C64) -> Result<Self> {
        let mut f = Self::zeros(dim, cutoff)?;
        let i = f.basis().index_of(&[0; 3]).expect("zero mode");
        f.coeffs[i] = c;
        Ok(f)
    }

    pub fn from_modes(dim: usize, cutoff: usize, modes: &[(Mode, C64)]) -> Result<Self> {
        let mut f = Self::zeros(dim, cutoff)?;
        let basis = f.basis();
        for (n, c) in modes {
            let i = basis
                .index_of(n)
                .ok_or_else(|| Error::Domain(format!("mode {n:?} lies outside the cutoff {cutoff}")))?;
            f.coeffs[i] += c;
        }
        Ok(f)
    }

    pub fn basis(&self) -> TorusGrid {
        mode_basis(self.dim, self.cutoff).expect("validated on construction")
    }

    pub fn get(&self, n: &Mode) -> C64 {
        self.basis().index_of(n).map(|i| self.coeffs[i]).unwrap_or_default()
    }

    /// `‖ψ‖₂²` over the unit cell.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * s).collect(), ..self.clone() }
    }

    /// The same field on a larger cutoff.
    pub fn embedded(&self, cutoff: usize) -> Result<Self> {
        if cutoff < self.cutoff {
            return Err(Error::Domain(format!("cannot embed cutoff {} into {cutoff}", self.cutoff)));
        }
        let src = self.basis();
        let mut f = Self::zeros(self.dim, cutoff)?;
        let dst = f.basis();
        for (i, c) in self.coeffs.iter().enumerate() {
            f.coeffs[dst.index_of(&src.mode(i)).expect("larger basis")] = *c;
        }
        Ok(f)
    }

    /// The field restricted to a smaller cutoff, with the dropped `‖·‖₂²`.
    pub fn truncated(&self, cutoff: usize) -> Result<(Self, f64)> {
        if cutoff >= self.cutoff {
            return Ok((self.embedded(cutoff)?, 0.0));
        }
        let mut f = Self::zeros(self.dim, cutoff)?;
        let dst = f.basis();
        let src = self.basis();
        let mut dropped = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            match dst.index_of(&src.mode(i)) {
                Some(j) => f.coeffs[j] = *c,
                None => dropped += c.norm_sqr(),
            }
        }
        Ok((f, dropped))
    }

    /// `‖ψ‖₄⁴` by synthesis on a grid with `4M + 1` points per axis.
    pub fn l4_norm_pow4(&self) -> f64 {
        energy::Synthesis::new(self.dim, self.cutoff).quartic(&self.coeffs)
    }
}

/// Modes `n ∈ [-M, M]^d`, indexed like the points of a torus grid with `N = 2M`.
pub fn mode_basis(dim: usize, cutoff: usize) -> Result<TorusGrid> {
    if cutoff == 0 {
        return Err(Error::Domain("plane-wave cutoff must be at least 1".into()));
    }
    TorusGrid::new(dim, 2 * cutoff)
}

/// Predicted critical temperature `T_c (1 - D_c h²)` and the known error orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcPrediction {
    pub h: f64,
    pub tc: f64,
    pub dc: f64,
    pub t_pred: f64,
    /// Order of the gap between the lower bound on the normalized shift and `-D_c`.
    pub lower_error_order: String,
    /// Order of the gap between the upper bound on the normalized shift and `-D_c`.
    pub upper_error_order: String,
}

pub fn predict_critical_temperature(h: f64, tc: f64, dc: f64, dim: usize) -> Result<TcPrediction> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::Domain(format!("h must lie in (0, 1), got {h}")));
    }
    let upper = match dim {
        1 => "O(h^(1/3))",
        2 => "O(h^(1/3) ln(1/h)^(1/6))",
        3 => "O(h^(1/5))",
        _ => return Err(Error::Domain(format!("dimension must be 1, 2 or 3, got {dim}"))),
    };
    Ok(TcPrediction {
        h,
        tc,
        dc,
        t_pred: tc * (1.0 - dc * h * h),
        lower_error_order: "O(h)".into(),
        upper_error_order: upper.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prediction_arithmetic() {
        let p = predict_critical_temperature(0.1, 1.0, 2.0, 1).unwrap();
        assert!((p.t_pred - 0.98).abs() < 1e-15);
        assert_eq!(predict_critical_temperature(0.3, 0.7, 0.0, 2).unwrap().t_pred, 0.7);
        assert!(predict_critical_temperature(0.1, 1.0, -3.0, 3).unwrap().t_pred > 1.0);
        assert!(predict_critical_temperature(1.0, 1.0, 0.0, 1).is_err());
    }

    #[test]
    fn field_embedding_keeps_modes() {
        let f = GlField::from_modes(2, 1, &[([1, -1, 0], C64::new(0.5, 0.25))]).unwrap();
        let g = f.embedded(3).unwrap();
        assert_eq!(g.get(&[1, -1, 0]), C64::new(0.5, 0.25));
        assert_eq!(g.norm_sq(), f.norm_sq());
    }
}
