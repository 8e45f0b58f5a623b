use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::operators::{assemble_hdelta, field_modes, make_symmetrized_pair, GapOperator, OneBody};
use super::state::gibbs_state;
use super::system::{h1_norm_sq, Lattice};
use crate::error::{Error, Result};
use crate::gl::GlField;
use crate::linalg::{block, eigvalsh, CMat};
use crate::model::{sphere_area, ExternalFields, Mode};
use crate::quad::composite_breaks;
use crate::specfun;
use crate::ti_bcs::PairingData;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalRecord {
    pub h: f64,
    pub n: usize,
    pub fibers_per_axis: usize,
    pub lhs: f64,
    pub e1_term: f64,
    pub e2_term: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaDeviationRecord {
    pub h: f64,
    pub n: usize,
    pub fibers_per_axis: usize,
    pub h1_norm_dev: f64,
    pub h1_norm_lead: f64,
}

/// Norms of `ψ` entering the expansion coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldMoments {
    pub norm_sq: f64,
    /// `‖∇ψ‖²`.
    pub grad_sq: f64,
    /// `‖(∇ + 2iA)ψ‖²`.
    pub covariant_sq: f64,
    /// `⟨ψ|W|ψ⟩`.
    pub w_expectation: f64,
    /// `‖ψ‖₄⁴`.
    pub l4_pow4: f64,
}

impl FieldMoments {
    pub fn new(psi: &GlField, fields: &ExternalFields) -> Self {
        let modes = field_modes(psi);
        let mom = |n: &Mode| [2.0 * PI * n[0] as f64, 2.0 * PI * n[1] as f64, 2.0 * PI * n[2] as f64];
        let mut cov: BTreeMap<Mode, [C64; 3]> = BTreeMap::new();
        let mut grad_sq = 0.0;
        for (n, c) in &modes {
            let p = mom(n);
            grad_sq += (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) * c.norm_sqr();
            let e = cov.entry(*n).or_default();
            for j in 0..3 {
                e[j] += p[j] * c;
            }
            for (m, a) in &fields.a_hat {
                let e = cov.entry([n[0] + m[0], n[1] + m[1], n[2] + m[2]]).or_default();
                for j in 0..3 {
                    e[j] += 2.0 * a[j] * c;
                }
            }
        }
        let covariant_sq = cov.values().map(|v| v.iter().map(|c| c.norm_sqr()).sum::<f64>()).sum();
        let mut w = C64::new(0.0, 0.0);
        for (n, c) in &modes {
            for (m, d) in &modes {
                w += c.conj() * fields.w(&[n[0] - m[0], n[1] - m[1], n[2] - m[2]]) * d;
            }
        }
        Self {
            norm_sq: psi.norm_sq(),
            grad_sq,
            covariant_sq,
            w_expectation: w.re,
            l4_pow4: psi.l4_norm_pow4(),
        }
    }
}

/// Radial momentum integrals `∫ F(|q|) dq/(2π)^d` of the expansion, at inverse temperature `β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionIntegrals {
    /// `∫ t² g₀(β(q²-μ))`.
    pub j0: f64,
    /// `∫ t Δt g₀`.
    pub j_lap: f64,
    /// `∫ t² (g₁ + 2β q²/d g₂)`.
    pub j_mass: f64,
    /// `∫ t² g₁`.
    pub j_w: f64,
    /// `∫ t⁴ g₁(β(q²-μ)) / (q²-μ)`.
    pub j_quartic: f64,
}

impl ExpansionIntegrals {
    pub fn new(pairing: &PairingData, beta: f64) -> Self {
        let (d, mu) = (pairing.dim, pairing.mu);
        let q = pairing.momentum_cutoff();
        let mut breaks = vec![0.0];
        if mu > 0.0 && mu.sqrt() < q {
            breaks.push(mu.sqrt());
        }
        breaks.push(q);
        let width = 0.125f64.min(0.5 / (beta * (1.0 + 2.0 * mu.max(0.0).sqrt())));
        let (nodes, weights) = if q > 0.0 { composite_breaks(&breaks, width, 16) } else { (vec![], vec![]) };
        let mut s = [0.0; 5];
        for (&p, &w) in nodes.iter().zip(&weights) {
            let t = pairing.t(p);
            let z = beta * (p * p - mu);
            let m = w * p.powi(d as i32 - 1);
            let g0 = specfun::g0(z);
            let g1 = specfun::g1(z);
            s[0] += m * t * t * g0;
            s[1] += m * t * pairing.profile.laplacian_t(p) * g0;
            s[2] += m * t * t * (g1 + 2.0 * beta * p * p / d as f64 * specfun::g2(z));
            s[3] += m * t * t * g1;
            s[4] += m * t.powi(4) * beta * specfun::g1_over_z(z);
        }
        let c = sphere_area(d) / (2.0 * PI).powi(d as i32);
        Self { j0: c * s[0], j_lap: c * s[1], j_mass: c * s[2], j_w: c * s[3], j_quartic: c * s[4] }
    }

    /// `E₁ = -(β/2)‖ψ‖² ∫ t² g₀`.
    pub fn e1(&self, beta: f64, m: &FieldMoments) -> f64 {
        -0.5 * beta * m.norm_sq * self.j0
    }

    /// `E₂`, with `∫ t ∂_j∂_k t g₀ = δ_jk/d ∫ t Δt g₀` and `∫ t² q_j q_k g₂ = δ_jk/d ∫ t² q² g₂` for radial `t`.
    pub fn e2(&self, beta: f64, d: usize, m: &FieldMoments) -> f64 {
        let b2 = beta * beta;
        -beta / 8.0 * m.grad_sq / d as f64 * self.j_lap
            + b2 / 8.0 * m.covariant_sq * self.j_mass
            + b2 / 2.0 * m.w_expectation * self.j_w
            + b2 / 8.0 * m.l4_pow4 * self.j_quartic
    }
}

fn check_coverage(pairing: &PairingData, lattice: &Lattice, psi: &GlField) -> Result<()> {
    if psi.dim != pairing.dim || lattice.grid.dim != pairing.dim {
        return Err(Error::Domain("ψ, lattice and pairing data must share the dimension".into()));
    }
    let q = pairing.momentum_cutoff();
    if lattice.momentum_reach() < q {
        return Err(Error::Resolution(format!(
            "grid reaches |hp| = {:.3} below the decay scale {q:.3} of t_*; increase N",
            lattice.momentum_reach()
        )));
    }
    Ok(())
}

/// `(h^d/β) Tr₀[f(βH_Δ) - f(βH₀)]` against `h²E₁ + h⁴E₂`.
pub fn semiclassical_residual(
    psi: &GlField,
    pairing: &PairingData,
    beta: f64,
    fields: &ExternalFields,
    lattice: &Lattice,
) -> Result<SemiclassicalRecord> {
    check_coverage(pairing, lattice, psi)?;
    let h = lattice.h;
    let t = |q: f64| pairing.t(q);
    let mut acc = 0.0;
    for g in lattice.fibers() {
        let one = OneBody::new(h, pairing.mu, fields, &g)?;
        let gap = GapOperator::new(psi, &t, h, &g)?;
        if gap.is_zero() {
            continue;
        }
        let with = eigvalsh(&assemble_hdelta(&one, &gap)?)?;
        let mut without = eigvalsh(&one.h_op)?;
        without.extend(eigvalsh(&one.h_bar)?.into_iter().map(|x| -x));
        let sum = |v: &[f64]| v.iter().map(|&l| specfun::f(beta * l)).sum::<f64>();
        acc += sum(&with) - sum(&without);
    }
    let d = pairing.dim;
    let lhs = h.powi(d as i32) / beta * lattice.fiber_weight() * acc;
    let m = FieldMoments::new(psi, fields);
    let ints = ExpansionIntegrals::new(pairing, beta);
    let e1_term = h * h * ints.e1(beta, &m);
    let e2_term = h.powi(4) * ints.e2(beta, d, &m);
    Ok(SemiclassicalRecord {
        h,
        n: lattice.grid.n,
        fibers_per_axis: lattice.fibers_per_axis,
        lhs,
        e1_term,
        e2_term,
        residual: lhs - e1_term - e2_term,
    })
}

/// `φ(p) = (β/2) g₀(β(p² - μ)) t_*(p)`.
pub fn leading_profile(pairing: &PairingData, beta: f64) -> impl Fn(f64) -> f64 + '_ {
    move |q: f64| 0.5 * beta * specfun::g0(beta * (q * q - pairing.mu)) * pairing.t(q)
}

/// `‖α_Δ - (h/2)(ψφ(-ih∇) + φ(-ih∇)ψ)‖_{H¹}` and the `H¹` norm of the leading term.
pub fn alpha_delta_deviation(
    psi: &GlField,
    pairing: &PairingData,
    beta: f64,
    fields: &ExternalFields,
    lattice: &Lattice,
) -> Result<AlphaDeviationRecord> {
    check_coverage(pairing, lattice, psi)?;
    let h = lattice.h;
    let t = |q: f64| pairing.t(q);
    let phi = leading_profile(pairing, beta);
    let grids = lattice.fibers();
    let mut dev: Vec<CMat> = Vec::with_capacity(grids.len());
    let mut lead: Vec<CMat> = Vec::with_capacity(grids.len());
    for g in &grids {
        let one = OneBody::new(h, pairing.mu, fields, g)?;
        let gap = GapOperator::new(psi, &t, h, g)?;
        let state = gibbs_state(&assemble_hdelta(&one, &gap)?, beta, g)?;
        let l = make_symmetrized_pair(psi, &phi, h, g)?;
        dev.push(&block(&state.gamma, g.len(), 0, 1) - &l);
        lead.push(l);
    }
    let w = lattice.fiber_weight();
    Ok(AlphaDeviationRecord {
        h,
        n: lattice.grid.n,
        fibers_per_axis: lattice.fibers_per_axis,
        h1_norm_dev: h1_norm_sq(&dev, &grids, h, w).sqrt(),
        h1_norm_lead: h1_norm_sq(&lead, &grids, h, w).sqrt(),
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::Domain("a log-log fit needs at least two positive points".into()));
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}
