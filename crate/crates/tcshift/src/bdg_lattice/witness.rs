use serde::{Deserialize, Serialize};

use super::operators::GapOperator;
use super::system::{bcs_free_energy, Lattice, LatticeSystem};
use crate::error::{Error, Result};
use crate::gl::{GlCoefficients, GlSpectralResult};
use crate::model::ModelConfig;
use crate::ti_bcs::PairingData;

/// Amplitudes per temperature in the trial scan.
pub const THETA_POINTS: usize = 41;
/// Bisection tolerance in `D = (1 - T/T_c)/h²`, i.e. `1e-4 h² T_c` in `T`.
pub const SHIFT_TOLERANCE: f64 = 1e-4;
/// Largest relative `‖·‖₂²` of `ψ_*` that may lie beyond the lattice modes.
pub const PSI_TRUNCATION: f64 = 1e-24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainSample {
    pub t: f64,
    pub d: f64,
    /// `min_θ 𝓕_T(Γ_{θΔ}) - F⁰_T`.
    pub min_gain: f64,
    pub theta: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub h: f64,
    pub n: usize,
    pub fibers_per_axis: usize,
    pub t_witness: f64,
    pub normalized_shift: f64,
    /// No trial state with negative gain was found; `t_witness` is then the lowest temperature tried.
    pub no_witness: bool,
    pub samples: Vec<GainSample>,
}

/// Trial states `Γ_{θΔ}` with `Δ = -(h/2)(ψ_* t_*(-ih∇) + t_*(-ih∇)ψ_*)` at one `h`.
pub struct WitnessScan<'a> {
    pub system: LatticeSystem,
    pairing: &'a PairingData,
    coeffs: &'a GlCoefficients,
    spectral: &'a GlSpectralResult,
    gaps: Vec<GapOperator>,
}

impl<'a> WitnessScan<'a> {
    pub fn new(
        pairing: &'a PairingData,
        coeffs: &'a GlCoefficients,
        spectral: &'a GlSpectralResult,
        config: &ModelConfig,
        lattice: Lattice,
    ) -> Result<Self> {
        if !lattice.resolves_interaction() {
            return Err(Error::Resolution(format!(
                "grid spacing {:.3e} exceeds h/8 = {:.3e}",
                lattice.grid.spacing(),
                lattice.h / 8.0
            )));
        }
        let psi = &spectral.psi_star;
        let (psi, dropped) = psi.truncated(psi.cutoff.min(lattice.grid.half() as usize))?;
        if dropped > PSI_TRUNCATION * psi.norm_sq() {
            return Err(Error::Resolution(format!(
                "ψ_* keeps ‖·‖² = {dropped:e} beyond the grid modes |n| <= {}; increase N",
                lattice.grid.half()
            )));
        }
        let system = LatticeSystem::new(config, lattice)?;
        let t = |q: f64| pairing.t(q);
        let gaps = system.gap(&psi, &t)?;
        Ok(Self { system, pairing, coeffs, spectral, gaps })
    }

    pub fn h(&self) -> f64 {
        self.system.h
    }

    /// `𝓕_T(Γ_{θΔ}) - F⁰_T`, exactly zero at `θ = 0`.
    pub fn gain(&self, t: f64, theta: f64) -> Result<f64> {
        Ok(self.gain_and_reference(t, theta)?.0)
    }

    fn gain_and_reference(&self, t: f64, theta: f64) -> Result<(f64, f64)> {
        if theta == 0.0 {
            return Ok((0.0, self.system.normal_free_energy(t)?));
        }
        let gaps: Vec<GapOperator> = self.gaps.iter().map(|g| g.scaled(theta)).collect();
        let states = self.system.gibbs(&gaps, 1.0 / t)?;
        let f = bcs_free_energy(&states, t, &self.system)?;
        Ok((f.total - f.normal_reference, f.normal_reference))
    }

    /// Amplitude scale `sqrt(Λ₂ max(D - D_c, h) / (2Λ₃‖ψ_*‖₄⁴))`.
    pub fn theta_scale(&self, d: f64) -> f64 {
        let q = self.coeffs.lambda3 * self.spectral.psi_star.l4_norm_pow4();
        (self.coeffs.lambda2 * (d - self.spectral.dc).max(self.h()) / (2.0 * q)).sqrt()
    }

    /// Minimum gain over `θ ∈ [1e-3, 10]·θ_scale`, log-spaced, at `T = T_c(1 - D h²)`.
    pub fn sample(&self, d: f64) -> Result<GainSample> {
        let h = self.h();
        let t = self.pairing.tc * (1.0 - d * h * h);
        if !(t > 0.0) {
            return Err(Error::Domain(format!("shift D = {d} gives a non-positive temperature")));
        }
        let scale = self.theta_scale(d);
        let mut best = (f64::INFINITY, 0.0);
        let mut f0 = 0.0;
        for k in 0..THETA_POINTS {
            let theta = scale * 10f64.powf(-3.0 + 4.0 * k as f64 / (THETA_POINTS - 1) as f64);
            let (gain, reference) = self.gain_and_reference(t, theta)?;
            f0 = reference;
            if gain < best.0 {
                best = (gain, theta);
            }
        }
        Ok(GainSample { t, d, min_gain: best.0, theta: best.1, tolerance: 1e-12 * (1.0 + f0.abs()) })
    }
}

fn record(samples: &mut Vec<GainSample>, s: GainSample) -> GainSample {
    samples.push(s);
    s
}

fn witnessed(s: &GainSample) -> bool {
    s.min_gain < -s.tolerance
}

/// Largest `T` at which some `Γ_{θΔ}` has lower free energy than the normal state,
/// found by bisection in `D = (1 - T/T_c)/h²` around `D_c`.
pub fn trial_state_tc_witness(
    pairing: &PairingData,
    coeffs: &GlCoefficients,
    spectral: &GlSpectralResult,
    config: &ModelConfig,
    lattice: Lattice,
) -> Result<WitnessRecord> {
    let scan = WitnessScan::new(pairing, coeffs, spectral, config, lattice)?;
    let h = scan.h();
    let d_max = 0.999 / (h * h);
    let mut samples = Vec::new();
    let dc = spectral.dc;
    let mut width = 1.0;
    let mut hi = record(&mut samples, scan.sample((dc + width).min(d_max))?);
    while !witnessed(&hi) {
        if hi.d >= d_max {
            let (n, nb) = (scan.system.lattice.grid.n, scan.system.lattice.fibers_per_axis);
            return Ok(WitnessRecord {
                h,
                n,
                fibers_per_axis: nb,
                t_witness: hi.t,
                normalized_shift: hi.d,
                no_witness: true,
                samples,
            });
        }
        width *= 2.0;
        hi = record(&mut samples, scan.sample((dc + width).min(d_max))?);
    }
    let mut width = 1.0;
    let mut lo = record(&mut samples, scan.sample(dc - width)?);
    while witnessed(&lo) {
        hi = lo;
        width *= 2.0;
        lo = record(&mut samples, scan.sample(dc - width)?);
    }
    while hi.d - lo.d > SHIFT_TOLERANCE {
        let mid = record(&mut samples, scan.sample(0.5 * (lo.d + hi.d))?);
        if witnessed(&mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let tc = pairing.tc;
    Ok(WitnessRecord {
        h,
        n: scan.system.lattice.grid.n,
        fibers_per_axis: scan.system.lattice.fibers_per_axis,
        t_witness: hi.t,
        normalized_shift: (tc - hi.t) / (h * h * tc),
        no_witness: false,
        samples,
    })
}
