use serde::{Deserialize, Serialize};

use super::{PairingData, PositionGrid};
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::specfun;

/// Translation-invariant free energy per unit volume and its parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiFreeEnergy {
    pub value: f64,
    pub kinetic: f64,
    pub entropy: f64,
    pub interaction: f64,
    /// Normal-state value `-T ∫ ln(1 + e^{-(p²-μ)/T}) dp`.
    pub normal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialScan {
    pub best_amplitude: f64,
    pub best_value: f64,
    pub normal: f64,
    pub values: Vec<(f64, f64)>,
}

/// Full momentum grid `p_m = (m - N/2) π/L`, `m = 0..N`.
fn momenta(grid: &PositionGrid) -> Vec<f64> {
    let n = grid.points as i64;
    (0..n).map(|m| (m - n / 2) as f64 * grid.momentum_spacing()).collect()
}

/// `𝓕̃_T(γ̂, α̂)` on the momentum grid of `grid` (one dimension).
///
/// Momentum integrals are grid sums with weight `π/L`; the interaction uses
/// the inverse transform `α̃(x) = (2π)^{-1/2} ∫ α̂(p) e^{ipx} dp` on the
/// position grid.
pub fn ti_free_energy(
    gamma_hat: &[f64],
    alpha_hat: &[f64],
    t: f64,
    config: &ModelConfig,
    grid: &PositionGrid,
) -> Result<TiFreeEnergy> {
    if config.dim != 1 {
        return Err(Error::Unsupported("the translation-invariant functional is implemented for d = 1".into()));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("temperature must be positive, got {t}")));
    }
    let n = grid.points;
    if gamma_hat.len() != n || alpha_hat.len() != n {
        return Err(Error::Domain(format!("expected {n} momentum samples")));
    }
    let ps = momenta(grid);
    let dp = grid.momentum_spacing();
    let beta = 1.0 / t;
    let (mut kinetic, mut entropy, mut normal) = (0.0, 0.0, 0.0);
    for m in 0..n {
        let (g, a) = (gamma_hat[m], alpha_hat[m]);
        let det = g * (1.0 - g) - a * a;
        if !(-1e-14..=1.0 + 1e-14).contains(&g) || det < -1e-14 {
            return Err(Error::Domain(format!(
                "momentum mode {m} (p = {}) violates 0 <= γ̂ <= 1, |α̂|² <= γ̂(1-γ̂)",
                ps[m]
            )));
        }
        let e = ps[m] * ps[m] - config.mu;
        kinetic += e * g;
        let hi = 0.5 + ((g - 0.5).powi(2) + a * a).sqrt();
        let lo = det.max(0.0) / hi;
        entropy += specfun::binary_entropy(lo.min(1.0));
        normal += t * specfun::f(beta * e);
    }
    let (kinetic, entropy, normal) = (kinetic * dp, entropy * dp, normal * dp);

    let dx = grid.spacing();
    let c = dp / (2.0 * std::f64::consts::PI).sqrt();
    let mut interaction = 0.0;
    for j in 0..n {
        let x = grid.position(j);
        let v = config.potential.eval(&[x]);
        if v == 0.0 {
            continue;
        }
        let (mut re, mut im) = (0.0, 0.0);
        for m in 0..n {
            let (s, co) = (ps[m] * x).sin_cos();
            re += alpha_hat[m] * co;
            im += alpha_hat[m] * s;
        }
        interaction += dx * v * c * c * (re * re + im * im);
    }
    let value = kinetic - t * entropy + interaction;
    Ok(TiFreeEnergy { value, kinetic, entropy, interaction, normal })
}

/// Scan the trial states with gap `a·t_*(p)` and return the lowest free energy.
pub fn ti_trial_scan(t: f64, pairing: &PairingData, config: &ModelConfig, amplitudes: &[f64]) -> Result<TrialScan> {
    if amplitudes.is_empty() {
        return Err(Error::Domain("empty amplitude list".into()));
    }
    let grid = &pairing.grid;
    let n = grid.points;
    let ps = momenta(grid);
    let beta = 1.0 / t;
    let mut values = Vec::with_capacity(amplitudes.len());
    let mut normal = 0.0;
    for &a in amplitudes {
        let mut gamma = vec![0.0; n];
        let mut alpha = vec![0.0; n];
        for m in 0..n {
            let e = ps[m] * ps[m] - config.mu;
            let d = a * pairing.t_star[(m as i64 - (n / 2) as i64).unsigned_abs() as usize].1;
            let big_e = (e * e + d * d).sqrt();
            // tanh(βE/2) / (2E)
            let s = 0.5 * beta * specfun::g0(beta * big_e);
            alpha[m] = -d * s;
            // γ̂ = (1 - (e/E) tanh(βE/2)) / 2, written without cancellation for |e| ≫ T
            let tail = specfun::fermi(beta * big_e) + if d == 0.0 { 0.0 } else { s * d * d / (big_e + e.abs()) };
            gamma[m] = if e >= 0.0 { tail } else { 1.0 - tail };
        }
        let fe = ti_free_energy(&gamma, &alpha, t, config, grid)?;
        normal = fe.normal;
        values.push((a, fe.value));
    }
    let (best_amplitude, best_value) =
        values.iter().copied().fold((f64::NAN, f64::INFINITY), |b, v| if v.1 < b.1 { v } else { b });
    Ok(TrialScan { best_amplitude, best_value, normal, values })
}
