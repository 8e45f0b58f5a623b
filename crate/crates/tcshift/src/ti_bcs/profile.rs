use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::specfun;

/// Bessel function of the first kind `J_n(u)` by the trapezoid rule on the
/// periodic integral `(1/2π) ∫ cos(nτ - u sin τ) dτ`, which converges
/// geometrically once the number of nodes exceeds `|u| + n`.
pub fn bessel_j(n: u32, u: f64) -> f64 {
    let m = 2 * (u.abs().ceil() as usize + n as usize + 24);
    let dt = 2.0 * PI / m as f64;
    let s: f64 = (0..m)
        .map(|k| {
            let t = k as f64 * dt;
            (n as f64 * t - u * t.sin()).cos()
        })
        .sum();
    s / m as f64
}

/// Angular average of `e^{i p·x}` over the sphere of radius `u = |p||x|`.
pub fn plane_wave_average(dim: usize, u: f64) -> f64 {
    match dim {
        1 => u.cos(),
        2 => bessel_j(0, u),
        _ => {
            if u.abs() < 1e-3 {
                let u2 = u * u;
                1.0 - u2 / 6.0 + u2 * u2 / 120.0
            } else {
                u.sin() / u
            }
        }
    }
}

/// Derivative of `plane_wave_average` in `u`.
pub fn plane_wave_average_deriv(dim: usize, u: f64) -> f64 {
    match dim {
        1 => -u.sin(),
        2 => -bessel_j(1, u),
        _ => {
            if u.abs() < 1e-3 {
                let u2 = u * u;
                -u / 3.0 + u * u2 / 30.0 - u * u2 * u2 / 840.0
            } else {
                (u * u.cos() - u.sin()) / (u * u)
            }
        }
    }
}

/// Radial quadrature representation of the pairing function: nodes `r_j`,
/// weights `w_j` (including the angular measure), `α_*(r_j)` and
/// `V(r_j) α_*(r_j)`. In one dimension the nodes are `|x_j|` of the position
/// grid with weight `dx`, so even functions are represented exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairProfile {
    pub dim: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub alpha: Vec<f64>,
    pub v_alpha: Vec<f64>,
    /// When set, `α̂_*` is recovered from `t_*` through the eigenvalue
    /// equation instead of from the `α_*` samples.
    #[serde(default)]
    pub alpha_from_t: Option<AlphaFromT>,
}

/// `α̂_*(p) = t_*(p) / (2 (K_{T_c}(p² - μ) - λ))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaFromT {
    pub tc: f64,
    pub mu: f64,
    pub eigenvalue: f64,
}

impl PairProfile {
    fn norm_const(&self) -> f64 {
        (2.0 * PI).powf(-(self.dim as f64) / 2.0)
    }

    /// Drop nodes where `V α` vanishes for the `t` evaluations.
    fn support(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&j| self.v_alpha[j] != 0.0)
    }

    /// `t_*(p) = -2 (2π)^{-d/2} ∫ V α_* e^{-ip·x} dx` at `|p| = p`.
    pub fn t(&self, p: f64) -> f64 {
        let s: f64 =
            self.support().map(|j| self.weights[j] * self.v_alpha[j] * plane_wave_average(self.dim, p * self.nodes[j])).sum();
        -2.0 * self.norm_const() * s
    }

    /// Radial derivative `dt_*/d|p|`.
    pub fn dt(&self, p: f64) -> f64 {
        let s: f64 = self
            .support()
            .map(|j| {
                let r = self.nodes[j];
                self.weights[j] * self.v_alpha[j] * r * plane_wave_average_deriv(self.dim, p * r)
            })
            .sum();
        -2.0 * self.norm_const() * s
    }

    /// Laplacian `Σ_j ∂_j² t_*(p) = 2 (2π)^{-d/2} ∫ |x|² V α_* e^{-ip·x} dx`.
    pub fn laplacian_t(&self, p: f64) -> f64 {
        let s: f64 = self
            .support()
            .map(|j| {
                let r = self.nodes[j];
                self.weights[j] * r * r * self.v_alpha[j] * plane_wave_average(self.dim, p * r)
            })
            .sum();
        2.0 * self.norm_const() * s
    }

    /// Hessian entry `∂_j ∂_k t_*(p)` at the vector `p`, for the radial profile.
    pub fn hessian_t(&self, p: &[f64], j: usize, k: usize) -> f64 {
        let d = self.dim;
        let r = p.iter().take(d).map(|v| v * v).sum::<f64>().sqrt();
        let delta = if j == k { 1.0 } else { 0.0 };
        if d == 1 || r < 1e-10 {
            return delta * self.laplacian_t(r) / d as f64;
        }
        let lap = self.laplacian_t(r);
        let d1 = self.dt(r) / r;
        // Δt = t'' + (d-1) t'/r
        let d2 = lap - (d as f64 - 1.0) * d1;
        let (pj, pk) = (p[j] / r, p[k] / r);
        d2 * pj * pk + d1 * (delta - pj * pk)
    }

    /// `α̂_*(p) = (2π)^{-d/2} ∫ α_* e^{-ip·x} dx`.
    pub fn alpha_hat(&self, p: f64) -> f64 {
        if let Some(r) = self.alpha_from_t {
            return self.t(p) / (2.0 * (specfun::kt(p * p - r.mu, r.tc) - r.eigenvalue));
        }
        let s: f64 = (0..self.nodes.len())
            .map(|j| self.weights[j] * self.alpha[j] * plane_wave_average(self.dim, p * self.nodes[j]))
            .sum();
        self.norm_const() * s
    }

    /// `∫ α_*` and `‖α_*‖²` from the quadrature.
    pub fn moments(&self) -> (f64, f64) {
        let a: f64 = (0..self.nodes.len()).map(|j| self.weights[j] * self.alpha[j]).sum();
        let b: f64 = (0..self.nodes.len()).map(|j| self.weights[j] * self.alpha[j] * self.alpha[j]).sum();
        (a, b)
    }

    /// Smallest `Q` on a step grid beyond which `|t_*| < rel * max |t_*|` stays true.
    pub fn momentum_cutoff(&self, rel: f64, step: f64, p_max: f64) -> f64 {
        let n = (p_max / step).ceil() as usize;
        let vals: Vec<f64> = (0..=n).map(|i| self.t(i as f64 * step).abs()).collect();
        let tmax = vals.iter().cloned().fold(0.0, f64::max);
        if tmax == 0.0 {
            return 0.0;
        }
        let last = vals.iter().rposition(|&v| v >= rel * tmax).unwrap_or(0);
        ((last + 1) as f64 * step).min(p_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_reference_values() {
        // reference values to double precision
        assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j(1, 2.5) - 0.497_094_102_464_274_4).abs() < 1e-15);
        assert!((bessel_j(0, 50.0) - 0.055_812_327_669_251_86).abs() < 1e-14);
    }
}
