//! Radial potentials in `d = 2, 3`. The symmetric sector splits into even
//! angular-momentum channels; in channel `ℓ` the operator acts on the
//! Hankel transform `α̂(p)` as
//! `K_T(p² - μ) α̂(p) + ∫ k_ℓ(p, p') α̂(p') p'^{d-1} dp'` with
//! `k_ℓ(p, p') = c_d ∫ V(r) Φ_ℓ(pr) Φ_ℓ(p'r) r^{d-1} dr`, where `Φ_ℓ = J_ℓ`,
//! `c_2 = 1` and `Φ_ℓ = j_ℓ`, `c_3 = 2/π`. Channels `ℓ = 0` and `ℓ = 2` are
//! discretized by Gauss-Legendre Nyström on `[0, πN/2L]`; a ground state in
//! `ℓ = 2` is degenerate and is reported with a zero gap.

use faer::Mat;

use super::profile::{bessel_j, AlphaFromT, PairProfile};
use super::{PositionGrid, SectorProblem, SpectralSolution};
use crate::error::{Error, Result};
use crate::linalg::{eigh_real, eigvalsh_real};
use crate::model::{sphere_area, ModelConfig};
use crate::quad::composite;
use crate::specfun;

fn spherical_j(l: u32, u: f64) -> f64 {
    if u.abs() < 1.0 {
        // Σ_k (-1)^k u^{ℓ+2k} / (k! 2^k (2ℓ+2k+1)!!)
        let mut dfact = 1.0;
        for m in (1..=(2 * l + 1)).step_by(2) {
            dfact *= m as f64;
        }
        let mut term = u.powi(l as i32) / dfact;
        let mut s = term;
        for k in 1..14 {
            term *= -u * u / (2.0 * k as f64 * (2 * l + 2 * k + 1) as f64);
            s += term;
        }
        return s;
    }
    let (s, c) = u.sin_cos();
    match l {
        0 => s / u,
        _ => (3.0 / (u * u) - 1.0) * s / u - 3.0 * c / (u * u),
    }
}

fn channel_fn(dim: usize, l: u32, u: f64) -> f64 {
    if dim == 2 {
        bessel_j(l, u)
    } else {
        spherical_j(l, u)
    }
}

pub(crate) struct RadialProblem {
    dim: usize,
    mu: f64,
    p: Vec<f64>,
    wp: Vec<f64>,
    kern: [Mat<f64>; 2],
    r: Vec<f64>,
    wr: Vec<f64>,
    v: Vec<f64>,
    l2_multiplicity: usize,
    grid: PositionGrid,
}

impl RadialProblem {
    pub(crate) fn new(config: &ModelConfig, grid: &PositionGrid) -> Result<Self> {
        let dim = config.dim;
        let vr = config
            .potential
            .radial_profile()
            .ok_or_else(|| Error::Unsupported(format!("d = {dim} requires a radial potential")))?;
        let pmax = std::f64::consts::PI * grid.points as f64 / (2.0 * grid.half_width);
        let np = grid.points / 2;
        let (p, w) = composite(0.0, pmax, (np / 8).max(1), 8);
        let wp: Vec<f64> = p.iter().zip(&w).map(|(p, w)| w * p.powi(dim as i32 - 1)).collect();
        let range = config.potential.range();
        let (r, wr) = composite(0.0, range, ((range * pmax / 2.0).ceil() as usize).max(4), 16);
        let v: Vec<f64> = r.iter().map(|&x| vr(x)).collect();
        let c = if dim == 2 { 1.0 } else { 2.0 / std::f64::consts::PI };
        let sq: Vec<f64> = wp.iter().map(|x| x.sqrt()).collect();
        let kernel = |l: u32| {
            let table = Mat::from_fn(p.len(), r.len(), |i, k| channel_fn(dim, l, p[i] * r[k]));
            let scaled = Mat::from_fn(p.len(), r.len(), |i, k| {
                table[(i, k)] * c * v[k] * wr[k] * r[k].powi(dim as i32 - 1) * sq[i]
            });
            let right = Mat::from_fn(r.len(), p.len(), |k, j| table[(j, k)] * sq[j]);
            &scaled * &right
        };
        let kern = [kernel(0), kernel(2)];
        Ok(Self {
            dim,
            mu: config.mu,
            p,
            wp,
            kern,
            r,
            wr,
            v,
            l2_multiplicity: if dim == 2 { 2 } else { 5 },
            grid: *grid,
        })
    }

    fn matrix(&self, channel: usize, t: f64) -> Mat<f64> {
        let mut m = self.kern[channel].clone();
        for (i, &p) in self.p.iter().enumerate() {
            m[(i, i)] += specfun::kt(p * p - self.mu, t);
        }
        m
    }

    fn spectrum_summary(&self, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((eigvalsh_real(&self.matrix(0, t))?, eigvalsh_real(&self.matrix(1, t))?))
    }
}

impl SectorProblem for RadialProblem {
    fn lowest_two(&self, t: f64) -> Result<(f64, f64)> {
        let (s0, s2) = self.spectrum_summary(t)?;
        let mut all: Vec<f64> = s0.iter().take(2).copied().collect();
        all.extend(std::iter::repeat_n(s2[0], self.l2_multiplicity));
        all.sort_by(|a, b| a.total_cmp(b));
        Ok((all[0], all[1]))
    }

    fn solve(&self, t: f64) -> Result<SpectralSolution> {
        let m = self.matrix(0, t);
        let (vals, vecs) = eigh_real(&m)?;
        let l2 = eigvalsh_real(&self.matrix(1, t))?[0];
        let n = vals.len();
        let u: Vec<f64> = (0..n).map(|i| vecs[(i, 0)]).collect();
        let mut residual: f64 = 0.0;
        for i in 0..n {
            let ri: f64 = (0..n).map(|j| m[(i, j)] * u[j]).sum::<f64>() - vals[0] * u[i];
            residual += ri * ri;
        }
        let area = sphere_area(self.dim);
        let norm = (area * u.iter().map(|x| x * x).sum::<f64>()).sqrt();
        let mut ahat: Vec<f64> = (0..n).map(|i| u[i] / (self.wp[i].sqrt() * norm)).collect();
        if ahat[0] < 0.0 {
            ahat.iter_mut().for_each(|x| *x = -*x);
        }
        let c = if self.dim == 2 { 1.0 } else { (2.0 / std::f64::consts::PI).sqrt() };
        let alpha: Vec<f64> = self
            .r
            .iter()
            .map(|&r| c * (0..n).map(|i| self.wp[i] * ahat[i] * channel_fn(self.dim, 0, self.p[i] * r)).sum::<f64>())
            .collect();
        let (gap, lowest) = if l2 < vals[0] { (0.0, l2) } else { ((vals[1] - vals[0]).min(l2 - vals[0]), vals[0]) };
        Ok(SpectralSolution { eigenvalue: lowest, eigenvector: alpha, residual_norm: residual.sqrt(), gap_to_next: gap })
    }

    fn profile(&self, sol: &SpectralSolution, t: f64) -> PairProfile {
        let area = sphere_area(self.dim);
        let weights = self.r.iter().zip(&self.wr).map(|(r, w)| area * w * r.powi(self.dim as i32 - 1)).collect();
        let v_alpha = self.v.iter().zip(&sol.eigenvector).map(|(v, a)| v * a).collect();
        PairProfile {
            dim: self.dim,
            nodes: self.r.clone(),
            weights,
            alpha: sol.eigenvector.clone(),
            v_alpha,
            alpha_from_t: Some(AlphaFromT { tc: t, mu: self.mu, eigenvalue: sol.eigenvalue }),
        }
    }

    fn momentum_grid(&self) -> Vec<f64> {
        let dp = self.grid.momentum_spacing();
        (0..=self.grid.points / 2).map(|m| m as f64 * dp).collect()
    }
}
