//! Translation-invariant problem: the linearized BCS operator
//! `K_T(-i∇) + V` on reflection-symmetric functions, its critical
//! temperature, the pairing function `α_*` and its momentum profile `t_*`.
//!
//! In one dimension the operator is discretized on the periodic box
//! `[-L, L)` with `N` points: `K_T` acts as a Fourier multiplier and `V` is
//! diagonal. The symmetric subspace is spanned by the reflection orbits
//! `{x, -x}` of grid points, which is the range of `v(x) ← (v(x)+v(-x))/2`.
//! For `d = 2, 3` the problem is solved for radial potentials in the
//! angular-momentum channels by a Nyström method (see `radial`).

mod functional;
mod profile;
mod radial;

use std::f64::consts::PI;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh_real, eigvalsh_real};
use crate::model::ModelConfig;
use crate::specfun;

pub use functional::{ti_free_energy, ti_trial_scan, TiFreeEnergy, TrialScan};
pub use profile::{bessel_j, plane_wave_average, AlphaFromT, PairProfile};

/// Periodic box `[-L, L)^d` with `N` points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionGrid {
    pub half_width: f64,
    pub points: usize,
}

impl PositionGrid {
    pub fn new(half_width: f64, points: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Domain(format!("box half-width must be positive, got {half_width}")));
        }
        if points < 4 || points % 2 != 0 {
            return Err(Error::Domain(format!("points per axis must be even and at least 4, got {points}")));
        }
        Ok(Self { half_width, points })
    }

    /// L = 40, N = 1024.
    pub fn benchmark() -> Self {
        Self { half_width: 40.0, points: 1024 }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    /// Momentum spacing `π / L` of the box.
    pub fn momentum_spacing(&self) -> f64 {
        PI / self.half_width
    }

    /// Same box with the point count scaled, rounded to an even number.
    pub fn scaled(&self, factor: f64) -> Self {
        let n = ((self.points as f64 * factor / 2.0).round() as usize * 2).max(4);
        Self { points: n, ..*self }
    }

    pub fn position(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    /// Require at least 8 points across the potential width when it has one.
    pub fn check_resolves(&self, config: &ModelConfig) -> Result<()> {
        if let Some(&s) = config.potential.params.get("width") {
            if self.spacing() > s.abs() / 8.0 {
                return Err(Error::Resolution(format!(
                    "grid spacing {} does not resolve potential width {s} with 8 points",
                    self.spacing()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSolution {
    pub eigenvalue: f64,
    /// Samples of the eigenfunction, `L²`-normalized: the position grid in
    /// one dimension, the radial nodes of the profile otherwise.
    pub eigenvector: Vec<f64>,
    pub residual_norm: f64,
    pub gap_to_next: f64,
}

/// Result of the critical temperature search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcSearch {
    pub tc: f64,
    pub bracket: (f64, f64),
    pub evaluations: usize,
    pub lowest_at_zero: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingData {
    pub dim: usize,
    pub mu: f64,
    pub tc: f64,
    pub beta_c: f64,
    pub grid: PositionGrid,
    /// Lowest eigenvalue at `T_c` (zero up to the bisection tolerance).
    pub eigenvalue: f64,
    pub residual_norm: f64,
    pub simplicity_gap: f64,
    pub alpha_star: Vec<f64>,
    /// `(|p|, t_*(p))` on the momentum grid of the box.
    pub t_star: Vec<(f64, f64)>,
    pub profile: PairProfile,
}

impl PairingData {
    pub fn t(&self, p: f64) -> f64 {
        self.profile.t(p)
    }

    /// Momentum cutoff `Q` with `|t_*(q)| < 1e-10 max|t_*|` for `q > Q`.
    pub fn momentum_cutoff(&self) -> f64 {
        let pmax = self.t_star.last().map(|v| v.0).unwrap_or(0.0);
        self.profile.momentum_cutoff(1e-10, 0.05, pmax.max(1.0))
    }
}

/// Discretized symmetric-sector problem, independent of `T` apart from the multiplier.
pub(crate) trait SectorProblem {
    /// Lowest two eigenvalues.
    fn lowest_two(&self, t: f64) -> Result<(f64, f64)>;
    fn solve(&self, t: f64) -> Result<SpectralSolution>;
    fn profile(&self, sol: &SpectralSolution, t: f64) -> PairProfile;
    fn momentum_grid(&self) -> Vec<f64>;
}

/// One-dimensional box, symmetric sector in the basis of reflection orbits.
pub(crate) struct EvenGrid {
    grid: PositionGrid,
    mu: f64,
    orbits: Vec<Vec<usize>>,
    v_orbit: Vec<f64>,
    v_grid: Vec<f64>,
    cos_table: Vec<f64>,
}

impl EvenGrid {
    pub(crate) fn new(config: &ModelConfig, grid: &PositionGrid) -> Self {
        let n = grid.points;
        let half = n / 2;
        let mut orbits = vec![vec![half]];
        for a in 1..half {
            orbits.push(vec![half + a, half - a]);
        }
        orbits.push(vec![0]);
        let v_grid: Vec<f64> = (0..n).map(|j| config.potential.eval(&[grid.position(j)])).collect();
        let v_orbit = orbits.iter().map(|o| o.iter().map(|&j| v_grid[j]).sum::<f64>() / o.len() as f64).collect();
        let cos_table = (0..n).map(|k| (2.0 * PI * k as f64 / n as f64).cos()).collect();
        Self { grid: *grid, mu: config.mu, orbits, v_orbit, v_grid, cos_table }
    }

    /// Kernel `c(l) = (1/N) Σ_m K_T(p_m² - μ) cos(2π m l / N)` of the circulant multiplier.
    fn circulant(&self, t: f64) -> Vec<f64> {
        let n = self.grid.points;
        let dp = self.grid.momentum_spacing();
        let k: Vec<f64> = (0..=n / 2)
            .map(|m| {
                let p = m as f64 * dp;
                specfun::kt(p * p - self.mu, t)
            })
            .collect();
        (0..n)
            .map(|l| {
                let mut s = k[0] + k[n / 2] * if l % 2 == 0 { 1.0 } else { -1.0 };
                for (m, km) in k.iter().enumerate().take(n / 2).skip(1) {
                    s += 2.0 * km * self.cos_table[(m * l) % n];
                }
                s / n as f64
            })
            .collect()
    }

    fn matrix(&self, t: f64) -> Mat<f64> {
        let n = self.grid.points;
        let c = self.circulant(t);
        let dim = self.orbits.len();
        let w: Vec<f64> = self.orbits.iter().map(|o| 1.0 / (o.len() as f64).sqrt()).collect();
        let mut m = Mat::from_fn(dim, dim, |a, b| {
            let mut s = 0.0;
            for &i in &self.orbits[a] {
                for &j in &self.orbits[b] {
                    s += c[(i + n - j) % n];
                }
            }
            w[a] * w[b] * s
        });
        for a in 0..dim {
            m[(a, a)] += self.v_orbit[a];
        }
        m
    }
}

impl SectorProblem for EvenGrid {
    fn lowest_two(&self, t: f64) -> Result<(f64, f64)> {
        let ev = eigvalsh_real(&self.matrix(t))?;
        Ok((ev[0], ev[1]))
    }

    fn solve(&self, t: f64) -> Result<SpectralSolution> {
        let m = self.matrix(t);
        let (vals, vecs) = eigh_real(&m)?;
        let dim = vals.len();
        let u: Vec<f64> = (0..dim).map(|a| vecs[(a, 0)]).collect();
        let mut residual: f64 = 0.0;
        for a in 0..dim {
            let r: f64 = (0..dim).map(|b| m[(a, b)] * u[b]).sum::<f64>() - vals[0] * u[a];
            residual += r * r;
        }
        let n = self.grid.points;
        let dx = self.grid.spacing();
        let mut v = vec![0.0; n];
        for (a, o) in self.orbits.iter().enumerate() {
            let w = 1.0 / (o.len() as f64).sqrt();
            for &j in o {
                v[j] = w * u[a] / dx.sqrt();
            }
        }
        if v.iter().sum::<f64>() < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        Ok(SpectralSolution { eigenvalue: vals[0], eigenvector: v, residual_norm: residual.sqrt(), gap_to_next: vals[1] - vals[0] })
    }

    fn profile(&self, sol: &SpectralSolution, _t: f64) -> PairProfile {
        let n = self.grid.points;
        let dx = self.grid.spacing();
        let nodes: Vec<f64> = (0..n).map(|j| self.grid.position(j).abs()).collect();
        let v_alpha = (0..n).map(|j| self.v_grid[j] * sol.eigenvector[j]).collect();
        PairProfile { dim: 1, nodes, weights: vec![dx; n], alpha: sol.eigenvector.clone(), v_alpha, alpha_from_t: None }
    }

    fn momentum_grid(&self) -> Vec<f64> {
        let dp = self.grid.momentum_spacing();
        (0..=self.grid.points / 2).map(|m| m as f64 * dp).collect()
    }
}

pub(crate) fn sector_problem(config: &ModelConfig, grid: &PositionGrid) -> Result<Box<dyn SectorProblem>> {
    match config.dim {
        1 => Ok(Box::new(EvenGrid::new(config, grid))),
        2 | 3 => Ok(Box::new(radial::RadialProblem::new(config, grid)?)),
        d => Err(Error::Domain(format!("dimension must be 1, 2 or 3, got {d}"))),
    }
}

fn check_t(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("temperature must be finite and non-negative, got {t}")))
    }
}

/// Lowest eigenvalue of `K_T(-i∇) + V` on reflection-symmetric functions.
pub fn lowest_eigenvalue(t: f64, config: &ModelConfig, grid: &PositionGrid) -> Result<SpectralSolution> {
    check_t(t)?;
    sector_problem(config, grid)?.solve(t)
}

/// Bottom of the multiplier `min_p K_T(p² - μ)` over the momentum grid.
pub fn essential_spectrum_edge(t: f64, mu: f64, grid: &PositionGrid) -> f64 {
    let dp = grid.momentum_spacing();
    (0..=grid.points / 2)
        .map(|m| {
            let p = m as f64 * dp;
            specfun::kt(p * p - mu, t)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Default bisection tolerance `1e-8 μ`.
pub fn default_tolerance(mu: f64) -> f64 {
    1e-8 * if mu != 0.0 { mu.abs() } else { 1.0 }
}

/// Largest temperature scanned before giving up, `10³ μ`.
pub fn t_max(mu: f64) -> f64 {
    1e3 * if mu > 0.0 { mu } else { 1.0 }
}

pub(crate) fn search_tc(problem: &dyn SectorProblem, mu: f64, tol: f64) -> Result<TcSearch> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("bisection tolerance must be positive, got {tol}")));
    }
    let lowest = |t: f64| problem.lowest_two(t).map(|v| v.0);
    let mut evaluations = 1;
    let e0 = lowest(0.0)?;
    if e0 >= 0.0 {
        return Ok(TcSearch { tc: 0.0, bracket: (0.0, 0.0), evaluations, lowest_at_zero: e0 });
    }
    let tmax = t_max(mu);
    let (mut lo, mut hi) = (0.0, 0.01 * if mu > 0.0 { mu } else { 1.0 });
    loop {
        evaluations += 1;
        if lowest(hi)? >= 0.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > tmax {
            return Err(Error::NoCriticalTemperature { t_max: tmax });
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        evaluations += 1;
        if lowest(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(TcSearch { tc: 0.5 * (lo + hi), bracket: (lo, hi), evaluations, lowest_at_zero: e0 })
}

/// Bisection for the sign change of the lowest symmetric eigenvalue.
pub fn find_tc(config: &ModelConfig, grid: &PositionGrid, tol: f64) -> Result<TcSearch> {
    let problem = sector_problem(config, grid)?;
    search_tc(problem.as_ref(), config.mu, tol)
}

/// `T_c`, the normalized pairing function at `T_c` and its momentum profile.
pub fn compute_pairing(config: &ModelConfig, grid: &PositionGrid) -> Result<PairingData> {
    let problem = sector_problem(config, grid)?;
    let search = search_tc(problem.as_ref(), config.mu, default_tolerance(config.mu))?;
    if search.tc <= 0.0 {
        return Err(Error::Precondition("the model has no positive critical temperature".into()));
    }
    pairing_at(problem.as_ref(), config, grid, search.tc)
}

pub(crate) fn pairing_at(problem: &dyn SectorProblem, config: &ModelConfig, grid: &PositionGrid, tc: f64) -> Result<PairingData> {
    let sol = problem.solve(tc)?;
    let gap_tol = 1e-6 * if config.mu != 0.0 { config.mu.abs() } else { 1.0 };
    if sol.gap_to_next <= gap_tol {
        return Err(Error::DegenerateGroundState { gap: sol.gap_to_next, tol: gap_tol });
    }
    let profile = problem.profile(&sol, tc);
    let t_star = problem.momentum_grid().into_iter().map(|p| (p, profile.t(p))).collect();
    Ok(PairingData {
        dim: config.dim,
        mu: config.mu,
        tc,
        beta_c: 1.0 / tc,
        grid: *grid,
        eigenvalue: sol.eigenvalue,
        residual_norm: sol.residual_norm,
        simplicity_gap: sol.gap_to_next,
        alpha_star: sol.eigenvector,
        t_star,
        profile,
    })
}
