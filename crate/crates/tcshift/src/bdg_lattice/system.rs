use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::operators::{assemble_hdelta, GapOperator, OneBody};
use super::state::{gibbs_state, relative_entropy, BdGState, StateSource};
use super::TorusGrid;
use crate::error::{Error, Result};
use crate::gl::GlField;
use crate::linalg::{eigvalsh, trace_prod, CMat};
use crate::model::{InteractionPotential, ModelConfig};
use crate::specfun;

/// Torus discretization at scale `h`: `N + 1` modes per axis on each of
/// `n_b^d` Bloch fibers. With `n_b > 1` the fibers are the block
/// diagonalization of the supercell of side `n_b`, and traces per unit volume
/// are fiber averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub h: f64,
    pub grid: TorusGrid,
    pub fibers_per_axis: usize,
}

/// Imaginary part of the nearest complex pole of `tanh(β(q² - μ)/2)` in `q`.
fn thermal_strip(mu: f64, t: f64) -> f64 {
    C64::new(mu, PI * t).sqrt().im.abs()
}

impl Lattice {
    pub fn new(h: f64, dim: usize, n: usize, fibers_per_axis: usize) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("h must be positive, got {h}")));
        }
        if fibers_per_axis == 0 {
            return Err(Error::Domain("at least one Bloch fiber per axis is needed".into()));
        }
        Ok(Self { h, grid: TorusGrid::new(dim, n)?, fibers_per_axis })
    }

    /// Default discretization. `N` is the smallest even value with
    /// `πNh >= q_max + 5 T/(2√μ)` (and `1/(N+1) <= h/8` when the interaction
    /// is needed). The fiber count makes the momentum spacing `2πh/n_b` small
    /// against the analyticity strip of the Fermi factors, so fiber sums
    /// converge to about 1e-14.
    pub fn auto(h: f64, dim: usize, q_max: f64, mu: f64, t: f64, interaction: bool) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain(format!("h must be positive, got {h}")));
        }
        let width = t / (2.0 * mu.max(t).sqrt());
        let mut n = ((q_max + 5.0 * width) / (PI * h)).ceil() as usize;
        if interaction {
            n = n.max((8.0 / h).ceil() as usize - 1);
        }
        n = (n.max(2) + 1) & !1;
        let strip = thermal_strip(mu, t);
        let nb = ((32.0 * h / strip).ceil() as usize).max(1);
        Self::new(h, dim, n, nb)
    }

    /// The same lattice with `N` multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.h, self.grid.dim, self.grid.n * factor, self.fibers_per_axis)
    }

    /// The same lattice with `N` scaled by `factor`, rounded up to an even value.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::Domain(format!("grid scale must be positive, got {factor}")));
        }
        let n = (((self.grid.n as f64 * factor) / 2.0).ceil() as usize * 2).max(2);
        Self::new(self.h, self.grid.dim, n, self.fibers_per_axis)
    }

    pub fn fibers(&self) -> Vec<TorusGrid> {
        self.grid.bloch_points(self.fibers_per_axis).into_iter().map(|k| self.grid.with_bloch(k)).collect()
    }

    /// Weight `1/n_b^d` of each fiber in a trace per unit volume.
    pub fn fiber_weight(&self) -> f64 {
        1.0 / (self.fibers_per_axis.pow(self.grid.dim as u32)) as f64
    }

    /// Largest `|hp|` along an axis.
    pub fn momentum_reach(&self) -> f64 {
        PI * self.grid.n as f64 * self.h
    }

    pub fn resolves_interaction(&self) -> bool {
        self.grid.spacing() <= self.h / 8.0
    }
}

/// Pair kernels `C_m[i, j] = α(x_i, y_j + m) / len` for `x_i, y_j` on the cell
/// grid and the supercell shifts `m ∈ {0..n_b-1}^d`. The normalization makes
/// `Σ_m Σ_ij conj(X_m) Y_m = Tr(X* Y)` per unit volume.
#[derive(Debug, Clone)]
pub struct PairKernel {
    pub shifts: Vec<CMat>,
}

impl PairKernel {
    pub fn sub(&self, other: &Self) -> Self {
        Self { shifts: self.shifts.iter().zip(&other.shifts).map(|(a, b)| a - b).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.shifts.iter().map(crate::linalg::max_abs).fold(0.0, f64::max)
    }
}

/// `V_m(x_i - y_j) = Σ_M V((x_i - y_j - m - n_b M)/h)` for every shift `m`.
#[derive(Debug, Clone)]
pub struct InteractionTable {
    dim: usize,
    side: usize,
    shifts: Vec<[i64; 3]>,
    /// Values indexed by the difference digits `i_a - j_a + side - 1`.
    tables: Vec<Vec<f64>>,
}

impl InteractionTable {
    pub fn new(potential: &InteractionPotential, lattice: &Lattice) -> Result<Self> {
        if !lattice.resolves_interaction() {
            return Err(Error::Resolution(format!(
                "grid spacing {:.3e} exceeds h/8 = {:.3e}; increase N",
                lattice.grid.spacing(),
                lattice.h / 8.0
            )));
        }
        let (d, side, nb, h) = (lattice.grid.dim, lattice.grid.side(), lattice.fibers_per_axis as i64, lattice.h);
        let span = 2 * side - 1;
        let reach = potential.range() * h;
        let shifts: Vec<[i64; 3]> = (0..nb.pow(d as u32))
            .map(|mut t| {
                let mut m = [0i64; 3];
                for ma in m.iter_mut().take(d) {
                    *ma = t % nb;
                    t /= nb;
                }
                m
            })
            .collect();
        let tables = shifts
            .iter()
            .map(|m| {
                (0..span.pow(d as u32))
                    .map(|mut idx| {
                        let mut u = [0.0; 3];
                        for a in (0..d).rev() {
                            let delta = (idx % span) as f64 - (side - 1) as f64;
                            idx /= span;
                            u[a] = delta * lattice.grid.spacing() - m[a] as f64;
                        }
                        periodized(potential, &u, d, nb as f64, reach, h)
                    })
                    .collect()
            })
            .collect();
        Ok(Self { dim: d, side, shifts, tables })
    }

    fn digits(&self, mut i: usize) -> [usize; 3] {
        let mut g = [0; 3];
        for a in (0..self.dim).rev() {
            g[a] = i % self.side;
            i /= self.side;
        }
        g
    }

    /// Table index of the difference `x_i - y_j`.
    fn diff_index(&self, i: usize, j: usize) -> usize {
        let (gi, gj) = (self.digits(i), self.digits(j));
        let span = 2 * self.side - 1;
        (0..self.dim).fold(0, |acc, a| acc * span + gi[a] + self.side - 1 - gj[a])
    }

    pub fn value(&self, shift: usize, i: usize, j: usize) -> f64 {
        self.tables[shift][self.diff_index(i, j)]
    }

    pub fn shift_count(&self) -> usize {
        self.shifts.len()
    }

    /// `∬ V((x-y)/h) |α(x,y)|²` over `x` in the cell and `y ∈ R^d`.
    pub fn energy(&self, k: &PairKernel) -> f64 {
        let mut s = 0.0;
        for (m, c) in k.shifts.iter().enumerate() {
            let len = c.nrows();
            for j in 0..len {
                for i in 0..len {
                    s += self.value(m, i, j) * c[(i, j)].norm_sqr();
                }
            }
        }
        s
    }

    /// `α̃ = Δ / (2V)` pointwise; domain error where `V = 0` but `Δ ≠ 0`.
    pub fn divide(&self, delta: &PairKernel) -> Result<PairKernel> {
        let mut shifts = Vec::with_capacity(delta.shifts.len());
        for (m, c) in delta.shifts.iter().enumerate() {
            let len = c.nrows();
            let mut out = Mat::<C64>::zeros(len, len);
            for j in 0..len {
                for i in 0..len {
                    let v = self.value(m, i, j);
                    if v != 0.0 {
                        out[(i, j)] = c[(i, j)] / (2.0 * v);
                    } else if c[(i, j)].norm() != 0.0 {
                        return Err(Error::Domain(format!("V vanishes at grid pair ({i}, {j}) where Δ does not")));
                    }
                }
            }
            shifts.push(out);
        }
        Ok(PairKernel { shifts })
    }

    /// `max |Δ - 2Vα̃|` over the grid pairs.
    pub fn product_defect(&self, delta: &PairKernel, tilde_alpha: &PairKernel) -> f64 {
        let mut d: f64 = 0.0;
        for (m, (a, b)) in delta.shifts.iter().zip(&tilde_alpha.shifts).enumerate() {
            for j in 0..a.nrows() {
                for i in 0..a.nrows() {
                    d = d.max((a[(i, j)] - 2.0 * self.value(m, i, j) * b[(i, j)]).norm());
                }
            }
        }
        d
    }
}

fn periodized(potential: &InteractionPotential, u: &[f64; 3], d: usize, nb: f64, reach: f64, h: f64) -> f64 {
    let mut lo = [0i64; 3];
    let mut hi = [0i64; 3];
    for a in 0..d {
        lo[a] = ((u[a] - reach) / nb).ceil() as i64;
        hi[a] = ((u[a] + reach) / nb).floor() as i64;
        if lo[a] > hi[a] {
            return 0.0;
        }
    }
    let mut s = 0.0;
    let mut cur = lo;
    loop {
        let z: Vec<f64> = (0..d).map(|a| (u[a] - nb * cur[a] as f64) / h).collect();
        s += potential.eval(&z);
        let mut a = 0;
        loop {
            if a == d {
                return s;
            }
            cur[a] += 1;
            if cur[a] <= hi[a] {
                break;
            }
            cur[a] = lo[a];
            a += 1;
        }
    }
}

/// Everything that depends only on the model and the discretization.
#[derive(Debug, Clone)]
pub struct LatticeSystem {
    pub h: f64,
    pub mu: f64,
    pub lattice: Lattice,
    pub one_body: Vec<OneBody>,
    fourier: Vec<CMat>,
    table: Option<InteractionTable>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyBreakdown {
    pub kinetic: f64,
    /// `S(Γ)`; the free energy carries `-T S`.
    pub entropy: f64,
    pub interaction: f64,
    pub total: f64,
    /// `F⁰ = -T Tr ln(1 + e^{-β𝔥})`.
    pub normal_reference: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyIdentityRecord {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl LatticeSystem {
    pub fn new(config: &ModelConfig, lattice: Lattice) -> Result<Self> {
        if config.dim != lattice.grid.dim {
            return Err(Error::Domain(format!("model dimension {} differs from lattice dimension {}", config.dim, lattice.grid.dim)));
        }
        let fibers = lattice.fibers();
        let one_body = fibers.iter().map(|g| OneBody::new(lattice.h, config.mu, &config.fields, g)).collect::<Result<_>>()?;
        let table = InteractionTable::new(&config.potential, &lattice).ok();
        let fourier = if table.is_some() { fibers.iter().map(|g| g.fourier_matrix()).collect() } else { Vec::new() };
        Ok(Self { h: lattice.h, mu: config.mu, lattice, one_body, fourier, table })
    }

    pub fn table(&self) -> Result<&InteractionTable> {
        self.table.as_ref().ok_or_else(|| {
            Error::Resolution(format!(
                "grid spacing {:.3e} exceeds h/8 = {:.3e}; increase N",
                self.lattice.grid.spacing(),
                self.h / 8.0
            ))
        })
    }

    pub fn fiber_weight(&self) -> f64 {
        self.lattice.fiber_weight()
    }

    /// `Δ = -(h/2)(ψ t(-ih∇) + t(-ih∇) ψ)` on every fiber.
    pub fn gap(&self, psi: &GlField, t: &dyn Fn(f64) -> f64) -> Result<Vec<GapOperator>> {
        self.one_body.iter().map(|o| GapOperator::new(psi, t, self.h, &o.grid)).collect()
    }

    pub fn zero_gap(&self) -> Vec<GapOperator> {
        self.one_body.iter().map(|o| GapOperator::zero(o.len())).collect()
    }

    pub fn hamiltonians(&self, gaps: &[GapOperator]) -> Result<Vec<CMat>> {
        self.one_body.iter().zip(gaps).map(|(o, g)| assemble_hdelta(o, g)).collect()
    }

    /// `Γ_Δ = (1 + e^{βH_Δ})⁻¹` on every fiber.
    pub fn gibbs(&self, gaps: &[GapOperator], beta: f64) -> Result<Vec<BdGState>> {
        let normal = gaps.iter().all(|g| g.is_zero());
        self.one_body
            .iter()
            .zip(gaps)
            .map(|(o, g)| {
                let mut s = gibbs_state(&assemble_hdelta(o, g)?, beta, &o.grid)?;
                if normal {
                    s.source = StateSource::Normal;
                }
                Ok(s)
            })
            .collect()
    }

    pub fn normal_state(&self, beta: f64) -> Result<Vec<BdGState>> {
        self.gibbs(&self.zero_gap(), beta)
    }

    /// `F⁰ = -T Tr ln(1 + e^{-β𝔥})`.
    pub fn normal_free_energy(&self, t: f64) -> Result<f64> {
        let beta = 1.0 / t;
        let mut s = 0.0;
        for o in &self.one_body {
            s += eigvalsh(&o.h_op)?.iter().map(|&e| specfun::f(beta * e)).sum::<f64>();
        }
        Ok(t * self.fiber_weight() * s)
    }

    /// Pair kernels of per-fiber mode-basis operators.
    pub fn pair_kernel(&self, ops: &[CMat]) -> Result<PairKernel> {
        let table = self.table()?;
        let w = self.fiber_weight();
        let len = self.lattice.grid.len();
        let b: Vec<CMat> = ops.iter().zip(&self.fourier).map(|(a, e)| &(e * a) * e.adjoint()).collect();
        let ks: Vec<[f64; 3]> = self.one_body.iter().map(|o| o.grid.bloch).collect();
        let shifts = table
            .shifts
            .iter()
            .map(|m| {
                let mut c = Mat::<C64>::zeros(len, len);
                for (bk, k) in b.iter().zip(&ks) {
                    let ph = -(0..3).map(|a| k[a] * m[a] as f64).sum::<f64>();
                    let z = C64::from_polar(w, ph);
                    c += crate::linalg::scale(bk, z);
                }
                c
            })
            .collect();
        Ok(PairKernel { shifts })
    }

    pub fn alpha_kernel(&self, states: &[BdGState]) -> Result<PairKernel> {
        self.pair_kernel(&states.iter().map(|s| s.alpha()).collect::<Vec<_>>())
    }

    pub fn delta_kernel(&self, gaps: &[GapOperator]) -> Result<PairKernel> {
        self.pair_kernel(&gaps.iter().map(|g| g.delta.clone()).collect::<Vec<_>>())
    }

    /// Per-unit-volume trace `Tr(A* B)` of fibered operators.
    pub fn inner(&self, a: &[CMat], b: &[CMat]) -> C64 {
        a.iter().zip(b).map(|(x, y)| trace_prod(&x.adjoint().to_owned(), y)).sum::<C64>() * self.fiber_weight()
    }
}

fn check_states(states: &[BdGState], system: &LatticeSystem) -> Result<()> {
    if states.len() != system.one_body.len() {
        return Err(Error::Domain(format!("expected {} fiber states, got {}", system.one_body.len(), states.len())));
    }
    Ok(())
}

/// `𝓕_T(Γ) = Tr 𝔥γ - T S(Γ) + ∬ V((x-y)/h) |α(x,y)|²` per unit volume.
pub fn bcs_free_energy(states: &[BdGState], t: f64, system: &LatticeSystem) -> Result<FreeEnergyBreakdown> {
    check_states(states, system)?;
    if !(t > 0.0) {
        return Err(Error::Domain(format!("temperature must be positive, got {t}")));
    }
    let table = system.table()?;
    let w = system.fiber_weight();
    let mut kinetic = 0.0;
    let mut entropy = 0.0;
    for (s, o) in states.iter().zip(&system.one_body) {
        kinetic += trace_prod(&o.h_op, &s.gamma_block()).re;
        entropy += s.entropy()?;
    }
    let (kinetic, entropy) = (w * kinetic, w * entropy);
    let interaction = table.energy(&system.alpha_kernel(states)?);
    Ok(FreeEnergyBreakdown {
        kinetic,
        entropy,
        interaction,
        total: kinetic - t * entropy + interaction,
        normal_reference: system.normal_free_energy(t)?,
    })
}

/// Both sides of the identity
/// `𝓕_T(Γ) - 𝓕_T(Γ₀) = -(T/2) Tr₀[ln(1+e^{-βH_Δ}) - ln(1+e^{-βH₀})] + (T/2) 𝓗₀(Γ, Γ_Δ)
///   - ∬ V|α̃|² + ∬ V|α̃ - α|²`
/// for `Δ = 2Vα̃`, with the relative residual `|lhs - rhs| / (1 + |lhs| + |rhs|)`.
pub fn key_identity_residual(
    states: &[BdGState],
    gaps: &[GapOperator],
    tilde_alpha: &PairKernel,
    t: f64,
    system: &LatticeSystem,
) -> Result<KeyIdentityRecord> {
    check_states(states, system)?;
    let beta = 1.0 / t;
    let table = system.table()?;
    let delta = system.delta_kernel(gaps)?;
    let defect = table.product_defect(&delta, tilde_alpha);
    if defect > 1e-12 * (1.0 + delta.max_abs()) {
        return Err(Error::Precondition(format!("Δ differs from 2Vα̃ by {defect:e}")));
    }
    let lhs = bcs_free_energy(states, t, system)?.total - bcs_free_energy(&system.normal_state(beta)?, t, system)?.total;

    let w = system.fiber_weight();
    let log_sum = |vals: &[f64]| -> f64 { vals.iter().map(|&l| -specfun::f(beta * l)).sum() };
    let mut logs = 0.0;
    let mut rel = 0.0;
    let gibbs = system.gibbs(gaps, beta)?;
    for ((s, g), o) in states.iter().zip(&gibbs).zip(&system.one_body) {
        let e = g.hamiltonian.as_ref().expect("Gibbs state carries H");
        let mut h0 = eigvalsh(&o.h_op)?;
        h0.extend(eigvalsh(&o.h_bar)?.into_iter().map(|x| -x));
        logs += log_sum(&e.values) - log_sum(&h0);
        rel += relative_entropy(s, g)?;
    }
    let alpha = system.alpha_kernel(states)?;
    let rhs = -0.5 * t * w * logs + 0.5 * t * w * rel - table.energy(tilde_alpha) + table.energy(&tilde_alpha.sub(&alpha));
    Ok(KeyIdentityRecord { lhs, rhs, residual: (lhs - rhs).abs() / (1.0 + lhs.abs() + rhs.abs()) })
}

/// Schatten norm `‖A‖_p = (Tr |A|^p)^{1/p}` of a fibered operator, per unit volume.
pub fn trace_norm(ops: &[CMat], p: f64, fiber_weight: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("p must lie in [1, ∞], got {p}")));
    }
    let mut acc: f64 = 0.0;
    for a in ops {
        let s = a.singular_values().map_err(|e| Error::Solver { message: format!("{e:?}"), residual: f64::NAN })?;
        if p.is_infinite() {
            acc = acc.max(s.iter().cloned().fold(0.0, f64::max));
        } else {
            acc += fiber_weight * s.iter().map(|v| v.powf(p)).sum::<f64>();
        }
    }
    Ok(if p.is_infinite() { acc } else { acc.powf(1.0 / p) })
}

/// `‖A‖²_{H¹} = Tr[A*(1 - h²∇²)A]` of a fibered operator, per unit volume.
pub fn h1_norm_sq(ops: &[CMat], grids: &[TorusGrid], h: f64, fiber_weight: f64) -> f64 {
    let mut s = 0.0;
    for (a, g) in ops.iter().zip(grids) {
        for i in 0..a.nrows() {
            let p = g.momentum(i);
            let w = 1.0 + h * h * (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
            s += w * (0..a.ncols()).map(|j| a[(i, j)].norm_sqr()).sum::<f64>();
        }
    }
    fiber_weight * s
}
