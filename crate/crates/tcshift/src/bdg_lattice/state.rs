use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::operators::{conjugate_operator, particle_hole};
use super::TorusGrid;
use crate::error::{Error, Result};
use crate::linalg::{block, eigh, eigvalsh, frobenius_sq, hermitian_defect, identity, max_abs, trace_prod, CMat, Eigh};
use crate::specfun;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSource {
    Gibbs,
    Normal,
    Custom,
}

/// Generalized one-body density matrix `Γ = [[γ, α], [α*, 1 - γ̄]]` on one fiber.
#[derive(Debug, Clone)]
pub struct BdGState {
    pub grid: TorusGrid,
    pub gamma: CMat,
    pub beta: Option<f64>,
    pub source: StateSource,
    /// Eigendecomposition of `H` for Gibbs states `Γ = (1 + e^{βH})⁻¹`.
    pub hamiltonian: Option<Eigh>,
}

/// Measured violations of the state invariants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateDefects {
    /// Largest distance of an eigenvalue of `Γ` below 0 or above 1.
    pub spectrum: f64,
    /// `max |UΓU† - (1 - Γ̄)|`; only defined on the periodic fiber.
    pub admissibility: Option<f64>,
    /// `max |α(x,y) - α(y,x)|` in modes; only defined on the periodic fiber.
    pub alpha_symmetry: Option<f64>,
}

impl StateDefects {
    pub fn max(&self) -> f64 {
        self.spectrum.max(self.admissibility.unwrap_or(0.0)).max(self.alpha_symmetry.unwrap_or(0.0))
    }
}

impl BdGState {
    pub fn custom(grid: &TorusGrid, gamma: CMat) -> Result<Self> {
        if gamma.nrows() != 2 * grid.len() || gamma.ncols() != 2 * grid.len() {
            return Err(Error::Domain(format!("Γ must be {0}×{0}", 2 * grid.len())));
        }
        Ok(Self { grid: grid.clone(), gamma, beta: None, source: StateSource::Custom, hamiltonian: None })
    }

    /// Size of one block.
    pub fn block_len(&self) -> usize {
        self.grid.len()
    }

    pub fn gamma_block(&self) -> CMat {
        block(&self.gamma, self.block_len(), 0, 0)
    }

    pub fn alpha(&self) -> CMat {
        block(&self.gamma, self.block_len(), 0, 1)
    }

    /// Eigenvalues of `Γ`, from `H` when available.
    pub fn occupations(&self) -> Result<Vec<f64>> {
        match (&self.hamiltonian, self.beta) {
            (Some(e), Some(b)) => Ok(e.values.iter().map(|&l| specfun::fermi(b * l)).collect()),
            _ => eigvalsh(&self.gamma),
        }
    }

    /// `S(Γ) = -(1/2) Tr[Γ ln Γ + (1 - Γ) ln(1 - Γ)]`.
    pub fn entropy(&self) -> Result<f64> {
        let s: f64 = match (&self.hamiltonian, self.beta) {
            (Some(e), Some(b)) => e.values.iter().map(|&l| specfun::fermi_entropy(b * l)).sum(),
            _ => eigvalsh(&self.gamma)?.into_iter().map(specfun::binary_entropy).sum(),
        };
        Ok(0.5 * s)
    }

    pub fn defects(&self) -> Result<StateDefects> {
        let occ = eigvalsh(&self.gamma)?;
        let spectrum = occ.iter().map(|&x| (-x).max(x - 1.0).max(0.0)).fold(0.0, f64::max);
        if !self.grid.is_periodic() {
            return Ok(StateDefects { spectrum, admissibility: None, alpha_symmetry: None });
        }
        let l = self.block_len();
        let lhs = particle_hole(&self.gamma);
        let rhs = &identity(2 * l) - &conjugate_operator(&self.gamma, &self.grid);
        let adm = max_abs(&(&lhs - &rhs));
        // α(y,x) in modes: α[mirror n', mirror n]
        let a = self.alpha();
        let mut sym: f64 = 0.0;
        for i in 0..l {
            for j in 0..l {
                sym = sym.max((a[(i, j)] - a[(self.grid.mirror(j), self.grid.mirror(i))]).norm());
            }
        }
        Ok(StateDefects { spectrum, admissibility: Some(adm), alpha_symmetry: Some(sym) })
    }
}

/// `Γ = (1 + e^{βH})⁻¹` by eigendecomposition.
pub fn gibbs_state(hmat: &CMat, beta: f64, grid: &TorusGrid) -> Result<BdGState> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Precondition(format!("β must be positive and finite, got {beta}")));
    }
    if hmat.nrows() != 2 * grid.len() {
        return Err(Error::Domain(format!("H must be {0}×{0}", 2 * grid.len())));
    }
    let defect = hermitian_defect(hmat);
    if defect > 1e-12 * (1.0 + max_abs(hmat)) {
        return Err(Error::Precondition(format!("H is not Hermitian (defect {defect:e})")));
    }
    let e = eigh(hmat)?;
    let gamma = e.apply(|l| specfun::fermi(beta * l));
    Ok(BdGState { grid: grid.clone(), gamma, beta: Some(beta), source: StateSource::Gibbs, hamiltonian: Some(e) })
}

/// `Tr[Γ ln Γ + (1 - Γ) ln(1 - Γ)]`.
fn neg_entropy(g: &BdGState) -> Result<f64> {
    Ok(-2.0 * g.entropy()?)
}

/// `Σ_j λ_j (V†ΓV)_jj = Tr(Γ f(H))` for `H = V diag(λ) V†`.
fn weighted_trace(gamma: &CMat, e: &Eigh, f: impl Fn(f64) -> f64) -> f64 {
    let gv = gamma * &e.vectors;
    let n = gamma.nrows();
    (0..n)
        .map(|j| {
            let d: C64 = (0..n).map(|i| e.vectors[(i, j)].conj() * gv[(i, j)]).sum();
            f(e.values[j]) * d.re
        })
        .sum()
}

/// Relative entropy `𝓗₀(Γ, Γ') = Tr[Γ(ln Γ - ln Γ') + (1-Γ)(ln(1-Γ) - ln(1-Γ'))]`.
///
/// For a Gibbs state `Γ' = (1 + e^{βH})⁻¹` this is
/// `2S(Γ') - 2S(Γ) + β Tr[(Γ - Γ')H]`, which avoids the logarithm of `Γ'` and
/// the cancellation of the large `±βH` parts. Otherwise `Γ'` is diagonalized and
/// the result is `+∞` when `Γ` has weight on an eigenvector where `Γ'` is exactly 0 or 1.
pub fn relative_entropy(gamma: &BdGState, prime: &BdGState) -> Result<f64> {
    if gamma.gamma.nrows() != prime.gamma.nrows() {
        return Err(Error::Domain("states have different sizes".into()));
    }
    let own = neg_entropy(gamma)?;
    if let (Some(e), Some(b)) = (&prime.hamiltonian, prime.beta) {
        let diff = &gamma.gamma - &prime.gamma;
        return Ok(own - neg_entropy(prime)? + b * weighted_trace(&diff, e, |x| x));
    }
    let e = eigh(&prime.gamma)?;
    let gv = &gamma.gamma * &e.vectors;
    let n = gamma.gamma.nrows();
    let mut cross = 0.0;
    for j in 0..n {
        let w: f64 = (0..n).map(|i| (e.vectors[(i, j)].conj() * gv[(i, j)]).re).sum();
        let q = e.values[j].clamp(0.0, 1.0);
        for (weight, occ) in [(w, q), (1.0 - w, 1.0 - q)] {
            if weight.abs() <= 1e-14 {
                continue;
            }
            if occ == 0.0 {
                return Ok(f64::INFINITY);
            }
            cross -= weight * occ.ln();
        }
    }
    Ok(own + cross)
}

/// Left side minus right side of Klein's inequality
/// `𝓗₀(Γ, Γ⁰) >= Tr₀[(H⁰/tanh(H⁰/2))(Γ - Γ⁰)²] + (4/3) Tr[Γ(1-Γ) - Γ⁰(1-Γ⁰)]²`
/// with `Γ⁰ = (1 + e^{H⁰})⁻¹` and `H⁰` block diagonal.
pub fn klein_gap(gamma: &CMat, h0: &CMat) -> Result<f64> {
    let n2 = h0.nrows();
    if n2 % 2 != 0 || gamma.nrows() != n2 {
        return Err(Error::Domain("Γ and H⁰ must be equal-size 2×2 block matrices".into()));
    }
    let n = n2 / 2;
    let off = max_abs(&block(h0, n, 0, 1)).max(max_abs(&block(h0, n, 1, 0)));
    if off > 1e-14 * (1.0 + max_abs(h0)) {
        return Err(Error::Precondition(format!("H⁰ does not commute with P₀ (off-diagonal block {off:e})")));
    }
    let e = eigh(h0)?;
    let g0 = e.apply(specfun::fermi);
    let occ = eigvalsh(gamma)?;
    let own: f64 = -occ.iter().map(|&x| specfun::binary_entropy(x)).sum::<f64>();
    let log_part: f64 = e.values.iter().map(|&l| -specfun::f(l)).sum();
    let rel = own + log_part + weighted_trace(gamma, &e, |x| x);

    let diff = gamma - &g0;
    let kmat = e.apply(|x| specfun::kt(x, 1.0));
    let quad = trace_prod(&kmat, &(&diff * &diff)).re;
    let id = identity(n2);
    let x = &(gamma * &(&id - gamma)) - &(&g0 * &(&id - &g0));
    Ok(rel - quad - 4.0 / 3.0 * frobenius_sq(&x))
}

/// Largest distance of an eigenvalue of `Γ` outside `[0, 1]`.
pub fn spectrum_defect(gamma: &CMat) -> Result<f64> {
    Ok(eigvalsh(gamma)?.iter().map(|&x| (-x).max(x - 1.0).max(0.0)).fold(0.0, f64::max))
}
