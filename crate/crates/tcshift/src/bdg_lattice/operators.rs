use std::collections::BTreeMap;

use faer::Mat;
use num_complex::Complex64 as C64;

use super::TorusGrid;
use crate::error::{Error, Result};
use crate::gl::GlField;
use crate::linalg::{blocks, eigh, scale, CMat};
use crate::model::{ExternalFields, Mode};
use crate::specfun;

fn sub(a: &Mode, b: &Mode) -> Mode {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(p: &[f64; 3]) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

/// Fields of the complex-conjugate operator: `W -> W̄`, `A -> -Ā`.
pub fn conjugate_fields(fields: &ExternalFields) -> ExternalFields {
    let neg = |n: &Mode| [-n[0], -n[1], -n[2]];
    ExternalFields {
        w_hat: fields.w_hat.iter().map(|(n, c)| (neg(n), c.conj())).collect(),
        a_hat: fields.a_hat.iter().map(|(n, a)| (neg(n), [-a[0].conj(), -a[1].conj(), -a[2].conj()])).collect(),
    }
}

fn check_fields(fields: &ExternalFields, grid: &TorusGrid) -> Result<()> {
    let d = grid.dim;
    let out_of_dim = |n: &Mode| n.iter().skip(d).any(|&v| v != 0);
    if fields.w_hat.keys().chain(fields.a_hat.keys()).any(out_of_dim)
        || fields.a_hat.values().any(|a| a.iter().skip(d).any(|c| c.norm() != 0.0))
    {
        return Err(Error::Assembly(format!("field data has components beyond dimension {d}")));
    }
    let half = grid.half();
    if fields.max_w_mode() > half {
        return Err(Error::Assembly(format!("W mode {} lies outside the grid modes |n| <= {half}", fields.max_w_mode())));
    }
    if 2 * fields.max_a_mode() > half {
        return Err(Error::Assembly(format!(
            "A★A has modes up to {} beyond the grid modes |n| <= {half}; enlarge N",
            2 * fields.max_a_mode()
        )));
    }
    Ok(())
}

/// Mode-basis matrix of `𝔥 = (-ih∇ + hA)² + h²W - μ` on the fiber of `grid`.
///
/// Entry `(n, n')`: `δ((hp)² - μ) + h²Â(n-n')·(p + p') + h²(Â★Â)(n-n') + h²Ŵ(n-n')`.
/// Every entry is computed, so non-Hermitian field data shows up as a defect.
pub fn assemble_h(h: f64, mu: f64, fields: &ExternalFields, grid: &TorusGrid) -> Result<CMat> {
    check_fields(fields, grid)?;
    let d = grid.dim;
    let aa = fields.a_squared_hat();
    let mut diffs: Vec<Mode> = fields.w_hat.keys().chain(fields.a_hat.keys()).chain(aa.keys()).copied().collect();
    diffs.push([0; 3]);
    diffs.sort();
    diffs.dedup();
    let h2 = h * h;
    let len = grid.len();
    let mut m = Mat::<C64>::zeros(len, len);
    for i in 0..len {
        let n = grid.mode(i);
        let p = grid.momentum(i);
        for k in &diffs {
            let Some(j) = grid.index_of(&sub(&n, k)) else { continue };
            let q = grid.momentum(j);
            let mut v = h2 * (fields.w(k) + aa.get(k).copied().unwrap_or_default());
            if let Some(a) = fields.a_hat.get(k) {
                for r in 0..d {
                    v += h2 * a[r] * (p[r] + q[r]);
                }
            }
            if i == j {
                v += h2 * norm(&p).powi(2) - mu;
            }
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

/// `𝔥` and `𝔥̄ = (-ih∇ - hĀ)² + h²W̄ - μ` on one fiber.
#[derive(Debug, Clone)]
pub struct OneBody {
    pub grid: TorusGrid,
    pub h_op: CMat,
    pub h_bar: CMat,
}

impl OneBody {
    pub fn new(h: f64, mu: f64, fields: &ExternalFields, grid: &TorusGrid) -> Result<Self> {
        Ok(Self {
            grid: grid.clone(),
            h_op: assemble_h(h, mu, fields, grid)?,
            h_bar: assemble_h(h, mu, &conjugate_fields(fields), grid)?,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// `(h/2)(ψ g(-ih∇) + g(-ih∇) ψ)` for a radial profile `g(|q|)` sampled at `q = hp`.
///
/// Entry `(n, n')`: `(h/2) ψ̂(n-n') (g(h|p_n|) + g(h|p_n'|))`.
pub fn make_symmetrized_pair(psi: &GlField, g: &dyn Fn(f64) -> f64, h: f64, grid: &TorusGrid) -> Result<CMat> {
    if psi.dim != grid.dim {
        return Err(Error::Domain(format!("field dimension {} differs from grid dimension {}", psi.dim, grid.dim)));
    }
    let basis = psi.basis();
    let support: Vec<(Mode, C64)> =
        psi.coeffs.iter().enumerate().filter(|(_, c)| c.norm() != 0.0).map(|(i, c)| (basis.mode(i), *c)).collect();
    if let Some((n, _)) = support.iter().find(|(n, _)| n.iter().any(|v| v.abs() > grid.half())) {
        return Err(Error::Assembly(format!("ψ mode {n:?} lies outside the grid modes |n| <= {}", grid.half())));
    }
    let len = grid.len();
    let gs: Vec<f64> = (0..len).map(|i| g(h * norm(&grid.momentum(i)))).collect();
    let mut m = Mat::<C64>::zeros(len, len);
    for i in 0..len {
        let n = grid.mode(i);
        for (k, c) in &support {
            if let Some(j) = grid.index_of(&sub(&n, k)) {
                m[(i, j)] = 0.5 * h * c * (gs[i] + gs[j]);
            }
        }
    }
    Ok(m)
}

/// `ψ̄` with coefficients `conj ψ̂(-n)`.
pub fn conjugate_field(psi: &GlField) -> GlField {
    let len = psi.coeffs.len();
    GlField { coeffs: (0..len).map(|i| psi.coeffs[len - 1 - i].conj()).collect(), ..psi.clone() }
}

/// Pairing operator `Δ = -(h/2)(ψ t(-ih∇) + t(-ih∇) ψ)` and its conjugate `Δ̄` on one fiber.
#[derive(Debug, Clone)]
pub struct GapOperator {
    pub delta: CMat,
    pub delta_bar: CMat,
}

impl GapOperator {
    pub fn new(psi: &GlField, t: &dyn Fn(f64) -> f64, h: f64, grid: &TorusGrid) -> Result<Self> {
        let delta = scale(&make_symmetrized_pair(psi, t, h, grid)?, C64::new(-1.0, 0.0));
        let delta_bar = scale(&make_symmetrized_pair(&conjugate_field(psi), t, h, grid)?, C64::new(-1.0, 0.0));
        Ok(Self { delta, delta_bar })
    }

    pub fn zero(len: usize) -> Self {
        Self { delta: Mat::zeros(len, len), delta_bar: Mat::zeros(len, len) }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let s = C64::new(s, 0.0);
        Self { delta: scale(&self.delta, s), delta_bar: scale(&self.delta_bar, s) }
    }

    pub fn is_zero(&self) -> bool {
        crate::linalg::max_abs(&self.delta) == 0.0 && crate::linalg::max_abs(&self.delta_bar) == 0.0
    }
}

/// `H_Δ = [[𝔥, Δ], [Δ̄, -𝔥̄]]`.
pub fn assemble_hdelta(one: &OneBody, gap: &GapOperator) -> Result<CMat> {
    let n = one.len();
    if [gap.delta.nrows(), gap.delta.ncols(), gap.delta_bar.nrows(), gap.delta_bar.ncols()].iter().any(|&s| s != n) {
        return Err(Error::Assembly(format!("gap blocks do not match the one-body size {n}")));
    }
    Ok(blocks(&one.h_op, &gap.delta, &gap.delta_bar, &scale(&one.h_bar, C64::new(-1.0, 0.0))))
}

/// Matrix of the complex-conjugate operator on the periodic fiber: `X̄[n, n'] = conj X[-n, -n']`,
/// applied blockwise to `b × b` block matrices.
pub fn conjugate_operator(m: &CMat, grid: &TorusGrid) -> CMat {
    let l = grid.len();
    let mir = |i: usize| (i / l) * l + grid.mirror(i % l);
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(mir(i), mir(j))].conj())
}

/// `U X U†` with `U = [[0, 1], [-1, 0]]`, i.e. `[[d, -c], [-b, a]]`.
pub fn particle_hole(m: &CMat) -> CMat {
    let n = m.nrows() / 2;
    Mat::from_fn(2 * n, 2 * n, |i, j| {
        let (bi, bj) = (i / n, j / n);
        let v = m[((1 - bi) * n + i % n, (1 - bj) * n + j % n)];
        if bi == bj {
            v
        } else {
            -v
        }
    })
}

/// `K_T^{A,W} = 𝔥 / tanh(𝔥 / 2T)` by eigendecomposition of `𝔥`.
pub fn assemble_ktaw(t: f64, h: f64, mu: f64, fields: &ExternalFields, grid: &TorusGrid) -> Result<CMat> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("temperature must be positive, got {t}")));
    }
    let e = eigh(&assemble_h(h, mu, fields, grid)?)?;
    Ok(e.apply(|x| specfun::kt(x, t)))
}

/// Fourier coefficients of a set of fields keyed by mode, restricted to nonzero entries.
pub(crate) fn field_modes(psi: &GlField) -> BTreeMap<Mode, C64> {
    let basis = psi.basis();
    psi.coeffs.iter().enumerate().filter(|(_, c)| c.norm() != 0.0).map(|(i, c)| (basis.mode(i), *c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_defect, max_abs};

    #[test]
    fn free_hamiltonian_is_diagonal() {
        let g = TorusGrid::new(1, 6).unwrap();
        let m = assemble_h(0.3, 1.0, &ExternalFields::zero(), &g).unwrap();
        for i in 0..g.len() {
            for j in 0..g.len() {
                let want = if i == j { (0.3 * g.momentum(i)[0]).powi(2) - 1.0 } else { 0.0 };
                assert!((m[(i, j)] - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn a_squared_must_fit_the_grid() {
        let mut f = ExternalFields::zero();
        f.a_hat.insert([2, 0, 0], [C64::new(0.1, 0.0); 3]);
        f.a_hat.insert([-2, 0, 0], [C64::new(0.1, 0.0); 3]);
        let f1 = ExternalFields { a_hat: f.a_hat.iter().map(|(n, a)| (*n, [a[0], C64::default(), C64::default()])).collect(), ..f };
        assert!(matches!(assemble_h(0.2, 1.0, &f1, &TorusGrid::new(1, 6).unwrap()), Err(Error::Assembly(_))));
        assert!(assemble_h(0.2, 1.0, &f1, &TorusGrid::new(1, 8).unwrap()).is_ok());
    }

    #[test]
    fn pair_of_constant_is_multiplier() {
        let g = TorusGrid::new(1, 8).unwrap();
        let psi = GlField::constant(1, 1, C64::new(1.0, 0.0)).unwrap();
        let prof = |q: f64| (-q * q).exp();
        let m = make_symmetrized_pair(&psi, &prof, 0.25, &g).unwrap();
        for i in 0..g.len() {
            assert!((m[(i, i)] - 0.25 * prof(0.25 * g.momentum(i)[0].abs())).norm() < 1e-15);
        }
        assert!(max_abs(&m) > 0.0);
        let hd = assemble_hdelta(
            &OneBody::new(0.25, 1.0, &ExternalFields::cosine_w([1, 0, 0], 1.0), &g).unwrap(),
            &GapOperator::new(&psi, &prof, 0.25, &g).unwrap(),
        )
        .unwrap();
        assert!(hermitian_defect(&hd) < 1e-14);
    }
}
