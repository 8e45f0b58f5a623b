//! Seeded random instances for the randomized checks.

use faer::Mat;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::gl::GlField;
use crate::linalg::{eigh, CMat};
use crate::model::{ExternalFields, Mode};

pub use rand::SeedableRng;
pub type InstanceRng = ChaCha8Rng;

pub fn rng(seed: u64) -> InstanceRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut InstanceRng) -> f64 {
    StandardNormal.sample(rng)
}

fn cnormal(rng: &mut InstanceRng) -> C64 {
    C64::new(normal(rng), normal(rng)) * std::f64::consts::FRAC_1_SQRT_2
}

fn modes(dim: usize, max_mode: i64) -> Vec<Mode> {
    let r = |a: usize| if a < dim { -max_mode..=max_mode } else { 0..=0 };
    let mut out = Vec::new();
    for i in r(0) {
        for j in r(1) {
            for k in r(2) {
                let n = [i, j, k];
                if n != [0; 3] && n > [0; 3] {
                    out.push(n);
                }
            }
        }
    }
    out
}

/// Real periodic `W` and `A` with modes `0 < |n_i| <= max_mode` and Gaussian coefficients.
pub fn fields(rng: &mut InstanceRng, dim: usize, max_mode: i64, w_scale: f64, a_scale: f64) -> ExternalFields {
    let mut f = ExternalFields::zero();
    f.w_hat.insert([0; 3], C64::new(w_scale * normal(rng), 0.0));
    if a_scale > 0.0 {
        let mut a0 = [C64::default(); 3];
        for c in a0.iter_mut().take(dim) {
            *c = C64::new(a_scale * normal(rng), 0.0);
        }
        f.a_hat.insert([0; 3], a0);
    }
    for n in modes(dim, max_mode) {
        let m = [-n[0], -n[1], -n[2]];
        if w_scale > 0.0 {
            let c = w_scale * cnormal(rng);
            f.w_hat.insert(n, c);
            f.w_hat.insert(m, c.conj());
        }
        if a_scale > 0.0 {
            let mut a = [C64::default(); 3];
            for c in a.iter_mut().take(dim) {
                *c = a_scale * cnormal(rng);
            }
            f.a_hat.insert(n, a);
            f.a_hat.insert(m, [a[0].conj(), a[1].conj(), a[2].conj()]);
        }
    }
    f
}

/// Complex field with independent Gaussian coefficients on `|n_i| <= cutoff`.
pub fn field(rng: &mut InstanceRng, dim: usize, cutoff: usize, scale: f64) -> Result<GlField> {
    let mut f = GlField::zeros(dim, cutoff)?;
    for c in f.coeffs.iter_mut() {
        *c = scale * cnormal(rng);
    }
    Ok(f)
}

/// Real field (`ψ̂(-n) = conj ψ̂(n)`) on `|n_i| <= cutoff`.
pub fn real_field(rng: &mut InstanceRng, dim: usize, cutoff: usize, scale: f64) -> Result<GlField> {
    let mut f = field(rng, dim, cutoff, scale)?;
    let len = f.coeffs.len();
    for i in 0..len {
        let j = len - 1 - i;
        if i < j {
            f.coeffs[j] = f.coeffs[i].conj();
        } else if i == j {
            f.coeffs[i] = C64::new(f.coeffs[i].re, 0.0);
        }
    }
    Ok(f)
}

/// Gaussian profile `a exp(-q²/(2s²))` with random `a`, `s`.
pub fn profile(rng: &mut InstanceRng) -> impl Fn(f64) -> f64 {
    let a = rng.gen_range(0.5..2.0);
    let s = rng.gen_range(1.0..3.0);
    move |q: f64| a * (-q * q / (2.0 * s * s)).exp()
}

/// GUE-like Hermitian matrix with entries of size `scale`.
pub fn hermitian(rng: &mut InstanceRng, n: usize, scale: f64) -> CMat {
    let g = Mat::from_fn(n, n, |_, _| cnormal(rng));
    let h = &g + g.adjoint();
    crate::linalg::scale(&h, C64::new(0.5 * scale, 0.0))
}

/// `U diag(u) U†` with `u` uniform in `[0, 1]` and `U` the eigenbasis of a random Hermitian matrix.
pub fn density(rng: &mut InstanceRng, n: usize) -> Result<CMat> {
    let e = eigh(&hermitian(rng, n, 1.0))?;
    let u: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let v = &e.vectors;
    let w = Mat::from_fn(n, n, |i, j| v[(i, j)] * u[j]);
    Ok(&w * v.adjoint())
}

/// `diag(A, B)` with independent random Hermitian blocks of size `n`.
pub fn block_diagonal(rng: &mut InstanceRng, n: usize, scale: f64) -> CMat {
    let (a, b) = (hermitian(rng, n, scale), hermitian(rng, n, scale));
    crate::linalg::blocks(&a, &Mat::zeros(n, n), &Mat::zeros(n, n), &b)
}

/// Uniform sample from `[lo, hi)`.
pub fn uniform(rng: &mut InstanceRng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}
