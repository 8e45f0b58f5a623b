use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::model::Mode;

/// Unit torus `[0,1)^d` with `N + 1` points per axis and the matching
/// conjugate-symmetric mode set `n_i ∈ [-N/2, N/2]`, `p = 2πn + k` for the
/// Bloch quasi-momentum `k` of the fiber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    pub dim: usize,
    pub n: usize,
    pub bloch: [f64; 3],
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Domain(format!("torus dimension must be 1, 2 or 3, got {dim}")));
        }
        if n < 2 || n % 2 != 0 {
            return Err(Error::Domain(format!("N must be even and at least 2, got {n}")));
        }
        Ok(Self { dim, n, bloch: [0.0; 3] })
    }

    pub fn with_bloch(&self, k: [f64; 3]) -> Self {
        Self { bloch: k, ..self.clone() }
    }

    pub fn is_periodic(&self) -> bool {
        self.bloch.iter().all(|&k| k == 0.0)
    }

    /// Points (and modes) per axis.
    pub fn side(&self) -> usize {
        self.n + 1
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn half(&self) -> i64 {
        (self.n / 2) as i64
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.side() as f64
    }

    fn digits(&self, mut idx: usize) -> [usize; 3] {
        let s = self.side();
        let mut d = [0usize; 3];
        for a in (0..self.dim).rev() {
            d[a] = idx % s;
            idx /= s;
        }
        d
    }

    pub fn mode(&self, idx: usize) -> Mode {
        let d = self.digits(idx);
        let mut m = [0i64; 3];
        for a in 0..self.dim {
            m[a] = d[a] as i64 - self.half();
        }
        m
    }

    pub fn index_of(&self, m: &Mode) -> Option<usize> {
        let h = self.half();
        let mut idx = 0usize;
        for a in 0..3 {
            if a >= self.dim {
                if m[a] != 0 {
                    return None;
                }
                continue;
            }
            if m[a].abs() > h {
                return None;
            }
            idx = idx * self.side() + (m[a] + h) as usize;
        }
        Some(idx)
    }

    /// Index of the mode `-n` (conjugation partner).
    pub fn mirror(&self, idx: usize) -> usize {
        self.len() - 1 - idx
    }

    pub fn momentum(&self, idx: usize) -> [f64; 3] {
        let m = self.mode(idx);
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = 2.0 * PI * m[a] as f64 + self.bloch[a];
        }
        p
    }

    pub fn position(&self, idx: usize) -> [f64; 3] {
        let d = self.digits(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = d[a] as f64 * self.spacing();
        }
        x
    }

    /// Unitary map from mode to position coefficients, `E[i, n] = e^{i p_n·x_i} / sqrt(len)`.
    pub fn fourier_matrix(&self) -> CMat {
        let len = self.len();
        let norm = 1.0 / (len as f64).sqrt();
        let xs: Vec<[f64; 3]> = (0..len).map(|i| self.position(i)).collect();
        let ps: Vec<[f64; 3]> = (0..len).map(|i| self.momentum(i)).collect();
        Mat::from_fn(len, len, |i, j| {
            let ph: f64 = (0..self.dim).map(|a| xs[i][a] * ps[j][a]).sum();
            C64::from_polar(norm, ph)
        })
    }

    /// Midpoint quasi-momenta `2π(j + 1/2)/n_b - π` per axis. The set is
    /// symmetric under `k -> -k` and never contains the zone edge `±π`, so
    /// every fiber has its conjugation partner with the same mode set.
    pub fn bloch_points(&self, per_axis: usize) -> Vec<[f64; 3]> {
        let nb = per_axis.max(1);
        let ks: Vec<f64> = (0..nb).map(|j| 2.0 * PI * (j as f64 + 0.5) / nb as f64 - PI).collect();
        let total = nb.pow(self.dim as u32);
        (0..total)
            .map(|mut t| {
                let mut k = [0.0; 3];
                for ka in k.iter_mut().take(self.dim) {
                    *ka = ks[t % nb];
                    t /= nb;
                }
                k
            })
            .collect()
    }
}
