//! Scalar functions of the theory: the Fermi free-energy density `f`, the
//! pair susceptibility `g0` and its derived kernels `g1`, `g2`, and the
//! multiplier `K_T`.
//!
//! All of `g0`, `g1`, `g1/z`, `g2` and `K_T` have a removable singularity at
//! the origin. Below `EvalPolicy::series_threshold` they are evaluated from
//! their Taylor polynomials, above it from the closed forms with the large
//! exponentials factored as `e^{-|z|}`.

use crate::error::{Error, Result};

// Taylor coefficients in even powers z^0, z^2, ..., z^12.
const G0_SERIES: [f64; 7] = [
    1.0 / 2.0,
    -1.0 / 24.0,
    1.0 / 240.0,
    -17.0 / 40320.0,
    31.0 / 725760.0,
    -691.0 / 159667200.0,
    5461.0 / 12454041600.0,
];
// g1/z, which also gives g1 after one extra factor of z.
const G1Z_SERIES: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 60.0,
    17.0 / 6720.0,
    -31.0 / 90720.0,
    691.0 / 15966720.0,
    -5461.0 / 1037836800.0,
    929569.0 / 1494484992000.0,
];
const G2_SERIES: [f64; 7] = [
    1.0 / 4.0,
    -1.0 / 12.0,
    17.0 / 960.0,
    -31.0 / 10080.0,
    691.0 / 1451520.0,
    -5461.0 / 79833600.0,
    929569.0 / 99632332800.0,
];
// y / tanh(y)
const YCOTH_SERIES: [f64; 7] = [
    1.0,
    1.0 / 3.0,
    -1.0 / 45.0,
    2.0 / 945.0,
    -1.0 / 4725.0,
    2.0 / 93555.0,
    -1382.0 / 638512875.0,
];

/// Switch between Taylor series and closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPolicy {
    pub series_threshold: f64,
    /// Highest power of z kept in the series (at most 12).
    pub series_order: usize,
}

impl Default for EvalPolicy {
    fn default() -> Self {
        Self { series_threshold: 0.05, series_order: 10 }
    }
}

fn even_series(c: &[f64; 7], z: f64, order: usize) -> f64 {
    let z2 = z * z;
    let terms = (order / 2 + 1).min(c.len());
    c[..terms].iter().rev().fold(0.0, |acc, &a| acc * z2 + a)
}

impl EvalPolicy {
    pub fn new(series_threshold: f64, series_order: usize) -> Result<Self> {
        if !(series_threshold > 0.0 && series_threshold.is_finite()) {
            return Err(Error::Domain(format!("series_threshold must be positive, got {series_threshold}")));
        }
        if series_order > 12 {
            return Err(Error::Domain(format!("series_order must be at most 12, got {series_order}")));
        }
        Ok(Self { series_threshold, series_order })
    }

    pub fn g0(&self, z: f64) -> f64 {
        let a = z.abs();
        if a < self.series_threshold {
            even_series(&G0_SERIES, a, self.series_order)
        } else {
            (0.5 * a).tanh() / a
        }
    }

    pub fn g1(&self, z: f64) -> f64 {
        let a = z.abs();
        let v = if a < self.series_threshold {
            a * even_series(&G1Z_SERIES, a, self.series_order.saturating_sub(1))
        } else {
            g1_direct(a)
        };
        v.copysign(z)
    }

    pub fn g1_over_z(&self, z: f64) -> f64 {
        let a = z.abs();
        if a < self.series_threshold {
            even_series(&G1Z_SERIES, a, self.series_order)
        } else {
            g1_direct(a) / a
        }
    }

    pub fn g2(&self, z: f64) -> f64 {
        let a = z.abs();
        if a < self.series_threshold {
            even_series(&G2_SERIES, a, self.series_order)
        } else {
            let e = (-a).exp();
            2.0 * e * (-(-a).exp_m1()) / (a * (1.0 + e).powi(3))
        }
    }

    /// `x / tanh(x / 2T)` for `T > 0`, `|x|` for `T = 0`. Assumes `T >= 0`.
    pub fn kt(&self, x: f64, t: f64) -> f64 {
        if t == 0.0 {
            return x.abs();
        }
        let y = x / (2.0 * t);
        if y.abs() < self.series_threshold {
            2.0 * t * even_series(&YCOTH_SERIES, y, self.series_order)
        } else {
            x / y.tanh()
        }
    }
}

// Closed form of g1 for a > 0 with e^{-a} factored out.
fn g1_direct(a: f64) -> f64 {
    let e = (-a).exp();
    ((-(-2.0 * a).exp_m1()) - 2.0 * a * e) / (a * a * (1.0 + e) * (1.0 + e))
}

const DEFAULT: EvalPolicy = EvalPolicy { series_threshold: 0.05, series_order: 10 };

/// `f(z) = -ln(1 + e^{-z})`.
#[inline]
pub fn f(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

#[inline]
pub fn g0(z: f64) -> f64 {
    DEFAULT.g0(z)
}

#[inline]
pub fn g1(z: f64) -> f64 {
    DEFAULT.g1(z)
}

#[inline]
pub fn g1_over_z(z: f64) -> f64 {
    DEFAULT.g1_over_z(z)
}

#[inline]
pub fn g2(z: f64) -> f64 {
    DEFAULT.g2(z)
}

#[inline]
pub fn kt(x: f64, t: f64) -> f64 {
    DEFAULT.kt(x, t)
}

/// Fermi-Dirac occupation `1 / (1 + e^{z})`.
#[inline]
pub fn fermi(z: f64) -> f64 {
    0.5 * (1.0 - (0.5 * z).tanh())
}

/// Binary entropy `-x ln x - (1-x) ln(1-x)` with `0 ln 0 = 0`.
#[inline]
pub fn binary_entropy(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    let a = if x > 0.0 { -x * x.ln() } else { 0.0 };
    let b = if x < 1.0 { -(1.0 - x) * (-x).ln_1p() } else { 0.0 };
    a + b
}

/// Entropy of the occupation `1/(1+e^z)` evaluated without forming it.
#[inline]
pub fn fermi_entropy(z: f64) -> f64 {
    // -n ln n - (1-n) ln(1-n) = ln(1+e^{-|z|}) + |z| n(|z|)
    let a = z.abs();
    (-a).exp().ln_1p() + a * fermi(a)
}

fn finite(z: f64, name: &str) -> Result<f64> {
    if z.is_finite() {
        Ok(z)
    } else {
        Err(Error::Domain(format!("{name}: non-finite argument {z}")))
    }
}

pub fn eval_f(z: f64) -> Result<f64> {
    finite(z, "f").map(f)
}

pub fn eval_g0(z: f64) -> Result<f64> {
    finite(z, "g0").map(g0)
}

pub fn eval_g1(z: f64) -> Result<f64> {
    finite(z, "g1").map(g1)
}

pub fn eval_g2(z: f64) -> Result<f64> {
    finite(z, "g2").map(g2)
}

pub fn eval_kt(p2_minus_mu: f64, t: f64) -> Result<f64> {
    finite(p2_minus_mu, "K_T")?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("K_T: temperature must be finite and non-negative, got {t}")));
    }
    Ok(kt(p2_minus_mu, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limits_at_zero() {
        assert_eq!(g0(0.0), 0.5);
        assert_eq!(g1(0.0), 0.0);
        assert_eq!(g2(0.0), 0.25);
        assert_eq!(g1_over_z(0.0), 1.0 / 12.0);
        assert_eq!(kt(0.0, 1.0), 2.0);
        assert_eq!(f(0.0), -std::f64::consts::LN_2);
    }

    #[test]
    fn no_overflow_far_out() {
        for z in [-700.0, -300.0, 300.0, 700.0, 1e4] {
            assert!(g1(z).is_finite() && g2(z).is_finite() && f(z).is_finite());
        }
        assert_eq!(f(-1e4), -1e4);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(eval_g1(f64::NAN).is_err());
        assert!(eval_kt(1.0, -0.1).is_err());
        assert!(EvalPolicy::new(0.0, 8).is_err());
    }

    #[test]
    fn fermi_entropy_matches_binary() {
        for z in [-30.0, -2.0, -0.1, 0.0, 0.3, 4.0, 40.0] {
            let a = fermi_entropy(z);
            let b = binary_entropy(fermi(z));
            assert!((a - b).abs() < 1e-14, "{z}: {a} {b}");
        }
    }
}
