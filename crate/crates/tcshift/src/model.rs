//! Model data: dimension, chemical potential, the interaction potential `V`,
//! the periodic fields `W` and `A` given by sparse Fourier coefficients, and
//! the scale ratio `h`. `validate` checks the standing assumptions and
//! reports measured defects rather than failing.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bdg_lattice::TorusGrid;
use crate::error::{Error, Result};

/// Integer Fourier index `n` of the mode `p = 2πn`; unused axes are zero.
pub type Mode = [i64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    GaussianWell,
    SampledRadial,
    Tabulated,
}

type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Sampler {
    Radial(RadialFn),
    Point(PointFn),
}

/// Local two-body potential `V(x)`.
#[derive(Clone)]
pub struct InteractionPotential {
    pub kind: PotentialKind,
    pub params: BTreeMap<String, f64>,
    sampler: Sampler,
    range: f64,
}

impl fmt::Debug for InteractionPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InteractionPotential")
            .field("kind", &self.kind)
            .field("params", &self.params)
            .field("range", &self.range)
            .finish()
    }
}

fn interp(xs: &[f64], vs: &[f64], x: f64) -> f64 {
    if x < xs[0] || x > xs[xs.len() - 1] {
        return 0.0;
    }
    let i = xs.partition_point(|&t| t <= x).clamp(1, xs.len() - 1);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let w = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
    vs[i - 1] * (1.0 - w) + vs[i] * w
}

fn check_table(xs: &[f64], vs: &[f64]) -> Result<()> {
    if xs.len() < 2 || xs.len() != vs.len() {
        return Err(Error::Domain("potential table needs at least two points and matching lengths".into()));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) || xs.iter().chain(vs).any(|v| !v.is_finite()) {
        return Err(Error::Domain("potential table abscissae must be finite and strictly increasing".into()));
    }
    Ok(())
}

impl InteractionPotential {
    /// `V(x) = -v exp(-|x|^2 / (2 s^2))`.
    pub fn gaussian_well(strength: f64, width: f64) -> Self {
        let params = BTreeMap::from([("strength".to_string(), strength), ("width".to_string(), width)]);
        let s2 = 2.0 * width * width;
        Self {
            kind: PotentialKind::GaussianWell,
            params,
            sampler: Sampler::Radial(Arc::new(move |r: f64| -strength * (-r * r / s2).exp())),
            // |V| < 1e-17 v beyond this radius
            range: width * (2.0 * 17.0 * 10f64.ln()).sqrt(),
        }
    }

    /// Radial profile tabulated at increasing radii, linearly interpolated and zero beyond the table.
    pub fn sampled_radial(r: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        check_table(&r, &v)?;
        if r[0] < 0.0 {
            return Err(Error::Domain("radial table must start at r >= 0".into()));
        }
        let range = r[r.len() - 1];
        Ok(Self {
            kind: PotentialKind::SampledRadial,
            params: BTreeMap::from([("points".to_string(), r.len() as f64)]),
            sampler: Sampler::Radial(Arc::new(move |x: f64| interp(&r, &v, x))),
            range,
        })
    }

    /// Radial potential given by a function of `|x|`, negligible beyond `range`.
    pub fn radial_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static, range: f64) -> Self {
        Self { kind: PotentialKind::SampledRadial, params: BTreeMap::new(), sampler: Sampler::Radial(Arc::new(f)), range }
    }

    /// One-dimensional table `V(x_i) = v_i`, linearly interpolated and zero outside.
    pub fn tabulated(x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        check_table(&x, &v)?;
        let range = x[0].abs().max(x[x.len() - 1].abs());
        Ok(Self {
            kind: PotentialKind::Tabulated,
            params: BTreeMap::from([("points".to_string(), x.len() as f64)]),
            sampler: Sampler::Point(Arc::new(move |p: &[f64]| interp(&x, &v, p[0]))),
            range,
        })
    }

    /// Arbitrary potential on `R^d`, negligible beyond `range`.
    pub fn from_fn(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static, range: f64) -> Self {
        Self { kind: PotentialKind::Tabulated, params: BTreeMap::new(), sampler: Sampler::Point(Arc::new(f)), range }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.sampler {
            Sampler::Radial(f) => f(x.iter().map(|v| v * v).sum::<f64>().sqrt()),
            Sampler::Point(f) => f(x),
        }
    }

    /// The radial profile `r -> V(r)` when the potential is radial.
    pub fn radial_profile(&self) -> Option<&(dyn Fn(f64) -> f64 + Send + Sync)> {
        match &self.sampler {
            Sampler::Radial(f) => Some(f.as_ref()),
            Sampler::Point(_) => None,
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.sampler, Sampler::Radial(_))
    }

    /// Radius beyond which `V` is treated as zero.
    pub fn range(&self) -> f64 {
        self.range
    }

    /// The same potential with the sign flipped.
    pub fn negated(&self) -> Self {
        let sampler = match &self.sampler {
            Sampler::Radial(f) => {
                let f = f.clone();
                Sampler::Radial(Arc::new(move |r: f64| -f(r)))
            }
            Sampler::Point(f) => {
                let f = f.clone();
                Sampler::Point(Arc::new(move |x: &[f64]| -f(x)))
            }
        };
        let mut params = self.params.clone();
        if let Some(s) = params.get_mut("strength") {
            *s = -*s;
        }
        Self { kind: self.kind, params, sampler, range: self.range }
    }
}

/// Periodic fields `W` (scalar) and `A` (vector) by their Fourier coefficients.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExternalFields {
    pub w_hat: BTreeMap<Mode, C64>,
    pub a_hat: BTreeMap<Mode, [C64; 3]>,
}

/// Partial sums of `Σ |Ŵ(p)| + (1+|p|)|Â(p)|` over shells `max_i |n_i| <= c`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summability {
    pub partial_sums: Vec<(i64, f64)>,
    pub total: f64,
    /// Least-squares exponent of the shell contributions against the shell index.
    pub decay_exponent: Option<f64>,
    pub divergent: bool,
}

fn mode_norm(n: &Mode) -> f64 {
    2.0 * PI * n.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt()
}

fn neg(n: &Mode) -> Mode {
    [-n[0], -n[1], -n[2]]
}

impl ExternalFields {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `W(x) = amplitude * cos(2π n·x)`.
    pub fn cosine_w(n: Mode, amplitude: f64) -> Self {
        let mut f = Self::default();
        let c = C64::new(0.5 * amplitude, 0.0);
        *f.w_hat.entry(n).or_default() += c;
        *f.w_hat.entry(neg(&n)).or_default() += c;
        f
    }

    pub fn constant_w(c: f64) -> Self {
        let mut f = Self::default();
        f.w_hat.insert([0; 3], C64::new(c, 0.0));
        f
    }

    pub fn is_zero(&self) -> bool {
        self.w_hat.values().all(|c| c.norm() == 0.0) && self.a_hat.values().all(|a| a.iter().all(|c| c.norm() == 0.0))
    }

    pub fn has_a(&self) -> bool {
        self.a_hat.values().any(|a| a.iter().any(|c| c.norm() != 0.0))
    }

    pub fn w(&self, n: &Mode) -> C64 {
        self.w_hat.get(n).copied().unwrap_or_default()
    }

    pub fn a(&self, n: &Mode) -> [C64; 3] {
        self.a_hat.get(n).copied().unwrap_or_default()
    }

    /// Largest `|n_i|` among retained `W` and `A` modes.
    pub fn max_mode(&self) -> i64 {
        self.max_w_mode().max(self.max_a_mode())
    }

    pub fn max_w_mode(&self) -> i64 {
        self.w_hat.keys().flat_map(|n| n.iter().map(|v| v.abs())).max().unwrap_or(0)
    }

    pub fn max_a_mode(&self) -> i64 {
        self.a_hat.keys().flat_map(|n| n.iter().map(|v| v.abs())).max().unwrap_or(0)
    }

    /// Largest violation of `Ŵ(-p) = conj Ŵ(p)` and `Â(-p) = conj Â(p)`.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (n, c) in &self.w_hat {
            d = d.max((self.w(&neg(n)) - c.conj()).norm());
        }
        for (n, a) in &self.a_hat {
            let b = self.a(&neg(n));
            for i in 0..3 {
                d = d.max((b[i] - a[i].conj()).norm());
            }
        }
        d
    }

    /// Coefficient combination `Â★Â(q) = Σ_r Σ_j Â_j(r) Â_j(q - r)` at all reachable `q`.
    pub fn a_squared_hat(&self) -> BTreeMap<Mode, C64> {
        let mut out: BTreeMap<Mode, C64> = BTreeMap::new();
        for (r, ar) in &self.a_hat {
            for (s, as_) in &self.a_hat {
                let q = [r[0] + s[0], r[1] + s[1], r[2] + s[2]];
                let v: C64 = (0..3).map(|j| ar[j] * as_[j]).sum();
                *out.entry(q).or_default() += v;
            }
        }
        out
    }

    pub fn summability(&self) -> Summability {
        let mut shells: BTreeMap<i64, f64> = BTreeMap::new();
        for (n, c) in &self.w_hat {
            *shells.entry(n.iter().map(|v| v.abs()).max().unwrap()).or_default() += c.norm();
        }
        for (n, a) in &self.a_hat {
            let mag = a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            *shells.entry(n.iter().map(|v| v.abs()).max().unwrap()).or_default() += (1.0 + mode_norm(n)) * mag;
        }
        let mut acc = 0.0;
        let partial_sums: Vec<(i64, f64)> = shells
            .iter()
            .map(|(&c, &v)| {
                acc += v;
                (c, acc)
            })
            .collect();
        let pts: Vec<(f64, f64)> =
            shells.iter().filter(|(&c, &v)| c > 0 && v > 0.0).map(|(&c, &v)| ((c as f64).ln(), v.ln())).collect();
        let decay_exponent = if pts.len() >= 4 {
            let m = pts.len() as f64;
            let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
            let (mx, my) = (sx / m, sy / m);
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            Some(sxy / sxx)
        } else {
            None
        };
        // Shell contributions decaying no faster than 1/c give partial sums without a plateau.
        let divergent = decay_exponent.is_some_and(|e| e >= -1.0);
        Summability { total: acc, partial_sums, decay_exponent, divergent }
    }
}

#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub dim: usize,
    pub mu: f64,
    pub potential: InteractionPotential,
    pub fields: ExternalFields,
    pub h: f64,
}

impl ModelConfig {
    /// d=1, μ=1, Gaussian well (v=2, s=1), W=cos(2πx), A=0.
    pub fn benchmark(h: f64) -> Self {
        Self {
            dim: 1,
            mu: 1.0,
            potential: InteractionPotential::gaussian_well(2.0, 1.0),
            fields: ExternalFields::cosine_w([1, 0, 0], 1.0),
            h,
        }
    }

    pub fn with_fields(&self, fields: ExternalFields) -> Self {
        Self { fields, ..self.clone() }
    }

    pub fn with_potential(&self, potential: InteractionPotential) -> Self {
        Self { potential, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub summability: Summability,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Exponent of the Lebesgue norm required of `V` in dimension `d`.
pub fn lp_exponent(d: usize) -> f64 {
    match d {
        1 => 1.0,
        2 => 2.0,
        _ => 1.5,
    }
}

/// Surface area of the unit sphere in `R^d` (2 for d = 1).
pub fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

fn test_points(d: usize, r: f64) -> Vec<[f64; 3]> {
    let m: usize = match d {
        1 => 401,
        2 => 41,
        _ => 15,
    };
    let coord = |i: usize| r * (2.0 * (i as f64 + 0.37) / m as f64 - 1.0);
    let total = m.pow(d as u32);
    (0..total)
        .map(|mut k| {
            let mut x = [0.0; 3];
            for xi in x.iter_mut().take(d) {
                *xi = coord(k % m);
                k /= m;
            }
            x
        })
        .collect()
}

fn lp_integral(v: &InteractionPotential, d: usize, p: f64, r: f64) -> f64 {
    if let Some(f) = v.radial_profile() {
        let n = 20000;
        let dr = r / n as f64;
        let s: f64 = (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) * dr;
                f(x).abs().powf(p) * x.powi(d as i32 - 1)
            })
            .sum();
        sphere_area(d) * s * dr
    } else {
        let m: usize = match d {
            1 => 20000,
            2 => 400,
            _ => 80,
        };
        let dx = 2.0 * r / m as f64;
        let total = m.pow(d as u32);
        let mut s = 0.0;
        for mut k in 0..total {
            let mut x = [0.0; 3];
            for xi in x.iter_mut().take(d) {
                *xi = -r + ((k % m) as f64 + 0.5) * dx;
                k /= m;
            }
            s += v.eval(&x[..d]).abs().powf(p);
        }
        s * dx.powi(d as i32)
    }
}

pub fn validate(config: &ModelConfig) -> ValidationReport {
    let mut checks = Vec::new();
    let d = config.dim;
    let dim_ok = (1..=3).contains(&d);
    checks.push(Check {
        name: "dimension".into(),
        passed: dim_ok,
        measured: d as f64,
        detail: "d must be 1, 2 or 3".into(),
    });
    checks.push(Check {
        name: "h_range".into(),
        passed: config.h > 0.0 && config.h < 1.0,
        measured: config.h,
        detail: "h must lie in (0, 1)".into(),
    });
    checks.push(Check {
        name: "mu_finite".into(),
        passed: config.mu.is_finite(),
        measured: config.mu,
        detail: "chemical potential must be finite".into(),
    });
    let dd = d.clamp(1, 3);
    let v = &config.potential;
    let r = v.range().max(1e-12);

    let pts = test_points(dd, 1.5 * r);
    let (mut defect, mut vmax) = (0.0f64, 0.0f64);
    for x in &pts {
        let mx = [-x[0], -x[1], -x[2]];
        let a = v.eval(&x[..dd]);
        let b = v.eval(&mx[..dd]);
        defect = defect.max((a - b).abs());
        vmax = vmax.max(a.abs());
    }
    let rel = if vmax > 0.0 { defect / vmax } else { defect };
    checks.push(Check {
        name: "reflection_symmetry".into(),
        passed: rel <= 1e-12,
        measured: rel,
        detail: "max |V(x) - V(-x)| / max |V| over test points".into(),
    });

    let p = lp_exponent(dd);
    let i1 = lp_integral(v, dd, p, r);
    let i2 = lp_integral(v, dd, p, 2.0 * r);
    let change = if i2 > 0.0 { (i2 - i1).abs() / i2 } else { 0.0 };
    checks.push(Check {
        name: "lp_norm".into(),
        passed: i2.is_finite() && change < 1e-6,
        measured: i2.powf(1.0 / p),
        detail: format!("L^{p} norm over the support box; relative change on doubling the box {change:.3e}"),
    });

    let conj = config.fields.conjugate_symmetry_defect();
    checks.push(Check {
        name: "conjugate_symmetry".into(),
        passed: conj <= 1e-14,
        measured: conj,
        detail: "fields must be real valued".into(),
    });
    let bad_axes = config
        .fields
        .w_hat
        .keys()
        .chain(config.fields.a_hat.keys())
        .any(|n| n.iter().skip(dd).any(|&c| c != 0))
        || config.fields.a_hat.values().any(|a| a.iter().skip(dd).any(|c| c.norm() != 0.0));
    checks.push(Check {
        name: "field_axes".into(),
        passed: !bad_axes,
        measured: if bad_axes { 1.0 } else { 0.0 },
        detail: "field modes and vector components must not use axes beyond d".into(),
    });

    let summability = config.fields.summability();
    checks.push(Check {
        name: "fourier_summability".into(),
        passed: summability.total.is_finite() && !summability.divergent,
        measured: summability.total,
        detail: match summability.decay_exponent {
            Some(e) => format!("shell contributions decay like c^{e:.3}"),
            None => "too few shells to fit a decay rate".into(),
        },
    });
    ValidationReport { checks, summability }
}

/// Real samples of `W` and `A` on the position grid of `grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSamples {
    pub w: Vec<f64>,
    pub a: Vec<[f64; 3]>,
    pub max_imag: f64,
}

fn synth(coeffs: &[(Mode, C64)], grid: &TorusGrid, idx: usize) -> C64 {
    let x = grid.position(idx);
    coeffs
        .iter()
        .map(|(n, c)| {
            let ph = 2.0 * PI * (0..3).map(|i| n[i] as f64 * x[i]).sum::<f64>();
            c * C64::from_polar(1.0, ph)
        })
        .sum()
}

pub fn field_samples(fields: &ExternalFields, grid: &TorusGrid) -> Result<FieldSamples> {
    let m = fields.max_mode();
    if (grid.n as i64) < 2 * m {
        return Err(Error::Aliasing(format!("grid with N = {} cannot resolve field mode {m}; need N >= {}", grid.n, 2 * m)));
    }
    let w: Vec<(Mode, C64)> = fields.w_hat.iter().map(|(n, c)| (*n, *c)).collect();
    let comps: Vec<Vec<(Mode, C64)>> =
        (0..3).map(|j| fields.a_hat.iter().map(|(n, a)| (*n, a[j])).collect()).collect();
    let mut max_imag: f64 = 0.0;
    let mut ws = Vec::with_capacity(grid.len());
    let mut as_ = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let v = synth(&w, grid, i);
        max_imag = max_imag.max(v.im.abs());
        ws.push(v.re);
        let mut a = [0.0; 3];
        for j in 0..grid.dim {
            let v = synth(&comps[j], grid, i);
            max_imag = max_imag.max(v.im.abs());
            a[j] = v.re;
        }
        as_.push(a);
    }
    Ok(FieldSamples { w: ws, a: as_, max_imag })
}

/// Fourier coefficients of grid samples: `c_n = mean_x s(x) e^{-2πi n·x}` over all grid modes.
pub fn analyze_samples(samples: &[C64], grid: &TorusGrid) -> Vec<(Mode, C64)> {
    let len = grid.len();
    (0..len)
        .map(|k| {
            let n = grid.mode(k);
            let c: C64 = (0..len)
                .map(|i| {
                    let x = grid.position(i);
                    let ph = -2.0 * PI * (0..3).map(|a| n[a] as f64 * x[a]).sum::<f64>();
                    samples[i] * C64::from_polar(1.0, ph)
                })
                .sum();
            (n, c / len as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_is_zero_outside() {
        let v = InteractionPotential::tabulated(vec![-1.0, 0.0, 1.0], vec![0.0, -1.0, 0.0]).unwrap();
        assert_eq!(v.eval(&[2.0]), 0.0);
        assert_eq!(v.eval(&[0.5]), -0.5);
    }

    #[test]
    fn a_squared_combines_components() {
        let mut f = ExternalFields::zero();
        f.a_hat.insert([1, 0, 0], [C64::new(0.5, 0.0), C64::default(), C64::default()]);
        f.a_hat.insert([-1, 0, 0], [C64::new(0.5, 0.0), C64::default(), C64::default()]);
        let a2 = f.a_squared_hat();
        // cos^2 = 1/2 + cos(2x)/2
        assert!((a2[&[0, 0, 0]].re - 0.5).abs() < 1e-15);
        assert!((a2[&[2, 0, 0]].re - 0.25).abs() < 1e-15);
    }
}
