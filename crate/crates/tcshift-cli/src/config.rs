//! Run configuration: JSON ingestion, schema checks and conversion to model types.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use tcshift::model::{ExternalFields, InteractionPotential, Mode, ModelConfig};
use tcshift::ti_bcs::PositionGrid;

use crate::error::{CliError, CliResult};

/// Top-level keys every config must carry.
pub const REQUIRED_KEYS: [&str; 5] = ["dim", "mu", "h", "potential", "fields"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dim: usize,
    pub mu: f64,
    pub h: f64,
    pub potential: PotentialSpec,
    pub fields: FieldsSpec,
    #[serde(default)]
    pub position_grid: Option<GridSpec>,
    #[serde(default)]
    pub seed: u64,
    /// Plane-wave cutoff of the GL operator; defaults by dimension.
    #[serde(default)]
    pub gl_cutoff: Option<usize>,
    #[serde(default)]
    pub verify: VerifySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// `V(x) = -strength exp(-|x|²/(2 width²))`.
    GaussianWell { strength: f64, width: f64 },
    /// Radial table `V(r_i) = v_i`.
    SampledRadial { r: Vec<f64>, v: Vec<f64> },
    /// One-dimensional table `V(x_i) = v_i`.
    Tabulated { x: Vec<f64>, v: Vec<f64> },
}

/// Keys required by each potential kind.
fn potential_keys(kind: &str) -> Option<&'static [&'static str]> {
    match kind {
        "gaussian_well" => Some(&["strength", "width"]),
        "sampled_radial" => Some(&["r", "v"]),
        "tabulated" => Some(&["x", "v"]),
        _ => None,
    }
}

/// One Fourier coefficient `[re, im]` of `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarMode {
    pub mode: Vec<i64>,
    pub value: [f64; 2],
}

/// One Fourier coefficient of `A`, `[re, im]` per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorMode {
    pub mode: Vec<i64>,
    pub value: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldsSpec {
    #[serde(default)]
    pub w: Vec<ScalarMode>,
    #[serde(default)]
    pub a: Vec<VectorMode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub half_width: f64,
    pub points: usize,
}

/// Parameters of the `verify-*` commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    pub semiclassics_h: Vec<f64>,
    pub alpha_delta_h: Vec<f64>,
    pub witness_h: Vec<f64>,
    /// Scale of the key-identity instances.
    pub identity_h: f64,
    pub identity_instances: usize,
    pub klein_instances: usize,
    /// Probe field `ψ` of the semiclassical checks.
    pub probe: Vec<ScalarMode>,
    /// Inverse temperature of the semiclassical checks; `β_c` when absent.
    pub beta: Option<f64>,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            semiclassics_h: vec![0.2, 0.1, 0.05, 0.025],
            alpha_delta_h: vec![0.2, 0.1, 0.05],
            witness_h: vec![0.2, 0.1, 0.05],
            identity_h: 0.2,
            identity_instances: 20,
            klein_instances: 100,
            probe: vec![ScalarMode { mode: vec![1], value: [1.0, 0.0] }],
            beta: None,
        }
    }
}

/// A parsed config with the digest of its file bytes.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub run: RunConfig,
    pub digest: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Dotted paths of required keys absent from `value`.
pub fn missing_keys(value: &Value) -> Vec<String> {
    let Some(obj) = value.as_object() else {
        return REQUIRED_KEYS.iter().map(|k| k.to_string()).collect();
    };
    let mut missing: Vec<String> = REQUIRED_KEYS.iter().filter(|k| !obj.contains_key(**k)).map(|k| k.to_string()).collect();
    if let Some(p) = obj.get("potential").and_then(Value::as_object) {
        match p.get("kind").and_then(Value::as_str) {
            None => missing.push("potential.kind".into()),
            Some(kind) => {
                if let Some(keys) = potential_keys(kind) {
                    missing.extend(keys.iter().filter(|k| !p.contains_key(**k)).map(|k| format!("potential.{k}")));
                }
            }
        }
    }
    missing
}

impl LoadedConfig {
    pub fn from_path(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> CliResult<Self> {
        let value: Value = serde_json::from_slice(bytes).map_err(|e| CliError::Schema(format!("invalid JSON: {e}")))?;
        let missing = missing_keys(&value);
        if !missing.is_empty() {
            return Err(CliError::Schema(format!("missing keys: {}", missing.join(", "))));
        }
        let run: RunConfig = serde_json::from_value(value).map_err(|e| CliError::Schema(e.to_string()))?;
        run.check()?;
        Ok(Self { run, digest: sha256_hex(bytes) })
    }
}

fn pad_mode(mode: &[i64], dim: usize, what: &str) -> CliResult<Mode> {
    if mode.len() != dim {
        return Err(CliError::Schema(format!("{what} mode {mode:?} must have {dim} components")));
    }
    let mut m = [0; 3];
    m[..dim].copy_from_slice(mode);
    Ok(m)
}

fn schema(e: tcshift::Error) -> CliError {
    CliError::Schema(e.to_string())
}

fn complex(v: [f64; 2]) -> tcshift::C64 {
    tcshift::C64::new(v[0], v[1])
}

impl RunConfig {
    fn check(&self) -> CliResult<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(CliError::Schema(format!("dim must be 1, 2 or 3, got {}", self.dim)));
        }
        self.external_fields()?;
        self.probe_modes()?;
        self.potential()?;
        self.position_grid(1.0)?;
        Ok(())
    }

    pub fn potential(&self) -> CliResult<InteractionPotential> {
        Ok(match &self.potential {
            PotentialSpec::GaussianWell { strength, width } => InteractionPotential::gaussian_well(*strength, *width),
            PotentialSpec::SampledRadial { r, v } => InteractionPotential::sampled_radial(r.clone(), v.clone()).map_err(schema)?,
            PotentialSpec::Tabulated { x, v } => InteractionPotential::tabulated(x.clone(), v.clone()).map_err(schema)?,
        })
    }

    pub fn external_fields(&self) -> CliResult<ExternalFields> {
        let mut f = ExternalFields::zero();
        for t in &self.fields.w {
            *f.w_hat.entry(pad_mode(&t.mode, self.dim, "W")?).or_default() += complex(t.value);
        }
        for t in &self.fields.a {
            let n = pad_mode(&t.mode, self.dim, "A")?;
            if t.value.len() != self.dim {
                return Err(CliError::Schema(format!("A coefficient at {:?} must have {} components", t.mode, self.dim)));
            }
            let e = f.a_hat.entry(n).or_default();
            for (c, v) in e.iter_mut().zip(&t.value) {
                *c += complex(*v);
            }
        }
        Ok(f)
    }

    pub fn probe_modes(&self) -> CliResult<Vec<(Mode, tcshift::C64)>> {
        self.verify.probe.iter().map(|t| Ok((pad_mode(&t.mode, self.dim, "probe")?, complex(t.value)))).collect()
    }

    pub fn model(&self) -> CliResult<ModelConfig> {
        Ok(ModelConfig {
            dim: self.dim,
            mu: self.mu,
            potential: self.potential()?,
            fields: self.external_fields()?,
            h: self.h,
        })
    }

    /// Position grid of the pairing problem, scaled by `grid_scale`.
    pub fn position_grid(&self, grid_scale: f64) -> CliResult<PositionGrid> {
        let base = match self.position_grid {
            Some(g) => PositionGrid::new(g.half_width, g.points).map_err(schema)?,
            None => PositionGrid::benchmark(),
        };
        Ok(base.scaled(grid_scale))
    }

    pub fn gl_cutoff(&self, grid_scale: f64) -> usize {
        let base = self.gl_cutoff.unwrap_or_else(|| tcshift::gl::default_cutoff(self.dim));
        ((base as f64 * grid_scale).ceil() as usize).max(1)
    }
}
