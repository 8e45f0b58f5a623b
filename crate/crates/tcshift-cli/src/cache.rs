//! On-disk cache of the pairing, GL coefficient and `D_c` stages.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Bumped whenever a cached payload changes shape.
pub const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Pairing,
    Coeffs,
    Dc,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Self::Pairing => "pairing",
            Self::Coeffs => "coeffs",
            Self::Dc => "dc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Cached,
    Computed,
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    cache_version: u32,
    stage: Stage,
    config_digest: String,
    grid_scale: f64,
    payload: Value,
}

/// Cache directory `<out>/cache` bound to one config and grid scale.
#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
    digest: String,
    grid_scale: f64,
}

impl Cache {
    pub fn new(out: &Path, digest: &str, grid_scale: f64) -> Self {
        Self { dir: out.join("cache"), digest: digest.into(), grid_scale }
    }

    pub fn path(&self, stage: Stage) -> PathBuf {
        self.dir.join(format!("{}.json", stage.name()))
    }

    /// The cached payload, `None` when the file is absent. A file written for
    /// another version, config or grid scale is a [`CliError::StaleCache`].
    pub fn load<T: DeserializeOwned>(&self, stage: Stage) -> CliResult<Option<T>> {
        let path = self.path(stage);
        if !path.exists() {
            return Ok(None);
        }
        let stale = |reason: String| CliError::StaleCache { path: path.clone(), reason };
        let entry: Entry = serde_json::from_slice(&std::fs::read(&path)?).map_err(|e| stale(format!("unreadable ({e})")))?;
        if entry.cache_version != CACHE_VERSION {
            return Err(stale(format!("cache version {} differs from {CACHE_VERSION}", entry.cache_version)));
        }
        if entry.stage != stage {
            return Err(stale(format!("holds stage {}", entry.stage.name())));
        }
        if entry.config_digest != self.digest {
            return Err(stale("written for a different config".into()));
        }
        if entry.grid_scale != self.grid_scale {
            return Err(stale(format!("written for grid scale {}", entry.grid_scale)));
        }
        serde_json::from_value(entry.payload).map(Some).map_err(|e| stale(format!("payload does not parse ({e})")))
    }

    pub fn store<T: Serialize>(&self, stage: Stage, payload: &T) -> CliResult<()> {
        std::fs::create_dir_all(&self.dir)?;
        let entry = Entry {
            cache_version: CACHE_VERSION,
            stage,
            config_digest: self.digest.clone(),
            grid_scale: self.grid_scale,
            payload: serde_json::to_value(payload)?,
        };
        std::fs::write(self.path(stage), serde_json::to_vec_pretty(&entry)?)?;
        Ok(())
    }

    /// Loads `stage` unless `force` is set or the file is absent, in which
    /// case `compute` runs and its result is stored.
    pub fn get_or_compute<T: Serialize + DeserializeOwned>(
        &self,
        stage: Stage,
        force: bool,
        compute: impl FnOnce() -> CliResult<T>,
    ) -> CliResult<(T, Status)> {
        if !force {
            if let Some(v) = self.load(stage)? {
                return Ok((v, Status::Cached));
            }
        }
        let v = compute()?;
        self.store(stage, &v)?;
        Ok((v, Status::Computed))
    }
}
