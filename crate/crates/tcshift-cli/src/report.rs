//! Report records, fixed-precision JSON and CSV output.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::error::CliResult;

pub const SCHEMA_VERSION: &str = "1.0";

/// One command's results. The main JSON file omits `timings`, which go to a
/// `<command>.timings.json` sidecar, so reports are byte-identical across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub schema_version: String,
    pub command: String,
    pub config_digest: String,
    pub inputs: BTreeMap<String, Value>,
    pub outputs: BTreeMap<String, Value>,
    pub residuals: BTreeMap<String, Value>,
    /// Wall-clock seconds per stage.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub timings: BTreeMap<String, f64>,
}

/// Pretty JSON with every float written as `{:.16e}` (17 significant digits).
struct FixedFloats(PrettyFormatter<'static>);

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` with fixed float formatting and a trailing newline.
pub fn to_fixed_json<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloats(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

/// `{:.16e}` for CSV cells.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Value of a serializable quantity; non-finite floats become `null`.
pub fn value<T: Serialize>(x: T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

impl ReportRecord {
    pub fn new(command: &str, config_digest: &str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            command: command.into(),
            config_digest: config_digest.into(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            residuals: BTreeMap::new(),
            timings: BTreeMap::new(),
        }
    }

    pub fn input<T: Serialize>(&mut self, key: &str, x: T) -> &mut Self {
        self.inputs.insert(key.into(), value(x));
        self
    }

    pub fn output<T: Serialize>(&mut self, key: &str, x: T) -> &mut Self {
        self.outputs.insert(key.into(), value(x));
        self
    }

    pub fn residual<T: Serialize>(&mut self, key: &str, x: T) -> &mut Self {
        self.residuals.insert(key.into(), value(x));
        self
    }

    /// Runs `f`, recording its wall-clock time under `stage`.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.insert(stage.into(), start.elapsed().as_secs_f64());
        out
    }

    pub fn json_path(dir: &Path, command: &str) -> PathBuf {
        dir.join(format!("{command}.json"))
    }

    pub fn timings_path(dir: &Path, command: &str) -> PathBuf {
        dir.join(format!("{command}.timings.json"))
    }

    /// Writes `<command>.json` and the timings sidecar into `dir`.
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        std::fs::create_dir_all(dir)?;
        let main = Self { timings: BTreeMap::new(), ..self.clone() };
        std::fs::write(Self::json_path(dir, &self.command), to_fixed_json(&main)?)?;
        std::fs::write(Self::timings_path(dir, &self.command), to_fixed_json(&self.timings)?)?;
        Ok(())
    }

    /// Reads a report written by [`ReportRecord::write`], timings included when present.
    pub fn read(dir: &Path, command: &str) -> CliResult<Self> {
        let mut rec: Self = serde_json::from_slice(&std::fs::read(Self::json_path(dir, command))?)?;
        let sidecar = Self::timings_path(dir, command);
        if sidecar.exists() {
            rec.timings = serde_json::from_slice(&std::fs::read(sidecar)?)?;
        }
        Ok(rec)
    }
}

/// Writes a CSV with a header row; the first column is the swept variable.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}
