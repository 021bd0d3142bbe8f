//! Run manifests and result files.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

/// Everything needed to reproduce an output.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    /// Resolved values of every flag that can change a result.
    pub flags: BTreeMap<String, Value>,
    pub version: String,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            inputs: Vec::new(),
            flags: BTreeMap::new(),
            version: env!("CARGO_PKG_VERSION").into(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn input(&mut self, p: &Path) {
        self.inputs.push(p.display().to_string());
    }

    pub fn flag(&mut self, name: &str, v: impl Serialize) {
        self.flags
            .insert(name.into(), serde_json::to_value(v).unwrap_or(Value::Null));
    }
}

/// Rounds every float to 10 significant digits.
pub fn round_numbers(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            let r: f64 = format!("{x:.9e}").parse().expect("formatted float parses");
            serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_numbers).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_numbers(v))).collect()),
        other => other,
    }
}

/// Writes `{manifest, result}` to `out` or stdout.
pub fn emit(
    mut manifest: RunManifest,
    started: Instant,
    result: &impl Serialize,
    out: Option<&PathBuf>,
) -> Result<(), CliError> {
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    let mut doc = Map::new();
    doc.insert("manifest".into(), serde_json::to_value(&manifest)?);
    doc.insert("result".into(), serde_json::to_value(result)?);
    let text = serde_json::to_string_pretty(&round_numbers(Value::Object(doc)))?;
    write_text(out, &text)
}

pub fn write_text(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n")).map_err(|e| CliError::Io(p.clone(), e)),
        None => {
            let mut stdout = io::stdout().lock();
            match writeln!(stdout, "{text}") {
                // a closed pipe (`| head`) is not an error of ours
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
                r => r.map_err(|e| CliError::Io(PathBuf::from("<stdout>"), e)),
            }
        }
    }
}

pub fn read_text(p: &Path) -> Result<String, CliError> {
    fs::read_to_string(p).map_err(|e| CliError::Io(p.to_path_buf(), e))
}
