//! Report emission. Floats are written as `{:.16e}` so every value round-trips exactly and
//! the bytes depend only on the values.

use crate::error::CliError;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn emit(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent + 1);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => write!(out, "{u}").unwrap(),
            (None, Some(i)) => write!(out, "{i}").unwrap(),
            _ => out.push_str(&num(n.as_f64().unwrap_or(f64::NAN))),
        },
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) if a.is_empty() => out.push_str("[]"),
        Value::Array(a) => {
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                out.push_str(&pad);
                emit(x, indent + 1, out);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(indent));
            out.push(']');
        }
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            out.push_str("{\n");
            for (i, (k, x)) in m.iter().enumerate() {
                out.push_str(&pad);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                emit(x, indent + 1, out);
                out.push_str(if i + 1 < m.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(indent));
            out.push('}');
        }
    }
}

/// Pretty JSON with fixed float formatting. Integral f64 fields keep the float form.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let v = serde_json::to_value(value).map_err(|e| CliError::Config(format!("serialization: {e}")))?;
    let mut s = String::new();
    emit(&v, 0, &mut s);
    s.push('\n');
    Ok(s)
}

/// Collects the files written by one command so the manifest can index them.
#[derive(Debug)]
pub struct Writer {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Writer {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.to_path_buf(), source })?;
        Ok(Writer { dir: dir.to_path_buf(), files: vec![] })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|source| CliError::Write { path, source })?;
        self.files.push((name.into(), hex::encode(Sha256::digest(bytes))));
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let text = to_json(value)?;
        self.write(name, text.as_bytes())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(vec![]);
        let fail = |e: csv::Error| CliError::Config(format!("csv {name}: {e}"));
        w.write_record(header).map_err(fail)?;
        for r in rows {
            w.write_record(r).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Config(format!("csv {name}: {e}")))?;
        self.write(name, &bytes)
    }

    pub fn files(&self) -> &[(String, String)] {
        &self.files
    }
}

#[derive(Debug, Serialize)]
pub struct TaskStatus {
    pub name: String,
    pub status: &'static str,
    pub reports: usize,
    pub failed: usize,
}

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub duplex: &'static str,
    pub cli: &'static str,
    pub schema: u32,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: &'static str,
    pub config_hash: String,
    pub units: &'static str,
    pub versions: Versions,
    pub tasks: Vec<TaskStatus>,
    pub wall_time_s: f64,
    pub finished_unix_s: u64,
    pub files: Vec<FileEntry>,
}

/// Writes `manifest.json` last; it is the only file with timing data.
pub fn finish(
    mut w: Writer,
    command: &'static str,
    loaded: &crate::config::Loaded,
    tasks: Vec<TaskStatus>,
    started: std::time::Instant,
) -> Result<(), CliError> {
    let finished_unix_s = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = Manifest {
        command,
        config_hash: loaded.hash.clone(),
        units: loaded.config.units.label(),
        versions: Versions {
            duplex: duplex::VERSION,
            cli: env!("CARGO_PKG_VERSION"),
            schema: crate::config::SCHEMA_VERSION,
        },
        tasks,
        wall_time_s: started.elapsed().as_secs_f64(),
        finished_unix_s,
        files: w.files().iter().map(|(p, h)| FileEntry { path: p.clone(), sha256: h.clone() }).collect(),
    };
    w.json("manifest.json", &manifest)
}
