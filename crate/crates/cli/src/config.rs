//! Parameter resolution and provenance stamps.
//!
//! Parameters come from serde defaults, then the `--config` JSON object,
//! then command-line flags. The config hash is the SHA-256 of the resolved
//! parameters serialized with sorted keys, so equal runs hash equally
//! however their parameters were supplied.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::GlobalArgs;

pub const TOOL: &str = "paralab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_hash: String,
}

impl Provenance {
    pub fn csv_comment(&self) -> String {
        format!("# {} {} command={} config_hash={}\n", self.tool, self.version, self.command, self.config_hash)
    }
}

/// Drop unset flags: nulls, `false` switches and empty lists.
fn prune(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m
            .into_iter()
            .filter(|(_, v)| !matches!(v, Value::Null | Value::Bool(false)) && !matches!(v, Value::Array(a) if a.is_empty()))
            .collect(),
        _ => Map::new(),
    }
}

pub fn resolve<P: DeserializeOwned + Serialize>(
    command: &str,
    g: &GlobalArgs,
    flags: &impl Serialize,
) -> Result<(P, Provenance)> {
    let mut merged = match &g.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            match serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))? {
                Value::Object(m) => m,
                _ => bail!("config {} must hold a JSON object", path.display()),
            }
        }
        None => Map::new(),
    };
    merged.extend(prune(serde_json::to_value(flags)?));
    if let Some(seed) = g.seed {
        merged.insert("seed".into(), json!(seed));
    }
    let params: P = serde_json::from_value(Value::Object(merged)).context("invalid parameters")?;
    let prov = stamp(command, &params)?;
    Ok((params, prov))
}

fn stamp(command: &str, params: &impl Serialize) -> Result<Provenance> {
    let canonical = serde_json::to_string(&json!({ "command": command, "params": params }))?;
    let config_hash = hex::encode(Sha256::digest(canonical.as_bytes()));
    Ok(Provenance { tool: TOOL, version: VERSION, command: command.into(), config_hash })
}

/// Recompute the stamp after parameters were rewritten.
pub fn rehash(prov: &Provenance, params: &impl Serialize) -> Result<Provenance> {
    stamp(&prov.command, params)
}

pub fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

/// Pretty JSON with the provenance stamp and resolved parameters in front
/// of the body's fields.
pub fn write_json(out: &mut dyn Write, prov: &Provenance, params: &impl Serialize, body: Value) -> Result<()> {
    let mut doc = match serde_json::to_value(prov)? {
        Value::Object(m) => m,
        _ => unreachable!("provenance serializes to an object"),
    };
    doc.insert("params".into(), serde_json::to_value(params)?);
    match body {
        Value::Object(m) => doc.extend(m),
        other => {
            doc.insert("result".into(), other);
        }
    }
    serde_json::to_writer_pretty(&mut *out, &Value::Object(doc))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}
