use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// 17 significant digits, round-trippable.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the canonical JSON form of a resolved config.
pub fn config_hash<T: Serialize>(config: &T) -> anyhow::Result<String> {
    Ok(sha256_hex(&serde_json::to_vec(config)?))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<String> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(sha256_hex(bytes))
}

/// RFC 4180 CSV with LF line endings.
pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(w.into_inner().map_err(|e| anyhow::anyhow!("flushing csv: {e}"))?)
}

#[derive(Debug, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: &'static str,
    pub seed: u64,
    pub config_sha256: String,
    pub generator_version: u32,
    pub crate_version: &'static str,
    pub outputs: Vec<OutputFile>,
}

impl Manifest {
    pub fn new(command: &'static str, seed: u64, config_sha256: String) -> Self {
        Self {
            command,
            seed,
            config_sha256,
            generator_version: deferral::synth::GENERATOR_VERSION,
            crate_version: env!("CARGO_PKG_VERSION"),
            outputs: Vec::new(),
        }
    }

    /// Writes `bytes` under `out` and records the file's hash.
    pub fn emit(&mut self, out: &Path, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
        let sha256 = write_file(&out.join(name), bytes)?;
        self.outputs.push(OutputFile { path: name.to_string(), sha256 });
        Ok(())
    }

    pub fn finish(self, out: &Path) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(&self)?;
        text.push('\n');
        write_file(&out.join("manifest.json"), text.as_bytes())?;
        Ok(())
    }
}
