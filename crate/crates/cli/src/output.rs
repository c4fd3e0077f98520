use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct OutputChecksum {
    pub file: String,
    pub sha256: String,
}

/// Describes one run: rerunning with the same manifest reproduces the same
/// checksums.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub parameters: serde_json::Value,
    pub outputs: Vec<OutputChecksum>,
}

impl RunManifest {
    pub fn new(command: &str, seed: Option<u64>, parameters: &impl Serialize) -> Result<Self> {
        Ok(RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            parameters: serde_json::to_value(parameters)?,
            outputs: Vec::new(),
        })
    }
}

/// Files produced by a command, held in memory until every one of them is
/// ready.
pub struct Artifacts {
    manifest: RunManifest,
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn new(manifest: RunManifest) -> Self {
        Artifacts {
            manifest,
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.manifest.outputs.push(OutputChecksum {
            file: name.to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        self.files.push((name.to_string(), bytes));
    }

    pub fn add_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let bytes = csv_bytes(rows)?;
        self.add(name, bytes);
        Ok(())
    }

    /// JSON summary with the manifest (checksums of the files added so far)
    /// embedded under `"manifest"`.
    pub fn add_json(&mut self, name: &str, body: &impl Serialize) -> Result<()> {
        let mut value = serde_json::to_value(body)?;
        if let serde_json::Value::Object(map) = &mut value {
            map.insert("manifest".into(), serde_json::to_value(&self.manifest)?);
        }
        let mut bytes = serde_json::to_vec_pretty(&value)?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    /// Writes every file plus `manifest.json` into `dir`. Each file is
    /// written to a temporary sibling and renamed into place, so a failed
    /// run leaves no partial file behind.
    pub fn write_to(self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut manifest = serde_json::to_vec_pretty(&self.manifest)?;
        manifest.push(b'\n');
        let mut staged = Vec::new();
        for (name, bytes) in self
            .files
            .iter()
            .map(|(n, b)| (n.as_str(), b))
            .chain([(MANIFEST_FILE, &manifest)])
        {
            let mut tmp = NamedTempFile::new_in(dir).with_context(|| format!("staging {name}"))?;
            tmp.write_all(bytes)?;
            tmp.flush()?;
            staged.push((tmp, dir.join(name)));
        }
        let mut written = Vec::new();
        for (tmp, path) in staged {
            tmp.persist(&path)
                .with_context(|| format!("writing {}", path.display()))?;
            written.push(path);
        }
        Ok(written)
    }

    /// Contents of a file added earlier.
    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b.as_slice())
    }
}

pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("{}", e.error()))
}
