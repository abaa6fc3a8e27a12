//! Artifact emission: CSV tables, text reports, SVG plots and a manifest of
//! content hashes.

use cuspflow_core::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

/// `{:.16e}` gives 17 significant digits.
pub fn number(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    mode: &'a str,
    artifacts: &'a [ManifestEntry],
}

pub struct Artifacts {
    dir: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Artifacts> {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Artifacts { dir: dir.to_path_buf(), entries: Vec::new() })
    }

    pub fn write(&mut self, name: &str, content: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, content).map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))?;
        self.entries.push(ManifestEntry {
            path: name.to_string(),
            bytes: content.len(),
            sha256: format!("{:x}", Sha256::digest(content)),
        });
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let mut s = header.join(",");
        s.push('\n');
        for r in rows {
            debug_assert_eq!(r.len(), header.len());
            s.push_str(&r.iter().map(|&v| number(v)).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        self.write(name, s.as_bytes())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Write `manifest.json` listing every artifact in name order.
    pub fn finish(mut self, mode: &str) -> Result<Vec<ManifestEntry>> {
        self.entries.sort_by(|a, b| a.path.cmp(&b.path));
        let mut text = serde_json::to_string_pretty(&Manifest { mode, artifacts: &self.entries })
            .map_err(|e| Error::Io(e.to_string()))?;
        text.push('\n');
        fs::write(self.dir.join("manifest.json"), text)?;
        Ok(self.entries)
    }
}
