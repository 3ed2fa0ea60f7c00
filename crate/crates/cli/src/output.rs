//! Artifact writing with a content-hashed manifest.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    /// Entries of `other` with their paths placed under `prefix`.
    pub fn extend_prefixed(&mut self, prefix: &str, other: &Manifest) {
        self.files.extend(other.files.iter().map(|e| ManifestEntry {
            path: format!("{prefix}/{}", e.path),
            sha256: e.sha256.clone(),
        }));
    }
}

/// An output directory that records every file it writes.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    manifest: Manifest,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| CliError::io(&root, e))?;
        Ok(OutputDir {
            root,
            manifest: Manifest::default(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Renders a file in memory, then writes and hashes it.
    pub fn write(&mut self, name: &str, render: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Result<()> {
        let path = self.root.join(name);
        let mut bytes = Vec::new();
        render(&mut bytes).map_err(|e| CliError::io(&path, e))?;
        std::fs::write(&path, &bytes).map_err(|e| CliError::io(&path, e))?;
        self.manifest.files.push(ManifestEntry {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")
        })
    }

    /// Adds entries for files written by someone else under this directory.
    pub fn adopt(&mut self, prefix: &str, manifest: &Manifest) {
        self.manifest.extend_prefixed(prefix, manifest);
    }

    /// Writes `manifest.json` (which does not list itself) and returns the manifest.
    pub fn finish(mut self) -> Result<Manifest> {
        self.manifest.files.sort_by(|a, b| a.path.cmp(&b.path));
        let path = self.root.join(MANIFEST);
        let mut text = serde_json::to_vec_pretty(&self.manifest).expect("manifest serializes");
        text.push(b'\n');
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(self.manifest)
    }
}

/// File-name fragment for a time value, e.g. `2` or `0.5`.
pub fn time_tag(t: f64) -> String {
    format!("{t}")
}
