//! Output directory with a digest manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    pub files: Vec<FileEntry>,
}

/// Collects an experiment's output files. Every write is digested; the
/// manifest is written last by [`ResultBundle::finish`].
#[derive(Debug)]
pub struct ResultBundle {
    dir: PathBuf,
    manifest: Manifest,
}

impl ResultBundle {
    pub fn create(dir: &Path, config: &ExperimentConfig) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
        let canonical = serde_json::to_vec(config).expect("config serializes");
        let mut seeds = config.seeds.clone();
        seeds.sort_unstable();
        Ok(ResultBundle {
            dir: dir.to_path_buf(),
            manifest: Manifest {
                experiment: config.experiment.name().to_string(),
                config_sha256: sha256_hex(&canonical),
                seeds,
                files: Vec::new(),
            },
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
        self.manifest.files.retain(|f| f.path != name);
        self.manifest.files.push(FileEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("output serializes");
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Writes a CSV with `header`, one row per item of `rows`.
    pub fn write_csv<I, R>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let mut out = header.join(",");
        out.push('\n');
        for row in rows {
            out.push_str(&row.into_iter().collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        self.write(name, out.as_bytes())
    }

    pub fn finish(mut self) -> Result<Manifest> {
        self.manifest.files.sort_by(|a, b| a.path.cmp(&b.path));
        let m = self.manifest.clone();
        let mut bytes = serde_json::to_vec_pretty(&m).expect("manifest serializes");
        bytes.push(b'\n');
        let path = self.dir.join(MANIFEST);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
        Ok(m)
    }
}
