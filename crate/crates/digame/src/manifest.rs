//! Run manifests and atomic output writing.
//!
//! Every run that writes files stages them next to their destinations, moves
//! them into place together, then writes `<first output>.manifest.json`.
//! `wall_clock_seconds` is the only field that differs between repeated runs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_SUFFIX: &str = ".manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path, contents: &[u8]) -> Self {
        Self {
            path: path.to_path_buf(),
            bytes: contents.len() as u64,
            sha256: sha256_hex(contents),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub subcommand: String,
    /// Arguments after the subcommand, as given.
    pub args: Vec<String>,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }

    /// Manifest location for a run whose first output is `output`.
    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_os_string();
        name.push(MANIFEST_SUFFIX);
        PathBuf::from(name)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn digest_file(path: &Path) -> Result<FileDigest> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(FileDigest::of(path, &bytes))
}

/// Collects a run's outputs in memory and commits them with a manifest.
pub struct RunOutputs {
    started: Instant,
    subcommand: String,
    args: Vec<String>,
    config: Option<PathBuf>,
    seed: Option<u64>,
    inputs: Vec<FileDigest>,
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl RunOutputs {
    pub fn new(subcommand: &str, args: Vec<String>) -> Self {
        Self {
            started: Instant::now(),
            subcommand: subcommand.to_string(),
            args,
            config: None,
            seed: None,
            inputs: Vec::new(),
            files: Vec::new(),
        }
    }

    pub fn config(&mut self, path: &Path) -> Result<()> {
        self.config = Some(path.to_path_buf());
        self.input(path)
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(digest_file(path)?);
        Ok(())
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    pub fn add(&mut self, path: &Path, contents: Vec<u8>) -> Result<()> {
        if self.files.iter().any(|(p, _)| p == path) {
            bail!("output {} given twice", path.display());
        }
        self.files.push((path.to_path_buf(), contents));
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    /// Writes every output, then the manifest. Returns the manifest path, or
    /// `None` when there were no outputs.
    pub fn commit(self) -> Result<Option<PathBuf>> {
        let Some((first, _)) = self.files.first() else {
            return Ok(None);
        };
        let manifest_path = RunManifest::path_for(first);
        let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
        let result = (|| -> Result<()> {
            for (path, contents) in &self.files {
                staged.push((stage(path, contents)?, path.clone()));
            }
            for (tmp, path) in &staged {
                fs::rename(tmp, path).with_context(|| format!("moving output into {}", path.display()))?;
            }
            Ok(())
        })();
        if let Err(e) = result {
            for (tmp, _) in &staged {
                let _ = fs::remove_file(tmp);
            }
            return Err(e);
        }
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            subcommand: self.subcommand,
            args: self.args,
            config: self.config,
            seed: self.seed,
            inputs: self.inputs,
            outputs: self.files.iter().map(|(p, c)| FileDigest::of(p, c)).collect(),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        };
        let bytes = crate::formats::to_json(&manifest)?;
        let tmp = stage(&manifest_path, &bytes)?;
        fs::rename(&tmp, &manifest_path).with_context(|| format!("writing {}", manifest_path.display()))?;
        Ok(Some(manifest_path))
    }
}

fn stage(path: &Path, contents: &[u8]) -> Result<PathBuf> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .with_context(|| format!("output path {} has no file name", path.display()))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = dir.join(tmp_name);
    let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(contents)?;
    f.sync_all()?;
    Ok(tmp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commit_writes_outputs_then_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.json");
        let mut run = RunOutputs::new("simulate", vec!["--rounds".into(), "3".into()]);
        run.seed(7);
        run.add(&a, b"x\n".to_vec()).unwrap();
        run.add(&b, b"{}\n".to_vec()).unwrap();
        assert!(run.add(&a, Vec::new()).is_err());
        let manifest = run.commit().unwrap().unwrap();
        assert_eq!(manifest, dir.path().join("a.csv.manifest.json"));
        assert_eq!(fs::read(&a).unwrap(), b"x\n");
        let m = RunManifest::read(&manifest).unwrap();
        assert_eq!(m.seed, Some(7));
        assert_eq!(m.outputs.len(), 2);
        assert_eq!(m.outputs[1].sha256, sha256_hex(b"{}\n"));
        let leftovers = fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(leftovers, 3);
    }

    #[test]
    fn no_outputs_no_manifest() {
        assert_eq!(RunOutputs::new("payoff", vec![]).commit().unwrap(), None);
    }

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
