//! Output directory handling: staged writes and the content manifest.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub const SCRATCH: &str = ".scratch";
pub const MANIFEST: &str = "manifest.json";

/// A stage's output directory, built under the scratch area and moved into
/// place by [`StageDir::commit`]. Dropping it uncommitted removes the
/// partial files.
pub struct StageDir {
    scratch: PathBuf,
    target: PathBuf,
    committed: bool,
}

impl StageDir {
    pub fn create(out_dir: &Path, name: &str) -> Result<Self, CliError> {
        let scratch = out_dir.join(SCRATCH).join(name);
        if scratch.exists() {
            fs::remove_dir_all(&scratch).map_err(|e| CliError::io(&scratch, e))?;
        }
        fs::create_dir_all(&scratch).map_err(|e| CliError::io(&scratch, e))?;
        Ok(Self {
            scratch,
            target: out_dir.join(name),
            committed: false,
        })
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.scratch.join(file)
    }

    pub fn writer(&self, file: &str) -> Result<BufWriter<fs::File>, CliError> {
        let path = self.path(file);
        let f = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        Ok(BufWriter::new(f))
    }

    /// Writes a whole file at once.
    pub fn write(&self, file: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.path(file);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))
    }

    pub fn commit(mut self) -> Result<PathBuf, CliError> {
        if self.target.exists() {
            fs::remove_dir_all(&self.target).map_err(|e| CliError::io(&self.target, e))?;
        }
        fs::rename(&self.scratch, &self.target).map_err(|e| CliError::io(&self.target, e))?;
        self.committed = true;
        if let Some(parent) = self.scratch.parent() {
            // only succeeds once the scratch area is empty
            let _ = fs::remove_dir(parent);
        }
        Ok(self.target.clone())
    }
}

impl Drop for StageDir {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.scratch);
            if let Some(parent) = self.scratch.parent() {
                let _ = fs::remove_dir(parent);
            }
        }
    }
}

/// Flushes a buffered writer, reporting the file on failure.
pub fn finish<W: Write>(mut w: W, path: &Path) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn hash_of(&self, path: &str) -> Option<&str> {
        self.files.iter().find(|f| f.path == path).map(|f| f.sha256.as_str())
    }
}

pub fn sha256_file(path: &Path) -> Result<(String, u64), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}

/// Hashes every file under `out_dir` (except the scratch area and the
/// manifest itself) and writes `manifest.json` atomically.
pub fn write_manifest(out_dir: &Path, config: &RunConfig) -> Result<Manifest, CliError> {
    let mut files = Vec::new();
    collect(out_dir, out_dir, &mut files)?;
    files.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        files,
    };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Runtime(e.into()))?;
    text.push('\n');
    let tmp = out_dir.join(format!(".{MANIFEST}.tmp"));
    fs::write(&tmp, text).map_err(|e| CliError::io(&tmp, e))?;
    let dest = out_dir.join(MANIFEST);
    fs::rename(&tmp, &dest).map_err(|e| CliError::io(&dest, e))?;
    Ok(manifest)
}

fn collect(root: &Path, dir: &Path, out: &mut Vec<FileEntry>) -> Result<(), CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let path = entry.path();
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if name.starts_with('.') || (dir == root && name == MANIFEST) {
            continue;
        }
        if path.is_dir() {
            collect(root, &path, out)?;
        } else {
            let (sha256, bytes) = sha256_file(&path)?;
            let rel = path.strip_prefix(root).expect("under root");
            let rel: Vec<_> = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect();
            out.push(FileEntry {
                path: rel.join("/"),
                sha256,
                bytes,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncommitted_stage_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        {
            let stage = StageDir::create(dir.path(), "metrics").unwrap();
            stage.write("a.csv", b"x\n").unwrap();
        }
        assert!(!dir.path().join("metrics").exists());
        assert!(!dir.path().join(SCRATCH).exists());
    }

    #[test]
    fn commit_replaces_previous_output() {
        let dir = tempfile::tempdir().unwrap();
        for content in [&b"old"[..], b"new"] {
            let stage = StageDir::create(dir.path(), "did").unwrap();
            stage.write("e.csv", content).unwrap();
            stage.commit().unwrap();
        }
        assert_eq!(fs::read(dir.path().join("did/e.csv")).unwrap(), b"new");
        assert!(!dir.path().join(SCRATCH).exists());
    }

    #[test]
    fn hashes_are_hex_sha256() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f");
        fs::write(&p, b"abc").unwrap();
        let (h, n) = sha256_file(&p).unwrap();
        assert_eq!(h, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert_eq!(n, 3);
    }
}
