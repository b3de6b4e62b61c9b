#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use poolscope_cli::{Overrides, RunConfig};

pub fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn fixture_config() -> PathBuf {
    root().join("fixtures/synthetic/poolscope.toml")
}

/// The committed fixture configuration, writing to `out`.
pub fn config(out: &Path, workers: usize) -> RunConfig {
    let mut cfg = RunConfig::load(&fixture_config()).unwrap();
    cfg.apply(&Overrides {
        out: Some(out.to_path_buf()),
        workers: Some(workers),
        ..Overrides::default()
    })
    .unwrap();
    cfg
}

/// Copies the fixture data (without any outputs) into `dest`.
pub fn copy_fixture(dest: &Path) {
    copy_dir(&root().join("fixtures/synthetic"), dest);
}

fn copy_dir(src: &Path, dest: &Path) {
    fs::create_dir_all(dest).unwrap();
    for entry in fs::read_dir(src).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name();
        if name == "out" || name == "stress" {
            continue;
        }
        let path = entry.path();
        if path.is_dir() {
            copy_dir(&path, &dest.join(&name));
        } else {
            fs::copy(&path, dest.join(&name)).unwrap();
        }
    }
}

/// Every file under `dir`, relative and sorted.
pub fn files(dir: &Path) -> Vec<String> {
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}

fn walk(root: &Path, dir: &Path, out: &mut Vec<String>) {
    let Ok(entries) = fs::read_dir(dir) else { return };
    for entry in entries {
        let path = entry.unwrap().path();
        if path.is_dir() {
            walk(root, &path, out);
        } else {
            out.push(path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/"));
        }
    }
}
