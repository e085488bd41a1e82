#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const STAGES: [&str; 6] = ["ingest", "preprocess", "select-k", "fit", "sentiment", "report"];

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixture")
}

pub fn fixture_config() -> PathBuf {
    fixture_dir().join("pipeline.conf")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn tsdyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsdyn"))
        .args(args)
        .output()
        .expect("spawn tsdyn")
}

pub fn tsdyn_in(out: &Path, command: &str, extra: &[&str]) -> Output {
    let cfg = fixture_config();
    let mut args = vec![
        command,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    tsdyn(&args)
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Runs every stage on the fixture, panicking on a nonzero exit.
pub fn run_pipeline(out: &Path) {
    for stage in STAGES {
        let o = tsdyn_in(out, stage, &[]);
        assert!(o.status.success(), "{stage} failed: {}", stderr(&o));
    }
}

/// Every file under `root`, keyed by `/`-separated relative path.
pub fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, acc: &mut BTreeMap<String, Vec<u8>>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for path in entries {
            if path.is_dir() {
                walk(root, &path, acc);
            } else {
                let rel = path.strip_prefix(root).unwrap();
                let key = rel
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy())
                    .collect::<Vec<_>>()
                    .join("/");
                acc.insert(key, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut acc = BTreeMap::new();
    if root.exists() {
        walk(root, root, &mut acc);
    }
    acc
}
