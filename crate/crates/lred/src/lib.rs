//! Problem files, command execution, reports and golden comparison for `lred-core`.

pub mod golden;
pub mod report;
pub mod run;
pub mod spec;

use std::path::PathBuf;

/// Root of the fixture corpus: `LRED_CORPUS` if set, else the workspace `fixtures/`.
pub fn corpus_root() -> PathBuf {
    match std::env::var_os("LRED_CORPUS") {
        Some(p) => PathBuf::from(p),
        None => PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"),
    }
}

/// Every `*.lred.json` under the corpus root, sorted.
pub fn corpus_files() -> std::io::Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(corpus_root())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(".lred.json"))
        .collect();
    v.sort();
    Ok(v)
}
