//! Every fixture against its golden file.

use lred::golden::compare_golden;
use lred::run::{run, Command};
use lred::{corpus_files, corpus_root, spec};
use serde_json::Value;

#[test]
fn corpus_matches_goldens() {
    let files = corpus_files().unwrap();
    assert!(files.len() >= 12, "corpus has {} fixtures", files.len());
    let mut failures = Vec::new();
    for f in files {
        let lp = spec::load(&f).unwrap_or_else(|e| panic!("{}: {e}", f.display()));
        let out = run(Command::All, &lp, &[]);
        let golden_path = corpus_root().join("golden").join(format!("{}.json", lp.problem.name));
        let golden: Value = serde_json::from_str(&std::fs::read_to_string(&golden_path).unwrap()).unwrap();
        let d = compare_golden(&out.report, &golden);
        if !d.passed {
            failures.push(format!("{}: {:?}", lp.problem.name, d.diffs));
        }
        if out.report.get("error").is_some() {
            failures.push(format!("{}: error {}", lp.problem.name, out.report["error"]));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}
