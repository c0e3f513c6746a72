//! One line per acceptance criterion. Criteria 1, 5 and 14 are known gaps
//! and are reported without failing the run.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use layerkit::criteria::{self, Outcome};

const KNOWN_GAPS: [u32; 3] = [1, 5, 14];

fn read_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in fs::read_dir(dir).expect("readable output dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                walk(&path, root, out);
            } else {
                let rel = path.strip_prefix(root).expect("inside root").to_string_lossy().replace('\\', "/");
                out.insert(rel, fs::read(&path).expect("readable file"));
            }
        }
    }
    let mut files = BTreeMap::new();
    walk(root, root, &mut files);
    files.into_iter().collect()
}

fn run_twice(command: &str) -> (Vec<(String, Vec<u8>)>, Vec<(String, Vec<u8>)>) {
    let tmp = tempfile::tempdir().expect("temp dir");
    let mut trees = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_layerkit"))
            .args([command, "--seed", "42", "--out"])
            .arg(&out)
            .status()
            .expect("binary runs");
        assert!(status.success(), "{command} exited with {status}");
        trees.push(read_tree(&out));
    }
    let b = trees.pop().expect("second run");
    (trees.pop().expect("first run"), b)
}

fn determinism() -> Outcome {
    let mut first = Vec::new();
    let mut second = Vec::new();
    for command in ["blasius", "degree", "solve-u0", "residual-sweep"] {
        let (a, b) = run_twice(command);
        first.extend(a.into_iter().map(|(n, v)| (format!("{command}/{n}"), v)));
        second.extend(b.into_iter().map(|(n, v)| (format!("{command}/{n}"), v)));
    }
    criteria::determinism(&first, &second)
}

fn main() {
    let mut outcomes = Vec::new();
    for (id, check) in criteria::numeric_checks() {
        match check(1.0) {
            Ok(o) => outcomes.push(o),
            Err(e) => panic!("criterion {id} could not be evaluated: {e:#}"),
        }
        println!("{}", outcomes.last().expect("just pushed").line());
    }
    outcomes.push(determinism());
    println!("{}", outcomes.last().expect("just pushed").line());

    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("{passed}/{} criteria pass", outcomes.len());
    let unexpected: Vec<u32> = outcomes.iter().filter(|o| !o.pass && !KNOWN_GAPS.contains(&o.id)).map(|o| o.id).collect();
    if !unexpected.is_empty() {
        eprintln!("criteria failing outside the known gaps: {unexpected:?}");
        std::process::exit(1);
    }
}
