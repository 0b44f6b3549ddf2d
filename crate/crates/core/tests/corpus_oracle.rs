//! Every corpus function with integer parameters is swept through the
//! interpreter and its traces are checked against the static facts.

use std::path::PathBuf;

use minicheck::flow::analyze;
use minicheck::frontend::preprocess::PreprocessOptions;
use minicheck::oracle::{sweep, RunError, DEFAULT_GRID};
use minicheck::sema::{compile, LibcProfile};

#[test]
fn corpus_traces_agree_with_static_facts() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "c"))
        .collect();
    files.sort();
    let mut swept = 0;
    for path in &files {
        let src = std::fs::read_to_string(path).unwrap();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let unit = compile(&src, &name, Some(path), &PreprocessOptions::default(), &LibcProfile::default())
            .unwrap_or_else(|e| panic!("{name}: {}", e.message()));
        let flow = analyze(&unit).unwrap();
        let names: Vec<String> = unit.ast.functions().map(|f| f.name().to_string()).collect();
        for entry in names {
            let facts = match sweep(&unit, &entry, DEFAULT_GRID, 10_000) {
                Ok(f) => f,
                Err(RunError::NonIntegerParam { .. } | RunError::TooManyParams { .. }) => continue,
                Err(e) => panic!("{name}/{entry}: {e}"),
            };
            swept += 1;
            for f in flow.functions.values() {
                for s in &facts.ever_executed {
                    assert!(!f.reach.unreachable.contains(s), "{name}/{entry}: executed unreachable {s}");
                }
                for (s, sym) in &facts.witnessed_live_stores {
                    assert!(!f.liveness.dead_stores.contains(&(*s, *sym)), "{name}/{entry}: live store {s} reported dead");
                }
            }
        }
    }
    assert!(swept >= 10, "only {swept} functions swept");
}
