//! Every `--emit` stage of every corpus file against `corpus/golden`.
//! Run with `SPADELITE_BLESS=1` to rewrite the expected files.

mod common;

use std::path::Path;

use common::*;
use spadelite::backend_verilog::{check_subset, emit_source_map};
use spadelite::driver::{compile, emit, Stage};

fn extension(stage: Stage) -> &'static str {
    match stage {
        Stage::Verilog => "sv",
        other => other.name(),
    }
}

fn compare(path: &Path, actual: &str, mismatches: &mut Vec<String>) {
    if std::env::var_os("SPADELITE_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, actual).unwrap();
        return;
    }
    match std::fs::read_to_string(path) {
        Ok(expected) if expected == actual => {}
        Ok(_) => mismatches.push(format!("{} differs", path.display())),
        Err(e) => mismatches.push(format!("{}: {e}", path.display())),
    }
}

#[test]
fn corpus_matches_goldens() {
    let dir = corpus_dir().join("golden");
    let mut mismatches = vec![];
    for (name, content) in corpus_files() {
        let stem = name.trim_end_matches(".spade");
        let files = sources(&[(name.clone(), content)]);
        for stage in Stage::ALL {
            let (text, _) = emit(&files, stage).unwrap_or_else(|f| panic!("{name}: {:?}", f.errors));
            compare(&dir.join(format!("{stem}.{}", extension(stage))), &text, &mut mismatches);
        }
        let c = compile(&files).unwrap();
        compare(&dir.join(format!("{stem}.map.jsonl")), &emit_source_map(&c.mir, Some(&files)), &mut mismatches);
    }
    assert!(mismatches.is_empty(), "{}", mismatches.join("\n"));
}

#[test]
fn golden_verilog_is_in_subset() {
    let dir = corpus_dir().join("golden");
    for (name, _) in corpus_files() {
        let p = dir.join(name.replace(".spade", ".sv"));
        let text = std::fs::read_to_string(&p).unwrap();
        check_subset(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
}
