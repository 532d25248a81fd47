use std::collections::BTreeSet;

use super::*;
use crate::driver::{compile, single_file, Compilation};

fn build(src: &str) -> Compilation {
    compile(&single_file(src)).unwrap_or_else(|f| panic!("{:?}", f.errors))
}

fn verilog(src: &str) -> String {
    emit_program(&build(src).mir)
}

const BLINK: &str = "entity blink(clk: clock, rst: bool, max: int<20>) -> bool {
    reg(clk) counter: int<20> reset(rst: 0) = if counter == max { 0 } else { trunc(counter + 1) };
    counter == max
}";

const OPTION: &str = "enum Option<T> { None, Some{ val: T } }\n";

/// Names declared by `logic` lines and ports.
fn declared(text: &str) -> BTreeSet<String> {
    text.lines()
        .filter_map(|l| {
            let l = l.trim().trim_end_matches([';', ',']);
            let l = l.strip_prefix("input ").or(l.strip_prefix("output ")).unwrap_or(l);
            let rest = l.strip_prefix("logic ")?;
            let after_range = rest.split_once("] ").map(|(_, n)| n).unwrap_or(rest);
            Some(after_range.split_whitespace().next()?.to_string())
        })
        .collect()
}

#[test]
fn register_with_reset() {
    let v = verilog(BLINK);
    assert!(v.contains("always_ff @(posedge clk, posedge rst) begin"));
    assert!(v.contains("if (rst) counter <= _t0;"));
    assert!(v.contains("assign _t0 = 20'b00000000000000000000;"));
}

#[test]
fn no_mangle_keeps_name() {
    let v = verilog("#[no_mangle] entity top(a: bool) -> bool { a }");
    assert!(v.starts_with("module top (\n"));
}

#[test]
fn mangled_name_joins_path() {
    let v = verilog("fn helper(a: bool) -> bool { a }");
    assert!(v.starts_with("module main_helper (\n"));
}

#[test]
fn undefined_payload_bits_are_x() {
    let v = verilog(&format!("{OPTION}fn none() -> Option<bool> {{ Option::None }}"));
    assert!(v.contains("1'bx;"), "{v}");
}

#[test]
fn external_units_have_no_module() {
    let v = verilog("#[external] fn ext(a: bool) -> bool;\nfn f(a: bool) -> bool { ext(a) }");
    assert!(!v.contains("module ext"));
    assert!(v.contains("ext ext_i (.a(a), .output__("));
}

#[test]
fn memory_array_and_write_block() {
    let v = verilog(
        "entity m(clk: clock, we: bool, addr: int<4>, v: int<8>) -> int<8> {
            let mem = inst clocked_memory(clk, [(we, addr, v)]);
            inst read_memory(mem, addr)
        }",
    );
    assert!(v.contains("logic [7:0] mem [0:15];"));
    assert!(v.contains("if (we) mem[addr] <= v;"));
    assert!(v.contains("= mem[addr];"));
}

#[test]
fn emitted_text_is_in_subset() {
    for src in [
        BLINK.to_string(),
        format!("{OPTION}fn f(a: Option<int<8>>, b: Option<int<8>>) -> int<8> {{ match (a, b) {{ (Option::Some(v), _) => v, (_, Option::Some(v)) => v, _ => 0 }} }}"),
        "fn g(a: int<8>, b: int<8>) -> bool { (a < b) | (a >> 2 == b << 1) }".to_string(),
        "fn h(xs: [int<4>; 3], i: int<2>) -> int<5> { xs[i] - xs[0] }".to_string(),
    ] {
        let v = verilog(&src);
        check_subset(&v).unwrap_or_else(|e| panic!("{e}\n{v}"));
    }
}

#[test]
fn checker_rejects_undeclared_signal() {
    let e = check_subset("module m (\n    input logic [0:0] a\n);\n    assign b = a;\nendmodule\n").unwrap_err();
    assert_eq!(e.line, 4);
    assert!(e.message.contains("`b` is not declared"));
}

#[test]
fn checker_rejects_other_constructs() {
    assert!(check_subset("module m ();\n    initial begin end\nendmodule\n").is_err());
    assert!(check_subset("module m ();\n    logic [0:0] a;\n").is_err());
    assert!(check_subset("module m ();\n    logic [0:0] a;\n    assign a = 2'b1;\nendmodule\n").is_err());
    assert!(check_subset("module m (input logic [0:0] wire);\nendmodule\n").is_err());
    assert!(check_subset("module m (input logic [0:0] a, input logic [0:0] a);\nendmodule\n").is_err());
}

#[test]
fn source_map_covers_every_declared_signal() {
    let c = build(BLINK);
    let v = emit_program(&c.mir);
    let map = source_map(&c.mir, None);
    let mapped: BTreeSet<String> = map.iter().map(|e| e.signal.clone()).collect();
    for name in declared(&v) {
        assert!(mapped.contains(&name), "{name} missing from the source map");
    }
}

#[test]
fn one_entry_per_signal() {
    let c = build("fn f(a: bool, b: bool) -> bool { a }");
    let u = &c.mir.units[0];
    assert_eq!(u.signals.len(), 3);
    assert_eq!(source_map(&c.mir, None).len(), 3);
}

#[test]
fn temporaries_are_synthetic_with_span() {
    let files = single_file(BLINK);
    let c = compile(&files).unwrap();
    let map = source_map(&c.mir, Some(&files));
    let t = map.iter().find(|e| e.signal.starts_with("_t")).unwrap();
    assert!(t.synthetic);
    assert!(t.start.is_some() && t.line.is_some());
    let counter = map.iter().find(|e| e.signal == "counter").unwrap();
    assert!(!counter.synthetic);
    assert_eq!(counter.source.as_deref(), Some("counter"));
    assert_eq!(counter.file.as_deref(), Some("main.spade"));
    assert_eq!(counter.line, Some(2));
}

#[test]
fn enum_entry_carries_variants() {
    let c = build(&format!("{OPTION}fn f(a: Option<int<8>>) -> Option<int<8>> {{ a }}"));
    let map = source_map(&c.mir, None);
    let a = map.iter().find(|e| e.signal == "a").unwrap();
    let TypeDesc::Enum { variants, .. } = &a.ty else {
        panic!("{:?}", a.ty)
    };
    let names: Vec<&str> = variants.iter().map(|v| v.name.as_str()).collect();
    assert_eq!(names, vec!["None", "Some"]);
}

#[test]
fn source_map_round_trips() {
    let c = build(BLINK);
    let text = emit_source_map(&c.mir, None);
    assert_eq!(parse_source_map(&text).unwrap(), source_map(&c.mir, None));
}

#[test]
fn emission_is_deterministic() {
    assert_eq!(verilog(BLINK), verilog(BLINK));
}
