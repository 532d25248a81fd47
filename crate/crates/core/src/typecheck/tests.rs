use super::*;
use crate::diagnostics::FileId;
use crate::frontend::parse_file;

fn run(src: &str) -> Result<(HirProgram, TypedProgram), Vec<Diagnostic>> {
    let p = parse_file(src, FileId(0)).unwrap_or_else(|e| panic!("{e:?}"));
    let hir = resolve(&[SourceUnit {
        namespace: "main".into(),
        program: &p,
    }])
    .unwrap_or_else(|e| panic!("{e:?}"));
    let t = check_program(&hir)?;
    Ok((hir, t))
}

fn codes(src: &str) -> Vec<ErrorCode> {
    match run(src) {
        Ok(_) => vec![],
        Err(es) => es.iter().map(|d| d.code).collect(),
    }
}

fn local_type(src: &str, unit: &str, name: &str) -> String {
    let (hir, t) = run(src).unwrap_or_else(|e| panic!("{e:?}"));
    let id = hir.items.find_unit(unit).unwrap();
    let u = &hir.bodies[&id];
    let i = u.locals.iter().position(|l| l.name == name).unwrap();
    type_name(&hir.items, &t.units[&id].local_types[i])
}

const OPTION: &str = "enum Option<T> { None, Some{ val: T } }\n";

#[test]
fn product_width() {
    let src = "fn f(a: int<32>, b: int<32>) -> int<64> { let p = a * b; p }";
    assert_eq!(local_type(src, "f", "p"), "int<64>");
}

#[test]
fn increment_width() {
    let src = "entity e(clk: clock, c: int<20>) -> int<21> { let n = c + 1; n }";
    assert_eq!(local_type(src, "e", "n"), "int<21>");
}

#[test]
fn blink_checks() {
    let src = "entity blink(clk: clock, rst: bool, max: int<20>) -> bool {
        reg(clk) counter: int<20> reset(rst: 0) =
            if counter == max { 0 } else { trunc(counter + 1) };
        counter == max
    }";
    assert_eq!(local_type(src, "blink", "counter"), "int<20>");
}

#[test]
fn if_branch_mismatch() {
    let src = "fn f(c: bool) -> int<8> { if c { 1 } else { true } }";
    assert!(codes(src).contains(&ErrorCode::TypeMismatch));
}

#[test]
fn non_bool_condition() {
    let src = "fn f(c: int<2>) -> int<8> { if c { 1 } else { 2 } }";
    assert_eq!(codes(src), vec![ErrorCode::NonBoolCondition]);
}

#[test]
fn trunc_narrows() {
    let src = "fn f(x: int<21>) -> int<20> { trunc(x) }";
    assert!(codes(src).is_empty());
}

#[test]
fn trunc_to_wider() {
    let src = "fn f(x: int<8>) -> int<16> { trunc(x) }";
    assert_eq!(codes(src), vec![ErrorCode::TruncToWider]);
}

#[test]
fn trunc_without_context() {
    let src = "fn f(x: int<8>) -> bool { let y = trunc(x); true }";
    assert_eq!(codes(src), vec![ErrorCode::AmbiguousType]);
}

#[test]
fn implicit_widening_is_rejected() {
    let src = "fn f(x: int<8>) -> int<9> { x }";
    assert_eq!(codes(src), vec![ErrorCode::TypeMismatch]);
}

#[test]
fn literal_too_wide() {
    let src = "fn f() -> int<4> { 8 }";
    assert_eq!(codes(src), vec![ErrorCode::TypeMismatch]);
}

#[test]
fn missing_none_arm() {
    let src = format!(
        "{OPTION}fn f(a: Option<int<8>>) -> int<8> {{ match a {{ Some(v) => v }} }}"
    );
    let (errs, msg) = match run(&src) {
        Err(es) => (es.iter().map(|d| d.code).collect::<Vec<_>>(), es[0].message.clone()),
        Ok(_) => panic!("expected error"),
    };
    assert_eq!(errs, vec![ErrorCode::NonExhaustiveMatch]);
    assert!(msg.contains("`None`"), "{msg}");
}

#[test]
fn bool_match_is_exhaustive() {
    let src = "fn f(a: bool) -> int<8> { match a { true => 1, false => 2 } }";
    assert!(codes(src).is_empty());
}

#[test]
fn option_tuple_match_is_exhaustive() {
    let src = format!(
        "{OPTION}fn f(a: Option<int<8>>, b: Option<int<8>>) -> int<8> {{
            let result = match (a, b) {{
                (Some(val), _) => val,
                (_, Some(val)) => val,
                _ => 0
            }};
            result
        }}"
    );
    assert!(codes(&src).is_empty());
}

#[test]
fn unreachable_arm_warns() {
    let src = "fn f(a: bool) -> int<8> { match a { _ => 1, true => 2 } }";
    let (_, t) = run(src).unwrap();
    let w: Vec<ErrorCode> = t.warnings().map(|d| d.code).collect();
    assert_eq!(w, vec![ErrorCode::UnreachableArm]);
}

#[test]
fn refutable_let() {
    let src = format!("{OPTION}fn f(a: Option<int<8>>) -> int<8> {{ let Some(v) = a; v }}");
    assert_eq!(codes(&src), vec![ErrorCode::NonExhaustiveMatch]);
}

#[test]
fn int_match_needs_wildcard() {
    let src = "fn f(a: int<2>) -> bool { match a { 0 => true, 1 => false } }";
    assert_eq!(codes(src), vec![ErrorCode::NonExhaustiveMatch]);
}

#[test]
fn reg_in_fn() {
    let src = "fn f(clk: clock, a: int<8>) -> int<8> { reg(clk) r = a; r }";
    assert!(codes(src).contains(&ErrorCode::SequentialInFn));
}

#[test]
fn stage_reg_in_entity() {
    let src = "entity e(clk: clock, a: int<8>) -> int<8> { reg; a }";
    assert!(codes(src).contains(&ErrorCode::StageOutsidePipelineBody));
}

#[test]
fn pipeline_stage_regs_ok() {
    let src = "pipeline(4) p(clk: clock, a: int<8>) -> int<8> { reg * 3; reg; a }";
    assert!(codes(src).is_empty());
}

#[test]
fn generic_instances_are_independent() {
    let src = format!(
        "{OPTION}fn f(a: int<8>, b: bool) -> bool {{
            let x = Option::Some(a);
            let y = Option::Some(b);
            true
        }}"
    );
    assert_eq!(local_type(&src, "f", "x"), "Option<int<8>>");
    assert_eq!(local_type(&src, "f", "y"), "Option<bool>");
}

#[test]
fn port_and_set() {
    let src = "entity e(a: int<8>) -> &int<8> {
        let (w, r) = port;
        set w = a;
        r
    }";
    assert_eq!(local_type(src, "e", "w"), "&mut int<8>");
}

#[test]
fn wire_in_register() {
    let src = "entity e(clk: clock, a: &int<8>) -> bool { reg(clk) r = a; true }";
    assert_eq!(codes(src), vec![ErrorCode::UnregistrableType]);
}

#[test]
fn memory_types() {
    let src = "entity m(clk: clock, we: bool, addr: int<4>, v: int<8>) -> int<8> {
        let mem = inst clocked_memory(clk, [(we, addr, v)]);
        inst read_memory(mem, addr)
    }";
    assert_eq!(local_type(src, "m", "mem"), "Memory<int<8>, 16>");
}

#[test]
fn memory_address_mismatch() {
    let src = "entity m(clk: clock, we: bool, addr: int<4>, v: int<8>, ra: int<3>) -> int<8> {
        let mem = inst clocked_memory(clk, [(we, addr, v)]);
        inst read_memory(mem, ra)
    }";
    assert_eq!(codes(src), vec![ErrorCode::MemoryAddressWidth]);
}

#[test]
fn comparison_width_mismatch() {
    let src = "fn f(a: int<8>, b: int<9>) -> bool { a < b }";
    assert_eq!(codes(src), vec![ErrorCode::TypeMismatch]);
}

#[test]
fn typed_dump_is_stable() {
    let src = "fn f(a: int<3>) -> int<4> { let b = a + a; b }";
    let (hir, t) = run(src).unwrap();
    let d = dump_typed(&hir, &t);
    assert_eq!(d, "fn main::f -> int<4>\n    a#0: int<3>\n    b#1: int<4>\n");
}
