use super::eval::Evaluator;
use super::*;
use crate::diagnostics::ErrorCode;
use crate::driver::{compile, single_file, Compilation};

fn build(src: &str) -> Compilation {
    compile(&single_file(src)).unwrap_or_else(|f| panic!("{:?}", f.errors))
}

fn int(v: i128, w: usize) -> Bits {
    Bits::from_i128(v, w)
}

const BLINK: &str = "entity blink(clk: clock, rst: bool, max: int<20>) -> bool {
    reg(clk) counter: int<20> reset(rst: 0) = if counter == max { 0 } else { trunc(counter + 1) };
    counter == max
}";

/// Counter values by hand: reset holds 0, then count up to `max` and wrap.
fn blink_oracle(max: i128, cycles: usize) -> Vec<i128> {
    let mut out = vec![0];
    let mut c = 0;
    for cycle in 1..cycles {
        if cycle > 1 {
            c = if c == max { 0 } else { c + 1 };
        }
        out.push(c);
    }
    out
}

fn blink_schedule(max: i128) -> Schedule {
    vec![
        (0, "rst".into(), Bits::from_bool(true)),
        (0, "max".into(), int(max, 20)),
        (1, "rst".into(), Bits::from_bool(false)),
    ]
}

#[test]
fn blink_counts_after_reset() {
    let c = build(BLINK);
    let d = Design::elaborate(&c.mir, "blink").unwrap();
    let t = run(&d, &blink_schedule(2), 6).unwrap();
    let counter: Vec<i128> = t.ints("counter").unwrap().into_iter().map(Option::unwrap).collect();
    assert_eq!(&counter[..6], &[0, 0, 1, 2, 0, 1]);
    assert_eq!(counter, blink_oracle(2, 7));
}

#[test]
fn reset_overrides_next_value() {
    let c = build("entity e(clk: clock, rst: bool, a: int<4>) -> int<4> { reg(clk) r: int<4> reset(rst: 3) = a; r }");
    let d = Design::elaborate(&c.mir, "e").unwrap();
    let s = vec![(0, "rst".into(), Bits::from_bool(true)), (0, "a".into(), int(7, 4))];
    let t = run(&d, &s, 4).unwrap();
    assert!(t.ints("r").unwrap().iter().all(|v| *v == Some(3)));
}

#[test]
fn registers_start_undefined() {
    let c = build("entity e(clk: clock, a: int<4>) -> int<4> { reg(clk) r: int<4> = a; r }");
    let d = Design::elaborate(&c.mir, "e").unwrap();
    let t = run(&d, &vec![(0, "a".into(), int(5, 4))], 1).unwrap();
    assert_eq!(t.ints("r").unwrap(), vec![None, Some(5)]);
}

#[test]
fn zero_cycles_is_initial_state() {
    let c = build(BLINK);
    let d = Design::elaborate(&c.mir, "blink").unwrap();
    let t = run(&d, &vec![], 0).unwrap();
    assert_eq!(t.cycles.len(), 1);
    assert!(t.signal("counter").unwrap()[0].is_all_x());
}

const MEM2: &str = "entity m(clk: clock, we0: bool, a0: int<3>, d0: int<8>, we1: bool, a1: int<3>, d1: int<8>, ra: int<3>) -> int<8> {
    let mem = inst clocked_memory(clk, [(we0, a0, d0), (we1, a1, d1)]);
    inst read_memory(mem, ra)
}";

fn mem_schedule(entries: &[(u64, &str, Bits)]) -> Schedule {
    entries.iter().map(|(c, p, b)| (*c, p.to_string(), b.clone())).collect()
}

#[test]
fn memory_write_visible_next_cycle() {
    let c = build(MEM2);
    let d = Design::elaborate(&c.mir, "m").unwrap();
    let s = mem_schedule(&[
        (0, "we0", Bits::from_bool(false)),
        (0, "we1", Bits::from_bool(false)),
        (0, "ra", int(2, 3)),
        (1, "we0", Bits::from_bool(true)),
        (1, "a0", int(2, 3)),
        (1, "d0", int(42, 8)),
        (2, "we0", Bits::from_bool(false)),
    ]);
    let t = run(&d, &s, 3).unwrap();
    assert_eq!(t.ints("output__").unwrap(), vec![None, None, Some(42), Some(42)]);
}

#[test]
fn later_write_port_wins() {
    let c = build(MEM2);
    let d = Design::elaborate(&c.mir, "m").unwrap();
    let s = mem_schedule(&[
        (0, "we0", Bits::from_bool(true)),
        (0, "we1", Bits::from_bool(true)),
        (0, "a0", int(1, 3)),
        (0, "a1", int(1, 3)),
        (0, "d0", int(10, 8)),
        (0, "d1", int(20, 8)),
        (0, "ra", int(1, 3)),
    ]);
    let t = run(&d, &s, 1).unwrap();
    assert_eq!(t.ints("output__").unwrap()[1], Some(20));
}

#[test]
fn staged_example_latency() {
    let src = "pipeline(3) subpipe(clk: clock, a: int<32>) -> int<32> { reg * 3; a }
fn f(a: int<32>, p: int<64>) -> int<32> { trunc(p) }
pipeline(4) X(clk: clock, a: int<32>, b: int<32>) -> int<32> {
        'initial
        let x = inst(3) subpipe(clk, a);
        let p = a * b;
    reg * 3;
        let s = x + f(a, p);
    reg;
        trunc(s + stage(initial).a)
}";
    let c = build(src);
    let d = Design::elaborate(&c.mir, "X").unwrap();
    let inputs = [(3i128, 4i128), (-7, 100), (1 << 20, 1 << 15), (5, -5)];
    let mut s = vec![];
    for (k, (a, b)) in inputs.iter().enumerate() {
        s.push((k as u64, "a".to_string(), int(*a, 32)));
        s.push((k as u64, "b".to_string(), int(*b, 32)));
    }
    let t = run(&d, &s, 8).unwrap();
    let out = t.ints("output__").unwrap();
    let wrap = |v: i128| Bits::from_i128(v, 32).to_i128().unwrap();
    // `stage(initial).a` bypasses the chain, so it reads the input sticky at cycle k + 4.
    let a_at = |c: usize| inputs[c.min(inputs.len() - 1)].0;
    for (k, (a, b)) in inputs.iter().enumerate() {
        let expected = wrap(wrap(a + wrap(a * b)) + a_at(k + 4));
        assert_eq!(out[k + 4], Some(expected), "input applied at cycle {k}");
    }
    assert_eq!(out[3], None);
}

#[test]
fn settled_state_is_a_fixed_point() {
    let c = build(BLINK);
    let d = Design::elaborate(&c.mir, "blink").unwrap();
    let mut sim = Simulator::new(&d);
    for (_, p, v) in blink_schedule(3) {
        sim.set_input(&p, v).unwrap();
    }
    for _ in 0..5 {
        sim.edge();
        let before = sim.snapshot();
        sim.settle();
        assert_eq!(before, sim.snapshot());
    }
}

#[test]
fn instances_are_inlined_with_hierarchical_names() {
    let src = "entity inner(clk: clock, a: int<4>) -> int<4> { reg(clk) r: int<4> = a; r }
entity outer(clk: clock, a: int<4>) -> int<4> { let x = inst inner(clk, a); inst inner(clk, x) }";
    let c = build(src);
    let d = Design::elaborate(&c.mir, "outer").unwrap();
    assert!(d.signal_index("inner_i.r").is_some());
    assert!(d.signal_index("inner_i_1.r").is_some());
    let t = run(&d, &vec![(0, "a".into(), int(6, 4))], 2).unwrap();
    assert_eq!(t.ints("output__").unwrap(), vec![None, None, Some(6)]);
}

#[test]
fn unknown_top_lists_candidates() {
    let c = build(BLINK);
    let e = Design::elaborate(&c.mir, "blinc").unwrap_err();
    let SimError::UnknownTop { suggestions, .. } = e else {
        panic!()
    };
    assert!(suggestions.contains(&"blink".to_string()) || suggestions.contains(&"main_blink".to_string()));
}

#[test]
fn unknown_port_is_rejected() {
    let c = build(BLINK);
    let d = Design::elaborate(&c.mir, "blink").unwrap();
    let e = run(&d, &vec![(0, "maxx".into(), int(1, 20))], 1).unwrap_err();
    assert!(matches!(e, SimError::UnknownPort { .. }));
}

#[test]
fn identical_runs_give_identical_traces() {
    let c = build(BLINK);
    let d = Design::elaborate(&c.mir, "blink").unwrap();
    assert_eq!(run(&d, &blink_schedule(5), 20).unwrap(), run(&d, &blink_schedule(5), 20).unwrap());
}

const OPTION: &str = "enum Option<T> { None, Some{ val: T } }\n";
const COMMAND: &str = "enum Command { Nop, Write{ value: int<8> }, Read }\n";

fn evaluator(src: &str) -> Evaluator {
    Evaluator::new(single_file(src), None).unwrap_or_else(|f| panic!("{:?}", f.errors))
}

#[test]
fn eval_variant_with_payload() {
    let mut ev = evaluator(COMMAND);
    let v = ev.eval("Command::Write(10)", None).unwrap();
    assert_eq!(v.bits.to_string(), "0100001010");
    assert_eq!(v.value().to_string(), "Write(10)");
}

#[test]
fn eval_bool() {
    let mut ev = evaluator("");
    let v = ev.eval("true", None).unwrap();
    assert_eq!(v.bits.to_string(), "1");
}

#[test]
fn eval_option_with_expected_type() {
    let mut ev = evaluator(OPTION);
    let t = ev.resolve_type("Option<bool>").unwrap();
    let none = ev.eval("Option::None", Some(&t)).unwrap();
    assert_eq!(none.bits.to_string(), "0x");
    assert_eq!(none.value().to_string(), "None");
    let some = ev.eval("Option::Some(true)", None).unwrap();
    assert_eq!(some.bits.to_string(), "11");
}

#[test]
fn eval_needs_a_determined_width() {
    let mut ev = evaluator("");
    let e = ev.eval("trunc(300)", None).unwrap_err();
    assert_eq!(e[0].code, ErrorCode::AmbiguousType);
    let t = ev.resolve_type("int<8>").unwrap();
    let e = ev.eval("trunc(300)", Some(&t)).unwrap_err();
    assert!(!e.is_empty());
}

#[test]
fn eval_rejects_free_names() {
    let mut ev = evaluator("");
    let e = ev.eval("x & true", None).unwrap_err();
    assert_eq!(e[0].code, ErrorCode::ExpressionNotClosed);
}

#[test]
fn eval_calls_functions_of_the_build() {
    let mut ev = evaluator("fn double(a: int<8>) -> int<9> { a + a }");
    let v = ev.eval("double(trunc(double(3)))", None).unwrap();
    assert_eq!(v.bits.to_i128(), Some(12));
}

#[test]
fn stimulus_lines() {
    let a = stimulus::parse("# comment\n0 rst true\n\n2 cmd Command::Write(10)\n").unwrap();
    assert_eq!(a.len(), 2);
    assert_eq!((a[1].line, a[1].cycle, a[1].port.as_str(), a[1].expr.as_str()), (4, 2, "cmd", "Command::Write(10)"));
    assert!(stimulus::parse("x rst true").is_err());
    assert!(stimulus::parse("1 rst").is_err());
}

#[test]
fn stimulus_uses_port_types() {
    let c = build(BLINK);
    let d = Design::elaborate(&c.mir, "blink").unwrap();
    let u = c.mir.by_name("blink").unwrap();
    let ports: Vec<_> = crate::mir::param_ports(&c.hir.items, c.hir.items.unit(u.id))
        .into_iter()
        .map(|(p, t)| (p.name, t))
        .collect();
    let mut ev = evaluator(BLINK);
    let a = stimulus::parse("0 rst true\n0 max 2\n1 rst false").unwrap();
    let s = stimulus::schedule(&a, &d, &ports, &mut ev).unwrap();
    assert_eq!(s, blink_schedule(2));
}

fn render(ty: &TypeDesc, bits: &Bits) -> String {
    ty.decode(bits).to_string()
}

#[test]
fn translate_through_vcd() {
    let src = format!(
        "{OPTION}entity e(clk: clock, a: int<8>, v: bool) -> Option<int<8>> {{
            reg(clk) r: Option<int<8>> = if v {{ Option::Some(a) }} else {{ Option::None }};
            r
        }}"
    );
    let c = build(&src);
    let d = Design::elaborate(&c.mir, "e").unwrap();
    let s = vec![(0, "a".into(), int(5, 8)), (0, "v".into(), Bits::from_bool(true)), (1, "v".into(), Bits::from_bool(false))];
    let t = run(&d, &s, 2).unwrap();
    let mut vcd = vec![];
    waves::write_vcd(&t, &d.top, &mut vcd).unwrap();
    let side = waves::parse_sidecar(&waves::write_sidecar(&t, &d.top)).unwrap();
    let changes = waves::translate(&vcd[..], &side, "r").unwrap();
    let rendered: Vec<(u64, &str)> = changes.iter().map(|c| (c.time, c.rendered.as_str())).collect();
    assert_eq!(rendered, vec![(0, "X"), (10, "Some(5)"), (20, "None")]);
    let clk = waves::translate(&vcd[..], &side, "clk").unwrap();
    assert_eq!(clk.len(), 5);
    let v = waves::translate(&vcd[..], &side, "v").unwrap();
    assert_eq!(v.iter().map(|c| c.rendered.as_str()).collect::<Vec<_>>(), vec!["true", "false"]);
}

#[test]
fn rendering_of_raw_values() {
    assert_eq!(render(&TypeDesc::Bool, &Bits::from_bool(true)), "true");
    assert_eq!(render(&TypeDesc::Int { width: 4 }, &Bits::x(4)), "X");
    assert!(waves::translate(&b""[..], &[], "nope").is_err());
}
