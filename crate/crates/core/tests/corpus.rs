mod common;

use common::*;
use spadelite::bits::Bits;
use spadelite::driver::{compile, single_file, Compilation};
use spadelite::interp::eval::Evaluator;
use spadelite::interp::{run, Design, Schedule, Trace};

fn corpus(name: &str) -> Compilation {
    let (_, src) = corpus_files().into_iter().find(|(n, _)| n == name).unwrap();
    compile(&single_file(&src)).unwrap_or_else(|f| panic!("{:?}", f.errors))
}

fn simulate(c: &Compilation, top: &str, schedule: &[(u64, &str, Bits)], cycles: u64) -> Trace {
    let d = Design::elaborate(&c.mir, top).unwrap();
    let s: Schedule = schedule.iter().map(|(k, p, b)| (*k, p.to_string(), b.clone())).collect();
    run(&d, &s, cycles).unwrap()
}

fn int(v: i128, w: usize) -> Bits {
    Bits::from_i128(v, w)
}

fn yes(b: bool) -> Bits {
    Bits::from_bool(b)
}

#[test]
fn no_mangle_top_counts_to_five() {
    let c = corpus("blink.spade");
    let t = simulate(&c, "top", &[(0, "rst", yes(true)), (1, "rst", yes(false))], 14);
    let want: Vec<Option<i128>> = blink_oracle(5, 1, 14).into_iter().map(Some).collect();
    assert_eq!(t.ints("blink_i.counter").unwrap(), want);
    let wraps: Vec<bool> = t.signal("output__").unwrap().iter().map(|b| b.to_bool().unwrap()).collect();
    assert_eq!(wraps.iter().filter(|w| **w).count(), 2);
}

#[test]
fn regfile_reads_what_was_written() {
    let c = corpus("memory.spade");
    let mut s = vec![(0, "we", yes(true))];
    for a in 0..16u64 {
        s.push((a, "waddr", int(a as i128, 4)));
        s.push((a, "wdata", int(3 * a as i128 - 20, 8)));
    }
    s.push((16, "we", yes(false)));
    for a in 0..16u64 {
        s.push((16 + a, "raddr", int(a as i128, 4)));
    }
    let t = simulate(&c, "regfile", &s, 32);
    let out = t.ints("output__").unwrap();
    for a in 0..16usize {
        assert_eq!(out[16 + a], Some(3 * a as i128 - 20), "address {a}");
    }
}

#[test]
fn unwritten_memory_reads_x() {
    let c = corpus("memory.spade");
    let t = simulate(&c, "regfile", &[(0, "we", yes(false)), (0, "raddr", int(4, 4))], 2);
    assert_eq!(t.ints("output__").unwrap(), vec![None, None, None]);
}

#[test]
fn first_prefers_the_left_value() {
    let c = corpus("option_match.spade");
    let some = |v: i128| Bits::concat(&[yes(true), int(v, 8)]);
    let none = Bits::parse("0xxxxxxxx").unwrap();
    for (a, b, want) in [(some(3), some(4), 3), (none.clone(), some(4), 4), (none.clone(), none.clone(), 0), (some(-1), none, -1)] {
        let t = simulate(&c, "first", &[(0, "a", a), (0, "b", b)], 0);
        assert_eq!(t.ints("output__").unwrap()[0], Some(want));
    }
}

#[test]
fn struct_and_enum_functions() {
    let c = corpus("structs.spade");
    let pixel = Bits::concat(&[int(10, 5), int(20, 6), int(-3, 5)]);
    let t = simulate(&c, "brightness", &[(0, "p", pixel)], 0);
    assert_eq!(t.ints("output__").unwrap()[0], Some(27));

    let mut ev = Evaluator::new(single_file(&corpus_files().into_iter().find(|(n, _)| n == "structs.spade").unwrap().1), None).unwrap();
    for (cmd, want) in [("Command::Write(10, 3)", 10), ("Command::Read(-7)", -7), ("Command::Nop", 0)] {
        let bits = ev.eval(cmd, None).unwrap().bits;
        let t = simulate(&c, "address", &[(0, "c", bits)], 0);
        assert_eq!(t.ints("output__").unwrap()[0], Some(want), "{cmd}");
    }

    let t = simulate(&c, "swap", &[(0, "pair", Bits::concat(&[yes(true), int(5, 4)]))], 0);
    assert_eq!(t.signal("output__").unwrap()[0].to_string(), "01011");

    let xs = Bits::concat(&[int(4, 4), int(3, 4), int(2, 4), int(1, 4)]);
    for i in 0..4 {
        let t = simulate(&c, "pick", &[(0, "xs", xs.clone()), (0, "i", int(i, 3))], 0);
        assert_eq!(t.ints("output__").unwrap()[0], Some(i + 1));
    }
    let t = simulate(&c, "pick", &[(0, "xs", xs), (0, "i", int(-1, 3))], 0);
    assert_eq!(t.ints("output__").unwrap()[0], None);
}

#[test]
fn accumulator_wraps_at_twelve_bits() {
    let c = corpus("structs.spade");
    let t = simulate(&c, "accumulate", &[(0, "rst", yes(true)), (1, "rst", yes(false)), (0, "x", int(127, 8))], 40);
    let acc = t.ints("acc").unwrap();
    let mut want = vec![Some(0), Some(0)];
    let mut a = 0;
    for _ in 2..=40 {
        a = wrap(a + 127, 12);
        want.push(Some(a));
    }
    assert_eq!(acc, want);
}

#[test]
fn staged_example_from_corpus() {
    let c = corpus("pipeline.spade");
    let t = simulate(&c, "X", &[(0, "a", int(6, 32)), (0, "b", int(7, 32))], 6);
    let out = t.ints("output__").unwrap();
    assert_eq!(&out[..4], &[None, None, None, None]);
    assert_eq!(out[4], Some(6 + 42 + 6));
}

#[test]
fn port_structs_connect_reader_and_writer() {
    let c = corpus("ports.spade");
    let s = [(0, "wa", int(3, 4)), (0, "wv", int(77, 8)), (0, "ra", int(3, 4)), (2, "wa", int(5, 4)), (2, "wv", int(-2, 8)), (3, "ra", int(5, 4))];
    let t = simulate(&c, "system", &s, 6);
    let out = t.ints("output__").unwrap();
    assert_eq!(out[0], None);
    assert_eq!(out[2], Some(77));
    assert_eq!(out[5], Some(-2));
}

#[test]
fn whole_corpus_builds_together() {
    let files = corpus_files();
    let c = compile(&sources(&files)).unwrap_or_else(|f| panic!("{:?}", f.errors));
    for m in ["top", "system", "blink_blink", "structs_swap", "option_match_first"] {
        assert!(c.mir.by_name(m).is_some(), "{m}");
    }
}
