//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::time::Instant;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spadelite::backend_verilog::check_subset;
use spadelite::diagnostics::{render_human, Diagnostic, ErrorCode};
use spadelite::driver::{compile, emit, single_file, Stage};
use spadelite::interp::eval::Evaluator;
use spadelite::interp::{run, Design};
use spadelite::typecheck::type_name;

const SEED: u64 = 0x5ade;
const PIPELINES: usize = 100;
const PIPELINE_CYCLES: usize = 20;
const ENUM_SAMPLES: usize = 1000;
const MATCHES: usize = 200;
const BUILDS: usize = 3;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn errors_of(src: &str) -> Vec<Diagnostic> {
    match compile(&single_file(src)) {
        Ok(_) => vec![],
        Err(f) => f.errors,
    }
}

const SUBPIPE: &str = "pipeline(3) subpipe(clk: clock, a: int<32>) -> int<32> { reg * 3; a }
fn f(a: int<32>, p: int<64>) -> int<32> { trunc(p) }
";

fn early_use() -> Outcome {
    let src = format!(
        "{SUBPIPE}pipeline(4) X(clk: clock, a: int<32>, b: int<32>) -> int<32> {{
        'initial
        let x = inst(3) subpipe(clk, a);
        let p = a * b;
    reg;
        let s = x + f(a, p);
    reg * 3;
        trunc(s + stage(initial).a)
}}"
    );
    let es = errors_of(&src);
    ensure(es.len() == 1, || format!("expected one diagnostic, got {es:?}"))?;
    let d = &es[0];
    ensure(d.code == ErrorCode::UseBeforeReady, || format!("code {}", d.code))?;
    ensure(d.message == "Use of x before it is ready", || d.message.clone())?;
    ensure(d.primary.text == "Is unavailable for another 2 stages", || d.primary.text.clone())?;
    let notes: Vec<&str> = d.notes.iter().map(|n| n.text.as_str()).collect();
    ensure(
        notes == ["Requesting x from stage 1", "But it will not be available until stage 3"],
        || format!("{notes:?}"),
    )?;
    let rendered = render_human(d, &single_file(&src), false);
    ensure(rendered.contains("Use of x before it is ready"), || rendered.clone())?;
    Ok("request stage 1, availability stage 3, 2 stages remaining".into())
}

fn pipeline_latency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut depths = BTreeSet::new();
    for i in 0..PIPELINES {
        let p = RandPipeline::generate(&mut rng);
        depths.insert(p.depth);
        check_latency(&p, &mut rng, PIPELINE_CYCLES).map_err(|e| format!("pipeline {i}: {e}"))?;
    }
    Ok(format!(
        "{PIPELINES} pipelines x {PIPELINE_CYCLES} cycles, depths {depths:?}"
    ))
}

fn depth_source(declared: usize, called: usize, callers: usize) -> (String, Vec<usize>) {
    let regs = "reg; ".repeat(declared);
    let mut s = format!("pipeline({declared}) sub(clk: clock, a: int<8>) -> int<8> {{ {regs}a }}\n");
    let mut sites = vec![];
    for c in 0..callers {
        s.push_str(&format!("pipeline({called}) c{c}(clk: clock, a: int<8>) -> int<8> {{\n    let y = "));
        sites.push(s.len());
        s.push_str(&format!("inst({called}) sub(clk, a);\n"));
        s.push_str(&"    reg;\n".repeat(called));
        s.push_str("    y\n}\n");
    }
    (s, sites)
}

fn depth_checking() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut cases = 0;
    for d in 0..=4 {
        let callers = rng.gen_range(1..=3);
        let (ok, _) = depth_source(d, d, callers);
        ensure(errors_of(&ok).is_empty(), || format!("unchanged depth {d} rejected"))?;
        for changed in (0..=5).filter(|c| *c != d) {
            let (src, sites) = depth_source(changed, d, callers);
            let es = errors_of(&src);
            let mut starts: Vec<usize> = es
                .iter()
                .filter(|e| e.code == ErrorCode::InstDepthMismatch)
                .map(|e| e.primary.span.start as usize)
                .collect();
            starts.sort();
            ensure(starts == sites, || format!("depth {d} -> {changed}: E0402 at {starts:?}, call sites {sites:?}\n{es:?}"))?;
            cases += 1;
        }
    }
    Ok(format!("{cases} depth changes, E0402 at every call site"))
}

fn local_type(src: &str, unit: &str, local: &str) -> Result<String, String> {
    let c = compile(&single_file(src)).map_err(|f| format!("{:?}", f.errors))?;
    let id = c.hir.items.find_unit(unit).ok_or("no unit")?;
    let body = &c.hir.bodies[&id];
    let i = body.locals.iter().position(|l| l.name == local).ok_or("no local")?;
    Ok(type_name(&c.hir.items, &c.typed.units[&id].local_types[i]))
}

fn width_inference() -> Outcome {
    let product = local_type("fn m(a: int<32>, b: int<32>) -> int<64> { let p = a * b; p }", "m", "p")?;
    ensure(product == "int<64>", || format!("product is {product}"))?;
    let inc = local_type("fn i(c: int<20>) -> int<21> { let n = c + 1; n }", "i", "n")?;
    ensure(inc == "int<21>", || format!("increment is {inc}"))?;
    let to20 = errors_of("fn t(c: int<20>) -> int<20> { trunc(c + 1) }");
    ensure(to20.is_empty(), || format!("trunc to 20 rejected: {to20:?}"))?;
    let to22 = errors_of("fn t(c: int<20>) -> int<22> { trunc(c + 1) }");
    ensure(
        to22.iter().any(|e| e.code == ErrorCode::TruncToWider),
        || format!("trunc to 22: {to22:?}"),
    )?;
    Ok("int<64>, int<21>, trunc 20 ok, trunc 22 E0306".into())
}

fn enum_abi() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let mut samples = 0;
    let mut two_variant = 0;
    while samples < ENUM_SAMPLES {
        let shape = EnumShape::generate(&mut rng, "E", 5, 16);
        let mut ev = Evaluator::new(single_file(&shape.source()), None).map_err(|f| format!("{:?}", f.errors))?;
        let ty = ev.resolve_type("E").map_err(|e| format!("{e:?}"))?;
        let layout = ev.layout(&ty);
        ensure(layout.width() == shape.width() as u64, || {
            format!("{}: width {} vs {}", shape.source(), layout.width(), shape.width())
        })?;
        if shape.variants.len() == 2 {
            ensure(shape.disc_width() == 1, || "two variants need one bit".into())?;
            two_variant += 1;
        }
        for _ in 0..20 {
            let vi = rng.gen_range(0..shape.variants.len());
            let vals: Vec<i128> = shape.variants[vi].1.iter().map(|f| f.random(&mut rng)).collect();
            let expr = shape.expr(vi, &vals);
            let v = ev.eval(&expr, None).map_err(|e| format!("{expr}: {e:?}"))?;
            let want = shape.encode(vi, &vals);
            ensure(v.bits.to_string() == want, || format!("{expr}: {} vs {want}", v.bits))?;
            let decoded = layout.decode(&v.bits).to_string();
            ensure(decoded == shape.render(vi, &vals), || format!("{expr} decoded as {decoded}"))?;
            samples += 1;
        }
    }
    let mut ev = Evaluator::new(single_file("enum Option<T> { None, Some{ val: T } }"), None)
        .map_err(|f| format!("{:?}", f.errors))?;
    let ob = ev.resolve_type("Option<bool>").map_err(|e| format!("{e:?}"))?;
    ensure(ev.layout(&ob).width() == 2, || "Option<bool> is not 2 bits".into())?;
    Ok(format!("{samples} round trips, {two_variant} two-variant shapes, Option<bool> = 2 bits"))
}

const FIRST_SOME: &str = "enum Option<T> { None, Some{ val: T } }
fn first(a: Option<int<8>>, b: Option<int<8>>) -> int<8> {
    match (a, b) {
        (Option::Some(val), _) => val,
        (_, Option::Some(val)) => val,
        _ => 0,
    }
}";

fn first_some_priority() -> Result<usize, String> {
    let c = compile(&single_file(FIRST_SOME)).map_err(|f| format!("{:?}", f.errors))?;
    let d = Design::elaborate(&c.mir, "first").map_err(|e| e.to_string())?;
    let opt = |v: Option<i128>| match v {
        Some(x) => spadelite::bits::Bits::concat(&[
            spadelite::bits::Bits::from_bool(true),
            spadelite::bits::Bits::from_i128(x, 8),
        ]),
        None => spadelite::bits::Bits::parse("0xxxxxxxx").unwrap(),
    };
    let values: Vec<Option<i128>> = (-128..128).step_by(17).map(Some).chain([None]).collect();
    let mut n = 0;
    for a in &values {
        for b in &values {
            let s = vec![(0, "a".to_string(), opt(*a)), (0, "b".to_string(), opt(*b))];
            let t = run(&d, &s, 0).map_err(|e| e.to_string())?;
            let got = t.ints("output__").ok_or("no output")?[0];
            let want = a.or(*b).unwrap_or(0);
            ensure(got == Some(want), || format!("first({a:?}, {b:?}) = {got:?}"))?;
            n += 1;
        }
    }
    Ok(n)
}

fn match_lowering() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let mut inputs = 0;
    for i in 0..MATCHES {
        let m = RandMatch::generate(&mut rng);
        inputs += check_match(&m, |b| b.clone()).map_err(|e| format!("match {i}: {e}"))?;
    }
    let l4 = first_some_priority()?;
    Ok(format!("{MATCHES} matches, {inputs} scrutinee values, first-some priority on {l4} pairs"))
}

const MEM: &str = "struct port MemPort { addr: &mut int<8> }
#[external] fn memory() -> MemPort;
#[external] fn consume(m: MemPort);
";

fn walkthrough(lines: &[&str]) -> Vec<Diagnostic> {
    errors_of(&format!("{MEM}fn t(value: int<8>) {{\n{}\n}}", lines.join("\n")))
}

fn linearity() -> Outcome {
    let full = ["let mem: MemPort = memory();", "let addr = mem.addr;", "set addr = value;", "consume(mem);"];
    let es = walkthrough(&full);
    ensure(
        es.len() == 1 && es[0].code == ErrorCode::DoubleConsumption && es[0].notes.iter().any(|n| n.span.is_some()),
        || format!("full walkthrough: {es:?}"),
    )?;
    let without_consume = walkthrough(&full[..3]);
    ensure(without_consume.is_empty(), || format!("without consume(mem): {without_consume:?}"))?;
    let without_set = walkthrough(&[full[0], full[1], full[3]]);
    let codes: Vec<ErrorCode> = without_set.iter().map(|d| d.code).collect();
    ensure(codes == [ErrorCode::NeverConsumed], || {
        format!("without set: expected [E0502], got {codes:?} (consume(mem) consumes every leaf, including mem.addr)")
    })?;
    Ok("E0501 with both sites, E0502, accepted".into())
}

fn blink() -> Outcome {
    let files = corpus_files();
    let src = files.iter().find(|(n, _)| n == "blink.spade").ok_or("no blink.spade")?;
    let c = compile(&single_file(&src.1)).map_err(|f| format!("{:?}", f.errors))?;
    let d = Design::elaborate(&c.mir, "blink").map_err(|e| e.to_string())?;
    for max in [1i128, 2, 5] {
        let cycles = 4 * (max as usize + 1) + 2;
        let s = vec![
            (0, "rst".to_string(), spadelite::bits::Bits::from_bool(true)),
            (0, "max".to_string(), spadelite::bits::Bits::from_i128(max, 20)),
            (1, "rst".to_string(), spadelite::bits::Bits::from_bool(false)),
        ];
        let t = run(&d, &s, cycles as u64).map_err(|e| e.to_string())?;
        let got: Vec<Option<i128>> = t.ints("counter").ok_or("no counter")?;
        let want: Vec<Option<i128>> = blink_oracle(max, 1, cycles).into_iter().map(Some).collect();
        ensure(got == want, || format!("max {max}: {got:?} vs {want:?}"))?;
        let p = max as usize + 1;
        ensure((2..got.len() - p).all(|k| got[k] == got[k + p]), || format!("max {max}: not periodic"))?;
    }
    Ok("max 1, 2, 5 match the hand simulation, period max+1".into())
}

fn determinism() -> Outcome {
    let files = corpus_files();
    let mut checked = 0;
    for (name, content) in &files {
        let one = vec![(name.clone(), content.clone())];
        for stage in Stage::ALL {
            let outputs: Vec<String> = (0..BUILDS)
                .map(|_| emit(&sources(&one), stage).map(|(t, _)| t).map_err(|f| format!("{name}: {:?}", f.errors)))
                .collect::<Result<_, _>>()?;
            ensure(outputs.windows(2).all(|w| w[0] == w[1]), || format!("{name} --emit {} differs", stage.name()))?;
            checked += 1;
        }
    }
    let whole: Vec<String> = (0..BUILDS)
        .map(|_| emit(&sources(&files), Stage::Verilog).map(|(t, _)| t).map_err(|f| format!("{:?}", f.errors)))
        .collect::<Result<_, _>>()?;
    ensure(whole.windows(2).all(|w| w[0] == w[1]), || "whole corpus Verilog differs".into())?;
    Ok(format!("{checked} file/stage pairs and the whole corpus, {BUILDS} builds each"))
}

fn subset_validity() -> Outcome {
    let dir = corpus_dir().join("golden");
    let mut n = 0;
    let mut entries: Vec<_> = std::fs::read_dir(&dir).map_err(|e| format!("{}: {e}", dir.display()))?.flatten().collect();
    entries.sort_by_key(|e| e.path());
    for e in entries {
        let p = e.path();
        if p.extension().is_some_and(|x| x == "sv") {
            let text = std::fs::read_to_string(&p).map_err(|e| e.to_string())?;
            check_subset(&text).map_err(|err| format!("{}: {err}", p.display()))?;
            n += 1;
        }
    }
    ensure(n > 0, || "no golden Verilog files".into())?;
    Ok(format!("{n} golden Verilog files"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("use before ready diagnostic", early_use),
        ("pipeline latency", pipeline_latency),
        ("depth checking", depth_checking),
        ("width inference", width_inference),
        ("enum layout", enum_abi),
        ("match lowering equivalence", match_lowering),
        ("linearity walkthrough", linearity),
        ("blink end-to-end", blink),
        ("determinism", determinism),
        ("emitted subset validity", subset_validity),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let r = f();
        let secs = start.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("criterion {:>2} PASS {name} ({secs:.2}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name} ({secs:.2}s): {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
