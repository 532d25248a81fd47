use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

/// A fresh scratch directory per test.
fn scratch(test: &str) -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(test);
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn spadelite(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spadelite"))
        .current_dir(dir)
        .env("NO_COLOR", "1")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, content: &str) -> String {
    std::fs::write(dir.join(name), content).unwrap();
    name.to_string()
}

const EARLY_USE: &str = "pipeline(3) subpipe(clk: clock, a: int<32>) -> int<32> { reg * 3; a }
fn f(a: int<32>, p: int<64>) -> int<32> { trunc(p) }
pipeline(4) X(clk: clock, a: int<32>, b: int<32>) -> int<32> {
        'initial
        let x = inst(3) subpipe(clk, a);
        let p = a * b;
    reg;
        let s = x + f(a, p);
    reg * 3;
        trunc(s + stage(initial).a)
}
";

#[test]
fn build_writes_verilog_and_source_map() {
    let d = scratch("build_ok");
    let o = spadelite(&d, &["build", corpus("blink.spade").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let sv = std::fs::read_to_string(d.join("out.sv")).unwrap();
    assert!(sv.contains("module top ("));
    assert!(std::fs::read_to_string(d.join("out.sv.map.jsonl")).unwrap().contains("\"counter\""));
}

#[test]
fn build_emits_stages_to_stdout() {
    let d = scratch("build_emit");
    let o = spadelite(&d, &["build", "--emit", "mir", corpus("blink.spade").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("reg counter"));
    assert!(!d.join("out.sv").exists());
}

#[test]
fn use_before_ready_exits_one() {
    let d = scratch("early_use");
    let f = write(&d, "main.spade", EARLY_USE);
    let o = spadelite(&d, &["build", &f]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("Use of x before it is ready"), "{e}");
    assert!(e.contains("Is unavailable for another 2 stages"), "{e}");
    assert!(!d.join("out.sv").exists());
}

#[test]
fn machine_diagnostics_are_json_lines() {
    let d = scratch("machine");
    let f = write(&d, "main.spade", EARLY_USE);
    let o = spadelite(&d, &["--error-format", "machine", "build", &f]);
    assert_eq!(o.status.code(), Some(1));
    let line = stderr(&o).lines().next().unwrap().to_string();
    assert!(line.starts_with('{') && line.contains("E0403"), "{line}");
}

#[test]
fn missing_file_exits_two() {
    let d = scratch("missing");
    let o = spadelite(&d, &["build", "nope.spade"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.spade"));
}

#[test]
fn unknown_stage_exits_two() {
    let d = scratch("bad_stage");
    let o = spadelite(&d, &["build", "--emit", "bytecode", corpus("blink.spade").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sim_prints_blink_trace() {
    let d = scratch("sim_blink");
    let stim = write(&d, "blink.stim", "0 rst true\n0 max 2\n1 rst false\n");
    let o = spadelite(
        &d,
        &["sim", corpus("blink.spade").to_str().unwrap(), "--top", "blink", "--stimulus", &stim, "--cycles", "6", "--watch", "counter"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let counters: Vec<String> = stdout(&o)
        .lines()
        .filter_map(|l| l.split_whitespace().find_map(|w| w.strip_prefix("counter=")).map(str::to_string))
        .collect();
    assert_eq!(counters, ["0", "0", "1", "2", "0", "1", "2"]);
    assert!(d.join("out.vcd").exists());

    let t = spadelite(&d, &["translate", "out.vcd", "--signal", "counter"]);
    assert_eq!(t.status.code(), Some(0), "{}", stderr(&t));
    assert!(stdout(&t).starts_with("0 0\n20 1\n30 2\n"), "{}", stdout(&t));
}

#[test]
fn sim_unknown_top_suggests() {
    let d = scratch("sim_unknown");
    let o = spadelite(&d, &["sim", corpus("blink.spade").to_str().unwrap(), "--top", "blnk"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("blink"), "{}", stderr(&o));
}

#[test]
fn sim_zero_cycles_writes_a_vcd() {
    let d = scratch("sim_zero");
    let o = spadelite(&d, &["sim", corpus("blink.spade").to_str().unwrap(), "--top", "top", "--cycles", "0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let vcd = std::fs::read_to_string(d.join("out.vcd")).unwrap();
    assert!(vcd.contains("$enddefinitions"));
    assert!(vcd.contains("#0"));
    assert!(!vcd.contains("#5"));
}

#[test]
fn bad_stimulus_port_exits_two() {
    let d = scratch("sim_bad_port");
    let stim = write(&d, "s.stim", "0 rset true\n");
    let o = spadelite(&d, &["sim", corpus("blink.spade").to_str().unwrap(), "--top", "blink", "--stimulus", &stim]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("rst"), "{}", stderr(&o));
}

fn export_state(d: &Path) -> String {
    let o = spadelite(d, &["build", corpus("option_match.spade").to_str().unwrap(), "--state", "state.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    "state.json".into()
}

#[test]
fn eval_prints_bits_and_value() {
    let d = scratch("eval_ok");
    let state = export_state(&d);
    let o = spadelite(&d, &["eval", "Option::Some(true)", "--state", &state]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "11\nSome(true)\n");
    let o = spadelite(&d, &["eval", "Option::None", "--type", "Option<bool>", "--state", &state]);
    assert_eq!(stdout(&o), "0x\nNone\n");
}

#[test]
fn eval_open_expression_exits_one() {
    let d = scratch("eval_open");
    let state = export_state(&d);
    let o = spadelite(&d, &["eval", "x + 1", "--state", &state]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("E0701"), "{}", stderr(&o));
}

#[test]
fn stale_state_exits_two() {
    let d = scratch("eval_stale");
    let state = export_state(&d);
    let text = std::fs::read_to_string(d.join(&state)).unwrap();
    let stale = text.replacen("\"version\": 1", "\"version\": 0", 1).replacen("\"version\":1", "\"version\":0", 1);
    assert_ne!(stale, text);
    write(&d, "stale.json", &stale);
    let o = spadelite(&d, &["eval", "true", "--state", "stale.json"]);
    assert_eq!(o.status.code(), Some(2));
    write(&d, "garbage.json", "{not json");
    let o = spadelite(&d, &["eval", "true", "--state", "garbage.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    let d = scratch("usage");
    assert_eq!(spadelite(&d, &[]).status.code(), Some(2));
    assert_eq!(spadelite(&d, &["sim", "x.spade"]).status.code(), Some(2));
}
