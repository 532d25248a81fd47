//! `spadelite` command-line driver.
//!
//! Exit codes: 0 on success, 1 when the compiler or evaluator reported
//! diagnostics, 2 on usage, IO, state-file and simulation setup errors.

use std::fs;
use std::io::{BufReader, IsTerminal};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use spadelite::backend_verilog::{emit_program, emit_source_map};
use spadelite::diagnostics::{render_human, render_machine, Diagnostic, SourceFiles};
use spadelite::driver::{self, Stage};
use spadelite::interp::eval::Evaluator;
use spadelite::interp::{self, stimulus, waves, Design};
use spadelite::mir::param_ports;
use spadelite::state::CompilerState;

#[derive(Parser)]
#[command(name = "spadelite", version, about = "Compiler and simulator for a subset of the Spade HDL")]
struct Cli {
    /// How diagnostics are printed
    #[arg(long, value_enum, default_value = "human", global = true)]
    error_format: ErrorFormat,
    /// Colored diagnostics; `auto` colors a terminal unless NO_COLOR is set
    #[arg(long, value_enum, default_value = "auto", global = true)]
    color: Color,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ErrorFormat {
    Human,
    Machine,
}

#[derive(Clone, Copy, ValueEnum)]
enum Color {
    Auto,
    Always,
    Never,
}

#[derive(Subcommand)]
enum Command {
    /// Compile source files to SystemVerilog, or dump an intermediate stage
    Build {
        /// Source files; each file's stem is its namespace
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Stage to emit: tokens, ast, hir, typed, staged, linear, mir or verilog
        #[arg(long, default_value = "verilog")]
        emit: Stage,
        /// Output file; `-` writes to stdout. Stages other than verilog
        /// default to stdout
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Source map sidecar for verilog output [default: <output>.map.jsonl]
        #[arg(long)]
        source_map: Option<PathBuf>,
        /// Also write the compiler state used by `eval`
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Simulate a unit and write a VCD waveform
    Sim {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Unit to simulate, by emitted module name or path
        #[arg(long)]
        top: String,
        /// Stimulus file with `cycle port expr` lines
        #[arg(long)]
        stimulus: Option<PathBuf>,
        /// Number of clock edges
        #[arg(long, default_value_t = 10)]
        cycles: u64,
        /// Waveform output
        #[arg(long, default_value = "out.vcd")]
        vcd: PathBuf,
        /// Translation sidecar [default: <vcd>.signals.jsonl]
        #[arg(long)]
        sidecar: Option<PathBuf>,
        /// Extra signals to print each cycle, by hierarchical name
        #[arg(long = "watch")]
        watch: Vec<String>,
    },
    /// Evaluate a closed expression against an exported compiler state
    Eval {
        expr: String,
        #[arg(long)]
        state: PathBuf,
        /// Expected type, for expressions whose type is not determined by
        /// themselves
        #[arg(long = "type")]
        ty: Option<String>,
        /// Namespace in which names are resolved [default: first file]
        #[arg(long)]
        namespace: Option<String>,
    },
    /// Render a signal of a VCD waveform as typed values
    Translate {
        vcd: PathBuf,
        #[arg(long)]
        signal: String,
        /// Translation sidecar [default: <vcd>.signals.jsonl]
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
}

struct Reporter {
    format: ErrorFormat,
    color: bool,
}

impl Reporter {
    fn diagnostics(&self, diags: &[Diagnostic], sources: &SourceFiles) {
        if diags.is_empty() {
            return;
        }
        match self.format {
            ErrorFormat::Human => {
                for d in diags {
                    eprint!("{}", render_human(d, sources, self.color));
                }
            }
            ErrorFormat::Machine => eprint!("{}", render_machine(diags, sources)),
        }
    }
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn read_sources(files: &[PathBuf]) -> Result<SourceFiles, ExitCode> {
    let mut sources = SourceFiles::new();
    for f in files {
        match fs::read_to_string(f) {
            Ok(text) => {
                sources.add(f.display().to_string(), text);
            }
            Err(e) => return Err(usage(format!("cannot read `{}`: {e}", f.display()))),
        }
    }
    Ok(sources)
}

fn write(path: &Path, text: &str) -> Result<(), ExitCode> {
    if path == Path::new("-") {
        print!("{text}");
        return Ok(());
    }
    fs::write(path, text).map_err(|e| usage(format!("cannot write `{}`: {e}", path.display())))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn build(
    r: &Reporter,
    files: &[PathBuf],
    emit: Stage,
    output: Option<PathBuf>,
    source_map: Option<PathBuf>,
    state: Option<PathBuf>,
) -> Result<(), ExitCode> {
    let sources = read_sources(files)?;
    if emit != Stage::Verilog && state.is_none() {
        return match driver::emit(&sources, emit) {
            Ok((text, warnings)) => {
                r.diagnostics(&warnings, &sources);
                write(output.as_deref().unwrap_or(Path::new("-")), &text)
            }
            Err(f) => {
                r.diagnostics(&f.warnings, &sources);
                r.diagnostics(&f.errors, &sources);
                Err(ExitCode::from(1))
            }
        };
    }
    let c = match driver::compile(&sources) {
        Ok(c) => c,
        Err(f) => {
            r.diagnostics(&f.warnings, &sources);
            r.diagnostics(&f.errors, &sources);
            return Err(ExitCode::from(1));
        }
    };
    r.diagnostics(&c.warnings, &sources);
    if emit == Stage::Verilog {
        let out = output.unwrap_or_else(|| PathBuf::from("out.sv"));
        write(&out, &emit_program(&c.mir))?;
        let map = source_map.unwrap_or_else(|| {
            if out == Path::new("-") {
                PathBuf::from("out.sv.map.jsonl")
            } else {
                with_suffix(&out, ".map.jsonl")
            }
        });
        write(&map, &emit_source_map(&c.mir, Some(&sources)))?;
    } else {
        let (text, _) = driver::emit(&sources, emit).map_err(|_| ExitCode::from(1))?;
        write(output.as_deref().unwrap_or(Path::new("-")), &text)?;
    }
    if let Some(path) = state {
        write(&path, &CompilerState::export(&sources, &c).to_text())?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn sim(
    r: &Reporter,
    files: &[PathBuf],
    top: &str,
    stimulus_path: Option<PathBuf>,
    cycles: u64,
    vcd_path: &Path,
    sidecar: Option<PathBuf>,
    watch: &[String],
) -> Result<(), ExitCode> {
    let sources = read_sources(files)?;
    let c = match driver::compile(&sources) {
        Ok(c) => c,
        Err(f) => {
            r.diagnostics(&f.warnings, &sources);
            r.diagnostics(&f.errors, &sources);
            return Err(ExitCode::from(1));
        }
    };
    r.diagnostics(&c.warnings, &sources);
    let design = Design::elaborate(&c.mir, top).map_err(usage)?;
    let unit = c.mir.by_name(top).expect("elaborated top exists");
    let head = c.hir.items.unit(unit.id);
    let port_types: Vec<_> = param_ports(&c.hir.items, head)
        .into_iter()
        .map(|(p, t)| (p.name, t))
        .collect();

    let schedule = match stimulus_path {
        None => vec![],
        Some(p) => {
            let text = fs::read_to_string(&p).map_err(|e| usage(format!("cannot read `{}`: {e}", p.display())))?;
            let assignments = stimulus::parse(&text).map_err(usage)?;
            let mut ev = Evaluator::new(sources.clone(), Some(&head.namespace)).map_err(|_| ExitCode::from(1))?;
            match stimulus::schedule(&assignments, &design, &port_types, &mut ev) {
                Ok(s) => s,
                Err(stimulus::StimulusError::Eval { diagnostics, .. }) => {
                    r.diagnostics(&diagnostics, ev.sources());
                    return Err(ExitCode::from(1));
                }
                Err(e) => return Err(usage(e)),
            }
        }
    };
    let trace = interp::run(&design, &schedule, cycles).map_err(usage)?;

    let mut vcd = vec![];
    waves::write_vcd(&trace, &design.top, &mut vcd).map_err(usage)?;
    fs::write(vcd_path, vcd).map_err(|e| usage(format!("cannot write `{}`: {e}", vcd_path.display())))?;
    let sidecar = sidecar.unwrap_or_else(|| with_suffix(vcd_path, ".signals.jsonl"));
    write(&sidecar, &waves::write_sidecar(&trace, &design.top))?;

    let mut shown: Vec<(String, usize)> = design.outputs.clone();
    for w in watch {
        match design.signal_index(w) {
            Some(i) => shown.push((w.clone(), i)),
            None => {
                let names = design.signals.iter().map(|s| s.name.as_str());
                return Err(usage(format!(
                    "no signal `{w}`; candidates: {}",
                    interp::suggestions(w, names).join(", ")
                )));
            }
        }
    }
    for (k, values) in trace.cycles.iter().enumerate() {
        let cols: Vec<String> = shown
            .iter()
            .map(|(n, i)| format!("{n}={}", trace.signals[*i].ty.decode(&values[*i])))
            .collect();
        println!("cycle {k}: {}", cols.join(" "));
    }
    Ok(())
}

fn eval(r: &Reporter, expr: &str, state: &Path, ty: Option<&str>, namespace: Option<&str>) -> Result<(), ExitCode> {
    let text = fs::read_to_string(state).map_err(|e| usage(format!("cannot read `{}`: {e}", state.display())))?;
    let st = CompilerState::from_text(&text).map_err(usage)?;
    let ns = namespace.map(str::to_string).or_else(|| st.default_namespace());
    let mut ev = match Evaluator::from_state(&st, ns.as_deref()) {
        Ok(ev) => ev,
        Err(f) => {
            r.diagnostics(&f.errors, &st.sources());
            return Err(usage("state file does not contain a valid build"));
        }
    };
    let expected = match ty {
        None => None,
        Some(t) => match ev.resolve_type(t) {
            Ok(t) => Some(t),
            Err(ds) => {
                r.diagnostics(&ds, ev.sources());
                return Err(ExitCode::from(1));
            }
        },
    };
    match ev.eval(expr, expected.as_ref()) {
        Ok(v) => {
            println!("{}", v.bits);
            println!("{}", v.value());
            Ok(())
        }
        Err(ds) => {
            r.diagnostics(&ds, ev.sources());
            Err(ExitCode::from(1))
        }
    }
}

fn translate(vcd: &Path, signal: &str, sidecar: Option<PathBuf>) -> Result<(), ExitCode> {
    let sidecar = sidecar.unwrap_or_else(|| with_suffix(vcd, ".signals.jsonl"));
    let text = fs::read_to_string(&sidecar).map_err(|e| usage(format!("cannot read `{}`: {e}", sidecar.display())))?;
    let entries = waves::parse_sidecar(&text).map_err(usage)?;
    let f = fs::File::open(vcd).map_err(|e| usage(format!("cannot read `{}`: {e}", vcd.display())))?;
    let changes = waves::translate(BufReader::new(f), &entries, signal).map_err(usage)?;
    for c in changes {
        println!("{} {}", c.time, c.rendered);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let color = match cli.color {
        Color::Always => true,
        Color::Never => false,
        Color::Auto => std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && std::io::stderr().is_terminal(),
    };
    let r = Reporter {
        format: cli.error_format,
        color,
    };
    let result = match cli.command {
        Command::Build {
            files,
            emit,
            output,
            source_map,
            state,
        } => build(&r, &files, emit, output, source_map, state),
        Command::Sim {
            files,
            top,
            stimulus,
            cycles,
            vcd,
            sidecar,
            watch,
        } => sim(&r, &files, &top, stimulus, cycles, &vcd, sidecar, &watch),
        Command::Eval {
            expr,
            state,
            ty,
            namespace,
        } => eval(&r, &expr, &state, ty.as_deref(), namespace.as_deref()),
        Command::Translate { vcd, signal, sidecar } => translate(&vcd, &signal, sidecar),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
