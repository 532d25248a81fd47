//! SystemVerilog emission from MIR, plus the JSON-lines source map.
//!
//! The output sticks to a small subset: modules with `logic` ports and
//! declarations, continuous assignments, `always_ff` blocks, memory arrays
//! and named-port instances. [`checker`] validates text against it.

pub mod checker;

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::diagnostics::{span_to_line_col, SourceFiles};
use crate::mir::{Dir, MirProgram, MirUnit, Op, Stmt, TypeDesc};

pub use checker::check_subset;

pub fn emit_program(m: &MirProgram) -> String {
    let mut out = String::new();
    for (i, u) in m.units.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&emit_unit(u));
    }
    out
}

fn range(width: u64) -> String {
    format!("[{}:0]", width.saturating_sub(1))
}

pub fn literal(b: &Bits) -> String {
    format!("{}'b{}", b.width(), b)
}

pub fn emit_unit(u: &MirUnit) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "module {} (", u.name);
    let ports: Vec<String> = u
        .ports
        .iter()
        .map(|p| {
            let dir = match p.dir {
                Dir::In => "input",
                Dir::Out => "output",
            };
            format!("    {dir} logic {} {}", range(p.width), p.name)
        })
        .collect();
    if !ports.is_empty() {
        let _ = writeln!(out, "{}", ports.join(",\n"));
    }
    let _ = writeln!(out, ");");

    for s in &u.stmts {
        match s {
            Stmt::Memory {
                name, width, depth, ..
            } => {
                let _ = writeln!(out, "    logic {} {name} [0:{}];", range(*width), depth.saturating_sub(1));
            }
            _ => {
                for d in s.defs() {
                    if u.port(d).is_none() {
                        let w = u.width_of(d).unwrap_or(1);
                        let _ = writeln!(out, "    logic {} {d};", range(w));
                    }
                }
            }
        }
    }
    for s in &u.stmts {
        out.push_str(&emit_stmt(u, s));
    }
    let _ = writeln!(out, "endmodule");
    out
}

fn emit_stmt(u: &MirUnit, s: &Stmt) -> String {
    match s {
        Stmt::Binding {
            name,
            width,
            op,
            operands,
        } => format!("    assign {name} = {};\n", expr(u, *width, *op, operands)),
        Stmt::Constant { name, value } => format!("    assign {name} = {};\n", literal(value)),
        Stmt::Register {
            name,
            clock,
            reset,
            next,
            ..
        } => match reset {
            Some((t, v)) => format!(
                "    always_ff @(posedge {clock}, posedge {t}) begin\n        if ({t}) {name} <= {v};\n        else {name} <= {next};\n    end\n"
            ),
            None => format!("    always_ff @(posedge {clock}) begin\n        {name} <= {next};\n    end\n"),
        },
        Stmt::Memory {
            name, clock, ports, ..
        } => {
            let mut s = format!("    always_ff @(posedge {clock}) begin\n");
            for p in ports {
                let _ = writeln!(s, "        if ({}) {name}[{}] <= {};", p.enable, p.addr, p.data);
            }
            s.push_str("    end\n");
            s
        }
        Stmt::AsyncRead {
            name, memory, addr, ..
        } => format!("    assign {name} = {memory}[{addr}];\n"),
        Stmt::Instance {
            instance,
            unit,
            inputs,
            outputs,
            ..
        } => {
            let conns: Vec<String> = inputs
                .iter()
                .chain(outputs)
                .map(|(p, n)| format!(".{p}({n})"))
                .collect();
            format!("    {unit} {instance} ({});\n", conns.join(", "))
        }
    }
}

fn expr(u: &MirUnit, width: u64, op: Op, ops: &[String]) -> String {
    let a = || ops[0].as_str();
    let b = || ops[1].as_str();
    let signed = |x: &str| format!("$signed({x})");
    match op {
        Op::Alias => a().to_string(),
        Op::Add => format!("{} + {}", a(), b()),
        Op::Sub => format!("{} - {}", a(), b()),
        Op::Mul => format!("{} * {}", a(), b()),
        Op::Neg => format!("-{}", a()),
        Op::And => format!("{} & {}", a(), b()),
        Op::Or => format!("{} | {}", a(), b()),
        Op::Xor => format!("{} ^ {}", a(), b()),
        Op::Not => format!("~{}", a()),
        Op::Shl => format!("{} << {}", a(), b()),
        Op::Shr => format!("{} >>> {}", signed(a()), b()),
        Op::Eq => format!("{} == {}", a(), b()),
        Op::Ne => format!("{} != {}", a(), b()),
        Op::Lt => format!("{} < {}", signed(a()), signed(b())),
        Op::Le => format!("{} <= {}", signed(a()), signed(b())),
        Op::Gt => format!("{} > {}", signed(a()), signed(b())),
        Op::Ge => format!("{} >= {}", signed(a()), signed(b())),
        Op::Mux => format!("{} ? {} : {}", ops[0], ops[1], ops[2]),
        Op::Concat => format!("{{{}}}", ops.join(", ")),
        Op::Slice(o) => format!("{}[{}:{o}]", a(), o + width - 1),
        Op::SignExtend => {
            let from = u.width_of(a()).unwrap_or(width);
            format!("{{{{{}{{{}[{}]}}}}, {}}}", width - from, a(), from - 1, a())
        }
        Op::Index => format!("{}[{} * {width} +: {width}]", a(), b()),
    }
}

/// One source map line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceMapEntry {
    pub module: String,
    pub signal: String,
    pub source: Option<String>,
    pub file: Option<String>,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub start: Option<u32>,
    pub end: Option<u32>,
    pub synthetic: bool,
    pub width: u64,
    #[serde(rename = "type")]
    pub ty: TypeDesc,
}

/// Every named signal of every module: ports, bindings, registers,
/// memories and instance outputs.
pub fn source_map(m: &MirProgram, sources: Option<&SourceFiles>) -> Vec<SourceMapEntry> {
    let mut out = vec![];
    for u in &m.units {
        for (name, info) in &u.signals {
            let file = info.span.and_then(|s| sources.and_then(|f| f.get(s.file)));
            let lc = info
                .span
                .zip(file)
                .and_then(|(s, f)| span_to_line_col(&f.content, s).ok());
            out.push(SourceMapEntry {
                module: u.name.clone(),
                signal: name.clone(),
                source: info.source.clone(),
                file: file.map(|f| f.name.clone()),
                line: lc.as_ref().map(|l| l.line_start),
                column: lc.as_ref().map(|l| l.col_start),
                start: info.span.map(|s| s.start),
                end: info.span.map(|s| s.end),
                synthetic: info.synthetic,
                width: info.width,
                ty: info.ty.clone(),
            });
        }
    }
    out
}

pub fn emit_source_map(m: &MirProgram, sources: Option<&SourceFiles>) -> String {
    let mut out = String::new();
    for e in source_map(m, sources) {
        out.push_str(&serde_json::to_string(&e).expect("source map entries serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_source_map(text: &str) -> Result<Vec<SourceMapEntry>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

#[cfg(test)]
mod tests;
