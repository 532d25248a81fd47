//! Flat single-assignment representation shared by the Verilog backend and
//! the interpreter.

pub mod graph;
pub mod layout;
pub mod lower;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::diagnostics::SourceSpan;
use crate::resolver::{UnitId, UnitKind};

pub use layout::{TypeDesc, Value};
pub use lower::{lower_program, param_ports, unit_ports};

pub type Name = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dir {
    In,
    Out,
}

impl Dir {
    pub fn flip(self) -> Dir {
        match self {
            Dir::In => Dir::Out,
            Dir::Out => Dir::In,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Port {
    pub name: Name,
    pub dir: Dir,
    pub width: u64,
}

/// Combinational operators. Arithmetic operands already have the result
/// width; comparisons produce one bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Alias,
    Add,
    Sub,
    Mul,
    Neg,
    And,
    Or,
    Xor,
    Not,
    Shl,
    Shr,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    /// `sel ? a : b`
    Mux,
    /// Operands most significant first.
    Concat,
    /// Bits `[offset, offset + width)` of the operand.
    Slice(u64),
    SignExtend,
    /// Element `idx` of an array whose elements have the binding's width.
    Index,
}

impl Op {
    pub fn mnemonic(self) -> String {
        match self {
            Op::Alias => "alias".into(),
            Op::Add => "add".into(),
            Op::Sub => "sub".into(),
            Op::Mul => "mul".into(),
            Op::Neg => "neg".into(),
            Op::And => "and".into(),
            Op::Or => "or".into(),
            Op::Xor => "xor".into(),
            Op::Not => "not".into(),
            Op::Shl => "shl".into(),
            Op::Shr => "shr".into(),
            Op::Eq => "eq".into(),
            Op::Ne => "ne".into(),
            Op::Lt => "lt".into(),
            Op::Le => "le".into(),
            Op::Gt => "gt".into(),
            Op::Ge => "ge".into(),
            Op::Mux => "mux".into(),
            Op::Concat => "concat".into(),
            Op::Slice(o) => format!("slice@{o}"),
            Op::SignExtend => "sext".into(),
            Op::Index => "index".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WritePort {
    pub enable: Name,
    pub addr: Name,
    pub data: Name,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Binding {
        name: Name,
        width: u64,
        op: Op,
        operands: Vec<Name>,
    },
    Register {
        name: Name,
        width: u64,
        clock: Name,
        /// Trigger and value; the reset acts asynchronously.
        reset: Option<(Name, Name)>,
        next: Name,
    },
    Memory {
        name: Name,
        width: u64,
        depth: u64,
        clock: Name,
        ports: Vec<WritePort>,
    },
    AsyncRead {
        name: Name,
        width: u64,
        memory: Name,
        addr: Name,
    },
    Instance {
        instance: Name,
        /// Emitted module name of the callee.
        unit: Name,
        unit_id: UnitId,
        inputs: Vec<(Name, Name)>,
        outputs: Vec<(Name, Name)>,
    },
    Constant {
        name: Name,
        value: Bits,
    },
}

impl Stmt {
    /// Names this statement defines.
    pub fn defs(&self) -> Vec<&Name> {
        match self {
            Stmt::Binding { name, .. }
            | Stmt::Register { name, .. }
            | Stmt::Memory { name, .. }
            | Stmt::AsyncRead { name, .. }
            | Stmt::Constant { name, .. } => vec![name],
            Stmt::Instance { outputs, .. } => outputs.iter().map(|(_, n)| n).collect(),
        }
    }

    /// Every name read by this statement, sequential uses included.
    pub fn uses(&self) -> Vec<&Name> {
        match self {
            Stmt::Binding { operands, .. } => operands.iter().collect(),
            Stmt::Register {
                clock, reset, next, ..
            } => {
                let mut v = vec![clock, next];
                if let Some((t, r)) = reset {
                    v.push(t);
                    v.push(r);
                }
                v
            }
            Stmt::Memory { clock, ports, .. } => {
                let mut v = vec![clock];
                for p in ports {
                    v.extend([&p.enable, &p.addr, &p.data]);
                }
                v
            }
            Stmt::AsyncRead { memory, addr, .. } => vec![memory, addr],
            Stmt::Instance { inputs, .. } => inputs.iter().map(|(_, n)| n).collect(),
            Stmt::Constant { .. } => vec![],
        }
    }
}

/// What the backend and the waveform translator know about a name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalInfo {
    pub width: u64,
    /// Source-level name, when the signal stands for a binding.
    pub source: Option<String>,
    pub span: Option<SourceSpan>,
    pub ty: TypeDesc,
    /// Internal temporaries introduced by lowering.
    pub synthetic: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MirUnit {
    pub id: UnitId,
    pub path: String,
    /// Emitted module name.
    pub name: Name,
    pub kind: UnitKind,
    pub ports: Vec<Port>,
    pub stmts: Vec<Stmt>,
    pub signals: BTreeMap<Name, SignalInfo>,
    pub span: SourceSpan,
}

impl MirUnit {
    pub fn port(&self, name: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn width_of(&self, name: &str) -> Option<u64> {
        self.signals.get(name).map(|s| s.width)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MirProgram {
    /// Units in instantiation order: callees before callers.
    pub units: Vec<MirUnit>,
    /// Every named type that occurs in some signal, by printed name.
    pub layouts: BTreeMap<String, TypeDesc>,
    /// Emitted names of external units, which have no body.
    pub externals: BTreeSet<Name>,
}

impl MirProgram {
    pub fn unit(&self, id: UnitId) -> Option<&MirUnit> {
        self.units.iter().find(|u| u.id == id)
    }

    pub fn by_name(&self, name: &str) -> Option<&MirUnit> {
        self.units
            .iter()
            .find(|u| u.name == name || u.path == name)
            .or_else(|| {
                let mut hits = self.units.iter().filter(|u| u.path.rsplit("::").next() == Some(name));
                match (hits.next(), hits.next()) {
                    (Some(u), None) => Some(u),
                    _ => None,
                }
            })
    }
}

/// SystemVerilog keywords that cannot be used as signal or module names.
pub const RESERVED: &[&str] = &[
    "always", "always_comb", "always_ff", "and", "assign", "begin", "bit", "buf", "byte", "case",
    "casex", "casez", "cell", "const", "default", "disable", "do", "else", "end", "endcase",
    "endfunction", "endmodule", "endtask", "enum", "event", "for", "force", "forever", "function",
    "generate", "genvar", "if", "initial", "inout", "input", "int", "integer", "localparam",
    "logic", "longint", "module", "nand", "negedge", "nor", "not", "or", "output", "packed",
    "parameter", "posedge", "real", "reg", "repeat", "return", "shortint", "signed", "string",
    "struct", "supply0", "supply1", "task", "time", "tri", "type", "typedef", "union",
    "unsigned", "var", "void", "wait", "while", "wire", "xnor", "xor",
];

/// Hands out unique names, avoiding reserved words.
#[derive(Debug, Clone, Default)]
pub struct NameGen {
    used: BTreeSet<String>,
    temps: u64,
}

impl NameGen {
    pub fn fresh(&mut self, base: &str) -> Name {
        let base = if base.is_empty() { "_v" } else { base };
        if !RESERVED.contains(&base) && self.used.insert(base.to_string()) {
            return base.to_string();
        }
        let mut i = 1;
        loop {
            let n = format!("{base}_{i}");
            if self.used.insert(n.clone()) {
                return n;
            }
            i += 1;
        }
    }

    pub fn temp(&mut self) -> Name {
        loop {
            let n = format!("_t{}", self.temps);
            self.temps += 1;
            if self.used.insert(n.clone()) {
                return n;
            }
        }
    }
}

/// Module name for a unit path: segments joined by `_`.
pub fn mangle(path: &str) -> String {
    path.split("::").collect::<Vec<_>>().join("_")
}

/// Stable listing for `--emit mir`.
pub fn dump_mir(p: &MirProgram) -> String {
    let mut out = String::new();
    for (name, desc) in &p.layouts {
        let _ = writeln!(out, "layout {name}: {} bits", desc.width());
        if let TypeDesc::Enum {
            disc_width,
            payload_width,
            variants,
            ..
        } = desc
        {
            let _ = writeln!(out, "  discriminant {disc_width} payload {payload_width}");
            for v in variants {
                let fields: Vec<String> = v
                    .fields
                    .iter()
                    .map(|f| format!("{}@{}:{}", f.name, f.offset, f.ty.width()))
                    .collect();
                let _ = writeln!(out, "  {} = {} [{}]", v.name, v.tag, fields.join(", "));
            }
        }
    }
    for e in &p.externals {
        let _ = writeln!(out, "external {e}");
    }
    for u in &p.units {
        let _ = writeln!(out, "unit {} as {} ({})", u.path, u.name, u.kind.keyword());
        for port in &u.ports {
            let dir = match port.dir {
                Dir::In => "in",
                Dir::Out => "out",
            };
            let _ = writeln!(out, "  {dir} {}: {}", port.name, port.width);
        }
        for s in &u.stmts {
            let _ = writeln!(out, "  {}", stmt_text(s));
        }
    }
    out
}

pub fn stmt_text(s: &Stmt) -> String {
    match s {
        Stmt::Binding {
            name,
            width,
            op,
            operands,
        } => format!("bind {name}: {width} = {} {}", op.mnemonic(), operands.join(", ")),
        Stmt::Register {
            name,
            width,
            clock,
            reset,
            next,
        } => {
            let reset = match reset {
                Some((t, v)) => format!(" reset({t}, {v})"),
                None => String::new(),
            };
            format!("reg {name}: {width} clock {clock}{reset} next {next}")
        }
        Stmt::Memory {
            name,
            width,
            depth,
            clock,
            ports,
        } => {
            let ports: Vec<String> = ports
                .iter()
                .map(|p| format!("({}, {}, {})", p.enable, p.addr, p.data))
                .collect();
            format!("mem {name}: {width} x {depth} clock {clock} ports [{}]", ports.join(", "))
        }
        Stmt::AsyncRead {
            name,
            width,
            memory,
            addr,
        } => format!("read {name}: {width} = {memory}[{addr}]"),
        Stmt::Instance {
            instance,
            unit,
            inputs,
            outputs,
            ..
        } => {
            let conn = |v: &[(Name, Name)]| {
                v.iter()
                    .map(|(p, n)| format!("{p}: {n}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            format!("inst {instance} = {unit}({}) -> ({})", conn(inputs), conn(outputs))
        }
        Stmt::Constant { name, value } => format!("const {name}: {} = {value}", value.width()),
    }
}
