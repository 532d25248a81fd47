//! Cycle-based reference interpreter over MIR.
//!
//! A design is elaborated by inlining every instance into one flat graph.
//! Each cycle settles the combinational nodes in dependency order, then a
//! rising edge commits registers and memory writes together.

pub mod eval;
pub mod stimulus;
pub mod waves;

use std::collections::HashMap;

use num_bigint::BigInt;
use petgraph::algo::toposort;
use petgraph::graph::DiGraph;
use thiserror::Error;

use crate::bits::Bits;
use crate::mir::{Dir, MirProgram, MirUnit, Op, Stmt, TypeDesc};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("no unit named `{name}`{}", suggest(.suggestions))]
    UnknownTop { name: String, suggestions: Vec<String> },
    #[error("`{port}` is not an input of `{top}`{}", suggest(.suggestions))]
    UnknownPort {
        port: String,
        top: String,
        suggestions: Vec<String>,
    },
    #[error("value for `{port}` has {found} bits, expected {expected}")]
    WidthMismatch { port: String, expected: usize, found: usize },
    #[error("combinational loop while elaborating `{0}`")]
    Loop(String),
    #[error("unit `{0}` is external and cannot be simulated")]
    MissingUnit(String),
}

pub(crate) fn suggest(s: &[String]) -> String {
    if s.is_empty() {
        String::new()
    } else {
        format!("; candidates: {}", s.join(", "))
    }
}

/// Close matches for `name`, or every candidate when none is close.
pub fn suggestions<'a>(name: &str, candidates: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let all: Vec<&str> = candidates.into_iter().collect();
    let close = crate::diagnostics::suggestions(name, all.iter().copied());
    if close.is_empty() {
        let mut all: Vec<String> = all.into_iter().map(str::to_string).collect();
        all.sort();
        all.dedup();
        all
    } else {
        close
    }
}

/// One signal of the flattened design.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatSignal {
    /// Hierarchical name relative to the top, instances joined with `.`.
    pub name: String,
    /// Module that declares the signal and its name there.
    pub module: String,
    pub local: String,
    pub width: usize,
    pub ty: TypeDesc,
}

#[derive(Debug, Clone)]
enum Node {
    Comb { dst: usize, op: Op, srcs: Vec<usize> },
    Const { dst: usize, value: Bits },
    Read { dst: usize, mem: usize, addr: usize },
    RegOut { reg: usize },
}

#[derive(Debug, Clone)]
struct Reg {
    dst: usize,
    reset: Option<(usize, usize)>,
    next: usize,
}

#[derive(Debug, Clone)]
struct Mem {
    width: usize,
    depth: usize,
    ports: Vec<(usize, usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct Design {
    pub top: String,
    pub signals: Vec<FlatSignal>,
    index: HashMap<String, usize>,
    nodes: Vec<Node>,
    regs: Vec<Reg>,
    mems: Vec<Mem>,
    /// Top-level ports in declaration order.
    pub inputs: Vec<(String, usize)>,
    pub outputs: Vec<(String, usize)>,
}

struct Elab<'a> {
    program: &'a MirProgram,
    signals: Vec<FlatSignal>,
    index: HashMap<String, usize>,
    nodes: Vec<Node>,
    regs: Vec<Reg>,
    mems: Vec<Mem>,
    mem_index: HashMap<String, usize>,
}

impl Elab<'_> {
    fn signal(&mut self, prefix: &str, u: &MirUnit, local: &str) -> usize {
        let name = format!("{prefix}{local}");
        if let Some(&i) = self.index.get(&name) {
            return i;
        }
        let info = u.signals.get(local);
        let width = u.width_of(local).unwrap_or(0) as usize;
        let ty = info.map(|i| i.ty.clone()).unwrap_or(TypeDesc::Bits { width: width as u64 });
        self.signals.push(FlatSignal {
            name: name.clone(),
            module: u.name.clone(),
            local: local.to_string(),
            width,
            ty,
        });
        self.index.insert(name, self.signals.len() - 1);
        self.signals.len() - 1
    }

    fn unit(&mut self, u: &MirUnit, prefix: &str) -> Result<(), SimError> {
        for p in &u.ports {
            self.signal(prefix, u, &p.name);
        }
        for s in &u.stmts {
            match s {
                Stmt::Binding { name, op, operands, .. } => {
                    let dst = self.signal(prefix, u, name);
                    let srcs = operands.iter().map(|o| self.signal(prefix, u, o)).collect();
                    self.nodes.push(Node::Comb { dst, op: *op, srcs });
                }
                Stmt::Constant { name, value } => {
                    let dst = self.signal(prefix, u, name);
                    self.nodes.push(Node::Const {
                        dst,
                        value: value.clone(),
                    });
                }
                Stmt::Register { name, reset, next, .. } => {
                    let dst = self.signal(prefix, u, name);
                    let reset = reset
                        .as_ref()
                        .map(|(t, v)| (self.signal(prefix, u, t), self.signal(prefix, u, v)));
                    let next = self.signal(prefix, u, next);
                    self.regs.push(Reg { dst, reset, next });
                    self.nodes.push(Node::RegOut {
                        reg: self.regs.len() - 1,
                    });
                }
                Stmt::Memory {
                    name,
                    width,
                    depth,
                    ports,
                    ..
                } => {
                    let ports = ports
                        .iter()
                        .map(|p| {
                            (
                                self.signal(prefix, u, &p.enable),
                                self.signal(prefix, u, &p.addr),
                                self.signal(prefix, u, &p.data),
                            )
                        })
                        .collect();
                    self.mems.push(Mem {
                        width: *width as usize,
                        depth: *depth as usize,
                        ports,
                    });
                    self.mem_index.insert(format!("{prefix}{name}"), self.mems.len() - 1);
                }
                Stmt::AsyncRead { .. } | Stmt::Instance { .. } => {}
            }
        }
        // Reads and instances refer to memories and ports declared anywhere
        // in the unit, so they are handled once all memories are known.
        for s in &u.stmts {
            match s {
                Stmt::AsyncRead { name, memory, addr, .. } => {
                    let dst = self.signal(prefix, u, name);
                    let addr = self.signal(prefix, u, addr);
                    let mem = self.mem_index[&format!("{prefix}{memory}")];
                    self.nodes.push(Node::Read { dst, mem, addr });
                }
                Stmt::Instance {
                    instance,
                    unit,
                    unit_id,
                    inputs,
                    outputs,
                } => {
                    let child = self
                        .program
                        .unit(*unit_id)
                        .ok_or_else(|| SimError::MissingUnit(unit.clone()))?;
                    let inner = format!("{prefix}{instance}.");
                    self.unit(child, &inner)?;
                    for (port, sig) in inputs {
                        let src = self.signal(prefix, u, sig);
                        let dst = self.signal(&inner, child, port);
                        self.nodes.push(Node::Comb {
                            dst,
                            op: Op::Alias,
                            srcs: vec![src],
                        });
                    }
                    for (port, sig) in outputs {
                        let src = self.signal(&inner, child, port);
                        let dst = self.signal(prefix, u, sig);
                        self.nodes.push(Node::Comb {
                            dst,
                            op: Op::Alias,
                            srcs: vec![src],
                        });
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

impl Design {
    pub fn elaborate(program: &MirProgram, top: &str) -> Result<Design, SimError> {
        let u = program.by_name(top).ok_or_else(|| SimError::UnknownTop {
            name: top.to_string(),
            suggestions: suggestions(
                top,
                program
                    .units
                    .iter()
                    .flat_map(|u| [u.name.as_str(), u.path.as_str()]),
            ),
        })?;
        let mut e = Elab {
            program,
            signals: vec![],
            index: HashMap::new(),
            nodes: vec![],
            regs: vec![],
            mems: vec![],
            mem_index: HashMap::new(),
        };
        e.unit(u, "")?;

        let mut g: DiGraph<usize, ()> = DiGraph::new();
        let ids: Vec<_> = (0..e.nodes.len()).map(|i| g.add_node(i)).collect();
        let mut producer = vec![None; e.signals.len()];
        for (i, n) in e.nodes.iter().enumerate() {
            let dst = match n {
                Node::Comb { dst, .. } | Node::Const { dst, .. } | Node::Read { dst, .. } => *dst,
                Node::RegOut { reg } => e.regs[*reg].dst,
            };
            producer[dst] = Some(i);
        }
        for (i, n) in e.nodes.iter().enumerate() {
            let srcs: Vec<usize> = match n {
                Node::Comb { srcs, .. } => srcs.clone(),
                Node::Read { addr, .. } => vec![*addr],
                Node::RegOut { reg } => e.regs[*reg].reset.map(|(t, v)| vec![t, v]).unwrap_or_default(),
                Node::Const { .. } => vec![],
            };
            for s in srcs {
                if let Some(p) = producer[s] {
                    g.add_edge(ids[p], ids[i], ());
                }
            }
        }
        let order = toposort(&g, None).map_err(|_| SimError::Loop(u.name.clone()))?;
        let mut slots: Vec<Option<Node>> = e.nodes.into_iter().map(Some).collect();
        let nodes = order.into_iter().filter_map(|n| slots[g[n]].take()).collect();

        let port_list = |dir: Dir| -> Vec<(String, usize)> {
            u.ports
                .iter()
                .filter(|p| p.dir == dir)
                .map(|p| (p.name.clone(), e.index[&p.name]))
                .collect()
        };
        Ok(Design {
            top: u.name.clone(),
            inputs: port_list(Dir::In),
            outputs: port_list(Dir::Out),
            signals: e.signals,
            index: e.index,
            nodes,
            regs: e.regs,
            mems: e.mems,
        })
    }

    pub fn signal_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn input_index(&self, port: &str) -> Result<usize, SimError> {
        self.inputs
            .iter()
            .find(|(n, _)| n == port)
            .map(|(_, i)| *i)
            .ok_or_else(|| SimError::UnknownPort {
                port: port.to_string(),
                top: self.top.clone(),
                suggestions: suggestions(port, self.inputs.iter().map(|(n, _)| n.as_str())),
            })
    }
}

/// Register contents, memory contents and the most recently settled values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimState {
    pub cycle: u64,
    pub values: Vec<Bits>,
    regs: Vec<Bits>,
    mems: Vec<Vec<Bits>>,
    inputs: Vec<Option<Bits>>,
}

pub struct Simulator<'d> {
    pub design: &'d Design,
    pub state: SimState,
}

fn eval_op(op: Op, width: usize, a: &[&Bits]) -> Bits {
    let signed_cmp = |f: fn(&BigInt, &BigInt) -> bool| a[0].cmp_bits(a[1], f);
    match op {
        Op::Alias => a[0].clone(),
        Op::Add => a[0].add(a[1]),
        Op::Sub => a[0].sub(a[1]),
        Op::Mul => a[0].mul(a[1]),
        Op::Neg => a[0].neg(),
        Op::And => a[0].and(a[1]),
        Op::Or => a[0].or(a[1]),
        Op::Xor => a[0].xor(a[1]),
        Op::Not => a[0].not(),
        Op::Shl => a[0].shl(a[1]),
        Op::Shr => a[0].shr(a[1]),
        Op::Eq => a[0].eq_bits(a[1]),
        Op::Ne => a[0].eq_bits(a[1]).not(),
        Op::Lt => signed_cmp(|x, y| x < y),
        Op::Le => signed_cmp(|x, y| x <= y),
        Op::Gt => signed_cmp(|x, y| x > y),
        Op::Ge => signed_cmp(|x, y| x >= y),
        Op::Mux => Bits::mux(a[0], a[1], a[2]),
        Op::Concat => Bits::concat(&a.iter().map(|b| (*b).clone()).collect::<Vec<_>>()),
        Op::Slice(o) => a[0].slice(o as usize, width),
        Op::SignExtend => a[0].sign_extend(width),
        Op::Index => match a[1].to_u64() {
            Some(i) if (i as usize + 1) * width <= a[0].width() => a[0].slice(i as usize * width, width),
            _ => Bits::x(width),
        },
    }
}

impl<'d> Simulator<'d> {
    /// Registers and memories start out undefined.
    pub fn new(design: &'d Design) -> Simulator<'d> {
        let state = SimState {
            cycle: 0,
            values: design.signals.iter().map(|s| Bits::x(s.width)).collect(),
            regs: design.regs.iter().map(|r| Bits::x(design.signals[r.dst].width)).collect(),
            mems: design.mems.iter().map(|m| vec![Bits::x(m.width); m.depth]).collect(),
            inputs: vec![None; design.signals.len()],
        };
        let mut sim = Simulator { design, state };
        sim.settle();
        sim
    }

    /// Sets a top-level input; it keeps its value until set again.
    pub fn set_input(&mut self, port: &str, value: Bits) -> Result<(), SimError> {
        let i = self.design.input_index(port)?;
        let expected = self.design.signals[i].width;
        if value.width() != expected {
            return Err(SimError::WidthMismatch {
                port: port.to_string(),
                expected,
                found: value.width(),
            });
        }
        self.state.inputs[i] = Some(value);
        self.settle();
        Ok(())
    }

    pub fn value(&self, name: &str) -> Option<&Bits> {
        self.design.signal_index(name).map(|i| &self.state.values[i])
    }

    pub fn memory(&self, index: usize) -> &[Bits] {
        &self.state.mems[index]
    }

    /// Evaluates every combinational node from the current inputs, register
    /// contents and memory contents.
    pub fn settle(&mut self) {
        let d = self.design;
        let st = &mut self.state;
        for (_, i) in &d.inputs {
            st.values[*i] = st.inputs[*i].clone().unwrap_or_else(|| Bits::x(d.signals[*i].width));
        }
        for n in &d.nodes {
            match n {
                Node::Comb { dst, op, srcs } => {
                    let args: Vec<&Bits> = srcs.iter().map(|s| &st.values[*s]).collect();
                    let v = eval_op(*op, d.signals[*dst].width, &args);
                    debug_assert_eq!(v.width(), d.signals[*dst].width, "{}", d.signals[*dst].name);
                    st.values[*dst] = v;
                }
                Node::Const { dst, value } => st.values[*dst] = value.clone(),
                Node::Read { dst, mem, addr } => {
                    let m = &st.mems[*mem];
                    st.values[*dst] = match st.values[*addr].to_u64() {
                        Some(a) if (a as usize) < m.len() => m[a as usize].clone(),
                        Some(_) => Bits::x(d.signals[*dst].width),
                        None => merge_all(m, d.signals[*dst].width),
                    };
                }
                Node::RegOut { reg } => {
                    let r = &d.regs[*reg];
                    let q = &st.regs[*reg];
                    st.values[r.dst] = match r.reset {
                        Some((t, v)) => Bits::mux(&st.values[t], &st.values[v], q),
                        None => q.clone(),
                    };
                }
            }
        }
    }

    /// One rising clock edge: registers take their next (or reset) value
    /// and memory writes land, later ports overriding earlier ones.
    pub fn edge(&mut self) {
        let d = self.design;
        let st = &mut self.state;
        let regs: Vec<Bits> = d
            .regs
            .iter()
            .map(|r| match r.reset {
                Some((t, v)) => Bits::mux(&st.values[t], &st.values[v], &st.values[r.next]),
                None => st.values[r.next].clone(),
            })
            .collect();
        for (m, mem) in d.mems.iter().zip(st.mems.iter_mut()) {
            for (en, addr, data) in &m.ports {
                let (en, addr, data) = (&st.values[*en], &st.values[*addr], &st.values[*data]);
                match (en.to_bool(), addr.to_u64()) {
                    (Some(false), _) => {}
                    (Some(true), Some(a)) => {
                        if let Some(slot) = mem.get_mut(a as usize) {
                            *slot = data.clone();
                        }
                    }
                    (None, Some(a)) => {
                        if let Some(slot) = mem.get_mut(a as usize) {
                            *slot = Bits::mux(en, data, slot);
                        }
                    }
                    (_, None) => {
                        for slot in mem.iter_mut() {
                            *slot = Bits::mux(&Bits::x(1), data, slot);
                        }
                    }
                }
            }
        }
        st.regs = regs;
        st.cycle += 1;
        self.settle();
    }

    pub fn snapshot(&self) -> Vec<Bits> {
        self.state.values.clone()
    }
}

/// Merge of every word: bits that agree across all of them stay defined.
fn merge_all(words: &[Bits], width: usize) -> Bits {
    let mut it = words.iter();
    let Some(first) = it.next() else {
        return Bits::x(width);
    };
    it.fold(first.clone(), |acc, w| Bits::mux(&Bits::x(1), &acc, w))
}

/// Values of every signal, one entry per cycle. Entry `k` is the settled
/// state after `k` clock edges, with the inputs of cycle `k` applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub signals: Vec<FlatSignal>,
    pub cycles: Vec<Vec<Bits>>,
}

impl Trace {
    pub fn signal(&self, name: &str) -> Option<Vec<&Bits>> {
        let i = self.signals.iter().position(|s| s.name == name)?;
        Some(self.cycles.iter().map(|c| &c[i]).collect())
    }

    /// Signed integer values of a signal, `None` where undefined.
    pub fn ints(&self, name: &str) -> Option<Vec<Option<i128>>> {
        Some(self.signal(name)?.into_iter().map(|b| b.to_i128()).collect())
    }
}

/// Input values applied at given cycles; each holds until replaced.
pub type Schedule = Vec<(u64, String, Bits)>;

/// Simulates `cycles` clock edges.
pub fn run(design: &Design, schedule: &Schedule, cycles: u64) -> Result<Trace, SimError> {
    for (_, port, value) in schedule {
        let i = design.input_index(port)?;
        if design.signals[i].width != value.width() {
            return Err(SimError::WidthMismatch {
                port: port.clone(),
                expected: design.signals[i].width,
                found: value.width(),
            });
        }
    }
    let mut sim = Simulator::new(design);
    let mut out = vec![];
    for cycle in 0..=cycles {
        for (c, port, value) in schedule {
            if *c == cycle {
                sim.set_input(port, value.clone())?;
            }
        }
        out.push(sim.snapshot());
        if cycle < cycles {
            sim.edge();
        }
    }
    Ok(Trace {
        signals: design.signals.clone(),
        cycles: out,
    })
}

#[cfg(test)]
mod tests;
