//! HIR to MIR lowering.
//!
//! Values are tracked as [`MVal`]s: plain data is one packed signal, while
//! aggregates that contain wires stay split into their parts so each wire
//! keeps its own direction. Unit boundaries flatten such aggregates into one
//! port per leaf.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::toposort;
use petgraph::graphmap::DiGraphMap;

use super::graph::{finish_unit, Summary};
use super::layout::{Layouts, TypeDesc};
use super::*;
use crate::bits::Bits;
use crate::diagnostics::{Diagnostic, ErrorCode, SourceSpan};
use crate::frontend::ast::{BinaryOp, UnaryOp};
use crate::pipeline::StagedUnit;
use crate::resolver::*;
use crate::typecheck::types::from_hir;
use crate::typecheck::{type_name, Type, TypedProgram, TypedUnit};

#[derive(Debug, Clone, PartialEq, Eq)]
enum MVal {
    Sig(Name),
    /// Aggregates containing wires, and zero-width values (no parts).
    Parts(Vec<MVal>),
    Mem(Name),
}

impl MVal {
    fn empty() -> MVal {
        MVal::Parts(vec![])
    }
}

/// One scalar piece of a unit boundary value.
#[derive(Debug, Clone)]
struct Leaf {
    suffix: String,
    ty: Type,
    /// Behind an odd number of `&mut`, so data flows against the value.
    flipped: bool,
}

fn has_memory(items: &ItemTable, t: &Type) -> bool {
    match t {
        Type::Memory(..) => true,
        Type::Tuple(ts) => ts.iter().any(|t| has_memory(items, t)),
        Type::Array(t, _) | Type::Wire(t) | Type::MutWire(t) => has_memory(items, t),
        Type::Named(..) => t.components(items).iter().any(|(_, t)| has_memory(items, t)),
        Type::Bool | Type::Clock | Type::Int(_) => false,
    }
}

/// Component types of an aggregate that is kept split.
fn parts_of(items: &ItemTable, t: &Type) -> Vec<Type> {
    match t {
        Type::Tuple(ts) => ts.clone(),
        Type::Array(t, n) => vec![(**t).clone(); *n as usize],
        Type::Named(..) => t
            .struct_fields(items)
            .unwrap_or_default()
            .into_iter()
            .map(|(_, t)| t)
            .collect(),
        Type::Wire(t) | Type::MutWire(t) => parts_of(items, t),
        _ => vec![],
    }
}

fn leaves(items: &ItemTable, layouts: &mut Layouts, t: &Type, suffix: String, flipped: bool, out: &mut Vec<Leaf>) {
    match t {
        Type::Wire(i) => leaves(items, layouts, i, suffix, flipped, out),
        Type::MutWire(i) => leaves(items, layouts, i, suffix, !flipped, out),
        _ if !t.contains_wire(items) && !has_memory(items, t) => {
            if layouts.width(t) > 0 {
                out.push(Leaf {
                    suffix,
                    ty: t.clone(),
                    flipped,
                })
            }
        }
        Type::Named(..) => {
            for (name, ft) in t.struct_fields(items).unwrap_or_default() {
                leaves(items, layouts, &ft, format!("{suffix}_{name}"), flipped, out);
            }
        }
        _ => {
            for (i, ct) in parts_of(items, t).iter().enumerate() {
                leaves(items, layouts, ct, format!("{suffix}_{i}"), flipped, out);
            }
        }
    }
}

/// Ports of a unit, grouped per parameter plus the output group.
struct PortGroups {
    params: Vec<Vec<(Port, Leaf)>>,
    output: Vec<(Port, Leaf)>,
}

const OUTPUT: &str = "output__";

fn port_groups(items: &ItemTable, layouts: &mut Layouts, head: &UnitHead) -> PortGroups {
    let mut names = NameGen::default();
    let mut group = |base: &str, t: &Type, dir: Dir, layouts: &mut Layouts| {
        let mut ls = vec![];
        leaves(items, layouts, t, String::new(), false, &mut ls);
        ls.into_iter()
            .map(|l| {
                let port = Port {
                    name: names.fresh(&format!("{base}{}", l.suffix)),
                    dir: if l.flipped { dir.flip() } else { dir },
                    width: layouts.width(&l.ty),
                };
                (port, l)
            })
            .collect::<Vec<_>>()
    };
    let params = head
        .params
        .iter()
        .map(|p| group(&p.name, &from_hir(&p.ty, &[]), Dir::In, layouts))
        .collect();
    let output = group(OUTPUT, &from_hir(&head.output, &[]), Dir::Out, layouts);
    PortGroups { params, output }
}

/// The flattened port list of a unit, parameters first.
/// Input ports that carry a whole parameter, with the parameter's type.
pub fn param_ports(items: &ItemTable, head: &UnitHead) -> Vec<(Port, HirType)> {
    let mut layouts = Layouts::new(items);
    let g = port_groups(items, &mut layouts, head);
    g.params
        .into_iter()
        .zip(&head.params)
        .filter_map(|(group, param)| match group.as_slice() {
            [(port, leaf)] if leaf.suffix.is_empty() && port.dir == Dir::In => Some((port.clone(), param.ty.clone())),
            _ => None,
        })
        .collect()
}

pub fn unit_ports(items: &ItemTable, head: &UnitHead) -> Vec<Port> {
    let mut layouts = Layouts::new(items);
    let g = port_groups(items, &mut layouts, head);
    g.params
        .into_iter()
        .flatten()
        .chain(g.output)
        .map(|(p, _)| p)
        .collect()
}

fn callees(unit: &HirUnit) -> BTreeSet<UnitId> {
    let mut out = BTreeSet::new();
    walk_block(&unit.body, &mut |e| {
        if let HExprKind::Call(Callee::Unit(id), _) | HExprKind::Inst { callee: Callee::Unit(id), .. } = &e.kind {
            out.insert(*id);
        }
    });
    out
}

fn module_names(items: &ItemTable) -> Result<BTreeMap<UnitId, Name>, Vec<Diagnostic>> {
    let mut names = NameGen::default();
    let mut out = BTreeMap::new();
    let mut errors = vec![];
    let mut kept: BTreeMap<&str, SourceSpan> = BTreeMap::new();
    for id in items.unit_ids() {
        let h = items.unit(id);
        if h.no_mangle || h.external {
            if let Some(prev) = kept.insert(&h.name, h.name_span) {
                errors.push(
                    Diagnostic::error(
                        ErrorCode::IdentifierCollision,
                        format!("Two unmangled units are both named `{}`", h.name),
                        h.name_span,
                    )
                    .label("emitted under this name")
                    .note_at(prev, "the other unit is declared here"),
                );
            }
            names.fresh(&h.name);
            out.insert(id, h.name.clone());
        }
    }
    for id in items.unit_ids() {
        let h = items.unit(id);
        if !(h.no_mangle || h.external) {
            out.insert(id, names.fresh(&mangle(&h.path)));
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

/// Lowers every unit with a body, callees first.
pub fn lower_program(
    p: &HirProgram,
    typed: &TypedProgram,
    staged: &BTreeMap<UnitId, StagedUnit>,
) -> Result<MirProgram, Vec<Diagnostic>> {
    let modules = module_names(&p.items)?;
    let mut g: DiGraphMap<UnitId, ()> = DiGraphMap::new();
    let mut errors = vec![];
    for (id, unit) in &p.bodies {
        g.add_node(*id);
        for c in callees(unit) {
            if c == *id {
                errors.push(recursive(&p.items, *id));
            }
            g.add_edge(c, *id, ());
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    let order = match toposort(&g, None) {
        Ok(o) => o,
        Err(cycle) => return Err(vec![recursive(&p.items, cycle.node_id())]),
    };

    let mut layouts = Layouts::new(&p.items);
    let mut out = MirProgram::default();
    let mut summaries: BTreeMap<UnitId, Summary> = BTreeMap::new();
    for id in order {
        let Some(unit) = p.bodies.get(&id) else { continue };
        let (Some(t), Some(s)) = (typed.units.get(&id), staged.get(&id)) else {
            continue;
        };
        let head = p.items.unit(id);
        let mut mu = match lower_unit(&p.items, head, unit, t, s, &mut layouts, &modules) {
            Ok(mu) => mu,
            Err(es) => {
                errors.extend(es);
                continue;
            }
        };
        match finish_unit(&mut mu, &summaries) {
            Ok(sum) => {
                summaries.insert(id, sum);
                out.units.push(mu);
            }
            Err(e) => errors.push(e),
        }
    }
    for id in p.items.unit_ids() {
        if p.items.unit(id).external {
            out.externals.insert(modules[&id].clone());
        }
    }
    out.layouts = layouts.used;
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

fn recursive(items: &ItemTable, id: UnitId) -> Diagnostic {
    let h = items.unit(id);
    Diagnostic::error(
        ErrorCode::RecursiveInstance,
        format!("`{}` instantiates itself", h.name),
        h.name_span,
    )
    .label("recursive instantiation")
    .note("hardware units cannot contain themselves, directly or through other units")
}

/// Lowers one unit. Instances refer to callees by their module names.
fn lower_unit<'a>(
    items: &'a ItemTable,
    head: &'a UnitHead,
    unit: &'a HirUnit,
    typed: &'a TypedUnit,
    staged: &'a StagedUnit,
    layouts: &mut Layouts<'a>,
    modules: &BTreeMap<UnitId, Name>,
) -> Result<MirUnit, Vec<Diagnostic>> {
    let groups = port_groups(items, layouts, head);
    let mut l = Lowerer {
        items,
        unit,
        typed,
        staged,
        layouts,
        modules,
        names: NameGen::default(),
        stmts: vec![],
        signals: BTreeMap::new(),
        locals: vec![None; unit.locals.len()],
        versions: BTreeMap::new(),
        clock: None,
        errors: vec![],
    };
    l.boundary_types(head);

    let mut ports = vec![];
    for (i, group) in groups.params.iter().enumerate() {
        let param = &head.params[i];
        let ty = from_hir(&param.ty, &[]);
        let mut names = vec![];
        for (port, leaf) in group {
            l.names.fresh(&port.name);
            let desc = l.layouts.desc(&leaf.ty);
            l.info(&port.name, port.width, desc, Some(&param.name), Some(param.span), false);
            names.push(port.name.clone());
            ports.push(port.clone());
        }
        if ty == Type::Clock && l.clock.is_none() {
            l.clock = names.first().cloned();
        }
        let v = l.build(&ty, &mut names.into_iter());
        if let Some(local) = unit.params.get(i) {
            l.locals[local.0 as usize] = Some(v);
        }
    }
    for (port, leaf) in &groups.output {
        l.names.fresh(&port.name);
        let desc = l.layouts.desc(&leaf.ty);
        l.info(&port.name, port.width, desc, None, Some(head.span), false);
        ports.push(port.clone());
    }

    l.predeclare();
    let out_ty = from_hir(&head.output, &[]);
    let result = l.block(&unit.body, None);
    let mut leaves = vec![];
    l.flatten(&result, &out_ty, &mut leaves);
    for ((port, leaf), value) in groups.output.iter().zip(leaves) {
        let w = port.width;
        if leaf.flipped {
            l.stmts.push(alias(&value, w, &port.name));
        } else {
            l.stmts.push(alias(&port.name, w, &value));
        }
    }

    if !l.errors.is_empty() {
        return Err(l.errors);
    }
    Ok(MirUnit {
        id: unit.id,
        path: head.path.clone(),
        name: modules[&unit.id].clone(),
        kind: head.kind,
        ports,
        stmts: l.stmts,
        signals: l.signals,
        span: head.span,
    })
}

fn alias(name: &str, width: u64, from: &str) -> Stmt {
    Stmt::Binding {
        name: name.to_string(),
        width,
        op: Op::Alias,
        operands: vec![from.to_string()],
    }
}

fn is_constant(e: &HExpr) -> bool {
    match &e.kind {
        HExprKind::Int(_) | HExprKind::Bool(_) => true,
        HExprKind::Tuple(es)
        | HExprKind::Array(es)
        | HExprKind::Struct(_, es)
        | HExprKind::Variant(_, _, es) => es.iter().all(is_constant),
        HExprKind::Unary(op, x) => !matches!(op, UnaryOp::Wire | UnaryOp::Deref) && is_constant(x),
        HExprKind::Binary(_, a, b) => is_constant(a) && is_constant(b),
        HExprKind::Block(b) => b.stmts.is_empty() && b.result.as_ref().is_some_and(is_constant),
        _ => false,
    }
}

struct Lowerer<'a, 'l> {
    items: &'a ItemTable,
    unit: &'a HirUnit,
    typed: &'a TypedUnit,
    staged: &'a StagedUnit,
    layouts: &'l mut Layouts<'a>,
    modules: &'l BTreeMap<UnitId, Name>,
    names: NameGen,
    stmts: Vec<Stmt>,
    signals: BTreeMap<Name, SignalInfo>,
    /// Value of each local at its availability stage.
    locals: Vec<Option<MVal>>,
    versions: BTreeMap<(LocalId, u64), MVal>,
    /// Clock of pipeline stage registers.
    clock: Option<Name>,
    errors: Vec<Diagnostic>,
}

impl<'a, 'l> Lowerer<'a, 'l> {
    fn boundary_types(&mut self, head: &UnitHead) {
        let tys = head
            .params
            .iter()
            .map(|p| (from_hir(&p.ty, &[]), p.span))
            .chain([(from_hir(&head.output, &[]), head.span)]);
        for (t, span) in tys {
            if has_memory(self.items, &t) {
                self.errors.push(
                    Diagnostic::error(
                        ErrorCode::MemoryWireValue,
                        "Memories cannot cross unit boundaries",
                        span,
                    )
                    .label(format!("has type {}", type_name(self.items, &t)))
                    .note("read the memory inside the unit that instantiates it"),
                );
            }
            if t.contains_wire(self.items) && t.enum_variants(self.items).is_some() {
                self.unsupported(span, "enums containing wires");
            }
        }
    }

    fn unsupported(&mut self, span: SourceSpan, what: &str) {
        self.errors.push(
            Diagnostic::error(
                ErrorCode::UnsupportedLinearUse,
                format!("Lowering of {what} is not supported"),
                span,
            )
            .label("used here"),
        );
    }

    fn info(&mut self, name: &str, width: u64, ty: TypeDesc, source: Option<&str>, span: Option<SourceSpan>, synthetic: bool) {
        self.signals.insert(
            name.to_string(),
            SignalInfo {
                width,
                source: source.map(str::to_string),
                span,
                ty,
                synthetic,
            },
        );
    }

    fn width(&mut self, t: &Type) -> u64 {
        self.layouts.width(t)
    }

    /// Plain data of nonzero width, carried in one signal.
    fn is_packed(&mut self, t: &Type) -> bool {
        !t.contains_wire(self.items) && !has_memory(self.items, t) && self.width(t) > 0
    }

    /// Defines a fresh name for a value of type `t`.
    fn define(&mut self, hint: Option<&str>, t: &Type, span: SourceSpan) -> Name {
        let width = self.width(t);
        let desc = self.layouts.desc(t);
        match hint {
            Some(h) => {
                let n = self.names.fresh(h);
                self.info(&n, width, desc, Some(h), Some(span), false);
                n
            }
            None => {
                let n = self.names.temp();
                self.info(&n, width, desc, None, Some(span), true);
                n
            }
        }
    }

    fn temp(&mut self, width: u64, span: SourceSpan) -> Name {
        let n = self.names.temp();
        self.info(&n, width, TypeDesc::Bits { width }, None, Some(span), true);
        n
    }

    fn bind(&mut self, hint: Option<&str>, t: &Type, span: SourceSpan, op: Op, operands: Vec<Name>) -> Name {
        let name = self.define(hint, t, span);
        let width = self.width(t);
        self.stmts.push(Stmt::Binding {
            name: name.clone(),
            width,
            op,
            operands,
        });
        name
    }

    fn bind_raw(&mut self, width: u64, span: SourceSpan, op: Op, operands: Vec<Name>) -> Name {
        let name = self.temp(width, span);
        self.stmts.push(Stmt::Binding {
            name: name.clone(),
            width,
            op,
            operands,
        });
        name
    }

    fn constant(&mut self, hint: Option<&str>, t: Option<&Type>, value: Bits, span: SourceSpan) -> Name {
        let name = match t {
            Some(t) => self.define(hint, t, span),
            None => self.temp(value.width() as u64, span),
        };
        self.stmts.push(Stmt::Constant {
            name: name.clone(),
            value,
        });
        name
    }

    fn sig(&self, v: &MVal) -> Name {
        match v {
            MVal::Sig(n) | MVal::Mem(n) => n.clone(),
            MVal::Parts(_) => panic!("internal: expected a packed value, found {v:?}"),
        }
    }

    fn extend(&mut self, v: Name, from: u64, to: u64, span: SourceSpan) -> Name {
        if from == to {
            v
        } else {
            self.bind_raw(to, span, Op::SignExtend, vec![v])
        }
    }

    /// Rebuilds a value of type `t` from leaf names in [`leaves`] order.
    fn build(&mut self, t: &Type, names: &mut impl Iterator<Item = Name>) -> MVal {
        match t {
            Type::Wire(i) | Type::MutWire(i) => self.build(i, names),
            _ if !t.contains_wire(self.items) && !has_memory(self.items, t) => {
                if self.width(t) > 0 {
                    MVal::Sig(names.next().expect("internal: too few leaves"))
                } else {
                    MVal::empty()
                }
            }
            _ => {
                let parts = parts_of(self.items, t);
                MVal::Parts(parts.iter().map(|p| self.build(p, names)).collect())
            }
        }
    }

    /// Leaf names of a value in [`leaves`] order.
    fn flatten(&mut self, v: &MVal, t: &Type, out: &mut Vec<Name>) {
        match (v, t) {
            (_, Type::Wire(i) | Type::MutWire(i)) => self.flatten(v, i, out),
            (MVal::Sig(n), _) => out.push(n.clone()),
            (MVal::Parts(ps), _) => {
                let tys = parts_of(self.items, t);
                for (p, pt) in ps.iter().zip(tys.iter()) {
                    self.flatten(p, pt, out);
                }
            }
            (MVal::Mem(_), _) => {}
        }
    }

    /// Names every register and forward-declared local up front, since
    /// their uses may precede their definitions.
    fn predeclare(&mut self) {
        let mut blocks = vec![&self.unit.body];
        walk_block(&self.unit.body, &mut |e| {
            if let HExprKind::Block(b) = &e.kind {
                blocks.push(b);
            }
        });
        for b in blocks {
            for s in &b.stmts {
                match &s.kind {
                    HStmtKind::Reg { local, .. } => self.predeclare_local(*local),
                    HStmtKind::Decl(ls) => {
                        for l in ls {
                            self.predeclare_local(*l);
                        }
                    }
                    _ => {}
                }
            }
        }
    }

    fn predeclare_local(&mut self, l: LocalId) {
        let ty = self.typed.local(l).clone();
        let info = self.unit.local(l);
        if self.width(&ty) == 0 {
            self.locals[l.0 as usize] = Some(MVal::empty());
        } else if self.is_packed(&ty) {
            let n = self.define(Some(&info.name), &ty, info.span);
            self.locals[l.0 as usize] = Some(MVal::Sig(n));
        } else {
            self.unsupported(info.span, "forward declarations of wires");
            self.locals[l.0 as usize] = Some(MVal::empty());
        }
    }

    fn is_pipeline(&self) -> bool {
        self.staged.depth > 0
    }

    fn local_at(&mut self, l: LocalId, stage: u64, span: SourceSpan) -> MVal {
        let Some(base) = self.locals[l.0 as usize].clone() else {
            self.unsupported(span, "a use before the definition");
            return MVal::empty();
        };
        if !self.is_pipeline() {
            return base;
        }
        match self.staged.avail_stage[l.0 as usize] {
            Some(avail) if stage > avail => self.version(l, stage, avail, base),
            _ => base,
        }
    }

    /// The value of `l` as seen in stage `s`: `s - avail` registers after
    /// the definition. Chains are shared between uses.
    fn version(&mut self, l: LocalId, s: u64, avail: u64, base: MVal) -> MVal {
        if s <= avail {
            return base;
        }
        if let Some(v) = self.versions.get(&(l, s)) {
            return v.clone();
        }
        let prev = self.version(l, s - 1, avail, base);
        let ty = self.typed.local(l).clone();
        let name = format!("{}_s{s}", self.unit.local(l).name);
        let span = self.unit.local(l).span;
        let v = self.delay(&prev, &ty, &name, span);
        self.versions.insert((l, s), v.clone());
        v
    }

    fn delay(&mut self, v: &MVal, t: &Type, name: &str, span: SourceSpan) -> MVal {
        match v {
            MVal::Sig(n) if t.is_data(self.items) => {
                let reg = self.define(Some(name), t, span);
                let width = self.width(t);
                let clock = self.clock.clone().unwrap_or_default();
                self.stmts.push(Stmt::Register {
                    name: reg.clone(),
                    width,
                    clock,
                    reset: None,
                    next: n.clone(),
                });
                MVal::Sig(reg)
            }
            MVal::Parts(ps) if !ps.is_empty() => {
                let tys = parts_of(self.items, t);
                MVal::Parts(
                    ps.iter()
                        .zip(tys.iter())
                        .enumerate()
                        .map(|(i, (p, pt))| self.delay(p, pt, &format!("{name}_{i}"), span))
                        .collect(),
                )
            }
            _ => v.clone(),
        }
    }

    fn block(&mut self, b: &HBlock, hint: Option<&str>) -> MVal {
        for s in &b.stmts {
            self.stmt(s);
        }
        match &b.result {
            Some(r) => self.expr(r, hint),
            None => MVal::empty(),
        }
    }

    fn stmt(&mut self, s: &HStmt) {
        match &s.kind {
            HStmtKind::Let { pattern, value, .. } => self.lower_let(pattern, value),
            HStmtKind::Reg {
                local,
                clock,
                reset,
                value,
                ..
            } => {
                let Some(MVal::Sig(name)) = self.locals[local.0 as usize].clone() else {
                    return;
                };
                let clock = self.expr(clock, None);
                let clock = self.sig(&clock);
                let reset = reset.as_ref().map(|r| {
                    if !is_constant(&r.value) {
                        self.errors.push(
                            Diagnostic::error(
                                ErrorCode::NonConstantReset,
                                "Register reset value must be a constant",
                                r.value.span,
                            )
                            .label("not a constant expression")
                            .note("use literals, or tuples, structs and variants built from literals"),
                        );
                    }
                    let t = self.expr(&r.trigger, None);
                    let v = self.expr(&r.value, None);
                    (self.sig(&t), self.sig(&v))
                });
                let next = self.expr(value, None);
                let next = self.sig(&next);
                let width = self.signals[&name].width;
                self.stmts.push(Stmt::Register {
                    name,
                    width,
                    clock,
                    reset,
                    next,
                });
            }
            HStmtKind::Set { target, value } => {
                let t = self.expr(target, None);
                let v = self.expr(value, None);
                let tt = self.typed.expr(target.id).clone();
                let mut tl = vec![];
                let mut vl = vec![];
                self.flatten(&t, &tt, &mut tl);
                self.flatten(&v, self.typed.expr(value.id), &mut vl);
                for (tn, vn) in tl.into_iter().zip(vl) {
                    let w = self.signals.get(&tn).map(|s| s.width).unwrap_or(0);
                    self.stmts.push(alias(&tn, w, &vn));
                }
            }
            HStmtKind::Expr(e) => {
                self.expr(e, None);
            }
            HStmtKind::PipelineReg { .. } | HStmtKind::Label(_) | HStmtKind::Decl(_) => {}
        }
    }

    fn lower_let(&mut self, pattern: &HPattern, value: &HExpr) {
        let ty = self.typed.pat(pattern.id).clone();
        match &pattern.kind {
            HPatternKind::Bind(l) if self.unit.local(*l).forward_declared => {
                let v = self.expr(value, None);
                let w = self.width(&ty);
                if let (Some(MVal::Sig(pre)), MVal::Sig(n)) = (&self.locals[l.0 as usize], &v) {
                    self.stmts.push(alias(pre, w, n));
                }
            }
            HPatternKind::Bind(l) => {
                let before = self.stmts.len();
                let name = self.unit.local(*l).name.clone();
                let v = self.expr(value, Some(&name));
                self.bind_local(*l, v, before);
            }
            HPatternKind::Tuple(ps) if matches!(value.kind, HExprKind::Port) => {
                let hint = match ps.first().map(|p| &p.kind) {
                    Some(HPatternKind::Bind(w)) => Some(self.unit.local(*w).name.clone()),
                    _ => None,
                };
                let v = self.expr(value, hint.as_deref());
                let before = self.stmts.len();
                self.pattern(pattern, &v, &ty, None, before);
            }
            _ => {
                let v = self.expr(value, None);
                let before = self.stmts.len();
                self.pattern(pattern, &v, &ty, None, before);
            }
        }
    }

    /// Binds a local, reusing the signal when lowering already named it
    /// after the local and adding an alias otherwise.
    fn bind_local(&mut self, l: LocalId, v: MVal, before: usize) {
        let info = self.unit.local(l);
        let ty = self.typed.local(l).clone();
        let v = match &v {
            MVal::Sig(n) if self.is_packed(&ty) => {
                let fresh = self.stmts[before..].iter().any(|s| s.defs().contains(&n))
                    && self.signals.get(n).and_then(|s| s.source.as_deref()) == Some(info.name.as_str());
                if fresh {
                    v
                } else {
                    let span = info.span;
                    let name = info.name.clone();
                    MVal::Sig(self.bind(Some(&name), &ty, span, Op::Alias, vec![n.clone()]))
                }
            }
            _ => v,
        };
        self.locals[l.0 as usize] = Some(v);
    }

    /// Component `i` of a tuple or struct value.
    fn component(&mut self, v: &MVal, t: &Type, i: usize, hint: Option<&str>, span: SourceSpan) -> MVal {
        if let MVal::Parts(ps) = v {
            return ps.get(i).cloned().unwrap_or_else(MVal::empty);
        }
        let (offset, ct) = match self.layouts.desc(t) {
            TypeDesc::Tuple { elems } => {
                let offs = TypeDesc::tuple_offsets(&elems);
                let ct = match t {
                    Type::Tuple(ts) => ts[i].clone(),
                    _ => unreachable!(),
                };
                (offs[i], ct)
            }
            TypeDesc::Struct { fields, .. } => {
                let ct = t.struct_fields(self.items).unwrap_or_default()[i].1.clone();
                (fields[i].offset, ct)
            }
            other => panic!("internal: component of {other:?}"),
        };
        self.slice(v, offset, &ct, hint, span)
    }

    fn slice(&mut self, v: &MVal, offset: u64, t: &Type, hint: Option<&str>, span: SourceSpan) -> MVal {
        if self.width(t) == 0 {
            return MVal::empty();
        }
        let n = self.sig(v);
        MVal::Sig(self.bind(hint, t, span, Op::Slice(offset), vec![n]))
    }

    fn slice_raw(&mut self, v: &MVal, offset: u64, width: u64, span: SourceSpan) -> Name {
        let n = self.sig(v);
        self.bind_raw(width, span, Op::Slice(offset), vec![n])
    }

    fn pattern_hint(&self, p: &HPattern) -> Option<String> {
        match &p.kind {
            HPatternKind::Bind(l) => Some(self.unit.local(*l).name.clone()),
            _ => None,
        }
    }

    /// Binds the pattern's locals to parts of `v` and, when `tests` is
    /// given, collects one-bit conditions whose conjunction means "matches".
    fn pattern(&mut self, p: &HPattern, v: &MVal, t: &Type, mut tests: Option<&mut Vec<Name>>, before: usize) {
        match &p.kind {
            HPatternKind::Wildcard => {}
            HPatternKind::Bind(l) => self.bind_local(*l, v.clone(), before),
            HPatternKind::Bool(b) => {
                if let Some(tests) = tests {
                    let s = self.sig(v);
                    let s = if *b {
                        s
                    } else {
                        self.bind_raw(1, p.span, Op::Not, vec![s])
                    };
                    tests.push(s);
                }
            }
            HPatternKind::Int(i) => {
                if let Some(tests) = tests {
                    let w = self.width(t) as usize;
                    let c = self.constant(None, None, Bits::from_i128(*i, w), p.span);
                    let s = self.sig(v);
                    tests.push(self.bind_raw(1, p.span, Op::Eq, vec![s, c]));
                }
            }
            HPatternKind::Tuple(ps) => {
                let tys = parts_of(self.items, t);
                for (i, (sp, st)) in ps.iter().zip(tys.iter()).enumerate() {
                    if matches!(sp.kind, HPatternKind::Wildcard) {
                        continue;
                    }
                    let before = self.stmts.len();
                    let hint = self.pattern_hint(sp);
                    let cv = self.component(v, t, i, hint.as_deref(), sp.span);
                    self.pattern(sp, &cv, st, tests.as_deref_mut(), before);
                }
            }
            HPatternKind::Variant(_, vi, ps) => {
                let TypeDesc::Enum {
                    disc_width,
                    payload_width,
                    variants,
                    ..
                } = self.layouts.desc(t)
                else {
                    return;
                };
                if let Some(tests) = tests.as_deref_mut() {
                    if disc_width > 0 {
                        let d = self.slice_raw(v, payload_width, disc_width, p.span);
                        let tag = Bits::from_u64(variants[*vi].tag, disc_width as usize);
                        let c = self.constant(None, None, tag, p.span);
                        tests.push(self.bind_raw(1, p.span, Op::Eq, vec![d, c]));
                    }
                }
                let ftys = t.enum_variants(self.items).unwrap_or_default()[*vi].1.clone();
                for (j, sp) in ps.iter().enumerate() {
                    if matches!(sp.kind, HPatternKind::Wildcard) {
                        continue;
                    }
                    let before = self.stmts.len();
                    let hint = self.pattern_hint(sp);
                    let ft = ftys[j].1.clone();
                    let fv = self.slice(v, variants[*vi].fields[j].offset, &ft, hint.as_deref(), sp.span);
                    self.pattern(sp, &fv, &ft, tests.as_deref_mut(), before);
                }
            }
        }
    }

    fn conjunction(&mut self, tests: Vec<Name>, span: SourceSpan) -> Option<Name> {
        let mut it = tests.into_iter();
        let first = it.next()?;
        Some(it.fold(first, |acc, t| self.bind_raw(1, span, Op::And, vec![acc, t])))
    }

    fn mux(&mut self, c: &Name, a: &MVal, b: &MVal, t: &Type, hint: Option<&str>, span: SourceSpan) -> MVal {
        match (a, b) {
            (MVal::Sig(x), MVal::Sig(y)) => {
                MVal::Sig(self.bind(hint, t, span, Op::Mux, vec![c.clone(), x.clone(), y.clone()]))
            }
            (MVal::Parts(xs), MVal::Parts(ys)) => {
                let tys = parts_of(self.items, t);
                MVal::Parts(
                    xs.iter()
                        .zip(ys)
                        .zip(tys.iter())
                        .map(|((x, y), pt)| self.mux(c, x, y, pt, None, span))
                        .collect(),
                )
            }
            _ => {
                self.unsupported(span, "selecting between memories");
                MVal::empty()
            }
        }
    }

    fn lower_match(&mut self, e: &HExpr, scrutinee: &HExpr, arms: &[HArm], hint: Option<&str>) -> MVal {
        let ty = self.typed.expr(e.id).clone();
        let sty = self.typed.expr(scrutinee.id).clone();
        let sv = match &scrutinee.kind {
            HExprKind::Tuple(es) if !es.is_empty() => {
                MVal::Parts(es.iter().map(|x| self.expr(x, None)).collect())
            }
            _ => self.expr(scrutinee, None),
        };
        let mut conds = vec![];
        let mut values = vec![];
        for (i, arm) in arms.iter().enumerate() {
            let last = i + 1 == arms.len();
            let mut tests = vec![];
            let before = self.stmts.len();
            self.pattern(&arm.pattern, &sv, &sty, (!last).then_some(&mut tests), before);
            let cond = if last { None } else { self.conjunction(tests, arm.pattern.span) };
            conds.push(cond);
            values.push(self.expr(&arm.value, None));
        }
        let end = conds.iter().position(Option::is_none).unwrap_or(conds.len() - 1);
        let mut acc = values[end].clone();
        for i in (0..end).rev() {
            let c = conds[i].clone().expect("conditions before the default arm");
            let h = if i == 0 { hint } else { None };
            acc = self.mux(&c, &values[i], &acc, &ty, h, e.span);
        }
        acc
    }

    fn concat(&mut self, parts: &[MVal], t: &Type, hint: Option<&str>, span: SourceSpan) -> MVal {
        let ops: Vec<Name> = parts
            .iter()
            .filter_map(|p| match p {
                MVal::Sig(n) => Some(n.clone()),
                _ => None,
            })
            .collect();
        MVal::Sig(self.bind(hint, t, span, Op::Concat, ops))
    }

    fn aggregate(&mut self, es: &[HExpr], t: &Type, hint: Option<&str>, span: SourceSpan, reverse: bool) -> MVal {
        let mut vs: Vec<MVal> = es.iter().map(|x| self.expr(x, None)).collect();
        if !self.is_packed(t) {
            return if self.width(t) == 0 && !t.contains_wire(self.items) {
                MVal::empty()
            } else {
                MVal::Parts(vs)
            };
        }
        if reverse {
            vs.reverse();
        }
        self.concat(&vs, t, hint, span)
    }

    fn stage(&self, e: &HExpr) -> u64 {
        if self.is_pipeline() {
            self.staged.stage_of(e.id)
        } else {
            0
        }
    }

    fn expr(&mut self, e: &HExpr, hint: Option<&str>) -> MVal {
        let ty = self.typed.expr(e.id).clone();
        match &e.kind {
            HExprKind::Int(v) => {
                let w = self.width(&ty) as usize;
                MVal::Sig(self.constant(hint, Some(&ty), Bits::from_i128(*v, w), e.span))
            }
            HExprKind::Bool(b) => MVal::Sig(self.constant(hint, Some(&ty), Bits::from_bool(*b), e.span)),
            HExprKind::Local(l) => {
                let s = self.stage(e);
                self.local_at(*l, s, e.span)
            }
            HExprKind::StageRef { local, .. } => {
                let s = self.staged.stage_refs.get(&e.id).copied().unwrap_or(0);
                self.local_at(*local, s, e.span)
            }
            HExprKind::Tuple(es) | HExprKind::Struct(_, es) => self.aggregate(es, &ty, hint, e.span, false),
            HExprKind::Array(es) => self.aggregate(es, &ty, hint, e.span, true),
            HExprKind::Variant(_, vi, es) => {
                let vs: Vec<MVal> = es.iter().map(|x| self.expr(x, None)).collect();
                let TypeDesc::Enum {
                    disc_width,
                    payload_width,
                    variants,
                    ..
                } = self.layouts.desc(&ty)
                else {
                    self.unsupported(e.span, "this variant");
                    return MVal::empty();
                };
                let used: u64 = variants[*vi].fields.iter().map(|f| f.ty.width()).sum();
                let mut parts = vec![];
                if disc_width > 0 {
                    let tag = Bits::from_u64(variants[*vi].tag, disc_width as usize);
                    parts.push(MVal::Sig(self.constant(None, None, tag, e.span)));
                }
                if payload_width > used {
                    let pad = Bits::x((payload_width - used) as usize);
                    parts.push(MVal::Sig(self.constant(None, None, pad, e.span)));
                }
                parts.extend(vs);
                if parts.is_empty() {
                    return MVal::empty();
                }
                self.concat(&parts, &ty, hint, e.span)
            }
            HExprKind::Field(b, name) => {
                let bt = self.typed.expr(b.id).clone();
                let bv = self.expr(b, None);
                let i = bt
                    .struct_fields(self.items)
                    .unwrap_or_default()
                    .iter()
                    .position(|(n, _)| *n == name.name)
                    .unwrap_or(0);
                self.component(&bv, &bt, i, hint, e.span)
            }
            HExprKind::TupleIndex(b, i) => {
                let bt = self.typed.expr(b.id).clone();
                let bv = self.expr(b, None);
                self.component(&bv, &bt, *i as usize, hint, e.span)
            }
            HExprKind::Index(a, i) => {
                let at = self.typed.expr(a.id).clone();
                let av = self.expr(a, None);
                let ew = self.width(&ty);
                let constant = match i.kind {
                    HExprKind::Int(k) => Some(k),
                    _ => None,
                };
                match (&av, constant) {
                    (MVal::Parts(ps), Some(k)) => ps.get(k as usize).cloned().unwrap_or_else(MVal::empty),
                    (MVal::Parts(_), None) => {
                        self.unsupported(e.span, "dynamic indexing into arrays of wires");
                        MVal::empty()
                    }
                    (_, Some(k)) if ew > 0 => {
                        let n = match at {
                            Type::Array(_, n) => n,
                            _ => 0,
                        };
                        if (k as u64) < n {
                            self.slice(&av, k as u64 * ew, &ty, hint, e.span)
                        } else {
                            MVal::Sig(self.constant(hint, Some(&ty), Bits::x(ew as usize), e.span))
                        }
                    }
                    _ if ew == 0 => MVal::empty(),
                    _ => {
                        let iv = self.expr(i, None);
                        let (a, i) = (self.sig(&av), self.sig(&iv));
                        MVal::Sig(self.bind(hint, &ty, e.span, Op::Index, vec![a, i]))
                    }
                }
            }
            HExprKind::Unary(op, x) => match op {
                UnaryOp::Deref | UnaryOp::Wire => self.expr(x, hint),
                UnaryOp::Neg => {
                    let xt = self.typed.expr(x.id).clone();
                    let xv = self.expr(x, None);
                    let (xw, w) = (self.width(&xt), self.width(&ty));
                    let xs = self.sig(&xv);
                    let xs = self.extend(xs, xw, w, e.span);
                    MVal::Sig(self.bind(hint, &ty, e.span, Op::Neg, vec![xs]))
                }
                UnaryOp::Not | UnaryOp::BitNot => {
                    let xv = self.expr(x, None);
                    let xs = self.sig(&xv);
                    MVal::Sig(self.bind(hint, &ty, e.span, Op::Not, vec![xs]))
                }
            },
            HExprKind::Binary(op, a, b) => self.binary(*op, a, b, &ty, hint, e.span),
            HExprKind::If {
                cond,
                then,
                otherwise,
            } => {
                let c = self.expr(cond, None);
                let c = self.sig(&c);
                let t = self.expr(then, None);
                let o = self.expr(otherwise, None);
                self.mux(&c, &t, &o, &ty, hint, e.span)
            }
            HExprKind::Match { scrutinee, arms } => self.lower_match(e, scrutinee, arms, hint),
            HExprKind::Block(b) => self.block(b, hint),
            HExprKind::Call(callee, args) | HExprKind::Inst { callee, args, .. } => match callee {
                Callee::Unit(id) => self.instance(*id, args, &ty, hint, e.span),
                Callee::Intrinsic(Intrinsic::Trunc) => {
                    let v = self.expr(&args[0], None);
                    if self.width(&ty) == 0 {
                        return MVal::empty();
                    }
                    self.slice(&v, 0, &ty, hint, e.span)
                }
                Callee::Intrinsic(Intrinsic::ClockedMemory) => self.memory(args, &ty, hint, e.span),
                Callee::Intrinsic(Intrinsic::ReadMemory) => {
                    let m = self.expr(&args[0], None);
                    let a = self.expr(&args[1], None);
                    let (m, a) = (self.sig(&m), self.sig(&a));
                    let name = self.define(hint, &ty, e.span);
                    let width = self.width(&ty);
                    self.stmts.push(Stmt::AsyncRead {
                        name: name.clone(),
                        width,
                        memory: m,
                        addr: a,
                    });
                    MVal::Sig(name)
                }
            },
            HExprKind::Port => {
                let inner = match &ty {
                    Type::Tuple(ts) => match &ts[1] {
                        Type::Wire(i) => (**i).clone(),
                        other => other.clone(),
                    },
                    other => other.clone(),
                };
                let mut ls = vec![];
                leaves(self.items, self.layouts, &inner, String::new(), false, &mut ls);
                let base = hint.unwrap_or("port").to_string();
                let names: Vec<Name> = ls
                    .iter()
                    .map(|l| {
                        let n = self.names.fresh(&format!("{base}{}", l.suffix));
                        let width = self.width(&l.ty);
                        let desc = self.layouts.desc(&l.ty);
                        self.info(&n, width, desc, hint, Some(e.span), hint.is_none());
                        n
                    })
                    .collect();
                let v = self.build(&inner, &mut names.into_iter());
                MVal::Parts(vec![v.clone(), v])
            }
        }
    }

    fn binary(&mut self, op: BinaryOp, a: &HExpr, b: &HExpr, ty: &Type, hint: Option<&str>, span: SourceSpan) -> MVal {
        let at = self.typed.expr(a.id).clone();
        let av = self.expr(a, None);
        let bv = self.expr(b, None);
        let (x, y) = (self.sig(&av), self.sig(&bv));
        let mop = match op {
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul => {
                let bt = self.typed.expr(b.id).clone();
                let w = self.width(ty);
                let (aw, bw) = (self.width(&at), self.width(&bt));
                let x = self.extend(x, aw, w, span);
                let y = self.extend(y, bw, w, span);
                let mop = match op {
                    BinaryOp::Add => Op::Add,
                    BinaryOp::Sub => Op::Sub,
                    _ => Op::Mul,
                };
                return MVal::Sig(self.bind(hint, ty, span, mop, vec![x, y]));
            }
            BinaryOp::Eq => Op::Eq,
            BinaryOp::Ne => Op::Ne,
            BinaryOp::Lt => Op::Lt,
            BinaryOp::Gt => Op::Gt,
            BinaryOp::Le => Op::Le,
            BinaryOp::Ge => Op::Ge,
            BinaryOp::LogicAnd | BinaryOp::BitAnd => Op::And,
            BinaryOp::LogicOr | BinaryOp::BitOr => Op::Or,
            BinaryOp::BitXor => Op::Xor,
            BinaryOp::Shl => Op::Shl,
            BinaryOp::Shr => Op::Shr,
        };
        MVal::Sig(self.bind(hint, ty, span, mop, vec![x, y]))
    }

    fn memory(&mut self, args: &[HExpr], ty: &Type, hint: Option<&str>, span: SourceSpan) -> MVal {
        let clk = self.expr(&args[0], None);
        let clock = self.sig(&clk);
        let (elem, depth) = match ty {
            Type::Memory(t, d) => ((**t).clone(), *d),
            _ => (Type::unit(), 0),
        };
        let pt = self.typed.expr(args[1].id).clone();
        let (tuple_ty, n) = match &pt {
            Type::Array(t, n) => ((**t).clone(), *n),
            _ => (Type::unit(), 0),
        };
        let mut ports = vec![];
        if let HExprKind::Array(es) = &args[1].kind {
            for el in es {
                let parts: Vec<MVal> = match &el.kind {
                    HExprKind::Tuple(fs) if fs.len() == 3 => fs.iter().map(|f| self.expr(f, None)).collect(),
                    _ => {
                        let v = self.expr(el, None);
                        (0..3).map(|i| self.component(&v, &tuple_ty, i, None, el.span)).collect()
                    }
                };
                ports.push(WritePort {
                    enable: self.sig(&parts[0]),
                    addr: self.sig(&parts[1]),
                    data: self.sig(&parts[2]),
                });
            }
        } else {
            let all = self.expr(&args[1], None);
            let tw = self.width(&tuple_ty);
            for i in 0..n {
                let el = self.slice(&all, i * tw, &tuple_ty, None, span);
                let parts: Vec<MVal> = (0..3).map(|k| self.component(&el, &tuple_ty, k, None, span)).collect();
                ports.push(WritePort {
                    enable: self.sig(&parts[0]),
                    addr: self.sig(&parts[1]),
                    data: self.sig(&parts[2]),
                });
            }
        }
        let width = self.width(&elem);
        let name = match hint {
            Some(h) => self.names.fresh(h),
            None => self.names.temp(),
        };
        let desc = self.layouts.desc(ty);
        self.info(&name, width, desc, hint, Some(span), hint.is_none());
        self.stmts.push(Stmt::Memory {
            name: name.clone(),
            width,
            depth,
            clock,
            ports,
        });
        MVal::Mem(name)
    }

    fn instance(&mut self, id: UnitId, args: &[HExpr], ty: &Type, hint: Option<&str>, span: SourceSpan) -> MVal {
        let head = self.items.unit(id);
        let groups = port_groups(self.items, self.layouts, head);
        let mut inputs = vec![];
        let mut outputs = vec![];
        for (arg, group) in args.iter().zip(&groups.params) {
            let v = self.expr(arg, None);
            let at = self.typed.expr(arg.id).clone();
            let mut names = vec![];
            self.flatten(&v, &at, &mut names);
            for ((port, _), n) in group.iter().zip(names) {
                match port.dir {
                    Dir::In => inputs.push((port.name.clone(), n)),
                    Dir::Out => outputs.push((port.name.clone(), n)),
                }
            }
        }
        let single = groups.output.len() == 1;
        let mut result = vec![];
        for (port, leaf) in &groups.output {
            let n = if single && !leaf.flipped {
                self.define(hint, &leaf.ty, span)
            } else {
                self.define(None, &leaf.ty, span)
            };
            match port.dir {
                Dir::Out => outputs.push((port.name.clone(), n.clone())),
                Dir::In => inputs.push((port.name.clone(), n.clone())),
            }
            result.push(n);
        }
        let instance = self.names.fresh(&format!("{}_i", head.name));
        self.stmts.push(Stmt::Instance {
            instance,
            unit: self.modules[&id].clone(),
            unit_id: id,
            inputs,
            outputs,
        });
        self.build(ty, &mut result.into_iter())
    }
}
