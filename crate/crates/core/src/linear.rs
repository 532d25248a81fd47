//! Exactly-once checking of mutable wires.
//!
//! Every expression that creates a linear resource (a linear parameter, a
//! unit result or `port`) gets a consumption tree mirroring the linear part
//! of its type. Aliases point into trees; `set`, argument passing and
//! returning mark nodes consumed. A node may be consumed once, counting
//! consumption of its ancestors and descendants, and every leaf must end up
//! consumed.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::diagnostics::{Diagnostic, ErrorCode, SourceSpan};
use crate::resolver::*;
use crate::typecheck::{type_name, Type, TypedProgram, TypedUnit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub parent: Option<NodeId>,
    /// Field name or tuple index; empty for roots.
    pub label: String,
    pub children: Vec<NodeId>,
    pub consumed: Option<SourceSpan>,
    /// Set when a consumption hit an already consumed node.
    pub doubly_consumed: bool,
    pub ty: Type,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    pub root: NodeId,
    pub name: String,
    pub origin: SourceSpan,
}

/// Consumption trees of one unit, after marking.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinearUnit {
    pub nodes: Vec<Node>,
    pub trees: Vec<Tree>,
    /// Every consumption site with the nodes it consumed, in body order.
    pub sites: Vec<(SourceSpan, Vec<NodeId>)>,
}

impl LinearUnit {
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0 as usize]
    }

    fn tree_of(&self, mut id: NodeId) -> &Tree {
        while let Some(p) = self.node(id).parent {
            id = p;
        }
        self.trees.iter().find(|t| t.root == id).unwrap()
    }

    /// User-facing path such as `mem.addr`.
    pub fn path(&self, id: NodeId) -> String {
        let n = self.node(id);
        match n.parent {
            None => self.tree_of(id).name.clone(),
            Some(p) => format!("{}.{}", self.path(p), n.label),
        }
    }

    fn ancestors(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = vec![];
        let mut cur = self.node(id).parent;
        while let Some(p) = cur {
            out.push(p);
            cur = self.node(p).parent;
        }
        out
    }

    fn descendants(&self, id: NodeId, out: &mut Vec<NodeId>) {
        for c in &self.node(id).children {
            out.push(*c);
            self.descendants(*c, out);
        }
    }

    /// A node counts as consumed if it or an ancestor was consumed.
    pub fn is_consumed(&self, id: NodeId) -> bool {
        self.node(id).consumed.is_some()
            || self.ancestors(id).iter().any(|a| self.node(*a).consumed.is_some())
    }

    pub fn leaves(&self, root: NodeId) -> Vec<NodeId> {
        let mut all = vec![root];
        self.descendants(root, &mut all);
        all.into_iter().filter(|n| self.node(*n).is_leaf()).collect()
    }
}

/// Abstract value of an expression as far as linearity is concerned.
#[derive(Debug, Clone)]
enum Lin {
    Node(NodeId),
    /// A compound built from other values, e.g. a tuple expression.
    Group(Vec<(String, Option<Lin>)>),
}

pub fn check_program(p: &HirProgram, typed: &TypedProgram) -> Result<BTreeMap<UnitId, LinearUnit>, Vec<Diagnostic>> {
    let mut out = BTreeMap::new();
    let mut errors = vec![];
    for (id, unit) in &p.bodies {
        let t = &typed.units[id];
        match check_unit(&p.items, unit, t) {
            Ok(l) => {
                out.insert(*id, l);
            }
            Err(es) => errors.extend(es),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

pub fn check_unit(items: &ItemTable, unit: &HirUnit, typed: &TypedUnit) -> Result<LinearUnit, Vec<Diagnostic>> {
    let (lu, errors) = analyze(items, unit, typed);
    if errors.is_empty() {
        Ok(lu)
    } else {
        Err(errors)
    }
}

/// Builds and marks the trees, returning them along with any errors.
pub fn analyze(items: &ItemTable, unit: &HirUnit, typed: &TypedUnit) -> (LinearUnit, Vec<Diagnostic>) {
    let mut c = Checker {
        items,
        unit,
        typed,
        lu: LinearUnit::default(),
        locals: BTreeMap::new(),
        conditional: 0,
        errors: vec![],
    };
    for p in &unit.params {
        let info = unit.local(*p);
        let ty = typed.local(*p).clone();
        if let Some(root) = c.new_tree(&ty, info.name.clone(), info.span) {
            c.locals.insert(*p, Lin::Node(root));
        }
    }
    let result = c.block(&unit.body);
    if let Some(v) = result {
        let span = unit.body.result.as_ref().map(|r| r.span).unwrap_or(unit.body.span);
        c.consume(&v, span);
    }
    c.check_all_consumed();
    (c.lu, c.errors)
}

struct Checker<'a> {
    items: &'a ItemTable,
    unit: &'a HirUnit,
    typed: &'a TypedUnit,
    lu: LinearUnit,
    locals: BTreeMap<LocalId, Lin>,
    /// Depth of if/match arms enclosing the current expression.
    conditional: u32,
    errors: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn build(&mut self, ty: &Type, parent: Option<NodeId>, label: String) -> Option<NodeId> {
        if !ty.is_linear(self.items) {
            return None;
        }
        let id = NodeId(self.lu.nodes.len() as u32);
        self.lu.nodes.push(Node {
            parent,
            label,
            children: vec![],
            consumed: None,
            doubly_consumed: false,
            ty: ty.clone(),
        });
        let parts: Vec<(String, Type)> = match ty {
            Type::Tuple(ts) => ts.iter().cloned().enumerate().map(|(i, t)| (i.to_string(), t)).collect(),
            Type::Array(t, n) => (0..*n).map(|i| (format!("[{i}]"), (**t).clone())).collect(),
            Type::Named(..) => ty.struct_fields(self.items).unwrap_or_default(),
            _ => vec![],
        };
        for (l, t) in parts {
            if let Some(c) = self.build(&t, Some(id), l) {
                self.lu.nodes[id.0 as usize].children.push(c);
            }
        }
        Some(id)
    }

    fn new_tree(&mut self, ty: &Type, name: String, origin: SourceSpan) -> Option<NodeId> {
        let root = self.build(ty, None, String::new())?;
        self.lu.trees.push(Tree { root, name, origin });
        Some(root)
    }

    fn unsupported(&mut self, span: SourceSpan, what: &str) {
        self.errors.push(
            Diagnostic::error(
                ErrorCode::UnsupportedLinearUse,
                format!("Unsupported use of a mutable wire: {what}"),
                span,
            )
            .label("value contains a mutable wire"),
        );
    }

    fn consume(&mut self, v: &Lin, site: SourceSpan) {
        match v {
            Lin::Group(parts) => {
                for (_, p) in parts {
                    if let Some(p) = p {
                        self.consume(p, site);
                    }
                }
            }
            Lin::Node(id) => {
                let id = *id;
                if self.conditional > 0 {
                    let path = self.lu.path(id);
                    self.errors.push(
                        Diagnostic::error(
                            ErrorCode::ConditionalConsumption,
                            format!("`{path}` is consumed conditionally"),
                            site,
                        )
                        .label("consumed inside an if or match arm")
                        .note("a mutable wire must be set exactly once every clock cycle; set it unconditionally and select the value instead"),
                    );
                }
                let mut related = self.lu.ancestors(id);
                related.push(id);
                self.lu.descendants(id, &mut related);
                let previous = related
                    .iter()
                    .find_map(|n| self.lu.node(*n).consumed.map(|s| (*n, s)));
                if let Some((prev_node, prev_site)) = previous {
                    let path = self.lu.path(id);
                    let prev_path = self.lu.path(prev_node);
                    let mut d = Diagnostic::error(
                        ErrorCode::DoubleConsumption,
                        format!("`{path}` is consumed more than once"),
                        site,
                    )
                    .label(format!("`{path}` consumed here"));
                    d = d.note_at(prev_site, format!("`{prev_path}` was already consumed here"));
                    self.errors.push(d);
                    for n in related {
                        if self.lu.node(n).consumed.is_some() {
                            self.lu.nodes[n.0 as usize].doubly_consumed = true;
                        }
                    }
                    self.lu.nodes[id.0 as usize].doubly_consumed = true;
                } else {
                    self.lu.nodes[id.0 as usize].consumed = Some(site);
                }
                match self.lu.sites.iter_mut().find(|(s, _)| *s == site) {
                    Some((_, ns)) => ns.push(id),
                    None => self.lu.sites.push((site, vec![id])),
                }
            }
        }
    }

    fn check_all_consumed(&mut self) {
        for t in self.lu.trees.clone() {
            for leaf in self.lu.leaves(t.root) {
                if !self.lu.is_consumed(leaf) {
                    let path = self.lu.path(leaf);
                    let ty = type_name(self.items, &self.lu.node(leaf).ty);
                    self.errors.push(
                        Diagnostic::error(
                            ErrorCode::NeverConsumed,
                            format!("`{path}` is never set"),
                            t.origin,
                        )
                        .label(format!("`{path}` of type {ty} created here"))
                        .note("every mutable wire must be set or passed on exactly once"),
                    );
                }
            }
        }
    }

    fn project(&mut self, v: Lin, label: &str) -> Option<Lin> {
        match v {
            Lin::Node(id) => self
                .lu
                .node(id)
                .children
                .iter()
                .find(|c| self.lu.node(**c).label == label)
                .map(|c| Lin::Node(*c)),
            Lin::Group(parts) => parts.into_iter().find(|(l, _)| l == label).and_then(|(_, p)| p),
        }
    }

    fn bind(&mut self, p: &HPattern, v: Option<Lin>) {
        let Some(v) = v else { return };
        match &p.kind {
            HPatternKind::Bind(l) => {
                if let Lin::Node(id) = &v {
                    let id = *id;
                    if self.lu.node(id).parent.is_none() {
                        let name = self.unit.local(*l).name.clone();
                        if let Some(t) = self.lu.trees.iter_mut().find(|t| t.root == id) {
                            if t.name.starts_with('<') {
                                t.name = name;
                            }
                        }
                    }
                }
                self.locals.insert(*l, v);
            }
            HPatternKind::Wildcard => {}
            HPatternKind::Tuple(ps) => {
                for (i, sub) in ps.iter().enumerate() {
                    let part = self.project(v.clone(), &i.to_string());
                    self.bind(sub, part);
                }
            }
            HPatternKind::Variant(..) | HPatternKind::Int(_) | HPatternKind::Bool(_) => {
                self.unsupported(p.span, "matching on a value with a mutable wire");
            }
        }
    }

    fn block(&mut self, b: &HBlock) -> Option<Lin> {
        for s in &b.stmts {
            match &s.kind {
                HStmtKind::Let { pattern, value, .. } => {
                    let v = self.expr(value);
                    self.bind(pattern, v);
                }
                HStmtKind::Reg {
                    clock,
                    reset,
                    value,
                    ..
                } => {
                    self.value(clock);
                    if let Some(r) = reset {
                        self.value(&r.trigger);
                        self.value(&r.value);
                    }
                    self.value(value);
                }
                HStmtKind::Set { target, value } => {
                    if let Some(t) = self.expr(target) {
                        self.consume(&t, s.span);
                    }
                    self.value(value);
                }
                HStmtKind::Expr(e) => {
                    if let Some(v) = self.expr(e) {
                        // Discarding a fresh resource leaves it unconsumed.
                        let _ = v;
                    }
                }
                HStmtKind::PipelineReg { .. } | HStmtKind::Label(_) | HStmtKind::Decl(_) => {}
            }
        }
        b.result.as_ref().and_then(|r| self.expr(r))
    }

    /// Evaluates an expression whose value must not carry a resource.
    fn value(&mut self, e: &HExpr) {
        if self.expr(e).is_some() {
            self.unsupported(e.span, "this position cannot hold a mutable wire");
        }
    }

    fn is_linear(&self, e: &HExpr) -> bool {
        self.typed.expr(e.id).is_linear(self.items)
    }

    fn fresh(&mut self, e: &HExpr, name: String) -> Option<Lin> {
        let ty = self.typed.expr(e.id).clone();
        self.new_tree(&ty, name, e.span).map(Lin::Node)
    }

    fn expr(&mut self, e: &HExpr) -> Option<Lin> {
        match &e.kind {
            HExprKind::Int(_) | HExprKind::Bool(_) => None,
            HExprKind::Local(l) => {
                let v = self.locals.get(l).cloned();
                if v.is_none() && self.is_linear(e) {
                    // Forward-declared or otherwise unknown: treat as fresh.
                    let name = self.unit.local(*l).name.clone();
                    let v = self.fresh(e, name);
                    if let Some(v) = &v {
                        self.locals.insert(*l, v.clone());
                    }
                    return v;
                }
                v
            }
            HExprKind::StageRef { .. } => {
                if self.is_linear(e) {
                    self.unsupported(e.span, "stage reference to a mutable wire");
                }
                None
            }
            HExprKind::Tuple(es) => {
                let parts: Vec<(String, Option<Lin>)> = es
                    .iter()
                    .enumerate()
                    .map(|(i, x)| (i.to_string(), self.expr(x)))
                    .collect();
                parts.iter().any(|(_, p)| p.is_some()).then_some(Lin::Group(parts))
            }
            HExprKind::Struct(tid, es) => {
                let names: Vec<String> = self
                    .items
                    .type_decl(*tid)
                    .fields()
                    .iter()
                    .map(|f| f.name.clone())
                    .collect();
                let parts: Vec<(String, Option<Lin>)> = es
                    .iter()
                    .zip(names)
                    .map(|(x, n)| (n, self.expr(x)))
                    .collect();
                parts.iter().any(|(_, p)| p.is_some()).then_some(Lin::Group(parts))
            }
            HExprKind::Array(es) => {
                let parts: Vec<(String, Option<Lin>)> = es
                    .iter()
                    .enumerate()
                    .map(|(i, x)| (format!("[{i}]"), self.expr(x)))
                    .collect();
                parts.iter().any(|(_, p)| p.is_some()).then_some(Lin::Group(parts))
            }
            HExprKind::Variant(_, _, es) => {
                for x in es {
                    if self.expr(x).is_some() {
                        self.unsupported(x.span, "enum payloads cannot hold mutable wires");
                    }
                }
                None
            }
            HExprKind::Field(b, name) => {
                let base = self.expr(b)?;
                self.project(base, &name.name)
            }
            HExprKind::TupleIndex(b, i) => {
                let base = self.expr(b)?;
                self.project(base, &i.to_string())
            }
            HExprKind::Index(a, i) => {
                self.value(i);
                let base = self.expr(a)?;
                match &i.kind {
                    HExprKind::Int(k) => self.project(base, &format!("[{k}]")),
                    _ => {
                        self.unsupported(e.span, "dynamic index into an array of mutable wires");
                        None
                    }
                }
            }
            HExprKind::Unary(_, a) => {
                self.value(a);
                None
            }
            HExprKind::Binary(_, a, b) => {
                self.value(a);
                self.value(b);
                None
            }
            HExprKind::If {
                cond,
                then,
                otherwise,
            } => {
                self.value(cond);
                self.conditional += 1;
                let t = self.expr(then);
                let o = self.expr(otherwise);
                self.conditional -= 1;
                if t.is_some() || o.is_some() {
                    self.unsupported(e.span, "selecting between mutable wires");
                }
                None
            }
            HExprKind::Match { scrutinee, arms } => {
                let s = self.expr(scrutinee);
                if s.is_some() {
                    self.unsupported(scrutinee.span, "matching on a value with a mutable wire");
                }
                self.conditional += 1;
                let mut any = false;
                for a in arms {
                    any |= self.expr(&a.value).is_some();
                }
                self.conditional -= 1;
                if any {
                    self.unsupported(e.span, "selecting between mutable wires");
                }
                None
            }
            HExprKind::Block(b) => self.block(b),
            HExprKind::Call(callee, args) | HExprKind::Inst { callee, args, .. } => {
                for a in args {
                    if let Some(v) = self.expr(a) {
                        self.consume(&v, a.span);
                    }
                }
                let name = match callee {
                    Callee::Unit(u) => self.items.unit(*u).name.clone(),
                    Callee::Intrinsic(i) => i.name().to_string(),
                };
                self.fresh(e, format!("<result of {name}>"))
            }
            HExprKind::Port => self.fresh(e, "<port>".into()),
        }
    }
}

/// Text for `--emit linear`: each tree with the state of every node.
pub fn dump_linear(p: &HirProgram, lin: &BTreeMap<UnitId, LinearUnit>, sources: &crate::diagnostics::SourceFiles) -> String {
    let mut out = String::new();
    let pos = |s: SourceSpan| match sources
        .get(s.file)
        .and_then(|f| crate::diagnostics::span_to_line_col(&f.content, s).ok())
    {
        Some(lc) => format!("{}:{}", lc.line_start, lc.col_start),
        None => format!("@{}", s.start),
    };
    for (id, lu) in lin {
        if lu.trees.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{}", p.items.unit(*id).path);
        for t in &lu.trees {
            let _ = writeln!(out, "    tree {} created {}", t.name, pos(t.origin));
            let mut nodes = vec![t.root];
            lu.descendants(t.root, &mut nodes);
            for n in nodes {
                let node = lu.node(n);
                let depth = lu.ancestors(n).len();
                let state = match (node.consumed, node.doubly_consumed) {
                    (_, true) => "double".to_string(),
                    (Some(s), false) => format!("consumed {}", pos(s)),
                    (None, false) if lu.is_consumed(n) => "consumed via parent".to_string(),
                    (None, false) => "unconsumed".to_string(),
                };
                let _ = writeln!(
                    out,
                    "    {}{}: {} [{}]",
                    "  ".repeat(depth + 1),
                    lu.path(n),
                    type_name(&p.items, &node.ty),
                    state
                );
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::FileId;
    use crate::frontend::parse_file;

    const MEM: &str = "struct port MemPort { addr: &mut int<8> }
#[external] fn memory() -> MemPort;
#[external] fn consume(m: MemPort);
";

    fn run(body: &str) -> Result<BTreeMap<UnitId, LinearUnit>, Vec<Diagnostic>> {
        let src = format!("{MEM}fn t(value: int<8>) {{\n{body}\n}}");
        let p = parse_file(&src, FileId(0)).unwrap_or_else(|e| panic!("{e:?}"));
        let hir = resolve(&[SourceUnit {
            namespace: "main".into(),
            program: &p,
        }])
        .unwrap_or_else(|e| panic!("{e:?}"));
        let typed = crate::typecheck::check_program(&hir).unwrap_or_else(|e| panic!("{e:?}"));
        check_program(&hir, &typed)
    }

    fn codes(body: &str) -> Vec<ErrorCode> {
        run(body).err().unwrap_or_default().iter().map(|d| d.code).collect()
    }

    #[test]
    fn walkthrough_double_consumption() {
        let es = run("let mem: MemPort = memory();\nlet addr = mem.addr;\nset addr = value;\nconsume(mem);")
            .unwrap_err();
        assert_eq!(es.len(), 1);
        assert_eq!(es[0].code, ErrorCode::DoubleConsumption);
        let prev = es[0].notes[0].span.unwrap();
        assert_ne!(prev, es[0].primary.span);
    }

    #[test]
    fn set_alone_consumes_everything() {
        assert!(codes("let mem: MemPort = memory();\nlet addr = mem.addr;\nset addr = value;").is_empty());
    }

    #[test]
    fn consume_alone_is_accepted() {
        assert!(codes("let mem: MemPort = memory();\nlet addr = mem.addr;\nconsume(mem);").is_empty());
    }

    #[test]
    fn unset_port_wire() {
        assert_eq!(codes("let (w, r) = port;\nlet y: &int<8> = r;"), vec![ErrorCode::NeverConsumed]);
    }

    #[test]
    fn passing_twice() {
        let es = codes("let mem = memory();\nconsume(mem);\nconsume(mem);");
        assert_eq!(es, vec![ErrorCode::DoubleConsumption]);
    }

    #[test]
    fn conditional_set() {
        let es = codes("let (w, r) = port;\nif value == 0 { set w = value; } else { set w = 1; };");
        assert!(es.contains(&ErrorCode::ConditionalConsumption));
    }

    #[test]
    fn never_set_reports_creation_span() {
        let es = run("let mem = memory();").unwrap_err();
        assert_eq!(es[0].code, ErrorCode::NeverConsumed);
        assert!(es[0].message.contains("mem.addr"), "{}", es[0].message);
    }

    #[test]
    fn tuple_with_nonlinear_part_has_one_leaf() {
        let l = run("let (w, r) = port;\nset w = value;").unwrap();
        let lu = l.values().find(|l| !l.trees.is_empty()).unwrap();
        assert_eq!(lu.leaves(lu.trees[0].root).len(), 1);
    }
}
