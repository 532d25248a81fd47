//! Name resolution: three passes over the AST.
//!
//! 1. [`collect_types`] registers every struct and enum.
//! 2. [`collect_units`] registers unit signatures.
//! 3. [`lower_to_hir`] lowers bodies, giving every local a unique id and
//!    enforcing that names are only visible below their definition.
//!
//! Every file is a namespace named after its path stem. Unqualified names
//! are looked up in the current file first, then as absolute paths, then
//! among the builtins.

pub mod dump;
pub mod hir;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::diagnostics::{suggestions, Diagnostic, ErrorCode, SourceSpan};
use crate::frontend::ast::{self, *};
pub use hir::*;

/// One parsed file and the namespace it defines.
#[derive(Debug, Clone)]
pub struct SourceUnit<'a> {
    pub namespace: String,
    pub program: &'a Program,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueItem {
    Unit(UnitId),
    Intrinsic(Intrinsic),
    Struct(TypeId),
    Variant(TypeId, usize),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ItemTable {
    pub types: Vec<TypeDecl>,
    pub units: Vec<UnitHead>,
    type_paths: BTreeMap<String, TypeId>,
    unit_paths: BTreeMap<String, UnitId>,
    variant_paths: BTreeMap<String, (TypeId, usize)>,
    type_namespace: Vec<String>,
}

const BUILTIN_TYPES: [&str; 4] = ["bool", "clock", "int", "Memory"];

impl ItemTable {
    pub fn type_decl(&self, id: TypeId) -> &TypeDecl {
        &self.types[id.0 as usize]
    }

    /// Adds a unit that is not reachable by path, such as the wrapper around
    /// an evaluated expression.
    pub fn push_anonymous_unit(&mut self, head: UnitHead) -> UnitId {
        self.units.push(head);
        UnitId(self.units.len() as u32 - 1)
    }

    pub fn unit_mut(&mut self, id: UnitId) -> &mut UnitHead {
        &mut self.units[id.0 as usize]
    }

    pub fn unit(&self, id: UnitId) -> &UnitHead {
        &self.units[id.0 as usize]
    }

    pub fn unit_ids(&self) -> impl Iterator<Item = UnitId> {
        (0..self.units.len() as u32).map(UnitId)
    }

    /// All registered paths, builtins included, in sorted order.
    pub fn names(&self) -> Vec<String> {
        let mut out: BTreeSet<String> = BUILTIN_TYPES.iter().map(|s| s.to_string()).collect();
        out.extend(Intrinsic::ALL.iter().map(|i| i.name().to_string()));
        out.extend(self.type_paths.keys().cloned());
        out.extend(self.unit_paths.keys().cloned());
        out.extend(self.variant_paths.keys().cloned());
        out.into_iter().collect()
    }

    fn candidates(ns: &str, text: &str) -> [String; 2] {
        [format!("{ns}::{text}"), text.to_string()]
    }

    pub fn lookup_type(&self, ns: &str, text: &str) -> Option<TypeId> {
        Self::candidates(ns, text)
            .iter()
            .find_map(|c| self.type_paths.get(c).copied())
    }

    pub fn lookup_unit(&self, ns: &str, text: &str) -> Option<UnitId> {
        Self::candidates(ns, text)
            .iter()
            .find_map(|c| self.unit_paths.get(c).copied())
    }

    pub fn find_unit(&self, path: &str) -> Option<UnitId> {
        self.unit_paths.get(path).copied().or_else(|| {
            let mut hits = self.units.iter().enumerate().filter(|(_, u)| u.name == path);
            match (hits.next(), hits.next()) {
                (Some((i, _)), None) => Some(UnitId(i as u32)),
                _ => None,
            }
        })
    }

    pub fn unit_paths(&self) -> impl Iterator<Item = &str> {
        self.unit_paths.keys().map(|s| s.as_str())
    }

    /// Variant lookup, falling back to a unique unqualified variant name
    /// among the enums of the current namespace.
    pub fn lookup_variant(&self, ns: &str, text: &str) -> Option<(TypeId, usize)> {
        if let Some(v) = Self::candidates(ns, text)
            .iter()
            .find_map(|c| self.variant_paths.get(c).copied())
        {
            return Some(v);
        }
        if text.contains("::") {
            return None;
        }
        let mut found = None;
        for (i, decl) in self.types.iter().enumerate() {
            if self.type_namespace[i] != ns {
                continue;
            }
            for (vi, v) in decl.variants().iter().enumerate() {
                if v.name == text {
                    if found.is_some() {
                        return None;
                    }
                    found = Some((TypeId(i as u32), vi));
                }
            }
        }
        found
    }

    pub fn lookup_value(&self, ns: &str, text: &str) -> Option<ValueItem> {
        if let Some(u) = self.lookup_unit(ns, text) {
            return Some(ValueItem::Unit(u));
        }
        if let Some(i) = Intrinsic::ALL.iter().find(|i| i.name() == text) {
            return Some(ValueItem::Intrinsic(*i));
        }
        if let Some((t, v)) = self.lookup_variant(ns, text) {
            return Some(ValueItem::Variant(t, v));
        }
        if let Some(t) = self.lookup_type(ns, text) {
            if !self.type_decl(t).is_enum() {
                return Some(ValueItem::Struct(t));
            }
        }
        None
    }

    pub fn resolve_type(
        &self,
        ns: &str,
        ty: &AstType,
        type_params: &[String],
    ) -> Result<HirType, Diagnostic> {
        match &ty.kind {
            AstTypeKind::Tuple(ts) => Ok(HirType::Tuple(
                ts.iter()
                    .map(|t| self.resolve_type(ns, t, type_params))
                    .collect::<Result<_, _>>()?,
            )),
            AstTypeKind::Array { elem, len } => Ok(HirType::Array(
                Box::new(self.resolve_type(ns, elem, type_params)?),
                *len,
            )),
            AstTypeKind::Wire(t) => Ok(HirType::Wire(Box::new(
                self.resolve_type(ns, t, type_params)?,
            ))),
            AstTypeKind::MutWire(t) => Ok(HirType::MutWire(Box::new(
                self.resolve_type(ns, t, type_params)?,
            ))),
            AstTypeKind::Named { path, args } => self.resolve_named(ns, ty, path, args, type_params),
        }
    }

    fn resolve_named(
        &self,
        ns: &str,
        ty: &AstType,
        path: &AstPath,
        args: &[AstTypeArg],
        type_params: &[String],
    ) -> Result<HirType, Diagnostic> {
        let text = path.text();
        let bad_args = |expected: &str| {
            Diagnostic::error(
                ErrorCode::UnknownType,
                format!("`{text}` expects {expected}"),
                ty.span,
            )
            .label(format!("expected {expected}"))
        };
        let type_arg = |a: &AstTypeArg| match a {
            AstTypeArg::Type(t) => self.resolve_type(ns, t, type_params),
            AstTypeArg::Int(_, s) => Err(Diagnostic::error(
                ErrorCode::UnknownType,
                "Expected a type argument, found an integer",
                *s,
            )),
        };
        if path.is_single() {
            if let Some(i) = type_params.iter().position(|p| *p == text) {
                if !args.is_empty() {
                    return Err(bad_args("no type arguments"));
                }
                return Ok(HirType::Param(i));
            }
            match text.as_str() {
                "bool" | "clock" => {
                    if !args.is_empty() {
                        return Err(bad_args("no type arguments"));
                    }
                    return Ok(if text == "bool" {
                        HirType::Bool
                    } else {
                        HirType::Clock
                    });
                }
                "int" => {
                    return match args {
                        [AstTypeArg::Int(n, s)] => {
                            if *n == 0 || *n > u32::MAX as u64 {
                                Err(Diagnostic::error(
                                    ErrorCode::UnknownType,
                                    format!("Integer width {n} is not supported"),
                                    *s,
                                )
                                .label("width must be at least 1"))
                            } else {
                                Ok(HirType::Int(*n as u32))
                            }
                        }
                        _ => Err(bad_args("one width argument, e.g. `int<8>`")),
                    }
                }
                "Memory" => {
                    return match args {
                        [t @ AstTypeArg::Type(_), AstTypeArg::Int(d, _)] => {
                            Ok(HirType::Memory(Box::new(type_arg(t)?), *d))
                        }
                        _ => Err(bad_args("an element type and a depth, e.g. `Memory<int<8>, 16>`")),
                    }
                }
                _ => {}
            }
        }
        let Some(id) = self.lookup_type(ns, &text) else {
            let known: Vec<String> = self.type_paths.keys().cloned().collect();
            let mut d = Diagnostic::error(
                ErrorCode::UnknownType,
                format!("Unknown type `{text}`"),
                path.span,
            )
            .label("not found in this scope");
            let sugg = suggestions(
                &text,
                known
                    .iter()
                    .map(|k| k.rsplit("::").next().unwrap())
                    .chain(BUILTIN_TYPES),
            );
            if !sugg.is_empty() {
                d = d.note(format!("similar names: {}", sugg.join(", ")));
            }
            return Err(d);
        };
        let decl = self.type_decl(id);
        if args.len() != decl.params.len() {
            return Err(bad_args(&format!("{} type argument(s)", decl.params.len())));
        }
        Ok(HirType::Named(
            id,
            args.iter().map(type_arg).collect::<Result<_, _>>()?,
        ))
    }

    pub fn type_name(&self, t: &HirType) -> String {
        match t {
            HirType::Bool => "bool".into(),
            HirType::Clock => "clock".into(),
            HirType::Int(n) => format!("int<{n}>"),
            HirType::Tuple(ts) => {
                let inner: Vec<String> = ts.iter().map(|t| self.type_name(t)).collect();
                if ts.len() == 1 {
                    format!("({},)", inner[0])
                } else {
                    format!("({})", inner.join(", "))
                }
            }
            HirType::Array(t, n) => format!("[{}; {n}]", self.type_name(t)),
            HirType::Named(id, args) => {
                let name = &self.type_decl(*id).name;
                if args.is_empty() {
                    name.clone()
                } else {
                    let inner: Vec<String> = args.iter().map(|t| self.type_name(t)).collect();
                    format!("{name}<{}>", inner.join(", "))
                }
            }
            HirType::Param(i) => format!("${i}"),
            HirType::Wire(t) => format!("&{}", self.type_name(t)),
            HirType::MutWire(t) => format!("&mut {}", self.type_name(t)),
            HirType::Memory(t, d) => format!("Memory<{}, {d}>", self.type_name(t)),
        }
    }
}

fn duplicate(code: ErrorCode, what: &str, name: &str, span: SourceSpan, prev: SourceSpan) -> Diagnostic {
    Diagnostic::error(code, format!("Duplicate {what} `{name}`"), span)
        .label(format!("`{name}` is already defined"))
        .note_at(prev, "previous definition here")
}

/// Registers every type declaration of every file.
pub fn collect_types(files: &[SourceUnit<'_>]) -> Result<ItemTable, Vec<Diagnostic>> {
    let mut table = ItemTable::default();
    let mut errors = vec![];
    let mut decls: Vec<(&str, &AstTypeDecl)> = vec![];
    for f in files {
        for item in &f.program.items {
            let Item::Type(t) = item else { continue };
            let path = format!("{}::{}", f.namespace, t.name.name);
            if BUILTIN_TYPES.contains(&t.name.name.as_str()) {
                errors.push(
                    Diagnostic::error(
                        ErrorCode::DuplicateType,
                        format!("Duplicate type `{}`", t.name.name),
                        t.name.span,
                    )
                    .label("this name is a builtin type"),
                );
                continue;
            }
            if let Some(prev) = table.type_paths.get(&path) {
                let prev = table.types[prev.0 as usize].span;
                errors.push(duplicate(ErrorCode::DuplicateType, "type", &t.name.name, t.name.span, prev));
                continue;
            }
            let id = TypeId(table.types.len() as u32);
            table.type_paths.insert(path.clone(), id);
            table.type_namespace.push(f.namespace.clone());
            table.types.push(TypeDecl {
                name: t.name.name.clone(),
                path,
                params: t.type_params.iter().map(|p| p.name.clone()).collect(),
                kind: TypeDeclKind::Struct {
                    is_port: false,
                    fields: vec![],
                },
                span: t.name.span,
            });
            decls.push((&f.namespace, t));
        }
    }

    for (i, (ns, t)) in decls.iter().enumerate() {
        let params = table.types[i].params.clone();
        let mut seen_params = BTreeSet::new();
        for p in &t.type_params {
            if !seen_params.insert(&p.name) {
                errors.push(
                    Diagnostic::error(
                        ErrorCode::DuplicateType,
                        format!("Duplicate type parameter `{}`", p.name),
                        p.span,
                    )
                    .label("already declared"),
                );
            }
        }
        let fields_of = |fields: &[AstParam], errors: &mut Vec<Diagnostic>| {
            let mut out: Vec<Field> = vec![];
            for f in fields {
                if let Some(prev) = out.iter().find(|o| o.name == f.name.name) {
                    errors.push(duplicate(ErrorCode::DuplicateType, "field", &f.name.name, f.name.span, prev.span));
                    continue;
                }
                match table.resolve_type(ns, &f.ty, &params) {
                    Ok(ty) => out.push(Field {
                        name: f.name.name.clone(),
                        ty,
                        span: f.name.span,
                    }),
                    Err(e) => errors.push(e),
                }
            }
            out
        };
        let kind = match &t.kind {
            AstTypeDeclKind::Struct { is_port, fields } => TypeDeclKind::Struct {
                is_port: *is_port,
                fields: fields_of(fields, &mut errors),
            },
            AstTypeDeclKind::Enum { variants } => {
                let mut out: Vec<VariantDecl> = vec![];
                for v in variants {
                    if let Some(prev) = out.iter().find(|o| o.name == v.name.name) {
                        errors.push(duplicate(ErrorCode::DuplicateType, "variant", &v.name.name, v.name.span, prev.span));
                        continue;
                    }
                    out.push(VariantDecl {
                        name: v.name.name.clone(),
                        fields: fields_of(v.fields.as_deref().unwrap_or(&[]), &mut errors),
                        span: v.name.span,
                    });
                }
                TypeDeclKind::Enum { variants: out }
            }
        };
        if let TypeDeclKind::Enum { variants } = &kind {
            for (vi, v) in variants.iter().enumerate() {
                table
                    .variant_paths
                    .insert(format!("{}::{}", table.types[i].path, v.name), (TypeId(i as u32), vi));
            }
        }
        table.types[i].kind = kind;
    }

    errors.extend(check_recursive_types(&table));
    if errors.is_empty() {
        Ok(table)
    } else {
        Err(errors)
    }
}

fn contained_types(t: &HirType, out: &mut Vec<TypeId>) {
    match t {
        HirType::Named(id, args) => {
            out.push(*id);
            args.iter().for_each(|a| contained_types(a, out));
        }
        HirType::Tuple(ts) => ts.iter().for_each(|t| contained_types(t, out)),
        HirType::Array(t, _) | HirType::Wire(t) | HirType::MutWire(t) | HirType::Memory(t, _) => {
            contained_types(t, out)
        }
        HirType::Bool | HirType::Clock | HirType::Int(_) | HirType::Param(_) => {}
    }
}

fn check_recursive_types(table: &ItemTable) -> Vec<Diagnostic> {
    use petgraph::algo::tarjan_scc;
    use petgraph::graph::DiGraph;
    let mut g = DiGraph::<usize, ()>::new();
    let nodes: Vec<_> = (0..table.types.len()).map(|i| g.add_node(i)).collect();
    for (i, decl) in table.types.iter().enumerate() {
        let mut inner = vec![];
        for f in decl.fields() {
            contained_types(&f.ty, &mut inner);
        }
        for v in decl.variants() {
            for f in &v.fields {
                contained_types(&f.ty, &mut inner);
            }
        }
        for t in inner {
            g.add_edge(nodes[i], nodes[t.0 as usize], ());
        }
    }
    let mut errors = vec![];
    for scc in tarjan_scc(&g) {
        let first = g[scc[0]];
        let recursive = scc.len() > 1 || g.contains_edge(scc[0], scc[0]);
        if recursive {
            let mut members: Vec<usize> = scc.iter().map(|n| g[*n]).collect();
            members.sort();
            let decl = &table.types[members[0].min(first)];
            let names: Vec<&str> = members.iter().map(|m| table.types[*m].name.as_str()).collect();
            errors.push(
                Diagnostic::error(
                    ErrorCode::InfiniteType,
                    format!("Recursive type `{}` has infinite size", decl.name),
                    decl.span,
                )
                .label("contains itself")
                .note(format!("cycle through: {}", names.join(", "))),
            );
        }
    }
    errors
}

/// Registers every unit signature.
pub fn collect_units(
    files: &[SourceUnit<'_>],
    mut table: ItemTable,
) -> Result<ItemTable, Vec<Diagnostic>> {
    let mut errors = vec![];
    for f in files {
        for item in &f.program.items {
            let Item::Unit(u) = item else { continue };
            let ns = f.namespace.as_str();
            let path = format!("{ns}::{}", u.name.name);
            for a in &u.attributes {
                if a.name.name != "no_mangle" && a.name.name != "external" {
                    errors.push(
                        Diagnostic::error(
                            ErrorCode::UnknownAttribute,
                            format!("Unknown attribute `{}`", a.name.name),
                            a.name.span,
                        )
                        .label("unknown attribute")
                        .note("supported attributes: no_mangle, external"),
                    );
                }
            }
            let external = u.has_attribute("external");
            if external && u.body.is_some() {
                errors.push(
                    Diagnostic::error(
                        ErrorCode::ExternalBody,
                        format!("External unit `{}` has a body", u.name.name),
                        u.name.span,
                    )
                    .label("external units are declared without a body"),
                );
            } else if !external && u.body.is_none() {
                errors.push(
                    Diagnostic::error(
                        ErrorCode::ExternalBody,
                        format!("Unit `{}` has no body", u.name.name),
                        u.name.span,
                    )
                    .label("missing body")
                    .note("mark the unit `#[external]` if it is defined outside this program"),
                );
            }
            if Intrinsic::ALL.iter().any(|i| i.name() == u.name.name) {
                errors.push(
                    Diagnostic::error(
                        ErrorCode::DuplicateUnit,
                        format!("Duplicate unit `{}`", u.name.name),
                        u.name.span,
                    )
                    .label("this name is a builtin unit"),
                );
                continue;
            }
            if let Some(prev) = table.unit_paths.get(&path) {
                let prev = table.units[prev.0 as usize].name_span;
                errors.push(duplicate(ErrorCode::DuplicateUnit, "unit", &u.name.name, u.name.span, prev));
                continue;
            }
            let mut params: Vec<Param> = vec![];
            for p in &u.params {
                if let Some(prev) = params.iter().find(|q| q.name == p.name.name) {
                    errors.push(duplicate(ErrorCode::DuplicateLocal, "parameter", &p.name.name, p.name.span, prev.span));
                    continue;
                }
                match table.resolve_type(ns, &p.ty, &[]) {
                    Ok(ty) => params.push(Param {
                        name: p.name.name.clone(),
                        ty,
                        span: p.name.span,
                    }),
                    Err(e) => errors.push(e),
                }
            }
            let output = match &u.output {
                Some(t) => match table.resolve_type(ns, t, &[]) {
                    Ok(t) => t,
                    Err(e) => {
                        errors.push(e);
                        HirType::unit()
                    }
                },
                None => HirType::unit(),
            };
            let kind = match u.kind {
                AstUnitKind::Fn => UnitKind::Fn,
                AstUnitKind::Entity => UnitKind::Entity,
                AstUnitKind::Pipeline { depth } => UnitKind::Pipeline(depth),
            };
            let id = UnitId(table.units.len() as u32);
            table.unit_paths.insert(path.clone(), id);
            table.units.push(UnitHead {
                name: u.name.name.clone(),
                path,
                namespace: ns.to_string(),
                file: f.program.file,
                kind,
                params,
                output,
                no_mangle: u.has_attribute("no_mangle"),
                external,
                span: u.span,
                name_span: u.name.span,
            });
        }
    }
    if errors.is_empty() {
        Ok(table)
    } else {
        Err(errors)
    }
}

/// Scope depth of a unit body's top level; parameters live one level up.
const BODY_DEPTH: usize = 2;

#[derive(Default)]
struct Scope {
    names: HashMap<String, LocalId>,
    /// `decl`-introduced names still awaiting their definition.
    pending: Vec<(String, LocalId, SourceSpan)>,
}

struct Lowerer<'a> {
    items: &'a ItemTable,
    ns: &'a str,
    kind: UnitKind,
    locals: Vec<LocalInfo>,
    scopes: Vec<Scope>,
    /// Every name bound anywhere in the body, to tell "defined later" from
    /// "unknown".
    bound_later: HashMap<String, SourceSpan>,
    /// Top-level bindings of the body, visible to stage references from
    /// anywhere in a pipeline.
    top_level: HashMap<String, LocalId>,
    labels: BTreeMap<String, u64>,
    next_expr: u32,
    next_pat: u32,
    errors: Vec<Diagnostic>,
}

fn pattern_names(p: &ast::Pattern, out: &mut Vec<Ident>) {
    match &p.kind {
        PatternKind::Name(i) => out.push(i.clone()),
        PatternKind::Tuple(ps) => ps.iter().for_each(|p| pattern_names(p, out)),
        PatternKind::Variant { args: Some(args), .. } => args.iter().for_each(|p| pattern_names(p, out)),
        _ => {}
    }
}

fn collect_bound_names(b: &Block, out: &mut HashMap<String, SourceSpan>) {
    fn expr(e: &Expr, out: &mut HashMap<String, SourceSpan>) {
        match &e.kind {
            ExprKind::Block(b) => collect_bound_names(b, out),
            ExprKind::If { cond, then, otherwise } => {
                expr(cond, out);
                collect_bound_names(then, out);
                expr(otherwise, out);
            }
            ExprKind::Match { scrutinee, arms } => {
                expr(scrutinee, out);
                for a in arms {
                    expr(&a.value, out);
                }
            }
            _ => {}
        }
    }
    for s in &b.stmts {
        match &s.kind {
            StmtKind::Let { pattern, value, .. } => {
                let mut names = vec![];
                pattern_names(pattern, &mut names);
                for n in names {
                    out.entry(n.name).or_insert(n.span);
                }
                expr(value, out);
            }
            StmtKind::Reg { name, value, .. } => {
                out.entry(name.name.clone()).or_insert(name.span);
                expr(value, out);
            }
            StmtKind::Expr(e) => expr(e, out),
            _ => {}
        }
    }
    if let Some(r) = &b.result {
        expr(r, out);
    }
}

impl<'a> Lowerer<'a> {
    fn expr_id(&mut self) -> ExprId {
        self.next_expr += 1;
        ExprId(self.next_expr - 1)
    }

    fn pat_id(&mut self) -> PatId {
        self.next_pat += 1;
        PatId(self.next_pat - 1)
    }

    fn new_local(&mut self, name: &Ident, kind: LocalKind) -> LocalId {
        self.locals.push(LocalInfo {
            name: name.name.clone(),
            kind,
            span: name.span,
            forward_declared: false,
        });
        LocalId(self.locals.len() as u32 - 1)
    }

    fn lookup_local(&self, name: &str) -> Option<LocalId> {
        self.scopes.iter().rev().find_map(|s| s.names.get(name).copied())
    }

    /// Introduces a definition of `name` in the innermost scope, completing
    /// a pending `decl` if there is one.
    fn define(&mut self, name: &Ident, kind: LocalKind) -> LocalId {
        let depth = self.scopes.len();
        let scope = self.scopes.last_mut().unwrap();
        if let Some(pos) = scope.pending.iter().position(|(n, _, _)| *n == name.name) {
            let (_, id, _) = scope.pending.remove(pos);
            let info = &mut self.locals[id.0 as usize];
            info.kind = kind;
            info.span = name.span;
            return id;
        }
        if let Some(prev) = scope.names.get(&name.name) {
            let prev_span = self.locals[prev.0 as usize].span;
            self.errors.push(
                duplicate(ErrorCode::DuplicateLocal, "definition of", &name.name, name.span, prev_span)
                    .note("shadowing is only allowed in a nested block"),
            );
        }
        let id = match self.top_level.get(&name.name) {
            Some(id) if depth == BODY_DEPTH && !self.scopes[BODY_DEPTH - 1].names.contains_key(&name.name) => {
                let id = *id;
                let info = &mut self.locals[id.0 as usize];
                info.kind = kind;
                info.span = name.span;
                id
            }
            _ => self.new_local(name, kind),
        };
        self.scopes.last_mut().unwrap().names.insert(name.name.clone(), id);
        id
    }

    fn with_scope<T>(&mut self, f: impl FnOnce(&mut Self) -> T) -> T {
        self.scopes.push(Scope::default());
        let out = f(self);
        let scope = self.scopes.pop().unwrap();
        for (name, _, span) in scope.pending {
            self.errors.push(
                Diagnostic::error(
                    ErrorCode::DeclNeverDefined,
                    format!("`{name}` is declared but never defined"),
                    span,
                )
                .label("declared here")
                .note("a `decl`-declared name must be defined later in the same block"),
            );
        }
        out
    }

    fn block(&mut self, b: &Block) -> HBlock {
        let id = self.expr_id();
        self.with_scope(|l| {
            let stmts = b.stmts.iter().filter_map(|s| l.stmt(s)).collect();
            let result = b.result.as_ref().map(|r| l.expr(r));
            HBlock {
                stmts,
                result,
                span: b.span,
                id,
            }
        })
    }

    fn stmt(&mut self, s: &Stmt) -> Option<HStmt> {
        let kind = match &s.kind {
            StmtKind::Let { pattern, ty, value } => {
                let value = self.expr(value);
                let ty = ty.as_ref().and_then(|t| self.ty(t));
                let pattern = self.pattern(pattern, LocalKind::Let);
                HStmtKind::Let { pattern, ty, value }
            }
            StmtKind::Reg {
                clock,
                name,
                ty,
                reset,
                value,
            } => {
                let clock = self.expr(clock);
                let ty = ty.as_ref().and_then(|t| self.ty(t));
                let local = self.define(name, LocalKind::Reg);
                let reset = reset.as_ref().map(|r| HRegReset {
                    trigger: self.expr(&r.trigger),
                    value: self.expr(&r.value),
                });
                let value = self.expr(value);
                HStmtKind::Reg {
                    local,
                    clock,
                    ty,
                    reset,
                    value,
                }
            }
            StmtKind::PipelineReg { count } => HStmtKind::PipelineReg { count: *count },
            StmtKind::Label(l) => HStmtKind::Label(l.clone()),
            StmtKind::Set { target, value } => HStmtKind::Set {
                target: self.expr(target),
                value: self.expr(value),
            },
            StmtKind::Decl(names) => {
                let mut ids = vec![];
                for n in names {
                    let depth = self.scopes.len();
                    let scope = self.scopes.last().unwrap();
                    if let Some(prev) = scope.names.get(&n.name) {
                        let prev_span = self.locals[prev.0 as usize].span;
                        self.errors.push(duplicate(ErrorCode::DuplicateLocal, "definition of", &n.name, n.span, prev_span));
                        continue;
                    }
                    let id = match self.top_level.get(&n.name) {
                        Some(id) if depth == BODY_DEPTH => *id,
                        _ => self.new_local(n, LocalKind::Let),
                    };
                    let info = &mut self.locals[id.0 as usize];
                    info.forward_declared = true;
                    info.span = n.span;
                    let scope = self.scopes.last_mut().unwrap();
                    scope.names.insert(n.name.clone(), id);
                    scope.pending.push((n.name.clone(), id, n.span));
                    ids.push(id);
                }
                HStmtKind::Decl(ids)
            }
            StmtKind::Expr(e) => HStmtKind::Expr(self.expr(e)),
        };
        Some(HStmt { kind, span: s.span })
    }

    fn ty(&mut self, t: &AstType) -> Option<HirType> {
        match self.items.resolve_type(self.ns, t, &[]) {
            Ok(t) => Some(t),
            Err(e) => {
                self.errors.push(e);
                None
            }
        }
    }

    fn arity_error(&mut self, what: &str, expected: usize, found: usize, span: SourceSpan) {
        self.errors.push(
            Diagnostic::error(
                ErrorCode::TypeMismatch,
                format!("{what} expects {expected} argument(s), found {found}"),
                span,
            )
            .label(format!("expected {expected} argument(s)")),
        );
    }

    fn pattern(&mut self, p: &ast::Pattern, bind_kind: LocalKind) -> HPattern {
        let id = self.pat_id();
        let kind = match &p.kind {
            PatternKind::Wildcard => HPatternKind::Wildcard,
            PatternKind::Int(v) => HPatternKind::Int(*v),
            PatternKind::Bool(b) => HPatternKind::Bool(*b),
            PatternKind::Tuple(ps) => {
                HPatternKind::Tuple(ps.iter().map(|p| self.pattern(p, bind_kind)).collect())
            }
            PatternKind::Name(n) => match self.items.lookup_variant(self.ns, &n.name) {
                Some((t, v)) => {
                    let nfields = self.items.type_decl(t).variants()[v].fields.len();
                    if nfields != 0 {
                        self.arity_error(&format!("Variant `{}`", n.name), nfields, 0, p.span);
                    }
                    HPatternKind::Variant(t, v, vec![])
                }
                None => HPatternKind::Bind(self.define(n, bind_kind)),
            },
            PatternKind::Variant { path, args } => {
                let text = path.text();
                match self.items.lookup_variant(self.ns, &text) {
                    Some((t, v)) => {
                        let args: Vec<HPattern> = args
                            .iter()
                            .flatten()
                            .map(|p| self.pattern(p, bind_kind))
                            .collect();
                        let nfields = self.items.type_decl(t).variants()[v].fields.len();
                        if nfields != args.len() {
                            self.arity_error(&format!("Variant `{text}`"), nfields, args.len(), p.span);
                        }
                        HPatternKind::Variant(t, v, args)
                    }
                    None => {
                        self.errors.push(
                            Diagnostic::error(
                                ErrorCode::UnknownName,
                                format!("Unknown enum variant `{text}`"),
                                path.span,
                            )
                            .label("not a variant in scope"),
                        );
                        HPatternKind::Wildcard
                    }
                }
            }
        };
        HPattern {
            id,
            kind,
            span: p.span,
        }
    }

    fn unknown_name(&mut self, name: &str, span: SourceSpan) {
        if let Some(def) = self.bound_later.get(name).copied() {
            self.errors.push(
                Diagnostic::error(
                    ErrorCode::UseBeforeDefinition,
                    format!("Use of `{name}` before its definition"),
                    span,
                )
                .label(format!("`{name}` is not defined yet"))
                .note_at(def, format!("`{name}` is defined here"))
                .note(format!("names are only visible below their definition; add `decl {name};` above this use to refer to it early")),
            );
            return;
        }
        let mut visible: Vec<&str> = self
            .scopes
            .iter()
            .flat_map(|s| s.names.keys().map(|k| k.as_str()))
            .collect();
        visible.sort();
        let sugg = suggestions(name, visible);
        let mut d = Diagnostic::error(ErrorCode::UnknownName, format!("Unknown name `{name}`"), span)
            .label("not found in this scope");
        if !sugg.is_empty() {
            d = d.note(format!("similar names: {}", sugg.join(", ")));
        }
        self.errors.push(d);
    }

    fn exprs(&mut self, es: &[Expr]) -> Vec<HExpr> {
        es.iter().map(|e| self.expr(e)).collect()
    }

    fn expr(&mut self, e: &Expr) -> HExpr {
        let id = self.expr_id();
        let kind = self.expr_kind(e);
        HExpr {
            id,
            kind,
            span: e.span,
        }
    }

    fn expr_kind(&mut self, e: &Expr) -> HExprKind {
        match &e.kind {
            ExprKind::Int(v) => HExprKind::Int(*v),
            ExprKind::Bool(b) => HExprKind::Bool(*b),
            ExprKind::Port => HExprKind::Port,
            ExprKind::Path(path) => {
                let text = path.text();
                if path.is_single() {
                    if let Some(l) = self.lookup_local(&text) {
                        return HExprKind::Local(l);
                    }
                }
                match self.items.lookup_variant(self.ns, &text) {
                    Some((t, v)) => {
                        let nfields = self.items.type_decl(t).variants()[v].fields.len();
                        if nfields != 0 {
                            self.arity_error(&format!("Variant `{text}`"), nfields, 0, e.span);
                        }
                        HExprKind::Variant(t, v, vec![])
                    }
                    None => {
                        self.unknown_name(&text, path.span);
                        HExprKind::Tuple(vec![])
                    }
                }
            }
            ExprKind::Tuple(es) => HExprKind::Tuple(self.exprs(es)),
            ExprKind::Array(es) => HExprKind::Array(self.exprs(es)),
            ExprKind::Field(b, f) => HExprKind::Field(Box::new(self.expr(b)), f.clone()),
            ExprKind::TupleIndex(b, i) => HExprKind::TupleIndex(Box::new(self.expr(b)), *i),
            ExprKind::Index(a, i) => HExprKind::Index(Box::new(self.expr(a)), Box::new(self.expr(i))),
            ExprKind::Unary(op, a) => HExprKind::Unary(*op, Box::new(self.expr(a))),
            ExprKind::Binary(op, a, b) => {
                HExprKind::Binary(*op, Box::new(self.expr(a)), Box::new(self.expr(b)))
            }
            ExprKind::If {
                cond,
                then,
                otherwise,
            } => {
                let cond = Box::new(self.expr(cond));
                let then_id = self.expr_id();
                let then_block = self.block(then);
                let then = Box::new(HExpr {
                    id: then_id,
                    span: then.span,
                    kind: HExprKind::Block(Box::new(then_block)),
                });
                let otherwise = Box::new(self.expr(otherwise));
                HExprKind::If {
                    cond,
                    then,
                    otherwise,
                }
            }
            ExprKind::Match { scrutinee, arms } => {
                let scrutinee = Box::new(self.expr(scrutinee));
                let arms = arms
                    .iter()
                    .map(|a| {
                        self.with_scope(|l| {
                            let pattern = l.pattern(&a.pattern, LocalKind::Binding);
                            let value = l.expr(&a.value);
                            HArm {
                                pattern,
                                value,
                                span: a.span,
                            }
                        })
                    })
                    .collect();
                HExprKind::Match { scrutinee, arms }
            }
            ExprKind::Block(b) => HExprKind::Block(Box::new(self.block(b))),
            ExprKind::Call { path, args } => self.call(e, path, args),
            ExprKind::Inst { depth, path, args } => self.inst(e, *depth, path, args),
            ExprKind::StageRef { target, name } => self.stage_ref(e, target, name),
        }
    }

    fn call(&mut self, e: &Expr, path: &AstPath, args: &[Expr]) -> HExprKind {
        let text = path.text();
        let hargs = self.exprs(args);
        if path.is_single() && self.lookup_local(&text).is_some() {
            self.errors.push(
                Diagnostic::error(
                    ErrorCode::UnknownName,
                    format!("`{text}` is a value, not a unit"),
                    path.span,
                )
                .label("cannot be called"),
            );
            return HExprKind::Tuple(vec![]);
        }
        match self.items.lookup_value(self.ns, &text) {
            Some(ValueItem::Unit(u)) => {
                let head = self.items.unit(u);
                if head.kind != UnitKind::Fn {
                    self.errors.push(
                        Diagnostic::error(
                            ErrorCode::InstMismatch,
                            format!("{} `{}` must be instantiated with `inst`", capitalize(head.kind.keyword()), head.name),
                            e.span,
                        )
                        .label(format!("{} used like a function", head.kind.keyword()))
                        .note(match head.kind {
                            UnitKind::Pipeline(d) => format!("use `inst({d}) {text}(...)`"),
                            _ => format!("use `inst {text}(...)`"),
                        }),
                    );
                }
                if head.params.len() != hargs.len() {
                    self.arity_error(&format!("Unit `{text}`"), head.params.len(), hargs.len(), e.span);
                }
                HExprKind::Call(Callee::Unit(u), hargs)
            }
            Some(ValueItem::Intrinsic(i)) => {
                if i.kind() != UnitKind::Fn {
                    self.errors.push(
                        Diagnostic::error(
                            ErrorCode::InstMismatch,
                            format!("Entity `{}` must be instantiated with `inst`", i.name()),
                            e.span,
                        )
                        .label("entity used like a function"),
                    );
                }
                if i.arity() != hargs.len() {
                    self.arity_error(&format!("`{}`", i.name()), i.arity(), hargs.len(), e.span);
                }
                HExprKind::Call(Callee::Intrinsic(i), hargs)
            }
            Some(ValueItem::Variant(t, v)) => {
                let n = self.items.type_decl(t).variants()[v].fields.len();
                if n != hargs.len() {
                    self.arity_error(&format!("Variant `{text}`"), n, hargs.len(), e.span);
                }
                HExprKind::Variant(t, v, hargs)
            }
            Some(ValueItem::Struct(t)) => {
                let n = self.items.type_decl(t).fields().len();
                if n != hargs.len() {
                    self.arity_error(&format!("Struct `{text}`"), n, hargs.len(), e.span);
                }
                HExprKind::Struct(t, hargs)
            }
            None => {
                let mut d = Diagnostic::error(
                    ErrorCode::UnknownName,
                    format!("Unknown unit `{text}`"),
                    path.span,
                )
                .label("not found in this scope");
                let names: Vec<String> = self
                    .items
                    .units
                    .iter()
                    .map(|u| u.name.clone())
                    .chain(Intrinsic::ALL.iter().map(|i| i.name().to_string()))
                    .collect();
                let sugg = suggestions(&text, names.iter().map(|s| s.as_str()));
                if !sugg.is_empty() {
                    d = d.note(format!("similar names: {}", sugg.join(", ")));
                }
                self.errors.push(d);
                HExprKind::Tuple(vec![])
            }
        }
    }

    fn inst(&mut self, e: &Expr, depth: Option<u64>, path: &AstPath, args: &[Expr]) -> HExprKind {
        let text = path.text();
        let hargs = self.exprs(args);
        let (callee, kind, arity) = match self.items.lookup_value(self.ns, &text) {
            Some(ValueItem::Unit(u)) => {
                let h = self.items.unit(u);
                (Callee::Unit(u), h.kind, h.params.len())
            }
            Some(ValueItem::Intrinsic(i)) => (Callee::Intrinsic(i), i.kind(), i.arity()),
            _ => {
                self.errors.push(
                    Diagnostic::error(ErrorCode::UnknownName, format!("Unknown unit `{text}`"), path.span)
                        .label("not found in this scope"),
                );
                return HExprKind::Tuple(vec![]);
            }
        };
        let mismatch = match (kind, depth) {
            (UnitKind::Fn, _) => Some((
                format!("Function `{text}` cannot be instantiated"),
                "functions are called without `inst`".to_string(),
            )),
            (UnitKind::Entity, Some(_)) => Some((
                format!("Entity `{text}` does not take a pipeline depth"),
                format!("use `inst {text}(...)`"),
            )),
            (UnitKind::Pipeline(d), None) => Some((
                format!("Pipeline `{text}` must be instantiated with its depth"),
                format!("use `inst({d}) {text}(...)`"),
            )),
            _ => None,
        };
        if let Some((msg, note)) = mismatch {
            self.errors.push(
                Diagnostic::error(ErrorCode::InstMismatch, msg, e.span)
                    .label("invalid instantiation")
                    .note(note),
            );
        }
        if arity != hargs.len() {
            self.arity_error(&format!("Unit `{text}`"), arity, hargs.len(), e.span);
        }
        HExprKind::Inst {
            callee,
            depth,
            args: hargs,
        }
    }

    fn stage_ref(&mut self, e: &Expr, target: &StageTarget, name: &Ident) -> HExprKind {
        if !matches!(self.kind, UnitKind::Pipeline(_)) {
            self.errors.push(
                Diagnostic::error(
                    ErrorCode::StageOutsidePipeline,
                    "Stage reference outside a pipeline",
                    e.span,
                )
                .label("only pipelines have stages"),
            );
            return HExprKind::Tuple(vec![]);
        }
        let target = match target {
            StageTarget::Offset(o) => HStageTarget::Offset(*o),
            StageTarget::Label(l) => match self.labels.get(&l.name) {
                Some(stage) => HStageTarget::Label {
                    name: l.clone(),
                    stage: *stage,
                },
                None => {
                    let mut d = Diagnostic::error(
                        ErrorCode::UnknownStageLabel,
                        format!("Unknown stage label `{}`", l.name),
                        l.span,
                    )
                    .label("no stage has this label");
                    let sugg = suggestions(&l.name, self.labels.keys().map(|s| s.as_str()));
                    if !sugg.is_empty() {
                        d = d.note(format!("similar labels: {}", sugg.join(", ")));
                    }
                    self.errors.push(d);
                    return HExprKind::Tuple(vec![]);
                }
            },
        };
        let local = self
            .lookup_local(&name.name)
            .or_else(|| self.top_level.get(&name.name).copied());
        match local {
            Some(local) => HExprKind::StageRef {
                target,
                local,
                name_span: name.span,
            },
            None => {
                self.errors.push(
                    Diagnostic::error(
                        ErrorCode::UnknownName,
                        format!("Unknown name `{}`", name.name),
                        name.span,
                    )
                    .label("not defined in this pipeline"),
                );
                HExprKind::Tuple(vec![])
            }
        }
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Label-to-stage map of a pipeline body. Labels name the stage of the
/// statements that follow them.
fn collect_labels(body: &Block, errors: &mut Vec<Diagnostic>) -> BTreeMap<String, u64> {
    let mut labels = BTreeMap::new();
    let mut spans: HashMap<String, SourceSpan> = HashMap::new();
    let mut stage = 0u64;
    for s in &body.stmts {
        match &s.kind {
            StmtKind::PipelineReg { count } => stage += count,
            StmtKind::Label(l) => {
                if let Some(prev) = spans.get(&l.name) {
                    errors.push(duplicate(ErrorCode::DuplicateStageLabel, "stage label", &l.name, l.span, *prev));
                } else {
                    spans.insert(l.name.clone(), l.span);
                    labels.insert(l.name.clone(), stage);
                }
            }
            _ => {}
        }
    }
    labels
}

/// Lowers one body. `u` supplies the parameter names; the head is taken
/// from `items`.
pub fn lower_unit(items: &ItemTable, id: UnitId, ns: &str, u: &AstUnit, body: &Block) -> Result<HirUnit, Vec<Diagnostic>> {
    let head = items.unit(id);
    let mut errors = vec![];
    let labels = if matches!(head.kind, UnitKind::Pipeline(_)) {
        collect_labels(body, &mut errors)
    } else {
        BTreeMap::new()
    };
    let mut bound_later = HashMap::new();
    collect_bound_names(body, &mut bound_later);
    let mut l = Lowerer {
        items,
        ns,
        kind: head.kind,
        locals: vec![],
        scopes: vec![Scope::default()],
        bound_later,
        top_level: HashMap::new(),
        labels,
        next_expr: 0,
        next_pat: 0,
        errors,
    };
    let mut params = vec![];
    for p in &u.params {
        let id = l.new_local(&p.name, LocalKind::Param);
        l.scopes[0].names.insert(p.name.name.clone(), id);
        params.push(id);
    }
    for s in &body.stmts {
        let mut names = vec![];
        match &s.kind {
            StmtKind::Let { pattern, .. } => pattern_names(pattern, &mut names),
            StmtKind::Reg { name, .. } => names.push(name.clone()),
            StmtKind::Decl(ns) => names.extend(ns.iter().cloned()),
            _ => {}
        }
        for n in names {
            if !l.top_level.contains_key(&n.name) && items.lookup_variant(ns, &n.name).is_none() {
                let id = l.new_local(&n, LocalKind::Let);
                l.top_level.insert(n.name.clone(), id);
            }
        }
    }
    let block = l.block(body);
    let errors = std::mem::take(&mut l.errors);
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(HirUnit {
        id,
        params,
        body: block,
        locals: l.locals,
        labels: l.labels,
        expr_count: l.next_expr,
        pat_count: l.next_pat,
    })
}

/// Lowers every unit body. External units have no body and are skipped.
pub fn lower_to_hir(files: &[SourceUnit<'_>], items: ItemTable) -> Result<HirProgram, Vec<Diagnostic>> {
    let mut errors = vec![];
    let mut bodies = BTreeMap::new();
    for f in files {
        for item in &f.program.items {
            let Item::Unit(u) = item else { continue };
            let Some(body) = &u.body else { continue };
            let path = format!("{}::{}", f.namespace, u.name.name);
            let Some(&id) = items.unit_paths.get(&path) else { continue };
            if items.unit(id).span != u.span {
                continue;
            }
            match lower_unit(&items, id, &f.namespace, u, body) {
                Ok(h) => {
                    bodies.insert(id, h);
                }
                Err(es) => errors.extend(es),
            }
        }
    }
    if errors.is_empty() {
        let program = HirProgram { items, bodies };
        debug_assert!(validate(&program).is_ok());
        Ok(program)
    } else {
        Err(errors)
    }
}

/// Runs all three passes.
pub fn resolve(files: &[SourceUnit<'_>]) -> Result<HirProgram, Vec<Diagnostic>> {
    let types = collect_types(files)?;
    let items = collect_units(files, types)?;
    lower_to_hir(files, items)
}

/// Checks that every local used in a body has exactly one definition site.
pub fn validate(p: &HirProgram) -> Result<(), String> {
    for (uid, u) in &p.bodies {
        let mut defs = vec![0u32; u.locals.len()];
        for l in &u.params {
            defs[l.0 as usize] += 1;
        }
        let def_pattern = |pat: &HPattern, defs: &mut Vec<u32>| {
            let mut out = vec![];
            pat.bindings(&mut out);
            for l in out {
                defs[l.0 as usize] += 1;
            }
        };
        fn stmts<'a>(b: &'a HBlock, out: &mut Vec<&'a HStmt>) {
            for s in &b.stmts {
                out.push(s);
            }
        }
        let mut all_blocks: Vec<&HBlock> = vec![&u.body];
        walk_block(&u.body, &mut |e| {
            if let HExprKind::Block(b) = &e.kind {
                all_blocks.push(b);
            }
        });
        let mut all_stmts = vec![];
        for b in &all_blocks {
            stmts(b, &mut all_stmts);
        }
        for s in all_stmts {
            match &s.kind {
                HStmtKind::Let { pattern, .. } => def_pattern(pattern, &mut defs),
                HStmtKind::Reg { local, .. } => defs[local.0 as usize] += 1,
                _ => {}
            }
        }
        walk_block(&u.body, &mut |e| {
            if let HExprKind::Match { arms, .. } = &e.kind {
                for a in arms {
                    def_pattern(&a.pattern, &mut defs);
                }
            }
        });
        let mut uses = vec![];
        walk_block(&u.body, &mut |e| match &e.kind {
            HExprKind::Local(l) | HExprKind::StageRef { local: l, .. } => uses.push(*l),
            _ => {}
        });
        for l in uses {
            if defs[l.0 as usize] != 1 {
                return Err(format!(
                    "unit {}: local {} `{}` has {} definitions",
                    uid.0,
                    l.0,
                    u.locals[l.0 as usize].name,
                    defs[l.0 as usize]
                ));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::FileId;
    use crate::frontend::parse_file;

    fn program(src: &str) -> Program {
        parse_file(src, FileId(0)).unwrap_or_else(|e| panic!("{e:?}"))
    }

    fn run(src: &str) -> Result<HirProgram, Vec<Diagnostic>> {
        let p = program(src);
        resolve(&[SourceUnit {
            namespace: "main".into(),
            program: &p,
        }])
    }

    fn codes(src: &str) -> Vec<ErrorCode> {
        run(src).unwrap_err().iter().map(|d| d.code).collect()
    }

    #[test]
    fn option_type_has_two_variants() {
        let p = program("enum Option<T> { None, Some{ val: T } }");
        let t = collect_types(&[SourceUnit {
            namespace: "main".into(),
            program: &p,
        }])
        .unwrap();
        let id = t.lookup_type("main", "Option").unwrap();
        assert_eq!(t.type_decl(id).variants().len(), 2);
        assert_eq!(t.type_decl(id).params, vec!["T".to_string()]);
    }

    #[test]
    fn empty_program_has_only_builtins() {
        let p = program("");
        let t = collect_types(&[SourceUnit {
            namespace: "main".into(),
            program: &p,
        }])
        .unwrap();
        assert_eq!(
            t.names(),
            vec!["Memory", "bool", "clock", "clocked_memory", "int", "read_memory", "trunc"]
        );
    }

    #[test]
    fn duplicate_enum() {
        assert_eq!(codes("enum A { X } enum A { Y }"), vec![ErrorCode::DuplicateType]);
    }

    #[test]
    fn unknown_param_type() {
        assert_eq!(codes("fn f(a: Foo) -> bool { true }"), vec![ErrorCode::UnknownType]);
    }

    #[test]
    fn fn_and_entity_same_name() {
        assert_eq!(
            codes("fn a() -> bool { true } entity a() -> bool { true }"),
            vec![ErrorCode::DuplicateUnit]
        );
    }

    #[test]
    fn use_before_definition() {
        assert_eq!(
            codes("fn f(a: bool) -> bool { let b = c; let c = a; b }"),
            vec![ErrorCode::UseBeforeDefinition]
        );
    }

    #[test]
    fn decl_enables_forward_reference() {
        let h = run("entity e(clk: clock, a: bool) -> bool { decl y; reg(clk) x = y; reg(clk) y = a; x }")
            .unwrap();
        let u = h.bodies.values().next().unwrap();
        let y = u.locals.iter().find(|l| l.name == "y").unwrap();
        assert!(y.forward_declared);
        assert_eq!(y.kind, LocalKind::Reg);
    }

    #[test]
    fn decl_never_defined() {
        assert_eq!(
            codes("fn f(a: bool) -> bool { decl y; a }"),
            vec![ErrorCode::DeclNeverDefined]
        );
    }

    #[test]
    fn entity_without_inst() {
        assert_eq!(
            codes("entity b(clk: clock) -> bool { true } entity t(clk: clock) -> bool { b(clk) }"),
            vec![ErrorCode::InstMismatch]
        );
    }

    #[test]
    fn inst_on_fn_and_missing_depth() {
        assert_eq!(
            codes("fn f() -> bool { true } pipeline(1) p(clk: clock) -> bool { reg; true } entity t(clk: clock) -> bool { let a = inst f(); inst p(clk) }"),
            vec![ErrorCode::InstMismatch, ErrorCode::InstMismatch]
        );
    }

    #[test]
    fn duplicate_stage_label() {
        assert_eq!(
            codes("pipeline(1) p(clk: clock) -> bool { 'a reg; 'a true }"),
            vec![ErrorCode::DuplicateStageLabel]
        );
    }

    #[test]
    fn stage_ref_outside_pipeline() {
        assert_eq!(
            codes("entity e(clk: clock, a: bool) -> bool { stage(-1).a }"),
            vec![ErrorCode::StageOutsidePipeline]
        );
    }

    #[test]
    fn labels_map_to_stage_indices() {
        let h = run("pipeline(4) p(clk: clock, a: bool) -> bool { 'initial reg * 3; 'late reg; stage(initial).a }")
            .unwrap();
        let u = h.bodies.values().next().unwrap();
        assert_eq!(u.labels.get("initial"), Some(&0));
        assert_eq!(u.labels.get("late"), Some(&3));
    }

    #[test]
    fn same_scope_redefinition_is_rejected_but_nested_shadowing_is_not() {
        assert_eq!(
            codes("fn f(a: bool) -> bool { let b = a; let b = a; b }"),
            vec![ErrorCode::DuplicateLocal]
        );
        assert!(run("fn f(a: bool) -> bool { let b = a; { let b = !a; b } }").is_ok());
    }

    #[test]
    fn unqualified_variants_resolve() {
        let h = run("enum Option<T> { None, Some{ val: T } } fn f(a: Option<bool>) -> bool { match a { Some(v) => v, None => false } }")
            .unwrap();
        assert!(validate(&h).is_ok());
    }

    #[test]
    fn relowering_is_deterministic() {
        let src = "enum Option<T> { None, Some{ val: T } } fn f(a: Option<bool>, b: Option<bool>) -> bool { match (a, b) { (Some(v), _) => v, (_, Some(v)) => v, _ => false } }";
        assert_eq!(run(src).unwrap(), run(src).unwrap());
    }

    #[test]
    fn recursive_type() {
        assert_eq!(codes("struct A { a: B } struct B { b: A }"), vec![ErrorCode::InfiniteType]);
    }

    #[test]
    fn external_and_attributes() {
        assert_eq!(codes("#[external] fn f() -> bool { true }"), vec![ErrorCode::ExternalBody]);
        assert_eq!(codes("fn f() -> bool;"), vec![ErrorCode::ExternalBody]);
        assert_eq!(codes("#[inline] fn f() -> bool { true }"), vec![ErrorCode::UnknownAttribute]);
    }

    #[test]
    fn cross_namespace_paths() {
        let a = parse_file("fn helper(x: bool) -> bool { x }", FileId(0)).unwrap();
        let b = parse_file("fn top(x: bool) -> bool { lib::helper(x) }", FileId(1)).unwrap();
        let h = resolve(&[
            SourceUnit { namespace: "lib".into(), program: &a },
            SourceUnit { namespace: "main".into(), program: &b },
        ])
        .unwrap();
        assert_eq!(h.bodies.len(), 2);
    }
}
