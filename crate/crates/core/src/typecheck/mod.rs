//! Type inference with bit-width arithmetic, pattern checks and unit-kind
//! rules. Each unit is checked independently against the signatures in the
//! item table.

pub mod infer;
pub mod kinds;
pub mod patterns;
pub mod solver;
pub mod types;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::diagnostics::{Diagnostic, ErrorCode, SourceSpan};
use crate::resolver::*;

pub use kinds::check_unit_kinds;
pub use types::{type_name, Type};

use infer::Inferer;
use solver::{Solver, TVar};

/// Solved types for every expression, local and pattern of one unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedUnit {
    pub id: UnitId,
    pub expr_types: Vec<Type>,
    pub local_types: Vec<Type>,
    pub pat_types: Vec<Type>,
    pub warnings: Vec<Diagnostic>,
}

impl TypedUnit {
    pub fn expr(&self, id: ExprId) -> &Type {
        &self.expr_types[id.0 as usize]
    }

    pub fn local(&self, id: LocalId) -> &Type {
        &self.local_types[id.0 as usize]
    }

    pub fn pat(&self, id: PatId) -> &Type {
        &self.pat_types[id.0 as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TypedProgram {
    pub units: BTreeMap<UnitId, TypedUnit>,
}

impl TypedProgram {
    pub fn warnings(&self) -> impl Iterator<Item = &Diagnostic> {
        self.units.values().flat_map(|u| u.warnings.iter())
    }
}

/// Checks every unit with a body. Errors from all units are collected.
pub fn check_program(p: &HirProgram) -> Result<TypedProgram, Vec<Diagnostic>> {
    let mut out = TypedProgram::default();
    let mut errors = vec![];
    for (id, unit) in &p.bodies {
        let head = p.items.unit(*id);
        match check_unit(&p.items, head, unit) {
            Ok(t) => {
                out.units.insert(*id, t);
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

pub fn check_unit(items: &ItemTable, head: &UnitHead, unit: &HirUnit) -> Result<TypedUnit, Vec<Diagnostic>> {
    check_body(items, head, unit, Some(&head.output))
}

/// Like [`check_unit`], but the body's type is taken from `output` when
/// given and inferred otherwise.
pub fn check_body(
    items: &ItemTable,
    head: &UnitHead,
    unit: &HirUnit,
    output: Option<&HirType>,
) -> Result<TypedUnit, Vec<Diagnostic>> {
    let mut errors = check_unit_kinds(items, head, unit);
    let mut solver = Solver::new(items);
    let mut inf = Inferer::new(&mut solver, items, unit);
    inf.params(head, unit);
    let out = match output {
        Some(t) => inf.s.from_hir(t, &[]),
        None => inf.s.fresh(),
    };
    inf.body(&unit.body, out);
    let Inferer {
        exprs,
        locals,
        pats,
        regs,
        memories,
        ..
    } = inf;
    solver.solve();
    errors.append(&mut solver.errors);
    if !errors.is_empty() {
        return Err(errors);
    }

    let resolve_all = |s: &mut Solver, vs: &[TVar]| -> Vec<Option<Type>> {
        vs.iter().map(|v| s.resolve(*v)).collect()
    };
    let expr_types = resolve_all(&mut solver, &exprs);
    let local_types = resolve_all(&mut solver, &locals);
    let pat_types = resolve_all(&mut solver, &pats);
    let ambiguous = report_ambiguous(&mut solver, unit, &expr_types, &local_types, &exprs);
    if !ambiguous.is_empty() {
        return Err(ambiguous);
    }
    let expr_types: Vec<Type> = expr_types.into_iter().map(Option::unwrap).collect();
    let local_types: Vec<Type> = local_types.into_iter().map(|t| t.unwrap_or(Type::unit())).collect();
    let pat_types: Vec<Type> = pat_types.into_iter().map(|t| t.unwrap_or(Type::unit())).collect();

    for (l, span) in regs {
        let t = &local_types[l.0 as usize];
        if !t.is_data(items) {
            errors.push(
                Diagnostic::error(
                    ErrorCode::UnregistrableType,
                    format!("A register cannot hold a value of type {}", type_name(items, t)),
                    span,
                )
                .label("register declared here")
                .note("registers store plain data; wires, clocks and memories cannot be stored"),
            );
        }
    }
    for (t, span) in memories {
        if let Some(t) = solver.resolve(t) {
            if !t.is_data(items) {
                errors.push(
                    Diagnostic::error(
                        ErrorCode::MemoryWireValue,
                        format!("A memory cannot store values of type {}", type_name(items, &t)),
                        span,
                    )
                    .label("memory instantiated here"),
                );
            }
        }
    }

    let mut warnings = vec![];
    check_patterns(items, unit, &expr_types, &pat_types, &mut errors, &mut warnings);
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(TypedUnit {
        id: unit.id,
        expr_types,
        local_types,
        pat_types,
        warnings,
    })
}

fn report_ambiguous(
    solver: &mut Solver,
    unit: &HirUnit,
    exprs: &[Option<Type>],
    locals: &[Option<Type>],
    vars: &[TVar],
) -> Vec<Diagnostic> {
    let mut out = vec![];
    let mut seen = BTreeSet::new();
    let mut all = vec![];
    walk_block(&unit.body, &mut |e| all.push(e));
    for e in &all {
        if exprs[e.id.0 as usize].is_some() {
            continue;
        }
        let mut inner_unresolved = false;
        walk_expr(e, &mut |c| {
            if c.id != e.id && exprs[c.id.0 as usize].is_none() {
                inner_unresolved = true;
            }
        });
        if inner_unresolved || !seen.insert((e.span.start, e.span.end)) {
            continue;
        }
        let partial = solver.describe(vars[e.id.0 as usize]);
        out.push(ambiguous(e.span, &partial));
    }
    if out.is_empty() {
        for (i, t) in locals.iter().enumerate() {
            if t.is_none() {
                let info = &unit.locals[i];
                out.push(ambiguous(info.span, &format!("the type of `{}`", info.name)));
                break;
            }
        }
    }
    if out.is_empty() && exprs.iter().any(Option::is_none) {
        out.push(ambiguous(unit.body.span, "the type of this block"));
    }
    out
}

fn ambiguous(span: SourceSpan, partial: &str) -> Diagnostic {
    let what = if partial == "_" {
        "the type of this expression".to_string()
    } else if partial.starts_with("the ") {
        partial.to_string()
    } else {
        format!("the full type {partial}")
    };
    Diagnostic::error(ErrorCode::AmbiguousType, format!("Cannot infer {what}"), span)
        .label("type annotations needed here")
        .note("add a type annotation, e.g. `let x: int<8> = ...`")
}

fn check_patterns(
    items: &ItemTable,
    unit: &HirUnit,
    exprs: &[Type],
    pats: &[Type],
    errors: &mut Vec<Diagnostic>,
    warnings: &mut Vec<Diagnostic>,
) {
    let mut lets: Vec<&HPattern> = vec![];
    collect_lets_shallow(&unit.body, &mut lets);
    let mut matches = vec![];
    walk_block(&unit.body, &mut |e| {
        match &e.kind {
            HExprKind::Block(b) => collect_lets_shallow(b, &mut lets),
            HExprKind::Match { scrutinee, arms } => matches.push((e, scrutinee, arms)),
            _ => {}
        }
    });
    for p in lets {
        let ty = &pats[p.id.0 as usize];
        if let Some(w) = patterns::refutable(items, ty, p) {
            errors.push(
                Diagnostic::error(
                    ErrorCode::NonExhaustiveMatch,
                    format!("Refutable pattern in `let`: `{w}` not covered"),
                    p.span,
                )
                .label(format!("pattern `{w}` not covered"))
                .note("use `match` to handle every case"),
            );
        }
    }
    for (e, scrutinee, arms) in matches {
        let ty = &exprs[scrutinee.id.0 as usize];
        let pats: Vec<&HPattern> = arms.iter().map(|a| &a.pattern).collect();
        let report = patterns::check_match(items, ty, &pats);
        for i in report.unreachable {
            warnings.push(
                Diagnostic::warning(ErrorCode::UnreachableArm, "Unreachable match arm", arms[i].pattern.span)
                    .label("earlier arms already cover every value matched here"),
            );
        }
        if let Some(w) = report.missing {
            errors.push(
                Diagnostic::error(
                    ErrorCode::NonExhaustiveMatch,
                    format!("Non-exhaustive match: pattern `{w}` not covered"),
                    scrutinee.span,
                )
                .label(format!("pattern `{w}` not covered"))
                .note_at(e.span, "add an arm for the missing case or a wildcard `_`"),
            );
        }
    }
}

fn collect_lets_shallow<'a>(b: &'a HBlock, out: &mut Vec<&'a HPattern>) {
    for s in &b.stmts {
        if let HStmtKind::Let { pattern, .. } = &s.kind {
            out.push(pattern);
        }
    }
}

/// Stable text for `--emit typed`: every binding with its solved type.
pub fn dump_typed(p: &HirProgram, t: &TypedProgram) -> String {
    let mut out = String::new();
    for (id, unit) in &p.bodies {
        let Some(tu) = t.units.get(id) else { continue };
        let head = p.items.unit(*id);
        let _ = writeln!(
            out,
            "{} {} -> {}",
            head.kind.keyword(),
            head.path,
            type_name(&p.items, tu.expr(unit.body.id))
        );
        for (i, info) in unit.locals.iter().enumerate() {
            let _ = writeln!(
                out,
                "    {}#{i}: {}",
                info.name,
                type_name(&p.items, &tu.local_types[i])
            );
        }
    }
    out
}

#[cfg(test)]
mod tests;
