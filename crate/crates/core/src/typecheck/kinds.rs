//! Checks that constructs match the kind of unit they appear in.

use crate::diagnostics::{Diagnostic, ErrorCode};
use crate::resolver::*;

pub fn check_unit_kinds(items: &ItemTable, head: &UnitHead, unit: &HirUnit) -> Vec<Diagnostic> {
    let mut c = KindChecker {
        items,
        kind: head.kind,
        errors: vec![],
    };
    c.block(&unit.body, true);
    c.errors
}

struct KindChecker<'a> {
    items: &'a ItemTable,
    kind: UnitKind,
    errors: Vec<Diagnostic>,
}

impl KindChecker<'_> {
    fn block(&mut self, b: &HBlock, top: bool) {
        for s in &b.stmts {
            self.stmt(s, top);
        }
        if let Some(r) = &b.result {
            self.expr(r);
        }
    }

    fn stage_stmt(&mut self, st: &HStmt, top: bool, what: &str) {
        let (msg, label) = match self.kind {
            UnitKind::Pipeline(_) if top => return,
            UnitKind::Pipeline(_) => (
                format!("{what} must be at the top level of the pipeline body"),
                "nested inside a block",
            ),
            k => (
                format!("{what} is only allowed in a pipeline"),
                if k == UnitKind::Fn {
                    "used inside a fn"
                } else {
                    "used inside an entity"
                },
            ),
        };
        self.errors.push(
            Diagnostic::error(ErrorCode::StageOutsidePipelineBody, msg, st.span).label(label),
        );
    }

    fn stmt(&mut self, st: &HStmt, top: bool) {
        match &st.kind {
            HStmtKind::PipelineReg { .. } => self.stage_stmt(st, top, "a pipeline stage register"),
            HStmtKind::Label(_) => self.stage_stmt(st, top, "a stage label"),
            HStmtKind::Reg { .. } if self.kind == UnitKind::Fn => {
                self.errors.push(
                    Diagnostic::error(
                        ErrorCode::SequentialInFn,
                        "Registers are not allowed in a fn",
                        st.span,
                    )
                    .label("register declared here")
                    .note("a fn only describes combinational logic; use an entity for state"),
                );
            }
            _ => {}
        }
        let mut exprs = vec![];
        match &st.kind {
            HStmtKind::Let { value, .. } | HStmtKind::Expr(value) => exprs.push(value),
            HStmtKind::Reg {
                clock,
                reset,
                value,
                ..
            } => {
                exprs.push(clock);
                if let Some(r) = reset {
                    exprs.push(&r.trigger);
                    exprs.push(&r.value);
                }
                exprs.push(value);
            }
            HStmtKind::Set { target, value } => {
                exprs.push(target);
                exprs.push(value);
            }
            HStmtKind::PipelineReg { .. } | HStmtKind::Label(_) | HStmtKind::Decl(_) => {}
        }
        for e in exprs {
            self.expr(e);
        }
    }

    fn expr(&mut self, e: &HExpr) {
        match &e.kind {
            HExprKind::Block(b) => return self.block(b, false),
            HExprKind::If {
                cond,
                then,
                otherwise,
            } => {
                self.expr(cond);
                self.expr(then);
                self.expr(otherwise);
                return;
            }
            HExprKind::Match { scrutinee, arms } => {
                self.expr(scrutinee);
                for a in arms {
                    self.expr(&a.value);
                }
                return;
            }
            HExprKind::Inst { callee, .. } | HExprKind::Call(callee, _)
                if self.kind == UnitKind::Fn =>
            {
                let (kind, name) = match callee {
                    Callee::Unit(u) => {
                        let h = self.items.unit(*u);
                        (h.kind, h.path.clone())
                    }
                    Callee::Intrinsic(i) => (i.kind(), i.name().to_string()),
                };
                if kind != UnitKind::Fn {
                    self.errors.push(
                        Diagnostic::error(
                            ErrorCode::SequentialInFn,
                            format!("Cannot instantiate {} `{name}` in a fn", kind.keyword()),
                            e.span,
                        )
                        .label("instantiated here")
                        .note("a fn only describes combinational logic; use an entity instead"),
                    );
                }
            }
            _ => {}
        }
        // Children without statement-bearing blocks are scanned directly.
        let mut children = vec![];
        match &e.kind {
            HExprKind::Tuple(es)
            | HExprKind::Array(es)
            | HExprKind::Struct(_, es)
            | HExprKind::Variant(_, _, es)
            | HExprKind::Call(_, es)
            | HExprKind::Inst { args: es, .. } => children.extend(es.iter()),
            HExprKind::Field(b, _) | HExprKind::TupleIndex(b, _) | HExprKind::Unary(_, b) => {
                children.push(b.as_ref())
            }
            HExprKind::Index(a, b) | HExprKind::Binary(_, a, b) => {
                children.push(a.as_ref());
                children.push(b.as_ref());
            }
            _ => {}
        }
        for c in children {
            self.expr(c);
        }
    }
}
