//! Constraint generation: walks one unit body and feeds the solver.

use crate::diagnostics::{Diagnostic, ErrorCode, SourceSpan};
use crate::frontend::ast::{BinaryOp, UnaryOp};
use crate::resolver::*;

use super::solver::{Constraint, NVar, Solver, TVar, TyCon};

pub struct Inferer<'s, 'a> {
    pub s: &'s mut Solver<'a>,
    pub items: &'a ItemTable,
    pub exprs: Vec<TVar>,
    pub locals: Vec<TVar>,
    pub pats: Vec<TVar>,
    /// Register locals with the span of their statement, checked after solving.
    pub regs: Vec<(LocalId, SourceSpan)>,
    /// Memory element types with the instantiation span.
    pub memories: Vec<(TVar, SourceSpan)>,
}

impl<'s, 'a> Inferer<'s, 'a> {
    pub fn new(s: &'s mut Solver<'a>, items: &'a ItemTable, unit: &HirUnit) -> Self {
        let exprs = (0..unit.expr_count).map(|_| s.fresh()).collect();
        let locals = (0..unit.locals.len()).map(|_| s.fresh()).collect();
        let pats = (0..unit.pat_count).map(|_| s.fresh()).collect();
        Inferer {
            s,
            items,
            exprs,
            locals,
            pats,
            regs: vec![],
            memories: vec![],
        }
    }

    fn expect(&mut self, expected: TVar, found: TVar, span: SourceSpan) -> bool {
        self.s.expect(expected, found, ErrorCode::TypeMismatch, span)
    }

    pub fn params(&mut self, head: &UnitHead, unit: &HirUnit) {
        for (l, p) in unit.params.iter().zip(&head.params) {
            let t = self.s.from_hir(&p.ty, &[]);
            let lt = self.locals[l.0 as usize];
            self.expect(lt, t, p.span);
        }
    }

    /// Checks the body against `output`; a missing tail expression means `()`.
    pub fn body(&mut self, b: &HBlock, output: TVar) {
        let t = self.block(b);
        let span = b.result.as_ref().map(|r| r.span).unwrap_or(b.span);
        self.expect(output, t, span);
    }

    pub fn block(&mut self, b: &HBlock) -> TVar {
        for s in &b.stmts {
            self.stmt(s);
        }
        let t = match &b.result {
            Some(r) => self.expr(r),
            None => self.s.unit(),
        };
        let bt = self.exprs[b.id.0 as usize];
        self.expect(bt, t, b.span);
        bt
    }

    fn stmt(&mut self, st: &HStmt) {
        match &st.kind {
            HStmtKind::Let { pattern, ty, value } => {
                let v = self.expr(value);
                if let Some(ty) = ty {
                    let t = self.s.from_hir(ty, &[]);
                    self.expect(t, v, value.span);
                }
                self.pattern(pattern, v, ErrorCode::TypeMismatch);
            }
            HStmtKind::Reg {
                local,
                clock,
                ty,
                reset,
                value,
            } => {
                let lt = self.locals[local.0 as usize];
                let c = self.expr(clock);
                let clk = self.s.con(TyCon::Clock);
                self.expect(clk, c, clock.span);
                if let Some(ty) = ty {
                    let t = self.s.from_hir(ty, &[]);
                    self.expect(t, lt, st.span);
                }
                if let Some(r) = reset {
                    let trig = self.expr(&r.trigger);
                    let b = self.s.bool();
                    self.expect(b, trig, r.trigger.span);
                    let rv = self.expr(&r.value);
                    self.expect(lt, rv, r.value.span);
                }
                let v = self.expr(value);
                self.expect(lt, v, value.span);
                self.regs.push((*local, st.span));
            }
            HStmtKind::Set { target, value } => {
                let t = self.expr(target);
                let inner = self.s.fresh();
                let w = self.s.con(TyCon::MutWire(inner));
                if self.expect(w, t, target.span) {
                    let v = self.expr(value);
                    self.expect(inner, v, value.span);
                } else {
                    self.expr(value);
                }
            }
            HStmtKind::Expr(e) => {
                self.expr(e);
            }
            HStmtKind::PipelineReg { .. } | HStmtKind::Label(_) | HStmtKind::Decl(_) => {}
        }
    }

    pub fn pattern(&mut self, p: &HPattern, expected: TVar, code: ErrorCode) {
        let pt = self.pats[p.id.0 as usize];
        self.s.expect(expected, pt, code, p.span);
        match &p.kind {
            HPatternKind::Wildcard => {}
            HPatternKind::Bind(l) => {
                let lt = self.locals[l.0 as usize];
                self.s.expect(pt, lt, code, p.span);
            }
            HPatternKind::Int(v) => {
                let (t, _) = self.s.literal(*v, p.span);
                self.s.expect(pt, t, code, p.span);
            }
            HPatternKind::Bool(_) => {
                let b = self.s.bool();
                self.s.expect(pt, b, code, p.span);
            }
            HPatternKind::Tuple(ps) => {
                let elems: Vec<TVar> = ps.iter().map(|_| self.s.fresh()).collect();
                let t = self.s.con(TyCon::Tuple(elems.clone()));
                if self.s.expect(pt, t, code, p.span) {
                    for (sub, e) in ps.iter().zip(elems) {
                        self.pattern(sub, e, code);
                    }
                }
            }
            HPatternKind::Variant(tid, vi, ps) => {
                let decl = self.items.type_decl(*tid);
                let args: Vec<TVar> = decl.params.iter().map(|_| self.s.fresh()).collect();
                let t = self.s.con(TyCon::Named(*tid, args.clone()));
                let fields: Vec<HirType> =
                    decl.variants()[*vi].fields.iter().map(|f| f.ty.clone()).collect();
                if self.s.expect(pt, t, code, p.span) {
                    for (sub, f) in ps.iter().zip(fields) {
                        let ft = self.s.from_hir(&f, &args);
                        self.pattern(sub, ft, code);
                    }
                }
            }
        }
    }

    fn exprs_of(&mut self, es: &[HExpr]) -> Vec<TVar> {
        es.iter().map(|e| self.expr(e)).collect()
    }

    pub fn expr(&mut self, e: &HExpr) -> TVar {
        let et = self.exprs[e.id.0 as usize];
        let t = self.expr_inner(e);
        self.expect(et, t, e.span);
        et
    }

    fn int_operand(&mut self, e: &HExpr) -> NVar {
        let t = self.expr(e);
        let (it, w) = self.s.fresh_int();
        self.s.expect(it, t, ErrorCode::TypeMismatch, e.span);
        w
    }

    fn expr_inner(&mut self, e: &HExpr) -> TVar {
        match &e.kind {
            HExprKind::Int(v) => self.s.literal(*v, e.span).0,
            HExprKind::Bool(_) => self.s.bool(),
            HExprKind::Local(l) => self.locals[l.0 as usize],
            HExprKind::StageRef { local, .. } => self.locals[local.0 as usize],
            HExprKind::Tuple(es) => {
                let ts = self.exprs_of(es);
                self.s.con(TyCon::Tuple(ts))
            }
            HExprKind::Array(es) => {
                let elem = self.s.fresh();
                for x in es {
                    let t = self.expr(x);
                    self.expect(elem, t, x.span);
                }
                let n = self.s.known_n(es.len() as u64);
                self.s.con(TyCon::Array(elem, n))
            }
            HExprKind::Field(b, name) => {
                let base = self.expr(b);
                let result = self.s.fresh();
                self.s.constraints.push(Constraint::Field {
                    base,
                    name: name.name.clone(),
                    result,
                    span: e.span,
                });
                result
            }
            HExprKind::TupleIndex(b, i) => {
                let base = self.expr(b);
                let result = self.s.fresh();
                self.s.constraints.push(Constraint::TupleIndex {
                    base,
                    index: *i,
                    result,
                    span: e.span,
                });
                result
            }
            HExprKind::Index(a, i) => {
                let base = self.expr(a);
                let w = self.int_operand(i);
                if matches!(i.kind, HExprKind::Int(_)) {
                    self.s.mark_index_literal(w);
                }
                let result = self.s.fresh();
                self.s.constraints.push(Constraint::Index {
                    base,
                    result,
                    span: e.span,
                });
                result
            }
            HExprKind::Unary(op, a) => self.unary(*op, a, e.span),
            HExprKind::Binary(op, a, b) => self.binary(*op, a, b, e.span),
            HExprKind::If {
                cond,
                then,
                otherwise,
            } => {
                let c = self.expr(cond);
                let b = self.s.bool();
                self.s.expect(b, c, ErrorCode::NonBoolCondition, cond.span);
                let t = self.expr(then);
                let o = self.expr(otherwise);
                self.expect(t, o, otherwise.span);
                t
            }
            HExprKind::Match { scrutinee, arms } => {
                let st = self.expr(scrutinee);
                let result = self.s.fresh();
                for arm in arms {
                    self.pattern(&arm.pattern, st, ErrorCode::MatchTypeMismatch);
                    let v = self.expr(&arm.value);
                    self.s
                        .expect(result, v, ErrorCode::MatchTypeMismatch, arm.value.span);
                }
                result
            }
            HExprKind::Block(b) => self.block(b),
            HExprKind::Struct(tid, args) => {
                let decl = self.items.type_decl(*tid);
                let fields: Vec<HirType> = decl.fields().iter().map(|f| f.ty.clone()).collect();
                self.construct(*tid, &fields, args)
            }
            HExprKind::Variant(tid, vi, args) => {
                let decl = self.items.type_decl(*tid);
                let fields: Vec<HirType> =
                    decl.variants()[*vi].fields.iter().map(|f| f.ty.clone()).collect();
                self.construct(*tid, &fields, args)
            }
            HExprKind::Call(callee, args) | HExprKind::Inst { callee, args, .. } => {
                self.call(*callee, args, e.span)
            }
            HExprKind::Port => {
                let inner = self.s.fresh();
                let m = self.s.con(TyCon::MutWire(inner));
                let r = self.s.con(TyCon::Wire(inner));
                self.s.con(TyCon::Tuple(vec![m, r]))
            }
        }
    }

    fn construct(&mut self, tid: TypeId, fields: &[HirType], args: &[HExpr]) -> TVar {
        let decl = self.items.type_decl(tid);
        let targs: Vec<TVar> = decl.params.iter().map(|_| self.s.fresh()).collect();
        for (a, f) in args.iter().zip(fields) {
            let ft = self.s.from_hir(f, &targs);
            let at = self.expr(a);
            self.expect(ft, at, a.span);
        }
        for a in args.iter().skip(fields.len()) {
            self.expr(a);
        }
        self.s.con(TyCon::Named(tid, targs))
    }

    fn call(&mut self, callee: Callee, args: &[HExpr], span: SourceSpan) -> TVar {
        match callee {
            Callee::Unit(id) => {
                let head = self.items.unit(id);
                let params: Vec<HirType> = head.params.iter().map(|p| p.ty.clone()).collect();
                let output = head.output.clone();
                for (a, p) in args.iter().zip(&params) {
                    let pt = self.s.from_hir(p, &[]);
                    let at = self.expr(a);
                    self.expect(pt, at, a.span);
                }
                for a in args.iter().skip(params.len()) {
                    self.expr(a);
                }
                self.s.from_hir(&output, &[])
            }
            Callee::Intrinsic(Intrinsic::Trunc) => {
                let (result, to) = self.s.fresh_int();
                if let Some(a) = args.first() {
                    let from = self.int_operand(a);
                    self.s.constraints.push(Constraint::Trunc { from, to, span });
                }
                result
            }
            Callee::Intrinsic(Intrinsic::ClockedMemory) => {
                let elem = self.s.fresh();
                let (addr, aw) = self.s.fresh_int();
                let depth = self.s.fresh_n();
                if let [clk, ports] = args {
                    let c = self.expr(clk);
                    let ct = self.s.con(TyCon::Clock);
                    self.expect(ct, c, clk.span);
                    let b = self.s.bool();
                    let port = self.s.con(TyCon::Tuple(vec![b, addr, elem]));
                    let count = self.s.fresh_n();
                    let arr = self.s.con(TyCon::Array(port, count));
                    let pt = self.expr(ports);
                    self.expect(arr, pt, ports.span);
                }
                self.s.constraints.push(Constraint::Pow2 { depth, aw, span });
                self.memories.push((elem, span));
                self.s.con(TyCon::Memory(elem, depth))
            }
            Callee::Intrinsic(Intrinsic::ReadMemory) => {
                let elem = self.s.fresh();
                let depth = self.s.fresh_n();
                if let [mem, addr] = args {
                    let m = self.expr(mem);
                    let mt = self.s.con(TyCon::Memory(elem, depth));
                    self.expect(mt, m, mem.span);
                    let aw = self.int_operand(addr);
                    self.s.constraints.push(Constraint::Pow2 { depth, aw, span });
                }
                elem
            }
        }
    }

    fn unary(&mut self, op: UnaryOp, a: &HExpr, span: SourceSpan) -> TVar {
        match op {
            UnaryOp::Neg => {
                let w = self.int_operand(a);
                let (t, c) = self.s.fresh_int();
                self.s.constraints.push(Constraint::Succ { a: w, c, span });
                t
            }
            UnaryOp::Not => {
                let t = self.expr(a);
                let b = self.s.bool();
                self.expect(b, t, a.span);
                b
            }
            UnaryOp::BitNot => {
                let t = self.expr(a);
                self.s.constraints.push(Constraint::IsIntOrBool { t, span: a.span });
                t
            }
            UnaryOp::Deref => {
                let t = self.expr(a);
                let inner = self.s.fresh();
                let w = self.s.con(TyCon::Wire(inner));
                self.expect(w, t, a.span);
                inner
            }
            UnaryOp::Wire => {
                let t = self.expr(a);
                self.s.con(TyCon::Wire(t))
            }
        }
    }

    fn binary(&mut self, op: BinaryOp, a: &HExpr, b: &HExpr, span: SourceSpan) -> TVar {
        use BinaryOp::*;
        match op {
            Add | Sub | Mul => {
                let wa = self.int_operand(a);
                let wb = self.int_operand(b);
                let (t, c) = self.s.fresh_int();
                self.s.constraints.push(if op == Mul {
                    Constraint::Mul { a: wa, b: wb, c, span }
                } else {
                    Constraint::Add { a: wa, b: wb, c, span }
                });
                t
            }
            Eq | Ne => {
                let ta = self.expr(a);
                let tb = self.expr(b);
                self.expect(ta, tb, b.span);
                self.s.constraints.push(Constraint::IsIntOrBool { t: ta, span: a.span });
                self.s.bool()
            }
            Lt | Gt | Le | Ge => {
                let wa = self.int_operand(a);
                let wb = self.int_operand(b);
                if self.s.unify_n(wa, wb).is_err() {
                    self.width_mismatch(wa, wb, b.span);
                }
                self.s.bool()
            }
            LogicAnd | LogicOr => {
                let bt = self.s.bool();
                let ta = self.expr(a);
                self.expect(bt, ta, a.span);
                let tb = self.expr(b);
                self.expect(bt, tb, b.span);
                bt
            }
            BitAnd | BitOr | BitXor => {
                let ta = self.expr(a);
                let tb = self.expr(b);
                self.expect(ta, tb, b.span);
                self.s.constraints.push(Constraint::IsIntOrBool { t: ta, span: a.span });
                ta
            }
            Shl | Shr => {
                let wa = self.int_operand(a);
                let wb = self.int_operand(b);
                if self.s.unify_n(wa, wb).is_err() {
                    self.width_mismatch(wa, wb, b.span);
                }
                self.s.int(wa)
            }
        }
    }

    fn width_mismatch(
        &mut self,
        wa: NVar,
        wb: NVar,
        span: SourceSpan,
    ) {
        let (x, y) = (self.s.value(wa).unwrap_or(0), self.s.value(wb).unwrap_or(0));
        self.s.errors.push(
            Diagnostic::error(
                ErrorCode::TypeMismatch,
                format!("Type mismatch: expected int<{x}>, found int<{y}>"),
                span,
            )
            .label(format!("expected int<{x}>"))
            .note("both operands must have the same width"),
        );
    }
}
