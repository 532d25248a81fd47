//! Unification over type terms plus a small arithmetic solver for widths.
//!
//! Type variables and number variables (integer widths, array lengths,
//! memory depths) live in separate union-find tables. Structural equality
//! is solved eagerly; width relations are kept as constraints and
//! propagated to a fixpoint once every equality is known.

use crate::diagnostics::{Diagnostic, ErrorCode, SourceSpan};
use crate::resolver::{HirType, ItemTable, TypeId};

use super::types::{type_name, Type};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TVar(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NVar(pub u32);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TyCon {
    Bool,
    Clock,
    Int(NVar),
    Tuple(Vec<TVar>),
    Array(TVar, NVar),
    Named(TypeId, Vec<TVar>),
    Wire(TVar),
    MutWire(TVar),
    Memory(TVar, NVar),
}

#[derive(Debug, Clone)]
pub enum Constraint {
    /// `c = max(a, b) + 1`
    Add { a: NVar, b: NVar, c: NVar, span: SourceSpan },
    /// `c = a + b`
    Mul { a: NVar, b: NVar, c: NVar, span: SourceSpan },
    /// `c = a + 1`
    Succ { a: NVar, c: NVar, span: SourceSpan },
    /// `to <= from`
    Trunc { from: NVar, to: NVar, span: SourceSpan },
    /// `depth = 2^aw`
    Pow2 { depth: NVar, aw: NVar, span: SourceSpan },
    /// The literal must fit in `w` bits.
    Literal { w: NVar, value: i128, span: SourceSpan },
    Field { base: TVar, name: String, result: TVar, span: SourceSpan },
    TupleIndex { base: TVar, index: u64, result: TVar, span: SourceSpan },
    Index { base: TVar, result: TVar, span: SourceSpan },
    IsInt { t: TVar, span: SourceSpan },
    IsIntOrBool { t: TVar, span: SourceSpan },
}

/// Two's-complement width needed to hold `v`.
pub fn literal_width(v: i128) -> u64 {
    let magnitude = if v < 0 { !v } else { v };
    (128 - magnitude.leading_zeros() as u64) + 1
}

pub fn fits(v: i128, width: u64) -> bool {
    width >= 128 || literal_width(v) <= width
}

#[derive(Debug)]
pub enum UnifyError {
    Mismatch,
    Occurs,
}

pub struct Solver<'a> {
    pub items: &'a ItemTable,
    tparent: Vec<u32>,
    tcon: Vec<Option<TyCon>>,
    nparent: Vec<u32>,
    nval: Vec<Option<u64>>,
    pub constraints: Vec<Constraint>,
    /// Number variables created for integer literals, with their minimal width.
    literals: Vec<(NVar, u64)>,
    /// Number variables that default to the literal minimum even outside
    /// arithmetic (index operands).
    index_literals: Vec<(NVar, u64)>,
    pub errors: Vec<Diagnostic>,
}

impl<'a> Solver<'a> {
    pub fn new(items: &'a ItemTable) -> Self {
        Solver {
            items,
            tparent: vec![],
            tcon: vec![],
            nparent: vec![],
            nval: vec![],
            constraints: vec![],
            literals: vec![],
            index_literals: vec![],
            errors: vec![],
        }
    }

    pub fn fresh(&mut self) -> TVar {
        self.tparent.push(self.tcon.len() as u32);
        self.tcon.push(None);
        TVar(self.tcon.len() as u32 - 1)
    }

    pub fn con(&mut self, c: TyCon) -> TVar {
        let v = self.fresh();
        self.tcon[v.0 as usize] = Some(c);
        v
    }

    pub fn fresh_n(&mut self) -> NVar {
        self.nparent.push(self.nval.len() as u32);
        self.nval.push(None);
        NVar(self.nval.len() as u32 - 1)
    }

    pub fn known_n(&mut self, v: u64) -> NVar {
        let n = self.fresh_n();
        self.nval[n.0 as usize] = Some(v);
        n
    }

    pub fn int(&mut self, w: NVar) -> TVar {
        self.con(TyCon::Int(w))
    }

    pub fn fresh_int(&mut self) -> (TVar, NVar) {
        let w = self.fresh_n();
        (self.int(w), w)
    }

    pub fn bool(&mut self) -> TVar {
        self.con(TyCon::Bool)
    }

    pub fn unit(&mut self) -> TVar {
        self.con(TyCon::Tuple(vec![]))
    }

    pub fn literal(&mut self, value: i128, span: SourceSpan) -> (TVar, NVar) {
        let (t, w) = self.fresh_int();
        self.literals.push((w, literal_width(value)));
        self.constraints.push(Constraint::Literal { w, value, span });
        (t, w)
    }

    pub fn mark_index_literal(&mut self, w: NVar) {
        let root = self.find_n(w);
        for (v, min) in self.literals.clone() {
            if self.find_n(v) == root {
                self.index_literals.push((w, min));
            }
        }
    }

    pub fn find(&mut self, v: TVar) -> TVar {
        let mut r = v.0;
        while self.tparent[r as usize] != r {
            r = self.tparent[r as usize];
        }
        let mut c = v.0;
        while self.tparent[c as usize] != r {
            let next = self.tparent[c as usize];
            self.tparent[c as usize] = r;
            c = next;
        }
        TVar(r)
    }

    pub fn find_n(&mut self, v: NVar) -> NVar {
        let mut r = v.0;
        while self.nparent[r as usize] != r {
            r = self.nparent[r as usize];
        }
        let mut c = v.0;
        while self.nparent[c as usize] != r {
            let next = self.nparent[c as usize];
            self.nparent[c as usize] = r;
            c = next;
        }
        NVar(r)
    }

    pub fn shape(&mut self, v: TVar) -> Option<TyCon> {
        let r = self.find(v);
        self.tcon[r.0 as usize].clone()
    }

    pub fn value(&mut self, n: NVar) -> Option<u64> {
        let r = self.find_n(n);
        self.nval[r.0 as usize]
    }

    /// Assigns a value to a number variable; false on conflict.
    pub fn set_n(&mut self, n: NVar, v: u64) -> bool {
        let r = self.find_n(n);
        match self.nval[r.0 as usize] {
            Some(old) => old == v,
            None => {
                self.nval[r.0 as usize] = Some(v);
                true
            }
        }
    }

    pub fn unify_n(&mut self, a: NVar, b: NVar) -> Result<(), UnifyError> {
        let (ra, rb) = (self.find_n(a), self.find_n(b));
        if ra == rb {
            return Ok(());
        }
        let (va, vb) = (self.nval[ra.0 as usize], self.nval[rb.0 as usize]);
        match (va, vb) {
            (Some(x), Some(y)) if x != y => return Err(UnifyError::Mismatch),
            _ => {}
        }
        self.nparent[rb.0 as usize] = ra.0;
        self.nval[ra.0 as usize] = va.or(vb);
        Ok(())
    }

    fn occurs(&mut self, v: TVar, in_t: TVar) -> bool {
        let r = self.find(in_t);
        if r == v {
            return true;
        }
        let children: Vec<TVar> = match self.tcon[r.0 as usize].clone() {
            Some(TyCon::Tuple(ts)) | Some(TyCon::Named(_, ts)) => ts,
            Some(TyCon::Array(t, _))
            | Some(TyCon::Wire(t))
            | Some(TyCon::MutWire(t))
            | Some(TyCon::Memory(t, _)) => vec![t],
            _ => vec![],
        };
        children.into_iter().any(|c| self.occurs(v, c))
    }

    pub fn unify(&mut self, a: TVar, b: TVar) -> Result<(), UnifyError> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return Ok(());
        }
        let ca = self.tcon[ra.0 as usize].clone();
        let cb = self.tcon[rb.0 as usize].clone();
        match (ca, cb) {
            (None, None) => {
                self.tparent[rb.0 as usize] = ra.0;
                Ok(())
            }
            (None, Some(_)) => {
                if self.occurs(ra, rb) {
                    return Err(UnifyError::Occurs);
                }
                self.tparent[ra.0 as usize] = rb.0;
                Ok(())
            }
            (Some(_), None) => {
                if self.occurs(rb, ra) {
                    return Err(UnifyError::Occurs);
                }
                self.tparent[rb.0 as usize] = ra.0;
                Ok(())
            }
            (Some(x), Some(y)) => {
                self.tparent[rb.0 as usize] = ra.0;
                let result = self.unify_cons(&x, &y);
                if result.is_err() {
                    // Keep the two classes apart so later messages still
                    // show the original types.
                    self.tparent[rb.0 as usize] = rb.0;
                }
                result
            }
        }
    }

    fn unify_cons(&mut self, x: &TyCon, y: &TyCon) -> Result<(), UnifyError> {
        use TyCon::*;
        match (x, y) {
            (Bool, Bool) | (Clock, Clock) => Ok(()),
            (Int(a), Int(b)) => self.unify_n(*a, *b),
            (Tuple(xs), Tuple(ys)) if xs.len() == ys.len() => {
                for (a, b) in xs.iter().zip(ys) {
                    self.unify(*a, *b)?;
                }
                Ok(())
            }
            (Array(a, n), Array(b, m)) => {
                self.unify(*a, *b)?;
                self.unify_n(*n, *m)
            }
            (Named(i, xs), Named(j, ys)) if i == j => {
                for (a, b) in xs.iter().zip(ys) {
                    self.unify(*a, *b)?;
                }
                Ok(())
            }
            (Wire(a), Wire(b)) | (MutWire(a), MutWire(b)) => self.unify(*a, *b),
            (Memory(a, n), Memory(b, m)) => {
                self.unify(*a, *b)?;
                self.unify_n(*n, *m)
            }
            _ => Err(UnifyError::Mismatch),
        }
    }

    pub fn from_hir(&mut self, t: &HirType, args: &[TVar]) -> TVar {
        match t {
            HirType::Bool => self.bool(),
            HirType::Clock => self.con(TyCon::Clock),
            HirType::Int(n) => {
                let w = self.known_n(*n as u64);
                self.int(w)
            }
            HirType::Tuple(ts) => {
                let vs = ts.iter().map(|t| self.from_hir(t, args)).collect();
                self.con(TyCon::Tuple(vs))
            }
            HirType::Array(t, n) => {
                let e = self.from_hir(t, args);
                let n = self.known_n(*n);
                self.con(TyCon::Array(e, n))
            }
            HirType::Named(id, ts) => {
                let vs = ts.iter().map(|t| self.from_hir(t, args)).collect();
                self.con(TyCon::Named(*id, vs))
            }
            HirType::Param(i) => args[*i],
            HirType::Wire(t) => {
                let v = self.from_hir(t, args);
                self.con(TyCon::Wire(v))
            }
            HirType::MutWire(t) => {
                let v = self.from_hir(t, args);
                self.con(TyCon::MutWire(v))
            }
            HirType::Memory(t, d) => {
                let v = self.from_hir(t, args);
                let d = self.known_n(*d);
                self.con(TyCon::Memory(v, d))
            }
        }
    }

    /// Partially solved type as text; unknown parts print as `_`.
    pub fn describe(&mut self, v: TVar) -> String {
        let Some(c) = self.shape(v) else {
            return "_".into();
        };
        let n = |s: &mut Self, n: NVar| s.value(n).map(|v| v.to_string()).unwrap_or("_".into());
        match c {
            TyCon::Bool => "bool".into(),
            TyCon::Clock => "clock".into(),
            TyCon::Int(w) => format!("int<{}>", n(self, w)),
            TyCon::Tuple(ts) => {
                let inner: Vec<String> = ts.iter().map(|t| self.describe(*t)).collect();
                if ts.len() == 1 {
                    format!("({},)", inner[0])
                } else {
                    format!("({})", inner.join(", "))
                }
            }
            TyCon::Array(t, len) => format!("[{}; {}]", self.describe(t), n(self, len)),
            TyCon::Named(id, ts) => {
                let name = self.items.type_decl(id).name.clone();
                if ts.is_empty() {
                    name
                } else {
                    let inner: Vec<String> = ts.iter().map(|t| self.describe(*t)).collect();
                    format!("{name}<{}>", inner.join(", "))
                }
            }
            TyCon::Wire(t) => format!("&{}", self.describe(t)),
            TyCon::MutWire(t) => format!("&mut {}", self.describe(t)),
            TyCon::Memory(t, d) => format!("Memory<{}, {}>", self.describe(t), n(self, d)),
        }
    }

    /// Unifies `found` into `expected`, reporting a mismatch with `code`.
    pub fn expect(
        &mut self,
        expected: TVar,
        found: TVar,
        code: ErrorCode,
        span: SourceSpan,
    ) -> bool {
        let before_e = self.describe(expected);
        let before_f = self.describe(found);
        match self.unify(expected, found) {
            Ok(()) => true,
            Err(UnifyError::Mismatch) => {
                let mut d = Diagnostic::error(
                    code,
                    format!("Type mismatch: expected {before_e}, found {before_f}"),
                    span,
                )
                .label(format!("expected {before_e}"));
                if before_e.starts_with("int<") && before_f.starts_with("int<") {
                    d = d.note("integer widths never change implicitly; use `trunc` to narrow a value");
                }
                self.errors.push(d);
                false
            }
            Err(UnifyError::Occurs) => {
                self.errors.push(
                    Diagnostic::error(
                        ErrorCode::OccursCheck,
                        format!("Infinite type: {before_e} would have to contain {before_f}"),
                        span,
                    )
                    .label("this expression would have an infinite type"),
                );
                false
            }
        }
    }

    fn width_error(&mut self, span: SourceSpan, expected: u64, found: u64) {
        self.errors.push(
            Diagnostic::error(
                ErrorCode::TypeMismatch,
                format!("Type mismatch: expected int<{expected}>, found int<{found}>"),
                span,
            )
            .label(format!("this has type int<{found}>"))
            .note("integer widths never change implicitly; use `trunc` to narrow a value"),
        );
    }

    /// Applies one constraint; returns whether anything changed and whether
    /// it is fully discharged.
    fn apply(&mut self, c: &Constraint) -> (bool, bool) {
        match c {
            Constraint::Add { a, b, c, span } => {
                let (va, vb, vc) = (self.value(*a), self.value(*b), self.value(*c));
                match (va, vb) {
                    (Some(x), Some(y)) => {
                        let want = x.max(y) + 1;
                        match vc {
                            Some(z) if z != want => {
                                self.width_error(*span, z, want);
                                (false, true)
                            }
                            Some(_) => (false, true),
                            None => {
                                self.set_n(*c, want);
                                (true, true)
                            }
                        }
                    }
                    _ => (false, false),
                }
            }
            Constraint::Mul { a, b, c, span } => {
                let (va, vb, vc) = (self.value(*a), self.value(*b), self.value(*c));
                match (va, vb, vc) {
                    (Some(x), Some(y), Some(z)) => {
                        if x + y != z {
                            self.width_error(*span, z, x + y);
                        }
                        (false, true)
                    }
                    (Some(x), Some(y), None) => {
                        self.set_n(*c, x + y);
                        (true, true)
                    }
                    (Some(x), None, Some(z)) | (None, Some(x), Some(z)) => {
                        let other = if va.is_some() { *b } else { *a };
                        if z > x {
                            self.set_n(other, z - x);
                        } else {
                            self.width_error(*span, z, x + 1);
                        }
                        (true, true)
                    }
                    _ => (false, false),
                }
            }
            Constraint::Succ { a, c, span } => match (self.value(*a), self.value(*c)) {
                (Some(x), Some(z)) => {
                    if x + 1 != z {
                        self.width_error(*span, z, x + 1);
                    }
                    (false, true)
                }
                (Some(x), None) => {
                    self.set_n(*c, x + 1);
                    (true, true)
                }
                (None, Some(z)) => {
                    if z >= 2 {
                        self.set_n(*a, z - 1);
                    } else {
                        self.width_error(*span, z, 2);
                    }
                    (true, true)
                }
                _ => (false, false),
            },
            Constraint::Trunc { from, to, span } => match (self.value(*from), self.value(*to)) {
                (Some(n), Some(m)) => {
                    if m > n {
                        self.errors.push(
                            Diagnostic::error(
                                ErrorCode::TruncToWider,
                                format!("Cannot truncate int<{n}> to the wider int<{m}>"),
                                *span,
                            )
                            .label(format!("truncation from {n} to {m} bits"))
                            .note("`trunc` can only remove bits"),
                        );
                    }
                    (false, true)
                }
                _ => (false, false),
            },
            Constraint::Pow2 { depth, aw, span } => match (self.value(*depth), self.value(*aw)) {
                (Some(d), Some(w)) => {
                    if w >= 64 || 1u64 << w != d {
                        self.errors.push(
                            Diagnostic::error(
                                ErrorCode::MemoryAddressWidth,
                                format!("Memory of depth {d} cannot be addressed by int<{w}>"),
                                *span,
                            )
                            .label("address width does not match the memory depth")
                            .note("a memory with an int<N> address has exactly 2^N cells"),
                        );
                    }
                    (false, true)
                }
                (None, Some(w)) if w < 64 => {
                    self.set_n(*depth, 1 << w);
                    (true, true)
                }
                (Some(d), None) => {
                    if d.is_power_of_two() && d >= 2 {
                        self.set_n(*aw, d.trailing_zeros() as u64);
                    } else {
                        self.errors.push(
                            Diagnostic::error(
                                ErrorCode::MemoryAddressWidth,
                                format!("Memory depth {d} is not a power of two"),
                                *span,
                            )
                            .label("memories have 2^N cells for an int<N> address"),
                        );
                    }
                    (true, true)
                }
                _ => (false, false),
            },
            Constraint::Literal { w, value, span } => match self.value(*w) {
                Some(n) => {
                    if !fits(*value, n) {
                        self.errors.push(
                            Diagnostic::error(
                                ErrorCode::TypeMismatch,
                                format!("Literal {value} does not fit in int<{n}>"),
                                *span,
                            )
                            .label(format!(
                                "needs at least {} bits as a signed integer",
                                literal_width(*value)
                            )),
                        );
                    }
                    (false, true)
                }
                None => (false, false),
            },
            Constraint::Field {
                base,
                name,
                result,
                span,
            } => match self.shape(*base) {
                None => (false, false),
                Some(TyCon::Named(id, args)) if !self.items.type_decl(id).is_enum() => {
                    let decl = self.items.type_decl(id);
                    match decl.fields().iter().find(|f| f.name == *name) {
                        Some(f) => {
                            let ty = f.ty.clone();
                            let ft = self.from_hir(&ty, &args);
                            self.expect(ft, *result, ErrorCode::TypeMismatch, *span);
                        }
                        None => {
                            let decl_name = decl.name.clone();
                            let names: Vec<String> =
                                decl.fields().iter().map(|f| f.name.clone()).collect();
                            self.errors.push(
                                Diagnostic::error(
                                    ErrorCode::TypeMismatch,
                                    format!("`{decl_name}` has no field `{name}`"),
                                    *span,
                                )
                                .label("unknown field")
                                .note(format!("available fields: {}", names.join(", "))),
                            );
                        }
                    }
                    (true, true)
                }
                Some(_) => {
                    let t = self.describe(*base);
                    self.errors.push(
                        Diagnostic::error(
                            ErrorCode::TypeMismatch,
                            format!("Type {t} has no fields"),
                            *span,
                        )
                        .label(format!("field access on {t}")),
                    );
                    (false, true)
                }
            },
            Constraint::TupleIndex {
                base,
                index,
                result,
                span,
            } => match self.shape(*base) {
                None => (false, false),
                Some(TyCon::Tuple(ts)) if (*index as usize) < ts.len() => {
                    self.expect(ts[*index as usize], *result, ErrorCode::TypeMismatch, *span);
                    (true, true)
                }
                Some(_) => {
                    let t = self.describe(*base);
                    self.errors.push(
                        Diagnostic::error(
                            ErrorCode::TypeMismatch,
                            format!("Type {t} has no element {index}"),
                            *span,
                        )
                        .label("invalid tuple index"),
                    );
                    (false, true)
                }
            },
            Constraint::Index { base, result, span } => match self.shape(*base) {
                None => (false, false),
                Some(TyCon::Array(e, _)) => {
                    self.expect(e, *result, ErrorCode::TypeMismatch, *span);
                    (true, true)
                }
                Some(_) => {
                    let t = self.describe(*base);
                    self.errors.push(
                        Diagnostic::error(
                            ErrorCode::TypeMismatch,
                            format!("Type {t} cannot be indexed"),
                            *span,
                        )
                        .label("only arrays can be indexed"),
                    );
                    (false, true)
                }
            },
            Constraint::IsInt { t, span } => match self.shape(*t) {
                None => (false, false),
                Some(TyCon::Int(_)) => (false, true),
                Some(_) => {
                    let d = self.describe(*t);
                    self.errors.push(
                        Diagnostic::error(
                            ErrorCode::TypeMismatch,
                            format!("Type mismatch: expected an integer, found {d}"),
                            *span,
                        )
                        .label("expected an integer"),
                    );
                    (false, true)
                }
            },
            Constraint::IsIntOrBool { t, span } => match self.shape(*t) {
                None => (false, false),
                Some(TyCon::Int(_)) | Some(TyCon::Bool) => (false, true),
                Some(_) => {
                    let d = self.describe(*t);
                    self.errors.push(
                        Diagnostic::error(
                            ErrorCode::TypeMismatch,
                            format!("Type mismatch: expected an integer or bool, found {d}"),
                            *span,
                        )
                        .label("expected an integer or bool"),
                    );
                    (false, true)
                }
            },
        }
    }

    /// Runs constraints to a fixpoint. Discharged constraints are dropped.
    pub fn propagate(&mut self) {
        loop {
            let pending = std::mem::take(&mut self.constraints);
            let mut changed = false;
            let mut keep = vec![];
            for c in pending {
                let (ch, done) = self.apply(&c);
                changed |= ch;
                if !done {
                    keep.push(c);
                }
            }
            // Constraints added while applying (none today) are preserved.
            keep.append(&mut self.constraints);
            self.constraints = keep;
            if !changed {
                break;
            }
        }
    }

    /// Propagates, then resolves literal widths that arithmetic leaves
    /// open: such a literal takes the widest known width among its
    /// arithmetic partners, or its own minimum if that is larger. Repeats
    /// until nothing changes.
    pub fn solve(&mut self) {
        self.propagate();
        loop {
            let mut assignments = vec![];
            for (w, min) in self.literals.clone() {
                if self.value(w).is_some() {
                    continue;
                }
                let root = self.find_n(w);
                let mut partner: Option<u64> = None;
                for c in self.constraints.clone() {
                    let (a, b) = match c {
                        Constraint::Add { a, b, .. } | Constraint::Mul { a, b, .. } => (a, b),
                        _ => continue,
                    };
                    let (ra, rb) = (self.find_n(a), self.find_n(b));
                    let other = if ra == root {
                        b
                    } else if rb == root {
                        a
                    } else {
                        continue;
                    };
                    if let Some(v) = self.value(other) {
                        partner = Some(partner.map_or(v, |p| p.max(v)));
                    }
                }
                if let Some(p) = partner {
                    assignments.push((w, p.max(min)));
                }
            }
            if assignments.is_empty() {
                for (w, min) in self.index_literals.clone() {
                    if self.value(w).is_none() {
                        assignments.push((w, min));
                    }
                }
            }
            if assignments.is_empty() {
                break;
            }
            for (w, v) in assignments {
                if self.value(w).is_none() {
                    self.set_n(w, v);
                }
            }
            self.propagate();
        }
    }

    pub fn resolve(&mut self, v: TVar) -> Option<Type> {
        Some(match self.shape(v)? {
            TyCon::Bool => Type::Bool,
            TyCon::Clock => Type::Clock,
            TyCon::Int(w) => Type::Int(u32::try_from(self.value(w)?).ok()?),
            TyCon::Tuple(ts) => Type::Tuple(
                ts.into_iter()
                    .map(|t| self.resolve(t))
                    .collect::<Option<_>>()?,
            ),
            TyCon::Array(t, n) => Type::Array(Box::new(self.resolve(t)?), self.value(n)?),
            TyCon::Named(id, ts) => Type::Named(
                id,
                ts.into_iter()
                    .map(|t| self.resolve(t))
                    .collect::<Option<_>>()?,
            ),
            TyCon::Wire(t) => Type::Wire(Box::new(self.resolve(t)?)),
            TyCon::MutWire(t) => Type::MutWire(Box::new(self.resolve(t)?)),
            TyCon::Memory(t, d) => Type::Memory(Box::new(self.resolve(t)?), self.value(d)?),
        })
    }

    pub fn type_name(&self, t: &Type) -> String {
        type_name(self.items, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::FileId;

    fn span() -> SourceSpan {
        SourceSpan::new(FileId(0), 0, 1)
    }

    #[test]
    fn literal_widths() {
        assert_eq!(literal_width(0), 1);
        assert_eq!(literal_width(1), 2);
        assert_eq!(literal_width(-1), 1);
        assert_eq!(literal_width(-2), 2);
        assert_eq!(literal_width(127), 8);
        assert_eq!(literal_width(-128), 8);
        assert_eq!(literal_width(128), 9);
    }

    #[test]
    fn add_and_mul_widths() {
        let items = ItemTable::default();
        let mut s = Solver::new(&items);
        let (a, b) = (s.known_n(32), s.known_n(32));
        let (c, d) = (s.fresh_n(), s.fresh_n());
        s.constraints.push(Constraint::Mul { a, b, c, span: span() });
        s.constraints.push(Constraint::Add { a: c, b: a, c: d, span: span() });
        s.solve();
        assert_eq!(s.value(c), Some(64));
        assert_eq!(s.value(d), Some(65));
        assert!(s.errors.is_empty());
    }

    #[test]
    fn literal_takes_partner_width() {
        let items = ItemTable::default();
        let mut s = Solver::new(&items);
        let a = s.known_n(20);
        let (_, lit) = s.literal(1, span());
        let c = s.fresh_n();
        s.constraints.push(Constraint::Add { a, b: lit, c, span: span() });
        s.solve();
        assert_eq!(s.value(c), Some(21));
    }

    #[test]
    fn occurs_check() {
        let items = ItemTable::default();
        let mut s = Solver::new(&items);
        let v = s.fresh();
        let t = s.con(TyCon::Tuple(vec![v]));
        assert!(matches!(s.unify(v, t), Err(UnifyError::Occurs)));
    }

    #[test]
    fn pow2_both_directions() {
        let items = ItemTable::default();
        let mut s = Solver::new(&items);
        let (d, aw) = (s.known_n(16), s.fresh_n());
        s.constraints.push(Constraint::Pow2 { depth: d, aw, span: span() });
        let (d2, aw2) = (s.fresh_n(), s.known_n(3));
        s.constraints.push(Constraint::Pow2 { depth: d2, aw: aw2, span: span() });
        s.solve();
        assert_eq!(s.value(aw), Some(4));
        assert_eq!(s.value(d2), Some(8));
    }
}
