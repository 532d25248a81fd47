//! Stable text form of HIR used by `--emit hir`. Locals print as
//! `name#id`; binary operations are fully parenthesized.

use std::fmt::Write;

use super::hir::*;
use super::ItemTable;

pub fn dump_program(p: &HirProgram) -> String {
    let mut out = String::new();
    for (i, decl) in p.items.types.iter().enumerate() {
        let _ = write!(out, "type {} #{i}", decl.path);
        if !decl.params.is_empty() {
            let _ = write!(out, "<{}>", decl.params.join(", "));
        }
        match &decl.kind {
            TypeDeclKind::Struct { is_port, fields } => {
                out.push_str(if *is_port { " port struct {" } else { " struct {" });
                let fs: Vec<String> = fields
                    .iter()
                    .map(|f| format!("{}: {}", f.name, param_type(&p.items, &decl.params, &f.ty)))
                    .collect();
                let _ = writeln!(out, " {} }}", fs.join(", "));
            }
            TypeDeclKind::Enum { variants } => {
                out.push_str(" enum {");
                let vs: Vec<String> = variants
                    .iter()
                    .map(|v| {
                        let fs: Vec<String> = v
                            .fields
                            .iter()
                            .map(|f| format!("{}: {}", f.name, param_type(&p.items, &decl.params, &f.ty)))
                            .collect();
                        format!("{}({})", v.name, fs.join(", "))
                    })
                    .collect();
                let _ = writeln!(out, " {} }}", vs.join(", "));
            }
        }
    }
    for id in p.items.unit_ids() {
        let head = p.items.unit(id);
        match p.bodies.get(&id) {
            Some(u) => out.push_str(&dump_unit(&p.items, head, u)),
            None => {
                let params: Vec<String> = head
                    .params
                    .iter()
                    .map(|q| format!("{}: {}", q.name, p.items.type_name(&q.ty)))
                    .collect();
                let _ = writeln!(
                    out,
                    "external {} {}({}) -> {}",
                    kind_text(head.kind),
                    head.path,
                    params.join(", "),
                    p.items.type_name(&head.output)
                );
            }
        }
    }
    out
}

fn param_type(items: &ItemTable, params: &[String], t: &HirType) -> String {
    let args: Vec<HirType> = (0..params.len()).map(HirType::Param).collect();
    let mut s = items.type_name(&t.subst(&args));
    for (i, p) in params.iter().enumerate() {
        s = s.replace(&format!("${i}"), p);
    }
    s
}

fn kind_text(k: UnitKind) -> String {
    match k {
        UnitKind::Pipeline(d) => format!("pipeline({d})"),
        other => other.keyword().to_string(),
    }
}

pub fn dump_unit(items: &ItemTable, head: &UnitHead, u: &HirUnit) -> String {
    let mut d = Dumper {
        items,
        unit: u,
        out: String::new(),
        indent: 0,
    };
    let params: Vec<String> = u
        .params
        .iter()
        .zip(&head.params)
        .map(|(l, p)| format!("{}: {}", d.local(*l), items.type_name(&p.ty)))
        .collect();
    let _ = write!(
        d.out,
        "{} {}({}) -> {}",
        kind_text(head.kind),
        head.path,
        params.join(", "),
        items.type_name(&head.output)
    );
    if !u.labels.is_empty() {
        let ls: Vec<String> = u.labels.iter().map(|(k, v)| format!("'{k}={v}")).collect();
        let _ = write!(d.out, " labels[{}]", ls.join(", "));
    }
    d.out.push(' ');
    d.block(&u.body);
    d.out.push('\n');
    d.out
}

struct Dumper<'a> {
    items: &'a ItemTable,
    unit: &'a HirUnit,
    out: String,
    indent: usize,
}

impl Dumper<'_> {
    fn local(&self, l: LocalId) -> String {
        format!("{}#{}", self.unit.local(l).name, l.0)
    }

    fn newline(&mut self) {
        self.out.push('\n');
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
    }

    fn block(&mut self, b: &HBlock) {
        self.out.push('{');
        self.indent += 1;
        for s in &b.stmts {
            self.newline();
            self.stmt(s);
        }
        if let Some(r) = &b.result {
            self.newline();
            self.expr(r);
        }
        self.indent -= 1;
        self.newline();
        self.out.push('}');
    }

    fn stmt(&mut self, s: &HStmt) {
        match &s.kind {
            HStmtKind::Let { pattern, ty, value } => {
                self.out.push_str("let ");
                self.pattern(pattern);
                if let Some(t) = ty {
                    let _ = write!(self.out, ": {}", self.items.type_name(t));
                }
                self.out.push_str(" = ");
                self.expr(value);
                self.out.push(';');
            }
            HStmtKind::Reg {
                local,
                clock,
                ty,
                reset,
                value,
            } => {
                self.out.push_str("reg(");
                self.expr(clock);
                let _ = write!(self.out, ") {}", self.local(*local));
                if let Some(t) = ty {
                    let _ = write!(self.out, ": {}", self.items.type_name(t));
                }
                if let Some(r) = reset {
                    self.out.push_str(" reset(");
                    self.expr(&r.trigger);
                    self.out.push_str(": ");
                    self.expr(&r.value);
                    self.out.push(')');
                }
                self.out.push_str(" = ");
                self.expr(value);
                self.out.push(';');
            }
            HStmtKind::PipelineReg { count } => {
                let _ = write!(self.out, "reg * {count};");
            }
            HStmtKind::Label(l) => {
                let _ = write!(self.out, "'{}", l.name);
            }
            HStmtKind::Set { target, value } => {
                self.out.push_str("set ");
                self.expr(target);
                self.out.push_str(" = ");
                self.expr(value);
                self.out.push(';');
            }
            HStmtKind::Decl(ls) => {
                let names: Vec<String> = ls.iter().map(|l| self.local(*l)).collect();
                let _ = write!(self.out, "decl {};", names.join(", "));
            }
            HStmtKind::Expr(e) => {
                self.expr(e);
                self.out.push(';');
            }
        }
    }

    fn list(&mut self, es: &[HExpr]) {
        for (i, e) in es.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.expr(e);
        }
    }

    fn callee(&self, c: Callee) -> String {
        match c {
            Callee::Unit(u) => self.items.unit(u).path.clone(),
            Callee::Intrinsic(i) => i.name().to_string(),
        }
    }

    fn expr(&mut self, e: &HExpr) {
        match &e.kind {
            HExprKind::Int(v) => {
                let _ = write!(self.out, "{v}");
            }
            HExprKind::Bool(b) => {
                let _ = write!(self.out, "{b}");
            }
            HExprKind::Local(l) => self.out.push_str(&self.local(*l)),
            HExprKind::Tuple(es) => {
                self.out.push('(');
                self.list(es);
                if es.len() == 1 {
                    self.out.push(',');
                }
                self.out.push(')');
            }
            HExprKind::Array(es) => {
                self.out.push('[');
                self.list(es);
                self.out.push(']');
            }
            HExprKind::Field(b, f) => {
                self.expr(b);
                let _ = write!(self.out, ".{}", f.name);
            }
            HExprKind::TupleIndex(b, i) => {
                self.expr(b);
                let _ = write!(self.out, ".{i}");
            }
            HExprKind::Index(a, i) => {
                self.expr(a);
                self.out.push('[');
                self.expr(i);
                self.out.push(']');
            }
            HExprKind::Unary(op, a) => {
                self.out.push('(');
                self.out.push_str(op.symbol());
                self.expr(a);
                self.out.push(')');
            }
            HExprKind::Binary(op, a, b) => {
                self.out.push('(');
                self.expr(a);
                let _ = write!(self.out, " {} ", op.symbol());
                self.expr(b);
                self.out.push(')');
            }
            HExprKind::If {
                cond,
                then,
                otherwise,
            } => {
                self.out.push_str("if ");
                self.expr(cond);
                self.out.push(' ');
                self.expr(then);
                self.out.push_str(" else ");
                self.expr(otherwise);
            }
            HExprKind::Match { scrutinee, arms } => {
                self.out.push_str("match ");
                self.expr(scrutinee);
                self.out.push_str(" {");
                self.indent += 1;
                for a in arms {
                    self.newline();
                    self.pattern(&a.pattern);
                    self.out.push_str(" => ");
                    self.expr(&a.value);
                    self.out.push(',');
                }
                self.indent -= 1;
                self.newline();
                self.out.push('}');
            }
            HExprKind::Block(b) => self.block(b),
            HExprKind::Struct(t, args) => {
                let _ = write!(self.out, "{}(", self.items.type_decl(*t).path);
                self.list(args);
                self.out.push(')');
            }
            HExprKind::Variant(t, v, args) => {
                let decl = self.items.type_decl(*t);
                let _ = write!(self.out, "{}::{}(", decl.path, decl.variants()[*v].name);
                self.list(args);
                self.out.push(')');
            }
            HExprKind::Call(c, args) => {
                let _ = write!(self.out, "{}(", self.callee(*c));
                self.list(args);
                self.out.push(')');
            }
            HExprKind::Inst {
                callee,
                depth,
                args,
            } => {
                match depth {
                    Some(d) => {
                        let _ = write!(self.out, "inst({d}) ");
                    }
                    None => self.out.push_str("inst "),
                }
                let _ = write!(self.out, "{}(", self.callee(*callee));
                self.list(args);
                self.out.push(')');
            }
            HExprKind::StageRef { target, local, .. } => {
                match target {
                    HStageTarget::Label { name, stage } => {
                        let _ = write!(self.out, "stage({}={stage})", name.name);
                    }
                    HStageTarget::Offset(o) => {
                        let _ = write!(self.out, "stage({o:+})");
                    }
                }
                let _ = write!(self.out, ".{}", self.local(*local));
            }
            HExprKind::Port => self.out.push_str("port"),
        }
    }

    fn pattern(&mut self, p: &HPattern) {
        match &p.kind {
            HPatternKind::Wildcard => self.out.push('_'),
            HPatternKind::Bind(l) => self.out.push_str(&self.local(*l)),
            HPatternKind::Int(v) => {
                let _ = write!(self.out, "{v}");
            }
            HPatternKind::Bool(b) => {
                let _ = write!(self.out, "{b}");
            }
            HPatternKind::Tuple(ps) => {
                self.out.push('(');
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    self.pattern(p);
                }
                if ps.len() == 1 {
                    self.out.push(',');
                }
                self.out.push(')');
            }
            HPatternKind::Variant(t, v, ps) => {
                let decl = self.items.type_decl(*t);
                let _ = write!(self.out, "{}::{}", decl.path, decl.variants()[*v].name);
                self.out.push('(');
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    self.pattern(p);
                }
                self.out.push(')');
            }
        }
    }
}
