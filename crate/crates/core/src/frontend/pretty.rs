//! Canonical source printer. Printing a parsed program and parsing the result
//! yields the same tree (modulo spans).

use super::ast::*;

pub fn print_program(p: &Program) -> String {
    let mut pr = Printer::default();
    for (i, item) in p.items.iter().enumerate() {
        if i > 0 {
            pr.out.push('\n');
        }
        match item {
            Item::Unit(u) => pr.unit(u),
            Item::Type(t) => pr.type_decl(t),
        }
    }
    pr.out
}

pub fn print_expr(e: &Expr) -> String {
    let mut pr = Printer::default();
    pr.expr(e);
    pr.out
}

pub fn print_type(t: &AstType) -> String {
    let mut pr = Printer::default();
    pr.ty(t);
    pr.out
}

pub fn print_pattern(p: &Pattern) -> String {
    let mut pr = Printer::default();
    pr.pattern(p);
    pr.out
}

#[derive(Default)]
struct Printer {
    out: String,
    indent: usize,
}

impl Printer {
    fn w(&mut self, s: &str) {
        self.out.push_str(s);
    }

    fn newline(&mut self) {
        self.out.push('\n');
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
    }

    fn sep<T>(&mut self, items: &[T], mut f: impl FnMut(&mut Self, &T)) {
        for (i, item) in items.iter().enumerate() {
            if i > 0 {
                self.w(", ");
            }
            f(self, item);
        }
    }

    fn unit(&mut self, u: &AstUnit) {
        for a in &u.attributes {
            self.w(&format!("#[{}]\n", a.name.name));
        }
        match u.kind {
            AstUnitKind::Fn => self.w("fn "),
            AstUnitKind::Entity => self.w("entity "),
            AstUnitKind::Pipeline { depth } => self.w(&format!("pipeline({depth}) ")),
        }
        self.w(&u.name.name);
        self.w("(");
        self.sep(&u.params, |p, param| p.param(param));
        self.w(")");
        if let Some(t) = &u.output {
            self.w(" -> ");
            self.ty(t);
        }
        match &u.body {
            Some(b) => {
                self.w(" ");
                self.block(b);
                self.w("\n");
            }
            None => self.w(";\n"),
        }
    }

    fn param(&mut self, p: &AstParam) {
        self.w(&p.name.name);
        self.w(": ");
        self.ty(&p.ty);
    }

    fn type_decl(&mut self, t: &AstTypeDecl) {
        match &t.kind {
            AstTypeDeclKind::Struct { is_port, .. } => {
                self.w(if *is_port { "struct port " } else { "struct " })
            }
            AstTypeDeclKind::Enum { .. } => self.w("enum "),
        }
        self.w(&t.name.name);
        if !t.type_params.is_empty() {
            self.w("<");
            self.sep(&t.type_params, |p, i| p.w(&i.name));
            self.w(">");
        }
        self.w(" {");
        self.indent += 1;
        match &t.kind {
            AstTypeDeclKind::Struct { fields, .. } => {
                for f in fields {
                    self.newline();
                    self.param(f);
                    self.w(",");
                }
            }
            AstTypeDeclKind::Enum { variants } => {
                for v in variants {
                    self.newline();
                    self.w(&v.name.name);
                    if let Some(fs) = &v.fields {
                        self.w(" { ");
                        self.sep(fs, |p, f| p.param(f));
                        self.w(" }");
                    }
                    self.w(",");
                }
            }
        }
        self.indent -= 1;
        self.w("\n}\n");
    }

    fn ty(&mut self, t: &AstType) {
        match &t.kind {
            AstTypeKind::Named { path, args } => {
                self.w(&path.text());
                if !args.is_empty() {
                    self.w("<");
                    self.sep(args, |p, a| match a {
                        AstTypeArg::Type(t) => p.ty(t),
                        AstTypeArg::Int(v, _) => p.w(&v.to_string()),
                    });
                    self.w(">");
                }
            }
            AstTypeKind::Tuple(ts) => {
                self.w("(");
                self.sep(ts, |p, t| p.ty(t));
                if ts.len() == 1 {
                    self.w(",");
                }
                self.w(")");
            }
            AstTypeKind::Array { elem, len } => {
                self.w("[");
                self.ty(elem);
                self.w(&format!("; {len}]"));
            }
            AstTypeKind::Wire(t) => {
                self.w("&");
                self.ty(t);
            }
            AstTypeKind::MutWire(t) => {
                self.w("&mut ");
                self.ty(t);
            }
        }
    }

    fn block(&mut self, b: &Block) {
        if b.stmts.is_empty() && b.result.is_none() {
            self.w("{}");
            return;
        }
        self.w("{");
        self.indent += 1;
        for s in &b.stmts {
            if let StmtKind::PipelineReg { .. } = s.kind {
                self.indent -= 1;
                self.newline();
                self.indent += 1;
            } else {
                self.newline();
            }
            self.stmt(s);
        }
        if let Some(r) = &b.result {
            self.newline();
            self.expr(r);
        }
        self.indent -= 1;
        self.newline();
        self.w("}");
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Let { pattern, ty, value } => {
                self.w("let ");
                self.pattern(pattern);
                if let Some(t) = ty {
                    self.w(": ");
                    self.ty(t);
                }
                self.w(" = ");
                self.expr(value);
                self.w(";");
            }
            StmtKind::Reg {
                clock,
                name,
                ty,
                reset,
                value,
            } => {
                self.w("reg(");
                self.expr(clock);
                self.w(") ");
                self.w(&name.name);
                if let Some(t) = ty {
                    self.w(": ");
                    self.ty(t);
                }
                if let Some(r) = reset {
                    self.w(" reset(");
                    self.expr(&r.trigger);
                    self.w(": ");
                    self.expr(&r.value);
                    self.w(")");
                }
                self.w(" = ");
                self.expr(value);
                self.w(";");
            }
            StmtKind::PipelineReg { count: 1 } => self.w("reg;"),
            StmtKind::PipelineReg { count } => self.w(&format!("reg * {count};")),
            StmtKind::Label(l) => self.w(&format!("'{}", l.name)),
            StmtKind::Set { target, value } => {
                self.w("set ");
                self.expr(target);
                self.w(" = ");
                self.expr(value);
                self.w(";");
            }
            StmtKind::Decl(names) => {
                self.w("decl ");
                self.sep(names, |p, n| p.w(&n.name));
                self.w(";");
            }
            StmtKind::Expr(e) => {
                self.expr(e);
                self.w(";");
            }
        }
    }

    /// Expression that binds at least as tightly as a postfix receiver.
    fn atom(&mut self, e: &Expr) {
        let atomic = match &e.kind {
            ExprKind::Int(v) => *v >= 0,
            ExprKind::Unary(..)
            | ExprKind::Binary(..)
            | ExprKind::If { .. }
            | ExprKind::Match { .. } => false,
            _ => true,
        };
        if atomic {
            self.expr(e);
        } else {
            self.w("(");
            self.expr(e);
            self.w(")");
        }
    }

    fn operand(&mut self, e: &Expr, min_prec: u8) {
        let prec = match &e.kind {
            ExprKind::Binary(op, ..) => op.precedence(),
            _ => u8::MAX,
        };
        if prec < min_prec {
            self.w("(");
            self.expr(e);
            self.w(")");
        } else {
            self.expr(e);
        }
    }

    fn args(&mut self, args: &[Expr]) {
        self.w("(");
        self.sep(args, |p, a| p.expr(a));
        self.w(")");
    }

    fn expr(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Int(v) => self.w(&v.to_string()),
            ExprKind::Bool(b) => self.w(if *b { "true" } else { "false" }),
            ExprKind::Path(p) => self.w(&p.text()),
            ExprKind::Tuple(es) => {
                self.w("(");
                self.sep(es, |p, e| p.expr(e));
                if es.len() == 1 {
                    self.w(",");
                }
                self.w(")");
            }
            ExprKind::Array(es) => {
                self.w("[");
                self.sep(es, |p, e| p.expr(e));
                self.w("]");
            }
            ExprKind::Field(b, f) => {
                self.atom(b);
                self.w(".");
                self.w(&f.name);
            }
            ExprKind::TupleIndex(b, i) => {
                self.atom(b);
                self.w(&format!(".{i}"));
            }
            ExprKind::Index(b, i) => {
                self.atom(b);
                self.w("[");
                self.expr(i);
                self.w("]");
            }
            ExprKind::Unary(op, a) => {
                self.w(op.symbol());
                let wrap = matches!(a.kind, ExprKind::Int(_) | ExprKind::Binary(..));
                if wrap {
                    self.w("(");
                    self.expr(a);
                    self.w(")");
                } else {
                    self.expr(a);
                }
            }
            ExprKind::Binary(op, a, b) => {
                let prec = op.precedence();
                self.operand(a, prec);
                self.w(&format!(" {} ", op.symbol()));
                self.operand(b, prec + 1);
            }
            ExprKind::If {
                cond,
                then,
                otherwise,
            } => {
                self.w("if ");
                self.expr(cond);
                self.w(" ");
                self.block(then);
                self.w(" else ");
                match &otherwise.kind {
                    ExprKind::If { .. } | ExprKind::Block(_) => self.expr(otherwise),
                    _ => {
                        self.w("{ ");
                        self.expr(otherwise);
                        self.w(" }");
                    }
                }
            }
            ExprKind::Match { scrutinee, arms } => {
                self.w("match ");
                self.expr(scrutinee);
                self.w(" {");
                self.indent += 1;
                for arm in arms {
                    self.newline();
                    self.pattern(&arm.pattern);
                    self.w(" => ");
                    self.expr(&arm.value);
                    self.w(",");
                }
                self.indent -= 1;
                self.newline();
                self.w("}");
            }
            ExprKind::Block(b) => self.block(b),
            ExprKind::Call { path, args } => {
                self.w(&path.text());
                self.args(args);
            }
            ExprKind::Inst { depth, path, args } => {
                match depth {
                    Some(d) => self.w(&format!("inst({d}) ")),
                    None => self.w("inst "),
                }
                self.w(&path.text());
                self.args(args);
            }
            ExprKind::StageRef { target, name } => {
                match target {
                    StageTarget::Label(l) => self.w(&format!("stage({})", l.name)),
                    StageTarget::Offset(o) if *o > 0 => self.w(&format!("stage(+{o})")),
                    StageTarget::Offset(o) => self.w(&format!("stage({o})")),
                }
                self.w(".");
                self.w(&name.name);
            }
            ExprKind::Port => self.w("port"),
        }
    }

    fn pattern(&mut self, p: &Pattern) {
        match &p.kind {
            PatternKind::Wildcard => self.w("_"),
            PatternKind::Name(n) => self.w(&n.name),
            PatternKind::Int(v) => self.w(&v.to_string()),
            PatternKind::Bool(b) => self.w(if *b { "true" } else { "false" }),
            PatternKind::Tuple(ps) => {
                self.w("(");
                self.sep(ps, |pr, p| pr.pattern(p));
                if ps.len() == 1 {
                    self.w(",");
                }
                self.w(")");
            }
            PatternKind::Variant { path, args } => {
                self.w(&path.text());
                if let Some(args) = args {
                    self.w("(");
                    self.sep(args, |pr, p| pr.pattern(p));
                    self.w(")");
                }
            }
        }
    }
}
