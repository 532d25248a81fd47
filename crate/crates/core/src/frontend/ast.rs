use crate::diagnostics::{FileId, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AstPath {
    pub segments: Vec<Ident>,
    pub span: SourceSpan,
}

impl AstPath {
    pub fn is_single(&self) -> bool {
        self.segments.len() == 1
    }

    pub fn text(&self) -> String {
        self.segments
            .iter()
            .map(|s| s.name.as_str())
            .collect::<Vec<_>>()
            .join("::")
    }
}

/// One parsed source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub file: FileId,
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Unit(AstUnit),
    Type(AstTypeDecl),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AstUnitKind {
    Fn,
    Entity,
    Pipeline { depth: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: Ident,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AstParam {
    pub name: Ident,
    pub ty: AstType,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AstUnit {
    pub kind: AstUnitKind,
    pub name: Ident,
    pub attributes: Vec<Attribute>,
    pub params: Vec<AstParam>,
    pub output: Option<AstType>,
    pub body: Option<Block>,
    pub span: SourceSpan,
}

impl AstUnit {
    pub fn has_attribute(&self, name: &str) -> bool {
        self.attributes.iter().any(|a| a.name.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AstType {
    pub kind: AstTypeKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AstTypeKind {
    /// `bool`, `int<20>`, `Option<T>`, `Memory<T, 16>`.
    Named { path: AstPath, args: Vec<AstTypeArg> },
    Tuple(Vec<AstType>),
    Array { elem: Box<AstType>, len: u64 },
    Wire(Box<AstType>),
    MutWire(Box<AstType>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AstTypeArg {
    Type(AstType),
    Int(u64, SourceSpan),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AstTypeDeclKind {
    Struct { is_port: bool, fields: Vec<AstParam> },
    Enum { variants: Vec<AstVariant> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AstVariant {
    pub name: Ident,
    /// `None` for a variant written without braces.
    pub fields: Option<Vec<AstParam>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AstTypeDecl {
    pub kind: AstTypeDeclKind,
    pub name: Ident,
    pub type_params: Vec<Ident>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub result: Option<Box<Expr>>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegReset {
    pub trigger: Expr,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Let {
        pattern: Pattern,
        ty: Option<AstType>,
        value: Expr,
    },
    /// `reg(clk) name [: T] [reset(rst: init)] = next;`
    Reg {
        clock: Expr,
        name: Ident,
        ty: Option<AstType>,
        reset: Option<RegReset>,
        value: Expr,
    },
    /// `reg;` or `reg * k;` inside a pipeline.
    PipelineReg { count: u64 },
    Label(Ident),
    Set { target: Expr, value: Expr },
    Decl(Vec<Ident>),
    Expr(Expr),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
    BitNot,
    /// `*w`, reading a wire.
    Deref,
    /// `&e`, turning a value into a wire.
    Wire,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Not => "!",
            UnaryOp::BitNot => "~",
            UnaryOp::Deref => "*",
            UnaryOp::Wire => "&",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    LogicAnd,
    LogicOr,
    BitAnd,
    BitOr,
    BitXor,
    Shl,
    Shr,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Gt => ">",
            BinaryOp::Le => "<=",
            BinaryOp::Ge => ">=",
            BinaryOp::LogicAnd => "&&",
            BinaryOp::LogicOr => "||",
            BinaryOp::BitAnd => "&",
            BinaryOp::BitOr => "|",
            BinaryOp::BitXor => "^",
            BinaryOp::Shl => "<<",
            BinaryOp::Shr => ">>",
        }
    }

    /// Binding power; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::LogicOr => 1,
            BinaryOp::LogicAnd => 2,
            BinaryOp::Eq
            | BinaryOp::Ne
            | BinaryOp::Lt
            | BinaryOp::Gt
            | BinaryOp::Le
            | BinaryOp::Ge => 3,
            BinaryOp::BitOr => 4,
            BinaryOp::BitXor => 5,
            BinaryOp::BitAnd => 6,
            BinaryOp::Shl | BinaryOp::Shr => 7,
            BinaryOp::Add | BinaryOp::Sub => 8,
            BinaryOp::Mul => 9,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 3
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StageTarget {
    Label(Ident),
    Offset(i64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchArm {
    pub pattern: Pattern,
    pub value: Expr,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Int(i128),
    Bool(bool),
    Path(AstPath),
    Tuple(Vec<Expr>),
    Array(Vec<Expr>),
    Field(Box<Expr>, Ident),
    TupleIndex(Box<Expr>, u64),
    Index(Box<Expr>, Box<Expr>),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    If {
        cond: Box<Expr>,
        then: Block,
        otherwise: Box<Expr>,
    },
    Match {
        scrutinee: Box<Expr>,
        arms: Vec<MatchArm>,
    },
    Block(Block),
    Call {
        path: AstPath,
        args: Vec<Expr>,
    },
    Inst {
        depth: Option<u64>,
        path: AstPath,
        args: Vec<Expr>,
    },
    StageRef {
        target: StageTarget,
        name: Ident,
    },
    Port,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub kind: PatternKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternKind {
    Wildcard,
    /// A bare name: a binding, or a unit variant if one is in scope.
    Name(Ident),
    Int(i128),
    Bool(bool),
    Tuple(Vec<Pattern>),
    /// `Path(p, ...)` or a multi-segment path without arguments.
    Variant { path: AstPath, args: Option<Vec<Pattern>> },
}

/// Replaces every span in a program with a zero span so that two parses of
/// differently formatted text can be compared structurally.
pub mod erase {
    use super::*;

    fn z(s: &mut SourceSpan) {
        *s = SourceSpan::new(s.file, 0, 0);
    }

    fn ident(i: &mut Ident) {
        z(&mut i.span);
    }

    fn path(p: &mut AstPath) {
        z(&mut p.span);
        p.segments.iter_mut().for_each(ident);
    }

    pub fn ty(t: &mut AstType) {
        z(&mut t.span);
        match &mut t.kind {
            AstTypeKind::Named { path: p, args } => {
                path(p);
                for a in args {
                    match a {
                        AstTypeArg::Type(t) => ty(t),
                        AstTypeArg::Int(_, s) => z(s),
                    }
                }
            }
            AstTypeKind::Tuple(ts) => ts.iter_mut().for_each(ty),
            AstTypeKind::Array { elem, .. } => ty(elem),
            AstTypeKind::Wire(t) | AstTypeKind::MutWire(t) => ty(t),
        }
    }

    fn param(p: &mut AstParam) {
        ident(&mut p.name);
        ty(&mut p.ty);
    }

    pub fn program(p: &mut Program) {
        for item in &mut p.items {
            match item {
                Item::Unit(u) => {
                    z(&mut u.span);
                    ident(&mut u.name);
                    u.attributes.iter_mut().for_each(|a| ident(&mut a.name));
                    u.params.iter_mut().for_each(param);
                    if let Some(t) = &mut u.output {
                        ty(t);
                    }
                    if let Some(b) = &mut u.body {
                        block(b);
                    }
                }
                Item::Type(t) => {
                    z(&mut t.span);
                    ident(&mut t.name);
                    t.type_params.iter_mut().for_each(ident);
                    match &mut t.kind {
                        AstTypeDeclKind::Struct { fields, .. } => fields.iter_mut().for_each(param),
                        AstTypeDeclKind::Enum { variants } => {
                            for v in variants {
                                ident(&mut v.name);
                                if let Some(fs) = &mut v.fields {
                                    fs.iter_mut().for_each(param);
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn block(b: &mut Block) {
        z(&mut b.span);
        for s in &mut b.stmts {
            z(&mut s.span);
            match &mut s.kind {
                StmtKind::Let { pattern: p, ty: t, value } => {
                    pattern(p);
                    if let Some(t) = t {
                        ty(t);
                    }
                    expr(value);
                }
                StmtKind::Reg {
                    clock,
                    name,
                    ty: t,
                    reset,
                    value,
                } => {
                    expr(clock);
                    ident(name);
                    if let Some(t) = t {
                        ty(t);
                    }
                    if let Some(r) = reset {
                        expr(&mut r.trigger);
                        expr(&mut r.value);
                    }
                    expr(value);
                }
                StmtKind::PipelineReg { .. } => {}
                StmtKind::Label(i) => ident(i),
                StmtKind::Set { target, value } => {
                    expr(target);
                    expr(value);
                }
                StmtKind::Decl(names) => names.iter_mut().for_each(ident),
                StmtKind::Expr(e) => expr(e),
            }
        }
        if let Some(r) = &mut b.result {
            expr(r);
        }
    }

    pub fn pattern(p: &mut Pattern) {
        z(&mut p.span);
        match &mut p.kind {
            PatternKind::Name(i) => ident(i),
            PatternKind::Tuple(ps) => ps.iter_mut().for_each(pattern),
            PatternKind::Variant { path: pa, args } => {
                path(pa);
                if let Some(args) = args {
                    args.iter_mut().for_each(pattern);
                }
            }
            PatternKind::Wildcard | PatternKind::Int(_) | PatternKind::Bool(_) => {}
        }
    }

    pub fn expr(e: &mut Expr) {
        z(&mut e.span);
        match &mut e.kind {
            ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Port => {}
            ExprKind::Path(p) => path(p),
            ExprKind::Tuple(es) | ExprKind::Array(es) => es.iter_mut().for_each(expr),
            ExprKind::Field(b, f) => {
                expr(b);
                ident(f);
            }
            ExprKind::TupleIndex(b, _) => expr(b),
            ExprKind::Index(a, b) | ExprKind::Binary(_, a, b) => {
                expr(a);
                expr(b);
            }
            ExprKind::Unary(_, a) => expr(a),
            ExprKind::If {
                cond,
                then,
                otherwise,
            } => {
                expr(cond);
                block(then);
                expr(otherwise);
            }
            ExprKind::Match { scrutinee, arms } => {
                expr(scrutinee);
                for arm in arms {
                    z(&mut arm.span);
                    pattern(&mut arm.pattern);
                    expr(&mut arm.value);
                }
            }
            ExprKind::Block(b) => block(b),
            ExprKind::Call { path: p, args } | ExprKind::Inst { path: p, args, .. } => {
                path(p);
                args.iter_mut().for_each(expr);
            }
            ExprKind::StageRef { target, name } => {
                if let StageTarget::Label(l) = target {
                    ident(l);
                }
                ident(name);
            }
        }
    }
}
