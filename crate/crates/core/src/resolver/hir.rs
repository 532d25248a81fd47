use std::collections::BTreeMap;

use crate::diagnostics::{FileId, SourceSpan};
use crate::frontend::ast::{BinaryOp, Ident, UnaryOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UnitId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocalId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExprId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatId(pub u32);

/// A type as written in a signature or declaration, with names resolved.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum HirType {
    Bool,
    Clock,
    Int(u32),
    Tuple(Vec<HirType>),
    Array(Box<HirType>, u64),
    Named(TypeId, Vec<HirType>),
    /// Index into the enclosing declaration's type parameters.
    Param(usize),
    Wire(Box<HirType>),
    MutWire(Box<HirType>),
    Memory(Box<HirType>, u64),
}

impl HirType {
    pub fn unit() -> HirType {
        HirType::Tuple(vec![])
    }

    pub fn subst(&self, args: &[HirType]) -> HirType {
        match self {
            HirType::Param(i) => args[*i].clone(),
            HirType::Tuple(ts) => HirType::Tuple(ts.iter().map(|t| t.subst(args)).collect()),
            HirType::Array(t, n) => HirType::Array(Box::new(t.subst(args)), *n),
            HirType::Named(id, ts) => {
                HirType::Named(*id, ts.iter().map(|t| t.subst(args)).collect())
            }
            HirType::Wire(t) => HirType::Wire(Box::new(t.subst(args))),
            HirType::MutWire(t) => HirType::MutWire(Box::new(t.subst(args))),
            HirType::Memory(t, d) => HirType::Memory(Box::new(t.subst(args)), *d),
            HirType::Bool | HirType::Clock | HirType::Int(_) => self.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    pub name: String,
    pub ty: HirType,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariantDecl {
    pub name: String,
    pub fields: Vec<Field>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeDeclKind {
    Struct { is_port: bool, fields: Vec<Field> },
    Enum { variants: Vec<VariantDecl> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub path: String,
    pub params: Vec<String>,
    pub kind: TypeDeclKind,
    pub span: SourceSpan,
}

impl TypeDecl {
    pub fn variants(&self) -> &[VariantDecl] {
        match &self.kind {
            TypeDeclKind::Enum { variants } => variants,
            TypeDeclKind::Struct { .. } => &[],
        }
    }

    pub fn fields(&self) -> &[Field] {
        match &self.kind {
            TypeDeclKind::Struct { fields, .. } => fields,
            TypeDeclKind::Enum { .. } => &[],
        }
    }

    pub fn is_enum(&self) -> bool {
        matches!(self.kind, TypeDeclKind::Enum { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnitKind {
    Fn,
    Entity,
    Pipeline(u64),
}

impl UnitKind {
    pub fn keyword(self) -> &'static str {
        match self {
            UnitKind::Fn => "fn",
            UnitKind::Entity => "entity",
            UnitKind::Pipeline(_) => "pipeline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Intrinsic {
    Trunc,
    ClockedMemory,
    ReadMemory,
}

impl Intrinsic {
    pub const ALL: [Intrinsic; 3] = [
        Intrinsic::Trunc,
        Intrinsic::ClockedMemory,
        Intrinsic::ReadMemory,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Intrinsic::Trunc => "trunc",
            Intrinsic::ClockedMemory => "clocked_memory",
            Intrinsic::ReadMemory => "read_memory",
        }
    }

    pub fn kind(self) -> UnitKind {
        match self {
            Intrinsic::Trunc => UnitKind::Fn,
            Intrinsic::ClockedMemory | Intrinsic::ReadMemory => UnitKind::Entity,
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Intrinsic::Trunc => 1,
            Intrinsic::ClockedMemory | Intrinsic::ReadMemory => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: HirType,
    pub span: SourceSpan,
}

/// Everything about a unit that other units may depend on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitHead {
    pub name: String,
    pub path: String,
    pub namespace: String,
    pub file: FileId,
    pub kind: UnitKind,
    pub params: Vec<Param>,
    pub output: HirType,
    pub no_mangle: bool,
    pub external: bool,
    pub span: SourceSpan,
    pub name_span: SourceSpan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Callee {
    Unit(UnitId),
    Intrinsic(Intrinsic),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalKind {
    Param,
    Let,
    Reg,
    Binding,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalInfo {
    pub name: String,
    pub kind: LocalKind,
    /// Span of the defining occurrence.
    pub span: SourceSpan,
    /// Set when the name was introduced by `decl` before its definition.
    pub forward_declared: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HStageTarget {
    /// A label, already mapped to its stage index.
    Label { name: Ident, stage: u64 },
    Offset(i64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HExpr {
    pub id: ExprId,
    pub kind: HExprKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HArm {
    pub pattern: HPattern,
    pub value: HExpr,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HExprKind {
    Int(i128),
    Bool(bool),
    Local(LocalId),
    Tuple(Vec<HExpr>),
    Array(Vec<HExpr>),
    Field(Box<HExpr>, Ident),
    TupleIndex(Box<HExpr>, u64),
    Index(Box<HExpr>, Box<HExpr>),
    Unary(UnaryOp, Box<HExpr>),
    Binary(BinaryOp, Box<HExpr>, Box<HExpr>),
    If {
        cond: Box<HExpr>,
        then: Box<HExpr>,
        otherwise: Box<HExpr>,
    },
    Match {
        scrutinee: Box<HExpr>,
        arms: Vec<HArm>,
    },
    Block(Box<HBlock>),
    Struct(TypeId, Vec<HExpr>),
    Variant(TypeId, usize, Vec<HExpr>),
    Call(Callee, Vec<HExpr>),
    Inst {
        callee: Callee,
        depth: Option<u64>,
        args: Vec<HExpr>,
    },
    StageRef {
        target: HStageTarget,
        local: LocalId,
        name_span: SourceSpan,
    },
    Port,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HPattern {
    pub id: PatId,
    pub kind: HPatternKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HPatternKind {
    Wildcard,
    Bind(LocalId),
    Int(i128),
    Bool(bool),
    Tuple(Vec<HPattern>),
    Variant(TypeId, usize, Vec<HPattern>),
}

impl HPattern {
    pub fn bindings(&self, out: &mut Vec<LocalId>) {
        match &self.kind {
            HPatternKind::Bind(l) => out.push(*l),
            HPatternKind::Tuple(ps) | HPatternKind::Variant(_, _, ps) => {
                ps.iter().for_each(|p| p.bindings(out))
            }
            HPatternKind::Wildcard | HPatternKind::Int(_) | HPatternKind::Bool(_) => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HRegReset {
    pub trigger: HExpr,
    pub value: HExpr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HStmt {
    pub kind: HStmtKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HStmtKind {
    Let {
        pattern: HPattern,
        ty: Option<HirType>,
        value: HExpr,
    },
    Reg {
        local: LocalId,
        clock: HExpr,
        ty: Option<HirType>,
        reset: Option<HRegReset>,
        value: HExpr,
    },
    PipelineReg {
        count: u64,
    },
    Label(Ident),
    Set {
        target: HExpr,
        value: HExpr,
    },
    Decl(Vec<LocalId>),
    Expr(HExpr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HBlock {
    pub stmts: Vec<HStmt>,
    pub result: Option<HExpr>,
    pub span: SourceSpan,
    /// Id used to annotate the block's own value.
    pub id: ExprId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HirUnit {
    pub id: UnitId,
    pub params: Vec<LocalId>,
    pub body: HBlock,
    pub locals: Vec<LocalInfo>,
    /// Label name to stage index, in stage order.
    pub labels: BTreeMap<String, u64>,
    pub expr_count: u32,
    pub pat_count: u32,
}

impl HirUnit {
    pub fn local(&self, id: LocalId) -> &LocalInfo {
        &self.locals[id.0 as usize]
    }
}

/// Resolved program: declarations plus bodies of every non-external unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HirProgram {
    pub items: super::ItemTable,
    pub bodies: BTreeMap<UnitId, HirUnit>,
}

/// Pre-order walk over every expression in a block, including nested ones.
pub fn walk_block<'a>(b: &'a HBlock, f: &mut impl FnMut(&'a HExpr)) {
    for s in &b.stmts {
        walk_stmt(s, f);
    }
    if let Some(r) = &b.result {
        walk_expr(r, f);
    }
}

pub fn walk_stmt<'a>(s: &'a HStmt, f: &mut impl FnMut(&'a HExpr)) {
    match &s.kind {
        HStmtKind::Let { value, .. } | HStmtKind::Expr(value) => walk_expr(value, f),
        HStmtKind::Reg {
            clock,
            reset,
            value,
            ..
        } => {
            walk_expr(clock, f);
            if let Some(r) = reset {
                walk_expr(&r.trigger, f);
                walk_expr(&r.value, f);
            }
            walk_expr(value, f);
        }
        HStmtKind::Set { target, value } => {
            walk_expr(target, f);
            walk_expr(value, f);
        }
        HStmtKind::PipelineReg { .. } | HStmtKind::Label(_) | HStmtKind::Decl(_) => {}
    }
}

pub fn walk_expr<'a>(e: &'a HExpr, f: &mut impl FnMut(&'a HExpr)) {
    f(e);
    match &e.kind {
        HExprKind::Int(_)
        | HExprKind::Bool(_)
        | HExprKind::Local(_)
        | HExprKind::StageRef { .. }
        | HExprKind::Port => {}
        HExprKind::Tuple(es)
        | HExprKind::Array(es)
        | HExprKind::Struct(_, es)
        | HExprKind::Variant(_, _, es)
        | HExprKind::Call(_, es)
        | HExprKind::Inst { args: es, .. } => es.iter().for_each(|e| walk_expr(e, f)),
        HExprKind::Field(b, _) | HExprKind::TupleIndex(b, _) | HExprKind::Unary(_, b) => {
            walk_expr(b, f)
        }
        HExprKind::Index(a, b) | HExprKind::Binary(_, a, b) => {
            walk_expr(a, f);
            walk_expr(b, f);
        }
        HExprKind::If {
            cond,
            then,
            otherwise,
        } => {
            walk_expr(cond, f);
            walk_expr(then, f);
            walk_expr(otherwise, f);
        }
        HExprKind::Match { scrutinee, arms } => {
            walk_expr(scrutinee, f);
            for a in arms {
                walk_expr(&a.value, f);
            }
        }
        HExprKind::Block(b) => walk_block(b, f),
    }
}
