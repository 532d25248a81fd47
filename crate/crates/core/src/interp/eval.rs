//! Evaluation of closed expressions against a built program.
//!
//! The expression becomes the body of an anonymous parameterless `fn`,
//! which then goes through the regular resolver, type checker and MIR
//! lowering before a single settle of the interpreter produces its bits.

use std::collections::BTreeMap;

use crate::bits::Bits;
use crate::diagnostics::{Diagnostic, ErrorCode, FileId, SourceFiles};
use crate::driver::{parse_all, resolve_all, Failed};
use crate::frontend::ast::{AstUnit, AstUnitKind, Block, Ident};
use crate::frontend::{parse_expression, parse_type};
use crate::interp::{Design, Simulator};
use crate::mir::layout::Layouts;
use crate::mir::{self, Dir, TypeDesc, Value};
use crate::pipeline;
use crate::resolver::{self, HirProgram, HirType, UnitHead, UnitKind};
use crate::state::CompilerState;
use crate::typecheck::{self, Type};

/// Bits of an evaluated expression together with its layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluated {
    pub bits: Bits,
    pub ty: TypeDesc,
}

impl Evaluated {
    pub fn value(&self) -> Value {
        self.ty.decode(&self.bits)
    }
}

pub struct Evaluator {
    sources: SourceFiles,
    hir: HirProgram,
    namespace: String,
}

fn to_hir(t: &Type) -> HirType {
    match t {
        Type::Bool => HirType::Bool,
        Type::Clock => HirType::Clock,
        Type::Int(w) => HirType::Int(*w),
        Type::Tuple(ts) => HirType::Tuple(ts.iter().map(to_hir).collect()),
        Type::Array(e, n) => HirType::Array(Box::new(to_hir(e)), *n),
        Type::Named(id, args) => HirType::Named(*id, args.iter().map(to_hir).collect()),
        Type::Wire(t) => HirType::Wire(Box::new(to_hir(t))),
        Type::MutWire(t) => HirType::MutWire(Box::new(to_hir(t))),
        Type::Memory(t, n) => HirType::Memory(Box::new(to_hir(t)), *n),
    }
}

/// Free variables surface from the resolver as unknown names.
fn not_closed(errors: Vec<Diagnostic>) -> Vec<Diagnostic> {
    errors
        .into_iter()
        .map(|d| {
            if d.code == ErrorCode::UnknownName && d.message.starts_with("Unknown name") {
                let mut n = Diagnostic::error(
                    ErrorCode::ExpressionNotClosed,
                    format!("Expression is not closed: {}", d.message.to_lowercase()),
                    d.primary.span,
                )
                .label("free name")
                .note("evaluated expressions may only refer to types, variants and units of the build");
                n.notes.extend(d.notes);
                n
            } else {
                d
            }
        })
        .collect()
}

impl Evaluator {
    /// Resolves `sources`; expressions are looked up in `namespace`, or in
    /// the namespace of the first file.
    pub fn new(sources: SourceFiles, namespace: Option<&str>) -> Result<Evaluator, Failed> {
        let programs = parse_all(&sources)?;
        let hir = resolve_all(&programs)?;
        let namespace = namespace
            .map(str::to_string)
            .or_else(|| programs.first().map(|(ns, _)| ns.clone()))
            .unwrap_or_else(|| "main".to_string());
        Ok(Evaluator {
            sources,
            hir,
            namespace,
        })
    }

    pub fn from_state(state: &CompilerState, namespace: Option<&str>) -> Result<Evaluator, Failed> {
        Evaluator::new(state.sources(), namespace)
    }

    /// Every file seen so far, including evaluated expression texts.
    pub fn sources(&self) -> &SourceFiles {
        &self.sources
    }

    pub fn hir(&self) -> &HirProgram {
        &self.hir
    }

    fn add_text(&mut self, text: &str) -> FileId {
        self.sources.add("<expr>", text)
    }

    pub fn resolve_type(&mut self, text: &str) -> Result<HirType, Vec<Diagnostic>> {
        let fid = self.add_text(text);
        let t = parse_type(text, fid)?;
        self.hir
            .items
            .resolve_type(&self.namespace, &t, &[])
            .map_err(|d| vec![d])
    }

    /// Layout of a resolved type.
    pub fn layout(&self, t: &HirType) -> TypeDesc {
        Layouts::new(&self.hir.items).desc(&typecheck::types::from_hir(t, &[]))
    }

    pub fn eval(&mut self, text: &str, expected: Option<&HirType>) -> Result<Evaluated, Vec<Diagnostic>> {
        let fid = self.add_text(text);
        let expr = parse_expression(text, fid)?;
        let span = expr.span;
        let name = Ident {
            name: "__eval".to_string(),
            span,
        };
        let body = Block {
            stmts: vec![],
            result: Some(Box::new(expr)),
            span,
        };
        let ast = AstUnit {
            kind: AstUnitKind::Fn,
            name: name.clone(),
            attributes: vec![],
            params: vec![],
            output: None,
            body: Some(body.clone()),
            span,
        };

        let mut items = self.hir.items.clone();
        let id = items.push_anonymous_unit(UnitHead {
            name: name.name.clone(),
            path: format!("{}::__eval", self.namespace),
            namespace: self.namespace.clone(),
            file: fid,
            kind: UnitKind::Fn,
            params: vec![],
            output: expected.cloned().unwrap_or_else(HirType::unit),
            no_mangle: false,
            external: false,
            span,
            name_span: span,
        });
        let unit = resolver::lower_unit(&items, id, &self.namespace, &ast, &body).map_err(not_closed)?;
        let typed = typecheck::check_body(&items, items.unit(id), &unit, expected)?;
        let ty = typed.expr(unit.body.id).clone();
        items.unit_mut(id).output = to_hir(&ty);

        let mut bodies: BTreeMap<_, _> = self.hir.bodies.clone();
        bodies.insert(id, unit);
        let program = HirProgram { items, bodies };
        let typed = typecheck::check_program(&program)?;
        let staged = pipeline::stage_program(&program)?;
        let m = mir::lower_program(&program, &typed, &staged)?;
        let module = m.unit(id).map(|u| u.name.clone()).expect("evaluated unit is lowered");
        let design = Design::elaborate(&m, &module).expect("evaluated unit elaborates");
        let sim = Simulator::new(&design);
        let parts: Vec<Bits> = m
            .unit(id)
            .into_iter()
            .flat_map(|u| u.ports.iter())
            .filter(|p| p.dir == Dir::Out)
            .filter_map(|p| sim.value(&p.name).cloned())
            .collect();
        let desc = Layouts::new(&program.items).desc(&ty);
        Ok(Evaluated {
            bits: Bits::concat(&parts),
            ty: desc,
        })
    }
}
