//! Runs the phases in order, stopping at the first one that reports errors,
//! and renders the `--emit` dumps.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::str::FromStr;

use crate::diagnostics::{span_to_line_col, Diagnostic, SourceFiles};
use crate::frontend::ast::Program;
use crate::frontend::{lexer, parse_file, pretty};
use crate::linear::{self, LinearUnit};
use crate::mir::{self, MirProgram};
use crate::pipeline::{self, StagedUnit};
use crate::resolver::{self, HirProgram, SourceUnit, UnitId};
use crate::typecheck::{self, TypedProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Tokens,
    Ast,
    Hir,
    Typed,
    Staged,
    Linear,
    Mir,
    Verilog,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Tokens,
        Stage::Ast,
        Stage::Hir,
        Stage::Typed,
        Stage::Staged,
        Stage::Linear,
        Stage::Mir,
        Stage::Verilog,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Tokens => "tokens",
            Stage::Ast => "ast",
            Stage::Hir => "hir",
            Stage::Typed => "typed",
            Stage::Staged => "staged",
            Stage::Linear => "linear",
            Stage::Mir => "mir",
            Stage::Verilog => "verilog",
        }
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

/// Errors of the failing phase plus warnings gathered before it.
#[derive(Debug, Clone)]
pub struct Failed {
    pub errors: Vec<Diagnostic>,
    pub warnings: Vec<Diagnostic>,
}

impl From<Vec<Diagnostic>> for Failed {
    fn from(errors: Vec<Diagnostic>) -> Self {
        Failed {
            errors,
            warnings: vec![],
        }
    }
}

/// Everything produced by a successful build.
#[derive(Debug, Clone)]
pub struct Compilation {
    pub programs: Vec<(String, Program)>,
    pub hir: HirProgram,
    pub typed: TypedProgram,
    pub staged: BTreeMap<UnitId, StagedUnit>,
    pub linear: BTreeMap<UnitId, LinearUnit>,
    pub mir: MirProgram,
    pub warnings: Vec<Diagnostic>,
}

/// Namespace of a file: its path stem.
pub fn namespace_of(name: &str) -> String {
    let base = name.rsplit(['/', '\\']).next().unwrap_or(name);
    base.split('.').next().unwrap_or(base).to_string()
}

/// A single in-memory file in namespace `main`.
pub fn single_file(src: &str) -> SourceFiles {
    let mut files = SourceFiles::new();
    files.add("main.spade", src);
    files
}

pub fn parse_all(sources: &SourceFiles) -> Result<Vec<(String, Program)>, Vec<Diagnostic>> {
    let mut out = vec![];
    let mut errors = vec![];
    for (id, f) in sources.iter() {
        match parse_file(&f.content, id) {
            Ok(p) => out.push((namespace_of(&f.name), p)),
            Err(es) => errors.extend(es),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

pub fn resolve_all(programs: &[(String, Program)]) -> Result<HirProgram, Vec<Diagnostic>> {
    let units: Vec<SourceUnit> = programs
        .iter()
        .map(|(ns, p)| SourceUnit {
            namespace: ns.clone(),
            program: p,
        })
        .collect();
    resolver::resolve(&units)
}

/// Runs every phase up to MIR.
pub fn compile(sources: &SourceFiles) -> Result<Compilation, Failed> {
    let programs = parse_all(sources)?;
    let hir = resolve_all(&programs)?;
    let typed = typecheck::check_program(&hir)?;
    let warnings: Vec<Diagnostic> = typed.warnings().cloned().collect();
    let fail = |errors: Vec<Diagnostic>| Failed {
        errors,
        warnings: warnings.clone(),
    };
    let staged = pipeline::stage_program(&hir).map_err(fail)?;
    let linear = linear::check_program(&hir, &typed).map_err(fail)?;
    let mir = mir::lower_program(&hir, &typed, &staged).map_err(fail)?;
    Ok(Compilation {
        programs,
        hir,
        typed,
        staged,
        linear,
        mir,
        warnings,
    })
}

/// Text of one `--emit` stage, running only the phases it needs.
pub fn emit(sources: &SourceFiles, stage: Stage) -> Result<(String, Vec<Diagnostic>), Failed> {
    if stage == Stage::Tokens {
        return dump_tokens(sources).map(|t| (t, vec![])).map_err(Failed::from);
    }
    let programs = parse_all(sources)?;
    if stage == Stage::Ast {
        let mut out = String::new();
        for (ns, p) in &programs {
            let _ = writeln!(out, "// namespace {ns}");
            out.push_str(&pretty::print_program(p));
        }
        return Ok((out, vec![]));
    }
    let hir = resolve_all(&programs)?;
    if stage == Stage::Hir {
        return Ok((resolver::dump::dump_program(&hir), vec![]));
    }
    let typed = typecheck::check_program(&hir)?;
    let warnings: Vec<Diagnostic> = typed.warnings().cloned().collect();
    if stage == Stage::Typed {
        return Ok((typecheck::dump_typed(&hir, &typed), warnings));
    }
    let fail = |errors: Vec<Diagnostic>| Failed {
        errors,
        warnings: warnings.clone(),
    };
    let staged = pipeline::stage_program(&hir).map_err(fail)?;
    if stage == Stage::Staged {
        return Ok((pipeline::dump_staged(&hir, &staged), warnings));
    }
    let lin = linear::check_program(&hir, &typed).map_err(fail)?;
    if stage == Stage::Linear {
        return Ok((linear::dump_linear(&hir, &lin, sources), warnings));
    }
    let m = mir::lower_program(&hir, &typed, &staged).map_err(fail)?;
    if stage == Stage::Mir {
        return Ok((mir::dump_mir(&m), warnings));
    }
    Ok((crate::backend_verilog::emit_program(&m), warnings))
}

pub fn dump_tokens(sources: &SourceFiles) -> Result<String, Vec<Diagnostic>> {
    let mut out = String::new();
    let mut errors = vec![];
    for (id, f) in sources.iter() {
        match lexer::lex(&f.content, id) {
            Ok(tokens) => {
                let _ = writeln!(out, "// file {}", f.name);
                for t in tokens {
                    let pos = span_to_line_col(&f.content, t.span)
                        .map(|lc| format!("{}:{}", lc.line_start, lc.col_start))
                        .unwrap_or_default();
                    let _ = writeln!(out, "{pos} {}", t.kind.dump_name());
                }
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
