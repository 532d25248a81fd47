//! Stage assignment and stage-level checks for pipelines.
//!
//! Top-level statements between `reg` markers share a stage. Every local is
//! given a definition stage and an availability stage; the latter is later
//! than the former only for results of sub-pipeline instances, whose first
//! registers live inside the instance.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::diagnostics::{Diagnostic, ErrorCode, SourceSpan};
use crate::resolver::*;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StagedUnit {
    pub unit: UnitId,
    pub depth: u64,
    pub labels: BTreeMap<String, u64>,
    /// Per local; `None` for locals that are never defined (parameters of
    /// external units never reach here).
    pub def_stage: Vec<Option<u64>>,
    pub avail_stage: Vec<Option<u64>>,
    /// Stage in which each expression executes.
    pub expr_stage: Vec<u64>,
    /// Absolute stage of each stage reference.
    pub stage_refs: BTreeMap<ExprId, u64>,
}

impl StagedUnit {
    pub fn def(&self, l: LocalId) -> u64 {
        self.def_stage[l.0 as usize].unwrap_or(0)
    }

    pub fn avail(&self, l: LocalId) -> u64 {
        self.avail_stage[l.0 as usize].unwrap_or(0)
    }

    pub fn stage_of(&self, e: ExprId) -> u64 {
        self.expr_stage[e.0 as usize]
    }
}

/// Number of stages `avail - use_stage` a use has to wait, if any.
pub fn stages_until_ready(use_stage: u64, avail: u64) -> Option<u64> {
    (use_stage < avail).then(|| avail - use_stage)
}

pub fn use_before_ready(name: &str, span: SourceSpan, use_stage: u64, avail: u64) -> Diagnostic {
    let k = avail - use_stage;
    let plural = if k == 1 { "stage" } else { "stages" };
    Diagnostic::error(
        ErrorCode::UseBeforeReady,
        format!("Use of {name} before it is ready"),
        span,
    )
    .label(format!("Is unavailable for another {k} {plural}"))
    .note(format!("Requesting {name} from stage {use_stage}"))
    .note(format!("But it will not be available until stage {avail}"))
}

/// Stages every unit. Units other than pipelines become a single stage 0.
pub fn stage_program(p: &HirProgram) -> Result<BTreeMap<UnitId, StagedUnit>, Vec<Diagnostic>> {
    let mut out = BTreeMap::new();
    let mut errors = vec![];
    for (id, unit) in &p.bodies {
        match stage_unit(&p.items, p.items.unit(*id), unit) {
            Ok(s) => {
                out.insert(*id, s);
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

pub fn stage_unit(items: &ItemTable, head: &UnitHead, unit: &HirUnit) -> Result<StagedUnit, Vec<Diagnostic>> {
    let depth = match head.kind {
        UnitKind::Pipeline(d) => d,
        _ => 0,
    };
    let mut st = Stager {
        items,
        unit,
        depth,
        stage: 0,
        staged: StagedUnit {
            unit: unit.id,
            depth,
            labels: unit.labels.clone(),
            def_stage: vec![None; unit.locals.len()],
            avail_stage: vec![None; unit.locals.len()],
            expr_stage: vec![0; unit.expr_count as usize],
            stage_refs: BTreeMap::new(),
        },
        errors: vec![],
    };
    for p in &unit.params {
        st.define(*p, 0);
    }
    if let UnitKind::Pipeline(d) = head.kind {
        let total: u64 = unit
            .body
            .stmts
            .iter()
            .map(|s| match s.kind {
                HStmtKind::PipelineReg { count } => count,
                _ => 0,
            })
            .sum();
        if total != d {
            st.errors.push(
                Diagnostic::error(
                    ErrorCode::PipelineDepthMismatch,
                    format!("Pipeline depth mismatch: declared {d}, found {total}"),
                    head.name_span,
                )
                .label(format!("declared with depth {d}"))
                .note(format!(
                    "the body inserts {total} stage register{}",
                    if total == 1 { "" } else { "s" }
                )),
            );
        }
        if d > 0 && !head.params.iter().any(|p| p.ty == HirType::Clock) {
            st.errors.push(
                Diagnostic::error(
                    ErrorCode::PipelineWithoutClock,
                    format!("Pipeline `{}` has registers but no clock", head.name),
                    head.name_span,
                )
                .label("no parameter of type clock")
                .note("add a `clk: clock` parameter"),
            );
        }
    }
    // Definitions first, so uses of forward-declared names can be checked.
    st.define_block(&unit.body);
    st.stage = 0;
    st.check_block(&unit.body, true);
    if st.errors.is_empty() {
        Ok(st.staged)
    } else {
        Err(st.errors)
    }
}

struct Stager<'a> {
    items: &'a ItemTable,
    unit: &'a HirUnit,
    depth: u64,
    stage: u64,
    staged: StagedUnit,
    errors: Vec<Diagnostic>,
}

impl Stager<'_> {
    fn define(&mut self, l: LocalId, stage: u64) {
        self.staged.def_stage[l.0 as usize] = Some(stage);
        self.staged.avail_stage[l.0 as usize] = Some(stage);
    }

    fn define_block(&mut self, b: &HBlock) {
        for s in &b.stmts {
            match &s.kind {
                HStmtKind::PipelineReg { count } => self.stage += count,
                HStmtKind::Let { pattern, value, .. } => {
                    let mut ls = vec![];
                    pattern.bindings(&mut ls);
                    let delay = match &value.kind {
                        HExprKind::Inst {
                            depth: Some(d), ..
                        } => *d,
                        _ => 0,
                    };
                    for l in ls {
                        self.define(l, self.stage);
                        self.staged.avail_stage[l.0 as usize] = Some(self.stage + delay);
                    }
                    self.define_expr(value);
                }
                HStmtKind::Reg {
                    local,
                    clock,
                    reset,
                    value,
                    ..
                } => {
                    self.define(*local, self.stage);
                    self.define_expr(clock);
                    if let Some(r) = reset {
                        self.define_expr(&r.trigger);
                        self.define_expr(&r.value);
                    }
                    self.define_expr(value);
                }
                HStmtKind::Set { target, value } => {
                    self.define_expr(target);
                    self.define_expr(value);
                }
                HStmtKind::Expr(e) => self.define_expr(e),
                HStmtKind::Label(_) | HStmtKind::Decl(_) => {}
            }
        }
        if let Some(r) = &b.result {
            self.define_expr(r);
        }
    }

    /// Bindings introduced inside expressions (match arms, nested blocks).
    fn define_expr(&mut self, e: &HExpr) {
        let stage = self.stage;
        let mut blocks = vec![];
        walk_expr(e, &mut |x| {
            self.staged.expr_stage[x.id.0 as usize] = stage;
            match &x.kind {
                HExprKind::Block(b) => blocks.push(b.as_ref()),
                HExprKind::Match { arms, .. } => {
                    for a in arms {
                        let mut ls = vec![];
                        a.pattern.bindings(&mut ls);
                        for l in ls {
                            self.staged.def_stage[l.0 as usize] = Some(stage);
                            self.staged.avail_stage[l.0 as usize] = Some(stage);
                        }
                    }
                }
                _ => {}
            }
        });
        for b in blocks {
            self.staged.expr_stage[b.id.0 as usize] = stage;
            for s in &b.stmts {
                match &s.kind {
                    HStmtKind::Let { pattern, .. } => {
                        let mut ls = vec![];
                        pattern.bindings(&mut ls);
                        for l in ls {
                            self.define(l, stage);
                        }
                    }
                    HStmtKind::Reg { local, .. } => self.define(*local, stage),
                    _ => {}
                }
            }
        }
    }

    fn check_block(&mut self, b: &HBlock, top: bool) {
        if top {
            self.staged.expr_stage[b.id.0 as usize] = self.depth;
        }
        for s in &b.stmts {
            if top {
                if let HStmtKind::PipelineReg { count } = s.kind {
                    self.stage += count;
                }
            }
            match &s.kind {
                HStmtKind::Let { value, .. } => {
                    let direct = match &value.kind {
                        HExprKind::Inst { callee, depth, args } if top => Some((callee, depth, args)),
                        _ => None,
                    };
                    if let Some((callee, depth, args)) = direct {
                        self.check_inst(value, *callee, *depth);
                        for a in args {
                            self.check_expr(a);
                        }
                    } else {
                        self.check_expr(value);
                    }
                }
                HStmtKind::Reg {
                    clock,
                    reset,
                    value,
                    ..
                } => {
                    self.check_expr(clock);
                    if let Some(r) = reset {
                        self.check_expr(&r.trigger);
                        self.check_expr(&r.value);
                    }
                    self.check_expr(value);
                }
                HStmtKind::Set { target, value } => {
                    self.check_expr(target);
                    self.check_expr(value);
                }
                HStmtKind::Expr(e) => self.check_expr(e),
                HStmtKind::PipelineReg { .. } | HStmtKind::Label(_) | HStmtKind::Decl(_) => {}
            }
        }
        if let Some(r) = &b.result {
            self.check_expr(r);
        }
    }

    fn check_inst(&mut self, e: &HExpr, callee: Callee, depth: Option<u64>) {
        let Callee::Unit(u) = callee else { return };
        let head = self.items.unit(u);
        if let (UnitKind::Pipeline(declared), Some(d)) = (head.kind, depth) {
            if declared != d {
                self.errors.push(
                    Diagnostic::error(
                        ErrorCode::InstDepthMismatch,
                        format!(
                            "Pipeline `{}` is instantiated with depth {d} but declared with depth {declared}",
                            head.name
                        ),
                        e.span,
                    )
                    .label(format!("expected depth {declared}"))
                    .note_at(head.name_span, format!("`{}` is declared here", head.name))
                    .note("check whether the changed depth affects this pipeline before updating it"),
                );
            }
        }
    }

    fn check_expr(&mut self, e: &HExpr) {
        let stage = self.stage;
        match &e.kind {
            HExprKind::Local(l) => {
                let avail = self.staged.avail(*l);
                if (self.depth > 0 || avail > 0) && stages_until_ready(stage, avail).is_some() {
                    let name = self.unit.local(*l).name.clone();
                    self.errors.push(use_before_ready(&name, e.span, stage, avail));
                }
            }
            HExprKind::StageRef {
                target,
                local,
                name_span,
            } => {
                let resolved = match target {
                    HStageTarget::Label { stage, .. } => *stage as i64,
                    HStageTarget::Offset(o) => stage as i64 + o,
                };
                let name = self.unit.local(*local).name.clone();
                if resolved < 0 || resolved as u64 > self.depth {
                    self.errors.push(
                        Diagnostic::error(
                            ErrorCode::StageOutOfRange,
                            format!("Stage reference resolves to stage {resolved}"),
                            e.span,
                        )
                        .label(format!("stages of this pipeline are 0 to {}", self.depth))
                        .note(format!("referenced from stage {stage}")),
                    );
                } else {
                    let avail = self.staged.avail(*local);
                    if (resolved as u64) < avail {
                        self.errors.push(
                            Diagnostic::error(
                                ErrorCode::NoVersionAtStage,
                                format!("{name} has no value in stage {resolved}"),
                                *name_span,
                            )
                            .label(format!("{name} first exists in stage {avail}"))
                            .note_at(self.unit.local(*local).span, format!("{name} is defined here")),
                        );
                    }
                    self.staged.stage_refs.insert(e.id, resolved as u64);
                }
            }
            HExprKind::Inst { callee, depth, .. } => {
                self.check_inst(e, *callee, *depth);
                if let Some(d) = depth {
                    if *d > 0 && self.depth > 0 {
                        let name = match callee {
                            Callee::Unit(u) => self.items.unit(*u).name.clone(),
                            Callee::Intrinsic(i) => i.name().to_string(),
                        };
                        self.errors.push(
                            use_before_ready(&format!("the result of {name}"), e.span, stage, stage + d)
                                .note("bind the result with `let` and use it in a later stage"),
                        );
                    }
                }
            }
            _ => {}
        }
        match &e.kind {
            HExprKind::Block(b) => self.check_block(b, false),
            HExprKind::If {
                cond,
                then,
                otherwise,
            } => {
                self.check_expr(cond);
                self.check_expr(then);
                self.check_expr(otherwise);
            }
            HExprKind::Match { scrutinee, arms } => {
                self.check_expr(scrutinee);
                for a in arms {
                    self.check_expr(&a.value);
                }
            }
            HExprKind::Tuple(es)
            | HExprKind::Array(es)
            | HExprKind::Struct(_, es)
            | HExprKind::Variant(_, _, es)
            | HExprKind::Call(_, es)
            | HExprKind::Inst { args: es, .. } => {
                for x in es {
                    self.check_expr(x);
                }
            }
            HExprKind::Field(b, _) | HExprKind::TupleIndex(b, _) | HExprKind::Unary(_, b) => {
                self.check_expr(b)
            }
            HExprKind::Index(a, b) | HExprKind::Binary(_, a, b) => {
                self.check_expr(a);
                self.check_expr(b);
            }
            _ => {}
        }
    }
}

/// Stable text for `--emit staged`.
pub fn dump_staged(p: &HirProgram, staged: &BTreeMap<UnitId, StagedUnit>) -> String {
    let mut out = String::new();
    for (id, s) in staged {
        let head = p.items.unit(*id);
        if !matches!(head.kind, UnitKind::Pipeline(_)) {
            continue;
        }
        let unit = &p.bodies[id];
        let _ = writeln!(out, "pipeline {} depth {}", head.path, s.depth);
        for (name, stage) in &s.labels {
            let _ = writeln!(out, "    '{name} = {stage}");
        }
        for (i, info) in unit.locals.iter().enumerate() {
            if let (Some(d), Some(a)) = (s.def_stage[i], s.avail_stage[i]) {
                let _ = writeln!(out, "    {}#{i}: def {d} avail {a}", info.name);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::FileId;
    use crate::frontend::parse_file;

    const SUBPIPE: &str = "pipeline(3) subpipe(clk: clock, a: int<32>) -> int<32> { reg * 3; a }\n";
    const F: &str = "fn f(a: int<32>, p: int<64>) -> int<32> { a }\n";

    fn run(src: &str) -> Result<(HirProgram, BTreeMap<UnitId, StagedUnit>), Vec<Diagnostic>> {
        let p = parse_file(src, FileId(0)).unwrap_or_else(|e| panic!("{e:?}"));
        let hir = resolve(&[SourceUnit {
            namespace: "main".into(),
            program: &p,
        }])
        .unwrap_or_else(|e| panic!("{e:?}"));
        let s = stage_program(&hir)?;
        Ok((hir, s))
    }

    fn errors(src: &str) -> Vec<Diagnostic> {
        run(src).err().unwrap_or_default()
    }

    fn staged_example(depth: u64, regs: &str, sub_depth: u64) -> String {
        format!(
            "{SUBPIPE}{F}pipeline({depth}) X(clk: clock, a: int<32>, b: int<32>) -> int<33> {{
                'initial
                let x = inst({sub_depth}) subpipe(clk, a);
                let p = a * b;
            {regs}
                let s = x + f(a, p);
            reg;
                trunc(s + stage(initial).a)
            }}"
        )
    }

    #[test]
    fn staged_example_stages() {
        let (hir, s) = run(&staged_example(4, "reg * 3;", 3)).unwrap();
        let id = hir.items.find_unit("X").unwrap();
        let st = &s[&id];
        assert_eq!(st.labels["initial"], 0);
        let u = &hir.bodies[&id];
        let find = |n: &str| LocalId(u.locals.iter().position(|l| l.name == n).unwrap() as u32);
        assert_eq!((st.def(find("x")), st.avail(find("x"))), (0, 3));
        assert_eq!(st.def(find("s")), 3);
        assert_eq!(st.stage_refs.values().copied().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn depth_sum_mismatch() {
        let es = errors(&staged_example(4, "reg * 2;", 3));
        assert_eq!(es[0].code, ErrorCode::PipelineDepthMismatch);
        assert!(es[0].message.contains("declared 4, found 3"), "{}", es[0].message);
        let es = errors("pipeline(4) p(clk: clock) -> bool { reg * 2; true }");
        assert!(es[0].message.contains("declared 4, found 2"));
    }

    #[test]
    fn depth_zero_pipeline() {
        assert!(errors("pipeline(0) p(a: bool) -> bool { a }").is_empty());
    }

    #[test]
    fn inst_depth_mismatch() {
        let es = errors(&staged_example(4, "reg * 3;", 2));
        assert_eq!(es[0].code, ErrorCode::InstDepthMismatch);
        assert!(es[0].message.contains("depth 2") && es[0].message.contains("depth 3"));
    }

    #[test]
    fn use_before_ready_wording() {
        let src = format!(
            "{SUBPIPE}{F}pipeline(4) X(clk: clock, a: int<32>, b: int<32>) -> int<33> {{
                let x = inst(3) subpipe(clk, a);
                let product = a * b;
            reg;
                let sum = x + f(a, product);
            reg * 3;
                sum
            }}"
        );
        let es = errors(&src);
        assert_eq!(es.len(), 1);
        assert_eq!(es[0].message, "Use of x before it is ready");
        assert_eq!(es[0].primary.text, "Is unavailable for another 2 stages");
        let notes: Vec<&str> = es[0].notes.iter().map(|n| n.text.as_str()).collect();
        assert_eq!(
            notes,
            vec!["Requesting x from stage 1", "But it will not be available until stage 3"]
        );
    }

    #[test]
    fn offset_out_of_range() {
        let es = errors("pipeline(2) p(clk: clock, a: bool) -> bool { reg; let b = stage(-2).a; reg; b }");
        assert_eq!(es[0].code, ErrorCode::StageOutOfRange);
    }

    #[test]
    fn past_offset_resolves() {
        let (_, s) = run(
            "pipeline(3) p(clk: clock, a: int<4>) -> int<4> { let q = a; reg; reg; reg; stage(-2).q }",
        )
        .unwrap();
        let st = s.values().next().unwrap();
        assert_eq!(st.stage_refs.values().copied().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn no_version_before_definition() {
        let es = errors("pipeline(2) p(clk: clock, a: bool) -> bool { reg; let b = a; reg; stage(-2).b }");
        assert_eq!(es[0].code, ErrorCode::NoVersionAtStage);
    }

    #[test]
    fn pipeline_without_clock() {
        let es = errors("pipeline(1) p(a: bool) -> bool { reg; a }");
        assert_eq!(es[0].code, ErrorCode::PipelineWithoutClock);
    }

    #[test]
    fn availability_gap_shrinks() {
        assert_eq!(stages_until_ready(1, 3), Some(2));
        assert_eq!(stages_until_ready(2, 3), Some(1));
        assert_eq!(stages_until_ready(3, 3), None);
    }
}
