//! Combinational dependency graph of a unit: cycle detection, statement
//! ordering and port-to-port summaries used by instantiating units.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;
use petgraph::visit::{Dfs, Reversed};

use super::{Dir, MirUnit, Name, Stmt};
use crate::diagnostics::{Diagnostic, ErrorCode};
use crate::resolver::UnitId;

/// For each output port, the input ports it depends on combinationally.
pub type Summary = BTreeMap<Name, BTreeSet<Name>>;

/// Edges `a -> b` where `b` changes in the same cycle as `a`. Registers only
/// depend on their reset inputs, which act asynchronously; memory contents
/// only change on clock edges.
pub fn comb_edges<'s>(s: &'s Stmt, summaries: &BTreeMap<UnitId, Summary>) -> Vec<(&'s str, &'s str)> {
    match s {
        Stmt::Binding { name, operands, .. } => operands.iter().map(|o| (o.as_str(), name.as_str())).collect(),
        Stmt::Register { name, reset, .. } => match reset {
            Some((t, v)) => vec![(t.as_str(), name.as_str()), (v.as_str(), name.as_str())],
            None => vec![],
        },
        Stmt::AsyncRead { name, addr, .. } => vec![(addr.as_str(), name.as_str())],
        Stmt::Instance {
            unit_id,
            inputs,
            outputs,
            ..
        } => {
            let summary = summaries.get(unit_id);
            let mut out = vec![];
            for (op, on) in outputs {
                for (ip, inn) in inputs {
                    let dep = match summary {
                        Some(s) => s.get(op).is_some_and(|d| d.contains(ip)),
                        None => true,
                    };
                    if dep {
                        out.push((inn.as_str(), on.as_str()));
                    }
                }
            }
            out
        }
        Stmt::Memory { .. } | Stmt::Constant { .. } => vec![],
    }
}

/// Rejects register-free cycles, orders statements by dependency where
/// possible and summarizes port dependencies.
pub fn finish_unit(u: &mut MirUnit, summaries: &BTreeMap<UnitId, Summary>) -> Result<Summary, Diagnostic> {
    let mut g: DiGraphMap<&str, ()> = DiGraphMap::new();
    for p in &u.ports {
        g.add_node(p.name.as_str());
    }
    for s in &u.stmts {
        for d in s.defs() {
            g.add_node(d.as_str());
        }
        for (a, b) in comb_edges(s, summaries) {
            g.add_edge(a, b, ());
        }
    }

    for scc in tarjan_scc(&g) {
        let looped = scc.len() > 1 || g.contains_edge(scc[0], scc[0]);
        if looped {
            return Err(cycle_error(u, &scc));
        }
    }

    let mut summary = Summary::new();
    let inputs: BTreeSet<&str> = u
        .ports
        .iter()
        .filter(|p| p.dir == Dir::In)
        .map(|p| p.name.as_str())
        .collect();
    for p in u.ports.iter().filter(|p| p.dir == Dir::Out) {
        let rev = Reversed(&g);
        let mut dfs = Dfs::new(rev, p.name.as_str());
        let mut deps = BTreeSet::new();
        while let Some(n) = dfs.next(rev) {
            if inputs.contains(n) {
                deps.insert(n.to_string());
            }
        }
        summary.insert(p.name.clone(), deps);
    }

    let order = dependency_order(&u.stmts, summaries);
    let mut stmts: Vec<Option<Stmt>> = std::mem::take(&mut u.stmts).into_iter().map(Some).collect();
    u.stmts = order.into_iter().filter_map(|i| stmts[i].take()).collect();
    Ok(summary)
}

/// Kahn's algorithm, preferring the original position among ready
/// statements. Statements left over (only possible for instances whose
/// ports feed each other) keep their original order at the end.
fn dependency_order(stmts: &[Stmt], summaries: &BTreeMap<UnitId, Summary>) -> Vec<usize> {
    let mut producer: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, s) in stmts.iter().enumerate() {
        for d in s.defs() {
            producer.insert(d.as_str(), i);
        }
    }
    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); stmts.len()];
    let mut indeg = vec![0usize; stmts.len()];
    for (i, s) in stmts.iter().enumerate() {
        for (a, _) in comb_edges(s, summaries) {
            if let Some(&p) = producer.get(a) {
                if p != i && succ[p].insert(i) {
                    indeg[i] += 1;
                }
            }
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..stmts.len()).filter(|i| indeg[*i] == 0).map(Reverse).collect();
    let mut out = vec![];
    let mut done = vec![false; stmts.len()];
    while let Some(Reverse(i)) = ready.pop() {
        out.push(i);
        done[i] = true;
        for &j in &succ[i] {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                ready.push(Reverse(j));
            }
        }
    }
    out.extend((0..stmts.len()).filter(|i| !done[*i]));
    out
}

fn cycle_error(u: &MirUnit, scc: &[&str]) -> Diagnostic {
    let mut members: Vec<&str> = scc.to_vec();
    members.sort();
    let describe = |n: &str| match u.signals.get(n).and_then(|s| s.source.as_deref()) {
        Some(src) => format!("`{src}`"),
        None => format!("`{n}`"),
    };
    let named: BTreeSet<String> = members
        .iter()
        .filter(|n| u.signals.get(**n).is_some_and(|s| !s.synthetic))
        .map(|n| describe(n))
        .collect();
    let span = members
        .iter()
        .filter_map(|n| u.signals.get(*n))
        .find(|s| !s.synthetic && s.span.is_some())
        .and_then(|s| s.span)
        .unwrap_or(u.span);
    let list = if named.is_empty() {
        members.iter().map(|n| describe(n)).collect::<Vec<_>>().join(", ")
    } else {
        named.into_iter().collect::<Vec<_>>().join(", ")
    };
    Diagnostic::error(
        ErrorCode::CombinationalCycle,
        format!("Combinational cycle through {list}"),
        span,
    )
    .label("this value depends on itself within one clock cycle")
    .note("every feedback path must pass through a register")
}
