//! Match exhaustiveness and arm reachability, using the usefulness
//! algorithm over a pattern matrix. Witnesses of non-exhaustiveness are
//! reconstructed so the error can name an uncovered value.

use crate::resolver::{HPattern, HPatternKind, ItemTable};

use super::types::Type;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ctor {
    Bool(bool),
    Int(i128),
    Tuple(usize),
    Variant(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pat {
    Wild,
    Ctor(Ctor, Vec<Pat>),
}

impl Pat {
    pub fn from_hir(p: &HPattern) -> Pat {
        match &p.kind {
            HPatternKind::Wildcard | HPatternKind::Bind(_) => Pat::Wild,
            HPatternKind::Int(v) => Pat::Ctor(Ctor::Int(*v), vec![]),
            HPatternKind::Bool(b) => Pat::Ctor(Ctor::Bool(*b), vec![]),
            HPatternKind::Tuple(ps) => {
                Pat::Ctor(Ctor::Tuple(ps.len()), ps.iter().map(Pat::from_hir).collect())
            }
            HPatternKind::Variant(_, v, ps) => {
                Pat::Ctor(Ctor::Variant(*v), ps.iter().map(Pat::from_hir).collect())
            }
        }
    }

    /// Renders a witness for diagnostics, e.g. `(Some(_), None)`.
    pub fn display(&self, items: &ItemTable, ty: &Type) -> String {
        match self {
            Pat::Wild => "_".into(),
            Pat::Ctor(Ctor::Bool(b), _) => b.to_string(),
            Pat::Ctor(Ctor::Int(v), _) => v.to_string(),
            Pat::Ctor(Ctor::Tuple(_), ps) => {
                let tys = field_types(items, ty, &Ctor::Tuple(ps.len()));
                let inner: Vec<String> = ps
                    .iter()
                    .zip(&tys)
                    .map(|(p, t)| p.display(items, t))
                    .collect();
                if ps.len() == 1 {
                    format!("({},)", inner[0])
                } else {
                    format!("({})", inner.join(", "))
                }
            }
            Pat::Ctor(Ctor::Variant(v), ps) => {
                let name = match ty {
                    Type::Named(id, _) => items.type_decl(*id).variants()[*v].name.clone(),
                    _ => "?".into(),
                };
                if ps.is_empty() {
                    name
                } else {
                    let tys = field_types(items, ty, &Ctor::Variant(*v));
                    let inner: Vec<String> = ps
                        .iter()
                        .zip(&tys)
                        .map(|(p, t)| p.display(items, t))
                        .collect();
                    format!("{name}({})", inner.join(", "))
                }
            }
        }
    }
}

fn field_types(items: &ItemTable, ty: &Type, c: &Ctor) -> Vec<Type> {
    match (c, ty) {
        (Ctor::Tuple(_), Type::Tuple(ts)) => ts.clone(),
        (Ctor::Variant(v), t) => t
            .enum_variants(items)
            .and_then(|vs| vs.into_iter().nth(*v))
            .map(|(_, fs)| fs.into_iter().map(|(_, t)| t).collect())
            .unwrap_or_default(),
        _ => vec![],
    }
}

fn arity(items: &ItemTable, ty: &Type, c: &Ctor) -> usize {
    match c {
        Ctor::Tuple(n) => *n,
        Ctor::Variant(_) => field_types(items, ty, c).len(),
        Ctor::Bool(_) | Ctor::Int(_) => 0,
    }
}

/// Every constructor of `ty`, or `None` when the set is open (integers,
/// and types that cannot be matched structurally).
fn all_ctors(items: &ItemTable, ty: &Type) -> Option<Vec<Ctor>> {
    match ty {
        Type::Bool => Some(vec![Ctor::Bool(false), Ctor::Bool(true)]),
        Type::Tuple(ts) => Some(vec![Ctor::Tuple(ts.len())]),
        Type::Named(..) => ty
            .enum_variants(items)
            .map(|vs| (0..vs.len()).map(Ctor::Variant).collect()),
        _ => None,
    }
}

fn specialize(row: &[Pat], c: &Ctor, n: usize) -> Option<Vec<Pat>> {
    match &row[0] {
        Pat::Wild => {
            let mut out = vec![Pat::Wild; n];
            out.extend_from_slice(&row[1..]);
            Some(out)
        }
        Pat::Ctor(d, args) if d == c => {
            let mut out = args.clone();
            out.extend_from_slice(&row[1..]);
            Some(out)
        }
        Pat::Ctor(..) => None,
    }
}

pub struct Checker<'a> {
    pub items: &'a ItemTable,
}

impl Checker<'_> {
    /// Returns a witness vector showing that `q` matches something no row
    /// of `matrix` matches, or `None` if `q` is useless.
    pub fn useful(&self, matrix: &[Vec<Pat>], q: &[Pat], tys: &[Type]) -> Option<Vec<Pat>> {
        if q.is_empty() {
            return if matrix.is_empty() { Some(vec![]) } else { None };
        }
        let ty = &tys[0];
        match &q[0] {
            Pat::Ctor(c, _) => self.useful_ctor(matrix, q, tys, c),
            Pat::Wild => {
                let used: Vec<Ctor> = matrix
                    .iter()
                    .filter_map(|r| match &r[0] {
                        Pat::Ctor(c, _) => Some(c.clone()),
                        Pat::Wild => None,
                    })
                    .collect();
                let complete = all_ctors(self.items, ty)
                    .filter(|all| !used.is_empty() && all.iter().all(|c| used.contains(c)));
                if let Some(all) = complete {
                    for c in all {
                        if let Some(w) = self.useful_ctor(matrix, q, tys, &c) {
                            return Some(w);
                        }
                    }
                    return None;
                }
                let default: Vec<Vec<Pat>> = matrix
                    .iter()
                    .filter(|r| r[0] == Pat::Wild)
                    .map(|r| r[1..].to_vec())
                    .collect();
                let mut w = self.useful(&default, &q[1..], &tys[1..])?;
                let head = if used.is_empty() {
                    Pat::Wild
                } else {
                    match all_ctors(self.items, ty) {
                        Some(all) => {
                            let c = all.into_iter().find(|c| !used.contains(c)).unwrap();
                            let n = arity(self.items, ty, &c);
                            Pat::Ctor(c, vec![Pat::Wild; n])
                        }
                        None => Pat::Wild,
                    }
                };
                w.insert(0, head);
                Some(w)
            }
        }
    }

    fn useful_ctor(&self, matrix: &[Vec<Pat>], q: &[Pat], tys: &[Type], c: &Ctor) -> Option<Vec<Pat>> {
        let ty = &tys[0];
        let n = arity(self.items, ty, c);
        let spec: Vec<Vec<Pat>> = matrix.iter().filter_map(|r| specialize(r, c, n)).collect();
        let q2 = specialize(q, c, n)?;
        let mut sub_tys = field_types(self.items, ty, c);
        sub_tys.resize(n, Type::unit());
        sub_tys.extend_from_slice(&tys[1..]);
        let mut w = self.useful(&spec, &q2, &sub_tys)?;
        let rest = w.split_off(n);
        let mut out = vec![Pat::Ctor(c.clone(), w)];
        out.extend(rest);
        Some(out)
    }
}

#[derive(Debug, Default)]
pub struct MatchReport {
    /// Indices of arms no earlier arm leaves anything for.
    pub unreachable: Vec<usize>,
    /// An uncovered value, when the match is not exhaustive.
    pub missing: Option<String>,
}

pub fn check_match(items: &ItemTable, scrutinee: &Type, arms: &[&HPattern]) -> MatchReport {
    let checker = Checker { items };
    let tys = [scrutinee.clone()];
    let mut matrix: Vec<Vec<Pat>> = vec![];
    let mut report = MatchReport::default();
    for (i, p) in arms.iter().enumerate() {
        let row = vec![Pat::from_hir(p)];
        if checker.useful(&matrix, &row, &tys).is_none() {
            report.unreachable.push(i);
        }
        matrix.push(row);
    }
    if let Some(w) = checker.useful(&matrix, &[Pat::Wild], &tys) {
        report.missing = Some(w[0].display(items, scrutinee));
    }
    report
}

/// Uncovered value for a `let` pattern, if the pattern is refutable.
pub fn refutable(items: &ItemTable, ty: &Type, p: &HPattern) -> Option<String> {
    check_match(items, ty, &[p]).missing
}
