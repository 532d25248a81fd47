use crate::resolver::{HirType, ItemTable, TypeId};

/// A fully solved type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Bool,
    Clock,
    Int(u32),
    Tuple(Vec<Type>),
    Array(Box<Type>, u64),
    Named(TypeId, Vec<Type>),
    Wire(Box<Type>),
    MutWire(Box<Type>),
    Memory(Box<Type>, u64),
}

impl Type {
    pub fn unit() -> Type {
        Type::Tuple(vec![])
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, Type::Tuple(ts) if ts.is_empty())
    }

    fn any(&self, items: &ItemTable, f: &impl Fn(&Type) -> bool) -> bool {
        if f(self) {
            return true;
        }
        match self {
            Type::Tuple(ts) => ts.iter().any(|t| t.any(items, f)),
            Type::Array(t, _) | Type::Wire(t) | Type::MutWire(t) | Type::Memory(t, _) => {
                t.any(items, f)
            }
            Type::Named(..) => self
                .components(items)
                .iter()
                .any(|(_, t)| t.any(items, f)),
            Type::Bool | Type::Clock | Type::Int(_) => false,
        }
    }

    /// Contains a mutable wire somewhere, so values must be consumed exactly once.
    pub fn is_linear(&self, items: &ItemTable) -> bool {
        self.any(items, &|t| matches!(t, Type::MutWire(_)))
    }

    pub fn contains_wire(&self, items: &ItemTable) -> bool {
        self.any(items, &|t| matches!(t, Type::Wire(_) | Type::MutWire(_)))
    }

    /// Plain data that can be stored in a register.
    pub fn is_data(&self, items: &ItemTable) -> bool {
        !self.any(items, &|t| {
            matches!(
                t,
                Type::Wire(_) | Type::MutWire(_) | Type::Clock | Type::Memory(..)
            )
        })
    }

    /// Struct fields (for structs) or the fields of every variant (for
    /// enums), with type arguments substituted.
    pub fn components(&self, items: &ItemTable) -> Vec<(String, Type)> {
        let Type::Named(id, args) = self else {
            return vec![];
        };
        let decl = items.type_decl(*id);
        let fields = decl
            .fields()
            .iter()
            .chain(decl.variants().iter().flat_map(|v| v.fields.iter()));
        fields
            .map(|f| (f.name.clone(), from_hir(&f.ty, args)))
            .collect()
    }

    pub fn struct_fields(&self, items: &ItemTable) -> Option<Vec<(String, Type)>> {
        let Type::Named(id, args) = self else {
            return None;
        };
        let decl = items.type_decl(*id);
        if decl.is_enum() {
            return None;
        }
        Some(
            decl.fields()
                .iter()
                .map(|f| (f.name.clone(), from_hir(&f.ty, args)))
                .collect(),
        )
    }

    /// Variants of an enum type with their field types.
    pub fn enum_variants(&self, items: &ItemTable) -> Option<Vec<(String, Vec<(String, Type)>)>> {
        let Type::Named(id, args) = self else {
            return None;
        };
        let decl = items.type_decl(*id);
        if !decl.is_enum() {
            return None;
        }
        Some(
            decl.variants()
                .iter()
                .map(|v| {
                    (
                        v.name.clone(),
                        v.fields
                            .iter()
                            .map(|f| (f.name.clone(), from_hir(&f.ty, args)))
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    pub fn is_port_struct(&self, items: &ItemTable) -> bool {
        match self {
            Type::Named(id, _) => matches!(
                items.type_decl(*id).kind,
                crate::resolver::TypeDeclKind::Struct { is_port: true, .. }
            ),
            _ => false,
        }
    }
}

/// Converts a declared type, substituting `args` for type parameters.
/// Panics on a parameter without an argument, which resolution rules out.
pub fn from_hir(t: &HirType, args: &[Type]) -> Type {
    match t {
        HirType::Bool => Type::Bool,
        HirType::Clock => Type::Clock,
        HirType::Int(n) => Type::Int(*n),
        HirType::Tuple(ts) => Type::Tuple(ts.iter().map(|t| from_hir(t, args)).collect()),
        HirType::Array(t, n) => Type::Array(Box::new(from_hir(t, args)), *n),
        HirType::Named(id, ts) => Type::Named(*id, ts.iter().map(|t| from_hir(t, args)).collect()),
        HirType::Param(i) => args[*i].clone(),
        HirType::Wire(t) => Type::Wire(Box::new(from_hir(t, args))),
        HirType::MutWire(t) => Type::MutWire(Box::new(from_hir(t, args))),
        HirType::Memory(t, d) => Type::Memory(Box::new(from_hir(t, args)), *d),
    }
}

pub fn type_name(items: &ItemTable, t: &Type) -> String {
    match t {
        Type::Bool => "bool".into(),
        Type::Clock => "clock".into(),
        Type::Int(n) => format!("int<{n}>"),
        Type::Tuple(ts) => {
            let inner: Vec<String> = ts.iter().map(|t| type_name(items, t)).collect();
            if ts.len() == 1 {
                format!("({},)", inner[0])
            } else {
                format!("({})", inner.join(", "))
            }
        }
        Type::Array(t, n) => format!("[{}; {n}]", type_name(items, t)),
        Type::Named(id, args) => {
            let name = &items.type_decl(*id).name;
            if args.is_empty() {
                name.clone()
            } else {
                let inner: Vec<String> = args.iter().map(|t| type_name(items, t)).collect();
                format!("{name}<{}>", inner.join(", "))
            }
        }
        Type::Wire(t) => format!("&{}", type_name(items, t)),
        Type::MutWire(t) => format!("&mut {}", type_name(items, t)),
        Type::Memory(t, d) => format!("Memory<{}, {d}>", type_name(items, t)),
    }
}
