//! Bit layouts of concrete types.
//!
//! Tuples, structs and arrays are concatenations. The first tuple element or
//! struct field sits at the most significant end; array element 0 sits at
//! the least significant end. Enums put the discriminant in the most
//! significant bits, followed by a payload region as wide as the widest
//! variant. A variant's fields are packed from bit 0 of that region, first
//! field most significant, and any bits above them are undefined.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::resolver::ItemTable;
use crate::typecheck::{type_name, Type};

/// Self-contained description of a type's layout. Stored in source maps and
/// exported state so values can be decoded without the compiler.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TypeDesc {
    Bool,
    Clock,
    Int { width: u64 },
    /// Raw bits without a source-level type, used for internal temporaries.
    Bits { width: u64 },
    Tuple { elems: Vec<TypeDesc> },
    Struct { name: String, fields: Vec<FieldDesc> },
    Array { elem: Box<TypeDesc>, len: u64 },
    Enum {
        name: String,
        disc_width: u64,
        payload_width: u64,
        variants: Vec<VariantDesc>,
    },
    Wire { inner: Box<TypeDesc>, mutable: bool },
    Memory { elem: Box<TypeDesc>, depth: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDesc {
    pub name: String,
    /// Offset of the field's least significant bit within its container.
    pub offset: u64,
    pub ty: TypeDesc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantDesc {
    pub name: String,
    pub tag: u64,
    pub fields: Vec<FieldDesc>,
}

/// Bits needed for the discriminant of an enum with `n` variants.
pub fn disc_width(n: usize) -> u64 {
    if n <= 1 {
        0
    } else {
        64 - (n as u64 - 1).leading_zeros() as u64
    }
}

/// Lays out fields first-most-significant; returns descriptors and total width.
fn pack(fields: Vec<(String, TypeDesc)>) -> (Vec<FieldDesc>, u64) {
    let total: u64 = fields.iter().map(|(_, t)| t.width()).sum();
    let mut offset = total;
    let out = fields
        .into_iter()
        .map(|(name, ty)| {
            offset -= ty.width();
            FieldDesc { name, offset, ty }
        })
        .collect();
    (out, total)
}

impl TypeDesc {
    pub fn width(&self) -> u64 {
        match self {
            TypeDesc::Bool | TypeDesc::Clock => 1,
            TypeDesc::Int { width } | TypeDesc::Bits { width } => *width,
            TypeDesc::Tuple { elems } => elems.iter().map(TypeDesc::width).sum(),
            TypeDesc::Struct { fields, .. } => fields.iter().map(|f| f.ty.width()).sum(),
            TypeDesc::Array { elem, len } => elem.width() * len,
            TypeDesc::Enum {
                disc_width,
                payload_width,
                ..
            } => disc_width + payload_width,
            TypeDesc::Wire { inner, .. } => inner.width(),
            TypeDesc::Memory { .. } => 0,
        }
    }

    /// Offsets of tuple elements, first element most significant.
    pub fn tuple_offsets(elems: &[TypeDesc]) -> Vec<u64> {
        let total: u64 = elems.iter().map(TypeDesc::width).sum();
        let mut offset = total;
        elems
            .iter()
            .map(|e| {
                offset -= e.width();
                offset
            })
            .collect()
    }

    pub fn encode(&self, v: &Value) -> Option<Bits> {
        let w = self.width() as usize;
        Some(match (self, v) {
            (_, Value::X) => Bits::x(w),
            (TypeDesc::Bool, Value::Bool(b)) => Bits::from_bool(*b),
            (TypeDesc::Int { width } | TypeDesc::Bits { width }, Value::Int(i)) => {
                Bits::from_bigint(i, *width as usize)
            }
            (TypeDesc::Tuple { elems }, Value::Tuple(vs)) if vs.len() == elems.len() => {
                let parts = elems
                    .iter()
                    .zip(vs)
                    .map(|(t, v)| t.encode(v))
                    .collect::<Option<Vec<_>>>()?;
                Bits::concat(&parts)
            }
            (TypeDesc::Struct { name, fields }, Value::Struct(n, vs))
                if n == name && vs.len() == fields.len() =>
            {
                let parts = fields
                    .iter()
                    .zip(vs)
                    .map(|(f, (_, v))| f.ty.encode(v))
                    .collect::<Option<Vec<_>>>()?;
                Bits::concat(&parts)
            }
            (TypeDesc::Array { elem, len }, Value::Array(vs)) if vs.len() as u64 == *len => {
                let mut parts = vs
                    .iter()
                    .map(|v| elem.encode(v))
                    .collect::<Option<Vec<_>>>()?;
                parts.reverse();
                Bits::concat(&parts)
            }
            (
                TypeDesc::Enum {
                    disc_width,
                    payload_width,
                    variants,
                    ..
                },
                Value::Variant(name, vs),
            ) => {
                let var = variants.iter().find(|v| &v.name == name)?;
                if var.fields.len() != vs.len() {
                    return None;
                }
                let mut bits = Bits::x(*payload_width as usize).bits_lsb().to_vec();
                for (f, (_, v)) in var.fields.iter().zip(vs) {
                    let fb = f.ty.encode(v)?;
                    for (i, b) in fb.bits_lsb().iter().enumerate() {
                        bits[f.offset as usize + i] = *b;
                    }
                }
                Bits::concat(&[
                    Bits::from_u64(var.tag, *disc_width as usize),
                    Bits::from_bits_lsb(bits),
                ])
            }
            (TypeDesc::Wire { inner, .. }, v) => inner.encode(v)?,
            _ => return None,
        })
    }

    /// Reads a value back. Unknown bits make the smallest enclosing integer,
    /// bool or discriminant `X`.
    pub fn decode(&self, bits: &Bits) -> Value {
        match self {
            TypeDesc::Bool | TypeDesc::Clock => match bits.to_bool() {
                Some(b) => Value::Bool(b),
                None => Value::X,
            },
            TypeDesc::Int { .. } => bits.to_signed().map(Value::Int).unwrap_or(Value::X),
            TypeDesc::Bits { .. } => bits.to_unsigned().map(Value::Int).unwrap_or(Value::X),
            TypeDesc::Tuple { elems } => {
                if bits.is_all_x() && bits.width() > 0 {
                    return Value::X;
                }
                let offsets = TypeDesc::tuple_offsets(elems);
                Value::Tuple(
                    elems
                        .iter()
                        .zip(offsets)
                        .map(|(t, o)| t.decode(&bits.slice(o as usize, t.width() as usize)))
                        .collect(),
                )
            }
            TypeDesc::Struct { name, fields } => {
                if bits.is_all_x() && bits.width() > 0 {
                    return Value::X;
                }
                Value::Struct(name.clone(), decode_fields(fields, bits, 0))
            }
            TypeDesc::Array { elem, len } => {
                if bits.is_all_x() && bits.width() > 0 {
                    return Value::X;
                }
                let w = elem.width() as usize;
                Value::Array(
                    (0..*len as usize)
                        .map(|i| elem.decode(&bits.slice(i * w, w)))
                        .collect(),
                )
            }
            TypeDesc::Enum {
                disc_width,
                payload_width,
                variants,
                ..
            } => {
                let disc = bits.slice(*payload_width as usize, *disc_width as usize);
                let Some(tag) = disc.to_u64() else {
                    return Value::X;
                };
                match variants.iter().find(|v| v.tag == tag) {
                    Some(v) => Value::Variant(v.name.clone(), decode_fields(&v.fields, bits, 0)),
                    None => Value::X,
                }
            }
            TypeDesc::Wire { inner, .. } => inner.decode(bits),
            TypeDesc::Memory { .. } => Value::X,
        }
    }
}

fn decode_fields(fields: &[FieldDesc], bits: &Bits, base: u64) -> Vec<(String, Value)> {
    fields
        .iter()
        .map(|f| {
            let b = bits.slice((base + f.offset) as usize, f.ty.width() as usize);
            (f.name.clone(), f.ty.decode(&b))
        })
        .collect()
}

/// A decoded value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    X,
    Bool(bool),
    Int(BigInt),
    Tuple(Vec<Value>),
    Struct(String, Vec<(String, Value)>),
    Array(Vec<Value>),
    Variant(String, Vec<(String, Value)>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, vs: impl Iterator<Item = String>) -> fmt::Result {
            let vs: Vec<String> = vs.collect();
            write!(f, "{}", vs.join(", "))
        }
        match self {
            Value::X => write!(f, "X"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Tuple(vs) => {
                write!(f, "(")?;
                list(f, vs.iter().map(|v| v.to_string()))?;
                if vs.len() == 1 {
                    write!(f, ",")?;
                }
                write!(f, ")")
            }
            Value::Struct(name, fs) => {
                write!(f, "{name} {{ ")?;
                list(f, fs.iter().map(|(n, v)| format!("{n}: {v}")))?;
                write!(f, " }}")
            }
            Value::Array(vs) => {
                write!(f, "[")?;
                list(f, vs.iter().map(|v| v.to_string()))?;
                write!(f, "]")
            }
            Value::Variant(name, fs) => {
                write!(f, "{name}")?;
                if !fs.is_empty() {
                    write!(f, "(")?;
                    list(f, fs.iter().map(|(_, v)| v.to_string()))?;
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

/// Memoized layouts of every concrete type met during lowering.
pub struct Layouts<'a> {
    items: &'a ItemTable,
    cache: BTreeMap<Type, TypeDesc>,
    /// Named types, keyed by their printed name.
    pub used: BTreeMap<String, TypeDesc>,
}

impl<'a> Layouts<'a> {
    pub fn new(items: &'a ItemTable) -> Self {
        Layouts {
            items,
            cache: BTreeMap::new(),
            used: BTreeMap::new(),
        }
    }

    pub fn width(&mut self, t: &Type) -> u64 {
        self.desc(t).width()
    }

    pub fn desc(&mut self, t: &Type) -> TypeDesc {
        if let Some(d) = self.cache.get(t) {
            return d.clone();
        }
        let d = match t {
            Type::Bool => TypeDesc::Bool,
            Type::Clock => TypeDesc::Clock,
            Type::Int(n) => TypeDesc::Int { width: *n as u64 },
            Type::Tuple(ts) => TypeDesc::Tuple {
                elems: ts.iter().map(|t| self.desc(t)).collect(),
            },
            Type::Array(e, n) => TypeDesc::Array {
                elem: Box::new(self.desc(e)),
                len: *n,
            },
            Type::Wire(i) => TypeDesc::Wire {
                inner: Box::new(self.desc(i)),
                mutable: false,
            },
            Type::MutWire(i) => TypeDesc::Wire {
                inner: Box::new(self.desc(i)),
                mutable: true,
            },
            Type::Memory(e, d) => TypeDesc::Memory {
                elem: Box::new(self.desc(e)),
                depth: *d,
            },
            Type::Named(..) => {
                let name = type_name(self.items, t);
                let d = if let Some(vs) = t.enum_variants(self.items) {
                    let variants: Vec<VariantDesc> = vs
                        .into_iter()
                        .enumerate()
                        .map(|(i, (vname, fs))| {
                            let fs = fs.into_iter().map(|(n, t)| (n, self.desc(&t))).collect();
                            VariantDesc {
                                name: vname,
                                tag: i as u64,
                                fields: pack(fs).0,
                            }
                        })
                        .collect();
                    let payload_width = variants
                        .iter()
                        .map(|v| v.fields.iter().map(|f| f.ty.width()).sum::<u64>())
                        .max()
                        .unwrap_or(0);
                    TypeDesc::Enum {
                        name: name.clone(),
                        disc_width: disc_width(variants.len()),
                        payload_width,
                        variants,
                    }
                } else {
                    let fs = t
                        .struct_fields(self.items)
                        .unwrap_or_default()
                        .into_iter()
                        .map(|(n, t)| (n, self.desc(&t)))
                        .collect();
                    TypeDesc::Struct {
                        name: name.clone(),
                        fields: pack(fs).0,
                    }
                };
                self.used.insert(name, d.clone());
                d
            }
        };
        self.cache.insert(t.clone(), d.clone());
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn option(inner: TypeDesc) -> TypeDesc {
        let w = inner.width();
        TypeDesc::Enum {
            name: "Option".into(),
            disc_width: 1,
            payload_width: w,
            variants: vec![
                VariantDesc {
                    name: "None".into(),
                    tag: 0,
                    fields: vec![],
                },
                VariantDesc {
                    name: "Some".into(),
                    tag: 1,
                    fields: vec![FieldDesc {
                        name: "val".into(),
                        offset: 0,
                        ty: inner,
                    }],
                },
            ],
        }
    }

    #[test]
    fn discriminant_widths() {
        assert_eq!(disc_width(1), 0);
        assert_eq!(disc_width(2), 1);
        assert_eq!(disc_width(3), 2);
        assert_eq!(disc_width(4), 2);
        assert_eq!(disc_width(5), 3);
    }

    #[test]
    fn option_encoding() {
        let t = option(TypeDesc::Bool);
        assert_eq!(t.width(), 2);
        let some = Value::Variant("Some".into(), vec![("val".into(), Value::Bool(true))]);
        assert_eq!(t.encode(&some).unwrap().to_string(), "11");
        let none = Value::Variant("None".into(), vec![]);
        assert_eq!(t.encode(&none).unwrap().to_string(), "0x");
        assert_eq!(t.decode(&Bits::parse("11").unwrap()).to_string(), "Some(true)");
        assert_eq!(t.decode(&Bits::parse("0x").unwrap()).to_string(), "None");
        assert_eq!(t.decode(&Bits::parse("x1").unwrap()), Value::X);
    }

    #[test]
    fn nested_option_is_three_bits() {
        assert_eq!(option(option(TypeDesc::Bool)).width(), 3);
    }

    #[test]
    fn tuple_first_element_is_most_significant() {
        let t = TypeDesc::Tuple {
            elems: vec![TypeDesc::Int { width: 8 }, TypeDesc::Bool],
        };
        assert_eq!(t.width(), 9);
        let v = Value::Tuple(vec![Value::Int(3.into()), Value::Bool(false)]);
        assert_eq!(t.encode(&v).unwrap().to_string(), "000000110");
    }
}
