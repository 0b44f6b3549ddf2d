//! Type representation and layout under the fixed dialect.

use std::fmt;

use serde::Serialize;

use crate::dialect;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum IntKind {
    Bool,
    /// Plain `char`; signed in this dialect but a distinct type.
    Char,
    SChar,
    UChar,
    Short,
    UShort,
    Int,
    UInt,
    Long,
    ULong,
    LongLong,
    ULongLong,
}

impl IntKind {
    pub fn bits(self) -> u32 {
        match self {
            IntKind::Bool | IntKind::Char | IntKind::SChar | IntKind::UChar => dialect::CHAR_BITS,
            IntKind::Short | IntKind::UShort => dialect::SHORT_BITS,
            IntKind::Int | IntKind::UInt => dialect::INT_BITS,
            IntKind::Long | IntKind::ULong => dialect::LONG_BITS,
            IntKind::LongLong | IntKind::ULongLong => dialect::LONG_LONG_BITS,
        }
    }

    pub fn is_signed(self) -> bool {
        match self {
            IntKind::Char => dialect::PLAIN_CHAR_SIGNED,
            IntKind::SChar | IntKind::Short | IntKind::Int | IntKind::Long | IntKind::LongLong => true,
            _ => false,
        }
    }

    /// Conversion rank; `long` and `long long` share a width but not a rank.
    pub fn rank(self) -> u32 {
        match self {
            IntKind::Bool => 0,
            IntKind::Char | IntKind::SChar | IntKind::UChar => 1,
            IntKind::Short | IntKind::UShort => 2,
            IntKind::Int | IntKind::UInt => 3,
            IntKind::Long | IntKind::ULong => 4,
            IntKind::LongLong | IntKind::ULongLong => 5,
        }
    }

    pub fn to_unsigned(self) -> IntKind {
        match self {
            IntKind::Char | IntKind::SChar => IntKind::UChar,
            IntKind::Short => IntKind::UShort,
            IntKind::Int => IntKind::UInt,
            IntKind::Long => IntKind::ULong,
            IntKind::LongLong => IntKind::ULongLong,
            k => k,
        }
    }

    /// Wrap `v` to this type's representable range.
    pub fn wrap(self, v: i128) -> i128 {
        if self == IntKind::Bool {
            return (v != 0) as i128;
        }
        dialect::wrap(v, self.bits(), self.is_signed())
    }

    pub fn fits(self, v: i128) -> bool {
        if self == IntKind::Bool {
            return v == 0 || v == 1;
        }
        dialect::fits(v, self.bits(), self.is_signed())
    }

    pub fn name(self) -> &'static str {
        match self {
            IntKind::Bool => "_Bool",
            IntKind::Char => "char",
            IntKind::SChar => "signed char",
            IntKind::UChar => "unsigned char",
            IntKind::Short => "short",
            IntKind::UShort => "unsigned short",
            IntKind::Int => "int",
            IntKind::UInt => "unsigned int",
            IntKind::Long => "long",
            IntKind::ULong => "unsigned long",
            IntKind::LongLong => "long long",
            IntKind::ULongLong => "unsigned long long",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct RecordId(pub u32);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Param {
    pub name: Option<String>,
    pub ty: TypeRepr,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TypeKind {
    Void,
    Int(IntKind),
    /// Width in bits: 32, 64, or 128 for `long double` (computed as 64).
    Float(u32),
    Pointer(Box<TypeRepr>),
    Array(Box<TypeRepr>, Option<u64>),
    Function { ret: Box<TypeRepr>, params: Vec<Param>, variadic: bool, prototype: bool },
    Record(RecordId),
    Enum(Option<String>),
    Opaque(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeRepr {
    pub kind: TypeKind,
    pub is_const: bool,
    pub is_volatile: bool,
}

impl From<TypeKind> for TypeRepr {
    fn from(kind: TypeKind) -> Self {
        TypeRepr { kind, is_const: false, is_volatile: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Member {
    pub name: String,
    pub ty: TypeRepr,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordDef {
    pub tag: Option<String>,
    pub is_union: bool,
    /// `None` while the record is incomplete.
    pub members: Option<Vec<Member>>,
}

impl TypeRepr {
    pub fn int(k: IntKind) -> Self {
        TypeKind::Int(k).into()
    }

    pub fn void() -> Self {
        TypeKind::Void.into()
    }

    pub fn pointer_to(t: TypeRepr) -> Self {
        TypeKind::Pointer(Box::new(t)).into()
    }

    pub fn unqualified(&self) -> TypeRepr {
        TypeRepr { kind: self.kind.clone(), is_const: false, is_volatile: false }
    }

    pub fn with_quals(mut self, is_const: bool, is_volatile: bool) -> Self {
        self.is_const |= is_const;
        self.is_volatile |= is_volatile;
        self
    }

    /// Integer kind for integer and enum types (enums are `int`).
    pub fn int_kind(&self) -> Option<IntKind> {
        match self.kind {
            TypeKind::Int(k) => Some(k),
            TypeKind::Enum(_) => Some(IntKind::Int),
            _ => None,
        }
    }

    pub fn is_integer(&self) -> bool {
        self.int_kind().is_some()
    }

    pub fn is_floating(&self) -> bool {
        matches!(self.kind, TypeKind::Float(_))
    }

    pub fn is_arithmetic(&self) -> bool {
        self.is_integer() || self.is_floating()
    }

    pub fn is_pointer(&self) -> bool {
        matches!(self.kind, TypeKind::Pointer(_))
    }

    pub fn is_array(&self) -> bool {
        matches!(self.kind, TypeKind::Array(..))
    }

    pub fn is_scalar(&self) -> bool {
        self.is_arithmetic() || self.is_pointer()
    }

    pub fn is_function(&self) -> bool {
        matches!(self.kind, TypeKind::Function { .. })
    }

    pub fn is_void(&self) -> bool {
        matches!(self.kind, TypeKind::Void)
    }

    pub fn is_bool(&self) -> bool {
        matches!(self.kind, TypeKind::Int(IntKind::Bool))
    }

    pub fn is_opaque(&self, name: &str) -> bool {
        matches!(&self.kind, TypeKind::Opaque(n) if n == name)
    }

    /// Pointee of a pointer, or element of an array.
    pub fn pointee(&self) -> Option<&TypeRepr> {
        match &self.kind {
            TypeKind::Pointer(t) | TypeKind::Array(t, _) => Some(t),
            _ => None,
        }
    }

    /// Whether this is `FILE *` (ignoring qualifiers).
    pub fn is_file_pointer(&self) -> bool {
        matches!(&self.kind, TypeKind::Pointer(p) if p.is_opaque("FILE"))
    }

    /// Array-to-pointer and function-to-pointer conversion.
    pub fn decay(&self) -> TypeRepr {
        match &self.kind {
            TypeKind::Array(elem, _) => TypeRepr::pointer_to((**elem).clone()),
            TypeKind::Function { .. } => TypeRepr::pointer_to(self.unqualified()),
            _ => self.unqualified(),
        }
    }

    /// Integer promotion; other types are returned unchanged.
    pub fn promote(&self) -> TypeRepr {
        match self.int_kind() {
            Some(k) if k.rank() < IntKind::Int.rank() => TypeRepr::int(IntKind::Int),
            Some(k) => TypeRepr::int(k),
            None => self.unqualified(),
        }
    }

    /// Size and alignment in bytes; `None` for incomplete and opaque types.
    pub fn size_align(&self, records: &[RecordDef]) -> Option<(u64, u64)> {
        match &self.kind {
            TypeKind::Void | TypeKind::Function { .. } | TypeKind::Opaque(_) => None,
            TypeKind::Int(k) => {
                let b = (k.bits() / 8) as u64;
                Some((b, b))
            }
            TypeKind::Enum(_) => Some((4, 4)),
            TypeKind::Float(32) => Some((4, 4)),
            TypeKind::Float(_) => Some((8, 8)),
            TypeKind::Pointer(_) => Some((dialect::POINTER_BYTES, dialect::POINTER_BYTES)),
            TypeKind::Array(elem, Some(n)) => {
                let (s, a) = elem.size_align(records)?;
                Some((s.checked_mul(*n)?, a))
            }
            TypeKind::Array(_, None) => None,
            TypeKind::Record(id) => {
                let def = records.get(id.0 as usize)?;
                let members = def.members.as_ref()?;
                let mut size = 0u64;
                let mut align = 1u64;
                for m in members {
                    let (s, a) = m.ty.size_align(records)?;
                    align = align.max(a);
                    if def.is_union {
                        size = size.max(s);
                    } else {
                        size = size.div_ceil(a) * a + s;
                    }
                }
                Some((size.div_ceil(align).max(1) * align, align))
            }
        }
    }

    pub fn size(&self, records: &[RecordDef]) -> Option<u64> {
        self.size_align(records).map(|(s, _)| s)
    }

    /// Human-readable spelling, e.g. `const char *`.
    pub fn display(&self, records: &[RecordDef]) -> String {
        let mut out = String::new();
        self.write(records, &mut out);
        out
    }

    fn write(&self, records: &[RecordDef], out: &mut String) {
        let q = match (self.is_const, self.is_volatile) {
            (true, true) => "const volatile ",
            (true, false) => "const ",
            (false, true) => "volatile ",
            _ => "",
        };
        match &self.kind {
            TypeKind::Pointer(p) => {
                p.write(records, out);
                out.push_str(" *");
                if self.is_const {
                    out.push_str(" const");
                }
            }
            TypeKind::Array(e, n) => {
                e.write(records, out);
                match n {
                    Some(n) => out.push_str(&format!("[{n}]")),
                    None => out.push_str("[]"),
                }
            }
            TypeKind::Function { ret, params, variadic, .. } => {
                ret.write(records, out);
                out.push('(');
                let mut parts: Vec<String> = params.iter().map(|p| p.ty.display(records)).collect();
                if *variadic {
                    parts.push("...".into());
                }
                if parts.is_empty() {
                    parts.push("void".into());
                }
                out.push_str(&parts.join(", "));
                out.push(')');
            }
            other => {
                out.push_str(q);
                match other {
                    TypeKind::Void => out.push_str("void"),
                    TypeKind::Int(k) => out.push_str(k.name()),
                    TypeKind::Float(32) => out.push_str("float"),
                    TypeKind::Float(64) => out.push_str("double"),
                    TypeKind::Float(_) => out.push_str("long double"),
                    TypeKind::Enum(tag) => out.push_str(&format!("enum {}", tag.as_deref().unwrap_or("<anonymous>"))),
                    TypeKind::Opaque(n) => out.push_str(n),
                    TypeKind::Record(id) => {
                        let def = &records[id.0 as usize];
                        let kw = if def.is_union { "union" } else { "struct" };
                        out.push_str(&format!("{kw} {}", def.tag.as_deref().unwrap_or("<anonymous>")));
                    }
                    _ => unreachable!(),
                }
            }
        }
    }
}

impl fmt::Display for IntKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Usual arithmetic conversions for two arithmetic operand types.
pub fn usual_arithmetic(a: &TypeRepr, b: &TypeRepr) -> TypeRepr {
    match (&a.kind, &b.kind) {
        (TypeKind::Float(x), TypeKind::Float(y)) => TypeKind::Float(*x.max(y)).into(),
        (TypeKind::Float(x), _) | (_, TypeKind::Float(x)) => TypeKind::Float(*x).into(),
        _ => {
            let (Some(x), Some(y)) = (a.promote().int_kind(), b.promote().int_kind()) else {
                return TypeRepr::int(IntKind::Int);
            };
            TypeRepr::int(common_int(x, y))
        }
    }
}

fn common_int(x: IntKind, y: IntKind) -> IntKind {
    if x == y {
        return x;
    }
    if x.is_signed() == y.is_signed() {
        return if x.rank() >= y.rank() { x } else { y };
    }
    let (s, u) = if x.is_signed() { (x, y) } else { (y, x) };
    if u.rank() >= s.rank() {
        u
    } else if s.bits() > u.bits() {
        s
    } else {
        s.to_unsigned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(k: IntKind) -> TypeRepr {
        TypeRepr::int(k)
    }

    #[test]
    fn arithmetic_conversions() {
        assert_eq!(usual_arithmetic(&t(IntKind::Char), &t(IntKind::UChar)), t(IntKind::Int));
        assert_eq!(usual_arithmetic(&t(IntKind::Int), &t(IntKind::UInt)), t(IntKind::UInt));
        assert_eq!(usual_arithmetic(&t(IntKind::Long), &t(IntKind::UInt)), t(IntKind::Long));
        assert_eq!(usual_arithmetic(&t(IntKind::Long), &t(IntKind::ULong)), t(IntKind::ULong));
        assert_eq!(usual_arithmetic(&t(IntKind::LongLong), &t(IntKind::ULong)), t(IntKind::ULongLong));
        assert_eq!(usual_arithmetic(&t(IntKind::Int), &TypeKind::Float(32).into()), TypeKind::Float(32).into());
    }

    #[test]
    fn record_layout() {
        let records = vec![RecordDef {
            tag: Some("s".into()),
            is_union: false,
            members: Some(vec![
                Member { name: "c".into(), ty: t(IntKind::Char) },
                Member { name: "l".into(), ty: t(IntKind::Long) },
                Member { name: "s".into(), ty: t(IntKind::Short) },
            ]),
        }];
        let ty: TypeRepr = TypeKind::Record(RecordId(0)).into();
        assert_eq!(ty.size_align(&records), Some((24, 8)));
    }

    #[test]
    fn display_types() {
        let p = TypeRepr::pointer_to(t(IntKind::Char).with_quals(true, false));
        assert_eq!(p.display(&[]), "const char *");
        assert_eq!(TypeRepr::pointer_to(TypeKind::Opaque("FILE".into()).into()).display(&[]), "FILE *");
    }
}
