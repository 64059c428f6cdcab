//! Semantic types of resolved MiniSol programs and the integer encodings
//! used for non-numeric scalars.

use num_bigint::{BigInt, Sign};
use num_traits::{One, Zero};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ty {
    Bool,
    Uint(u16),
    Int(u16),
    Address,
    FixedBytes(u8),
    String,
    Bytes,
    Mapping(Box<Ty>, Box<Ty>),
    Array(Box<Ty>),
    /// Index into `Program::structs`.
    Struct(usize),
    Tuple(Vec<Ty>),
    Void,
    /// Type of integer literals before they meet a concrete integer type.
    Lit,
}

impl Ty {
    pub fn uint256() -> Ty {
        Ty::Uint(256)
    }

    /// Scalar types are stored in a single solver term.
    pub fn is_scalar(&self) -> bool {
        matches!(
            self,
            Ty::Bool | Ty::Uint(_) | Ty::Int(_) | Ty::Address | Ty::FixedBytes(_) | Ty::String | Ty::Bytes | Ty::Lit
        )
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, Ty::Uint(_) | Ty::Int(_) | Ty::Lit)
    }

    pub fn is_signed(&self) -> bool {
        matches!(self, Ty::Int(_))
    }

    pub fn is_aggregate(&self) -> bool {
        matches!(self, Ty::Mapping(..) | Ty::Array(_) | Ty::Struct(_))
    }

    /// Inclusive lower and exclusive upper bound of the integer encoding, if
    /// the type has one. Strings and bytes are only bounded below.
    pub fn range(&self) -> Option<(BigInt, Option<BigInt>)> {
        let pow2 = |n: u32| BigInt::one() << n;
        match self {
            Ty::Uint(n) => Some((BigInt::zero(), Some(pow2(*n as u32)))),
            Ty::Int(n) => Some((-pow2(*n as u32 - 1), Some(pow2(*n as u32 - 1)))),
            Ty::Address => Some((BigInt::zero(), Some(pow2(160)))),
            Ty::FixedBytes(n) => Some((BigInt::zero(), Some(pow2(8 * *n as u32)))),
            Ty::String | Ty::Bytes => Some((BigInt::one(), None)),
            _ => None,
        }
    }

    pub fn contains(&self, v: &BigInt) -> bool {
        match self.range() {
            Some((lo, hi)) => v >= &lo && hi.is_none_or(|h| v < &h),
            None => true,
        }
    }

    /// Default integer encoding of a scalar type's zero value.
    pub fn default_int(&self) -> BigInt {
        match self {
            Ty::String | Ty::Bytes => encode_bytes(&[]),
            _ => BigInt::zero(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructInfo {
    pub name: String,
    pub fields: Vec<(String, Ty)>,
}

/// Display helper that needs the struct table to name struct types.
pub struct TyDisplay<'a> {
    pub ty: &'a Ty,
    pub structs: &'a [StructInfo],
}

impl fmt::Display for TyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |ty| TyDisplay {
            ty,
            structs: self.structs,
        };
        match self.ty {
            Ty::Bool => write!(f, "bool"),
            Ty::Uint(n) => write!(f, "uint{n}"),
            Ty::Int(n) => write!(f, "int{n}"),
            Ty::Address => write!(f, "address"),
            Ty::FixedBytes(n) => write!(f, "bytes{n}"),
            Ty::String => write!(f, "string"),
            Ty::Bytes => write!(f, "bytes"),
            Ty::Mapping(k, v) => write!(f, "mapping({} => {})", sub(k), sub(v)),
            Ty::Array(e) => write!(f, "{}[]", sub(e)),
            Ty::Struct(i) => match self.structs.get(*i) {
                Some(s) => write!(f, "{}", s.name),
                None => write!(f, "struct#{i}"),
            },
            Ty::Tuple(items) => {
                write!(f, "(")?;
                for (i, t) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", sub(t))?;
                }
                write!(f, ")")
            }
            Ty::Void => write!(f, "void"),
            Ty::Lit => write!(f, "integer literal"),
        }
    }
}

/// Strings and byte arrays are encoded as the big-endian integer of
/// `0x01 ‖ bytes`, which is injective and keeps the empty string distinct
/// from zero.
pub fn encode_bytes(bytes: &[u8]) -> BigInt {
    let mut buf = Vec::with_capacity(bytes.len() + 1);
    buf.push(1u8);
    buf.extend_from_slice(bytes);
    BigInt::from_bytes_be(Sign::Plus, &buf)
}

/// Inverse of [`encode_bytes`]; `None` for integers that are not encodings.
pub fn decode_bytes(v: &BigInt) -> Option<Vec<u8>> {
    let (sign, buf) = v.to_bytes_be();
    if sign != Sign::Plus || buf.first() != Some(&1) {
        return None;
    }
    Some(buf[1..].to_vec())
}

/// Render an integer-encoded scalar the way Solidity source would spell it.
pub fn render_scalar(ty: &Ty, v: &BigInt) -> String {
    match ty {
        Ty::Address => format!("0x{:0>40}", v.to_str_radix(16)),
        Ty::FixedBytes(n) => format!("0x{:0>width$}", v.to_str_radix(16), width = 2 * *n as usize),
        Ty::String => match decode_bytes(v).and_then(|b| String::from_utf8(b).ok()) {
            Some(s) => format!("{s:?}"),
            None => format!("string#{v}"),
        },
        Ty::Bytes => match decode_bytes(v) {
            Some(b) => {
                let hex: String = b.iter().map(|x| format!("{x:02x}")).collect();
                format!("hex\"{hex}\"")
            }
            None => format!("bytes#{v}"),
        },
        Ty::Bool => (!v.is_zero()).to_string(),
        _ => v.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_encoding_round_trips() {
        for s in ["", "uniqueID", "\0\0"] {
            let e = encode_bytes(s.as_bytes());
            assert_eq!(decode_bytes(&e).unwrap(), s.as_bytes());
        }
        assert_ne!(encode_bytes(b""), encode_bytes(b"\0"));
        assert_eq!(decode_bytes(&BigInt::from(0)), None);
    }

    #[test]
    fn ranges() {
        assert!(Ty::Uint(8).contains(&BigInt::from(255)));
        assert!(!Ty::Uint(8).contains(&BigInt::from(256)));
        assert!(Ty::Int(8).contains(&BigInt::from(-128)));
        assert!(!Ty::Int(8).contains(&BigInt::from(128)));
        assert_eq!(
            render_scalar(&Ty::Address, &BigInt::from(1)),
            format!("0x{}1", "0".repeat(39))
        );
    }
}
