use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Closed set of value types a parameter may carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PrimitiveType {
    Int,
    Float,
    Bool,
    String,
    BlobRef,
    IntArray,
    FloatArray,
    StringArray,
}

impl PrimitiveType {
    pub const ALL: [PrimitiveType; 8] = [
        PrimitiveType::Int,
        PrimitiveType::Float,
        PrimitiveType::Bool,
        PrimitiveType::String,
        PrimitiveType::BlobRef,
        PrimitiveType::IntArray,
        PrimitiveType::FloatArray,
        PrimitiveType::StringArray,
    ];

    /// Textual tag used in dictionaries, XML `type` attributes and table rows.
    pub fn tag(self) -> &'static str {
        match self {
            PrimitiveType::Int => "int",
            PrimitiveType::Float => "float",
            PrimitiveType::Bool => "bool",
            PrimitiveType::String => "string",
            PrimitiveType::BlobRef => "blob",
            PrimitiveType::IntArray => "int[]",
            PrimitiveType::FloatArray => "float[]",
            PrimitiveType::StringArray => "string[]",
        }
    }

    pub fn is_array(self) -> bool {
        matches!(
            self,
            PrimitiveType::IntArray | PrimitiveType::FloatArray | PrimitiveType::StringArray
        )
    }
}

impl fmt::Display for PrimitiveType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for PrimitiveType {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PrimitiveType::ALL
            .into_iter()
            .find(|t| t.tag() == s)
            .ok_or_else(|| ModelError::UnknownType(s.to_string()))
    }
}

impl TryFrom<String> for PrimitiveType {
    type Error = ModelError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<PrimitiveType> for String {
    fn from(t: PrimitiveType) -> String {
        t.tag().to_string()
    }
}

/// Reference from a parameter value to a stored blob.
///
/// Canonical text form: `blob:<decimal-id>:<64 lowercase hex digits>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlobLink {
    pub blob_id: u64,
    pub checksum: [u8; 32],
}

impl fmt::Display for BlobLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "blob:{}:{}", self.blob_id, hex::encode(self.checksum))
    }
}

impl FromStr for BlobLink {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = |why: &str| ModelError::MalformedLiteral(format!("blob literal `{s}`: {why}"));
        let rest = s.strip_prefix("blob:").ok_or_else(|| malformed("missing `blob:` prefix"))?;
        let (id, digest) = rest.split_once(':').ok_or_else(|| malformed("missing checksum"))?;
        if id.is_empty() || !id.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed("id is not a decimal number"));
        }
        let blob_id = id.parse().map_err(|_| malformed("id out of range"))?;
        if digest.len() != 64 {
            return Err(malformed("checksum must be 64 hex digits"));
        }
        let mut checksum = [0u8; 32];
        hex::decode_to_slice(digest, &mut checksum).map_err(|_| malformed("checksum is not hex"))?;
        Ok(BlobLink { blob_id, checksum })
    }
}

/// A stored blob: identity, SHA-256 digest and size in bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlobRef {
    pub blob_id: u64,
    pub checksum: [u8; 32],
    pub length: u64,
}

impl BlobRef {
    pub fn link(&self) -> BlobLink {
        BlobLink {
            blob_id: self.blob_id,
            checksum: self.checksum,
        }
    }

    pub fn checksum_hex(&self) -> String {
        hex::encode(self.checksum)
    }
}

/// A typed parameter value.
#[derive(Debug, Clone, PartialEq)]
pub enum ParameterValue {
    Int(i64),
    Float(f64),
    Bool(bool),
    String(String),
    BlobRef(BlobLink),
    IntArray(Vec<i64>),
    FloatArray(Vec<f64>),
    StringArray(Vec<String>),
}

impl ParameterValue {
    pub fn primitive_type(&self) -> PrimitiveType {
        match self {
            ParameterValue::Int(_) => PrimitiveType::Int,
            ParameterValue::Float(_) => PrimitiveType::Float,
            ParameterValue::Bool(_) => PrimitiveType::Bool,
            ParameterValue::String(_) => PrimitiveType::String,
            ParameterValue::BlobRef(_) => PrimitiveType::BlobRef,
            ParameterValue::IntArray(_) => PrimitiveType::IntArray,
            ParameterValue::FloatArray(_) => PrimitiveType::FloatArray,
            ParameterValue::StringArray(_) => PrimitiveType::StringArray,
        }
    }

    /// Whether every float payload is finite.
    pub fn is_finite(&self) -> bool {
        match self {
            ParameterValue::Float(x) => x.is_finite(),
            ParameterValue::FloatArray(xs) => xs.iter().all(|x| x.is_finite()),
            _ => true,
        }
    }

    /// Int→Float widening; returns `None` for any other conversion that
    /// would change the type.
    pub fn coerce_to(&self, target: PrimitiveType) -> Option<ParameterValue> {
        match (self, target) {
            (v, t) if v.primitive_type() == t => Some(v.clone()),
            (ParameterValue::Int(i), PrimitiveType::Float) => Some(ParameterValue::Float(*i as f64)),
            (ParameterValue::IntArray(xs), PrimitiveType::FloatArray) => {
                Some(ParameterValue::FloatArray(xs.iter().map(|&i| i as f64).collect()))
            }
            _ => None,
        }
    }

    /// Canonical literal text; the inverse of [`parse_primitive`].
    pub fn render(&self) -> String {
        self.to_string()
    }

    /// Parses a literal of a known type.
    pub fn parse(ty: PrimitiveType, literal: &str) -> Result<ParameterValue, ModelError> {
        match ty {
            PrimitiveType::Int => parse_int(literal).map(ParameterValue::Int),
            PrimitiveType::Float => parse_float(literal).map(ParameterValue::Float),
            PrimitiveType::Bool => match literal {
                "true" => Ok(ParameterValue::Bool(true)),
                "false" => Ok(ParameterValue::Bool(false)),
                other => Err(ModelError::MalformedLiteral(format!("`{other}` is not a bool"))),
            },
            PrimitiveType::String => Ok(ParameterValue::String(literal.to_string())),
            PrimitiveType::BlobRef => literal.parse().map(ParameterValue::BlobRef),
            PrimitiveType::IntArray => split_plain_array(literal)?
                .into_iter()
                .map(parse_int)
                .collect::<Result<_, _>>()
                .map(ParameterValue::IntArray),
            PrimitiveType::FloatArray => split_plain_array(literal)?
                .into_iter()
                .map(parse_float)
                .collect::<Result<_, _>>()
                .map(ParameterValue::FloatArray),
            PrimitiveType::StringArray => parse_string_array(literal).map(ParameterValue::StringArray),
        }
    }
}

impl fmt::Display for ParameterValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParameterValue::Int(i) => write!(f, "{i}"),
            ParameterValue::Float(x) => write_float(f, *x),
            ParameterValue::Bool(b) => write!(f, "{b}"),
            ParameterValue::String(s) => f.write_str(s),
            ParameterValue::BlobRef(link) => write!(f, "{link}"),
            ParameterValue::IntArray(xs) => write_array(f, xs, |f, i| write!(f, "{i}")),
            ParameterValue::FloatArray(xs) => write_array(f, xs, |f, x| write_float(f, *x)),
            ParameterValue::StringArray(xs) => write_array(f, xs, |f, s| write_quoted(f, s)),
        }
    }
}

/// Parses `literal` as a value of the type named by `type_tag`.
///
/// Array literals are `[v1,v2,...]`; string-array elements are double-quoted
/// with `\"` and `\\` escapes. Blob literals use the [`BlobLink`] form.
pub fn parse_primitive(type_tag: &str, literal: &str) -> Result<ParameterValue, ModelError> {
    let ty: PrimitiveType = type_tag.parse()?;
    if literal.is_empty() && !matches!(ty, PrimitiveType::String) {
        return Err(ModelError::MalformedLiteral(format!("empty literal for type {ty}")));
    }
    ParameterValue::parse(ty, literal)
}

// Debug formatting of f64 is the shortest representation that round-trips
// and always carries a `.` or exponent, so floats never render like ints.
fn write_float(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    write!(f, "{x:?}")
}

fn write_array<T>(
    f: &mut fmt::Formatter<'_>,
    items: &[T],
    mut each: impl FnMut(&mut fmt::Formatter<'_>, &T) -> fmt::Result,
) -> fmt::Result {
    f.write_str("[")?;
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        each(f, item)?;
    }
    f.write_str("]")
}

fn write_quoted(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

fn parse_int(s: &str) -> Result<i64, ModelError> {
    let s = s.trim();
    s.parse()
        .map_err(|_| ModelError::MalformedLiteral(format!("`{s}` is not a 64-bit integer")))
}

fn parse_float(s: &str) -> Result<f64, ModelError> {
    let s = s.trim();
    // Rust accepts "inf"/"nan" spellings; those fall through to the finiteness check.
    let x: f64 = s
        .parse()
        .map_err(|_| ModelError::MalformedLiteral(format!("`{s}` is not a number")))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ModelError::NonFiniteFloat)
    }
}

fn array_body(literal: &str) -> Result<&str, ModelError> {
    literal
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| ModelError::MalformedLiteral(format!("array literal `{literal}` must be bracketed")))
}

fn split_plain_array(literal: &str) -> Result<Vec<&str>, ModelError> {
    let body = array_body(literal)?;
    if body.trim().is_empty() {
        return Ok(Vec::new());
    }
    Ok(body.split(',').collect())
}

fn parse_string_array(literal: &str) -> Result<Vec<String>, ModelError> {
    let body = array_body(literal)?;
    let malformed = |why: &str| ModelError::MalformedLiteral(format!("string array `{literal}`: {why}"));
    let mut out = Vec::new();
    let mut chars = body.chars().peekable();
    loop {
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        match chars.next() {
            None if out.is_empty() => return Ok(out),
            None => return Err(malformed("trailing comma")),
            Some('"') => {}
            Some(_) => return Err(malformed("elements must be double-quoted")),
        }
        let mut item = String::new();
        loop {
            match chars.next() {
                None => return Err(malformed("unterminated string")),
                Some('"') => break,
                Some('\\') => match chars.next() {
                    Some(c @ ('"' | '\\')) => item.push(c),
                    _ => return Err(malformed("invalid escape")),
                },
                Some(c) => item.push(c),
            }
        }
        out.push(item);
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        match chars.next() {
            None => return Ok(out),
            Some(',') => continue,
            Some(_) => return Err(malformed("expected `,` between elements")),
        }
    }
}
