use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::is_identifier;
use crate::store::ObjectRef;

pub const SCHEME: &str = "nova://";

/// Locator of one stored object revision, viewed under `dict_version`.
///
/// String form: `nova://<class>/<instance>?v=<object_version>&d=<dict_version>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpaqueAddress {
    pub class_name: String,
    pub instance_name: String,
    pub object_version: u32,
    pub dict_version: u32,
}

impl OpaqueAddress {
    pub fn new(
        class_name: impl Into<String>,
        instance_name: impl Into<String>,
        object_version: u32,
        dict_version: u32,
    ) -> Result<Self> {
        let addr = OpaqueAddress {
            class_name: class_name.into(),
            instance_name: instance_name.into(),
            object_version,
            dict_version,
        };
        if !is_identifier(&addr.class_name) || !is_identifier(&addr.instance_name) {
            return Err(Error::MalformedAddress("class and instance must be identifiers".into()));
        }
        if object_version == 0 || dict_version == 0 {
            return Err(Error::MalformedAddress("versions must be >= 1".into()));
        }
        Ok(addr)
    }
}

impl From<&ObjectRef> for OpaqueAddress {
    fn from(r: &ObjectRef) -> Self {
        OpaqueAddress {
            class_name: r.class_name.clone(),
            instance_name: r.instance_name.clone(),
            object_version: r.object_version,
            dict_version: r.dict_version,
        }
    }
}

impl From<ObjectRef> for OpaqueAddress {
    fn from(r: ObjectRef) -> Self {
        OpaqueAddress::from(&r)
    }
}

impl fmt::Display for OpaqueAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{SCHEME}{}/{}?v={}&d={}",
            self.class_name, self.instance_name, self.object_version, self.dict_version
        )
    }
}

impl FromStr for OpaqueAddress {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        internalize(s)
    }
}

/// Renders an address as its unique string form.
pub fn externalize(addr: &OpaqueAddress) -> String {
    addr.to_string()
}

/// Parses the string form back into an address. Only strings produced by
/// [`externalize`] are accepted; anything else is `MalformedAddress`.
pub fn internalize(s: &str) -> Result<OpaqueAddress> {
    let malformed = |why: &str| Error::MalformedAddress(format!("{why}: `{}`", s.escape_debug()));
    let rest = s.strip_prefix(SCHEME).ok_or_else(|| malformed("expected nova:// scheme"))?;
    let (path, query) = rest.split_once('?').ok_or_else(|| malformed("missing query"))?;
    let (class_name, instance_name) = path.split_once('/').ok_or_else(|| malformed("missing instance"))?;
    if !is_identifier(class_name) {
        return Err(malformed("class is not an identifier"));
    }
    if !is_identifier(instance_name) {
        return Err(malformed("instance is not an identifier"));
    }
    let (v, d) = query.split_once('&').ok_or_else(|| malformed("missing d="))?;
    let object_version = parse_version(v.strip_prefix("v=").ok_or_else(|| malformed("missing v="))?)
        .ok_or_else(|| malformed("bad object version"))?;
    let dict_version = parse_version(d.strip_prefix("d=").ok_or_else(|| malformed("missing d="))?)
        .ok_or_else(|| malformed("bad dictionary version"))?;
    Ok(OpaqueAddress {
        class_name: class_name.to_string(),
        instance_name: instance_name.to_string(),
        object_version,
        dict_version,
    })
}

/// Positive decimal without sign or leading zeros.
fn parse_version(text: &str) -> Option<u32> {
    let bytes = text.as_bytes();
    if bytes.is_empty() || bytes[0] == b'0' || !bytes.iter().all(u8::is_ascii_digit) {
        return None;
    }
    text.parse().ok()
}
