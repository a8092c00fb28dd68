use std::fmt;
use std::str::FromStr;

use crate::error::ModelError;

use super::is_identifier;

/// Hierarchical container path of a collection, e.g. `/ATLAS/Muon`.
///
/// Parsing is lenient about the leading slash and empty segments; the
/// rendered form is canonical (`/` for the root, no trailing slash).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScopePath {
    segments: Vec<String>,
}

impl ScopePath {
    pub fn root() -> Self {
        ScopePath::default()
    }

    pub fn from_segments<I, S>(segments: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let segments: Vec<String> = segments.into_iter().map(Into::into).collect();
        if let Some(bad) = segments.iter().find(|s| !is_identifier(s)) {
            return Err(ModelError::InvalidScope(bad.clone()));
        }
        Ok(ScopePath { segments })
    }

    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let segments: Vec<&str> = text.split('/').filter(|s| !s.is_empty()).collect();
        if segments.iter().any(|s| !is_identifier(s)) {
            return Err(ModelError::InvalidScope(text.to_string()));
        }
        ScopePath::from_segments(segments)
    }

    pub fn segments(&self) -> &[String] {
        &self.segments
    }

    pub fn is_root(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn parent(&self) -> Option<ScopePath> {
        if self.is_root() {
            return None;
        }
        Some(ScopePath {
            segments: self.segments[..self.segments.len() - 1].to_vec(),
        })
    }

    pub fn child(&self, segment: &str) -> Result<ScopePath, ModelError> {
        if !is_identifier(segment) {
            return Err(ModelError::InvalidScope(segment.to_string()));
        }
        let mut segments = self.segments.clone();
        segments.push(segment.to_string());
        Ok(ScopePath { segments })
    }

    /// True if `self` equals `other` or lies beneath it.
    pub fn starts_with(&self, other: &ScopePath) -> bool {
        self.segments.starts_with(&other.segments)
    }

    /// The direct child of `ancestor` on the way to `self`, if `self` is a
    /// strict descendant.
    pub fn child_toward(&self, ancestor: &ScopePath) -> Option<ScopePath> {
        if self.segments.len() > ancestor.segments.len() && self.starts_with(ancestor) {
            Some(ScopePath {
                segments: self.segments[..=ancestor.segments.len()].to_vec(),
            })
        } else {
            None
        }
    }
}

impl fmt::Display for ScopePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.segments.is_empty() {
            return f.write_str("/");
        }
        for s in &self.segments {
            write!(f, "/{s}")?;
        }
        Ok(())
    }
}

impl FromStr for ScopePath {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScopePath::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn canonical_forms() {
        assert_eq!(ScopePath::parse("/").unwrap().to_string(), "/");
        assert_eq!(ScopePath::parse("").unwrap().to_string(), "/");
        assert_eq!(ScopePath::parse("ATLAS//Muon/").unwrap().to_string(), "/ATLAS/Muon");
        assert!(ScopePath::parse("/ATLAS/9x").is_err());
        assert!(ScopePath::parse("/a b").is_err());
    }

    #[test]
    fn ancestry() {
        let p = ScopePath::parse("/A/B/C").unwrap();
        let root = ScopePath::root();
        assert_eq!(p.child_toward(&root).unwrap().to_string(), "/A");
        assert_eq!(p.child_toward(&p), None);
        assert_eq!(p.parent().unwrap().to_string(), "/A/B");
        assert!(p.starts_with(&root));
    }

    proptest! {
        #[test]
        fn canonicalization_is_idempotent(raw in "[/]{0,2}([A-Za-z_][A-Za-z0-9_]{0,5}[/]{1,2}){0,4}[/]?") {
            let once = ScopePath::parse(&raw).unwrap().to_string();
            let twice = ScopePath::parse(&once).unwrap().to_string();
            prop_assert_eq!(once, twice);
        }
    }
}
