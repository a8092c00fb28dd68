//! Interval-of-validity folders.
//!
//! A folder maps `(tag, timestamp)` to an opaque payload string, normally
//! an externalized object address. Writes go to the mutable `HEAD` tag as
//! open-ended intervals; each new entry truncates the previous open one.
//! Other tags are immutable snapshots of `HEAD`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, ModelError, Result};
use crate::model::is_identifier;
use crate::store::records::{to_json, FolderPayload, IovStorePayload, OpCode, TagPayload};
use crate::store::{Prepared, State, Store};

pub const HEAD: &str = "HEAD";

/// Unit-agnostic event time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Timestamp(pub u64);

impl Timestamp {
    /// Open upper bound of an interval.
    pub const INFINITY: Timestamp = Timestamp(u64::MAX);

    pub fn is_infinite(self) -> bool {
        self == Timestamp::INFINITY
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("INFINITY")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Half-open validity range `[since, until)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IntervalOfValidity {
    pub since: Timestamp,
    pub until: Timestamp,
}

impl IntervalOfValidity {
    pub fn contains(&self, t: Timestamp) -> bool {
        self.since <= t && t < self.until
    }
}

impl fmt::Display for IntervalOfValidity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.since, self.until)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Folder {
    pub path: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IovEntry {
    pub folder: String,
    pub tag: String,
    pub interval: IntervalOfValidity,
    pub payload: String,
    pub inserted_seq: u64,
}

/// Folder paths are identifier segments joined by `/`, without a leading
/// slash.
pub fn validate_folder_path(path: &str) -> Result<()> {
    if !path.is_empty() && path.split('/').all(is_identifier) {
        Ok(())
    } else {
        Err(Error::MalformedPath(path.to_string()))
    }
}

fn validate_tag_name(tag: &str) -> Result<()> {
    let ok = !tag.is_empty()
        && tag
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.'));
    if ok {
        Ok(())
    } else {
        Err(ModelError::InvalidIdentifier(tag.to_string()).into())
    }
}

#[derive(Debug, Clone)]
pub(crate) struct StoredInterval {
    pub since: u64,
    pub until: u64,
    pub payload: String,
    pub inserted_seq: u64,
}

#[derive(Debug, Clone)]
pub(crate) struct FolderState {
    pub description: String,
    pub tags: BTreeMap<String, Vec<StoredInterval>>,
}

impl FolderState {
    pub fn new(description: String) -> Self {
        let mut tags = BTreeMap::new();
        tags.insert(HEAD.to_string(), Vec::new());
        FolderState { description, tags }
    }

    pub fn head(&self) -> &[StoredInterval] {
        &self.tags[HEAD]
    }

    pub fn check_store(&self, since: u64) -> Result<()> {
        if since == u64::MAX {
            return Err(Error::NonMonotonicSince {
                since,
                head_since: u64::MAX,
            });
        }
        match self.head().last() {
            Some(open) if since <= open.since => Err(Error::NonMonotonicSince {
                since,
                head_since: open.since,
            }),
            _ => Ok(()),
        }
    }

    pub fn store(&mut self, since: u64, payload: String, seq: u64) {
        let head = self.tags.get_mut(HEAD).expect("HEAD always exists");
        if let Some(open) = head.last_mut() {
            open.until = since;
        }
        head.push(StoredInterval {
            since,
            until: u64::MAX,
            payload,
            inserted_seq: seq,
        });
    }

    pub fn resolve(&self, tag: &str, t: u64) -> Option<&StoredInterval> {
        let entries = self.tags.get(tag)?;
        let idx = entries.partition_point(|e| e.since <= t);
        entries[..idx].last().filter(|e| t < e.until)
    }
}

pub(crate) fn prepare_create_folder(state: &State, path: &str, description: &str) -> Result<Prepared<Folder>> {
    validate_folder_path(path)?;
    if state.folders.contains_key(path) {
        return Err(Error::DuplicateFolder(path.to_string()));
    }
    Ok(Prepared::change(
        OpCode::CreateFolder,
        to_json(&FolderPayload {
            path: path.to_string(),
            description: description.to_string(),
        }),
        Folder {
            path: path.to_string(),
            description: description.to_string(),
        },
    ))
}

pub(crate) fn prepare_iov_store(state: &State, folder: &str, since: Timestamp, payload: &str) -> Result<Prepared<IovEntry>> {
    let fs = state.folder(folder)?;
    fs.check_store(since.0)?;
    let entry = IovEntry {
        folder: folder.to_string(),
        tag: HEAD.to_string(),
        interval: IntervalOfValidity {
            since,
            until: Timestamp::INFINITY,
        },
        payload: payload.to_string(),
        inserted_seq: state.seq + 1,
    };
    Ok(Prepared::change(
        OpCode::IovStore,
        to_json(&IovStorePayload {
            folder: folder.to_string(),
            since: since.0,
            payload: payload.to_string(),
        }),
        entry,
    ))
}

pub(crate) fn prepare_tag_head(state: &State, folder: &str, tag: &str) -> Result<Prepared<usize>> {
    let fs = state.folder(folder)?;
    if tag == HEAD {
        return Err(Error::ReservedTagName(tag.to_string()));
    }
    validate_tag_name(tag)?;
    if fs.tags.contains_key(tag) {
        return Err(Error::DuplicateTag(tag.to_string()));
    }
    let count = fs.head().len();
    if count == 0 {
        return Err(Error::EmptyHead(folder.to_string()));
    }
    Ok(Prepared::change(
        OpCode::TagHead,
        to_json(&TagPayload {
            folder: folder.to_string(),
            tag: tag.to_string(),
        }),
        count,
    ))
}

fn entry_of(folder: &str, tag: &str, e: &StoredInterval) -> IovEntry {
    IovEntry {
        folder: folder.to_string(),
        tag: tag.to_string(),
        interval: IntervalOfValidity {
            since: Timestamp(e.since),
            until: Timestamp(e.until),
        },
        payload: e.payload.clone(),
        inserted_seq: e.inserted_seq,
    }
}

impl Store {
    /// Creates a folder with an empty `HEAD` tag.
    pub fn create_folder(&self, path: &str, description: &str) -> Result<Folder> {
        self.write_one(|state| prepare_create_folder(state, path, description))
    }

    /// Appends an open-ended `[since, INFINITY)` entry to `HEAD`, closing
    /// the previous open entry at `since`.
    pub fn iov_store(&self, folder: &str, since: Timestamp, payload: &str) -> Result<IovEntry> {
        self.write_one(|state| prepare_iov_store(state, folder, since, payload))
    }

    /// Snapshots the current `HEAD` entries under `tag`.
    pub fn tag_head(&self, folder: &str, tag: &str) -> Result<usize> {
        self.write_one(|state| prepare_tag_head(state, folder, tag))
    }

    /// Full entry (interval and payload) valid at `t`.
    pub fn iov_resolve_entry(&self, folder: &str, tag: &str, t: Timestamp) -> Result<IovEntry> {
        self.read(|state| {
            let fs = state.folder(folder)?;
            if !fs.tags.contains_key(tag) {
                return Err(Error::UnknownTag(tag.to_string()));
            }
            fs.resolve(tag, t.0)
                .map(|e| entry_of(folder, tag, e))
                .ok_or(Error::NoValidEntry(t.0))
        })
    }

    /// Payload of the entry in `(folder, tag)` whose interval contains `t`.
    pub fn iov_resolve(&self, folder: &str, tag: &str, t: Timestamp) -> Result<String> {
        self.iov_resolve_entry(folder, tag, t).map(|e| e.payload)
    }

    /// Entries of `(folder, tag)` ordered by `since`.
    pub fn iov_list(&self, folder: &str, tag: &str) -> Result<Vec<IovEntry>> {
        self.read(|state| {
            let fs = state.folder(folder)?;
            let entries = fs.tags.get(tag).ok_or_else(|| Error::UnknownTag(tag.to_string()))?;
            Ok(entries.iter().map(|e| entry_of(folder, tag, e)).collect())
        })
    }

    pub fn folders(&self) -> Vec<Folder> {
        self.read(|state| {
            state
                .folders
                .iter()
                .map(|(path, fs)| Folder {
                    path: path.clone(),
                    description: fs.description.clone(),
                })
                .collect()
        })
    }

    pub fn folder_exists(&self, path: &str) -> bool {
        self.read(|state| state.folders.contains_key(path))
    }

    pub fn tags(&self, folder: &str) -> Result<Vec<String>> {
        self.read(|state| Ok(state.folder(folder)?.tags.keys().cloned().collect()))
    }
}
