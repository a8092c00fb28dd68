//! Versioned object store.
//!
//! A store is a directory holding a `MANIFEST`, a `LOCK` file and an
//! append-only `changes.log`. The log is the only durable representation:
//! opening a store replays it into the in-memory relations (dictionaries,
//! object revisions, blobs, IOV folders). Blob bytes are read back from the
//! log on demand and verified against their SHA-256 digest on every read.

pub(crate) mod manifest;
pub(crate) mod records;
mod state;

use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, ErrorKind, Read, Write};
use std::os::unix::fs::FileExt;
use std::path::{Path, PathBuf};
use std::sync::{RwLock, RwLockReadGuard};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evolution::diff_dictionaries;
use crate::iov::{prepare_create_folder, prepare_iov_store, prepare_tag_head, Folder, IovEntry, Timestamp};
use crate::model::{
    validate_identifier, validate_values, widen_values, BlobRef, CollectionInstance, DataDictionary,
    DictionaryDraft, ParameterValue, ScopePath,
};

pub use manifest::{StoreId, FORMAT_VERSION};
pub use records::{ChangeRecord, OpCode};

use manifest::{Manifest, Role};
use records::{encode_blob, field_rows, parse_header, to_json, DictionaryPayload, ObjectPayload, BLOB_HEADER_LEN, FRAME_HEADER_LEN};
pub(crate) use state::State;

const LOG_FILE: &str = "changes.log";
const LOCK_FILE: &str = "LOCK";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoreMode {
    ReadWrite,
    ReadOnly,
    Replica,
}

/// Locator of one stored object revision.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectRef {
    pub class_name: String,
    pub instance_name: String,
    pub object_version: u32,
    pub dict_version: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InstanceKey {
    pub class_name: String,
    pub instance_name: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScopeListing {
    pub children: Vec<ScopePath>,
    pub instances: Vec<InstanceKey>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevisionInfo {
    pub object_version: u32,
    pub dict_version: u32,
    pub scope: ScopePath,
    pub created_seq: u64,
}

/// Outcome of a validated mutation: the record to commit (none for
/// idempotent no-ops) and the caller-facing result.
pub(crate) struct Prepared<T> {
    change: Option<(OpCode, Vec<u8>)>,
    value: T,
}

impl<T> Prepared<T> {
    pub fn change(op: OpCode, payload: Vec<u8>, value: T) -> Self {
        Prepared {
            change: Some((op, payload)),
            value,
        }
    }

    pub fn unchanged(value: T) -> Self {
        Prepared { change: None, value }
    }
}

struct Inner {
    state: State,
    manifest: Manifest,
    log: Option<File>,
    log_len: u64,
    reader: File,
}

pub struct Store {
    root: PathBuf,
    mode: StoreMode,
    inner: RwLock<Inner>,
    _lock: Option<File>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store")
            .field("root", &self.root)
            .field("mode", &self.mode)
            .field("seq", &self.current_seq())
            .finish()
    }
}

impl Store {
    /// Creates a new master store at `root` (which must not exist or be an
    /// empty directory) and opens it read-write.
    pub fn create(root: impl AsRef<Path>) -> Result<Store> {
        Self::create_with_role(root.as_ref(), Role::Master, None)
    }

    /// Creates a replica store. When `master` is `None` the replica binds to
    /// the source of the first changeset it applies.
    pub fn create_replica(root: impl AsRef<Path>, master: Option<StoreId>) -> Result<Store> {
        Self::create_with_role(root.as_ref(), Role::Replica, master)
    }

    fn create_with_role(root: &Path, role: Role, master_id: Option<StoreId>) -> Result<Store> {
        if root.exists() && fs::read_dir(root)?.next().is_some() {
            return Err(Error::Io(std::io::Error::new(
                ErrorKind::AlreadyExists,
                format!("{} is not empty", root.display()),
            )));
        }
        fs::create_dir_all(root)?;
        File::create(root.join(LOG_FILE))?;
        let manifest = Manifest {
            seq: 0,
            store_id: rand::random(),
            role,
            master_id,
        };
        manifest.save(root)?;
        Store::open(root)
    }

    /// Opens an existing store for writing (master) or replication
    /// (replica). Only one such handle may exist per store.
    pub fn open(root: impl AsRef<Path>) -> Result<Store> {
        let root = root.as_ref();
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(root.join(LOCK_FILE))?;
        match lock.try_lock() {
            Ok(()) => {}
            Err(fs::TryLockError::WouldBlock) => return Err(Error::StoreLocked),
            Err(fs::TryLockError::Error(e)) => return Err(e.into()),
        }
        let manifest = Manifest::load(root)?;
        let mode = match manifest.role {
            Role::Master => StoreMode::ReadWrite,
            Role::Replica => StoreMode::Replica,
        };
        Self::load(root, mode, manifest, Some(lock))
    }

    /// Opens a snapshot of the store as it is on disk now. No lock is taken
    /// and every mutation fails with `ReadOnlyStore`.
    pub fn open_read_only(root: impl AsRef<Path>) -> Result<Store> {
        let root = root.as_ref();
        let manifest = Manifest::load(root)?;
        Self::load(root, StoreMode::ReadOnly, manifest, None)
    }

    fn load(root: &Path, mode: StoreMode, mut manifest: Manifest, lock: Option<File>) -> Result<Store> {
        let log_path = root.join(LOG_FILE);
        let (state, good_len, file_len) = replay_log(&log_path)?;
        if state.seq < manifest.seq {
            return Err(Error::Corrupt(format!(
                "log holds {} records but MANIFEST records seq {}",
                state.seq, manifest.seq
            )));
        }
        let writable = mode != StoreMode::ReadOnly;
        let log = if writable {
            let f = OpenOptions::new().append(true).open(&log_path)?;
            if good_len < file_len {
                // Torn tail from an interrupted append.
                f.set_len(good_len)?;
            }
            if state.seq != manifest.seq {
                manifest.seq = state.seq;
                manifest.save(root)?;
            }
            Some(f)
        } else {
            None
        };
        let reader = File::open(&log_path)?;
        Ok(Store {
            root: root.to_path_buf(),
            mode,
            inner: RwLock::new(Inner {
                state,
                manifest,
                log,
                log_len: good_len,
                reader,
            }),
            _lock: lock,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn mode(&self) -> StoreMode {
        self.mode
    }

    pub fn store_id(&self) -> StoreId {
        self.lock_read().manifest.store_id
    }

    pub fn master_id(&self) -> Option<StoreId> {
        self.lock_read().manifest.master_id
    }

    /// Number of committed mutations.
    pub fn current_seq(&self) -> u64 {
        self.lock_read().state.seq
    }

    fn lock_read(&self) -> RwLockReadGuard<'_, Inner> {
        self.inner.read().expect("store lock poisoned")
    }

    pub(crate) fn read<T>(&self, f: impl FnOnce(&State) -> T) -> T {
        f(&self.lock_read().state)
    }

    fn ensure_writable(&self) -> Result<()> {
        match self.mode {
            StoreMode::ReadWrite => Ok(()),
            _ => Err(Error::ReadOnlyStore),
        }
    }

    /// Runs one validated mutation and commits its record, if any.
    pub(crate) fn write_one<T>(&self, prepare: impl FnOnce(&State) -> Result<Prepared<T>>) -> Result<T> {
        self.ensure_writable()?;
        let mut inner = self.inner.write().expect("store lock poisoned");
        let prepared = prepare(&inner.state)?;
        let Some((op, payload)) = prepared.change else {
            return Ok(prepared.value);
        };
        let record = ChangeRecord {
            seq: inner.state.seq + 1,
            op,
            payload,
        };
        let offset = inner.log_len;
        inner.state.apply(&record, offset, None)?;
        let mut frame = Vec::with_capacity(record.frame_len());
        record.write_frame(&mut frame);
        if let Err(e) = inner.append(&self.root, &frame) {
            // The in-memory image is ahead of the log; rebuild it.
            if let Ok((state, _, _)) = replay_log(&self.root.join(LOG_FILE)) {
                inner.state = state;
            }
            return Err(e);
        }
        Ok(prepared.value)
    }

    /// Runs several mutations atomically: either all records are committed
    /// or none are.
    pub fn transaction<T>(&self, f: impl FnOnce(&mut Transaction) -> Result<T>) -> Result<T> {
        self.ensure_writable()?;
        let mut inner = self.inner.write().expect("store lock poisoned");
        let mut tx = Transaction {
            state: inner.state.clone(),
            frames: Vec::new(),
            base_len: inner.log_len,
        };
        let value = f(&mut tx)?;
        if tx.state.seq != inner.state.seq {
            inner.append(&self.root, &tx.frames)?;
            inner.state = tx.state;
        }
        Ok(value)
    }

    /// Registers a class schema. Re-registering the latest field list is a
    /// no-op; any other change commits the next dictionary version.
    pub fn register_class(&self, draft: &DictionaryDraft) -> Result<(String, u32)> {
        self.write_one(|state| prepare_register_class(state, draft))
    }

    /// Stores a new revision of `(class, instance)` under the latest
    /// dictionary version.
    pub fn put_object(
        &self,
        class_name: &str,
        instance_name: &str,
        scope: &ScopePath,
        values: &[ParameterValue],
    ) -> Result<ObjectRef> {
        self.write_one(|state| prepare_put_object(state, class_name, instance_name, scope, values))
    }

    /// Stores bytes content-addressed by SHA-256; identical content returns
    /// the existing reference without a new record.
    pub fn put_blob(&self, bytes: &[u8]) -> Result<BlobRef> {
        self.write_one(|state| Ok(prepare_put_blob(state, bytes)))
    }

    pub fn get_object(&self, class_name: &str, instance_name: &str, object_version: Option<u32>) -> Result<CollectionInstance> {
        self.read(|state| {
            let not_found = || {
                Error::NotFound(match object_version {
                    Some(v) => format!("{class_name}/{instance_name} v{v}"),
                    None => format!("{class_name}/{instance_name}"),
                })
            };
            let revisions = state.revisions(class_name, instance_name).ok_or_else(not_found)?;
            let rev = match object_version {
                None => revisions.last(),
                Some(v) => (v as usize).checked_sub(1).and_then(|i| revisions.get(i)),
            }
            .ok_or_else(not_found)?;
            Ok(CollectionInstance {
                class_name: class_name.to_string(),
                instance_name: instance_name.to_string(),
                scope: rev.scope.clone(),
                dict_version: rev.dict_version,
                object_version: rev.object_version,
                values: rev.values.clone(),
            })
        })
    }

    pub fn object_versions(&self, class_name: &str, instance_name: &str) -> Result<Vec<RevisionInfo>> {
        self.read(|state| {
            let revisions = state
                .revisions(class_name, instance_name)
                .ok_or_else(|| Error::NotFound(format!("{class_name}/{instance_name}")))?;
            Ok(revisions
                .iter()
                .map(|r| RevisionInfo {
                    object_version: r.object_version,
                    dict_version: r.dict_version,
                    scope: r.scope.clone(),
                    created_seq: r.created_seq,
                })
                .collect())
        })
    }

    /// Every `(class, instance)` pair, ordered.
    pub fn instances(&self) -> Vec<InstanceKey> {
        self.read(|state| {
            state
                .objects
                .keys()
                .map(|(c, i)| InstanceKey {
                    class_name: c.clone(),
                    instance_name: i.clone(),
                })
                .collect()
        })
    }

    /// Registered classes with their latest dictionary version.
    pub fn classes(&self) -> Vec<(String, u32)> {
        self.read(|state| {
            state
                .dictionaries
                .iter()
                .map(|(c, v)| (c.clone(), v.len() as u32))
                .collect()
        })
    }

    /// Dictionary of `class_name` at `dict_version`, or the latest one.
    pub fn get_dictionary(&self, class_name: &str, dict_version: Option<u32>) -> Result<DataDictionary> {
        self.read(|state| {
            if !state.dictionaries.contains_key(class_name) {
                return Err(Error::UnknownClass(class_name.to_string()));
            }
            match dict_version {
                None => state.latest_dictionary(class_name),
                Some(v) => state.dictionary(class_name, v),
            }
            .cloned()
            .ok_or_else(|| Error::NotFound(format!("dictionary {class_name} v{}", dict_version.unwrap_or(0))))
        })
    }

    /// Child scopes (sorted by canonical text) and instances (sorted by
    /// class, then instance) located directly at `scope`.
    pub fn list_scope(&self, scope: &ScopePath) -> ScopeListing {
        self.read(|state| {
            let (children, instances) = state.list_scope(scope);
            ScopeListing {
                children,
                instances: instances
                    .into_iter()
                    .map(|(class_name, instance_name)| InstanceKey {
                        class_name,
                        instance_name,
                    })
                    .collect(),
            }
        })
    }

    pub fn blob_ref(&self, blob_id: u64) -> Result<BlobRef> {
        self.read(|state| {
            state
                .blob(blob_id)
                .map(|b| b.reference)
                .ok_or_else(|| Error::NotFound(format!("blob {blob_id}")))
        })
    }

    pub fn blob_count(&self) -> u64 {
        self.read(|state| state.blobs.len() as u64)
    }

    /// Reads a blob, verifying its digest.
    pub fn get_blob(&self, reference: &BlobRef) -> Result<Vec<u8>> {
        let inner = self.lock_read();
        let entry = inner
            .state
            .blob(reference.blob_id)
            .filter(|b| b.reference.checksum == reference.checksum)
            .copied()
            .ok_or_else(|| Error::NotFound(format!("blob {}", reference.blob_id)))?;
        let mut bytes = vec![0u8; entry.reference.length as usize];
        inner.reader.read_exact_at(&mut bytes, entry.offset)?;
        let digest: [u8; 32] = Sha256::digest(&bytes).into();
        if digest != entry.reference.checksum {
            return Err(Error::BlobChecksumMismatch(entry.reference.blob_id));
        }
        Ok(bytes)
    }

    /// Committed records with `from_seq < seq <= to_seq`, read back from
    /// the log.
    pub fn change_records(&self, from_seq: u64, to_seq: u64) -> Result<Vec<ChangeRecord>> {
        let inner = self.lock_read();
        read_records(&inner, from_seq, to_seq)
    }

    /// Store id, current seq and records after `since`, taken from one
    /// consistent snapshot.
    pub(crate) fn snapshot_changes(&self, since: u64) -> Result<(StoreId, u64, Vec<ChangeRecord>)> {
        let inner = self.lock_read();
        let current = inner.state.seq;
        if since > current {
            return Err(Error::FutureSequence {
                requested: since,
                current,
            });
        }
        let records = read_records(&inner, since, current)?;
        Ok((inner.manifest.store_id, current, records))
    }

    /// Replays replicated records. Only valid on replica stores.
    pub(crate) fn apply_replicated(&self, source: StoreId, from_seq: u64, records: &[ChangeRecord]) -> Result<u64> {
        if self.mode != StoreMode::Replica {
            return Err(Error::LocalMutationConflict);
        }
        let mut inner = self.inner.write().expect("store lock poisoned");
        match inner.manifest.master_id {
            Some(master) if master != source => return Err(Error::WrongMaster),
            None if inner.state.seq != 0 => return Err(Error::LocalMutationConflict),
            _ => {}
        }
        if from_seq != inner.state.seq {
            return Err(Error::NonContiguous {
                expected: inner.state.seq,
                got: from_seq,
            });
        }
        if records.is_empty() {
            return Ok(inner.state.seq);
        }
        let mut state = inner.state.clone();
        let mut frames = Vec::new();
        for record in records {
            let offset = inner.log_len + frames.len() as u64;
            let bytes = (record.op == OpCode::PutBlob).then(|| record.payload.get(BLOB_HEADER_LEN..).unwrap_or_default());
            state.apply(record, offset, bytes)?;
            record.write_frame(&mut frames);
        }
        if inner.manifest.master_id.is_none() {
            inner.manifest.master_id = Some(source);
        }
        inner.append(&self.root, &frames)?;
        inner.state = state;
        Ok(inner.state.seq)
    }
}

impl Inner {
    fn append(&mut self, root: &Path, frames: &[u8]) -> Result<()> {
        let log = self.log.as_mut().ok_or(Error::ReadOnlyStore)?;
        if let Err(e) = log.write_all(frames).and_then(|()| log.sync_data()) {
            let _ = log.set_len(self.log_len);
            return Err(e.into());
        }
        self.log_len += frames.len() as u64;
        self.manifest.seq = self.state.seq;
        self.manifest.save(root)
    }
}

fn read_records(inner: &Inner, from_seq: u64, to_seq: u64) -> Result<Vec<ChangeRecord>> {
    let offsets = &inner.state.record_offsets;
    let mut out = Vec::with_capacity(to_seq.saturating_sub(from_seq) as usize);
    for seq in from_seq + 1..=to_seq {
        let offset = *offsets
            .get(seq as usize - 1)
            .ok_or_else(|| Error::NotFound(format!("record {seq}")))?;
        let mut header = [0u8; FRAME_HEADER_LEN];
        inner.reader.read_exact_at(&mut header, offset)?;
        let (rec_seq, op, len) = parse_header(&header)?;
        if rec_seq != seq {
            return Err(Error::Corrupt(format!("record at offset {offset} has seq {rec_seq}, expected {seq}")));
        }
        let mut payload = vec![0u8; len as usize];
        inner.reader.read_exact_at(&mut payload, offset + FRAME_HEADER_LEN as u64)?;
        out.push(ChangeRecord { seq, op, payload });
    }
    Ok(out)
}

/// Rebuilds the relations from the log. Returns the state, the length of
/// the well-formed prefix and the file length.
fn replay_log(path: &Path) -> Result<(State, u64, u64)> {
    let file = File::open(path)?;
    let file_len = file.metadata()?.len();
    let mut reader = BufReader::new(file);
    let mut state = State::default();
    let mut offset = 0u64;
    loop {
        let mut header = [0u8; FRAME_HEADER_LEN];
        if !read_full(&mut reader, &mut header)? {
            break;
        }
        let (seq, op, len) = parse_header(&header)?;
        let len = len as u64;
        if offset + FRAME_HEADER_LEN as u64 + len > file_len {
            break;
        }
        let payload = if op == OpCode::PutBlob {
            // Blob bytes stay on disk; only the header is needed.
            let mut head = vec![0u8; BLOB_HEADER_LEN.min(len as usize)];
            reader.read_exact(&mut head)?;
            reader.seek_relative((len - head.len() as u64) as i64)?;
            head
        } else {
            let mut payload = vec![0u8; len as usize];
            reader.read_exact(&mut payload)?;
            payload
        };
        state.apply(&ChangeRecord { seq, op, payload }, offset, None)?;
        offset += FRAME_HEADER_LEN as u64 + len;
    }
    Ok((state, offset, file_len))
}

/// Fills `buf` completely; `Ok(false)` on EOF before the first byte or a
/// partial read at end of file.
fn read_full(reader: &mut impl Read, buf: &mut [u8]) -> Result<bool> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => return Ok(false),
            Ok(n) => filled += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(true)
}

pub(crate) fn prepare_register_class(state: &State, draft: &DictionaryDraft) -> Result<Prepared<(String, u32)>> {
    draft.check()?;
    let latest = state.latest_dictionary(&draft.class_name);
    if let Some(latest) = latest {
        if to_json(&field_rows(&latest.fields)) == to_json(&field_rows(&draft.fields)) {
            return Ok(Prepared::unchanged((draft.class_name.clone(), latest.dict_version)));
        }
    }
    let version = latest.map_or(1, |d| d.dict_version + 1);
    let dict = draft.clone().with_version(version);
    if let Some(latest) = latest {
        diff_dictionaries(latest, &dict)?;
    }
    Ok(Prepared::change(
        OpCode::PutDictionary,
        to_json(&DictionaryPayload::from_dictionary(&dict)),
        (dict.class_name, version),
    ))
}

pub(crate) fn prepare_put_object(
    state: &State,
    class_name: &str,
    instance_name: &str,
    scope: &ScopePath,
    values: &[ParameterValue],
) -> Result<Prepared<ObjectRef>> {
    let dict = state
        .latest_dictionary(class_name)
        .ok_or_else(|| Error::UnknownClass(class_name.to_string()))?;
    validate_identifier(instance_name)?;
    let report = validate_values(class_name, values, dict);
    if !report.is_clean() {
        return Err(Error::ValidationFailed(report));
    }
    let values = widen_values(values, dict);
    for v in &values {
        if let ParameterValue::BlobRef(link) = v {
            state.check_blob_link(link.blob_id, &link.checksum)?;
        }
    }
    let object_version = state.revisions(class_name, instance_name).map_or(0, |r| r.len() as u32) + 1;
    let payload = ObjectPayload {
        class: class_name.to_string(),
        instance: instance_name.to_string(),
        object_version,
        dict_version: dict.dict_version,
        scope: scope.to_string(),
        values: values.iter().map(ParameterValue::render).collect(),
    };
    Ok(Prepared::change(
        OpCode::PutObject,
        to_json(&payload),
        ObjectRef {
            class_name: class_name.to_string(),
            instance_name: instance_name.to_string(),
            object_version,
            dict_version: dict.dict_version,
        },
    ))
}

pub(crate) fn prepare_put_blob(state: &State, bytes: &[u8]) -> Prepared<BlobRef> {
    let checksum: [u8; 32] = Sha256::digest(bytes).into();
    if let Some(&id) = state.blob_by_checksum.get(&checksum) {
        return Prepared::unchanged(state.blob(id).expect("indexed blob").reference);
    }
    let reference = BlobRef {
        blob_id: state.blobs.len() as u64 + 1,
        checksum,
        length: bytes.len() as u64,
    };
    Prepared::change(OpCode::PutBlob, encode_blob(&reference, bytes), reference)
}

/// A batch of mutations applied to a private copy of the store state and
/// committed together by [`Store::transaction`].
pub struct Transaction {
    state: State,
    frames: Vec<u8>,
    base_len: u64,
}

impl Transaction {
    fn run<T>(&mut self, prepared: Prepared<T>) -> Result<T> {
        if let Some((op, payload)) = prepared.change {
            let record = ChangeRecord {
                seq: self.state.seq + 1,
                op,
                payload,
            };
            let offset = self.base_len + self.frames.len() as u64;
            self.state.apply(&record, offset, None)?;
            record.write_frame(&mut self.frames);
        }
        Ok(prepared.value)
    }

    pub fn register_class(&mut self, draft: &DictionaryDraft) -> Result<(String, u32)> {
        let prepared = prepare_register_class(&self.state, draft)?;
        self.run(prepared)
    }

    pub fn put_object(
        &mut self,
        class_name: &str,
        instance_name: &str,
        scope: &ScopePath,
        values: &[ParameterValue],
    ) -> Result<ObjectRef> {
        let prepared = prepare_put_object(&self.state, class_name, instance_name, scope, values)?;
        self.run(prepared)
    }

    pub fn put_blob(&mut self, bytes: &[u8]) -> Result<BlobRef> {
        let prepared = prepare_put_blob(&self.state, bytes);
        self.run(prepared)
    }

    pub fn create_folder(&mut self, path: &str, description: &str) -> Result<Folder> {
        let prepared = prepare_create_folder(&self.state, path, description)?;
        self.run(prepared)
    }

    pub fn iov_store(&mut self, folder: &str, since: Timestamp, payload: &str) -> Result<IovEntry> {
        let prepared = prepare_iov_store(&self.state, folder, since, payload)?;
        self.run(prepared)
    }

    pub fn tag_head(&mut self, folder: &str, tag: &str) -> Result<usize> {
        let prepared = prepare_tag_head(&self.state, folder, tag)?;
        self.run(prepared)
    }

    pub fn latest_dictionary(&self, class_name: &str) -> Option<DataDictionary> {
        self.state.latest_dictionary(class_name).cloned()
    }
}
