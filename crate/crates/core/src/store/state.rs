//! In-memory image of the logical relations, rebuilt by replaying the log.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::iov::{validate_folder_path, FolderState, HEAD};
use crate::model::{BlobRef, DataDictionary, ParameterValue, ScopePath};

use super::records::{
    decode_blob_header, from_json, ChangeRecord, DictionaryPayload, FolderPayload, IovStorePayload,
    ObjectPayload, OpCode, TagPayload, BLOB_HEADER_LEN, FRAME_HEADER_LEN,
};

#[derive(Debug, Clone)]
pub(crate) struct StoredObject {
    pub object_version: u32,
    pub dict_version: u32,
    pub scope: ScopePath,
    pub created_seq: u64,
    pub values: Vec<ParameterValue>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BlobEntry {
    pub reference: BlobRef,
    /// Offset of the raw bytes within the log file.
    pub offset: u64,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct State {
    pub seq: u64,
    /// Per class, index `v - 1` holds dictionary version `v`.
    pub dictionaries: BTreeMap<String, Vec<DataDictionary>>,
    /// Per (class, instance), index `v - 1` holds object version `v`.
    pub objects: BTreeMap<(String, String), Vec<StoredObject>>,
    /// Index `id - 1` holds blob `id`.
    pub blobs: Vec<BlobEntry>,
    pub blob_by_checksum: HashMap<[u8; 32], u64>,
    pub folders: BTreeMap<String, FolderState>,
    /// Log offset of every record, index `seq - 1`.
    pub record_offsets: Vec<u64>,
}

impl State {
    pub fn latest_dictionary(&self, class: &str) -> Option<&DataDictionary> {
        self.dictionaries.get(class).and_then(|v| v.last())
    }

    pub fn dictionary(&self, class: &str, version: u32) -> Option<&DataDictionary> {
        let idx = (version as usize).checked_sub(1)?;
        self.dictionaries.get(class).and_then(|v| v.get(idx))
    }

    pub fn folder(&self, path: &str) -> Result<&FolderState> {
        self.folders
            .get(path)
            .ok_or_else(|| Error::UnknownFolder(path.to_string()))
    }

    pub fn revisions(&self, class: &str, instance: &str) -> Option<&[StoredObject]> {
        self.objects
            .get(&(class.to_string(), instance.to_string()))
            .map(Vec::as_slice)
    }

    pub fn blob(&self, id: u64) -> Option<&BlobEntry> {
        let idx = (id as usize).checked_sub(1)?;
        self.blobs.get(idx)
    }

    /// Parses stored literal text into typed values of the given dictionary.
    pub fn parse_values(&self, dict: &DataDictionary, texts: &[String]) -> Result<Vec<ParameterValue>> {
        if texts.len() != dict.fields.len() {
            return Err(Error::Corrupt(format!(
                "object of {} has {} values, dictionary v{} has {} fields",
                dict.class_name,
                texts.len(),
                dict.dict_version,
                dict.fields.len()
            )));
        }
        texts
            .iter()
            .zip(&dict.fields)
            .map(|(text, field)| {
                let value = ParameterValue::parse(field.ty, text)?;
                if let ParameterValue::BlobRef(link) = &value {
                    self.check_blob_link(link.blob_id, &link.checksum)?;
                }
                Ok(value)
            })
            .collect()
    }

    pub fn check_blob_link(&self, id: u64, checksum: &[u8; 32]) -> Result<()> {
        match self.blob(id) {
            Some(b) if &b.reference.checksum == checksum => Ok(()),
            _ => Err(Error::UnknownBlob(format!("blob:{id}:{}", hex::encode(checksum)))),
        }
    }

    /// Applies one committed record. `offset` is where the record's frame
    /// starts in the log file. When `blob_bytes` is given the blob digest is
    /// verified against it.
    pub fn apply(&mut self, record: &ChangeRecord, offset: u64, blob_bytes: Option<&[u8]>) -> Result<()> {
        if record.seq != self.seq + 1 {
            return Err(Error::Corrupt(format!(
                "record seq {} does not follow {}",
                record.seq, self.seq
            )));
        }
        match record.op {
            OpCode::PutDictionary => {
                let dict = from_json::<DictionaryPayload>(&record.payload)?.into_dictionary()?;
                let versions = self.dictionaries.entry(dict.class_name.clone()).or_default();
                if dict.dict_version as usize != versions.len() + 1 {
                    return Err(Error::Corrupt(format!(
                        "dictionary {} v{} out of order",
                        dict.class_name, dict.dict_version
                    )));
                }
                versions.push(dict);
            }
            OpCode::PutObject => {
                let p: ObjectPayload = from_json(&record.payload)?;
                let dict = self.dictionary(&p.class, p.dict_version).ok_or_else(|| {
                    Error::Corrupt(format!("object refers to missing dictionary {} v{}", p.class, p.dict_version))
                })?;
                let values = self.parse_values(dict, &p.values)?;
                let scope = ScopePath::parse(&p.scope)?;
                let revisions = self.objects.entry((p.class.clone(), p.instance.clone())).or_default();
                if p.object_version as usize != revisions.len() + 1 {
                    return Err(Error::Corrupt(format!(
                        "object {}/{} v{} out of order",
                        p.class, p.instance, p.object_version
                    )));
                }
                revisions.push(StoredObject {
                    object_version: p.object_version,
                    dict_version: p.dict_version,
                    scope,
                    created_seq: record.seq,
                    values,
                });
            }
            OpCode::PutBlob => {
                let reference = decode_blob_header(&record.payload)?;
                self.apply_blob(reference, offset + (FRAME_HEADER_LEN + BLOB_HEADER_LEN) as u64)?;
                if let Some(bytes) = blob_bytes {
                    let digest: [u8; 32] = Sha256::digest(bytes).into();
                    if digest != reference.checksum || bytes.len() as u64 != reference.length {
                        return Err(Error::BlobChecksumMismatch(reference.blob_id));
                    }
                }
            }
            OpCode::CreateFolder => {
                let p: FolderPayload = from_json(&record.payload)?;
                validate_folder_path(&p.path)?;
                if self.folders.contains_key(&p.path) {
                    return Err(Error::DuplicateFolder(p.path));
                }
                self.folders.insert(p.path, FolderState::new(p.description));
            }
            OpCode::IovStore => {
                let p: IovStorePayload = from_json(&record.payload)?;
                let seq = record.seq;
                let folder = self
                    .folders
                    .get_mut(&p.folder)
                    .ok_or_else(|| Error::UnknownFolder(p.folder.clone()))?;
                folder.check_store(p.since)?;
                folder.store(p.since, p.payload, seq);
            }
            OpCode::TagHead => {
                let p: TagPayload = from_json(&record.payload)?;
                let folder = self
                    .folders
                    .get_mut(&p.folder)
                    .ok_or_else(|| Error::UnknownFolder(p.folder.clone()))?;
                if p.tag == HEAD || folder.tags.contains_key(&p.tag) {
                    return Err(Error::DuplicateTag(p.tag));
                }
                let snapshot = folder.head().to_vec();
                folder.tags.insert(p.tag, snapshot);
            }
        }
        self.seq = record.seq;
        self.record_offsets.push(offset);
        Ok(())
    }

    fn apply_blob(&mut self, reference: BlobRef, offset: u64) -> Result<()> {
        if reference.blob_id as usize != self.blobs.len() + 1 {
            return Err(Error::Corrupt(format!("blob id {} out of order", reference.blob_id)));
        }
        if self.blob_by_checksum.insert(reference.checksum, reference.blob_id).is_some() {
            return Err(Error::Corrupt(format!("duplicate blob content for id {}", reference.blob_id)));
        }
        self.blobs.push(BlobEntry { reference, offset });
        Ok(())
    }

    /// Child scopes and instances directly at `scope`, based on the latest
    /// revision of every instance.
    pub fn list_scope(&self, scope: &ScopePath) -> (Vec<ScopePath>, Vec<(String, String)>) {
        let mut children = BTreeSet::new();
        let mut instances = Vec::new();
        for ((class, instance), revisions) in &self.objects {
            let Some(latest) = revisions.last() else { continue };
            if &latest.scope == scope {
                instances.push((class.clone(), instance.clone()));
            } else if let Some(child) = latest.scope.child_toward(scope) {
                children.insert(child.to_string());
            }
        }
        let children = children
            .into_iter()
            .map(|s| ScopePath::parse(&s).expect("canonical scope"))
            .collect();
        // BTreeMap iteration already yields (class, instance) order.
        (children, instances)
    }
}
