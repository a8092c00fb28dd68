//! JSON shapes served by the HTTP API. Values use the same canonical text
//! rendering as XML export.

use pndb_core::conversion::{externalize, OpaqueAddress};
use pndb_core::iov::{Folder, IovEntry};
use pndb_core::model::{CollectionInstance, DataDictionary};
use pndb_core::store::{InstanceKey, RevisionInfo, ScopeListing};
use pndb_core::evolution::ViewNotice;
use pndb_core::ScopePath;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceView {
    pub class: String,
    pub instance: String,
}

impl From<&InstanceKey> for InstanceView {
    fn from(k: &InstanceKey) -> Self {
        InstanceView {
            class: k.class_name.clone(),
            instance: k.instance_name.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeView {
    pub path: String,
    pub children: Vec<String>,
    pub instances: Vec<InstanceView>,
}

impl ScopeView {
    pub fn new(path: &ScopePath, listing: &ScopeListing) -> Self {
        ScopeView {
            path: path.to_string(),
            children: listing.children.iter().map(ToString::to_string).collect(),
            instances: listing.instances.iter().map(InstanceView::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassView {
    pub class: String,
    pub latest_version: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldView {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub unit: Option<String>,
    pub comment: String,
    pub default: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DictionaryView {
    pub class: String,
    pub dict_version: u32,
    pub fields: Vec<FieldView>,
}

impl From<&DataDictionary> for DictionaryView {
    fn from(d: &DataDictionary) -> Self {
        DictionaryView {
            class: d.class_name.clone(),
            dict_version: d.dict_version,
            fields: d
                .fields
                .iter()
                .map(|f| FieldView {
                    name: f.name.clone(),
                    ty: f.ty.to_string(),
                    unit: f.unit.clone(),
                    comment: f.comment.clone(),
                    default: f.default.as_ref().map(|v| v.render()),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamView {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub unit: Option<String>,
    pub comment: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectView {
    pub class: String,
    pub instance: String,
    pub scope: String,
    pub object_version: u32,
    pub dict_version: u32,
    pub address: String,
    pub params: Vec<ParamView>,
    /// Set when the revision is viewed under another dictionary version.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notices: Vec<String>,
}

impl ObjectView {
    /// `dict` must be the dictionary `obj` is bound to.
    pub fn new(obj: &CollectionInstance, dict: &DataDictionary) -> Self {
        let address = OpaqueAddress {
            class_name: obj.class_name.clone(),
            instance_name: obj.instance_name.clone(),
            object_version: obj.object_version,
            dict_version: obj.dict_version,
        };
        ObjectView {
            class: obj.class_name.clone(),
            instance: obj.instance_name.clone(),
            scope: obj.scope.to_string(),
            object_version: obj.object_version,
            dict_version: obj.dict_version,
            address: externalize(&address),
            params: dict
                .fields
                .iter()
                .zip(&obj.values)
                .map(|(f, v)| ParamView {
                    name: f.name.clone(),
                    ty: f.ty.to_string(),
                    unit: f.unit.clone(),
                    comment: f.comment.clone(),
                    value: v.render(),
                })
                .collect(),
            notices: Vec::new(),
        }
    }

    pub fn with_notices(mut self, notices: &[ViewNotice]) -> Self {
        self.notices = notices
            .iter()
            .map(|n| match n {
                ViewNotice::Filled(name) => format!("filled {name}"),
                ViewNotice::Dropped(name) => format!("dropped {name}"),
                ViewNotice::Widened(name) => format!("widened {name}"),
            })
            .collect();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddressView {
    pub class: String,
    pub instance: String,
    pub object_version: u32,
    pub dict_version: u32,
}

impl From<&OpaqueAddress> for AddressView {
    fn from(a: &OpaqueAddress) -> Self {
        AddressView {
            class: a.class_name.clone(),
            instance: a.instance_name.clone(),
            object_version: a.object_version,
            dict_version: a.dict_version,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevisionView {
    pub object_version: u32,
    pub dict_version: u32,
    pub scope: String,
    pub created_seq: u64,
}

impl From<&RevisionInfo> for RevisionView {
    fn from(r: &RevisionInfo) -> Self {
        RevisionView {
            object_version: r.object_version,
            dict_version: r.dict_version,
            scope: r.scope.to_string(),
            created_seq: r.created_seq,
        }
    }
}

/// `until` is `null` for open-ended intervals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IovEntryView {
    pub folder: String,
    pub tag: String,
    pub since: u64,
    pub until: Option<u64>,
    pub payload: String,
    pub inserted_seq: u64,
}

impl From<&IovEntry> for IovEntryView {
    fn from(e: &IovEntry) -> Self {
        IovEntryView {
            folder: e.folder.clone(),
            tag: e.tag.clone(),
            since: e.interval.since.0,
            until: (!e.interval.until.is_infinite()).then_some(e.interval.until.0),
            payload: e.payload.clone(),
            inserted_seq: e.inserted_seq,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FolderView {
    pub path: String,
    pub description: String,
}

impl From<&Folder> for FolderView {
    fn from(f: &Folder) -> Self {
        FolderView {
            path: f.path.clone(),
            description: f.description.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreView {
    pub store_id: String,
    pub mode: String,
    pub seq: u64,
    pub master_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IovStoreRequest {
    pub since: u64,
    pub payload: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateFolderRequest {
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TagRequest {
    pub tag: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagResponse {
    pub folder: String,
    pub tag: String,
    pub entries: usize,
}
