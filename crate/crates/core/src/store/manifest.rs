use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const FORMAT_VERSION: &str = "PNDB-STORE-1";
pub const MANIFEST_FILE: &str = "MANIFEST";

pub type StoreId = [u8; 16];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Role {
    Master,
    Replica,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Manifest {
    pub seq: u64,
    pub store_id: StoreId,
    pub role: Role,
    pub master_id: Option<StoreId>,
}

impl Manifest {
    pub fn render(&self) -> String {
        let role = match self.role {
            Role::Master => "master",
            Role::Replica => "replica",
        };
        let master = self.master_id.map(hex::encode).unwrap_or_else(|| "-".into());
        format!(
            "{FORMAT_VERSION}\nseq {}\nstore-id {}\nrole {role}\nmaster-id {master}\n",
            self.seq,
            hex::encode(self.store_id)
        )
    }

    pub fn parse(text: &str) -> Result<Manifest> {
        let bad = |why: &str| Error::Corrupt(format!("MANIFEST: {why}"));
        let mut lines = text.lines();
        if lines.next() != Some(FORMAT_VERSION) {
            return Err(bad("unsupported format version"));
        }
        let mut seq = None;
        let mut store_id = None;
        let mut role = None;
        let mut master_id = None;
        for line in lines {
            let (key, value) = line.split_once(' ').ok_or_else(|| bad("malformed line"))?;
            match key {
                "seq" => seq = Some(value.parse().map_err(|_| bad("bad seq"))?),
                "store-id" => store_id = Some(parse_id(value).ok_or_else(|| bad("bad store-id"))?),
                "role" => {
                    role = Some(match value {
                        "master" => Role::Master,
                        "replica" => Role::Replica,
                        _ => return Err(bad("bad role")),
                    })
                }
                "master-id" if value == "-" => master_id = None,
                "master-id" => master_id = Some(parse_id(value).ok_or_else(|| bad("bad master-id"))?),
                _ => return Err(bad("unknown key")),
            }
        }
        Ok(Manifest {
            seq: seq.ok_or_else(|| bad("missing seq"))?,
            store_id: store_id.ok_or_else(|| bad("missing store-id"))?,
            role: role.ok_or_else(|| bad("missing role"))?,
            master_id,
        })
    }

    pub fn load(root: &Path) -> Result<Manifest> {
        let text = fs::read_to_string(root.join(MANIFEST_FILE))?;
        Manifest::parse(&text)
    }

    /// Atomically replaces the manifest file.
    pub fn save(&self, root: &Path) -> Result<()> {
        let tmp = root.join("MANIFEST.tmp");
        let mut f = fs::File::create(&tmp)?;
        f.write_all(self.render().as_bytes())?;
        f.sync_data()?;
        fs::rename(tmp, root.join(MANIFEST_FILE))?;
        Ok(())
    }
}

pub fn parse_id(text: &str) -> Option<StoreId> {
    let mut id = [0u8; 16];
    hex::decode_to_slice(text, &mut id).ok()?;
    Some(id)
}
