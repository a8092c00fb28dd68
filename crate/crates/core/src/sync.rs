//! One-way master→replica replication.
//!
//! A changeset is a contiguous, checksummed slice of the master's change
//! log. Wire format (all integers big-endian):
//!
//! ```text
//! "PNDB-SYNC-1\n" | store id (16) | from_seq (8) | to_seq (8) | count (8)
//! records: seq (8) | op (1) | payload length (4) | payload
//! SHA-256 of everything above (32)
//! ```

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::store::{ChangeRecord, StoreId};
use crate::Store;

pub const MAGIC: &[u8; 12] = b"PNDB-SYNC-1\n";
const HEADER_LEN: usize = MAGIC.len() + 16 + 8 + 8 + 8;
const TRAILER_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Changeset {
    pub source: StoreId,
    pub from_seq: u64,
    pub to_seq: u64,
    pub records: Vec<ChangeRecord>,
}

impl Changeset {
    pub fn encode(&self) -> Vec<u8> {
        let body: usize = self.records.iter().map(ChangeRecord::frame_len).sum();
        let mut out = Vec::with_capacity(HEADER_LEN + body + TRAILER_LEN);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.source);
        out.extend_from_slice(&self.from_seq.to_be_bytes());
        out.extend_from_slice(&self.to_seq.to_be_bytes());
        out.extend_from_slice(&(self.records.len() as u64).to_be_bytes());
        for record in &self.records {
            record.write_frame(&mut out);
        }
        let trailer: [u8; 32] = Sha256::digest(&out).into();
        out.extend_from_slice(&trailer);
        out
    }

    /// Parses and verifies a changeset. The trailer is checked before
    /// anything else, so any corruption reports `ChecksumMismatch`.
    pub fn decode(bytes: &[u8]) -> Result<Changeset> {
        if bytes.len() < HEADER_LEN + TRAILER_LEN {
            return Err(Error::MalformedChangeset("too short".into()));
        }
        let (body, trailer) = bytes.split_at(bytes.len() - TRAILER_LEN);
        let digest: [u8; 32] = Sha256::digest(body).into();
        if digest[..] != trailer[..] {
            return Err(Error::ChecksumMismatch);
        }
        if &body[..MAGIC.len()] != MAGIC {
            return Err(Error::MalformedChangeset("bad magic".into()));
        }
        let mut pos = MAGIC.len();
        let source: StoreId = body[pos..pos + 16].try_into().unwrap();
        pos += 16;
        let mut next_u64 = || {
            let v = u64::from_be_bytes(body[pos..pos + 8].try_into().unwrap());
            pos += 8;
            v
        };
        let from_seq = next_u64();
        let to_seq = next_u64();
        let count = next_u64();
        if to_seq < from_seq || to_seq - from_seq != count {
            return Err(Error::MalformedChangeset(format!(
                "range ({from_seq}, {to_seq}] does not hold {count} records"
            )));
        }
        let mut records = Vec::new();
        let mut rest = &body[HEADER_LEN..];
        for expected in from_seq + 1..=to_seq {
            let (record, used) = ChangeRecord::read_frame(rest)?
                .ok_or_else(|| Error::MalformedChangeset("truncated record".into()))?;
            if record.seq != expected {
                return Err(Error::MalformedChangeset(format!(
                    "record seq {} where {expected} was expected",
                    record.seq
                )));
            }
            records.push(record);
            rest = &rest[used..];
        }
        if !rest.is_empty() {
            return Err(Error::MalformedChangeset("trailing bytes after records".into()));
        }
        Ok(Changeset {
            source,
            from_seq,
            to_seq,
            records,
        })
    }
}

/// Changes committed on `master` after `since`, up to its current seq.
pub fn export_changes(master: &Store, since: u64) -> Result<Changeset> {
    let (source, current, records) = master.snapshot_changes(since)?;
    Ok(Changeset {
        source,
        from_seq: since,
        to_seq: current,
        records,
    })
}

/// Replays a decoded changeset on a replica. Returns the replica's new seq.
pub fn apply_changeset(replica: &Store, cs: &Changeset) -> Result<u64> {
    let dense = cs.to_seq - cs.from_seq == cs.records.len() as u64
        && cs.records.iter().zip(cs.from_seq + 1..).all(|(r, s)| r.seq == s);
    if !dense {
        return Err(Error::MalformedChangeset("records are not dense".into()));
    }
    replica.apply_replicated(cs.source, cs.from_seq, &cs.records)
}

/// Verifies, decodes and replays changeset bytes on a replica.
pub fn apply_changes(replica: &Store, bytes: &[u8]) -> Result<u64> {
    apply_changeset(replica, &Changeset::decode(bytes)?)
}
