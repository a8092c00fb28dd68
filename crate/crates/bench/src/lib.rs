//! Fixtures shared by the benchmarks under `benches/`.

use std::path::Path;

use pndb_core::model::DictionaryDraft;
use pndb_core::{FieldSpec, ParameterValue, PrimitiveType, ScopePath, Store, Timestamp};

pub const FOLDER: &str = "Bench/Conditions";

/// Store with `classes` classes of `params` float parameters, one instance
/// each, plus an IOV folder holding `iov_entries` HEAD entries spaced 10
/// apart.
pub fn populated_store(root: &Path, classes: usize, params: usize, iov_entries: usize) -> Store {
    let store = Store::create(root).expect("fresh bench store");
    store
        .transaction(|tx| {
            for c in 0..classes {
                let class = format!("Class{c:04}");
                let fields = (0..params)
                    .map(|p| FieldSpec::new(format!("p{p}"), PrimitiveType::Float).with_comment(format!("parameter {p}")))
                    .collect();
                tx.register_class(&DictionaryDraft::new(class.clone(), fields))?;
                let scope = ScopePath::from_segments([format!("Det{}", c % 8)])?;
                let values: Vec<_> = (0..params).map(|p| ParameterValue::Float((c * params + p) as f64 * 0.25)).collect();
                tx.put_object(&class, "default", &scope, &values)?;
            }
            if iov_entries > 0 {
                tx.create_folder(FOLDER, "")?;
                for i in 0..iov_entries {
                    tx.iov_store(FOLDER, Timestamp(i as u64 * 10), &format!("nova://Class0000/default?v=1&d={}", i + 1))?;
                }
            }
            Ok(())
        })
        .expect("bench fixture commits");
    store
}
