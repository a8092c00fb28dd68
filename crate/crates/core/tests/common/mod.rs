//! Random store generators and a whole-store read fingerprint shared by the
//! integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use pndb_core::conversion::externalize;
use pndb_core::exchange::export_xml;
use pndb_core::iov::{Timestamp, HEAD};
use pndb_core::model::{DictionaryDraft, FieldSpec, ParameterValue, PrimitiveType, ScopePath};
use pndb_core::Store;
use rand::rngs::StdRng;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use sha2::{Digest, Sha256};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub const VALUE_TYPES: [PrimitiveType; 7] = [
    PrimitiveType::Int,
    PrimitiveType::Float,
    PrimitiveType::Bool,
    PrimitiveType::String,
    PrimitiveType::IntArray,
    PrimitiveType::FloatArray,
    PrimitiveType::StringArray,
];

pub fn identifier(rng: &mut StdRng, prefix: &str) -> String {
    const TAIL: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_";
    let len = rng.random_range(0..8);
    let mut s = prefix.to_string();
    for _ in 0..len {
        s.push(*TAIL.choose(rng).unwrap() as char);
    }
    s
}

pub fn random_float(rng: &mut StdRng) -> f64 {
    match rng.random_range(0..6) {
        0 => 0.0,
        1 => rng.random_range(-5i64..5) as f64,
        2 => rng.random::<f64>() * 1e4,
        3 => -rng.random::<f64>() * 1e-7,
        4 => f64::from_bits(rng.random::<u64>() & !(0x7ffu64 << 52) | (rng.random_range(1u64..0x7fe) << 52)),
        _ => rng.random_range(-1e300..1e300),
    }
}

pub fn random_string(rng: &mut StdRng) -> String {
    const POOL: &[&str] = &[
        "a", "Z", "0", " ", "<", ">", "&", "\"", "'", ",", "[", "]", "\\", "|", "\n", "\t", "\r", "é", "µm", "#",
        "nova://", "&amp;", "]]>",
    ];
    let len = rng.random_range(0..10);
    (0..len).map(|_| *POOL.choose(rng).unwrap()).collect()
}

pub fn random_value(rng: &mut StdRng, ty: PrimitiveType) -> ParameterValue {
    let n = rng.random_range(0..5);
    match ty {
        PrimitiveType::Int => ParameterValue::Int(if rng.random_bool(0.1) {
            [i64::MIN, i64::MAX, 0][rng.random_range(0..3)]
        } else {
            rng.random_range(-100_000..100_000)
        }),
        PrimitiveType::Float => ParameterValue::Float(random_float(rng)),
        PrimitiveType::Bool => ParameterValue::Bool(rng.random()),
        PrimitiveType::String => ParameterValue::String(random_string(rng)),
        PrimitiveType::IntArray => ParameterValue::IntArray((0..n).map(|_| rng.random_range(-1000..1000)).collect()),
        PrimitiveType::FloatArray => ParameterValue::FloatArray((0..n).map(|_| random_float(rng)).collect()),
        PrimitiveType::StringArray => ParameterValue::StringArray((0..n).map(|_| random_string(rng)).collect()),
        PrimitiveType::BlobRef => panic!("blob values need an existing blob"),
    }
}

pub fn random_scope(rng: &mut StdRng) -> ScopePath {
    const SEGMENTS: &[&str] = &["ATLAS", "Inner", "Muon", "Tile", "Pixel", "Barrel", "EndCap"];
    let depth = rng.random_range(0..4);
    ScopePath::from_segments((0..depth).map(|_| *SEGMENTS.choose(rng).unwrap())).unwrap()
}

pub fn random_field(rng: &mut StdRng, name: String, allow_blob: bool) -> FieldSpec {
    let ty = if allow_blob && rng.random_bool(0.15) {
        PrimitiveType::BlobRef
    } else {
        *VALUE_TYPES.choose(rng).unwrap()
    };
    let mut field = FieldSpec::new(name, ty);
    if rng.random_bool(0.5) {
        field = field.with_comment(random_string(rng));
    }
    if rng.random_bool(0.3) {
        field = field.with_unit(["mm", "cm", "GeV", "", "µm"][rng.random_range(0..5)]);
    }
    if ty != PrimitiveType::BlobRef && rng.random_bool(0.3) {
        field = field.with_default(random_value(rng, ty));
    }
    field
}

/// Values for every field of `fields`, taking blob values from `blobs`.
pub fn random_values(rng: &mut StdRng, fields: &[FieldSpec], store: &Store) -> Vec<ParameterValue> {
    fields
        .iter()
        .map(|f| match f.ty {
            PrimitiveType::BlobRef => {
                let id = rng.random_range(1..=store.blob_count());
                ParameterValue::BlobRef(store.blob_ref(id).unwrap().link())
            }
            ty => random_value(rng, ty),
        })
        .collect()
}

/// Evolves `fields` by one add, drop or widen step (plus an optional
/// reshuffle), never producing an identical list.
pub fn evolve_fields(rng: &mut StdRng, fields: &[FieldSpec], fresh_name: &mut dyn FnMut() -> String) -> Vec<FieldSpec> {
    loop {
        let mut next = fields.to_vec();
        match rng.random_range(0..3) {
            0 => {
                let at = rng.random_range(0..=next.len());
                next.insert(at, random_field(rng, fresh_name(), false));
            }
            1 if next.len() > 1 => {
                next.remove(rng.random_range(0..next.len()));
            }
            2 => {
                let ints: Vec<usize> = (0..next.len())
                    .filter(|&i| matches!(next[i].ty, PrimitiveType::Int | PrimitiveType::IntArray))
                    .collect();
                let Some(&i) = ints.choose(rng) else { continue };
                next[i].ty = match next[i].ty {
                    PrimitiveType::Int => PrimitiveType::Float,
                    _ => PrimitiveType::FloatArray,
                };
                next[i].default = next[i].default.as_ref().and_then(|d| d.coerce_to(next[i].ty));
            }
            _ => continue,
        }
        if rng.random_bool(0.2) {
            next.shuffle(rng);
        }
        if next != fields {
            return next;
        }
    }
}

#[derive(Default)]
struct GenState {
    classes: Vec<String>,
    instances: Vec<(String, String)>,
    folders: Vec<String>,
    head_since: BTreeMap<String, u64>,
    tags: BTreeMap<String, usize>,
    next_name: usize,
}

/// Applies random mutations until `n` more records are committed.
pub fn random_mutations(store: &Store, rng: &mut StdRng, n: u64) {
    let mut g = GenState::default();
    for (class, _) in store.classes() {
        g.classes.push(class);
    }
    for key in store.instances() {
        g.instances.push((key.class_name, key.instance_name));
    }
    for f in store.folders() {
        let head = store.iov_list(&f.path, HEAD).unwrap();
        if let Some(last) = head.last() {
            g.head_since.insert(f.path.clone(), last.interval.since.0);
        }
        g.tags.insert(f.path.clone(), store.tags(&f.path).unwrap().len());
        g.folders.push(f.path);
    }
    g.next_name = store.current_seq() as usize;
    let target = store.current_seq() + n;
    while store.current_seq() < target {
        mutate_once(store, rng, &mut g);
    }
}

fn mutate_once(store: &Store, rng: &mut StdRng, g: &mut GenState) {
    g.next_name += 1;
    let uid = g.next_name;
    match rng.random_range(0..100) {
        0..12 => {
            let class = format!("{}_{uid}", identifier(rng, "C"));
            // uids restart from the seq when a later call resumes on the same store
            if store.get_dictionary(&class, None).is_ok() {
                return;
            }
            let allow_blob = store.blob_count() > 0;
            let fields = (0..rng.random_range(1..6))
                .map(|i| random_field(rng, format!("f{i}"), allow_blob))
                .collect();
            store.register_class(&DictionaryDraft::new(class.clone(), fields)).unwrap();
            g.classes.push(class);
        }
        12..20 if !g.classes.is_empty() => {
            let class = g.classes.choose(rng).unwrap().clone();
            let dict = store.get_dictionary(&class, None).unwrap();
            let mut counter = uid * 10;
            let fields = evolve_fields(rng, &dict.fields, &mut || loop {
                counter += 1;
                let name = format!("g{counter}");
                if dict.field(&name).is_none() {
                    return name;
                }
            });
            store.register_class(&DictionaryDraft::new(class, fields)).unwrap();
        }
        20..50 if !g.classes.is_empty() => {
            let (class, instance) = if !g.instances.is_empty() && rng.random_bool(0.5) {
                g.instances.choose(rng).unwrap().clone()
            } else {
                let class = g.classes.choose(rng).unwrap().clone();
                let instance = ["default", "shifted", "test", "alt"][rng.random_range(0..4)].to_string();
                (class, instance)
            };
            let dict = store.get_dictionary(&class, None).unwrap();
            let values = random_values(rng, &dict.fields, store);
            store.put_object(&class, &instance, &random_scope(rng), &values).unwrap();
            if !g.instances.contains(&(class.clone(), instance.clone())) {
                g.instances.push((class, instance));
            }
        }
        50..58 => {
            let len = [0, 1, 7, 100, 5000][rng.random_range(0..5)];
            let bytes: Vec<u8> = (0..len).map(|_| rng.random_range(0..4u8)).collect();
            store.put_blob(&bytes).unwrap();
        }
        58..64 => {
            let path = format!("{}/{}", identifier(rng, "F"), identifier(rng, &format!("P{uid}")));
            if store.folder_exists(&path) {
                return;
            }
            store.create_folder(&path, &random_string(rng)).unwrap();
            g.folders.push(path);
        }
        64..92 if !g.folders.is_empty() && !g.instances.is_empty() => {
            let folder = g.folders.choose(rng).unwrap().clone();
            let since = g.head_since.get(&folder).map_or(0, |s| s + rng.random_range(1..50));
            let (class, instance) = g.instances.choose(rng).unwrap();
            let obj = store.get_object(class, instance, None).unwrap();
            let addr = pndb_core::conversion::OpaqueAddress::new(
                class.clone(),
                instance.clone(),
                rng.random_range(1..=obj.object_version),
                obj.dict_version,
            )
            .unwrap();
            store.iov_store(&folder, Timestamp(since), &externalize(&addr)).unwrap();
            g.head_since.insert(folder, since);
        }
        92..100 => {
            let candidates: Vec<&String> = g.folders.iter().filter(|f| g.head_since.contains_key(*f)).collect();
            let Some(folder) = candidates.choose(rng).map(|f| (*f).clone()) else { return };
            let n = g.tags.entry(folder.clone()).or_insert(0);
            *n += 1;
            store.tag_head(&folder, &format!("tag-{n}.{uid}")).unwrap();
        }
        _ => {}
    }
}

/// Answers of every read operation over the whole store, rendered to text.
/// Two stores with equal fingerprints are indistinguishable to readers.
pub fn fingerprint(store: &Store) -> Vec<String> {
    let mut out = vec![format!("seq {}", store.current_seq())];
    for (class, latest) in store.classes() {
        for v in 1..=latest {
            out.push(format!("{:?}", store.get_dictionary(&class, Some(v))));
        }
    }
    let mut scopes = BTreeSet::from([ScopePath::root()]);
    for key in store.instances() {
        for rev in store.object_versions(&key.class_name, &key.instance_name).unwrap() {
            let mut s = Some(rev.scope.clone());
            while let Some(p) = s {
                s = p.parent();
                scopes.insert(p);
            }
            out.push(format!("{rev:?}"));
            out.push(format!(
                "{:?}",
                store.get_object(&key.class_name, &key.instance_name, Some(rev.object_version))
            ));
        }
    }
    for scope in scopes {
        out.push(format!("{scope} {:?}", store.list_scope(&scope)));
    }
    for folder in store.folders() {
        out.push(format!("{folder:?}"));
        for tag in store.tags(&folder.path).unwrap() {
            let entries = store.iov_list(&folder.path, &tag).unwrap();
            let mut probes = BTreeSet::from([0, u64::MAX - 1]);
            for e in &entries {
                probes.extend([e.interval.since.0.saturating_sub(1), e.interval.since.0, e.interval.since.0 + 1]);
            }
            out.push(format!("{tag} {entries:?}"));
            for t in probes {
                out.push(format!("{tag}@{t} {:?}", store.iov_resolve(&folder.path, &tag, Timestamp(t))));
            }
        }
    }
    for id in 1..=store.blob_count() {
        let r = store.blob_ref(id).unwrap();
        let bytes = store.get_blob(&r).unwrap();
        out.push(format!("{r:?} {}", hex::encode(Sha256::digest(&bytes))));
    }
    out.push(export_xml(store, None).unwrap());
    out
}
