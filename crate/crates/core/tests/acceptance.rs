//! Acceptance suite. Each criterion prints one `PASS` or `FAIL` line; the
//! process exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{fingerprint, random_field, random_mutations, random_value, rng};
use pndb_core::conversion::{
    externalize, internalize, retrieve_as, ConverterRegistry, GenericObject, OpaqueAddress, RetrievalContext,
    TransientStore,
};
use pndb_core::evolution::materialize_view;
use pndb_core::exchange::{export_xml, import_table, import_xml};
use pndb_core::iov::{Timestamp, HEAD};
use pndb_core::model::{validate_collection, DictionaryDraft, FieldSpec, ParameterValue, PrimitiveType, ScopePath};
use pndb_core::sync::{apply_changes, export_changes, Changeset};
use pndb_core::{Error, Store};
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::Rng;
use tempfile::TempDir;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 7] = [
        ("scale-round-trip", scale_round_trip),
        ("mother-volume-sample", mother_volume_reproduction),
        ("iov-oracle-equivalence", iov_oracle_equivalence),
        ("schema-evolution-matrix", schema_evolution_matrix),
        ("replication-equivalence", replication_equivalence),
        ("address-round-trip", address_round_trip),
        ("dual-access-equivalence", dual_access_equivalence),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} ({secs:.2}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} ({secs:.2}s): {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

fn fresh(dir: &TempDir, name: &str) -> Store {
    Store::create(dir.path().join(name)).unwrap()
}

// ---------------------------------------------------------------------------

const SCALE_CLASSES: usize = 220;
const SCALE_FIELDS: usize = 12;
const SCALE_INSTANCES: usize = 4;
const SCALE_LIMIT: Duration = Duration::from_secs(60);

fn scale_round_trip() -> Outcome {
    let mut r = rng(0x5ca1e);
    let mut table = String::new();
    let mut params = 0;
    for c in 0..SCALE_CLASSES {
        let fields: Vec<FieldSpec> = (0..SCALE_FIELDS).map(|i| random_field(&mut r, format!("p{i}"), false)).collect();
        for i in 0..SCALE_INSTANCES {
            let _ = writeln!(table, "#class Class{c:03}");
            let _ = writeln!(table, "#instance inst{i}");
            let _ = writeln!(table, "#scope /Det{}/Sub{}", c % 7, i);
            for f in &fields {
                // Table cells are trimmed and single-line, so strings stay plain.
                let value = match f.ty {
                    PrimitiveType::String => ParameterValue::String(format!("s{}", r.random::<u32>())),
                    PrimitiveType::StringArray => ParameterValue::StringArray(vec!["a,b".into(), "c".into()]),
                    ty => random_value(&mut r, ty),
                };
                let unit = f.unit.as_deref().filter(|u| !u.is_empty()).unwrap_or("");
                let _ = writeln!(table, "{}|{}|{}|{}|comment {}", f.name, f.ty, value.render(), unit, f.name);
                params += 1;
            }
        }
    }
    let dir = TempDir::new().unwrap();
    let started = Instant::now();
    let a = fresh(&dir, "a");
    let report = import_table(&a, &table).map_err(|e| format!("table import: {e}"))?;
    let first = export_xml(&a, None).map_err(|e| e.to_string())?;
    let b = fresh(&dir, "b");
    import_xml(&b, &first).map_err(|e| format!("xml import: {e}"))?;
    let second = export_xml(&b, None).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();

    let classes = a.classes().len();
    ensure!(params >= 10_000, "only {params} parameters generated");
    ensure!(classes >= 200, "only {classes} classes");
    ensure!(report.collections_imported == SCALE_CLASSES * SCALE_INSTANCES, "imported {report:?}");
    ensure!(first == second, "re-exported document differs ({} vs {} bytes)", first.len(), second.len());
    ensure!(elapsed < SCALE_LIMIT, "round-trip took {elapsed:?}");
    Ok(format!(
        "{params} parameters in {classes} classes, import+export+re-import+export {:.2}s, {} bytes byte-identical",
        elapsed.as_secs_f64(),
        first.len()
    ))
}

// ---------------------------------------------------------------------------

fn mother_volume_reproduction() -> Outcome {
    const SAMPLE: &str = "\
#class ATLASMotherVolume
#instance default
#scope /ATLAS
Version|int|2||2001 VERSION WITH ENDCAP SHIFTED B
Rmin|float|0.0||Inner Radius
Rmax|float|1400.0||Outer Radius
Zmax|float|2350.0||Maximum Z
";
    let expected = [
        ("Version", "int", "2", "2001 VERSION WITH ENDCAP SHIFTED B"),
        ("Rmin", "float", "0.0", "Inner Radius"),
        ("Rmax", "float", "1400.0", "Outer Radius"),
        ("Zmax", "float", "2350.0", "Maximum Z"),
    ];
    let dir = TempDir::new().unwrap();
    let s = fresh(&dir, "s");
    import_table(&s, SAMPLE).map_err(|e| e.to_string())?;
    let doc = export_xml(&s, None).map_err(|e| e.to_string())?;
    let params: Vec<&str> = doc.lines().map(str::trim).filter(|l| l.starts_with("<param")).collect();
    ensure!(params.len() == 4, "expected 4 params, document has {}:\n{doc}", params.len());
    for (line, (name, ty, value, comment)) in params.iter().zip(expected) {
        let want = format!(r#"<param name="{name}" type="{ty}" comment="{comment}">{value}</param>"#);
        ensure!(*line == want, "got `{line}`, want `{want}`");
    }
    let obj = s.get_object("ATLASMotherVolume", "default", None).map_err(|e| e.to_string())?;
    let values = [
        ParameterValue::Int(2),
        ParameterValue::Float(0.0),
        ParameterValue::Float(1400.0),
        ParameterValue::Float(2350.0),
    ];
    ensure!(obj.values == values, "stored values {:?}", obj.values);
    Ok("4 parameters exported with the expected values and comments".into())
}

// ---------------------------------------------------------------------------

const IOV_FOLDERS: usize = 50;
const IOV_TAGS: usize = 5;
const IOV_ENTRIES_PER_FOLDER: usize = 25;
const IOV_QUERIES: usize = 10_000;
const IOV_HEAD_MUTATIONS: usize = 1_000;

/// Brute-force model: entries in insertion order; an entry is valid from its
/// `since` until the next entry's `since`.
#[derive(Clone, Default)]
struct OracleFolder {
    head: Vec<(u64, String)>,
    tags: BTreeMap<String, Vec<(u64, String)>>,
}

fn linear_scan(entries: &[(u64, String)], t: u64) -> Option<&str> {
    let mut found = None;
    for (i, (since, payload)) in entries.iter().enumerate() {
        let until = entries.get(i + 1).map_or(u64::MAX, |(s, _)| *s);
        if *since <= t && t < until {
            found = Some(payload.as_str());
        }
    }
    found
}

fn iov_query(store: &Store, oracle: &[(String, OracleFolder)], r: &mut StdRng, tags_only: bool) -> Result<(), String> {
    let (path, model) = oracle.choose(r).unwrap();
    let mut names: Vec<&str> = model.tags.keys().map(String::as_str).collect();
    if !tags_only {
        names.push(HEAD);
    }
    let tag = *names.choose(r).unwrap();
    let entries = if tag == HEAD { &model.head } else { &model.tags[tag] };
    let last = entries.last().map_or(0, |(s, _)| *s);
    let t = match r.random_range(0..5) {
        0 => entries.choose(r).unwrap().0,
        1 => entries.choose(r).unwrap().0.saturating_sub(1),
        2 => u64::MAX - 1,
        _ => r.random_range(0..last + 1000),
    };
    let want = linear_scan(entries, t);
    let got = store.iov_resolve(path, tag, Timestamp(t));
    match (got, want) {
        (Ok(p), Some(w)) if p == w => Ok(()),
        (Err(Error::NoValidEntry(_)), None) => Ok(()),
        (got, want) => Err(format!("{path}@{tag} t={t}: store {got:?}, oracle {want:?}")),
    }
}

fn iov_oracle_equivalence() -> Outcome {
    let dir = TempDir::new().unwrap();
    let s = fresh(&dir, "s");
    let mut r = rng(0x10f);
    let mut oracle: Vec<(String, OracleFolder)> = Vec::new();
    for f in 0..IOV_FOLDERS {
        let path = format!("Det{f}/Conditions");
        let mut model = OracleFolder::default();
        let tag_points: Vec<usize> = rand::seq::index::sample(&mut r, IOV_ENTRIES_PER_FOLDER, IOV_TAGS)
            .into_iter()
            .collect();
        s.transaction(|tx| {
            tx.create_folder(&path, "")?;
            let mut since = r.random_range(0..100);
            for i in 0..IOV_ENTRIES_PER_FOLDER {
                let payload = format!("nova://C{f}/i{i}?v={}&d=1", i + 1);
                tx.iov_store(&path, Timestamp(since), &payload)?;
                model.head.push((since, payload));
                if tag_points.contains(&i) {
                    let tag = format!("calib-{i}");
                    tx.tag_head(&path, &tag)?;
                    model.tags.insert(tag, model.head.clone());
                }
                since += r.random_range(1..1000);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
        oracle.push((path, model));
    }
    let total: usize = oracle.iter().map(|(_, m)| m.head.len()).sum();
    ensure!(total >= 1000, "only {total} entries");
    for _ in 0..IOV_QUERIES {
        iov_query(&s, &oracle, &mut r, false)?;
    }

    let tagged: Vec<_> = oracle
        .iter()
        .flat_map(|(path, m)| m.tags.keys().map(move |t| (path.clone(), t.clone())))
        .map(|(p, t)| {
            let listing = s.iov_list(&p, &t).unwrap();
            (p, t, listing)
        })
        .collect();
    for _ in 0..IOV_HEAD_MUTATIONS {
        let idx = r.random_range(0..oracle.len());
        let (path, model) = &mut oracle[idx];
        let since = model.head.last().unwrap().0 + r.random_range(1..500);
        let payload = format!("nova://Late/p{since}?v=1&d=1");
        s.iov_store(path, Timestamp(since), &payload).map_err(|e| e.to_string())?;
        model.head.push((since, payload));
    }
    for (path, tag, listing) in &tagged {
        ensure!(&s.iov_list(path, tag).unwrap() == listing, "tag {path}@{tag} changed");
    }
    for _ in 0..IOV_QUERIES {
        iov_query(&s, &oracle, &mut r, true)?;
    }
    for _ in 0..IOV_QUERIES {
        iov_query(&s, &oracle, &mut r, false)?;
    }
    Ok(format!(
        "{IOV_FOLDERS} folders x {IOV_TAGS} tags, {total} entries, {} queries agree with linear scan; {} tag snapshots unchanged after {IOV_HEAD_MUTATIONS} HEAD stores",
        3 * IOV_QUERIES,
        tagged.len()
    ))
}

// ---------------------------------------------------------------------------

const EVOLUTION_CASES: usize = 1_000;
const EVOLUTION_MAX_STEPS: usize = 5;

fn zero_or_default(f: &FieldSpec) -> ParameterValue {
    f.default.clone().unwrap_or(match f.ty {
        PrimitiveType::Int => ParameterValue::Int(0),
        PrimitiveType::Float => ParameterValue::Float(0.0),
        PrimitiveType::Bool => ParameterValue::Bool(false),
        PrimitiveType::String => ParameterValue::String(String::new()),
        PrimitiveType::IntArray => ParameterValue::IntArray(vec![]),
        PrimitiveType::FloatArray => ParameterValue::FloatArray(vec![]),
        PrimitiveType::StringArray => ParameterValue::StringArray(vec![]),
        PrimitiveType::BlobRef => unreachable!("chains carry no blob fields"),
    })
}

fn as_type(v: ParameterValue, ty: PrimitiveType) -> ParameterValue {
    match (v, ty) {
        (ParameterValue::Int(i), PrimitiveType::Float) => ParameterValue::Float(i as f64),
        (ParameterValue::IntArray(a), PrimitiveType::FloatArray) => {
            ParameterValue::FloatArray(a.into_iter().map(|i| i as f64).collect())
        }
        (v, _) => v,
    }
}

/// Expected view of `values` (under `chain[src]`) at `chain[dst]`, or
/// `None` when some step along the way would change a shared field's type
/// other than Int→Float.
fn expected_view(chain: &[Vec<FieldSpec>], src: usize, dst: usize, values: &[ParameterValue]) -> Option<Vec<ParameterValue>> {
    let path: Vec<usize> = if src <= dst { (src..=dst).collect() } else { (dst..=src).rev().collect() };
    for pair in path.windows(2) {
        for a in &chain[pair[0]] {
            if let Some(b) = chain[pair[1]].iter().find(|b| b.name == a.name) {
                let widening = matches!(
                    (a.ty, b.ty),
                    (PrimitiveType::Int, PrimitiveType::Float) | (PrimitiveType::IntArray, PrimitiveType::FloatArray)
                );
                if a.ty != b.ty && !widening {
                    return None;
                }
            }
        }
    }
    let present = |i: usize, name: &str| chain[i].iter().find(|f| f.name == name);
    Some(
        chain[dst]
            .iter()
            .map(|field| {
                // Longest run of the path, ending at dst, in which the field exists.
                let mut start = path.len() - 1;
                while start > 0 && present(path[start - 1], &field.name).is_some() {
                    start -= 1;
                }
                let origin = if start == 0 {
                    let pos = chain[src].iter().position(|f| f.name == field.name).unwrap();
                    values[pos].clone()
                } else {
                    zero_or_default(present(path[start], &field.name).unwrap())
                };
                as_type(origin, field.ty)
            })
            .collect(),
    )
}

fn schema_evolution_matrix() -> Outcome {
    let dir = TempDir::new().unwrap();
    let s = fresh(&dir, "s");
    let mut r = rng(0xe701);
    let (mut views, mut rejected) = (0, 0);
    for case in 0..EVOLUTION_CASES {
        let class = format!("Evo{case}");
        let steps = r.random_range(1..=EVOLUTION_MAX_STEPS);
        let mut chain: Vec<Vec<FieldSpec>> =
            vec![(0..r.random_range(1..5)).map(|i| random_field(&mut r, format!("a{i}"), false)).collect()];
        let mut used: Vec<String> = chain[0].iter().map(|f| f.name.clone()).collect();
        for _ in 0..steps {
            let current = chain.last().unwrap().clone();
            let reusable: Vec<String> = used.iter().filter(|n| !current.iter().any(|f| &f.name == *n)).cloned().collect();
            let mut counter = used.len();
            let mut name_rng = rng(r.random());
            let next = common::evolve_fields(&mut r, &current, &mut || {
                if !reusable.is_empty() && name_rng.random_bool(0.4) {
                    reusable.choose(&mut name_rng).unwrap().clone()
                } else {
                    counter += 1;
                    format!("n{counter}")
                }
            });
            for f in &next {
                if !used.contains(&f.name) {
                    used.push(f.name.clone());
                }
            }
            chain.push(next);
        }
        let src = r.random_range(0..chain.len());
        let values: Vec<ParameterValue> = chain[src].iter().map(|f| random_value(&mut r, f.ty)).collect();
        let stored = s
            .transaction(|tx| {
                let mut stored = None;
                for (i, fields) in chain.iter().enumerate() {
                    let (_, v) = tx.register_class(&DictionaryDraft::new(class.clone(), fields.clone()))?;
                    assert_eq!(v as usize, i + 1);
                    if i == src {
                        stored = Some(tx.put_object(&class, "obj", &ScopePath::root(), &values)?);
                    }
                }
                Ok(stored.unwrap())
            })
            .map_err(|e| format!("case {case}: {e}"))?;
        for dst in 0..chain.len() {
            let got = materialize_view(&s, &stored, dst as u32 + 1);
            match (got, expected_view(&chain, src, dst, &values)) {
                (Ok(view), Some(want)) => {
                    ensure!(view.instance.values == want, "case {case} {src}->{dst}: got {:?}, want {want:?}", view.instance.values);
                    let dict = s.get_dictionary(&class, Some(dst as u32 + 1)).unwrap();
                    let report = validate_collection(&view.instance, &dict);
                    ensure!(report.is_clean(), "case {case} {src}->{dst}: view fails validation: {report}");
                    views += 1;
                }
                (Err(Error::IncompatibleEvolution { .. }), None) => rejected += 1,
                (got, want) => return Err(format!("case {case} {src}->{dst}: got {got:?}, want {want:?}")),
            }
        }
    }
    Ok(format!(
        "{EVOLUTION_CASES} chains, {views} views match the declarative oracle and validate, {rejected} narrowing views rejected as expected"
    ))
}

// ---------------------------------------------------------------------------

const REPLICATION_MUTATIONS: u64 = 600;
const REPLICATION_SPLITS: usize = 5;

fn replication_equivalence() -> Outcome {
    let dir = TempDir::new().unwrap();
    let master = fresh(&dir, "master");
    let mut r = rng(0x5eed);
    let mut splits: Vec<u64> = (0..REPLICATION_SPLITS).map(|_| r.random_range(1..REPLICATION_MUTATIONS)).collect();
    splits.sort_unstable();
    splits.dedup();
    // Export (0, i] while the master is at seq i.
    let mut early = Vec::new();
    for &i in &splits {
        random_mutations(&master, &mut r, i - master.current_seq());
        early.push((i, export_changes(&master, 0).map_err(|e| e.to_string())?));
    }
    random_mutations(&master, &mut r, REPLICATION_MUTATIONS - master.current_seq());
    let k = master.current_seq();
    let whole = export_changes(&master, 0).map_err(|e| e.to_string())?;
    ensure!(whole.encode() == export_changes(&master, 0).unwrap().encode(), "export is not deterministic");

    let one = Store::create_replica(dir.path().join("one"), None).unwrap();
    apply_changes(&one, &whole.encode()).map_err(|e| e.to_string())?;
    let want = fingerprint(&master);
    ensure!(fingerprint(&one) == want, "one-step replica differs from master");
    let one_log = std::fs::read(dir.path().join("one/changes.log")).unwrap();

    for (n, (i, first)) in early.iter().enumerate() {
        let second = export_changes(&master, *i).map_err(|e| e.to_string())?;
        let prefix = Changeset {
            to_seq: *i,
            records: whole.records[..*i as usize].to_vec(),
            ..whole.clone()
        };
        let suffix = Changeset {
            from_seq: *i,
            records: whole.records[*i as usize..].to_vec(),
            ..whole.clone()
        };
        ensure!(prefix.encode() == first.encode(), "split {i}: (0, {i}] changeset differs");
        ensure!(suffix.encode() == second.encode(), "split {i}: ({i}, {k}] changeset differs");
        let two = Store::create_replica(dir.path().join(format!("two{n}")), None).unwrap();
        apply_changes(&two, &first.encode()).map_err(|e| e.to_string())?;
        apply_changes(&two, &second.encode()).map_err(|e| e.to_string())?;
        ensure!(fingerprint(&two) == want, "split {i}: two-step replica differs");
        ensure!(
            std::fs::read(dir.path().join(format!("two{n}/changes.log"))).unwrap() == one_log,
            "split {i}: replica logs differ"
        );
    }
    Ok(format!(
        "{k} master mutations; replica matches {} read answers; splits at {splits:?} compose byte-for-byte",
        want.len()
    ))
}

// ---------------------------------------------------------------------------

const ADDRESS_ROUND_TRIPS: usize = 10_000;
const ADDRESS_MALFORMED: usize = 100;

fn random_address(r: &mut StdRng) -> OpaqueAddress {
    let version = |r: &mut StdRng| if r.random_bool(0.1) { u32::MAX } else { r.random_range(1..10_000) };
    let class_prefix = ["C", "_", "Tile_Ped", "x"][r.random_range(0..4)];
    let class = common::identifier(r, class_prefix);
    let instance_prefix = ["default", "i", "_"][r.random_range(0..3)];
    let instance = common::identifier(r, instance_prefix);
    let (v, d) = (version(r), version(r));
    OpaqueAddress::new(class, instance, v, d).unwrap()
}

/// A string that is certainly not a valid address, derived from a valid one.
fn malformed(r: &mut StdRng, valid: &str, addr: &OpaqueAddress) -> String {
    let q = valid.find('?').unwrap();
    match r.random_range(0..14) {
        0 => valid.replacen("nova://", ["http://", "nova:/", "NOVA://", ""][r.random_range(0..4)], 1),
        1 => valid[..r.random_range(0..q)].to_string(),
        2 => valid.replace(&format!("v={}", addr.object_version), "v=0"),
        3 => valid.replace(&format!("d={}", addr.dict_version), &format!("d=0{}", addr.dict_version)),
        4 => valid.replace(&format!("v={}", addr.object_version), "v=4294967296"),
        5 => valid.replace(&format!("&d={}", addr.dict_version), ""),
        6 => format!("{valid}&x=1"),
        7 => valid.replacen(&format!("/{}?", addr.instance_name), "/?", 1),
        8 => valid.replacen(&addr.class_name, &format!("{} ", addr.class_name), 1),
        9 => valid.replacen(&format!("/{}?", addr.instance_name), &format!("/{}/x?", addr.instance_name), 1),
        10 => valid.replace(&format!("v={}", addr.object_version), &format!("v=+{}", addr.object_version)),
        11 => valid.replace('?', "?d=1&"),
        12 => format!("{valid}\n"),
        _ => {
            let garbage: String = (0..r.random_range(0..30)).map(|_| r.random_range(' '..='~')).collect();
            format!("nova:/{garbage}")
        }
    }
}

fn address_round_trip() -> Outcome {
    let mut r = rng(0xadd7);
    for _ in 0..ADDRESS_ROUND_TRIPS {
        let a = random_address(&mut r);
        let s = externalize(&a);
        let back = internalize(&s).map_err(|e| format!("{s}: {e}"))?;
        ensure!(back == a, "{s} came back as {back:?}");
        ensure!(externalize(&back) == s, "{s} is not stable");
    }
    for _ in 0..ADDRESS_MALFORMED {
        let a = random_address(&mut r);
        let bad = malformed(&mut r, &externalize(&a), &a);
        match catch_unwind(|| internalize(&bad)) {
            Ok(Err(Error::MalformedAddress(_))) => {}
            Ok(other) => return Err(format!("{bad:?} gave {other:?}")),
            Err(_) => return Err(format!("{bad:?} panicked")),
        }
    }
    // Random byte edits: anything still accepted must be the canonical form.
    let mut accepted = 0;
    for _ in 0..ADDRESS_ROUND_TRIPS {
        let a = random_address(&mut r);
        let mut bytes = externalize(&a).into_bytes();
        let at = r.random_range(0..bytes.len());
        match r.random_range(0..3) {
            0 => bytes[at] = r.random_range(b' '..=b'~'),
            1 => {
                bytes.remove(at);
            }
            _ => bytes.insert(at, r.random_range(b' '..=b'~')),
        }
        let text = String::from_utf8(bytes).unwrap();
        match catch_unwind(|| internalize(&text)) {
            Ok(Ok(parsed)) => {
                ensure!(externalize(&parsed) == text, "{text:?} accepted as non-canonical {parsed:?}");
                accepted += 1;
            }
            Ok(Err(Error::MalformedAddress(_))) => {}
            Ok(Err(e)) => return Err(format!("{text:?} gave {e:?}")),
            Err(_) => return Err(format!("{text:?} panicked")),
        }
    }
    Ok(format!(
        "{ADDRESS_ROUND_TRIPS} round-trips exact; {ADDRESS_MALFORMED} malformed cases rejected; {ADDRESS_ROUND_TRIPS} random edits never panic ({accepted} still canonical)"
    ))
}

// ---------------------------------------------------------------------------

const DUAL_FIXTURES: usize = 100;

fn dual_access_equivalence() -> Outcome {
    let dir = TempDir::new().unwrap();
    let registry = ConverterRegistry::with_generic_default();
    let mut r = rng(0xd0a1);
    let mut tagged = 0;
    for fixture in 0..DUAL_FIXTURES {
        let s = fresh(&dir, &format!("f{fixture}"));
        let mut folders = Vec::new();
        while folders.is_empty() {
            random_mutations(&s, &mut r, 40);
            folders = s
                .folders()
                .into_iter()
                .filter(|f| !s.iov_list(&f.path, HEAD).unwrap().is_empty())
                .map(|f| f.path)
                .collect();
        }
        let folder = folders.choose(&mut r).unwrap();
        let tags = s.tags(folder).unwrap();
        let tag = tags.choose(&mut r).unwrap().clone();
        tagged += usize::from(tag != HEAD);
        let entries = s.iov_list(folder, &tag).unwrap();
        let entry = entries.choose(&mut r).unwrap();
        let span = entry.interval.until.0.saturating_sub(entry.interval.since.0).clamp(1, 1000);
        let t = Timestamp(entry.interval.since.0 + r.random_range(0..span));
        let ctx = RetrievalContext::at(t).with_tag(tag.clone());

        let via_folder: Arc<GenericObject> = retrieve_as(&s, &registry, &mut TransientStore::new(), folder, &ctx)
            .map_err(|e| format!("fixture {fixture} {folder}@{tag} {t}: {e}"))?;
        let address = s.iov_resolve(folder, &tag, t).map_err(|e| e.to_string())?;
        let via_address: Arc<GenericObject> =
            retrieve_as(&s, &registry, &mut TransientStore::new(), &address, &RetrievalContext::at(Timestamp(0)))
                .map_err(|e| format!("fixture {fixture} {address}: {e}"))?;
        ensure!(via_folder == via_address, "fixture {fixture}: {folder}@{tag} {t} differs from {address}");
        ensure!(address == entry.payload, "fixture {fixture}: resolved {address}, listed {}", entry.payload);
    }
    Ok(format!(
        "{DUAL_FIXTURES} random fixtures ({tagged} through snapshot tags): folder and direct-address retrieval agree"
    ))
}
