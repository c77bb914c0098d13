use std::fs;
use std::sync::Arc;

use divbench_store::{verify_run, Artifact, ArtifactKind, FindingKind, RunHeader, RunStore};
use proptest::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ScoreRecord {
    sample_id: String,
    source: String,
    temperature: Option<f64>,
    score: Option<f64>,
    scoreable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SampleRecord {
    sample_id: String,
    campaign: String,
    temperature: Option<f64>,
    reply: String,
    outcome: serde_json::Value,
}

fn header() -> RunHeader {
    RunHeader::new("0.1.0", "cfg-1").with_fingerprint("embedding_table", "feed")
}

fn sample(id: &str) -> SampleRecord {
    SampleRecord {
        sample_id: id.to_string(),
        campaign: "c".into(),
        temperature: Some(1.0),
        reply: format!("reply for {id}"),
        outcome: serde_json::json!({"words": ["a", "b"]}),
    }
}

fn scores_artifact() -> Artifact {
    Artifact::named(ArtifactKind::Scores, "dat").unwrap()
}

fn seeded_run(root: &std::path::Path) -> RunStore {
    let store = RunStore::open(root, "run", header()).unwrap();
    let samples: Vec<SampleRecord> = (0..5).map(|i| sample(&format!("s{i}"))).collect();
    store.write_records(&Artifact::samples(), &samples).unwrap();
    let scores: Vec<ScoreRecord> = (0..5)
        .map(|i| ScoreRecord {
            sample_id: format!("s{i}"),
            source: "m".into(),
            temperature: Some(1.0),
            score: Some(70.0 + i as f64),
            scoreable: true,
        })
        .collect();
    store.replace_records(&scores_artifact(), &scores).unwrap();
    store
        .write_document(
            &Artifact::named(ArtifactKind::Summary, "dat").unwrap(),
            &serde_json::json!({"n": 5}),
            &["scores_dat.csv".to_string()],
        )
        .unwrap();
    store
}

#[test]
fn hundred_score_records_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let store = RunStore::open(tmp.path(), "run", header()).unwrap();
    let recs: Vec<ScoreRecord> = (0..100)
        .map(|i| ScoreRecord {
            sample_id: format!("s{i:03}"),
            source: if i % 2 == 0 { "human".into() } else { "model, \"x\"".into() },
            temperature: if i % 3 == 0 { None } else { Some(0.5 * (i % 4) as f64) },
            score: if i % 7 == 0 { None } else { Some(i as f64 / 3.0) },
            scoreable: i % 7 != 0,
        })
        .collect();
    store.write_records(&scores_artifact(), &recs).unwrap();
    let back: Vec<ScoreRecord> = store.read_records(&scores_artifact()).unwrap();
    assert_eq!(back, recs);
}

#[test]
fn untouched_run_verifies() {
    let tmp = tempfile::tempdir().unwrap();
    seeded_run(tmp.path());
    let report = verify_run(tmp.path(), "run").unwrap();
    assert!(report.passed, "{:?}", report.findings);
    assert_eq!(report.files_checked, 3);
}

#[test]
fn flipped_byte_names_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let store = seeded_run(tmp.path());
    let path = store.path_of(&scores_artifact());
    let mut bytes = fs::read(&path).unwrap();
    let last = bytes.len() - 3;
    bytes[last] ^= 0x01;
    fs::write(&path, bytes).unwrap();
    let report = verify_run(tmp.path(), "run").unwrap();
    assert!(!report.passed);
    assert!(report
        .findings
        .iter()
        .any(|f| f.kind == FindingKind::HashMismatch && f.file.as_deref() == Some("scores_dat.csv")));
}

#[test]
fn dangling_sample_reference_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let store = seeded_run(tmp.path());
    let bad = vec![ScoreRecord {
        sample_id: "ghost".into(),
        source: "m".into(),
        temperature: None,
        score: Some(1.0),
        scoreable: true,
    }];
    store.write_records(&scores_artifact(), &bad).unwrap();
    let report = verify_run(tmp.path(), "run").unwrap();
    let dangling: Vec<_> = report
        .findings
        .iter()
        .filter(|f| f.kind == FindingKind::DanglingReference)
        .collect();
    assert_eq!(dangling.len(), 1);
    assert!(dangling[0].message.contains("ghost"));
}

#[test]
fn missing_manifest_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(verify_run(tmp.path(), "nothing").is_err());
}

#[test]
fn concurrent_writers_of_two_kinds() {
    let tmp = tempfile::tempdir().unwrap();
    let store = Arc::new(RunStore::open(tmp.path(), "run", header()).unwrap());
    let a = {
        let store = Arc::clone(&store);
        std::thread::spawn(move || {
            for i in 0..200 {
                store.write_records(&Artifact::samples(), &[sample(&format!("s{i}"))]).unwrap();
            }
        })
    };
    let b = {
        let store = Arc::clone(&store);
        std::thread::spawn(move || {
            for i in 0..200 {
                let r = ScoreRecord {
                    sample_id: format!("s{i}"),
                    source: "m".into(),
                    temperature: Some(1.0),
                    score: Some(i as f64),
                    scoreable: true,
                };
                store.write_records(&scores_artifact(), &[r]).unwrap();
            }
        })
    };
    a.join().unwrap();
    b.join().unwrap();
    let m = store.manifest();
    assert_eq!(m.files["samples.jsonl"].rows, 200);
    assert_eq!(m.files["scores_dat.csv"].rows, 200);
    let samples: Vec<SampleRecord> = store.read_records(&Artifact::samples()).unwrap();
    assert_eq!(samples.len(), 200);
    let report = verify_run(tmp.path(), "run").unwrap();
    assert!(report.passed, "{:?}", report.findings);
}

#[test]
fn reopen_refuses_tampered_table() {
    let tmp = tempfile::tempdir().unwrap();
    let store = seeded_run(tmp.path());
    let path = store.path_of(&scores_artifact());
    drop(store);
    let mut text = fs::read_to_string(&path).unwrap();
    text.push_str("s9,m,,1,true\n");
    fs::write(&path, text).unwrap();
    assert!(RunStore::open(tmp.path(), "run", header()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn csv_round_trip(rows in prop::collection::vec(
        ("[a-z0-9]{1,8}", ".{0,20}", prop::option::of(-1e6f64..1e6), prop::option::of(0.0f64..2.0), any::<bool>()),
        1..40,
    )) {
        let tmp = tempfile::tempdir().unwrap();
        let store = RunStore::open(tmp.path(), "run", header()).unwrap();
        let recs: Vec<ScoreRecord> = rows
            .into_iter()
            .map(|(id, source, score, temperature, scoreable)| ScoreRecord { sample_id: id, source, temperature, score, scoreable })
            .collect();
        store.replace_records(&scores_artifact(), &recs).unwrap();
        let back: Vec<ScoreRecord> = store.read_records(&scores_artifact()).unwrap();
        prop_assert_eq!(back, recs);
    }
}
