mod common;

use std::path::Path;

use common::rng;
use woodtrace::handoff::HandoffError;
use woodtrace::hash::{genesis_id, GENESIS_ID_DECIMAL};
use woodtrace::ledger::{LedgerError, Rejection};
use woodtrace::relation::RelationError;
use woodtrace::workflow::{
    cmd_bench, cmd_derive, cmd_handoff, cmd_keygen, cmd_plant, cmd_setup, cmd_trace, WorkflowError,
    WorkspaceConfig,
};

fn workspace(dir: &Path, actor: &str) -> WorkspaceConfig {
    WorkspaceConfig {
        ledger_path: dir.join("ledger.json"),
        keys_path: dir.join(format!("{actor}.keys.json")),
        proving_key_path: dir.join("custody.pk"),
        verification_key_path: dir.join("custody.vk"),
        strict_parent: true,
    }
}

struct Scene {
    _dir: tempfile::TempDir,
    forest: WorkspaceConfig,
    mill: WorkspaceConfig,
}

impl Scene {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let forest = workspace(dir.path(), "forest");
        let mill = workspace(dir.path(), "mill");
        cmd_setup(&forest, &mut rng(42)).unwrap();
        cmd_keygen(&forest, &mut rng(1)).unwrap();
        cmd_keygen(&mill, &mut rng(2)).unwrap();
        Scene {
            _dir: dir,
            forest,
            mill,
        }
    }

    fn path(&self, name: &str) -> std::path::PathBuf {
        self._dir.path().join(name)
    }
}

#[test]
fn tree_to_log() {
    let s = Scene::new();
    let mut r = rng(3);
    let tree = cmd_plant(&s.forest, &s.path("tree.wtag"), &mut r).unwrap();
    assert_eq!(tree.p_id, GENESIS_ID_DECIMAL);
    assert_eq!(tree.ledger_records, 1);

    let handoff = cmd_handoff(&s.forest, &s.path("tree.wtag")).unwrap();
    assert!(handoff.starts_with("WHND1."));
    // Only the custodian's key opens the tag.
    assert!(matches!(
        cmd_handoff(&s.mill, &s.path("tree.wtag")),
        Err(WorkflowError::Tag(_))
    ));

    let log = cmd_derive(&s.mill, &handoff, &s.path("log.wtag"), &mut r).unwrap();
    assert_eq!(log.p_id, tree.w_id);
    assert_eq!(log.ledger_records, 2);

    let trace = cmd_trace(&s.mill, &log.w_id).unwrap();
    assert!(trace.verified);
    assert_eq!(trace.chain.len(), 2);
    assert_eq!(trace.chain[1].p_id, genesis_id());
    assert_eq!(trace.chain[0].p_id, trace.chain[1].w_id);
    assert_eq!(trace.registrants[0].to_string(), log.registrant);
    assert_eq!(trace.registrants[1].to_string(), tree.registrant);
}

#[test]
fn two_children_of_one_parent() {
    let s = Scene::new();
    let mut r = rng(4);
    let tree = cmd_plant(&s.forest, &s.path("tree.wtag"), &mut r).unwrap();
    let handoff = cmd_handoff(&s.forest, &s.path("tree.wtag")).unwrap();
    let a = cmd_derive(&s.mill, &handoff, &s.path("a.wtag"), &mut r).unwrap();
    let b = cmd_derive(&s.mill, &handoff, &s.path("b.wtag"), &mut r).unwrap();
    assert_ne!(a.w_id, b.w_id);
    let ledger = s.mill.load_ledger().unwrap();
    let kids: Vec<_> = ledger
        .children(&tree.w_id.parse().unwrap())
        .iter()
        .map(|r| r.w_id.to_string())
        .collect();
    assert_eq!(kids, vec![a.w_id, b.w_id]);
}

#[test]
fn two_plants_are_distinct_trees() {
    let s = Scene::new();
    let mut r = rng(5);
    let a = cmd_plant(&s.forest, &s.path("a.wtag"), &mut r).unwrap();
    let b = cmd_plant(&s.forest, &s.path("b.wtag"), &mut r).unwrap();
    assert_ne!(a.w_id, b.w_id);
    assert_eq!(
        s.forest
            .load_ledger()
            .unwrap()
            .children(&genesis_id())
            .len(),
        2
    );
}

#[test]
fn mutated_handoff_leaves_ledger_untouched() {
    let s = Scene::new();
    let mut r = rng(6);
    cmd_plant(&s.forest, &s.path("tree.wtag"), &mut r).unwrap();
    let before = std::fs::read(&s.forest.ledger_path).unwrap();
    let handoff = cmd_handoff(&s.forest, &s.path("tree.wtag")).unwrap();
    let mut chars: Vec<char> = handoff.chars().collect();
    let i = 40;
    chars[i] = if chars[i] == 'A' { 'B' } else { 'A' };
    let mutated: String = chars.into_iter().collect();
    let err = cmd_derive(&s.mill, &mutated, &s.path("log.wtag"), &mut r).unwrap_err();
    assert!(matches!(
        err,
        WorkflowError::Handoff(HandoffError::ConsistencyError | HandoffError::BadEncoding)
    ));
    assert_eq!(err.exit_code(), 1);
    assert_eq!(std::fs::read(&s.forest.ledger_path).unwrap(), before);
    assert!(!s.path("log.wtag").exists());
}

#[test]
fn missing_proving_key_names_the_path() {
    let s = Scene::new();
    let mut cfg = s.forest.clone();
    cfg.proving_key_path = s.path("nowhere.pk");
    let err = cmd_plant(&cfg, &s.path("tree.wtag"), &mut rng(7)).unwrap_err();
    assert!(matches!(
        err,
        WorkflowError::Relation(RelationError::Io { .. })
    ));
    assert!(err.to_string().contains("nowhere.pk"));
    assert_eq!(err.exit_code(), 2);
    assert!(!s.path("tree.wtag").exists());
    assert!(!s.forest.ledger_path.exists());
}

#[test]
fn existing_files_are_not_clobbered() {
    let s = Scene::new();
    let mut r = rng(8);
    assert!(matches!(
        cmd_keygen(&s.forest, &mut r),
        Err(WorkflowError::AlreadyExists { .. })
    ));
    cmd_plant(&s.forest, &s.path("tree.wtag"), &mut r).unwrap();
    let tag = std::fs::read(s.path("tree.wtag")).unwrap();
    assert!(matches!(
        cmd_plant(&s.forest, &s.path("tree.wtag"), &mut r),
        Err(WorkflowError::AlreadyExists { .. })
    ));
    assert_eq!(std::fs::read(s.path("tree.wtag")).unwrap(), tag);
    assert_eq!(s.forest.load_ledger().unwrap().len(), 1);
}

#[test]
fn seeded_setup_is_byte_identical() {
    let s = Scene::new();
    let pk1 = std::fs::read(&s.forest.proving_key_path).unwrap();
    let vk1 = std::fs::read(&s.forest.verification_key_path).unwrap();
    let report = cmd_setup(&s.forest, &mut rng(42)).unwrap();
    assert_eq!(std::fs::read(&s.forest.proving_key_path).unwrap(), pk1);
    assert_eq!(std::fs::read(&s.forest.verification_key_path).unwrap(), vk1);
    assert_eq!(report.constraints, 731);

    cmd_plant(&s.forest, &s.path("tree.wtag"), &mut rng(9)).unwrap();
    let ledger: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&s.forest.ledger_path).unwrap()).unwrap();
    assert_eq!(
        ledger["verification_key_fingerprint"],
        report.verification_key_fingerprint
    );
}

#[test]
fn trace_errors() {
    let s = Scene::new();
    cmd_plant(&s.forest, &s.path("tree.wtag"), &mut rng(10)).unwrap();
    let err = cmd_trace(&s.forest, "12345").unwrap_err();
    assert!(matches!(
        err,
        WorkflowError::Ledger(LedgerError::NotFound(_))
    ));
    assert_ne!(err.exit_code(), 0);
    assert!(cmd_trace(&s.forest, "not-a-number").is_err());
}

#[test]
fn replayed_handoff_from_foreign_ledger_is_unknown_parent() {
    let s = Scene::new();
    let mut r = rng(11);
    cmd_plant(&s.forest, &s.path("tree.wtag"), &mut r).unwrap();
    let handoff = cmd_handoff(&s.forest, &s.path("tree.wtag")).unwrap();
    let mut other = s.mill.clone();
    other.ledger_path = s.path("other-ledger.json");
    let err = cmd_derive(&other, &handoff, &s.path("log.wtag"), &mut r).unwrap_err();
    assert!(matches!(
        err,
        WorkflowError::Ledger(LedgerError::Rejected(Rejection::UnknownParent))
    ));
    other.strict_parent = false;
    cmd_derive(&other, &handoff, &s.path("log.wtag"), &mut r).unwrap();
}

#[test]
fn bench_reports_sane_numbers() {
    let s = Scene::new();
    let report = cmd_bench(&s.forest, 3, &mut rng(12)).unwrap();
    assert_eq!(report.timings_ms.len(), 3);
    assert!(report.all_verified);
    assert!(report.timings_ms.iter().all(|t| t.is_finite() && *t > 0.0));
    assert!(report.min_ms <= report.median_ms && report.median_ms <= report.max_ms);
    assert_eq!(report.constraints, 731);
}
