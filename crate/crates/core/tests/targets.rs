use std::path::{Path, PathBuf};
use std::sync::Arc;

use qcoh::gw::GwStore;
use qcoh::targets::{load_target, load_target_str};
use qcoh::Error;

fn targets_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../targets")
}

#[test]
fn shipped_targets_load() {
    let mut count = 0;
    for entry in std::fs::read_dir(targets_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let model = load_target(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(model.pairing.is_symmetric(), "{}", path.display());
            GwStore::new(Arc::new(model)).unwrap();
            count += 1;
        }
    }
    assert_eq!(count, 10);
}

#[test]
fn blowup_ranks() {
    let m = load_target(&targets_dir().join("blpt_p2.json")).unwrap();
    let b = m.blowup.as_ref().unwrap();
    assert_eq!(m.len(), b.base.len() + (b.r as usize - 1) * b.center.len());
    assert_eq!(m.class_name(b.exceptional_index), "E");
}

#[test]
fn malformed_documents_are_config_errors() {
    let dir = targets_dir();
    let e = load_target_str("{ not json", &dir, "x").unwrap_err();
    assert!(e.is_config(), "{e}");
    let e = load_target(&dir.join("does_not_exist.json")).unwrap_err();
    assert!(matches!(e, Error::Config(_)));
    let e = load_target_str(r#"{"basis": [{"name": "1", "degree": 0}], "pairing": [[0]]}"#, &dir, "x").unwrap_err();
    assert!(e.is_config() || matches!(e, Error::Structure(_) | Error::NotInvertible(_)), "{e}");
}
