use std::ffi::{CStr, CString};
use std::ptr;

use cfaudit_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = cfa_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

const CORPUS: &str = r#"{"id": "1", "text": "the movie was great", "label": 1}
{"id": "2", "text": "the movie was awful", "label": 0}
{"id": "3", "text": "he said it was great", "label": 1}
{"id": "4", "text": "she said it was awful", "label": 0}
{"id": "5", "text": "a great great film", "label": 1}
{"id": "6", "text": "an awful awful film", "label": 0}
"#;

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(cfa_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn generate_roundtrip() {
    unsafe {
        let mut lex = ptr::null_mut();
        assert_eq!(cfa_lexicon_builtin(&mut lex), CfaStatus::Ok);
        let mut n = 0usize;
        assert_eq!(cfa_lexicon_len(lex, &mut n), CfaStatus::Ok);
        assert!(n > 0);

        let mut out = ptr::null_mut();
        let status = cfa_generate(lex, c("d1").as_ptr(), c("he went to church").as_ptr(), 7, true, &mut out);
        assert_eq!(status, CfaStatus::Ok);
        let json = CStr::from_ptr(out).to_str().unwrap().to_owned();
        cfa_string_free(out);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let arr = v.as_array().unwrap();
        assert!(!arr.is_empty());
        assert!(arr.iter().all(|r| r["parent_id"] == "d1"));
        assert!(arr.iter().any(|r| r["text"].as_str().unwrap().starts_with("she")));
        cfa_lexicon_free(lex);
    }
}

#[test]
fn null_and_bad_arguments() {
    unsafe {
        let mut out = ptr::null_mut();
        let st = cfa_generate(ptr::null(), c("d").as_ptr(), c("x").as_ptr(), 0, true, &mut out);
        assert_eq!(st, CfaStatus::NullPointer);
        assert!(last_error().contains("lexicon"));

        let mut model = ptr::null_mut();
        let st = cfa_model_train(c(CORPUS).as_ptr(), c("forest").as_ptr(), 1, &mut model);
        assert_eq!(st, CfaStatus::InvalidArgument);
        assert!(last_error().contains("forest"));

        let st = cfa_model_load(c("/nonexistent/model.json").as_ptr(), &mut model);
        assert_eq!(st, CfaStatus::Io);

        let st = cfa_model_train(c("not json").as_ptr(), c("logreg").as_ptr(), 1, &mut model);
        assert_eq!(st, CfaStatus::Corpus);

        let bad = [0xffu8, 0];
        let st = cfa_model_train(bad.as_ptr().cast(), c("logreg").as_ptr(), 1, &mut model);
        assert_eq!(st, CfaStatus::InvalidUtf8);

        cfa_lexicon_free(ptr::null_mut());
        cfa_model_free(ptr::null_mut());
        cfa_string_free(ptr::null_mut());
    }
}

#[test]
fn train_predict_persist_audit() {
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(
            cfa_model_train(c(CORPUS).as_ptr(), c("logreg").as_ptr(), 3, &mut model),
            CfaStatus::Ok
        );
        let mut p = 0.0;
        assert_eq!(cfa_model_predict_proba(model, c("great").as_ptr(), &mut p), CfaStatus::Ok);
        let mut q = 0.0;
        cfa_model_predict_proba(model, c("awful").as_ptr(), &mut q);
        assert!((0.0..=1.0).contains(&p) && p > q);

        let mut json = ptr::null_mut();
        assert_eq!(cfa_model_to_json(model, &mut json), CfaStatus::Ok);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        std::fs::write(&path, CStr::from_ptr(json).to_bytes()).unwrap();
        cfa_string_free(json);

        let mut loaded = ptr::null_mut();
        let cpath = c(path.to_str().unwrap());
        assert_eq!(cfa_model_load(cpath.as_ptr(), &mut loaded), CfaStatus::Ok);
        let mut p2 = 0.0;
        cfa_model_predict_proba(loaded, c("great").as_ptr(), &mut p2);
        assert_eq!(p, p2);

        let mut lex = ptr::null_mut();
        cfa_lexicon_builtin(&mut lex);
        let mut fr = -1.0;
        assert_eq!(cfa_flip_rate(loaded, lex, c(CORPUS).as_ptr(), 42, true, &mut fr), CfaStatus::Ok);
        assert!((0.0..=100.0).contains(&fr));

        cfa_lexicon_free(lex);
        cfa_model_free(model);
        cfa_model_free(loaded);
    }
}

#[test]
fn metrics() {
    assert!((cfa_cfi(50.0, 10.0) - 80.0).abs() < 1e-12);
    assert_eq!(cfa_cfi(0.0, 0.0), 0.0);
    assert!((cfa_accuracy_drop(0.9, 0.85) - 5.0).abs() < 1e-9);
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/cfaudit.h");
    for name in [
        "cfa_last_error", "cfa_version", "cfa_string_free", "cfa_lexicon_builtin",
        "cfa_lexicon_load", "cfa_lexicon_len", "cfa_lexicon_free", "cfa_generate",
        "cfa_model_load", "cfa_model_train", "cfa_model_to_json", "cfa_model_predict_proba",
        "cfa_model_free", "cfa_flip_rate", "cfa_cfi", "cfa_accuracy_drop",
    ] {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
}
