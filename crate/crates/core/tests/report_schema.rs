//! Reports against the published JSON Schema and the strict parser.

use conic_cert::harness::corpus::{bundled_corpus_dir, run_corpus};
use conic_cert::harness::report::ReportDocument;
use serde_json::Value;

fn schema() -> Value {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/schema/conic-cert-report-1.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn corpus_json() -> String {
    run_corpus(&bundled_corpus_dir(), 2, 7).unwrap().to_json().unwrap()
}

#[test]
fn corpus_report_validates() {
    let validator = jsonschema::validator_for(&schema()).unwrap();
    let instance: Value = serde_json::from_str(&corpus_json()).unwrap();
    let errors: Vec<String> = validator.iter_errors(&instance).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

#[test]
fn schema_rejects_unknown_fields_and_versions() {
    let validator = jsonschema::validator_for(&schema()).unwrap();
    let mut instance: Value = serde_json::from_str(&corpus_json()).unwrap();
    instance["problems"][0]["surprise"] = Value::Bool(true);
    assert!(!validator.is_valid(&instance));
    let mut instance: Value = serde_json::from_str(&corpus_json()).unwrap();
    instance["schema"] = Value::String("conic-cert-report/2".into());
    assert!(!validator.is_valid(&instance));
}

#[test]
fn report_round_trips() {
    let text = corpus_json();
    let doc = ReportDocument::from_json(&text).unwrap();
    assert_eq!(doc.to_json().unwrap(), text);
}

#[test]
fn strict_parser_rejects_bad_documents() {
    let text = corpus_json();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["extra"] = Value::Null;
    assert!(ReportDocument::from_json(&v.to_string()).is_err());
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["schema"] = Value::String("other/1".into());
    assert!(ReportDocument::from_json(&v.to_string()).is_err());
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v.as_object_mut().unwrap().remove("config");
    assert!(ReportDocument::from_json(&v.to_string()).is_err());
}
