//! SARIF 2.1.0 output.

use serde_json::{json, Map, Value};

use crate::detector::DefectKind;
use crate::frontend::{Severity, Span};

use super::run::{BatchReport, TOOL_NAME, TOOL_VERSION};

pub const SCHEMA_URI: &str = "https://json.schemastore.org/sarif-2.1.0.json";

fn rule_name(k: DefectKind) -> String {
    k.title().split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).map(|w| {
        let mut cs = w.chars();
        cs.next().map(|c| c.to_ascii_uppercase().to_string() + cs.as_str()).unwrap_or_default()
    }).collect()
}

fn location(uri: &str, span: Span, message: Option<&str>) -> Value {
    let mut phys = Map::new();
    phys.insert("artifactLocation".into(), json!({ "uri": uri }));
    if span.line > 0 {
        phys.insert(
            "region".into(),
            json!({
                "startLine": span.line,
                "startColumn": span.col.max(1),
                "byteOffset": span.start,
                "byteLength": span.len(),
            }),
        );
    }
    let mut loc = Map::new();
    loc.insert("physicalLocation".into(), Value::Object(phys));
    if let Some(m) = message {
        loc.insert("message".into(), json!({ "text": m }));
    }
    Value::Object(loc)
}

pub fn to_sarif(r: &BatchReport) -> Value {
    let rules: Vec<Value> = DefectKind::ALL
        .iter()
        .map(|k| {
            json!({
                "id": k.code(),
                "name": rule_name(*k),
                "shortDescription": { "text": k.title() },
                "fullDescription": { "text": k.description() },
                "help": { "text": k.remediation() },
                "defaultConfiguration": { "level": "warning" },
            })
        })
        .collect();

    let mut results = Vec::new();
    let mut notifications = Vec::new();
    for rep in &r.reports {
        for d in &rep.diagnostics {
            let level = match d.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
                Severity::Info => "note",
            };
            notifications.push(json!({
                "level": level,
                "message": { "text": d.message },
                "locations": [location(&rep.file, d.span, None)],
            }));
        }
        for c in &rep.contracts {
            for f in &c.findings {
                let index = DefectKind::ALL.iter().position(|k| *k == f.kind).unwrap_or(0);
                let related: Vec<Value> = f
                    .evidence
                    .iter()
                    .enumerate()
                    .map(|(i, e)| {
                        let mut l = location(&rep.file, e.span, Some(&format!("{}: {}", e.premise, e.note)));
                        l["id"] = json!(i);
                        l
                    })
                    .collect();
                let mut res = json!({
                    "ruleId": f.kind.code(),
                    "ruleIndex": index,
                    "level": "warning",
                    "message": { "text": format!("{}: {} in {}.{}", f.kind.title(), f.kind.description(), c.name, f.subject) },
                    "locations": [location(&rep.file, f.span, None)],
                    "relatedLocations": related,
                    "properties": {
                        "contract": c.name,
                        "subject": f.subject,
                        "ruleTrace": f.rule_trace,
                        "remediation": f.remediation,
                    },
                });
                if let Some(v) = &f.variable {
                    res["properties"]["variable"] = json!(v);
                }
                if let Some(s) = &f.suppressed_by_crosschain {
                    res["suppressions"] = json!([{ "kind": "external", "justification": s }]);
                }
                results.push(res);
            }
        }
    }
    for e in &r.corpus.io_errors {
        notifications.push(json!({
            "level": "error",
            "message": { "text": e.message },
            "locations": [location(&e.path, Span::default(), None)],
        }));
    }
    let artifacts: Vec<Value> = r
        .reports
        .iter()
        .map(|rep| json!({ "location": { "uri": rep.file }, "hashes": { "sha-256": rep.content_hash.to_hex() } }))
        .collect();

    json!({
        "$schema": SCHEMA_URI,
        "version": "2.1.0",
        "runs": [{
            "tool": { "driver": {
                "name": TOOL_NAME,
                "version": TOOL_VERSION,
                "rules": rules,
            }},
            "invocations": [{
                "executionSuccessful": !r.has_errors(),
                "toolExecutionNotifications": notifications,
            }],
            "artifacts": artifacts,
            "results": results,
        }],
    })
}

pub fn to_sarif_string(r: &BatchReport) -> String {
    let mut s = serde_json::to_string_pretty(&to_sarif(r)).expect("sarif serializes");
    s.push('\n');
    s
}
