//! One file through the whole pipeline: parse, lower, label, sense, detect.

use std::collections::BTreeSet;

use serde_json::{json, Value};

use crate::detector::{self, ContractReport, DefectKind, Finding, Note, ScanReport};
use crate::frontend::{parse_source, ParseOptions, SourceFile};
use crate::ir::{lower, ContractUnit};
use crate::pdg::{self, Pdg};
use crate::sensors::{self, SensitiveFacts, SensorOptions};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisOptions {
    pub rules: BTreeSet<DefectKind>,
    pub sensors: SensorOptions,
    pub parse: ParseOptions,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { rules: DefectKind::ALL.into(), sensors: SensorOptions::default(), parse: ParseOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct UnitAnalysis {
    pub unit: ContractUnit,
    pub pdg: Pdg,
    pub facts: SensitiveFacts,
    pub findings: Vec<Finding>,
    pub notes: Vec<Note>,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: ScanReport,
    pub units: Vec<UnitAnalysis>,
}

pub fn analyze_unit(unit: ContractUnit, opts: &AnalysisOptions) -> UnitAnalysis {
    let token = sensors::detect_token(&unit);
    let pdg = pdg::build(&unit, &token.balance_vars);
    let facts = sensors::analyze(&unit, token, &pdg.privilege, opts.sensors);
    let findings = detector::run_rules(&unit, &pdg, &facts, &opts.rules);
    let notes = detector::unguarded_notes(&unit, &pdg, &facts);
    UnitAnalysis { unit, pdg, facts, findings, notes }
}

/// Files with error diagnostics are reported with no contracts.
pub fn analyze(file: &SourceFile, opts: &AnalysisOptions) -> Analysis {
    let ast = parse_source(&file.content, &opts.parse);
    let mut diagnostics = ast.diagnostics.clone();
    let mut units = Vec::new();
    if !ast.has_errors() {
        let lowered = lower(&ast);
        diagnostics.extend(lowered.diagnostics);
        units = lowered.units.into_iter().map(|u| analyze_unit(u, opts)).collect();
    }
    diagnostics.sort_by(|a, b| (a.span, &a.message).cmp(&(b.span, &b.message)));
    diagnostics.dedup();
    let contracts = units
        .iter()
        .map(|a| ContractReport {
            name: a.unit.name.clone(),
            defects: detector::defect_flags(&a.findings),
            findings: a.findings.clone(),
            notes: a.notes.clone(),
        })
        .collect();
    let report = ScanReport { file: file.path.to_string_lossy().replace('\\', "/"), content_hash: file.content_hash, contracts, diagnostics };
    Analysis { report, units }
}

pub fn scan_source(file: &SourceFile, opts: &AnalysisOptions) -> ScanReport {
    analyze(file, opts).report
}

/// Convenience for in-memory text.
pub fn scan_str(src: &str, opts: &AnalysisOptions) -> ScanReport {
    scan_source(&SourceFile::new("<input>", src), opts)
}

/// Per-function permission graphs of every unit.
pub fn dump_pdg(a: &Analysis) -> Value {
    Value::Array(a.units.iter().flat_map(|u| pdg::dump(&u.unit, &u.pdg)).collect())
}

/// Per-unit sensitive facts and taint.
pub fn dump_facts(a: &Analysis) -> Value {
    Value::Array(
        a.units
            .iter()
            .map(|u| {
                json!({
                    "contract": u.unit.name,
                    "privilege_set": u.pdg.privilege.members,
                    "facts": u.facts,
                })
            })
            .collect(),
    )
}
