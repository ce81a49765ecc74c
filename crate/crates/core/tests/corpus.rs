mod common;

use cdsentry::detector::DefectKind;
use common::*;

fn assert_outcome(o: Outcome) {
    assert!(o.ok, "{}", o.detail);
}

#[test]
fn canonical_contracts_give_exactly_their_defects() {
    assert_outcome(canonical_fidelity());
}

#[test]
fn each_fix_pattern_removes_its_defect() {
    assert_outcome(remediation_fidelity());
}

#[test]
fn labeled_corpus_agrees_with_labels() {
    assert_outcome(labeled_corpus());
}

#[test]
fn mint_finding_carries_the_full_argument() {
    let r = scan_corpus_file("canonical_mint.sol");
    let f = r.findings().next().unwrap();
    assert_eq!(f.kind, DefectKind::MFS);
    assert_eq!(f.subject, "mint(address,uint256)");
    let premises: Vec<&str> = f.evidence.iter().map(|e| e.premise.as_str()).collect();
    for p in ["token", "mint", "limited-public", "no-multisig"] {
        assert!(premises.contains(&p), "missing {p} in {premises:?}");
    }
    assert_eq!(f.rule_trace, ["limited-dominance", "limited-public", "MFS"]);
    assert_eq!(f.remediation, DefectKind::MFS.remediation());
    // the balance update is the mint evidence
    let mint = f.evidence.iter().find(|e| e.premise == "mint").unwrap();
    assert_eq!(mint.span.line, 11);
}

#[test]
fn timelocked_crivar_keeps_cvs_only() {
    let r = scan_corpus_file("canonical_crivar_onlyafter.sol");
    let kinds: Vec<DefectKind> = r.findings().map(|f| f.kind).collect();
    assert_eq!(kinds, [DefectKind::CVS]);
}

#[test]
fn ior_evidence_walks_from_call_to_variable() {
    let r = scan_corpus_file("canonical_output.sol");
    let price = r.findings().find(|f| f.subject == "price").unwrap();
    let notes: Vec<&str> = price.evidence.iter().map(|e| e.note.as_str()).collect();
    assert_eq!(notes.first(), Some(&"output of pool.slot0"));
    assert!(notes.iter().any(|n| n.contains("assigned to sqrtPrice")));
    assert_eq!(price.evidence.last().unwrap().premise, "single-source");
}

#[test]
fn unguarded_sensitive_functions_get_notes_not_findings() {
    for file in ["selfdestruct_unguarded.sol", "mint_unguarded.sol"] {
        let r = scan_corpus_file(file);
        assert_eq!(r.findings().count(), 0, "{file}");
        assert!(r.contracts.iter().any(|c| !c.notes.is_empty()), "{file} has no note");
    }
}

#[test]
fn excluding_privilege_vars_drops_the_minter_table() {
    use cdsentry::analysis::{scan_source, AnalysisOptions};
    use cdsentry::frontend::SourceFile;
    let f = SourceFile::read(&corpus_dir().join("mint_role_mapping.sol")).unwrap();
    let mut opts = AnalysisOptions::default();
    opts.sensors.exclude_privilege_vars = true;
    let kinds: Vec<DefectKind> = scan_source(&f, &opts).findings().map(|f| f.kind).collect();
    assert_eq!(kinds, [DefectKind::MFS]);
}

#[test]
fn distinct_sites_split_repeated_oracle_calls() {
    use cdsentry::analysis::{scan_source, AnalysisOptions};
    use cdsentry::frontend::SourceFile;
    let f = SourceFile::read(&corpus_dir().join("output_same_oracle_twice.sol")).unwrap();
    let mut opts = AnalysisOptions::default();
    assert_eq!(scan_source(&f, &opts).findings().count(), 1);
    opts.sensors.taint.distinct_sites = true;
    assert_eq!(scan_source(&f, &opts).findings().count(), 0);
}
