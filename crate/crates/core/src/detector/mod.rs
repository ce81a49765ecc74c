//! Defect rules over permission facts and sensitive operations.
//!
//! | kind | fires for                                                        |
//! |------|------------------------------------------------------------------|
//! | MFS  | token ∧ mint(f) ∧ limited-public(f) ∧ ¬multisig(f)              |
//! | CVS  | modifies-critical(f, v) ∧ limited-public(f) ∧ ¬multisig(f)      |
//! | MT   | modifies-critical(f, v) ∧ limited-public(f) ∧ ¬timelock(f)      |
//! | SPA  | proxy ∧ changes-implementation(f) ∧ ¬multisig(f)                |
//! | SS   | selfdestruct(f) ∧ limited-public(f) ∧ ¬multisig(f)              |
//! | IOR  | state variable fed by exactly one external output               |

mod kinds;
mod report;

use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::Span;
use crate::ir::{ContractUnit, FunctionIR};
use crate::pdg::{Label, Pdg, Rule};
use crate::sensors::{Evidence, SensitiveFacts};

pub use kinds::{DefectKind, UnknownKind};
pub use report::{ContractReport, EvidenceItem, Finding, Note, ScanReport};

/// Rule ids of the facts behind `limited-public(f)` and the multisig /
/// timelock facts, as recorded in derivations.
fn trace(pdg: &Pdg, f: &FunctionIR, rules: &[Rule]) -> Vec<String> {
    pdg.facts[f.id].derivation.iter().filter(|d| rules.contains(&d.rule)).map(|d| d.rule.id().to_string()).collect()
}

/// Where `f`'s permission check lives: the first P block of `f` or of the
/// nearest callee that is limited on its own.
fn permission_evidence(unit: &ContractUnit, pdg: &Pdg, f: &FunctionIR) -> Option<Evidence> {
    let mut queue = std::collections::VecDeque::from([f.id]);
    let mut seen = BTreeSet::new();
    while let Some(g) = queue.pop_front() {
        if !seen.insert(g) {
            continue;
        }
        if pdg.facts[g].first(Rule::LimitedDominance).is_some() {
            let e = pdg.labels[g].iter().flat_map(|b| &b.evidence).find(|e| e.label == Label::P)?;
            let via = if g == f.id { String::new() } else { format!(" via {}", unit.function(g).display()) };
            return Some(Evidence::new(e.span, format!("{}{via}", e.pattern)));
        }
        queue.extend(unit.call_graph.callees[g].iter().copied());
    }
    None
}

fn blocks_reachable(unit: &ContractUnit, f: &FunctionIR) -> usize {
    unit.call_graph.reachable_from(f.id).iter().map(|&g| unit.function(g).cfg.blocks.len()).sum()
}

fn absence(premise: &str, what: &str, unit: &ContractUnit, f: &FunctionIR) -> EvidenceItem {
    let n = blocks_reachable(unit, f);
    EvidenceItem { premise: premise.into(), span: f.name_span, note: format!("absence of {what} verified over {n} blocks") }
}

fn item(premise: &str, e: &Evidence) -> EvidenceItem {
    EvidenceItem { premise: premise.into(), span: e.span, note: e.note.clone() }
}

fn limited_items(unit: &ContractUnit, pdg: &Pdg, f: &FunctionIR) -> Vec<EvidenceItem> {
    let mut out = Vec::new();
    if let Some(e) = permission_evidence(unit, pdg, f) {
        out.push(item("limited-public", &e));
    }
    out.push(EvidenceItem { premise: "limited-public".into(), span: f.name_span, note: format!("{} is {}", f.display(), f.visibility.as_str()) });
    out
}

fn finding(kind: DefectKind, unit: &ContractUnit, subject: String, variable: Option<String>, span: Span, evidence: Vec<EvidenceItem>, rule_trace: Vec<String>) -> Finding {
    Finding {
        kind,
        contract: unit.name.clone(),
        subject,
        variable,
        span,
        evidence,
        rule_trace,
        remediation: kind.remediation().to_string(),
        suppressed_by_crosschain: None,
    }
}

const LIMITED_RULES: [Rule; 3] = [Rule::LimitedDominance, Rule::LimitedCall, Rule::LimitedPublic];

pub fn rule_mfs(unit: &ContractUnit, pdg: &Pdg, facts: &SensitiveFacts) -> Vec<Finding> {
    let mut out = Vec::new();
    if !facts.token.is_token {
        return out;
    }
    for f in &unit.functions {
        let pf = &pdg.facts[f.id];
        let Some(mint) = facts.of(&f.key).and_then(|s| s.mint.as_ref()) else { continue };
        if !pf.limited_public || pf.multisig {
            continue;
        }
        let mut ev = vec![item("token", &facts.token.evidence[0]), item("mint", mint)];
        ev.extend(limited_items(unit, pdg, f));
        ev.push(absence("no-multisig", "a multisig check", unit, f));
        let mut tr = trace(pdg, f, &LIMITED_RULES);
        tr.push(DefectKind::MFS.code().into());
        out.push(finding(DefectKind::MFS, unit, f.display(), None, f.name_span, ev, tr));
    }
    out
}

fn critical_rule(kind: DefectKind, unit: &ContractUnit, pdg: &Pdg, facts: &SensitiveFacts) -> Vec<Finding> {
    let mut out = Vec::new();
    for f in &unit.functions {
        let pf = &pdg.facts[f.id];
        let Some(s) = facts.of(&f.key) else { continue };
        let blocked = match kind {
            DefectKind::CVS => pf.multisig,
            _ => pf.timelock,
        };
        if !pf.limited_public || blocked {
            continue;
        }
        for (var, e) in &s.modify_crit_vars {
            let cv = &facts.critical_vars[var];
            let mut ev = vec![
                EvidenceItem {
                    premise: "critical-variable".into(),
                    span: cv.span,
                    note: format!("{var} defined by {} and read by {}", cv.defined_by, cv.read_by),
                },
                item("modifies-critical", e),
            ];
            ev.extend(limited_items(unit, pdg, f));
            ev.push(match kind {
                DefectKind::CVS => absence("no-multisig", "a multisig check", unit, f),
                _ => absence("no-timelock", "a timelock check", unit, f),
            });
            let mut tr = trace(pdg, f, &LIMITED_RULES);
            tr.push(kind.code().into());
            out.push(finding(kind, unit, f.display(), Some(var.clone()), e.span, ev, tr));
        }
    }
    out
}

pub fn rule_cvs(unit: &ContractUnit, pdg: &Pdg, facts: &SensitiveFacts) -> Vec<Finding> {
    critical_rule(DefectKind::CVS, unit, pdg, facts)
}

pub fn rule_mt(unit: &ContractUnit, pdg: &Pdg, facts: &SensitiveFacts) -> Vec<Finding> {
    critical_rule(DefectKind::MT, unit, pdg, facts)
}

/// No permission premise: an unrestricted upgrade function fires too.
pub fn rule_spa(unit: &ContractUnit, pdg: &Pdg, facts: &SensitiveFacts) -> Vec<Finding> {
    let mut out = Vec::new();
    if !facts.proxy.is_proxy {
        return out;
    }
    for f in unit.functions.iter().filter(|f| f.is_public()) {
        let Some(change) = facts.of(&f.key).and_then(|s| s.change_impl.as_ref()) else { continue };
        if pdg.facts[f.id].multisig {
            continue;
        }
        let mut ev: Vec<EvidenceItem> = facts.proxy.evidence.iter().take(1).map(|e| item("proxy", e)).collect();
        ev.push(item("changes-implementation", change));
        if let Some(e) = permission_evidence(unit, pdg, f) {
            ev.push(item("admin", &e));
        }
        ev.push(absence("no-multisig", "a multisig check", unit, f));
        out.push(finding(DefectKind::SPA, unit, f.display(), None, f.name_span, ev, vec![DefectKind::SPA.code().into()]));
    }
    out
}

pub fn rule_ss(unit: &ContractUnit, pdg: &Pdg, facts: &SensitiveFacts) -> Vec<Finding> {
    let mut out = Vec::new();
    for f in &unit.functions {
        let pf = &pdg.facts[f.id];
        let Some(sd) = facts.of(&f.key).and_then(|s| s.selfdestruct.as_ref()) else { continue };
        if !pf.limited_public || pf.multisig {
            continue;
        }
        let mut ev = vec![item("selfdestruct", sd)];
        ev.extend(limited_items(unit, pdg, f));
        ev.push(absence("no-multisig", "a multisig check", unit, f));
        let mut tr = trace(pdg, f, &LIMITED_RULES);
        tr.push(DefectKind::SS.code().into());
        out.push(finding(DefectKind::SS, unit, f.display(), None, f.name_span, ev, tr));
    }
    out
}

pub fn rule_ior(unit: &ContractUnit, facts: &SensitiveFacts) -> Vec<Finding> {
    let mut out = Vec::new();
    for t in facts.taint.iter().filter(|t| t.sources.len() == 1) {
        let v = &unit.state_vars[&t.var];
        let mut ev: Vec<EvidenceItem> = t.paths[0].steps.iter().map(|e| item("depends-on-output", e)).collect();
        ev.push(EvidenceItem {
            premise: "single-source".into(),
            span: v.span,
            note: format!("{} has no second output source", t.var),
        });
        out.push(finding(DefectKind::IOR, unit, t.var.clone(), Some(t.var.clone()), v.span, ev, vec![DefectKind::IOR.code().into()]));
    }
    out
}

/// Sensitive functions reachable by anyone. They satisfy no centralization
/// rule, but are worth a look.
pub fn unguarded_notes(unit: &ContractUnit, pdg: &Pdg, facts: &SensitiveFacts) -> Vec<Note> {
    let mut out = Vec::new();
    for f in unit.functions.iter().filter(|f| f.is_public() && !pdg.facts[f.id].limited) {
        let Some(s) = facts.of(&f.key) else { continue };
        let mut push = |what: &str, e: &Evidence| {
            out.push(Note {
                contract: unit.name.clone(),
                subject: f.display(),
                span: e.span,
                message: format!("{what} reachable without any permission check"),
            })
        };
        if let Some(e) = &s.selfdestruct {
            push("selfdestruct", e);
        }
        if let (true, Some(e)) = (facts.token.is_token, &s.mint) {
            push("minting", e);
        }
    }
    out
}

/// All enabled rules for one unit, ordered by kind then span.
pub fn run_rules(unit: &ContractUnit, pdg: &Pdg, facts: &SensitiveFacts, enabled: &BTreeSet<DefectKind>) -> Vec<Finding> {
    let mut out = Vec::new();
    for &k in enabled {
        out.extend(match k {
            DefectKind::MFS => rule_mfs(unit, pdg, facts),
            DefectKind::CVS => rule_cvs(unit, pdg, facts),
            DefectKind::MT => rule_mt(unit, pdg, facts),
            DefectKind::SPA => rule_spa(unit, pdg, facts),
            DefectKind::SS => rule_ss(unit, pdg, facts),
            DefectKind::IOR => rule_ior(unit, facts),
        });
    }
    out.sort_by(|a, b| (a.kind, a.span, &a.subject, &a.variable).cmp(&(b.kind, b.span, &b.subject, &b.variable)));
    out
}

/// Once-per-contract booleans, every kind present.
pub fn defect_flags(findings: &[Finding]) -> BTreeMap<DefectKind, bool> {
    DefectKind::ALL.into_iter().map(|k| (k, findings.iter().any(|f| f.kind == k && f.suppressed_by_crosschain.is_none()))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{scan_str, AnalysisOptions};

    fn kinds(src: &str) -> Vec<(String, DefectKind)> {
        let r = scan_str(src, &AnalysisOptions::default());
        assert!(!r.has_errors(), "{:?}", r.diagnostics);
        let mut out: Vec<(String, DefectKind)> =
            r.contracts.iter().flat_map(|c| c.defects.iter().filter(|(_, &b)| b).map(|(k, _)| (c.name.clone(), *k))).collect();
        out.sort();
        out
    }

    fn one(name: &str, ks: &[DefectKind]) -> Vec<(String, DefectKind)> {
        ks.iter().map(|k| (name.to_string(), *k)).collect()
    }

    const MINT: &str = include_str!("../../tests/fixtures/canonical/mint.sol");
    const CRIVAR: &str = include_str!("../../tests/fixtures/canonical/crivar.sol");
    const PROXY: &str = include_str!("../../tests/fixtures/canonical/proxy.sol");
    const SELFDESTRUCT: &str = include_str!("../../tests/fixtures/canonical/selfdestruct.sol");
    const OUTPUT: &str = include_str!("../../tests/fixtures/canonical/output.sol");

    #[test]
    fn canonical_contracts() {
        assert_eq!(kinds(MINT), one("Contract_Mint", &[DefectKind::MFS]));
        assert_eq!(kinds(CRIVAR), one("Contract_CriVar", &[DefectKind::CVS, DefectKind::MT]));
        assert_eq!(kinds(PROXY), one("Contract_Proxy", &[DefectKind::SPA]));
        assert_eq!(kinds(SELFDESTRUCT), one("Contract_selfdestruct", &[DefectKind::SS]));
        assert_eq!(kinds(OUTPUT), one("Contract_Output", &[DefectKind::IOR]));
    }

    #[test]
    fn findings_carry_evidence_for_each_premise() {
        let r = scan_str(MINT, &AnalysisOptions::default());
        let f = r.findings().next().unwrap();
        assert_eq!(f.subject, "mint(address,uint256)");
        let premises: Vec<&str> = f.evidence.iter().map(|e| e.premise.as_str()).collect();
        assert_eq!(premises, ["token", "mint", "limited-public", "limited-public", "no-multisig"]);
        assert!(f.evidence.last().unwrap().note.starts_with("absence of a multisig check verified over"));
        assert_eq!(f.rule_trace, ["limited-dominance", "limited-public", "MFS"]);
        assert_eq!(f.remediation, DefectKind::MFS.remediation());
    }

    #[test]
    fn unguarded_selfdestruct_is_a_note() {
        let r = scan_str("contract A { function close() public { selfdestruct(payable(msg.sender)); } }", &AnalysisOptions::default());
        assert!(!r.has_defect());
        assert_eq!(r.contracts[0].notes.len(), 1);
    }

    #[test]
    fn disabled_rules_do_not_fire() {
        let opts = AnalysisOptions { rules: [DefectKind::MT].into(), ..Default::default() };
        let r = scan_str(CRIVAR, &opts);
        assert!(r.findings().all(|f| f.kind == DefectKind::MT));
        assert!(r.has_defect());
    }
}
