use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::frontend::{ContentHash, Diagnostic, Span};

use super::DefectKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceItem {
    /// Premise of the rule this item supports, e.g. `limited-public`.
    pub premise: String,
    pub span: Span,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub kind: DefectKind,
    pub contract: String,
    /// Function signature, or the state variable for IOR.
    pub subject: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variable: Option<String>,
    pub span: Span,
    pub evidence: Vec<EvidenceItem>,
    /// Fact rules and the defect rule that produced the finding.
    pub rule_trace: Vec<String>,
    pub remediation: String,
    /// Set when transaction records show the permission moved to a
    /// multisig wallet or timelock; the text says which.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suppressed_by_crosschain: Option<String>,
}

/// Informational, not a defect.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Note {
    pub contract: String,
    pub subject: String,
    pub span: Span,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractReport {
    pub name: String,
    /// Each kind counts once per contract however many findings it has.
    pub defects: BTreeMap<DefectKind, bool>,
    pub findings: Vec<Finding>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<Note>,
}

impl ContractReport {
    pub fn has(&self, k: DefectKind) -> bool {
        self.defects.get(&k).copied().unwrap_or(false)
    }

    pub fn refresh_flags(&mut self) {
        self.defects = super::defect_flags(&self.findings);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanReport {
    pub file: String,
    pub content_hash: ContentHash,
    pub contracts: Vec<ContractReport>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ScanReport {
    pub fn findings(&self) -> impl Iterator<Item = &Finding> {
        self.contracts.iter().flat_map(|c| &c.findings)
    }

    pub fn has_defect(&self) -> bool {
        self.contracts.iter().any(|c| c.defects.values().any(|&b| b))
    }

    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(|d| d.severity == crate::frontend::Severity::Error)
    }

    pub fn contract(&self, name: &str) -> Option<&ContractReport> {
        self.contracts.iter().find(|c| c.name == name)
    }
}
