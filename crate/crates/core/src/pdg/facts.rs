//! Function-level permission facts: local rules from block labels and
//! dominance, then propagation from callees to callers until stable.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use crate::ir::ContractUnit;

use super::dom::DomInfo;
use super::labels::{BlockLabels, Label};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    MultisigLocal,
    MultisigCall,
    TimelockLocal,
    TimelockCall,
    LimitedDominance,
    LimitedCall,
    LimitedPublic,
}

impl Rule {
    pub fn id(self) -> &'static str {
        match self {
            Rule::MultisigLocal => "multisig-local",
            Rule::MultisigCall => "multisig-call",
            Rule::TimelockLocal => "timelock-local",
            Rule::TimelockCall => "timelock-call",
            Rule::LimitedDominance => "limited-dominance",
            Rule::LimitedCall => "limited-call",
            Rule::LimitedPublic => "limited-public",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Derivation {
    pub rule: Rule,
    pub premises: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PermFacts {
    pub multisig: bool,
    pub timelock: bool,
    pub limited: bool,
    pub limited_public: bool,
    /// Privileged variables checked by this function's own P blocks.
    pub privilege_vars_used: BTreeSet<String>,
    pub derivation: Vec<Derivation>,
}

impl PermFacts {
    pub fn first(&self, rule: Rule) -> Option<&Derivation> {
        self.derivation.iter().find(|d| d.rule == rule)
    }
}

/// Facts indexed by function id.
pub type FactTable = Vec<PermFacts>;

/// Facts each function earns from its own blocks.
pub fn local_facts(unit: &ContractUnit, labels: &[Vec<BlockLabels>], doms: &[DomInfo]) -> FactTable {
    unit.functions
        .iter()
        .map(|f| {
            let mut pf = PermFacts::default();
            let ls = &labels[f.id];
            if let Some(b) = ls.iter().position(|b| b.has(Label::M)) {
                pf.multisig = true;
                pf.derivation.push(Derivation { rule: Rule::MultisigLocal, premises: vec![format!("block {b} labeled M")] });
            }
            if let Some(b) = ls.iter().position(|b| b.has(Label::T)) {
                pf.timelock = true;
                pf.derivation.push(Derivation { rule: Rule::TimelockLocal, premises: vec![format!("block {b} labeled T")] });
            }
            for (b2, l) in ls.iter().enumerate().filter(|(_, l)| l.has(Label::P)) {
                pf.privilege_vars_used.extend(l.privileged.iter().cloned());
                if pf.limited {
                    continue;
                }
                if let Some(&b1) = doms[f.id].strictly_dominated(b2).first() {
                    pf.limited = true;
                    pf.derivation.push(Derivation {
                        rule: Rule::LimitedDominance,
                        premises: vec![format!("block {b2} labeled P"), format!("block {b2} dominates block {b1}")],
                    });
                }
            }
            pf
        })
        .collect()
}

/// Closes `facts` under the call rules and then applies the public rule.
/// Applying it to its own output changes nothing.
pub fn propagate(unit: &ContractUnit, mut facts: FactTable) -> FactTable {
    let cg = &unit.call_graph;
    let mut work: VecDeque<usize> = (0..facts.len()).collect();
    let mut queued = vec![true; facts.len()];
    while let Some(g) = work.pop_front() {
        queued[g] = false;
        let callee = facts[g].clone();
        let name = unit.function(g).key.clone();
        for &f in cg.callers.get(g).into_iter().flatten() {
            let pf = &mut facts[f];
            let mut changed = false;
            for (has, set, rule) in [
                (callee.multisig, &mut pf.multisig, Rule::MultisigCall),
                (callee.timelock, &mut pf.timelock, Rule::TimelockCall),
                (callee.limited, &mut pf.limited, Rule::LimitedCall),
            ] {
                if has && !*set {
                    *set = true;
                    changed = true;
                    pf.derivation.push(Derivation { rule, premises: vec![format!("calls {name}")] });
                }
            }
            if changed && !queued[f] {
                queued[f] = true;
                work.push_back(f);
            }
        }
    }
    for f in &unit.functions {
        let pf = &mut facts[f.id];
        if pf.limited && f.is_public() && !pf.limited_public {
            pf.limited_public = true;
            pf.derivation.push(Derivation { rule: Rule::LimitedPublic, premises: vec!["limited".into(), format!("{} is {}", f.display(), f.visibility.as_str())] });
        }
    }
    facts
}

pub fn derive_perm_facts(unit: &ContractUnit, labels: &[Vec<BlockLabels>], doms: &[DomInfo]) -> FactTable {
    propagate(unit, local_facts(unit, labels, doms))
}
