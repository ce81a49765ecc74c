//! Permission dependency graph: CFG blocks labeled P (privileged caller
//! check), M (multisig check), T (timelock check) or O (other), dominance
//! between them, and the function facts derived from both.

pub mod dom;
pub mod facts;
pub mod labels;
pub mod privilege;

use std::collections::BTreeSet;

use serde_json::{json, Value};

use crate::frontend::expr_to_string;
use crate::ir::{ContractUnit, Origin, Stmt, StmtKind, Terminator};

pub use dom::{compute_dominators, DomInfo};
pub use facts::{derive_perm_facts, propagate, Derivation, FactTable, PermFacts, Rule};
pub use labels::{label_function, BlockLabels, Evidence, Label};
pub use privilege::{PrivilegeReason, PrivilegeSet};

#[derive(Debug, Clone, PartialEq)]
pub struct Pdg {
    pub privilege: PrivilegeSet,
    /// Indexed by function id.
    pub labels: Vec<Vec<BlockLabels>>,
    pub doms: Vec<DomInfo>,
    pub facts: FactTable,
}

impl Pdg {
    pub fn facts_of(&self, unit: &ContractUnit, key: &str) -> Option<&PermFacts> {
        unit.by_key(key).map(|f| &self.facts[f.id])
    }
}

/// Labels, dominators and facts for every function of `unit`. The privilege
/// set and the facts are computed jointly: role mappings join the set once
/// all their writers are known to be limited, which may make more functions
/// limited. `excluded` names variables that never count as privileged
/// (token balances).
pub fn build(unit: &ContractUnit, excluded: &BTreeSet<String>) -> Pdg {
    let doms: Vec<DomInfo> = unit.functions.iter().map(|f| DomInfo::for_cfg(&f.cfg)).collect();
    let mut privilege = PrivilegeSet::addresses(unit);
    privilege.members.retain(|n, _| !excluded.contains(n));
    loop {
        let labels: Vec<Vec<BlockLabels>> = unit.functions.iter().map(|f| label_function(unit, f, &privilege)).collect();
        let facts = derive_perm_facts(unit, &labels, &doms);
        let roles = PrivilegeSet::role_mappings(unit, excluded, &|id| facts[id].limited);
        let fresh: Vec<String> = roles.into_iter().filter(|r| !privilege.contains(r)).collect();
        if fresh.is_empty() {
            return Pdg { privilege, labels, doms, facts };
        }
        for r in fresh {
            privilege.members.insert(r, PrivilegeReason::RoleMapping);
        }
    }
}

pub fn stmt_text(s: &Stmt) -> String {
    match &s.kind {
        StmtKind::Expr(e) => expr_to_string(e),
        StmtKind::Emit(e) => format!("emit {}", expr_to_string(e)),
        StmtKind::SetReturn(e) => format!("return {}", expr_to_string(e)),
        StmtKind::Decl { vars, init } => {
            let names: Vec<&str> = vars.iter().map(|v| v.as_ref().map_or("", |v| v.name.name.as_str())).collect();
            let lhs = if names.len() == 1 { names[0].to_string() } else { format!("({})", names.join(", ")) };
            match init {
                Some(e) => format!("let {lhs} = {}", expr_to_string(e)),
                None => format!("let {lhs}"),
            }
        }
        StmtKind::Opaque { construct, .. } => format!("<{construct}>"),
    }
}

pub fn term_text(t: &Terminator) -> String {
    match t {
        Terminator::Jump(b) => format!("jump {b}"),
        Terminator::Branch { cond, then_bb, else_bb } => format!("branch {} ? {then_bb} : {else_bb}", expr_to_string(cond)),
        Terminator::Return => "return".into(),
        Terminator::Revert(_) => "revert".into(),
        Terminator::Selfdestruct(e) => format!("selfdestruct({})", expr_to_string(e)),
        Terminator::End => "end".into(),
    }
}

/// One JSON document per function.
pub fn dump(unit: &ContractUnit, pdg: &Pdg) -> Vec<Value> {
    unit.functions
        .iter()
        .map(|f| {
            let blocks: Vec<Value> = f
                .cfg
                .blocks
                .iter()
                .map(|b| {
                    let l = &pdg.labels[f.id][b.id];
                    json!({
                        "id": b.id,
                        "origin": match &b.origin { Origin::Body => "body".to_string(), Origin::Modifier(m) => format!("modifier {m}") },
                        "span": b.span,
                        "statements": b.stmts.iter().map(stmt_text).collect::<Vec<_>>(),
                        "terminator": term_text(&b.term),
                        "labels": l.labels,
                        "evidence": l.evidence,
                    })
                })
                .collect();
            let edges: Vec<[usize; 2]> =
                f.cfg.blocks.iter().flat_map(|b| b.term.successors().into_iter().map(move |s| [b.id, s])).collect();
            let idom: serde_json::Map<String, Value> = pdg.doms[f.id]
                .idom
                .iter()
                .enumerate()
                .filter_map(|(b, d)| d.map(|d| (b.to_string(), json!(d))))
                .collect();
            json!({
                "contract": unit.name,
                "function": f.display(),
                "key": f.key,
                "blocks": blocks,
                "edges": edges,
                "idom": idom,
                "privilege_set": pdg.privilege.members,
                "facts": pdg.facts[f.id],
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_source, ParseOptions};
    use crate::ir::lower;

    fn unit(src: &str) -> ContractUnit {
        let ast = parse_source(src, &ParseOptions::default());
        assert!(!ast.has_errors(), "{:?}", ast.diagnostics);
        lower(&ast).units.pop().unwrap()
    }

    fn pdg(u: &ContractUnit) -> Pdg {
        build(u, &BTreeSet::new())
    }

    #[test]
    fn mint_is_limited_public() {
        let u = unit(include_str!("../../tests/fixtures/canonical/mint.sol"));
        let p = pdg(&u);
        let f = p.facts_of(&u, "mint(address,uint256)").unwrap();
        assert!(f.limited && f.limited_public && !f.multisig && !f.timelock);
        assert_eq!(f.first(Rule::LimitedDominance).unwrap().premises[0], "block 0 labeled P");
        assert!(p.privilege.contains("owner"));
    }

    #[test]
    fn unlabeled_contract_has_no_facts() {
        let u = unit("contract A { uint x; function f() public { x = 1; } }");
        let p = pdg(&u);
        assert_eq!(p.facts[0], PermFacts::default());
        assert!(p.privilege.members.is_empty());
    }

    #[test]
    fn limited_flows_from_callee() {
        let u = unit(
            "contract A { address owner; uint x;
               function g() internal { require(msg.sender == owner); }
               function f() public { g(); x = 1; } }",
        );
        let p = pdg(&u);
        let f = p.facts_of(&u, "f()").unwrap();
        assert!(f.limited && f.limited_public);
        assert_eq!(f.first(Rule::LimitedCall).unwrap().premises, ["calls g()"]);
        assert!(!p.facts_of(&u, "g()").unwrap().limited_public);
    }

    #[test]
    fn post_placeholder_check_does_not_limit() {
        let u = unit(
            "contract A { address owner; uint x;
               modifier late() { _; require(msg.sender == owner); }
               function f() public late { x = 1; } }",
        );
        let p = pdg(&u);
        let f = &u.functions[0];
        let pb = p.labels[f.id].iter().position(|l| l.has(Label::P)).unwrap();
        assert!(!p.doms[f.id].dominates(pb, f.cfg.body_entry.unwrap()));
        // The check still guards the revert/continue blocks it branches to.
        assert!(p.facts[f.id].limited);
    }

    #[test]
    fn role_mapping_written_by_owner_is_privileged() {
        let u = unit(
            "contract A { address public owner; mapping(address => bool) admins; uint x;
               constructor() { owner = msg.sender; }
               modifier onlyOwner() { require(msg.sender == owner); _; }
               modifier onlyAdmin() { require(admins[msg.sender]); _; }
               function addAdmin(address a) public onlyOwner { admins[a] = true; }
               function set(uint v) public onlyAdmin { x = v; } }",
        );
        let p = pdg(&u);
        assert_eq!(p.privilege.names(), ["admins".to_string(), "owner".to_string()].into());
        assert_eq!(p.privilege.members["admins"], PrivilegeReason::RoleMapping);
        assert!(p.facts_of(&u, "set(uint256)").unwrap().limited_public);
    }

    #[test]
    fn role_mapping_with_open_writer_is_not_privileged() {
        let u = unit(
            "contract A { mapping(address => bool) admins; uint x;
               function join() public { admins[msg.sender] = true; }
               function set(uint v) public { require(admins[msg.sender]); x = v; } }",
        );
        let p = pdg(&u);
        assert!(p.privilege.members.is_empty());
        assert!(!p.facts_of(&u, "set(uint256)").unwrap().limited);
    }

    #[test]
    fn recursion_terminates() {
        let u = unit(
            "contract A { address owner = msg.sender;
               function f(uint n) public { if (n > 0) g(n - 1); }
               function g(uint n) public { require(msg.sender == owner); f(n); } }",
        );
        let p = pdg(&u);
        assert!(p.facts_of(&u, "f(uint256)").unwrap().limited);
        assert_eq!(propagate(&u, p.facts.clone()), p.facts);
    }

    #[test]
    fn dump_has_one_document_per_function() {
        let u = unit(include_str!("../../tests/fixtures/canonical/mint.sol"));
        let docs = dump(&u, &pdg(&u));
        assert_eq!(docs.len(), u.functions.len());
        let mint = docs.iter().find(|d| d["key"] == "mint(address,uint256)").unwrap();
        assert_eq!(mint["blocks"][0]["labels"], json!(["P"]));
        assert_eq!(mint["facts"]["derivation"][0]["rule"], "limited-dominance");
    }
}
