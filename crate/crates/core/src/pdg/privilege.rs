use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::ir::typing::is_address_role_mapping;
use crate::ir::{ContractUnit, FuncId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrivilegeReason {
    /// Address variable set by an initializer or a constructor.
    CreationAddress,
    /// Address variable named `owner` or `_owner`.
    OwnerName,
    /// Address-keyed role mapping only ever written at creation or by
    /// limited functions.
    RoleMapping,
    /// Supplied by the caller (tests, tooling).
    Given,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PrivilegeSet {
    pub members: BTreeMap<String, PrivilegeReason>,
}

impl PrivilegeSet {
    pub fn contains(&self, name: &str) -> bool {
        self.members.contains_key(name)
    }

    pub fn from_names(names: &[&str]) -> Self {
        PrivilegeSet { members: names.iter().map(|n| (n.to_string(), PrivilegeReason::Given)).collect() }
    }

    pub fn names(&self) -> BTreeSet<String> {
        self.members.keys().cloned().collect()
    }

    /// Seed of the joint fixpoint: address variables only.
    pub fn addresses(unit: &ContractUnit) -> Self {
        let mut members = BTreeMap::new();
        for v in unit.state_vars.values().filter(|v| v.ty.is_address()) {
            if v.initialized_at_creation {
                members.insert(v.name.clone(), PrivilegeReason::CreationAddress);
            } else if v.name == "owner" || v.name == "_owner" {
                members.insert(v.name.clone(), PrivilegeReason::OwnerName);
            }
        }
        PrivilegeSet { members }
    }

    /// Role mappings whose every writer runs only at creation or behind a
    /// limited entry point. Mappings never written at all are left out:
    /// nothing grants the role.
    pub fn role_mappings(unit: &ContractUnit, excluded: &BTreeSet<String>, limited: &dyn Fn(FuncId) -> bool) -> BTreeSet<String> {
        unit.state_vars
            .values()
            .filter(|v| is_address_role_mapping(&v.ty) && !excluded.contains(&v.name) && !v.written_by.is_empty())
            .filter(|v| {
                v.written_by
                    .iter()
                    .all(|k| unit.by_key(k).is_some_and(|f| guarded(unit, f.id, limited, &mut BTreeSet::new())))
            })
            .map(|v| v.name.clone())
            .collect()
    }
}

/// `f` only runs at creation, is limited, or is an internal helper whose
/// callers are all guarded. Cycles are assumed guarded.
fn guarded(unit: &ContractUnit, f: FuncId, limited: &dyn Fn(FuncId) -> bool, visiting: &mut BTreeSet<FuncId>) -> bool {
    let func = unit.function(f);
    if func.is_constructor || limited(f) {
        return true;
    }
    if func.is_public() {
        return false;
    }
    if !visiting.insert(f) {
        return true;
    }
    let callers = &unit.call_graph.callers[f];
    callers.iter().all(|&c| guarded(unit, c, limited, visiting))
}
