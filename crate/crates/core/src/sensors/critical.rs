//! Critical variables: state fixed when the contract is created and read by
//! its ordinary functions afterwards.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::frontend::ast::TypeName;
use crate::frontend::Span;
use crate::ir::typing::is_contract_type;
use crate::ir::{ContractUnit, FunctionIR, StateVarInfo};

use super::Evidence;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriticalVar {
    pub span: Span,
    /// Why the variable is considered defined at creation.
    pub defined_by: &'static str,
    /// A non-constructor reader (or `getter` for public variables).
    pub read_by: String,
}

/// Value types exist in storage, zeroed, from the moment of creation even
/// without an initializer; mappings and arrays need an explicit one.
fn value_typed(unit: &ContractUnit, v: &StateVarInfo) -> bool {
    match &v.ty {
        TypeName::Elementary(_) => true,
        t @ TypeName::UserDefined(_) => is_contract_type(unit, t) || unit.structs.get(t.canonical().as_str()).is_some_and(Vec::is_empty),
        _ => false,
    }
}

pub fn detect_critical_vars(unit: &ContractUnit, excluded: &BTreeSet<String>) -> BTreeMap<String, CriticalVar> {
    let mut out = BTreeMap::new();
    for v in unit.state_vars.values() {
        if excluded.contains(&v.name) || v.constant {
            continue;
        }
        let defined_by = if v.initializer.is_some() {
            "initializer"
        } else if v.initialized_at_creation {
            "constructor"
        } else if value_typed(unit, v) {
            "default value"
        } else {
            continue;
        };
        let reader = v.read_by.iter().find(|k| unit.by_key(k).is_some_and(|f| !f.is_constructor)).cloned();
        let read_by = match reader {
            Some(k) => k,
            None if v.visibility.is_public() => "getter".to_string(),
            None => continue,
        };
        out.insert(v.name.clone(), CriticalVar { span: v.span, defined_by, read_by });
    }
    out
}

/// Critical variables written by `f` or by anything it calls, with the
/// write evidence.
pub fn detect_modify_crit(unit: &ContractUnit, f: &FunctionIR, critical: &BTreeMap<String, CriticalVar>) -> BTreeMap<String, Evidence> {
    let mut out = BTreeMap::new();
    if f.is_constructor {
        return out;
    }
    for g in unit.call_graph.reachable_from(f.id) {
        let g = unit.function(g);
        if g.is_constructor {
            continue;
        }
        for v in g.writes.iter().filter(|v| critical.contains_key(*v)) {
            out.entry(v.clone()).or_insert_with(|| {
                let via = if g.id == f.id { String::new() } else { format!(" via {}", g.display()) };
                Evidence::new(super::write_span(g, v).unwrap_or(g.name_span), format!("writes {v}{via}"))
            });
        }
    }
    out
}
