//! Upgradeable-proxy heuristics: a fallback that delegates to an address
//! held in state (or in a storage slot), the standard implementation slot,
//! or calls to an upgrade helper.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::frontend::ast::{Expr, ExprKind, FunctionKind};
use crate::ir::{calls, CallKind, ContractUnit, ExternalKind, FuncId, FunctionIR, StmtKind};

use super::Evidence;

/// Storage slot of the implementation address in the standard layout.
pub const IMPLEMENTATION_SLOT: &str = "0x360894a13ba1a3210667c828492db98dca3e2076cc3735a920a3ca505d382bbc";
const IMPLEMENTATION_SLOT_PREIMAGE: &str = "eip1967.proxy.implementation";
const UPGRADE_HELPERS: [&str; 4] = ["upgradeTo", "upgradeToAndCall", "_upgradeTo", "_upgradeToAndCall"];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ProxyFacts {
    pub is_proxy: bool,
    pub impl_vars: BTreeSet<String>,
    pub evidence: Vec<Evidence>,
}

pub fn detect_proxy(unit: &ContractUnit) -> ProxyFacts {
    let mut facts = ProxyFacts::default();

    for f in unit.functions.iter().filter(|f| f.kind == FunctionKind::Fallback && !f.overridden) {
        for g in unit.call_graph.reachable_from(f.id) {
            let g = unit.function(g);
            for (target, span) in delegate_targets(unit, g) {
                let vars: BTreeSet<String> = target.into_iter().filter(|v| holds_address(unit, v)).collect();
                if !vars.is_empty() {
                    let names: Vec<&str> = vars.iter().map(String::as_str).collect();
                    facts.evidence.push(Evidence::new(span, format!("fallback delegates to {}", names.join(", "))));
                    facts.impl_vars.extend(vars);
                }
            }
        }
    }

    for v in unit.state_vars.values() {
        let slot = v.initializer.as_ref().is_some_and(mentions_slot);
        if slot {
            facts.evidence.push(Evidence::new(v.span, format!("{} holds the implementation slot", v.name)));
            facts.impl_vars.insert(v.name.clone());
        }
    }
    for f in &unit.functions {
        for b in &f.cfg.blocks {
            for s in &b.stmts {
                let hit = match &s.kind {
                    StmtKind::Opaque { text, .. } => text.contains(IMPLEMENTATION_SLOT),
                    StmtKind::Expr(e) | StmtKind::SetReturn(e) | StmtKind::Emit(e) => mentions_slot(e),
                    StmtKind::Decl { init: Some(e), .. } => mentions_slot(e),
                    StmtKind::Decl { init: None, .. } => false,
                };
                if hit {
                    facts.evidence.push(Evidence::new(s.span, format!("{} uses the implementation slot", f.display())));
                }
            }
        }
        if let Some(e) = upgrade_helper_call(unit, f) {
            facts.evidence.push(e);
        }
    }

    facts.is_proxy = !facts.evidence.is_empty();
    if !facts.is_proxy {
        facts.impl_vars.clear();
    }
    facts
}

fn holds_address(unit: &ContractUnit, v: &str) -> bool {
    unit.state_vars.get(v).is_some_and(|v| {
        v.ty.is_address() || v.ty.canonical() == "bytes32" || crate::ir::typing::is_contract_type(unit, &v.ty)
    })
}

fn mentions_slot(e: &Expr) -> bool {
    let mut hit = false;
    e.walk(&mut |x| match &x.kind {
        ExprKind::Number(n) | ExprKind::HexStr(n) => hit |= n.eq_ignore_ascii_case(IMPLEMENTATION_SLOT),
        ExprKind::Str(s) => hit |= s == IMPLEMENTATION_SLOT_PREIMAGE,
        _ => {}
    });
    hit
}

/// State variables feeding each delegatecall target in `f`, followed
/// through locals and internal getters, with the call span.
fn delegate_targets(unit: &ContractUnit, f: &FunctionIR) -> Vec<(BTreeSet<String>, crate::frontend::Span)> {
    let mut out = Vec::new();
    for b in &f.cfg.blocks {
        calls::block_calls(b, &mut |c, _| {
            if let CallKind::External { kind: ExternalKind::DelegateCall, .. } = calls::classify(unit, f, c) {
                if let ExprKind::Call { callee, .. } = &c.kind {
                    if let ExprKind::Member(obj, _) = &callee.kind {
                        out.push((state_sources(unit, f, obj, 0), c.span));
                    }
                }
            }
        });
        for s in &b.stmts {
            if let StmtKind::Opaque { text, .. } = &s.kind {
                if text.contains("delegatecall") {
                    let mut vars = BTreeSet::new();
                    for w in words(text) {
                        vars.extend(name_sources(unit, f, w, 0));
                    }
                    out.push((vars, s.span));
                }
            }
        }
    }
    out
}

fn words(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '$')).filter(|w| !w.is_empty())
}

const MAX_DEPTH: usize = 4;

/// State variables whose value can reach `e`.
pub(crate) fn state_sources(unit: &ContractUnit, f: &FunctionIR, e: &Expr, depth: usize) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    if depth > MAX_DEPTH {
        return out;
    }
    e.walk(&mut |x| match &x.kind {
        ExprKind::Ident(n) => out.extend(name_sources(unit, f, n, depth)),
        ExprKind::Call { .. } => {
            if let CallKind::Internal(g) = calls::classify(unit, f, x) {
                out.extend(return_sources(unit, g, depth + 1));
            }
        }
        _ => {}
    });
    out
}

fn name_sources(unit: &ContractUnit, f: &FunctionIR, n: &str, depth: usize) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    if depth > MAX_DEPTH {
        return out;
    }
    if f.is_local(n) {
        for b in &f.cfg.blocks {
            for s in &b.stmts {
                match &s.kind {
                    StmtKind::Decl { vars, init: Some(init) } if vars.iter().flatten().any(|v| v.name.name == n) => {
                        out.extend(state_sources(unit, f, init, depth + 1));
                    }
                    StmtKind::Expr(e) => e.walk(&mut |x| {
                        if let ExprKind::Assign(_, l, r) = &x.kind {
                            if l.root_ident() == Some(n) {
                                out.extend(state_sources(unit, f, r, depth + 1));
                            }
                        }
                    }),
                    _ => {}
                }
            }
        }
    } else if unit.state_vars.contains_key(n) {
        out.insert(n.to_string());
    }
    out
}

fn return_sources(unit: &ContractUnit, g: FuncId, depth: usize) -> BTreeSet<String> {
    let g = unit.function(g);
    let mut out = BTreeSet::new();
    for b in &g.cfg.blocks {
        for s in &b.stmts {
            match &s.kind {
                StmtKind::SetReturn(e) => out.extend(state_sources(unit, g, e, depth)),
                StmtKind::Opaque { text, .. } => {
                    for w in words(text) {
                        out.extend(name_sources(unit, g, w, depth));
                    }
                }
                _ => {}
            }
        }
    }
    for r in g.returns.iter().filter_map(|p| p.name.as_ref()) {
        out.extend(name_sources(unit, g, &r.name, depth));
    }
    out
}

/// A call to an upgrade helper defined outside the unit.
pub fn upgrade_helper_call(unit: &ContractUnit, f: &FunctionIR) -> Option<Evidence> {
    let mut found = None;
    for b in &f.cfg.blocks {
        calls::block_calls(b, &mut |c, _| {
            if found.is_some() {
                return;
            }
            let ExprKind::Call { callee, .. } = &c.kind else { return };
            let name = match &callee.kind {
                ExprKind::Ident(n) => n.as_str(),
                ExprKind::Member(_, m) => m.as_str(),
                _ => return,
            };
            if UPGRADE_HELPERS.contains(&name) && !matches!(calls::classify(unit, f, c), CallKind::Internal(_)) {
                found = Some(Evidence::new(c.span, format!("{} calls upgrade helper {name}", f.display())));
            }
        });
    }
    found
}

/// `f`, or something it calls, rewrites an implementation variable or
/// calls an upgrade helper.
pub fn detect_change_impl(unit: &ContractUnit, f: &FunctionIR, proxy: &ProxyFacts) -> Option<Evidence> {
    if !proxy.is_proxy || f.is_constructor {
        return None;
    }
    for g in unit.call_graph.reachable_from(f.id) {
        let g = unit.function(g);
        if g.is_constructor {
            continue;
        }
        let via = if g.id == f.id { String::new() } else { format!(" via {}", g.display()) };
        if let Some(v) = g.writes.iter().find(|v| proxy.impl_vars.contains(*v)) {
            return Some(Evidence::new(super::write_span(g, v).unwrap_or(g.name_span), format!("writes implementation {v}{via}")));
        }
        if let Some(mut e) = upgrade_helper_call(unit, g) {
            e.note.push_str(&via);
            return Some(e);
        }
    }
    None
}
