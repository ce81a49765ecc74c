//! Fungible-token shape and minting.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::frontend::ast::{BinOp, Expr, ExprKind, UnOp};
use crate::frontend::Span;
use crate::ir::typing::{is_address_to_uint_mapping, is_uint_type};
use crate::ir::{ContractUnit, FunctionIR, StmtKind};

use super::Evidence;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TokenFacts {
    pub is_token: bool,
    pub balance_vars: BTreeSet<String>,
    pub evidence: Vec<Evidence>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Update {
    pub var: String,
    pub increase: bool,
    pub span: Span,
}

/// Entry-level increases and decreases of the named mappings in `f`'s own
/// statements. `m[k] += x`, `m[k]++`, `m[k] = a + b` and `m[k] = a.add(b)`
/// increase; the subtracting forms decrease; plain stores are neither.
pub fn updates(f: &FunctionIR, vars: &BTreeSet<String>) -> Vec<Update> {
    let mut out = Vec::new();
    let root = |e: &Expr| e.root_ident().filter(|n| vars.contains(*n) && !f.is_local(n)).map(str::to_string);
    for b in &f.cfg.blocks {
        for s in &b.stmts {
            let StmtKind::Expr(e) = &s.kind else { continue };
            e.walk(&mut |x| {
                let found = match &x.kind {
                    ExprKind::Assign(Some(BinOp::Add), l, _) => root(l).map(|v| (v, true)),
                    ExprKind::Assign(Some(BinOp::Sub), l, _) => root(l).map(|v| (v, false)),
                    ExprKind::Assign(None, l, r) => root(l).zip(sum_kind(r)),
                    ExprKind::Unary(UnOp::PreInc | UnOp::PostInc, l) => root(l).map(|v| (v, true)),
                    ExprKind::Unary(UnOp::PreDec | UnOp::PostDec, l) => root(l).map(|v| (v, false)),
                    _ => None,
                };
                if let Some((var, increase)) = found {
                    out.push(Update { var, increase, span: x.span });
                }
            });
        }
    }
    out
}

fn sum_kind(e: &Expr) -> Option<bool> {
    match &e.kind {
        ExprKind::Binary(BinOp::Add, ..) => Some(true),
        ExprKind::Binary(BinOp::Sub, ..) => Some(false),
        ExprKind::Call { callee, .. } => match &callee.kind {
            ExprKind::Member(_, m) if m == "add" || m == "tryAdd" => Some(true),
            ExprKind::Member(_, m) if m == "sub" || m == "trySub" => Some(false),
            _ => None,
        },
        ExprKind::Tuple(items) if items.len() == 1 => items[0].as_ref().and_then(sum_kind),
        _ => None,
    }
}

fn is_transfer_like(f: &FunctionIR) -> bool {
    if matches!(f.name.as_str(), "transfer" | "transferFrom" | "_transfer") {
        return true;
    }
    f.cfg.blocks.iter().flat_map(|b| &b.stmts).any(|s| {
        matches!(&s.kind, StmtKind::Emit(e) if matches!(&e.kind, ExprKind::Call { callee, args, .. } if callee.as_ident() == Some("Transfer") && args.len() == 3))
    })
}

/// A unit is a token when an address-to-uint mapping is read by a
/// `balanceOf` returning uint, is both increased and decreased by
/// transfer-like functions (by name or by emitting `Transfer`), or is named
/// like a balance table.
pub fn detect_token(unit: &ContractUnit) -> TokenFacts {
    let candidates: BTreeSet<String> =
        unit.state_vars.values().filter(|v| is_address_to_uint_mapping(&v.ty)).map(|v| v.name.clone()).collect();
    let mut facts = TokenFacts::default();
    if candidates.is_empty() {
        return facts;
    }

    let reach = |f: &FunctionIR| unit.call_graph.reachable_from(f.id);
    let mut found: BTreeMap<String, Evidence> = BTreeMap::new();

    for f in unit.functions.iter().filter(|f| f.name == "balanceOf" && f.returns.len() == 1 && is_uint_type(&f.returns[0].ty)) {
        for g in reach(f) {
            for v in unit.function(g).reads.intersection(&candidates) {
                found.entry(v.clone()).or_insert_with(|| Evidence::new(f.name_span, format!("{v} read by {}", f.display())));
            }
        }
    }

    let mut inc: BTreeMap<String, Span> = BTreeMap::new();
    let mut dec: BTreeMap<String, Span> = BTreeMap::new();
    let mut flow = BTreeSet::new();
    for f in unit.functions.iter().filter(|f| is_transfer_like(f)) {
        flow.extend(reach(f));
    }
    for g in flow {
        for u in updates(unit.function(g), &candidates) {
            let side = if u.increase { &mut inc } else { &mut dec };
            side.entry(u.var).or_insert(u.span);
        }
    }
    for (v, span) in &inc {
        if dec.contains_key(v) {
            found.entry(v.clone()).or_insert_with(|| Evidence::new(*span, format!("{v} increased and decreased by transfer-like functions")));
        }
    }

    for v in &candidates {
        if v.to_ascii_lowercase().contains("balance") {
            let span = unit.state_vars[v].span;
            found.entry(v.clone()).or_insert_with(|| Evidence::new(span, format!("{v} is a balance table")));
        }
    }

    facts.is_token = !found.is_empty();
    facts.balance_vars = found.keys().cloned().collect();
    facts.evidence = found.into_values().collect();
    facts
}

/// Increase of a balance entry reachable from `f` with no decrease of any
/// balance entry on the same reachable set.
pub fn detect_mint(unit: &ContractUnit, f: &FunctionIR, balance_vars: &BTreeSet<String>) -> Option<Evidence> {
    let mut first_inc = None;
    for g in unit.call_graph.reachable_from(f.id) {
        let g = unit.function(g);
        for u in updates(g, balance_vars) {
            if !u.increase {
                return None;
            }
            if first_inc.is_none() {
                let via = if g.id == f.id { String::new() } else { format!(" via {}", g.display()) };
                first_inc = Some(Evidence::new(u.span, format!("{} increased without a paired decrease{via}", u.var)));
            }
        }
    }
    first_inc
}
