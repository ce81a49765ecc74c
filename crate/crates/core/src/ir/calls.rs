//! Call-site classification and the intra-unit call graph.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::frontend::ast::{Expr, ExprKind, TypeName};
use crate::frontend::{expr_to_string, Span};

use super::typing::{is_capitalized, is_contract_type, type_of};
use super::{BasicBlock, BlockId, ContractUnit, FuncId, FunctionIR, StmtKind, Terminator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExternalKind {
    MemberCall,
    LowLevelCall,
    DelegateCall,
    StaticCall,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalCallSite {
    pub site_id: usize,
    /// Canonical text of the receiver expression, e.g. `pool`.
    pub target_expr: String,
    /// Called member, or `low-level` for `.call`/`.delegatecall`/`.staticcall`.
    pub callee_name: String,
    pub kind: ExternalKind,
    pub returns_used: bool,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CallKind {
    Internal(FuncId),
    External { target_expr: String, callee_name: String, kind: ExternalKind },
    /// Library function, `using for` operation, or call into an undeclared
    /// capitalized namespace (`FullMath.mulDiv`); treated as opaque and pure.
    Library { library: String, function: String },
    /// Language builtins, type conversions, struct constructors, array ops.
    Builtin(String),
    /// Plain call to a name with no declaration in the unit.
    Unresolved(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallSite {
    pub site_id: usize,
    pub caller: FuncId,
    pub block: BlockId,
    pub span: Span,
    pub kind: CallKind,
    pub returns_used: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CallGraph {
    /// (caller key, callee key) for resolved intra-unit calls.
    pub edges: BTreeSet<(String, String)>,
    pub callees: Vec<BTreeSet<FuncId>>,
    pub callers: Vec<BTreeSet<FuncId>>,
    pub sites: Vec<CallSite>,
}

impl CallGraph {
    pub fn external_sites(&self) -> Vec<ExternalCallSite> {
        self.sites
            .iter()
            .filter_map(|s| match &s.kind {
                CallKind::External { target_expr, callee_name, kind } => Some(ExternalCallSite {
                    site_id: s.site_id,
                    target_expr: target_expr.clone(),
                    callee_name: callee_name.clone(),
                    kind: *kind,
                    returns_used: s.returns_used,
                    span: s.span,
                }),
                _ => None,
            })
            .collect()
    }

    /// Sites whose callee is external, dynamic, or undeclared.
    pub fn unresolved(&self) -> impl Iterator<Item = &CallSite> {
        self.sites.iter().filter(|s| matches!(s.kind, CallKind::External { .. } | CallKind::Unresolved(_)))
    }

    /// Functions reachable from `f` through calls, `f` included.
    pub fn reachable_from(&self, f: FuncId) -> BTreeSet<FuncId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![f];
        while let Some(g) = stack.pop() {
            if seen.insert(g) {
                stack.extend(self.callees.get(g).into_iter().flatten().copied());
            }
        }
        seen
    }
}

pub fn build(unit: &ContractUnit) -> CallGraph {
    let n = unit.functions.len();
    let mut g = CallGraph { callees: vec![BTreeSet::new(); n], callers: vec![BTreeSet::new(); n], ..Default::default() };
    for f in &unit.functions {
        for b in &f.cfg.blocks {
            block_calls(b, &mut |call, used| {
                let kind = classify(unit, f, call);
                if let CallKind::Internal(callee) = kind {
                    g.edges.insert((f.key.clone(), unit.functions[callee].key.clone()));
                    g.callees[f.id].insert(callee);
                    g.callers[callee].insert(f.id);
                }
                let site_id = g.sites.len();
                g.sites.push(CallSite { site_id, caller: f.id, block: b.id, span: call.span, kind, returns_used: used });
            });
        }
    }
    g
}

/// Visits every call expression in a block with whether its value is used.
/// The event call of an `emit` is not a call.
pub fn block_calls<'a>(b: &'a BasicBlock, cb: &mut impl FnMut(&'a Expr, bool)) {
    for s in &b.stmts {
        match &s.kind {
            StmtKind::Expr(e) => walk(e, false, cb),
            StmtKind::Emit(e) => match &e.kind {
                ExprKind::Call { args, .. } => args.iter().for_each(|a| walk(a, true, cb)),
                _ => walk(e, true, cb),
            },
            StmtKind::SetReturn(e) => walk(e, true, cb),
            StmtKind::Decl { init, .. } => {
                if let Some(e) = init {
                    walk(e, true, cb);
                }
            }
            StmtKind::Opaque { .. } => {}
        }
    }
    match &b.term {
        Terminator::Branch { cond: e, .. } | Terminator::Selfdestruct(e) => walk(e, true, cb),
        Terminator::Revert(Some(e)) => match &e.kind {
            // `revert Err(args)`: the error constructor is not a call.
            ExprKind::Call { args, .. } => args.iter().for_each(|a| walk(a, true, cb)),
            _ => walk(e, true, cb),
        },
        _ => {}
    }
}

fn walk<'a>(e: &'a Expr, used: bool, cb: &mut impl FnMut(&'a Expr, bool)) {
    match &e.kind {
        ExprKind::Call { callee, args, options, .. } => {
            cb(e, used);
            match &callee.kind {
                ExprKind::Member(obj, _) => walk(obj, true, cb),
                _ => walk(callee, true, cb),
            }
            args.iter().for_each(|a| walk(a, true, cb));
            options.iter().for_each(|(_, o)| walk(o, true, cb));
        }
        ExprKind::Member(x, _) | ExprKind::Unary(_, x) => walk(x, true, cb),
        ExprKind::Index(a, b) => {
            walk(a, true, cb);
            if let Some(b) = b {
                walk(b, true, cb);
            }
        }
        ExprKind::Binary(_, a, b) | ExprKind::Assign(_, a, b) => {
            walk(a, true, cb);
            walk(b, true, cb);
        }
        ExprKind::Ternary(a, b, c) => {
            walk(a, true, cb);
            walk(b, true, cb);
            walk(c, true, cb);
        }
        ExprKind::Tuple(items) => items.iter().flatten().for_each(|x| walk(x, true, cb)),
        ExprKind::ArrayLit(items) => items.iter().for_each(|x| walk(x, true, cb)),
        _ => {}
    }
}

const BUILTIN_FUNCTIONS: &[&str] = &[
    "require", "assert", "revert", "keccak256", "sha256", "sha3", "ripemd160", "ecrecover", "addmod", "mulmod", "blockhash",
    "gasleft", "selfdestruct", "suicide", "payable", "type",
];

const BUILTIN_NAMESPACES: &[&str] = &["abi", "msg", "block", "tx", "bytes", "string"];

/// Classifies one call expression appearing inside `f`.
pub fn classify(unit: &ContractUnit, f: &FunctionIR, call: &Expr) -> CallKind {
    let ExprKind::Call { callee, args, .. } = &call.kind else {
        return CallKind::Builtin("not-a-call".into());
    };
    match &callee.kind {
        ExprKind::TypeExpr(_) => CallKind::Builtin("conversion".into()),
        ExprKind::New(_) => CallKind::Builtin("new".into()),
        ExprKind::Ident(n) => {
            if BUILTIN_FUNCTIONS.contains(&n.as_str()) {
                return CallKind::Builtin(n.clone());
            }
            if f.is_local(n) {
                // Function-typed local.
                return CallKind::Unresolved(n.clone());
            }
            if let Some(id) = resolve_by_name(unit, f, n, args) {
                return CallKind::Internal(id);
            }
            if unit.known_types.contains_key(n) || unit.structs.contains_key(n) || is_capitalized(n) {
                return CallKind::Builtin("conversion".into());
            }
            CallKind::Unresolved(n.clone())
        }
        ExprKind::Member(obj, m) => member_call(unit, f, obj, m, args),
        // `f()()`, `(cond ? a : b).g()`, ...
        _ => CallKind::Unresolved(expr_to_string(callee)),
    }
}

fn member_call(unit: &ContractUnit, f: &FunctionIR, obj: &Expr, m: &str, args: &[Expr]) -> CallKind {
    let external = |kind| CallKind::External { target_expr: expr_to_string(obj), callee_name: m.to_string(), kind };
    match m {
        "call" => return CallKind::External { target_expr: expr_to_string(obj), callee_name: "low-level".into(), kind: ExternalKind::LowLevelCall },
        "delegatecall" => {
            return CallKind::External { target_expr: expr_to_string(obj), callee_name: "low-level".into(), kind: ExternalKind::DelegateCall }
        }
        "staticcall" => {
            return CallKind::External { target_expr: expr_to_string(obj), callee_name: "low-level".into(), kind: ExternalKind::StaticCall }
        }
        _ => {}
    }
    if let Some(base) = obj.as_ident() {
        let shadowed = f.is_local(base) || unit.state_vars.contains_key(base);
        if !shadowed {
            match base {
                "super" => {
                    return match resolve_super(unit, f, m, args) {
                        Some(id) => CallKind::Internal(id),
                        None => CallKind::Unresolved(format!("super.{m}")),
                    }
                }
                "this" => {
                    return match resolve_by_name(unit, f, m, args) {
                        Some(id) => CallKind::Internal(id),
                        None => CallKind::Unresolved(format!("this.{m}")),
                    }
                }
                _ if BUILTIN_NAMESPACES.contains(&base) => return CallKind::Builtin(format!("{base}.{m}")),
                _ => {}
            }
            if unit.linearization.iter().any(|c| c == base) {
                // Explicit base call `Base.f()`.
                let id = unit.functions.iter().find(|g| g.name == m && g.declared_in == base && g.params.len() == args.len());
                return match id {
                    Some(g) => CallKind::Internal(g.id),
                    None => CallKind::Library { library: base.to_string(), function: m.to_string() },
                };
            }
            match unit.known_types.get(base) {
                Some(crate::frontend::ast::ContractKind::Library) => {
                    return CallKind::Library { library: base.to_string(), function: m.to_string() }
                }
                Some(_) => return CallKind::Builtin(format!("{base}.{m}")),
                None => {}
            }
            if is_capitalized(base) {
                return CallKind::Library { library: base.to_string(), function: m.to_string() };
            }
            // An undeclared lowercase receiver (`pool.slot0()`) is taken to
            // be a contract instance declared in code we cannot see.
            return external(ExternalKind::MemberCall);
        }
    }
    if m == "push" || m == "pop" {
        return CallKind::Builtin(format!("array.{m}"));
    }
    match type_of(unit, f, obj) {
        Some(t) if is_contract_type(unit, &t) => external(ExternalKind::MemberCall),
        Some(t) => match (&t, m) {
            (TypeName::Elementary(_), "transfer" | "send") => CallKind::Builtin(format!("address.{m}")),
            _ => CallKind::Library { library: using_library(unit, &t), function: m.to_string() },
        },
        None => match m {
            "transfer" | "send" if args.len() == 1 => CallKind::Builtin(format!("address.{m}")),
            _ => external(ExternalKind::MemberCall),
        },
    }
}

fn using_library(unit: &ContractUnit, t: &TypeName) -> String {
    unit.using
        .iter()
        .find(|(_, target)| target.as_ref().is_none_or(|x| x.canonical() == t.canonical()))
        .map(|(l, _)| l.clone())
        .unwrap_or_else(|| "?".to_string())
}

/// Overload resolution: by name, then arity, then exact argument types when
/// every argument type is known.
fn resolve_by_name(unit: &ContractUnit, f: &FunctionIR, name: &str, args: &[Expr]) -> Option<FuncId> {
    let candidates: Vec<&FunctionIR> = unit.by_name(name).filter(|g| g.params.len() == args.len()).collect();
    match candidates.len() {
        0 => None,
        1 => Some(candidates[0].id),
        _ => {
            let arg_types: Option<Vec<String>> = args.iter().map(|a| type_of(unit, f, a).map(|t| t.canonical())).collect();
            if let Some(types) = arg_types {
                if let Some(g) = candidates.iter().find(|g| g.params.iter().map(|p| p.ty.canonical()).collect::<Vec<_>>() == types) {
                    return Some(g.id);
                }
            }
            Some(candidates[0].id)
        }
    }
}

/// `super.m(...)` inside a function declared in contract `D` resolves to the
/// first definition of `m` in the linearization after `D`.
fn resolve_super(unit: &ContractUnit, f: &FunctionIR, m: &str, args: &[Expr]) -> Option<FuncId> {
    let pos = unit.linearization.iter().position(|c| *c == f.declared_in)?;
    for c in &unit.linearization[pos + 1..] {
        if let Some(g) = unit.functions.iter().find(|g| g.name == m && &g.declared_in == c && g.params.len() == args.len()) {
            return Some(g.id);
        }
    }
    None
}
