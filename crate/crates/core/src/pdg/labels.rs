//! Block labels. A branch condition is reduced to a set of atoms (reads the
//! caller, reads a privileged variable, reads the timestamp, compares a
//! signature count with a threshold, ...). Locals are expanded through their
//! definitions and internal calls through their return expressions, so
//! `require(owner() == caller)` sees `_owner` and `msg.sender`.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::frontend::ast::{BinOp, Expr, ExprKind, TypeName, UnOp};
use crate::frontend::{expr_to_string, Span};
use crate::ir::typing::{is_uint_type, type_of};
use crate::ir::{calls, CallKind, ContractUnit, FuncId, FunctionIR, StmtKind, Terminator};

use super::privilege::PrivilegeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Label {
    P,
    M,
    T,
    O,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Evidence {
    pub label: Label,
    pub span: Span,
    pub pattern: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockLabels {
    pub labels: BTreeSet<Label>,
    pub evidence: Vec<Evidence>,
    /// Privileged variables named by the P evidence.
    #[serde(skip_serializing_if = "BTreeSet::is_empty")]
    pub privileged: BTreeSet<String>,
}

impl BlockLabels {
    pub fn other() -> Self {
        BlockLabels { labels: [Label::O].into(), evidence: Vec::new(), privileged: BTreeSet::new() }
    }

    pub fn has(&self, l: Label) -> bool {
        self.labels.contains(&l)
    }

    /// Adds a label, dropping `O` once any real label is present.
    pub fn add(&mut self, e: Evidence) {
        self.labels.remove(&Label::O);
        self.labels.insert(e.label);
        self.evidence.push(e);
    }
}

/// Labels for every block of `f`, indexed by block id.
pub fn label_function(unit: &ContractUnit, f: &FunctionIR, privilege: &PrivilegeSet) -> Vec<BlockLabels> {
    let ctx = Ctx::new(unit, f, privilege, BTreeMap::new());
    f.cfg.blocks.iter().map(|b| ctx.label_terminator(&b.term)).collect()
}

#[derive(Debug, Clone, Default)]
struct Atoms {
    sender: bool,
    timestamp: bool,
    privileged: BTreeSet<String>,
    thresholds: BTreeSet<String>,
    /// Signature material, or a count derived from it.
    signatures: bool,
    time_cmp: Vec<(Span, String)>,
    sig_cmp: Vec<(Span, String)>,
}

impl Atoms {
    fn union(&mut self, o: Atoms) {
        self.sender |= o.sender;
        self.timestamp |= o.timestamp;
        self.privileged.extend(o.privileged);
        self.thresholds.extend(o.thresholds);
        self.signatures |= o.signatures;
        self.time_cmp.extend(o.time_cmp);
        self.sig_cmp.extend(o.sig_cmp);
    }
}

const MAX_CALL_DEPTH: usize = 4;

#[derive(Debug, Clone)]
enum Def<'a> {
    Value(&'a Expr),
    /// `x += e`, `x++`: `e` when present.
    Step(Option<&'a Expr>),
}

struct Ctx<'a> {
    unit: &'a ContractUnit,
    f: &'a FunctionIR,
    privilege: &'a PrivilegeSet,
    defs: BTreeMap<&'a str, Vec<Def<'a>>>,
    /// Atoms bound to parameters by a caller when expanding a call.
    bound: BTreeMap<String, Atoms>,
    has_signatures: bool,
    counters: BTreeSet<&'a str>,
    stack: Vec<FuncId>,
}

impl<'a> Ctx<'a> {
    fn new(unit: &'a ContractUnit, f: &'a FunctionIR, privilege: &'a PrivilegeSet, bound: BTreeMap<String, Atoms>) -> Self {
        let defs = local_defs(f);
        let mut has_signatures = signature_params(f).next().is_some();
        for b in &f.cfg.blocks {
            crate::ir::calls::block_calls(b, &mut |c, _| {
                if let ExprKind::Call { callee, .. } = &c.kind {
                    if callee.as_ident() == Some("ecrecover") {
                        has_signatures = true;
                    }
                }
            });
        }
        let counters = defs
            .iter()
            .filter(|(n, ds)| {
                f.locals.get(**n).is_some_and(|t| t.as_ref().is_some_and(is_uint_type))
                    && ds.iter().any(|d| matches!(d, Def::Step(_)))
                    && ds.iter().all(|d| match d {
                        Def::Value(e) => matches!(e.kind, ExprKind::Number(_)),
                        Def::Step(e) => e.is_none_or(|e| matches!(e.kind, ExprKind::Number(_))),
                    })
            })
            .map(|(n, _)| *n)
            .collect();
        Ctx { unit, f, privilege, defs, bound, has_signatures, counters, stack: vec![f.id] }
    }

    fn label_terminator(&self, term: &Terminator) -> BlockLabels {
        let mut out = BlockLabels::other();
        let Terminator::Branch { cond, .. } = term else { return out };
        let a = self.atoms(cond, &mut BTreeSet::new());
        let text = expr_to_string(cond);
        if a.sender && !a.privileged.is_empty() {
            let names: Vec<&str> = a.privileged.iter().map(String::as_str).collect();
            out.add(Evidence {
                label: Label::P,
                span: cond.span,
                pattern: format!("caller checked against privileged {} in `{}`", names.join(", "), text),
            });
            out.privileged = a.privileged.clone();
        }
        if self.has_signatures {
            if let Some((span, cmp)) = a.sig_cmp.first() {
                out.add(Evidence { label: Label::M, span: *span, pattern: format!("signature count compared with threshold in `{cmp}`") });
            }
        }
        if let Some((span, cmp)) = a.time_cmp.first() {
            out.add(Evidence { label: Label::T, span: *span, pattern: format!("timestamp compared with threshold in `{cmp}`") });
        }
        out
    }

    fn param_atoms(&self, name: &str) -> Option<Atoms> {
        let ty = self.f.param_type(name)?;
        let mut a = self.bound.get(name).cloned().unwrap_or_default();
        if is_uint_type(ty) {
            a.thresholds.insert(name.to_string());
        }
        if is_signature_type(ty) || (self.has_signatures && signature_params(self.f).any(|p| p == name)) {
            a.signatures = true;
        }
        Some(a)
    }

    fn atoms(&self, e: &'a Expr, visiting: &mut BTreeSet<&'a str>) -> Atoms {
        let mut a = Atoms::default();
        match &e.kind {
            ExprKind::Ident(n) => {
                let n = n.as_str();
                if let Some(p) = self.param_atoms(n) {
                    a.union(p);
                }
                if self.f.is_local(n) {
                    if self.has_signatures && self.counters.contains(n) {
                        a.signatures = true;
                    }
                    if let Some(ds) = self.defs.get(n) {
                        if visiting.insert(n) {
                            for d in ds {
                                match d {
                                    Def::Value(x) | Def::Step(Some(x)) => a.union(self.atoms(x, visiting)),
                                    Def::Step(None) => {}
                                }
                            }
                            visiting.remove(n);
                        }
                    }
                } else if let Some(v) = self.unit.state_vars.get(n) {
                    if self.privilege.contains(n) {
                        a.privileged.insert(n.to_string());
                    }
                    if is_uint_type(&v.ty) {
                        a.thresholds.insert(n.to_string());
                    }
                }
            }
            ExprKind::Member(obj, _) => {
                let shadowed = obj.as_ident().is_some_and(|b| self.f.is_local(b) || self.unit.state_vars.contains_key(b));
                if e.is_msg_sender() && !shadowed {
                    a.sender = true;
                } else if e.is_block_timestamp() && !shadowed {
                    a.timestamp = true;
                } else {
                    a.union(self.atoms(obj, visiting));
                }
            }
            ExprKind::Index(base, idx) => {
                a.union(self.atoms(base, visiting));
                if let Some(i) = idx {
                    a.union(self.atoms(i, visiting));
                }
                // `limits[k]` of a uint-valued mapping is a threshold too.
                if let Some(root) = base.root_ident() {
                    if !self.f.is_local(root)
                        && self.unit.state_vars.contains_key(root)
                        && type_of(self.unit, self.f, e).as_ref().is_some_and(is_uint_type)
                    {
                        a.thresholds.insert(root.to_string());
                    }
                }
            }
            ExprKind::Call { callee, args, .. } => {
                if callee.as_ident() == Some("ecrecover") {
                    a.signatures = true;
                }
                match calls::classify(self.unit, self.f, e) {
                    CallKind::Internal(id) if self.stack.len() < MAX_CALL_DEPTH && !self.stack.contains(&id) => {
                        a.union(self.expand_call(id, args, visiting));
                    }
                    _ => {
                        if let ExprKind::Member(obj, _) = &callee.kind {
                            a.union(self.atoms(obj, visiting));
                        }
                        for x in args {
                            a.union(self.atoms(x, visiting));
                        }
                    }
                }
            }
            ExprKind::Binary(op, l, r) => {
                let la = self.atoms(l, visiting);
                let ra = self.atoms(r, visiting);
                if op.is_comparison() {
                    let cmp = || (e.span, expr_to_string(e));
                    if (la.timestamp && !ra.thresholds.is_empty()) || (ra.timestamp && !la.thresholds.is_empty()) {
                        a.time_cmp.push(cmp());
                    }
                    if (la.signatures && !ra.thresholds.is_empty()) || (ra.signatures && !la.thresholds.is_empty()) {
                        a.sig_cmp.push(cmp());
                    }
                }
                a.union(la);
                a.union(ra);
            }
            _ => {
                let mut children = Vec::new();
                each_child(e, &mut |c| children.push(c));
                for c in children {
                    a.union(self.atoms(c, visiting));
                }
            }
        }
        a
    }

    /// Atoms of what internal function `id` returns, with its parameters
    /// bound to the argument atoms.
    fn expand_call(&self, id: FuncId, args: &'a [Expr], visiting: &mut BTreeSet<&'a str>) -> Atoms {
        let g = self.unit.function(id);
        let mut bound = BTreeMap::new();
        for (p, x) in g.params.iter().zip(args) {
            if let Some(n) = &p.name {
                bound.insert(n.name.clone(), self.atoms(x, visiting));
            }
        }
        let mut inner = Ctx::new(self.unit, g, self.privilege, bound);
        inner.stack = self.stack.clone();
        inner.stack.push(id);
        let mut a = Atoms::default();
        let mut inner_visiting = BTreeSet::new();
        for b in &g.cfg.blocks {
            for s in &b.stmts {
                if let StmtKind::SetReturn(x) = &s.kind {
                    a.union(inner.atoms(x, &mut inner_visiting));
                }
            }
        }
        for r in g.returns.iter().filter_map(|p| p.name.as_ref()) {
            if let Some(ds) = inner.defs.get(r.name.as_str()) {
                for d in ds.clone() {
                    if let Def::Value(x) | Def::Step(Some(x)) = d {
                        a.union(inner.atoms(x, &mut inner_visiting));
                    }
                }
            }
        }
        // A boolean helper like `isOwner()` checks inside its own body; its
        // condition reaches the caller only through the result.
        a
    }
}

fn each_child<'a>(e: &'a Expr, f: &mut impl FnMut(&'a Expr)) {
    match &e.kind {
        ExprKind::Member(x, _) | ExprKind::Unary(_, x) => f(x),
        ExprKind::Index(a, b) => {
            f(a);
            if let Some(b) = b {
                f(b);
            }
        }
        ExprKind::Call { callee, args, .. } => {
            f(callee);
            args.iter().for_each(&mut *f);
        }
        ExprKind::Binary(_, a, b) | ExprKind::Assign(_, a, b) => {
            f(a);
            f(b);
        }
        ExprKind::Ternary(a, b, c) => {
            f(a);
            f(b);
            f(c);
        }
        ExprKind::Tuple(items) => items.iter().flatten().for_each(&mut *f),
        ExprKind::ArrayLit(items) => items.iter().for_each(&mut *f),
        _ => {}
    }
}

/// Flow-insensitive definitions of every local of `f`.
fn local_defs(f: &FunctionIR) -> BTreeMap<&str, Vec<Def<'_>>> {
    let mut defs: BTreeMap<&str, Vec<Def>> = BTreeMap::new();
    for b in &f.cfg.blocks {
        for s in &b.stmts {
            match &s.kind {
                StmtKind::Decl { vars, init: Some(init) } => {
                    let items = match &init.kind {
                        ExprKind::Tuple(items) if vars.len() > 1 && items.len() == vars.len() => Some(items),
                        _ => None,
                    };
                    for (i, v) in vars.iter().enumerate() {
                        let Some(v) = v else { continue };
                        let x = match items {
                            Some(items) => match &items[i] {
                                Some(x) => x,
                                None => continue,
                            },
                            None => init,
                        };
                        defs.entry(v.name.name.as_str()).or_default().push(Def::Value(x));
                    }
                }
                StmtKind::Expr(e) => e.walk(&mut |x| match &x.kind {
                    ExprKind::Assign(op, lhs, rhs) => {
                        let mut targets = Vec::new();
                        assigned_locals(f, lhs, &mut targets);
                        for t in targets {
                            let d = match (op, &lhs.kind) {
                                (Some(BinOp::Add), _) => Def::Step(Some(&**rhs)),
                                (None, ExprKind::Ident(n)) if is_self_increment(n, rhs) => match &rhs.kind {
                                    ExprKind::Binary(_, _, r) => Def::Step(Some(&**r)),
                                    _ => Def::Value(rhs),
                                },
                                _ => Def::Value(rhs),
                            };
                            defs.entry(t).or_default().push(d);
                        }
                    }
                    ExprKind::Unary(UnOp::PreInc | UnOp::PostInc, inner) => {
                        if let Some(n) = inner.as_ident().filter(|n| f.is_local(n)) {
                            defs.entry(n).or_default().push(Def::Step(None));
                        }
                    }
                    _ => {}
                }),
                _ => {}
            }
        }
    }
    defs
}

fn is_self_increment(n: &str, rhs: &Expr) -> bool {
    matches!(&rhs.kind, ExprKind::Binary(BinOp::Add, l, _) if l.as_ident() == Some(n))
}

fn assigned_locals<'a>(f: &FunctionIR, lhs: &'a Expr, out: &mut Vec<&'a str>) {
    match &lhs.kind {
        ExprKind::Tuple(items) => {
            for x in items.iter().flatten() {
                assigned_locals(f, x, out);
            }
        }
        _ => {
            if let Some(n) = lhs.root_ident().filter(|n| f.is_local(n)) {
                out.push(n);
            }
        }
    }
}

/// `bytes[]`, arrays of signature structs, or parallel `v`/`r`/`s` arrays.
fn is_signature_type(t: &TypeName) -> bool {
    match t {
        TypeName::Array(elem, _) => match &**elem {
            TypeName::Elementary(s) => s == "bytes",
            TypeName::UserDefined(path) => path.last().is_some_and(|n| n.to_ascii_lowercase().contains("sig")),
            _ => false,
        },
        _ => false,
    }
}

/// Names of parameters (own and inlined-modifier) carrying signature material.
fn signature_params(f: &FunctionIR) -> impl Iterator<Item = &str> {
    let params: Vec<&crate::frontend::ast::Param> = f.params.iter().chain(f.modifier_params.iter().map(|m| &m.param)).collect();
    let is_arr = |p: &&crate::frontend::ast::Param, elem: &str| {
        matches!(&p.ty, TypeName::Array(e, _) if matches!(&**e, TypeName::Elementary(s) if s == elem))
    };
    let vrs = params.iter().any(|p| is_arr(p, "uint8")) && params.iter().filter(|p| is_arr(p, "bytes32")).count() >= 2;
    params
        .into_iter()
        .filter(move |p| is_signature_type(&p.ty) || (vrs && (is_arr(p, "uint8") || is_arr(p, "bytes32"))))
        .filter_map(|p| p.name.as_ref().map(|n| n.name.as_str()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_source, ParseOptions};
    use crate::ir::lower;

    fn labels_of(src: &str, func: &str, privileged: &[&str]) -> Vec<BlockLabels> {
        let ast = parse_source(src, &ParseOptions::default());
        assert!(!ast.has_errors(), "{:?}", ast.diagnostics);
        let unit = lower(&ast).units.pop().unwrap();
        let f = unit.by_key(func).unwrap();
        let privilege = PrivilegeSet::from_names(privileged);
        label_function(&unit, f, &privilege)
    }

    fn any(ls: &[BlockLabels], l: Label) -> bool {
        ls.iter().any(|b| b.has(l))
    }

    #[test]
    fn owner_check_in_modifier() {
        let ls = labels_of(include_str!("../../tests/fixtures/canonical/mint.sol"), "mint(address,uint256)", &["_owner"]);
        assert!(ls[0].has(Label::P));
        assert!(ls[0].evidence[0].pattern.contains("_owner"));
        assert_eq!(ls.iter().filter(|b| b.has(Label::P)).count(), 1);
        assert!(!any(&ls, Label::M) && !any(&ls, Label::T));
    }

    #[test]
    fn role_mapping_indexed_by_caller() {
        let ls = labels_of(
            "contract A { mapping(address => bool) admins; uint x; function f() public { require(admins[msg.sender]); x = 1; } }",
            "f()",
            &["admins"],
        );
        assert!(ls[0].has(Label::P));
    }

    #[test]
    fn plain_assignment_is_other() {
        let ls = labels_of("contract A { uint x; function f() public { x = 1; } }", "f()", &[]);
        assert_eq!(ls, [BlockLabels::other()]);
    }

    #[test]
    fn caller_without_privileged_variable_is_not_p() {
        let ls = labels_of("contract A { uint x; function f() public { require(msg.sender == tx.origin); x = 1; } }", "f()", &[]);
        assert!(!any(&ls, Label::P));
    }

    #[test]
    fn owner_through_getter_and_local() {
        let ls = labels_of(
            "contract A { address o; function owner() public view returns (address) { return o; }
              function f() public { address c = msg.sender; require(owner() == c); } }",
            "f()",
            &["o"],
        );
        assert!(ls[0].has(Label::P));
    }

    #[test]
    fn timelock_modifiers() {
        let src = format!("contract T {{ uint256 x; {} function f() public onlyAfter(5) onlyBefore(9) {{ x = 1; }} }}", include_str!("../../tests/fixtures/fragments/timelock_modifiers.sol"));
        let ls = labels_of(&src, "f()", &[]);
        let t: Vec<&BlockLabels> = ls.iter().filter(|b| b.has(Label::T)).collect();
        assert_eq!(t.len(), 2);
        assert!(t[0].evidence[0].pattern.contains("block.timestamp <= time"));
    }

    #[test]
    fn timestamp_only_stored_is_not_t() {
        let ls = labels_of("contract A { uint last; function f() public { last = block.timestamp; } }", "f()", &[]);
        assert!(!any(&ls, Label::T));
    }

    #[test]
    fn multisig_count_against_threshold() {
        let ls = labels_of(
            "contract W { uint threshold; uint x;
               function countValid(bytes[] memory sigs) internal view returns (uint n) { n = sigs.length; }
               function f(bytes[] memory sigs) public { require(countValid(sigs) >= threshold); x = 1; } }",
            "f(bytes[])",
            &[],
        );
        assert!(ls[0].has(Label::M));
    }

    #[test]
    fn multisig_loop_counter() {
        let ls = labels_of(
            "contract W { uint threshold; mapping(address => bool) isSigner; uint x;
               function f(bytes32 h, uint8[] memory v, bytes32[] memory r, bytes32[] memory s) public {
                 uint valid = 0;
                 for (uint i = 0; i < v.length; i++) { if (isSigner[ecrecover(h, v[i], r[i], s[i])]) valid++; }
                 require(valid >= threshold);
                 x = 1;
               } }",
            "f(bytes32,uint8[],bytes32[],bytes32[])",
            &[],
        );
        assert_eq!(ls.iter().filter(|b| b.has(Label::M)).count(), 1);
    }

    #[test]
    fn uint_comparison_without_signatures_is_not_m() {
        let ls = labels_of("contract A { uint t; function f(uint a) public { uint b = a; require(b >= t); } }", "f(uint256)", &[]);
        assert!(!any(&ls, Label::M));
    }
}
