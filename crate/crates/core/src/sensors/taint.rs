//! Which external outputs can reach each state variable. Flow- and
//! key-insensitive: every assignment is an edge from the values on its
//! right to the root of its left, calls bind arguments to parameters and
//! returns to the call, and an external call's result is a source.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::frontend::ast::{Expr, ExprKind};
use crate::frontend::Span;
use crate::ir::{calls, CallKind, ContractUnit, FuncId, FunctionIR, StmtKind, Terminator};

use super::Evidence;

/// Identity of an external output: the receiver expression and the called
/// member. With distinct sites enabled the call site is part of it too.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceKey {
    pub target: String,
    pub callee: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<usize>,
}

impl fmt::Display for SourceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.target, self.callee)?;
        if let Some(s) = self.site {
            write!(f, "#{s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaintPath {
    pub source: SourceKey,
    pub steps: Vec<Evidence>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaintFact {
    pub var: String,
    pub sources: BTreeSet<SourceKey>,
    /// One chain per source, from the external call to the state write.
    pub paths: Vec<TaintPath>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TaintOptions {
    /// Count each call site as its own source.
    pub distinct_sites: bool,
    /// Drop sources whose value is checked by some branch condition.
    pub respect_guards: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Node {
    Local(FuncId, String),
    Return(FuncId),
    State(String),
    Source(SourceKey),
}

struct Edge {
    to: Node,
    span: Span,
    note: String,
}

struct Graph<'a> {
    unit: &'a ContractUnit,
    opts: TaintOptions,
    edges: BTreeMap<Node, Vec<Edge>>,
    seeds: BTreeMap<SourceKey, Span>,
}

impl<'a> Graph<'a> {
    fn edge(&mut self, from: Node, to: Node, span: Span, note: String) {
        if from != to {
            self.edges.entry(from).or_default().push(Edge { to, span, note });
        }
    }

    fn name_node(&self, f: &FunctionIR, n: &str) -> Option<Node> {
        if f.is_local(n) {
            Some(Node::Local(f.id, n.to_string()))
        } else if self.unit.state_vars.contains_key(n) {
            Some(Node::State(n.to_string()))
        } else {
            None
        }
    }

    fn site_of(&self, f: &FunctionIR, call: &Expr) -> Option<usize> {
        self.unit.call_graph.sites.iter().find(|s| s.caller == f.id && s.span == call.span).map(|s| s.site_id)
    }

    /// Nodes whose value can flow into the value of `e`.
    fn values(&mut self, f: &FunctionIR, e: &Expr, out: &mut Vec<Node>) {
        match &e.kind {
            ExprKind::Ident(n) => out.extend(self.name_node(f, n)),
            ExprKind::Member(obj, _) => self.values(f, obj, out),
            ExprKind::Index(base, _) => self.values(f, base, out),
            ExprKind::Call { callee, args, .. } => match calls::classify(self.unit, f, e) {
                CallKind::External { target_expr, callee_name, .. } => {
                    let site = if self.opts.distinct_sites { self.site_of(f, e) } else { None };
                    let key = SourceKey { target: target_expr, callee: callee_name, site };
                    self.seeds.entry(key.clone()).or_insert(e.span);
                    out.push(Node::Source(key));
                }
                CallKind::Internal(g) => out.push(Node::Return(g)),
                CallKind::Builtin(_) if callee.as_ident() == Some("ecrecover") || callee.as_ident() == Some("blockhash") => {}
                _ => {
                    if let ExprKind::Member(obj, _) = &callee.kind {
                        self.values(f, obj, out);
                    }
                    for a in args {
                        self.values(f, a, out);
                    }
                }
            },
            ExprKind::Ternary(_, a, b) => {
                self.values(f, a, out);
                self.values(f, b, out);
            }
            ExprKind::Assign(_, l, r) => {
                self.values(f, l, out);
                self.values(f, r, out);
            }
            ExprKind::Binary(_, a, b) => {
                self.values(f, a, out);
                self.values(f, b, out);
            }
            ExprKind::Unary(_, x) => self.values(f, x, out),
            ExprKind::Tuple(items) => {
                for x in items.iter().flatten() {
                    self.values(f, x, out);
                }
            }
            ExprKind::ArrayLit(items) => {
                for x in items {
                    self.values(f, x, out);
                }
            }
            _ => {}
        }
    }

    fn flow_into(&mut self, f: &FunctionIR, target: &Expr, value: &Expr, span: Span) {
        if let (ExprKind::Tuple(ls), ExprKind::Tuple(rs)) = (&target.kind, &value.kind) {
            if ls.len() == rs.len() {
                for (l, r) in ls.iter().zip(rs) {
                    if let (Some(l), Some(r)) = (l, r) {
                        self.flow_into(f, l, r, span);
                    }
                }
                return;
            }
        }
        let mut targets = Vec::new();
        roots(target, &mut targets);
        let mut from = Vec::new();
        self.values(f, value, &mut from);
        for t in targets {
            let Some(to) = self.name_node(f, t) else { continue };
            for n in &from {
                self.edge(n.clone(), to.clone(), span, format!("assigned to {t} in {}", f.display()));
            }
        }
    }

    fn function(&mut self, f: &FunctionIR) {
        for r in f.returns.iter().filter_map(|p| p.name.as_ref()) {
            self.edge(Node::Local(f.id, r.name.clone()), Node::Return(f.id), r.span, format!("returned by {}", f.display()));
        }
        for b in &f.cfg.blocks {
            for s in &b.stmts {
                match &s.kind {
                    StmtKind::Decl { vars, init: Some(init) } => {
                        let target = if vars.len() == 1 {
                            vars[0].as_ref().map(|v| Expr::new(ExprKind::Ident(v.name.name.clone()), v.name.span))
                        } else {
                            let items = vars.iter().map(|v| v.as_ref().map(|v| Expr::new(ExprKind::Ident(v.name.name.clone()), v.name.span))).collect();
                            Some(Expr::new(ExprKind::Tuple(items), s.span))
                        };
                        if let Some(t) = target {
                            self.flow_into(f, &t, init, s.span);
                        }
                        self.call_bindings(f, init);
                    }
                    StmtKind::Expr(e) => {
                        let mut assigns = Vec::new();
                        e.walk(&mut |x| match &x.kind {
                            ExprKind::Assign(_, l, r) => assigns.push((&**l, &**r, x.span)),
                            ExprKind::Call { callee, args, .. } => {
                                if let ExprKind::Member(obj, m) = &callee.kind {
                                    if m == "push" && args.len() == 1 {
                                        assigns.push((&**obj, &args[0], x.span));
                                    }
                                }
                            }
                            _ => {}
                        });
                        for (l, r, span) in assigns {
                            self.flow_into(f, l, r, span);
                        }
                        self.call_bindings(f, e);
                    }
                    StmtKind::SetReturn(e) => {
                        let mut from = Vec::new();
                        self.values(f, e, &mut from);
                        for n in from {
                            self.edge(n, Node::Return(f.id), s.span, format!("returned by {}", f.display()));
                        }
                        self.call_bindings(f, e);
                    }
                    StmtKind::Emit(e) => self.call_bindings(f, e),
                    StmtKind::Decl { init: None, .. } | StmtKind::Opaque { .. } => {}
                }
            }
            if let Terminator::Branch { cond: e, .. } | Terminator::Selfdestruct(e) | Terminator::Revert(Some(e)) = &b.term {
                self.call_bindings(f, e);
            }
        }
    }

    /// Arguments of internal calls inside `e` flow into the callee's
    /// parameters.
    fn call_bindings(&mut self, f: &FunctionIR, e: &Expr) {
        let mut calls_in = Vec::new();
        e.walk(&mut |x| {
            if matches!(x.kind, ExprKind::Call { .. }) {
                calls_in.push(x);
            }
        });
        for c in calls_in {
            let CallKind::Internal(g) = calls::classify(self.unit, f, c) else { continue };
            let ExprKind::Call { args, .. } = &c.kind else { continue };
            let callee = self.unit.function(g);
            let params: Vec<(String, Span)> = callee.params.iter().filter_map(|p| p.name.as_ref().map(|n| (n.name.clone(), n.span))).collect();
            for ((p, _), a) in params.into_iter().zip(args) {
                let mut from = Vec::new();
                self.values(f, a, &mut from);
                for n in from {
                    self.edge(n, Node::Local(g, p.clone()), c.span, format!("passed as {p} to {}", callee.display()));
                }
            }
        }
    }
}

fn roots<'e>(e: &'e Expr, out: &mut Vec<&'e str>) {
    match &e.kind {
        ExprKind::Tuple(items) => items.iter().flatten().for_each(|x| roots(x, out)),
        _ => out.extend(e.root_ident()),
    }
}

pub fn taint_outputs(unit: &ContractUnit, opts: TaintOptions) -> Vec<TaintFact> {
    let mut g = Graph { unit, opts, edges: BTreeMap::new(), seeds: BTreeMap::new() };
    for f in &unit.functions {
        g.function(f);
    }

    // Forward search from each source, remembering how each node was first
    // reached.
    let mut reached: Reached = BTreeMap::new();
    for key in g.seeds.keys() {
        let start = Node::Source(key.clone());
        let mut parent: BTreeMap<Node, Option<(Node, usize)>> = BTreeMap::new();
        parent.insert(start.clone(), None);
        let mut queue = VecDeque::from([start]);
        while let Some(n) = queue.pop_front() {
            for (i, e) in g.edges.get(&n).into_iter().flatten().enumerate() {
                if !parent.contains_key(&e.to) {
                    parent.insert(e.to.clone(), Some((n.clone(), i)));
                    queue.push_back(e.to.clone());
                }
            }
        }
        reached.insert(key.clone(), parent);
    }

    let guarded: BTreeSet<SourceKey> = if opts.respect_guards { guarded_sources(unit, &mut g, &reached) } else { BTreeSet::new() };

    let mut facts = Vec::new();
    for var in unit.state_vars.keys() {
        let node = Node::State(var.clone());
        let mut sources = BTreeSet::new();
        let mut paths = Vec::new();
        for (key, parent) in &reached {
            if guarded.contains(key) || !parent.contains_key(&node) {
                continue;
            }
            sources.insert(key.clone());
            let mut steps = Vec::new();
            let mut cur = node.clone();
            while let Some(Some((prev, i))) = parent.get(&cur) {
                let e = &g.edges[prev][*i];
                steps.push(Evidence::new(e.span, e.note.clone()));
                cur = prev.clone();
            }
            steps.push(Evidence::new(g.seeds[key], format!("output of {key}")));
            steps.reverse();
            paths.push(TaintPath { source: key.clone(), steps });
        }
        if !sources.is_empty() {
            facts.push(TaintFact { var: var.clone(), sources, paths });
        }
    }
    facts
}

/// Per source, every node it reaches with the parent link found by the search.
type Reached = BTreeMap<SourceKey, BTreeMap<Node, Option<(Node, usize)>>>;

/// Sources whose value reaches some branch condition.
fn guarded_sources(unit: &ContractUnit, g: &mut Graph, reached: &Reached) -> BTreeSet<SourceKey> {
    let mut checked = Vec::new();
    for f in &unit.functions {
        for b in &f.cfg.blocks {
            if let Terminator::Branch { cond, .. } = &b.term {
                g.values(f, cond, &mut checked);
            }
        }
    }
    reached.iter().filter(|(_, p)| checked.iter().any(|n| p.contains_key(n))).map(|(k, _)| k.clone()).collect()
}
