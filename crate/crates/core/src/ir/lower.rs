use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::ast::{Ast, ContractDecl, ContractKind, Expr, ExprKind, FunctionDecl, FunctionKind, ModifierDecl, Mutability, Visibility};
use crate::frontend::{Diagnostic, DiagnosticKind, Span};

use super::access::{block_accesses, AccessKind};
use super::cfg::{self, Inline};
use super::{
    calls, inherit, prelude, BasicBlock, Cfg, ContractUnit, FunctionIR, ModifierParam, Origin, StateVarInfo, Stmt, StmtKind,
    Terminator, STATE_INIT,
};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Lowered {
    pub units: Vec<ContractUnit>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Lowers every non-interface contract of `ast` to a [`ContractUnit`].
pub fn lower(ast: &Ast) -> Lowered {
    let mut contracts = ast.contracts.clone();
    let hierarchy = inherit::resolve(&contracts);
    let injected = prelude::inject(&mut contracts, &hierarchy.order, &hierarchy.ancestors());
    let known_types: BTreeMap<String, ContractKind> = contracts.iter().map(|c| (c.name.name.clone(), c.kind)).collect();
    let mut diagnostics = hierarchy.diagnostics.clone();
    let mut units = Vec::new();
    for (i, c) in contracts.iter().enumerate() {
        if c.kind == ContractKind::Interface {
            continue;
        }
        let lin: Vec<&ContractDecl> = hierarchy.linearization[i].iter().map(|&j| &contracts[j]).collect();
        let empty = BTreeSet::new();
        let ambient = |decl: &ContractDecl, name: &str| injected.get(&decl.name.name).unwrap_or(&empty).contains(name);
        units.push(lower_contract(c, &lin, &known_types, &ambient, &mut diagnostics));
    }
    Lowered { units, diagnostics }
}

fn lower_contract(
    c: &ContractDecl,
    lin: &[&ContractDecl],
    known_types: &BTreeMap<String, ContractKind>,
    ambient: &dyn Fn(&ContractDecl, &str) -> bool,
    diagnostics: &mut Vec<Diagnostic>,
) -> ContractUnit {
    let mut unit = ContractUnit {
        name: c.name.name.clone(),
        kind: c.kind,
        linearization: lin.iter().map(|d| d.name.name.clone()).collect(),
        state_vars: BTreeMap::new(),
        functions: Vec::new(),
        call_graph: Default::default(),
        events: BTreeSet::new(),
        structs: BTreeMap::new(),
        using: Vec::new(),
        known_types: known_types.clone(),
        span: c.span,
    };

    // Most base first, so base members precede derived ones.
    for d in lin.iter().rev() {
        for v in &d.state_vars {
            unit.state_vars.entry(v.name.name.clone()).or_insert_with(|| StateVarInfo {
                name: v.name.name.clone(),
                ty: v.ty.clone(),
                visibility: v.visibility,
                constant: v.constant,
                immutable: v.immutable,
                initializer: v.initializer.clone(),
                initialized_at_creation: false,
                written_by: BTreeSet::new(),
                read_by: BTreeSet::new(),
                declared_in: d.name.name.clone(),
                ambient: ambient(d, &v.name.name),
                span: v.span,
            });
        }
        unit.events.extend(d.events.iter().map(|e| e.name.name.clone()));
        for s in &d.structs {
            unit.structs.insert(s.name.name.clone(), s.fields.clone());
        }
        for e in &d.enums {
            unit.structs.entry(e.name.name.clone()).or_default();
        }
        unit.using.extend(d.using.iter().map(|u| (u.library.clone(), u.target.clone())));
    }

    // Most derived definition of each modifier wins.
    let mut modifiers: BTreeMap<&str, &ModifierDecl> = BTreeMap::new();
    for d in lin {
        for m in &d.modifiers {
            modifiers.entry(m.name.name.as_str()).or_insert(m);
        }
    }

    let mut seen_sigs = BTreeSet::new();
    for d in lin {
        for f in &d.functions {
            let sig = f.signature();
            let (key, overridden) = if f.is_constructor() {
                if d.name.name == c.name.name {
                    (sig.clone(), false)
                } else {
                    (format!("{}::{}", d.name.name, sig), false)
                }
            } else if seen_sigs.insert(sig.clone()) {
                (sig.clone(), false)
            } else {
                (format!("{}::{}", d.name.name, sig), true)
            };
            let id = unit.functions.len();
            let ir = lower_function(f, d, lin, &modifiers, id, key, overridden, ambient(d, &f.name), diagnostics);
            unit.functions.push(ir);
        }
    }

    if let Some(init) = state_init(lin, unit.functions.len()) {
        unit.functions.push(init);
    }

    compute_access(&mut unit);
    unit.call_graph = calls::build(&unit);
    unit
}

#[allow(clippy::too_many_arguments)]
fn lower_function(
    f: &FunctionDecl,
    declared_in: &ContractDecl,
    lin: &[&ContractDecl],
    modifiers: &BTreeMap<&str, &ModifierDecl>,
    id: usize,
    key: String,
    overridden: bool,
    ambient: bool,
    diagnostics: &mut Vec<Diagnostic>,
) -> FunctionIR {
    let mut inlines = Vec::new();
    let mut modifier_params = Vec::new();
    let mut names = Vec::new();
    for inv in &f.modifiers_invoked {
        let name = inv.name.name.as_str();
        match modifiers.get(name) {
            Some(m) => {
                inlines.push(Inline { name: &m.name.name, params: &m.params, args: &inv.args, body: m.body.as_ref(), span: inv.span });
                modifier_params.extend(m.params.iter().map(|p| ModifierParam { modifier: name.to_string(), param: p.clone() }));
                names.push(name.to_string());
            }
            // Base constructor arguments in a constructor header.
            None if lin.iter().any(|d| d.name.name == name) => {}
            None => diagnostics.push(Diagnostic::warning(
                DiagnosticKind::UnresolvedModifier { modifier: name.to_string() },
                inv.name.span,
                format!("modifier `{name}` is not declared in this file; it is ignored"),
            )),
        }
    }
    let cfg = cfg::build(f.body.as_ref(), f.span, &inlines);

    let mut locals = BTreeMap::new();
    for p in f.params.iter().chain(&f.returns).chain(modifier_params.iter().map(|m| &m.param)) {
        if let Some(n) = &p.name {
            locals.entry(n.name.clone()).or_insert_with(|| Some(p.ty.clone()));
        }
    }
    for b in &cfg.blocks {
        for s in &b.stmts {
            if let StmtKind::Decl { vars, .. } = &s.kind {
                for v in vars.iter().flatten() {
                    locals.entry(v.name.name.clone()).or_insert_with(|| v.ty.clone());
                }
            }
        }
    }

    FunctionIR {
        id,
        signature: f.signature(),
        key,
        name: f.name.clone(),
        kind: f.kind,
        visibility: f.visibility,
        mutability: f.mutability,
        is_constructor: f.is_constructor(),
        overridden,
        ambient,
        declared_in: declared_in.name.name.clone(),
        params: f.params.clone(),
        returns: f.returns.clone(),
        modifier_params,
        modifiers: names,
        cfg,
        reads: BTreeSet::new(),
        writes: BTreeSet::new(),
        locals,
        has_body: f.body.is_some(),
        span: f.span,
        name_span: f.name_span,
    }
}

/// Initializers of state variables run at creation; they are collected into
/// one synthetic constructor-like function as plain assignments.
fn state_init(lin: &[&ContractDecl], id: usize) -> Option<FunctionIR> {
    let mut stmts = Vec::new();
    let mut span: Option<Span> = None;
    for d in lin.iter().rev() {
        for v in &d.state_vars {
            let Some(init) = &v.initializer else { continue };
            let lhs = Expr::new(ExprKind::Ident(v.name.name.clone()), v.name.span);
            let assign = Expr::new(ExprKind::Assign(None, Box::new(lhs), Box::new(init.clone())), v.span);
            stmts.push(Stmt { kind: StmtKind::Expr(assign), span: v.span });
            span = Some(span.map_or(v.span, |s| s.to(v.span)));
        }
    }
    let span = span?;
    let block = BasicBlock { id: 0, stmts, term: Terminator::End, span, origin: Origin::Body };
    Some(FunctionIR {
        id,
        signature: format!("{STATE_INIT}()"),
        key: STATE_INIT.to_string(),
        name: STATE_INIT.to_string(),
        kind: FunctionKind::Constructor,
        visibility: Visibility::Internal,
        mutability: Mutability::Nonpayable,
        is_constructor: true,
        overridden: false,
        ambient: false,
        declared_in: lin[0].name.name.clone(),
        params: Vec::new(),
        returns: Vec::new(),
        modifier_params: Vec::new(),
        modifiers: Vec::new(),
        cfg: Cfg { blocks: vec![block], body_entry: Some(0) },
        reads: BTreeSet::new(),
        writes: BTreeSet::new(),
        locals: BTreeMap::new(),
        has_body: true,
        span,
        name_span: span,
    })
}

fn compute_access(unit: &mut ContractUnit) {
    let state: BTreeSet<String> = unit.state_vars.keys().cloned().collect();
    for f in &mut unit.functions {
        let is_state = |n: &str| state.contains(n) && !f.locals.contains_key(n);
        let mut reads = BTreeSet::new();
        let mut writes = BTreeSet::new();
        for b in &f.cfg.blocks {
            for a in block_accesses(b, &is_state) {
                if !is_state(&a.name) {
                    continue;
                }
                match a.kind {
                    AccessKind::Read => reads.insert(a.name),
                    AccessKind::Write => writes.insert(a.name),
                };
            }
        }
        f.reads = reads;
        f.writes = writes;
    }
    for f in &unit.functions {
        for r in &f.reads {
            unit.state_vars.get_mut(r).unwrap().read_by.insert(f.key.clone());
        }
        for w in &f.writes {
            let v = unit.state_vars.get_mut(w).unwrap();
            v.written_by.insert(f.key.clone());
            if f.is_constructor {
                v.initialized_at_creation = true;
            }
        }
    }
    for v in unit.state_vars.values_mut() {
        if v.initializer.is_some() {
            v.initialized_at_creation = true;
        }
    }
}
