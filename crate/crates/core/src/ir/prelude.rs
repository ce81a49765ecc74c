//! Ambient declarations for the Ownable / ERC20 / proxy-admin idioms.
//!
//! Snippets taken from real contracts routinely reference inherited members
//! (`_owner`, `onlyOwner`, `_transfer`, `getAdmin`) whose declarations live in
//! library code that is not part of the scanned file. When a contract
//! references one of these names without declaring it anywhere in its
//! in-file ancestry, the matching declaration below is copied into the
//! contract, re-spanned to the first referencing site, and marked ambient.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use crate::frontend::ast::*;
use crate::frontend::{parse_source, ParseOptions, Span};

const PRELUDE: &str = r#"
contract Ambient {
    address private _owner = msg.sender;
    address private _admin = msg.sender;
    mapping(address => uint256) private _balances;
    mapping(address => mapping(address => uint256)) private _allowances;
    uint256 private _totalSupply;

    event Transfer(address indexed from, address indexed to, uint256 value);
    event Approval(address indexed owner, address indexed spender, uint256 value);
    event OwnershipTransferred(address indexed previousOwner, address indexed newOwner);

    modifier onlyOwner() {
        require(msg.sender == _owner, "Ownable: caller is not the owner");
        _;
    }

    modifier onlyAdmin() {
        require(msg.sender == _admin, "caller is not the admin");
        _;
    }

    function owner() public view returns (address) {
        return _owner;
    }

    function _checkOwner() internal view {
        require(msg.sender == _owner, "Ownable: caller is not the owner");
    }

    function getAdmin() internal view returns (address) {
        return _admin;
    }

    function _getAdmin() internal view returns (address) {
        return _admin;
    }

    function _transferOwnership(address newOwner) internal {
        _owner = newOwner;
    }

    function _transfer(address from, address to, uint256 amount) internal {
        _balances[from] = _balances[from] - amount;
        _balances[to] = _balances[to] + amount;
        emit Transfer(from, to, amount);
    }

    function _mint(address account, uint256 amount) internal {
        _totalSupply += amount;
        _balances[account] += amount;
        emit Transfer(address(0), account, amount);
    }

    function _burn(address account, uint256 amount) internal {
        _balances[account] -= amount;
        _totalSupply -= amount;
        emit Transfer(account, address(0), amount);
    }

    function _approve(address holder, address spender, uint256 amount) internal {
        _allowances[holder][spender] = amount;
        emit Approval(holder, spender, amount);
    }
}
"#;

fn prelude() -> &'static ContractDecl {
    static P: OnceLock<ContractDecl> = OnceLock::new();
    P.get_or_init(|| {
        let ast = parse_source(PRELUDE, &ParseOptions::default());
        assert!(!ast.has_errors(), "prelude must parse: {:?}", ast.diagnostics);
        ast.contracts.into_iter().next().expect("prelude contract")
    })
}

/// Names the prelude can supply.
pub fn provided_names() -> BTreeSet<String> {
    let p = prelude();
    p.state_vars
        .iter()
        .map(|v| v.name.name.clone())
        .chain(p.functions.iter().map(|f| f.name.clone()))
        .chain(p.modifiers.iter().map(|m| m.name.name.clone()))
        .chain(p.events.iter().map(|e| e.name.name.clone()))
        .collect()
}

/// Members injected into each contract, by contract name.
pub type Injected = BTreeMap<String, BTreeSet<String>>;

/// Injects ambient members into `contracts` (in place). `order` lists
/// contract indices so that bases come before derived contracts, and
/// `bases[i]` lists the in-file ancestors of contract `i`.
pub fn inject(contracts: &mut [ContractDecl], order: &[usize], ancestors: &[Vec<usize>]) -> Injected {
    let type_names: BTreeSet<String> = contracts.iter().map(|c| c.name.name.clone()).collect();
    let mut injected = Injected::new();
    for &i in order {
        if contracts[i].kind == ContractKind::Interface {
            continue;
        }
        let mut declared = type_names.clone();
        for &a in ancestors[i].iter().chain(std::iter::once(&i)) {
            declared.extend(declared_names(&contracts[a]));
        }
        let mut refs = BTreeMap::new();
        collect_contract_refs(&contracts[i], &mut refs);
        let mut added = BTreeSet::new();
        loop {
            let next = refs.iter().find(|(name, _)| !declared.contains(*name) && provided_names().contains(*name));
            let Some((name, span)) = next.map(|(n, s)| (n.clone(), *s)) else { break };
            let c = &mut contracts[i];
            let p = prelude();
            for v in p.state_vars.iter().filter(|v| v.name.name == name) {
                let mut v = v.clone();
                respan_state_var(&mut v, span);
                collect_expr_opt_refs(v.initializer.as_ref(), &mut refs, span);
                c.state_vars.push(v);
            }
            for f in p.functions.iter().filter(|f| f.name == name) {
                let mut f = f.clone();
                respan_function(&mut f, span);
                collect_function_refs(&f, &mut refs);
                c.functions.push(f);
            }
            for m in p.modifiers.iter().filter(|m| m.name.name == name) {
                let mut m = m.clone();
                respan_modifier(&mut m, span);
                collect_block_opt_refs(m.body.as_ref(), &mut refs);
                c.modifiers.push(m);
            }
            for e in p.events.iter().filter(|e| e.name.name == name) {
                let mut e = e.clone();
                e.name.span = span;
                e.span = span;
                for p in &mut e.params {
                    respan_param(p, span);
                }
                c.events.push(e);
            }
            declared.insert(name.clone());
            added.insert(name);
        }
        if !added.is_empty() {
            injected.insert(contracts[i].name.name.clone(), added);
        }
    }
    injected
}

fn declared_names(c: &ContractDecl) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    out.extend(c.state_vars.iter().map(|v| v.name.name.clone()));
    out.extend(c.functions.iter().map(|f| f.name.clone()));
    out.extend(c.modifiers.iter().map(|m| m.name.name.clone()));
    out.extend(c.events.iter().map(|e| e.name.name.clone()));
    out.extend(c.errors.iter().map(|e| e.name.name.clone()));
    out.extend(c.structs.iter().map(|s| s.name.name.clone()));
    out.extend(c.enums.iter().map(|e| e.name.name.clone()));
    let params = |ps: &[Param], out: &mut BTreeSet<String>| {
        out.extend(ps.iter().filter_map(|p| p.name.as_ref().map(|n| n.name.clone())));
    };
    for f in &c.functions {
        params(&f.params, &mut out);
        params(&f.returns, &mut out);
        if let Some(b) = &f.body {
            block_locals(b, &mut out);
        }
    }
    for m in &c.modifiers {
        params(&m.params, &mut out);
        if let Some(b) = &m.body {
            block_locals(b, &mut out);
        }
    }
    out
}

fn block_locals(b: &Block, out: &mut BTreeSet<String>) {
    for s in &b.stmts {
        stmt_locals(s, out);
    }
}

fn stmt_locals(s: &Stmt, out: &mut BTreeSet<String>) {
    match &s.kind {
        StmtKind::VarDecl { vars, .. } => out.extend(vars.iter().flatten().map(|v| v.name.name.clone())),
        StmtKind::Block(b) => block_locals(b, out),
        StmtKind::If { then_branch, else_branch, .. } => {
            stmt_locals(then_branch, out);
            if let Some(e) = else_branch {
                stmt_locals(e, out);
            }
        }
        StmtKind::For { init, body, .. } => {
            if let Some(i) = init {
                stmt_locals(i, out);
            }
            stmt_locals(body, out);
        }
        StmtKind::While { body, .. } | StmtKind::DoWhile { body, .. } => stmt_locals(body, out),
        _ => {}
    }
}

type Refs = BTreeMap<String, Span>;

fn note(refs: &mut Refs, name: &str, span: Span) {
    refs.entry(name.to_string()).or_insert(span);
}

fn collect_contract_refs(c: &ContractDecl, refs: &mut Refs) {
    for b in &c.bases {
        for a in &b.args {
            collect_expr_refs(a, refs);
        }
    }
    for v in &c.state_vars {
        if let Some(e) = &v.initializer {
            collect_expr_refs(e, refs);
        }
    }
    for f in &c.functions {
        collect_function_refs(f, refs);
    }
    for m in &c.modifiers {
        collect_block_opt_refs(m.body.as_ref(), refs);
    }
}

fn collect_function_refs(f: &FunctionDecl, refs: &mut Refs) {
    for m in &f.modifiers_invoked {
        note(refs, &m.name.name, m.name.span);
        for a in &m.args {
            collect_expr_refs(a, refs);
        }
    }
    collect_block_opt_refs(f.body.as_ref(), refs);
}

fn collect_block_opt_refs(b: Option<&Block>, refs: &mut Refs) {
    if let Some(b) = b {
        for s in &b.stmts {
            s.walk_exprs(&mut |e| collect_expr_refs(e, refs));
        }
    }
}

/// References inside an injected initializer are attributed to `span`.
fn collect_expr_opt_refs(e: Option<&Expr>, refs: &mut Refs, span: Span) {
    if let Some(e) = e {
        e.walk(&mut |x| {
            if let ExprKind::Ident(n) = &x.kind {
                note(refs, n, span);
            }
        });
    }
}

fn collect_expr_refs(e: &Expr, refs: &mut Refs) {
    e.walk(&mut |x| {
        if let ExprKind::Ident(n) = &x.kind {
            note(refs, n, x.span);
        }
    });
}

// ---- re-spanning -------------------------------------------------------

fn respan_state_var(v: &mut StateVarDecl, span: Span) {
    v.name.span = span;
    v.span = span;
    if let Some(e) = &mut v.initializer {
        respan_expr(e, span);
    }
}

fn respan_param(p: &mut Param, span: Span) {
    p.span = span;
    if let Some(n) = &mut p.name {
        n.span = span;
    }
}

fn respan_function(f: &mut FunctionDecl, span: Span) {
    f.span = span;
    f.name_span = span;
    for p in f.params.iter_mut().chain(f.returns.iter_mut()) {
        respan_param(p, span);
    }
    for m in &mut f.modifiers_invoked {
        m.span = span;
        m.name.span = span;
        for a in &mut m.args {
            respan_expr(a, span);
        }
    }
    if let Some(b) = &mut f.body {
        respan_block(b, span);
    }
}

fn respan_modifier(m: &mut ModifierDecl, span: Span) {
    m.span = span;
    m.name.span = span;
    for p in &mut m.params {
        respan_param(p, span);
    }
    if let Some(b) = &mut m.body {
        respan_block(b, span);
    }
}

fn respan_block(b: &mut Block, span: Span) {
    b.span = span;
    for s in &mut b.stmts {
        respan_stmt(s, span);
    }
}

fn respan_stmt(s: &mut Stmt, span: Span) {
    s.span = span;
    match &mut s.kind {
        StmtKind::Block(b) => respan_block(b, span),
        StmtKind::If { cond, then_branch, else_branch } => {
            respan_expr(cond, span);
            respan_stmt(then_branch, span);
            if let Some(e) = else_branch {
                respan_stmt(e, span);
            }
        }
        StmtKind::For { init, cond, step, body } => {
            if let Some(i) = init {
                respan_stmt(i, span);
            }
            for e in cond.iter_mut().chain(step.iter_mut()) {
                respan_expr(e, span);
            }
            respan_stmt(body, span);
        }
        StmtKind::While { cond, body } | StmtKind::DoWhile { body, cond } => {
            respan_expr(cond, span);
            respan_stmt(body, span);
        }
        StmtKind::Return(e) | StmtKind::Revert(e) => {
            if let Some(e) = e {
                respan_expr(e, span);
            }
        }
        StmtKind::Require { cond, message } => {
            respan_expr(cond, span);
            if let Some(m) = message {
                respan_expr(m, span);
            }
        }
        StmtKind::Emit(e) | StmtKind::Expr(e) => respan_expr(e, span),
        StmtKind::VarDecl { vars, init } => {
            for v in vars.iter_mut().flatten() {
                v.name.span = span;
            }
            if let Some(e) = init {
                respan_expr(e, span);
            }
        }
        StmtKind::Placeholder | StmtKind::Break | StmtKind::Continue | StmtKind::Unsupported { .. } => {}
    }
}

fn respan_expr(e: &mut Expr, span: Span) {
    e.span = span;
    match &mut e.kind {
        ExprKind::Member(x, _) | ExprKind::Unary(_, x) => respan_expr(x, span),
        ExprKind::Index(a, b) => {
            respan_expr(a, span);
            if let Some(b) = b {
                respan_expr(b, span);
            }
        }
        ExprKind::Call { callee, args, options, .. } => {
            respan_expr(callee, span);
            for a in args {
                respan_expr(a, span);
            }
            for (_, o) in options {
                respan_expr(o, span);
            }
        }
        ExprKind::Binary(_, a, b) | ExprKind::Assign(_, a, b) => {
            respan_expr(a, span);
            respan_expr(b, span);
        }
        ExprKind::Ternary(a, b, c) => {
            respan_expr(a, span);
            respan_expr(b, span);
            respan_expr(c, span);
        }
        ExprKind::Tuple(items) => {
            for x in items.iter_mut().flatten() {
                respan_expr(x, span);
            }
        }
        ExprKind::ArrayLit(items) => {
            for x in items {
                respan_expr(x, span);
            }
        }
        ExprKind::Ident(_)
        | ExprKind::Number(_)
        | ExprKind::Str(_)
        | ExprKind::HexStr(_)
        | ExprKind::Bool(_)
        | ExprKind::TypeExpr(_)
        | ExprKind::New(_) => {}
    }
}
