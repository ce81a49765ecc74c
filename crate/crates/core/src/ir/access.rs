//! Read and write sets over names. Writes are attributed to the root of the
//! assigned place: `m[k].f = v` writes `m` and reads `k` and `v`.

use crate::frontend::ast::{Expr, ExprKind, UnOp};
use crate::frontend::Span;

use super::{BasicBlock, StmtKind, Terminator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AccessKind {
    Read,
    Write,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Access {
    pub name: String,
    pub kind: AccessKind,
    pub span: Span,
}

/// Identifier accesses in `e`, in evaluation-ish order. Member names are
/// not identifiers and never appear.
pub fn expr_accesses(e: &Expr, out: &mut Vec<Access>) {
    read(e, out);
}

fn push(out: &mut Vec<Access>, name: &str, kind: AccessKind, span: Span) {
    out.push(Access { name: name.to_string(), kind, span });
}

fn read(e: &Expr, out: &mut Vec<Access>) {
    match &e.kind {
        ExprKind::Ident(n) => push(out, n, AccessKind::Read, e.span),
        ExprKind::Assign(op, lhs, rhs) => {
            if op.is_some() {
                read(lhs, out);
            }
            read(rhs, out);
            place(lhs, out);
        }
        ExprKind::Unary(op, x) if op.writes_operand() => {
            if *op != UnOp::Delete {
                read(x, out);
            }
            place(x, out);
        }
        ExprKind::Call { callee, args, options, .. } => {
            if let ExprKind::Member(obj, m) = &callee.kind {
                if m == "push" || m == "pop" {
                    read(obj, out);
                    place(obj, out);
                } else {
                    read(callee, out);
                }
            } else {
                read(callee, out);
            }
            for a in args {
                read(a, out);
            }
            for (_, o) in options {
                read(o, out);
            }
        }
        _ => each_child(e, |c| read(c, out)),
    }
}

/// `e` is assigned to: its root identifier is written, index expressions
/// inside it are read.
fn place(e: &Expr, out: &mut Vec<Access>) {
    match &e.kind {
        ExprKind::Ident(n) => push(out, n, AccessKind::Write, e.span),
        ExprKind::Member(obj, _) => place(obj, out),
        ExprKind::Index(base, idx) => {
            if let Some(i) = idx {
                read(i, out);
            }
            place(base, out);
        }
        ExprKind::Tuple(items) => {
            for x in items.iter().flatten() {
                place(x, out);
            }
        }
        // Writes through call results (`f().x = 1`) have no named root.
        _ => read(e, out),
    }
}

fn each_child(e: &Expr, mut f: impl FnMut(&Expr)) {
    match &e.kind {
        ExprKind::Member(x, _) | ExprKind::Unary(_, x) => f(x),
        ExprKind::Index(a, b) => {
            f(a);
            if let Some(b) = b {
                f(b);
            }
        }
        ExprKind::Call { callee, args, options, .. } => {
            f(callee);
            args.iter().for_each(&mut f);
            options.iter().for_each(|(_, o)| f(o));
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
        ExprKind::Tuple(items) => items.iter().flatten().for_each(f),
        ExprKind::ArrayLit(items) => items.iter().for_each(f),
        _ => {}
    }
}

/// Accesses in one lowered block, statements first, then the terminator.
/// Opaque statements conservatively read and write every candidate name
/// that occurs in their text.
pub fn block_accesses(b: &BasicBlock, candidates: &dyn Fn(&str) -> bool) -> Vec<Access> {
    let mut out = Vec::new();
    for s in &b.stmts {
        match &s.kind {
            StmtKind::Expr(e) | StmtKind::Emit(e) | StmtKind::SetReturn(e) => read(e, &mut out),
            StmtKind::Decl { init, .. } => {
                if let Some(e) = init {
                    read(e, &mut out);
                }
            }
            StmtKind::Opaque { text, .. } => {
                for word in text.split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '$')) {
                    if !word.is_empty() && candidates(word) {
                        push(&mut out, word, AccessKind::Read, s.span);
                        push(&mut out, word, AccessKind::Write, s.span);
                    }
                }
            }
        }
    }
    match &b.term {
        Terminator::Branch { cond: e, .. } | Terminator::Selfdestruct(e) | Terminator::Revert(Some(e)) => read(e, &mut out),
        _ => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_expression;

    fn acc(src: &str) -> Vec<(String, AccessKind)> {
        let mut out = Vec::new();
        expr_accesses(&parse_expression(src).unwrap(), &mut out);
        out.into_iter().map(|a| (a.name, a.kind)).collect()
    }

    fn w(n: &str) -> (String, AccessKind) {
        (n.to_string(), AccessKind::Write)
    }

    fn r(n: &str) -> (String, AccessKind) {
        (n.to_string(), AccessKind::Read)
    }

    #[test]
    fn index_write_counts_as_whole_variable_write() {
        assert_eq!(acc("_balances[account] = now_balances.add(amount)"), [r("now_balances"), r("amount"), r("account"), w("_balances")]);
    }

    #[test]
    fn compound_assignment_reads_and_writes() {
        assert_eq!(acc("total += x"), [r("total"), r("x"), w("total")]);
        assert_eq!(acc("n++"), [r("n"), w("n")]);
        assert_eq!(acc("delete m[k]"), [r("k"), w("m")]);
    }

    #[test]
    fn push_writes_the_array() {
        assert_eq!(acc("registeredOfType[t].push(c)"), [r("registeredOfType"), r("t"), r("t"), w("registeredOfType"), r("c")]);
    }

    #[test]
    fn tuple_destructuring_writes_each_element() {
        assert_eq!(acc("(a, , b) = f()"), [r("f"), w("a"), w("b")]);
    }

    #[test]
    fn members_are_not_names() {
        assert_eq!(acc("s.fee = msg.value"), [r("msg"), w("s")]);
    }
}
