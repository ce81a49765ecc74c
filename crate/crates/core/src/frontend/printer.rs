//! Canonical source text for expressions: single spaces around binary
//! operators, no redundant whitespace, parentheses only where the tree needs
//! them. Used for `target_expr` in findings and for evidence notes.

use super::ast::{BinOp, Expr, ExprKind, TypeName, UnOp};

pub fn expr_to_string(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out, 0);
    out
}

pub fn type_to_string(t: &TypeName) -> String {
    match t {
        TypeName::Elementary(s) => s.clone(),
        TypeName::Mapping(k, v) => format!("mapping({} => {})", type_to_string(k), type_to_string(v)),
        TypeName::Array(elem, len) => format!("{}[{}]", type_to_string(elem), len.as_deref().unwrap_or("")),
        TypeName::UserDefined(path) => path.join("."),
        TypeName::Function => "function".to_string(),
    }
}

fn prec(op: BinOp) -> u8 {
    use BinOp::*;
    match op {
        Or => 1,
        And => 2,
        Eq | Ne => 3,
        Lt | Le | Gt | Ge => 4,
        BitOr => 5,
        BitXor => 6,
        BitAnd => 7,
        Shl | Shr => 8,
        Add | Sub => 9,
        Mul | Div | Mod => 10,
        Pow => 11,
    }
}

// Context precedence: 0 = any, then binary levels, 12 = unary operand,
// 13 = postfix base.
fn write_expr(e: &Expr, out: &mut String, ctx: u8) {
    let own = match &e.kind {
        ExprKind::Assign(..) => 0,
        ExprKind::Ternary(..) => 0,
        ExprKind::Binary(op, ..) => prec(*op),
        ExprKind::Unary(UnOp::PostInc | UnOp::PostDec, _) => 13,
        ExprKind::Unary(..) => 12,
        _ => 14,
    };
    let paren = own < ctx;
    if paren {
        out.push('(');
    }
    match &e.kind {
        ExprKind::Ident(n) => out.push_str(n),
        ExprKind::Member(obj, m) => {
            write_expr(obj, out, 13);
            out.push('.');
            out.push_str(m);
        }
        ExprKind::Index(base, idx) => {
            write_expr(base, out, 13);
            out.push('[');
            if let Some(i) = idx {
                write_expr(i, out, 0);
            }
            out.push(']');
        }
        ExprKind::Call { callee, args, arg_names, options } => {
            write_expr(callee, out, 13);
            if !options.is_empty() {
                out.push('{');
                for (i, (k, v)) in options.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(k);
                    out.push_str(": ");
                    write_expr(v, out, 0);
                }
                out.push('}');
            }
            out.push('(');
            if !arg_names.is_empty() {
                out.push('{');
            }
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                if let Some(n) = arg_names.get(i) {
                    out.push_str(n);
                    out.push_str(": ");
                }
                write_expr(a, out, 0);
            }
            if !arg_names.is_empty() {
                out.push('}');
            }
            out.push(')');
        }
        ExprKind::Binary(op, l, r) => {
            let p = prec(*op);
            // Left-associative except `**`.
            let (lp, rp) = if *op == BinOp::Pow { (p + 1, p) } else { (p, p + 1) };
            write_expr(l, out, lp);
            out.push(' ');
            out.push_str(op.as_str());
            out.push(' ');
            write_expr(r, out, rp);
        }
        ExprKind::Unary(op, operand) => match op {
            UnOp::PostInc | UnOp::PostDec => {
                write_expr(operand, out, 13);
                out.push_str(if *op == UnOp::PostInc { "++" } else { "--" });
            }
            _ => {
                out.push_str(match op {
                    UnOp::Not => "!",
                    UnOp::Neg => "-",
                    UnOp::BitNot => "~",
                    UnOp::PreInc => "++",
                    UnOp::PreDec => "--",
                    UnOp::Delete => "delete ",
                    UnOp::PostInc | UnOp::PostDec => unreachable!(),
                });
                write_expr(operand, out, 12);
            }
        },
        ExprKind::Assign(op, l, r) => {
            write_expr(l, out, 1);
            out.push(' ');
            if let Some(op) = op {
                out.push_str(op.as_str());
            }
            out.push_str("= ");
            write_expr(r, out, 0);
        }
        ExprKind::Ternary(c, a, b) => {
            write_expr(c, out, 1);
            out.push_str(" ? ");
            write_expr(a, out, 0);
            out.push_str(" : ");
            write_expr(b, out, 0);
        }
        ExprKind::Tuple(items) => {
            out.push('(');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                if let Some(item) = item {
                    write_expr(item, out, 0);
                }
            }
            out.push(')');
        }
        ExprKind::ArrayLit(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(item, out, 0);
            }
            out.push(']');
        }
        ExprKind::Number(n) => out.push_str(n),
        ExprKind::Str(s) => out.push_str(&format!("{s:?}")),
        ExprKind::HexStr(h) => {
            out.push_str("hex\"");
            out.push_str(h);
            out.push('"');
        }
        ExprKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::TypeExpr(t) => out.push_str(&type_to_string(t)),
        ExprKind::New(t) => {
            out.push_str("new ");
            out.push_str(&type_to_string(t));
        }
    }
    if paren {
        out.push(')');
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_expression;

    fn canon(src: &str) -> String {
        expr_to_string(&parse_expression(src).expect(src))
    }

    #[test]
    fn normalizes_whitespace() {
        assert_eq!(canon("a+b *c"), "a + b * c");
        assert_eq!(canon("(a+b)*c"), "(a + b) * c");
        assert_eq!(canon("pool . slot0 ( )"), "pool.slot0()");
        assert_eq!(canon("x[ i ].y"), "x[i].y");
    }

    #[test]
    fn keeps_needed_parens_only() {
        assert_eq!(canon("a - (b - c)"), "a - (b - c)");
        assert_eq!(canon("(a - b) - c"), "a - b - c");
        assert_eq!(canon("!(a && b)"), "!(a && b)");
        assert_eq!(canon("((x))"), "x");
    }

    #[test]
    fn canonical_text_reparses_to_same_text() {
        for src in ["a.b{value: 1}(c, d)", "f({x: 1, y: 2})", "cond ? a : b", "-x ** 2", "i++ + ++j", "uint256(x)"] {
            let once = canon(src);
            assert_eq!(canon(&once), once, "{src}");
        }
    }
}
