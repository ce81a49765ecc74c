//! Best-effort nominal typing of expressions. Types are looked up from
//! declarations; nothing is checked.

use crate::frontend::ast::{BinOp, ContractKind, Expr, ExprKind, TypeName, UnOp};

use super::{ContractUnit, FunctionIR};

fn elementary(s: &str) -> TypeName {
    TypeName::Elementary(s.to_string())
}

/// Declared type of a name as seen from inside `f`.
pub fn name_type(unit: &ContractUnit, f: &FunctionIR, name: &str) -> Option<TypeName> {
    if let Some(t) = f.locals.get(name) {
        return t.clone();
    }
    if let Some(v) = unit.state_vars.get(name) {
        return Some(v.ty.clone());
    }
    match name {
        "this" => Some(TypeName::UserDefined(vec![unit.name.clone()])),
        "now" => Some(elementary("uint256")),
        _ => None,
    }
}

pub fn type_of(unit: &ContractUnit, f: &FunctionIR, e: &Expr) -> Option<TypeName> {
    match &e.kind {
        ExprKind::Ident(n) => name_type(unit, f, n),
        ExprKind::Member(obj, m) => {
            if let Some(base) = obj.as_ident() {
                if !f.is_local(base) && !unit.state_vars.contains_key(base) {
                    match (base, m.as_str()) {
                        ("msg", "sender") | ("tx", "origin") | ("block", "coinbase") => return Some(elementary("address")),
                        ("msg", "value") | ("block", "timestamp") | ("block", "number") | ("block", "chainid") => {
                            return Some(elementary("uint256"))
                        }
                        ("msg", "data") => return Some(elementary("bytes")),
                        _ => {}
                    }
                }
            }
            if m == "length" {
                return Some(elementary("uint256"));
            }
            match type_of(unit, f, obj)? {
                TypeName::UserDefined(path) => {
                    let fields = unit.structs.get(path.last()?)?;
                    fields.iter().find(|p| p.name.as_ref().is_some_and(|n| &n.name == m)).map(|p| p.ty.clone())
                }
                TypeName::Elementary(t) if t == "address" && m == "balance" => Some(elementary("uint256")),
                _ => None,
            }
        }
        ExprKind::Index(base, _) => match type_of(unit, f, base)? {
            TypeName::Mapping(_, v) => Some(*v),
            TypeName::Array(elem, _) => Some(*elem),
            TypeName::Elementary(t) if t == "bytes" || t.starts_with("bytes") => Some(elementary("bytes1")),
            _ => None,
        },
        ExprKind::Call { callee, args, .. } => call_type(unit, f, callee, args.len()),
        ExprKind::Binary(op, l, r) => {
            if op.is_comparison() || matches!(op, BinOp::And | BinOp::Or) {
                Some(elementary("bool"))
            } else {
                type_of(unit, f, l).or_else(|| type_of(unit, f, r))
            }
        }
        ExprKind::Unary(UnOp::Not, _) => Some(elementary("bool")),
        ExprKind::Unary(_, x) => type_of(unit, f, x),
        ExprKind::Assign(_, l, _) => type_of(unit, f, l),
        ExprKind::Ternary(_, a, b) => type_of(unit, f, a).or_else(|| type_of(unit, f, b)),
        ExprKind::Number(_) => Some(elementary("uint256")),
        ExprKind::Bool(_) => Some(elementary("bool")),
        ExprKind::Str(_) => Some(elementary("string")),
        ExprKind::HexStr(_) => Some(elementary("bytes")),
        ExprKind::Tuple(items) if items.len() == 1 => items[0].as_ref().and_then(|x| type_of(unit, f, x)),
        ExprKind::New(t) => Some(t.clone()),
        _ => None,
    }
}

fn call_type(unit: &ContractUnit, f: &FunctionIR, callee: &Expr, arity: usize) -> Option<TypeName> {
    match &callee.kind {
        ExprKind::TypeExpr(t) => Some(t.clone()),
        ExprKind::New(t) => Some(t.clone()),
        ExprKind::Ident(n) => match n.as_str() {
            "payable" | "ecrecover" => Some(elementary("address")),
            "keccak256" | "sha256" | "blockhash" => Some(elementary("bytes32")),
            "gasleft" | "addmod" | "mulmod" => Some(elementary("uint256")),
            _ if f.is_local(n) || unit.state_vars.contains_key(n) => None,
            _ => {
                if let Some(g) = unit.by_name(n).find(|g| g.params.len() == arity) {
                    return (g.returns.len() == 1).then(|| g.returns[0].ty.clone());
                }
                if unit.known_types.contains_key(n) || unit.structs.contains_key(n) || is_capitalized(n) {
                    return Some(TypeName::UserDefined(vec![n.clone()]));
                }
                None
            }
        },
        _ => None,
    }
}

pub fn is_capitalized(name: &str) -> bool {
    name.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

/// `IFoo`-style names that denote contracts or interfaces (not structs,
/// enums or libraries of this unit).
pub fn is_contract_type(unit: &ContractUnit, t: &TypeName) -> bool {
    match t {
        TypeName::UserDefined(path) => {
            let name = path.last().map(String::as_str).unwrap_or("");
            if unit.structs.contains_key(name) {
                return false;
            }
            match unit.known_types.get(name) {
                Some(ContractKind::Library) => false,
                Some(_) => true,
                // Imported types: structs are usually qualified or declared
                // locally, so an unknown name is taken to be a contract.
                None => path.len() == 1,
            }
        }
        _ => false,
    }
}

pub fn is_uint_type(t: &TypeName) -> bool {
    matches!(t, TypeName::Elementary(s) if s.starts_with("uint"))
}

pub fn is_address_type(t: &TypeName) -> bool {
    t.is_address()
}

/// `mapping(address => uintN)`
pub fn is_address_to_uint_mapping(t: &TypeName) -> bool {
    matches!(t, TypeName::Mapping(k, v) if k.is_address() && is_uint_type(v))
}

/// `mapping(address => bool)` or `mapping(address => uintN)`
pub fn is_address_role_mapping(t: &TypeName) -> bool {
    matches!(t, TypeName::Mapping(k, v) if k.is_address() && (is_uint_type(v) || matches!(&**v, TypeName::Elementary(s) if s == "bool")))
}
