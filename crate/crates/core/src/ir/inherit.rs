//! Single-file inheritance: C3 linearization over the contracts declared in
//! one source unit.

use std::collections::BTreeMap;

use crate::frontend::ast::ContractDecl;
use crate::frontend::{Diagnostic, DiagnosticKind};

pub(crate) struct Hierarchy {
    /// Per contract: itself first, then bases from most derived to most base.
    pub linearization: Vec<Vec<usize>>,
    /// Contract indices with every base before its derived contracts.
    pub order: Vec<usize>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Hierarchy {
    pub fn ancestors(&self) -> Vec<Vec<usize>> {
        self.linearization.iter().map(|l| l[1..].to_vec()).collect()
    }
}

pub(crate) fn resolve(contracts: &[ContractDecl]) -> Hierarchy {
    let index: BTreeMap<&str, usize> = contracts.iter().enumerate().map(|(i, c)| (c.name.name.as_str(), i)).collect();
    let mut diagnostics = Vec::new();
    let direct: Vec<Vec<usize>> = contracts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut out = Vec::new();
            for b in &c.bases {
                match index.get(b.name.name.as_str()) {
                    Some(&j) if j != i => out.push(j),
                    _ => diagnostics.push(Diagnostic::warning(
                        DiagnosticKind::UnresolvedBase { base: b.name.name.clone() },
                        b.name.span,
                        format!("base `{}` of `{}` is not declared in this file; its members are absent", b.name.name, c.name.name),
                    )),
                }
            }
            out
        })
        .collect();

    let mut memo: Vec<Option<Vec<usize>>> = vec![None; contracts.len()];
    for i in 0..contracts.len() {
        let mut stack = Vec::new();
        linearize(i, &direct, &mut memo, &mut stack, contracts, &mut diagnostics);
    }
    let linearization: Vec<Vec<usize>> = memo.into_iter().map(|l| l.unwrap_or_default()).collect();

    // Bases first: sort by linearization length, ties by declaration order.
    let mut order: Vec<usize> = (0..contracts.len()).collect();
    order.sort_by_key(|&i| (linearization[i].len(), i));
    Hierarchy { linearization, order, diagnostics }
}

fn linearize(
    i: usize,
    direct: &[Vec<usize>],
    memo: &mut Vec<Option<Vec<usize>>>,
    stack: &mut Vec<usize>,
    contracts: &[ContractDecl],
    diagnostics: &mut Vec<Diagnostic>,
) -> Vec<usize> {
    if let Some(l) = &memo[i] {
        return l.clone();
    }
    if stack.contains(&i) {
        diagnostics.push(Diagnostic::warning(
            DiagnosticKind::UnresolvedBase { base: contracts[i].name.name.clone() },
            contracts[i].name.span,
            format!("cyclic inheritance through `{}`", contracts[i].name.name),
        ));
        return vec![i];
    }
    stack.push(i);
    // Solidity lists bases from "most base-like" to "most derived".
    let bases: Vec<usize> = direct[i].iter().rev().copied().collect();
    let mut seqs: Vec<Vec<usize>> = bases.iter().map(|&b| linearize(b, direct, memo, stack, contracts, diagnostics)).collect();
    seqs.push(bases.clone());
    stack.pop();

    let result = match c3_merge(seqs) {
        Some(tail) => std::iter::once(i).chain(tail).collect(),
        None => {
            diagnostics.push(Diagnostic::warning(
                DiagnosticKind::UnsupportedConstruct { construct: "inconsistent inheritance order".into() },
                contracts[i].name.span,
                format!("no consistent linearization for `{}`; using depth-first base order", contracts[i].name.name),
            ));
            let mut out = vec![i];
            for &b in &bases {
                for x in memo[b].clone().unwrap_or_else(|| vec![b]) {
                    if !out.contains(&x) {
                        out.push(x);
                    }
                }
            }
            out
        }
    };
    memo[i] = Some(result.clone());
    result
}

fn c3_merge(mut seqs: Vec<Vec<usize>>) -> Option<Vec<usize>> {
    let mut out = Vec::new();
    loop {
        seqs.retain(|s| !s.is_empty());
        if seqs.is_empty() {
            return Some(out);
        }
        let head = seqs.iter().map(|s| s[0]).find(|&h| seqs.iter().all(|s| !s[1..].contains(&h)))?;
        out.push(head);
        for s in &mut seqs {
            if s[0] == head {
                s.remove(0);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_source, ParseOptions};

    fn names(src: &str, of: &str) -> Vec<String> {
        let ast = parse_source(src, &ParseOptions::default());
        let h = resolve(&ast.contracts);
        let i = ast.contracts.iter().position(|c| c.name.name == of).unwrap();
        h.linearization[i].iter().map(|&j| ast.contracts[j].name.name.clone()).collect()
    }

    #[test]
    fn diamond_linearizes_like_solidity() {
        let src = "contract A {} contract B is A {} contract C is A {} contract D is B, C {}";
        assert_eq!(names(src, "D"), ["D", "C", "B", "A"]);
    }

    #[test]
    fn unknown_base_is_a_warning() {
        let ast = parse_source("contract A is Ownable {}", &ParseOptions::default());
        let h = resolve(&ast.contracts);
        assert_eq!(h.linearization[0], [0]);
        assert!(matches!(&h.diagnostics[0].kind, DiagnosticKind::UnresolvedBase { base } if base == "Ownable"));
        assert!(!h.diagnostics[0].is_error());
    }

    #[test]
    fn order_puts_bases_first() {
        let ast = parse_source("contract D is B {} contract B is A {} contract A {}", &ParseOptions::default());
        let h = resolve(&ast.contracts);
        assert_eq!(h.order, [2, 1, 0]);
    }
}
