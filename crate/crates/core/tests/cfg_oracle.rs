//! Random structured bodies checked against a reference reachability
//! interpreter. Each `m = k;` marks a statement; conditions are opaque.

mod common;

use std::collections::BTreeMap;

use cdsentry::frontend::{parse_source, ParseOptions};
use cdsentry::ir::cfg::build_cfg;
use cdsentry::ir::Cfg;
use cdsentry::pdg::stmt_text;
use common::brute_force_dominates;
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum S {
    Mark,
    Require,
    Return,
    Revert,
    Break,
    Continue,
    If(Vec<S>, Vec<S>),
    While(Vec<S>),
    For(Vec<S>),
}

fn stmt() -> impl Strategy<Value = S> {
    let leaf = prop_oneof![
        6 => Just(S::Mark),
        1 => Just(S::Require),
        1 => Just(S::Return),
        1 => Just(S::Revert),
        1 => Just(S::Break),
        1 => Just(S::Continue),
    ];
    leaf.prop_recursive(4, 40, 5, |inner| {
        let body = proptest::collection::vec(inner, 0..5);
        prop_oneof![
            (body.clone(), body.clone()).prop_map(|(a, b)| S::If(a, b)),
            body.clone().prop_map(S::While),
            body.prop_map(S::For),
        ]
    })
}

struct Render {
    out: String,
    next: usize,
}

impl Render {
    fn stmts(&mut self, ss: &[S], in_loop: bool) {
        for s in ss {
            self.stmt(s, in_loop);
        }
    }

    fn stmt(&mut self, s: &S, in_loop: bool) {
        let c = self.next;
        match s {
            S::Mark => {
                self.out.push_str(&format!("m = {c}; "));
                self.next += 1;
            }
            S::Require => self.out.push_str("require(c > 1); "),
            S::Return => self.out.push_str("return; "),
            S::Revert => self.out.push_str("revert(); "),
            // outside loops these would not parse as meaningful; render a mark-free no-op
            S::Break if in_loop => self.out.push_str("break; "),
            S::Continue if in_loop => self.out.push_str("continue; "),
            S::Break | S::Continue => self.out.push_str("c = c; "),
            S::If(a, b) => {
                self.out.push_str("if (c > 2) { ");
                self.stmts(a, in_loop);
                self.out.push_str("} else { ");
                self.stmts(b, in_loop);
                self.out.push_str("} ");
            }
            S::While(b) => {
                self.out.push_str("while (c < 10) { ");
                self.stmts(b, true);
                self.out.push_str("} ");
            }
            S::For(b) => {
                self.out.push_str("for (uint i = 0; i < c; i++) { ");
                self.stmts(b, true);
                self.out.push_str("} ");
            }
        }
    }
}

/// Reference semantics: which marks can execute, and pairs (a, b) of
/// marks in one straight-line sequence where a runs before b.
struct Reference {
    next: usize,
    reached: Vec<bool>,
    ordered: Vec<(usize, usize)>,
}

impl Reference {
    /// Returns whether control can fall out of the end of `ss`.
    fn stmts(&mut self, ss: &[S], mut live: bool, in_loop: bool) -> bool {
        let mut seq: Vec<usize> = Vec::new();
        for s in ss {
            if let S::Mark = s {
                if live {
                    for &a in &seq {
                        self.ordered.push((a, self.next));
                    }
                    seq.push(self.next);
                }
            }
            live = self.stmt(s, live, in_loop);
        }
        live
    }

    fn stmt(&mut self, s: &S, live: bool, in_loop: bool) -> bool {
        match s {
            S::Mark => {
                self.reached.push(live);
                self.next += 1;
                live
            }
            S::Require => live,
            S::Return | S::Revert => false,
            S::Break | S::Continue => !in_loop && live,
            S::If(a, b) => {
                let la = self.stmts(a, live, in_loop);
                let lb = self.stmts(b, live, in_loop);
                la || lb
            }
            // the condition may be false on entry, so the exit is live iff the head is
            S::While(b) | S::For(b) => {
                self.stmts(b, live, true);
                live
            }
        }
    }
}

fn build(body: &[S]) -> (String, Cfg) {
    let mut r = Render { out: String::new(), next: 0 };
    r.stmts(body, false);
    let src = format!("contract A {{ uint m; function f(uint c) public {{ {} }} }}", r.out);
    let ast = parse_source(&src, &ParseOptions::default());
    assert!(!ast.has_errors(), "{src}: {:?}", ast.diagnostics);
    let f = &ast.contracts[0].functions[0];
    (src, build_cfg(f.body.as_ref().unwrap()))
}

fn mark_blocks(cfg: &Cfg) -> BTreeMap<usize, Vec<usize>> {
    let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for b in &cfg.blocks {
        for s in &b.stmts {
            if let Some(k) = stmt_text(s).strip_prefix("m = ").and_then(|k| k.parse().ok()) {
                out.entry(k).or_default().push(b.id);
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn cfg_matches_reference(body in proptest::collection::vec(stmt(), 0..8)) {
        let (src, cfg) = build(&body);
        let mut reference = Reference { next: 0, reached: Vec::new(), ordered: Vec::new() };
        reference.stmts(&body, true, false);

        // well-formed: ids are dense, successors in range, all reachable
        let succs: Vec<Vec<usize>> = cfg.blocks.iter().map(|b| b.term.successors()).collect();
        for (i, b) in cfg.blocks.iter().enumerate() {
            prop_assert_eq!(b.id, i);
            prop_assert!(succs[i].iter().all(|&s| s < cfg.blocks.len()), "{}", src);
        }
        let dom = brute_force_dominates(&succs);
        prop_assert!((0..cfg.blocks.len()).all(|b| dom[0][b]), "unreachable block kept: {}", src);

        // a mark is kept iff it can run, and kept once
        let marks = mark_blocks(&cfg);
        for (k, &r) in reference.reached.iter().enumerate() {
            let n = marks.get(&k).map_or(0, Vec::len);
            prop_assert_eq!(n, usize::from(r), "mark {} in {}", k, src);
        }

        // straight-line order implies dominance
        for &(a, b) in &reference.ordered {
            let (ba, bb) = (marks[&a][0], marks[&b][0]);
            prop_assert!(dom[ba][bb], "mark {} should dominate {} in {}", a, b, src);
        }

        // a function that can fall off its end has an End block
        let falls = Reference { next: 0, reached: Vec::new(), ordered: Vec::new() }.stmts_owned(&body);
        let has_end = cfg.blocks.iter().any(|b| b.term == cdsentry::ir::Terminator::End);
        prop_assert_eq!(falls, has_end, "{}", src);
    }
}

impl Reference {
    fn stmts_owned(mut self, body: &[S]) -> bool {
        self.stmts(body, true, false)
    }
}
