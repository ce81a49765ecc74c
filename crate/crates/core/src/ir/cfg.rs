//! Lowering of statement trees to basic blocks, with modifier bodies
//! inlined around the function body at each `_;`.

use crate::frontend::ast::{Block as AstBlock, Expr, ExprKind, LocalVar, Param, Stmt as AstStmt, StmtKind as AstStmtKind};
use crate::frontend::Span;

use super::{BasicBlock, BlockId, Cfg, Origin, Stmt, StmtKind, Terminator};

/// A resolved modifier invocation to inline.
#[derive(Debug, Clone, Copy)]
pub struct Inline<'a> {
    pub name: &'a str,
    pub params: &'a [Param],
    pub args: &'a [Expr],
    /// `None` for a modifier declared without a body; it behaves as `_;`.
    pub body: Option<&'a AstBlock>,
    /// Span of the invocation in the function header.
    pub span: Span,
}

/// CFG of a plain statement block (no modifiers).
pub fn build_cfg(body: &AstBlock) -> Cfg {
    build(Some(body), body.span, &[])
}

/// CFG of a function body wrapped by `mods` (outermost first).
pub fn build(body: Option<&AstBlock>, span: Span, mods: &[Inline<'_>]) -> Cfg {
    let mut b = Builder { blocks: Vec::new(), cur: 0, loops: Vec::new(), body_entry: None, origin: Origin::Body };
    b.origin = mods.first().map(|m| Origin::Modifier(m.name.to_string())).unwrap_or(Origin::Body);
    b.cur = b.new_block(span);
    let ctx = Ctx { level: 0, body, mods, ret: None };
    b.level(ctx);
    b.seal(Terminator::End);
    b.finish()
}

struct Pending {
    stmts: Vec<Stmt>,
    term: Option<Terminator>,
    hint: Span,
    origin: Origin,
}

struct Builder {
    blocks: Vec<Pending>,
    cur: BlockId,
    /// (continue target, break target)
    loops: Vec<(BlockId, BlockId)>,
    body_entry: Option<BlockId>,
    origin: Origin,
}

#[derive(Clone, Copy)]
struct Ctx<'a> {
    level: usize,
    body: Option<&'a AstBlock>,
    mods: &'a [Inline<'a>],
    /// Where `return` transfers control; `None` leaves the function.
    ret: Option<BlockId>,
}

impl Builder {
    fn new_block(&mut self, hint: Span) -> BlockId {
        self.blocks.push(Pending { stmts: Vec::new(), term: None, hint, origin: self.origin.clone() });
        self.blocks.len() - 1
    }

    fn push(&mut self, kind: StmtKind, span: Span) {
        self.blocks[self.cur].stmts.push(Stmt { kind, span });
    }

    fn seal(&mut self, t: Terminator) {
        let b = &mut self.blocks[self.cur];
        if b.term.is_none() {
            b.term = Some(t);
        }
    }

    /// Ends the current block with `t` and continues in a fresh block that
    /// has no predecessor yet.
    fn seal_and_detach(&mut self, t: Terminator, hint: Span) {
        self.seal(t);
        self.cur = self.new_block(hint);
    }

    fn level(&mut self, ctx: Ctx<'_>) {
        if ctx.level == ctx.mods.len() {
            if self.body_entry.is_none() {
                self.body_entry = Some(self.cur);
            }
            let saved = std::mem::replace(&mut self.origin, Origin::Body);
            self.blocks[self.cur].origin = Origin::Body;
            if let Some(body) = ctx.body {
                self.stmts(&body.stmts, ctx);
            }
            self.origin = saved;
            return;
        }
        let m = ctx.mods[ctx.level];
        let saved = std::mem::replace(&mut self.origin, Origin::Modifier(m.name.to_string()));
        self.blocks[self.cur].origin = self.origin.clone();
        for (i, p) in m.params.iter().enumerate() {
            let Some(name) = &p.name else { continue };
            let var = LocalVar { ty: Some(p.ty.clone()), name: name.clone() };
            self.push(StmtKind::Decl { vars: vec![Some(var)], init: m.args.get(i).cloned() }, m.span);
        }
        match m.body {
            Some(b) => self.stmts(&b.stmts, ctx),
            None => self.placeholder(ctx, m.span),
        }
        self.origin = saved;
    }

    fn placeholder(&mut self, ctx: Ctx<'_>, span: Span) {
        let inner = self.new_block(span);
        let after = self.new_block(span);
        self.seal(Terminator::Jump(inner));
        self.cur = inner;
        let loops = std::mem::take(&mut self.loops);
        let origin = self.origin.clone();
        self.level(Ctx { level: ctx.level + 1, ret: Some(after), ..ctx });
        self.seal(Terminator::Jump(after));
        self.loops = loops;
        self.origin = origin;
        self.cur = after;
        self.blocks[after].origin = self.origin.clone();
    }

    fn stmts(&mut self, stmts: &[AstStmt], ctx: Ctx<'_>) {
        for s in stmts {
            self.stmt(s, ctx);
        }
    }

    fn stmt(&mut self, s: &AstStmt, ctx: Ctx<'_>) {
        match &s.kind {
            AstStmtKind::Block(b) => self.stmts(&b.stmts, ctx),
            AstStmtKind::Expr(e) => self.expr_stmt(e, s.span),
            AstStmtKind::VarDecl { vars, init } => {
                self.push(StmtKind::Decl { vars: vars.clone(), init: init.clone() }, s.span)
            }
            AstStmtKind::Emit(e) => self.push(StmtKind::Emit(e.clone()), s.span),
            AstStmtKind::Require { cond, message } => self.guard(cond.clone(), message.clone(), s.span),
            AstStmtKind::Revert(v) => self.seal_and_detach(Terminator::Revert(v.clone()), s.span),
            AstStmtKind::Return(v) => {
                if let Some(v) = v {
                    self.push(StmtKind::SetReturn(v.clone()), s.span);
                }
                let t = match ctx.ret {
                    Some(b) => Terminator::Jump(b),
                    None => Terminator::Return,
                };
                self.seal_and_detach(t, s.span);
            }
            AstStmtKind::If { cond, then_branch, else_branch } => {
                let then_b = self.new_block(then_branch.span);
                let else_b = else_branch.as_ref().map(|e| self.new_block(e.span));
                let join = self.new_block(s.span);
                self.seal(Terminator::Branch { cond: cond.clone(), then_bb: then_b, else_bb: else_b.unwrap_or(join) });
                self.cur = then_b;
                self.stmt(then_branch, ctx);
                self.seal(Terminator::Jump(join));
                if let (Some(eb), Some(e)) = (else_b, else_branch) {
                    self.cur = eb;
                    self.stmt(e, ctx);
                    self.seal(Terminator::Jump(join));
                }
                self.cur = join;
            }
            AstStmtKind::While { cond, body } => {
                let header = self.new_block(cond.span);
                let body_b = self.new_block(body.span);
                let exit = self.new_block(s.span);
                self.seal(Terminator::Jump(header));
                self.cur = header;
                self.seal(Terminator::Branch { cond: cond.clone(), then_bb: body_b, else_bb: exit });
                self.loops.push((header, exit));
                self.cur = body_b;
                self.stmt(body, ctx);
                self.seal(Terminator::Jump(header));
                self.loops.pop();
                self.cur = exit;
            }
            AstStmtKind::DoWhile { body, cond } => {
                let body_b = self.new_block(body.span);
                let cond_b = self.new_block(cond.span);
                let exit = self.new_block(s.span);
                self.seal(Terminator::Jump(body_b));
                self.loops.push((cond_b, exit));
                self.cur = body_b;
                self.stmt(body, ctx);
                self.seal(Terminator::Jump(cond_b));
                self.loops.pop();
                self.cur = cond_b;
                self.seal(Terminator::Branch { cond: cond.clone(), then_bb: body_b, else_bb: exit });
                self.cur = exit;
            }
            AstStmtKind::For { init, cond, step, body } => {
                if let Some(i) = init {
                    self.stmt(i, ctx);
                }
                let header = self.new_block(cond.as_ref().map_or(s.span, |c| c.span));
                let body_b = self.new_block(body.span);
                let step_b = self.new_block(step.as_ref().map_or(s.span, |e| e.span));
                let exit = self.new_block(s.span);
                self.seal(Terminator::Jump(header));
                self.cur = header;
                match cond {
                    Some(c) => self.seal(Terminator::Branch { cond: c.clone(), then_bb: body_b, else_bb: exit }),
                    None => self.seal(Terminator::Jump(body_b)),
                }
                self.loops.push((step_b, exit));
                self.cur = body_b;
                self.stmt(body, ctx);
                self.seal(Terminator::Jump(step_b));
                self.loops.pop();
                self.cur = step_b;
                if let Some(e) = step {
                    self.push(StmtKind::Expr(e.clone()), e.span);
                }
                self.seal(Terminator::Jump(header));
                self.cur = exit;
            }
            AstStmtKind::Break => {
                if let Some(&(_, brk)) = self.loops.last() {
                    self.seal_and_detach(Terminator::Jump(brk), s.span);
                }
            }
            AstStmtKind::Continue => {
                if let Some(&(cont, _)) = self.loops.last() {
                    self.seal_and_detach(Terminator::Jump(cont), s.span);
                }
            }
            AstStmtKind::Placeholder => {
                if ctx.level < ctx.mods.len() {
                    self.placeholder(ctx, s.span);
                }
            }
            AstStmtKind::Unsupported { construct, text } => {
                let own = self.new_block(s.span);
                let next = self.new_block(s.span);
                self.seal(Terminator::Jump(own));
                self.cur = own;
                self.push(StmtKind::Opaque { construct: construct.clone(), text: text.clone() }, s.span);
                self.seal(Terminator::Jump(next));
                self.cur = next;
            }
        }
    }

    fn expr_stmt(&mut self, e: &Expr, span: Span) {
        if let ExprKind::Call { callee, args, .. } = &e.kind {
            match callee.as_ident() {
                Some("selfdestruct" | "suicide") if args.len() == 1 => {
                    self.seal_and_detach(Terminator::Selfdestruct(args[0].clone()), span);
                    return;
                }
                Some("assert") if args.len() == 1 => {
                    self.guard(args[0].clone(), None, span);
                    return;
                }
                Some("require") if !args.is_empty() => {
                    self.guard(args[0].clone(), args.get(1).cloned(), span);
                    return;
                }
                _ => {}
            }
        }
        self.push(StmtKind::Expr(e.clone()), span);
    }

    /// `require(cond)`: branch with the false edge to a revert block.
    fn guard(&mut self, cond: Expr, message: Option<Expr>, span: Span) {
        let revert = self.new_block(span);
        let cont = self.new_block(span);
        self.seal(Terminator::Branch { cond, then_bb: cont, else_bb: revert });
        self.cur = revert;
        self.seal(Terminator::Revert(message));
        self.cur = cont;
    }

    fn finish(self) -> Cfg {
        let n = self.blocks.len();
        let mut reachable = vec![false; n];
        let mut stack = vec![0];
        while let Some(b) = stack.pop() {
            if reachable[b] {
                continue;
            }
            reachable[b] = true;
            if let Some(t) = &self.blocks[b].term {
                stack.extend(t.successors());
            }
        }
        let mut remap = vec![usize::MAX; n];
        let mut next = 0;
        for (i, r) in reachable.iter().enumerate() {
            if *r {
                remap[i] = next;
                next += 1;
            }
        }
        let fix = |t: Terminator| match t {
            Terminator::Jump(b) => Terminator::Jump(remap[b]),
            Terminator::Branch { cond, then_bb, else_bb } => {
                Terminator::Branch { cond, then_bb: remap[then_bb], else_bb: remap[else_bb] }
            }
            other => other,
        };
        let mut blocks = Vec::with_capacity(next);
        for (i, p) in self.blocks.into_iter().enumerate() {
            if !reachable[i] {
                continue;
            }
            let term = fix(p.term.unwrap_or(Terminator::End));
            let span = block_span(&p.stmts, &term).unwrap_or(p.hint);
            blocks.push(BasicBlock { id: remap[i], stmts: p.stmts, term, span, origin: p.origin });
        }
        let body_entry = self.body_entry.filter(|&b| reachable[b]).map(|b| remap[b]);
        Cfg { blocks, body_entry }
    }
}

fn block_span(stmts: &[Stmt], term: &Terminator) -> Option<Span> {
    let mut spans = stmts.iter().map(|s| s.span).chain(match term {
        Terminator::Branch { cond, .. } => Some(cond.span),
        Terminator::Selfdestruct(e) => Some(e.span),
        _ => None,
    });
    let first = spans.next()?;
    Some(spans.fold(first, |acc, s| acc.to(s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::ast::{FunctionDecl, ModifierDecl};
    use crate::frontend::{expr_to_string, parse_source, ParseOptions};

    fn parse(src: &str) -> (Vec<FunctionDecl>, Vec<ModifierDecl>) {
        let ast = parse_source(src, &ParseOptions::default());
        assert!(!ast.has_errors(), "{:?}", ast.diagnostics);
        let c = ast.contracts.into_iter().next().unwrap();
        (c.functions, c.modifiers)
    }

    fn body_cfg(stmts: &str) -> Cfg {
        let (fs, _) = parse(&format!("contract A {{ function f(uint x) public {{ {stmts} }} }}"));
        build_cfg(fs[0].body.as_ref().unwrap())
    }

    #[test]
    fn empty_body_is_one_end_block() {
        let cfg = body_cfg("");
        assert_eq!(cfg.blocks.len(), 1);
        assert_eq!(cfg.blocks[0].term, Terminator::End);
        assert_eq!(cfg.body_entry, Some(0));
    }

    #[test]
    fn timelock_modifier_shape() {
        let (_, ms) = parse(
            "contract A { modifier onlyAfter(uint256 time){ if (block.timestamp <= time) revert TooEarly(); _;} }",
        );
        let cfg = build_cfg(ms[0].body.as_ref().unwrap());
        assert_eq!(cfg.blocks.len(), 3);
        match &cfg.blocks[0].term {
            Terminator::Branch { cond, then_bb, else_bb } => {
                assert_eq!(expr_to_string(cond), "block.timestamp <= time");
                assert!(matches!(cfg.blocks[*then_bb].term, Terminator::Revert(Some(_))));
                assert_eq!(cfg.blocks[*else_bb].term, Terminator::End);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn require_branches_to_revert_block() {
        let cfg = body_cfg("require(x > 1, \"small\"); x = 2;");
        assert_eq!(cfg.blocks.len(), 3);
        assert_eq!(cfg.edge_count(), 2);
        let Terminator::Branch { then_bb, else_bb, .. } = &cfg.blocks[0].term else { panic!() };
        assert!(matches!(cfg.blocks[*else_bb].term, Terminator::Revert(Some(_))));
        assert_eq!(cfg.blocks[*then_bb].stmts.len(), 1);
    }

    #[test]
    fn loops_have_back_edges() {
        let cfg = body_cfg("while (x > 0) { x--; } for (uint i = 0; i < 3; i++) { if (i == 1) continue; break; }");
        let preds = cfg.predecessors();
        // Each loop header is reached from before the loop and from its latch.
        let headers: Vec<_> = cfg.blocks.iter().filter(|b| matches!(b.term, Terminator::Branch { .. }) && preds[b.id].len() >= 2).collect();
        assert_eq!(headers.len(), 2);
    }

    #[test]
    fn code_after_return_is_dropped() {
        let cfg = body_cfg("return; x = 1;");
        assert_eq!(cfg.blocks.len(), 1);
        assert_eq!(cfg.blocks[0].term, Terminator::Return);
    }

    #[test]
    fn selfdestruct_terminates_block() {
        let cfg = body_cfg("require(msg.sender == owner); selfdestruct(payable(owner));");
        assert!(cfg.blocks.iter().any(|b| matches!(b.term, Terminator::Selfdestruct(_))));
    }

    #[test]
    fn modifiers_wrap_body_and_dominate_it() {
        let (fs, ms) = parse(
            "contract A {
                modifier m1() { require(msg.sender == o); _; x = 9; }
                modifier m2(uint t) { if (block.timestamp < t) revert(); _; }
                function f() public m1 m2(5) { x = 1; return; }
            }",
        );
        let mods: Vec<Inline> = ms
            .iter()
            .zip([&[][..], &fs[0].modifiers_invoked[1].args[..]])
            .map(|(m, args)| Inline { name: &m.name.name, params: &m.params, args, body: m.body.as_ref(), span: m.span })
            .collect();
        let cfg = build(fs[0].body.as_ref(), fs[0].span, &mods);
        let be = cfg.body_entry.unwrap();
        assert_eq!(cfg.blocks[be].origin, Origin::Body);
        assert!(cfg.blocks[be].stmts.iter().any(|s| matches!(&s.kind, StmtKind::Expr(e) if expr_to_string(e) == "x = 1")));
        // m2's parameter is bound to its argument.
        assert!(cfg.blocks.iter().flat_map(|b| &b.stmts).any(|s| matches!(&s.kind, StmtKind::Decl { init: Some(e), .. } if expr_to_string(e) == "5")));
        // The body's `return` resumes in m1 after the placeholder.
        assert!(cfg.blocks.iter().any(|b| b.origin == Origin::Modifier("m1".into())
            && b.stmts.iter().any(|s| matches!(&s.kind, StmtKind::Expr(e) if expr_to_string(e) == "x = 9"))));
        assert!(cfg.blocks.iter().all(|b| b.term != Terminator::Return));
    }
}
