//! Dominators by the iterative algorithm of Cooper, Harvey and Kennedy over
//! reverse postorder.

use serde::Serialize;

use crate::ir::{BlockId, Cfg};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DomInfo {
    pub entry: BlockId,
    /// `None` for the entry and for blocks unreachable from it.
    pub idom: Vec<Option<BlockId>>,
    /// Reachable blocks in reverse postorder.
    pub rpo: Vec<BlockId>,
}

impl DomInfo {
    pub fn for_cfg(cfg: &Cfg) -> DomInfo {
        let succs: Vec<Vec<BlockId>> = cfg.blocks.iter().map(|b| b.term.successors()).collect();
        compute_dominators(&succs, Cfg::ENTRY)
    }

    pub fn is_reachable(&self, b: BlockId) -> bool {
        b == self.entry || self.idom.get(b).is_some_and(Option::is_some)
    }

    /// Every path from the entry to `b` passes through `d`. Reflexive.
    pub fn dominates(&self, d: BlockId, b: BlockId) -> bool {
        if !self.is_reachable(b) {
            return false;
        }
        let mut cur = b;
        loop {
            if cur == d {
                return true;
            }
            match self.idom[cur] {
                Some(up) => cur = up,
                None => return false,
            }
        }
    }

    /// Blocks other than `d` itself that `d` dominates.
    pub fn strictly_dominated(&self, d: BlockId) -> Vec<BlockId> {
        self.rpo.iter().copied().filter(|&b| b != d && self.dominates(d, b)).collect()
    }
}

pub fn compute_dominators(succs: &[Vec<BlockId>], entry: BlockId) -> DomInfo {
    let n = succs.len();
    let mut idom: Vec<Option<BlockId>> = vec![None; n];
    if n == 0 {
        return DomInfo { entry, idom, rpo: Vec::new() };
    }

    // Iterative DFS for postorder.
    let mut post = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    let mut stack = vec![(entry, 0usize)];
    visited[entry] = true;
    while let Some((b, i)) = stack.last_mut() {
        if let Some(&s) = succs[*b].get(*i) {
            *i += 1;
            if !visited[s] {
                visited[s] = true;
                stack.push((s, 0));
            }
        } else {
            post.push(*b);
            stack.pop();
        }
    }
    let mut order = vec![usize::MAX; n];
    for (i, &b) in post.iter().enumerate() {
        order[b] = i;
    }
    let rpo: Vec<BlockId> = post.iter().rev().copied().collect();

    let mut preds = vec![Vec::new(); n];
    for (b, ss) in succs.iter().enumerate() {
        if visited[b] {
            for &s in ss {
                preds[s].push(b);
            }
        }
    }

    let mut doms: Vec<Option<BlockId>> = vec![None; n];
    doms[entry] = Some(entry);
    let mut changed = true;
    while changed {
        changed = false;
        for &b in rpo.iter().skip(1) {
            let mut new = None;
            for &p in &preds[b] {
                if doms[p].is_none() {
                    continue;
                }
                new = Some(match new {
                    None => p,
                    Some(cur) => intersect(&doms, &order, p, cur),
                });
            }
            if new.is_some() && doms[b] != new {
                doms[b] = new;
                changed = true;
            }
        }
    }

    for b in 0..n {
        if b != entry {
            idom[b] = doms[b];
        }
    }
    DomInfo { entry, idom, rpo }
}

fn intersect(doms: &[Option<BlockId>], order: &[usize], mut a: BlockId, mut b: BlockId) -> BlockId {
    while a != b {
        while order[a] < order[b] {
            a = doms[a].unwrap();
        }
        while order[b] < order[a] {
            b = doms[b].unwrap();
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_block() {
        let d = compute_dominators(&[vec![]], 0);
        assert!(d.dominates(0, 0));
        assert_eq!(d.idom, [None]);
    }

    #[test]
    fn diamond() {
        let d = compute_dominators(&[vec![1, 2], vec![3], vec![3], vec![]], 0);
        assert_eq!(d.idom[3], Some(0));
        assert!(!d.dominates(1, 3) && !d.dominates(2, 3));
        assert!(d.dominates(0, 3));
    }

    #[test]
    fn loop_header_dominates_body() {
        let d = compute_dominators(&[vec![1], vec![2, 3], vec![1], vec![]], 0);
        assert!(d.dominates(1, 2) && d.dominates(1, 3));
        assert!(!d.dominates(2, 1));
    }

    #[test]
    fn unreachable_block_is_not_dominated() {
        let d = compute_dominators(&[vec![], vec![0]], 0);
        assert!(!d.is_reachable(1));
        assert!(!d.dominates(0, 1));
    }
}
