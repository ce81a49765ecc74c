mod common;

use common::*;
use proptest::prelude::*;

#[test]
fn two_hundred_seeded_graphs_match_the_cut_oracle() {
    let o = dominator_oracle(200, 0x5eed);
    assert!(o.ok, "{}", o.detail);
}

#[test]
fn oracle_sanity_on_a_diamond() {
    let g = vec![vec![1, 2], vec![3], vec![3], vec![]];
    let d = brute_force_dominates(&g);
    assert!(d[0][3] && !d[1][3] && !d[2][3] && d[3][3]);
    dominators_agree(&g).unwrap();
}

/// Successor lists where node `i` may point anywhere; a chain from the
/// entry keeps every node reachable.
fn graph() -> impl Strategy<Value = Vec<Vec<usize>>> {
    (1usize..=12).prop_flat_map(|n| {
        proptest::collection::vec(proptest::collection::vec(0..n, 0..4), n).prop_map(move |mut succs| {
            for (i, s) in succs.iter_mut().enumerate().take(n - 1) {
                if !s.contains(&(i + 1)) {
                    s.push(i + 1);
                }
            }
            for s in &mut succs {
                s.sort_unstable();
                s.dedup();
            }
            succs
        })
    })
}

proptest! {
    #[test]
    fn dominance_matches_cut_reachability(g in graph()) {
        prop_assert!(dominators_agree(&g).is_ok(), "{:?}", dominators_agree(&g));
    }

    #[test]
    fn idom_is_the_closest_strict_dominator(g in graph()) {
        let info = cdsentry::pdg::compute_dominators(&g, 0);
        let oracle = brute_force_dominates(&g);
        for b in 1..g.len() {
            let idom = info.idom[b].expect("reachable");
            prop_assert!(oracle[idom][b] && idom != b);
            // every other strict dominator of b dominates idom
            for d in (0..g.len()).filter(|&d| d != b && oracle[d][b]) {
                prop_assert!(oracle[d][idom]);
            }
        }
    }
}
