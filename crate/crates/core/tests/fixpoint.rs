mod common;

use cdsentry::pdg;
use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn derivation_is_idempotent_and_monotone_under_perturbation() {
    let o = fixpoint_properties(100, 7);
    assert!(o.ok, "{}", o.detail);
}

#[test]
fn golden_labels_are_already_a_fixpoint() {
    for u in golden_units() {
        let facts = pdg::derive_perm_facts(&u.unit, &u.labels, &u.doms);
        assert_eq!(pdg::propagate(&u.unit, facts.clone()), facts, "{}", u.unit.name);
    }
}

#[test]
fn removing_every_label_removes_every_fact() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for u in golden_units() {
        let mut bare = perturb(&mut rng, &u.labels, true);
        for b in bare.iter_mut().flatten() {
            b.labels = [pdg::Label::O].into();
        }
        let facts = pdg::derive_perm_facts(&u.unit, &bare, &u.doms);
        assert!(flags(&facts).iter().all(|f| f.iter().all(|x| !x)), "{}", u.unit.name);
    }
}
