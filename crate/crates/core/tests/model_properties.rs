mod common;

use common::{delete_one, exhaustive_contains, pattern, small_db};
use proptest::prelude::*;
use seqmine_core::{EventSet, ItemId, Pattern, Sequence};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn greedy_containment_matches_exhaustive(
        db in small_db(1, 5, 6, 3),
        p in pattern(5, 3, 2),
    ) {
        let seq = &db.sequences()[0];
        prop_assert_eq!(seq.contains(&p), exhaustive_contains(seq, &p));
    }

    #[test]
    fn deletion_never_lowers_support(
        db in small_db(12, 5, 5, 3),
        p in pattern(5, 3, 3),
        choice in 0usize..16,
    ) {
        let q = delete_one(&p, choice);
        prop_assert!(db.support(&q) >= db.support(&p));
        for seq in db.sequences() {
            if seq.contains(&p) {
                prop_assert!(seq.contains(&q));
            }
        }
    }

    #[test]
    fn support_is_bounded(db in small_db(10, 4, 4, 3), p in pattern(4, 3, 2)) {
        let s = db.support(&p);
        prop_assert!(s <= db.len() as u64);
    }

    #[test]
    fn event_sets_are_sorted_and_unique(items in prop::collection::vec(0u32..20, 1..10)) {
        let e = EventSet::new(items.iter().copied().map(ItemId).collect()).unwrap();
        prop_assert!(e.items().windows(2).all(|w| w[0] < w[1]));
        for i in items {
            prop_assert!(e.contains(ItemId(i)));
        }
    }
}

#[test]
fn containment_agrees_with_exhaustive_on_known_cases() {
    let es = |v: &[u32]| EventSet::new(v.iter().copied().map(ItemId).collect()).unwrap();
    let seq = Sequence::from_baskets(0, vec![es(&[0, 1]), es(&[2]), es(&[0, 1])]);
    let p = Pattern::new(vec![es(&[0]), es(&[1])]);
    assert!(seq.contains(&p));
    assert!(exhaustive_contains(&seq, &p));
    let seq = Sequence::from_baskets(0, vec![es(&[0]), es(&[1])]);
    let p = Pattern::new(vec![es(&[0, 1])]);
    assert!(!seq.contains(&p));
    assert!(!exhaustive_contains(&seq, &p));
}
