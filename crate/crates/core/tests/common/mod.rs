#![allow(dead_code)]

use proptest::prelude::*;
use seqmine_core::{EventSet, ItemId, Pattern, Sequence, SequenceDatabase, SymbolTable};

pub fn build_db(raw: &[Vec<Vec<u32>>], n_items: u32) -> SequenceDatabase {
    let mut symbols = SymbolTable::new();
    for i in 0..n_items {
        symbols.intern(&format!("i{i}")).unwrap();
    }
    let seqs = raw
        .iter()
        .enumerate()
        .map(|(sid, baskets)| {
            Sequence::from_baskets(
                sid as u32,
                baskets
                    .iter()
                    .map(|b| EventSet::new(b.iter().map(|&i| ItemId(i)).collect()).unwrap())
                    .collect(),
            )
        })
        .collect();
    SequenceDatabase::new(symbols, seqs).unwrap()
}

pub fn basket(n_items: u32, max_size: usize) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::btree_set(0..n_items, 1..=max_size).prop_map(|s| s.into_iter().collect())
}

/// Databases within the oracle's comfort zone.
pub fn small_db(
    max_seqs: usize,
    n_items: u32,
    max_baskets: usize,
    max_basket: usize,
) -> impl Strategy<Value = SequenceDatabase> {
    prop::collection::vec(
        prop::collection::vec(basket(n_items, max_basket), 1..=max_baskets),
        1..=max_seqs,
    )
    .prop_map(move |raw| build_db(&raw, n_items))
}

pub fn pattern(
    n_items: u32,
    max_elems: usize,
    max_basket: usize,
) -> impl Strategy<Value = Pattern> {
    prop::collection::vec(basket(n_items, max_basket), 1..=max_elems).prop_map(|elems| {
        Pattern::new(
            elems
                .into_iter()
                .map(|e| EventSet::new(e.into_iter().map(ItemId).collect()).unwrap())
                .collect(),
        )
    })
}

/// Containment by trying every strictly increasing position mapping.
pub fn exhaustive_contains(seq: &Sequence, pat: &Pattern) -> bool {
    fn go(events: &[seqmine_core::Event], elems: &[EventSet], from: usize) -> bool {
        let Some((first, rest)) = elems.split_first() else {
            return true;
        };
        (from..events.len())
            .any(|pos| first.is_subset_of(&events[pos].basket) && go(events, rest, pos + 1))
    }
    go(seq.events(), pat.elements(), 0)
}

/// Removes one item (dropping its element if it empties) or the last element.
pub fn delete_one(p: &Pattern, choice: usize) -> Pattern {
    let total = p.cardinality() + 1;
    let pick = choice % total;
    if pick == p.cardinality() {
        let mut elems = p.elements().to_vec();
        elems.pop();
        return Pattern::new(elems);
    }
    let mut seen = 0;
    let mut out = Vec::new();
    for e in p.elements() {
        if pick >= seen && pick < seen + e.len() {
            let item = e.items()[pick - seen];
            out.extend(e.without_item(item));
        } else {
            out.push(e.clone());
        }
        seen += e.len();
    }
    Pattern::new(out)
}
