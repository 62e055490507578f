//! Exhaustive miner: enumerate every canonical pattern within the caps and
//! count support by scanning the database with plain containment.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::MineError;
use crate::miner::FrequentPatternSet;
use crate::model::{EventSet, ItemId, Pattern, SequenceDatabase, SupportedPattern};

pub const ORACLE_MAX_ITEMS: usize = 8;
pub const ORACLE_MAX_LEN: usize = 4;

/// Brute-force equivalent of [`crate::miner::mine`]. Cost is exponential, so
/// inputs beyond [`ORACLE_MAX_ITEMS`] distinct items or [`ORACLE_MAX_LEN`]
/// are refused.
pub fn oracle_mine(
    db: &SequenceDatabase,
    min_sup: u64,
    max_len: usize,
    max_elems: usize,
) -> Result<FrequentPatternSet, MineError> {
    if db.is_empty() {
        return Err(MineError::EmptyDatabase);
    }
    if min_sup == 0 {
        return Err(MineError::InvalidMinSupport("0".into()));
    }
    if max_len == 0 || max_elems == 0 {
        return Err(MineError::ZeroCap("max_len"));
    }
    if max_len > ORACLE_MAX_LEN {
        return Err(MineError::OracleLimit {
            what: "max_len",
            value: max_len,
            limit: ORACLE_MAX_LEN,
        });
    }
    let items: Vec<ItemId> = db
        .sequences()
        .iter()
        .flat_map(|s| {
            s.events()
                .iter()
                .flat_map(|e| e.basket.items().iter().copied())
        })
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if items.len() > ORACLE_MAX_ITEMS {
        return Err(MineError::OracleLimit {
            what: "distinct items",
            value: items.len(),
            limit: ORACLE_MAX_ITEMS,
        });
    }

    let elements = subsets_up_to(&items, max_len);
    let mut found = Vec::new();
    let mut stack: Vec<EventSet> = Vec::new();
    enumerate(&elements, max_len, max_elems, &mut stack, &mut |p| {
        let support = db.support(p);
        if support >= min_sup {
            found.push(SupportedPattern::new(p.clone(), support, db.len() as u64));
        }
    });
    Ok(FrequentPatternSet::new(
        Arc::new(db.symbols().clone()),
        db.len() as u64,
        min_sup,
        found,
        false,
    ))
}

/// All non-empty subsets of `items` with at most `max` members.
fn subsets_up_to(items: &[ItemId], max: usize) -> Vec<EventSet> {
    let n = items.len();
    (1u32..(1 << n))
        .filter(|mask| mask.count_ones() as usize <= max)
        .map(|mask| {
            let chosen = (0..n)
                .filter(|b| mask & (1 << b) != 0)
                .map(|b| items[b])
                .collect();
            EventSet::new(chosen).expect("mask is non-zero")
        })
        .collect()
}

fn enumerate(
    elements: &[EventSet],
    budget: usize,
    elems_left: usize,
    stack: &mut Vec<EventSet>,
    visit: &mut dyn FnMut(&Pattern),
) {
    if elems_left == 0 {
        return;
    }
    for e in elements {
        if e.len() > budget {
            continue;
        }
        stack.push(e.clone());
        let p = Pattern::new(stack.clone());
        visit(&p);
        enumerate(elements, budget - e.len(), elems_left - 1, stack, visit);
        stack.pop();
    }
}
