//! Vertical occurrence lists and the two temporal joins.

use std::collections::BTreeMap;

use crate::model::{ItemId, SequenceDatabase};

/// Sorted, duplicate-free `(sid, eid)` pairs.
///
/// For a pattern, `(sid, eid)` means sequence `sid` contains the pattern with
/// its last element matched at `eid`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IdList {
    entries: Vec<(u32, u32)>,
    distinct_sids: usize,
}

impl IdList {
    /// Sorts and deduplicates the given entries.
    pub fn from_entries(mut entries: Vec<(u32, u32)>) -> Self {
        entries.sort_unstable();
        entries.dedup();
        Self::from_canonical(entries)
    }

    fn from_canonical(entries: Vec<(u32, u32)>) -> Self {
        let distinct_sids = count_sids(&entries);
        IdList {
            entries,
            distinct_sids,
        }
    }

    pub fn entries(&self) -> &[(u32, u32)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Support of the pattern this list belongs to.
    pub fn distinct_sids(&self) -> usize {
        self.distinct_sids
    }
}

fn count_sids(entries: &[(u32, u32)]) -> usize {
    let mut n = 0;
    let mut last = None;
    for &(sid, _) in entries {
        if last != Some(sid) {
            n += 1;
            last = Some(sid);
        }
    }
    n
}

/// One id-list per item, covering every (item, basket) incidence once.
pub fn verticalize(db: &SequenceDatabase) -> BTreeMap<ItemId, IdList> {
    let mut raw: BTreeMap<ItemId, Vec<(u32, u32)>> = BTreeMap::new();
    for seq in db.sequences() {
        for event in seq.events() {
            for &item in event.basket.items() {
                raw.entry(item).or_default().push((seq.sid(), event.eid));
            }
        }
    }
    // sequences are sorted by sid and eids increase, so pushes are already sorted
    raw.into_iter()
        .map(|(item, entries)| (item, IdList::from_canonical(entries)))
        .collect()
}

/// S-extension join: keeps the atom occurrences that come strictly after
/// some prefix occurrence in the same sequence.
pub fn temporal_join_s(prefix: &IdList, atom: &IdList) -> IdList {
    let (p, a) = (&prefix.entries, &atom.entries);
    let mut out = Vec::new();
    let mut sids = 0;
    let (mut i, mut j) = (0, 0);
    while i < p.len() && j < a.len() {
        let (ps, pe) = p[i];
        let asid = a[j].0;
        if ps < asid {
            i = skip_sid(p, i);
        } else if asid < ps {
            j = skip_sid(a, j);
        } else {
            // pe is the earliest prefix match in this sid
            let start = out.len();
            while j < a.len() && a[j].0 == asid {
                if a[j].1 > pe {
                    out.push(a[j]);
                }
                j += 1;
            }
            if out.len() > start {
                sids += 1;
            }
            i = skip_sid(p, i);
        }
    }
    IdList {
        entries: out,
        distinct_sids: sids,
    }
}

/// I-extension join: occurrences shared by both lists.
pub fn temporal_join_i(prefix: &IdList, atom: &IdList) -> IdList {
    let (p, a) = (&prefix.entries, &atom.entries);
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < p.len() && j < a.len() {
        match p[i].cmp(&a[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(p[i]);
                i += 1;
                j += 1;
            }
        }
    }
    IdList::from_canonical(out)
}

fn skip_sid(entries: &[(u32, u32)], mut i: usize) -> usize {
    let sid = entries[i].0;
    while i < entries.len() && entries[i].0 == sid {
        i += 1;
    }
    i
}
