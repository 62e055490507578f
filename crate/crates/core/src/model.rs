//! Items, events, sequences and patterns, plus the containment, support and
//! cardinality semantics the rest of the crate builds on.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use crate::error::ModelError;

/// Prefix carried by the year-of-birth item in the demographic basket.
pub const YOB_PREFIX: &str = "yob:";
/// Prefix carried by the gender item in the demographic basket.
pub const GENDER_PREFIX: &str = "gender:";

/// Dense index into a [`SymbolTable`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(pub u32);

impl ItemId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Append-only bijection between item symbols and contiguous [`ItemId`]s.
///
/// Interning takes `&mut self`, lookups take `&self`; share a finished table
/// behind an `Arc` once ingestion is done.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymbolTable {
    names: Vec<String>,
    index: HashMap<String, ItemId>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a table whose ids follow the sorted order of the given names.
    /// Duplicates are ignored.
    pub fn from_sorted_names<I, S>(names: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut all: Vec<String> = names
            .into_iter()
            .map(|s| s.as_ref().trim().to_string())
            .collect();
        all.sort();
        all.dedup();
        let mut table = SymbolTable::new();
        for name in all {
            table.intern(&name)?;
        }
        Ok(table)
    }

    /// Returns the id for `name`, allocating the next id if it is new.
    pub fn intern(&mut self, name: &str) -> Result<ItemId, ModelError> {
        let name = name.trim();
        if name.is_empty() {
            return Err(ModelError::EmptySymbol);
        }
        if let Some(&id) = self.index.get(name) {
            return Ok(id);
        }
        let id = ItemId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn get(&self, name: &str) -> Option<ItemId> {
        self.index.get(name.trim()).copied()
    }

    pub fn name(&self, id: ItemId) -> Option<&str> {
        self.names.get(id.index()).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ItemId, &str)> {
        self.names
            .iter()
            .enumerate()
            .map(|(i, n)| (ItemId(i as u32), n.as_str()))
    }

    /// True for `yob:*` and `gender:*` items.
    pub fn is_demographic(&self, id: ItemId) -> bool {
        self.name(id).is_some_and(is_demographic_symbol)
    }

    pub fn is_gender(&self, id: ItemId) -> bool {
        self.name(id).is_some_and(|n| n.starts_with(GENDER_PREFIX))
    }

    /// Year encoded by a `yob:<year>` item.
    pub fn yob_year(&self, id: ItemId) -> Option<i32> {
        self.name(id)
            .and_then(|n| n.strip_prefix(YOB_PREFIX))
            .and_then(|y| y.trim().parse().ok())
    }
}

pub fn is_demographic_symbol(name: &str) -> bool {
    name.starts_with(YOB_PREFIX) || name.starts_with(GENDER_PREFIX)
}

/// A non-empty set of items observed at one time point, kept sorted and
/// duplicate-free.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventSet(Vec<ItemId>);

impl EventSet {
    pub fn new(mut items: Vec<ItemId>) -> Result<Self, ModelError> {
        if items.is_empty() {
            return Err(ModelError::EmptyEvent);
        }
        items.sort_unstable();
        items.dedup();
        Ok(EventSet(items))
    }

    pub fn single(item: ItemId) -> Self {
        EventSet(vec![item])
    }

    pub fn items(&self) -> &[ItemId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.0.binary_search(&item).is_ok()
    }

    pub fn last(&self) -> ItemId {
        *self.0.last().expect("event sets are non-empty")
    }

    /// Subset test over two sorted lists.
    pub fn is_subset_of(&self, other: &EventSet) -> bool {
        if self.0.len() > other.0.len() {
            return false;
        }
        let mut theirs = other.0.iter();
        'outer: for item in &self.0 {
            for candidate in theirs.by_ref() {
                match candidate.cmp(item) {
                    Ordering::Less => continue,
                    Ordering::Equal => continue 'outer,
                    Ordering::Greater => return false,
                }
            }
            return false;
        }
        true
    }

    /// Copy with one more item; the caller keeps the set canonical.
    pub fn with_item(&self, item: ItemId) -> Self {
        let mut items = self.0.clone();
        if let Err(pos) = items.binary_search(&item) {
            items.insert(pos, item);
        }
        EventSet(items)
    }

    /// Copy without `item`, or `None` when that would leave the set empty.
    pub fn without_item(&self, item: ItemId) -> Option<Self> {
        let items: Vec<ItemId> = self.0.iter().copied().filter(|&i| i != item).collect();
        if items.is_empty() {
            None
        } else {
            Some(EventSet(items))
        }
    }
}

/// One basket in a sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub eid: u32,
    pub basket: EventSet,
}

/// A patient's time-ordered baskets. `eid` 0 is the demographic basket.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sequence {
    sid: u32,
    events: Vec<Event>,
}

impl Sequence {
    pub fn new(sid: u32, events: Vec<Event>) -> Result<Self, ModelError> {
        if events.windows(2).any(|w| w[0].eid >= w[1].eid) {
            return Err(ModelError::UnorderedEvents { sid });
        }
        Ok(Sequence { sid, events })
    }

    /// Builds a sequence from baskets, numbering them 0, 1, 2, ...
    pub fn from_baskets(sid: u32, baskets: Vec<EventSet>) -> Self {
        let events = baskets
            .into_iter()
            .enumerate()
            .map(|(i, basket)| Event {
                eid: i as u32,
                basket,
            })
            .collect();
        Sequence { sid, events }
    }

    pub fn sid(&self) -> u32 {
        self.sid
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Subsequence test. Greedy earliest matching is exact here: taking the
    /// first basket that covers an element never rules out a later match.
    pub fn contains(&self, pattern: &Pattern) -> bool {
        let mut events = self.events.iter();
        'elements: for element in pattern.elements() {
            for event in events.by_ref() {
                if element.is_subset_of(&event.basket) {
                    continue 'elements;
                }
            }
            return false;
        }
        true
    }
}

/// Collection of sequences sorted by sid, plus the symbol table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceDatabase {
    symbols: SymbolTable,
    sequences: Vec<Sequence>,
}

impl SequenceDatabase {
    pub fn new(symbols: SymbolTable, mut sequences: Vec<Sequence>) -> Result<Self, ModelError> {
        sequences.sort_by_key(Sequence::sid);
        if let Some(w) = sequences.windows(2).find(|w| w[0].sid == w[1].sid) {
            return Err(ModelError::DuplicateSid(w[0].sid));
        }
        let known = symbols.len();
        for seq in &sequences {
            for event in seq.events() {
                if let Some(bad) = event.basket.items().iter().find(|i| i.index() >= known) {
                    return Err(ModelError::UnknownItem(*bad));
                }
            }
        }
        Ok(SequenceDatabase { symbols, sequences })
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    pub fn sequences(&self) -> &[Sequence] {
        &self.sequences
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// Number of sequences containing `pattern`.
    pub fn support(&self, pattern: &Pattern) -> u64 {
        self.sequences
            .iter()
            .filter(|s| s.contains(pattern))
            .count() as u64
    }

    /// Parses a pattern written as symbol lists, e.g. `[["A"], ["B", "C"]]`.
    pub fn pattern<E, S>(&self, elements: &[E]) -> Result<Pattern, ModelError>
    where
        E: AsRef<[S]>,
        S: AsRef<str>,
    {
        let mut out = Vec::with_capacity(elements.len());
        for element in elements {
            let mut ids = Vec::new();
            for name in element.as_ref() {
                let name = name.as_ref();
                ids.push(
                    self.symbols
                        .get(name)
                        .ok_or_else(|| ModelError::UnknownSymbol(name.to_string()))?,
                );
            }
            out.push(EventSet::new(ids)?);
        }
        Ok(Pattern::new(out))
    }
}

/// Ordered list of itemsets.
///
/// Ordering is by element count, then element-wise by item-id lists.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Pattern {
    elements: Vec<EventSet>,
}

impl Pattern {
    pub fn new(elements: Vec<EventSet>) -> Self {
        Pattern { elements }
    }

    pub fn empty() -> Self {
        Pattern::default()
    }

    pub fn elements(&self) -> &[EventSet] {
        &self.elements
    }

    pub fn into_elements(self) -> Vec<EventSet> {
        self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Total number of items across elements (the `k` of a k-sequence).
    pub fn cardinality(&self) -> usize {
        self.elements.iter().map(EventSet::len).sum()
    }

    pub fn items(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.elements.iter().flat_map(|e| e.items().iter().copied())
    }

    /// Appends `item` as a new, later element.
    pub fn s_extend(&self, item: ItemId) -> Pattern {
        let mut elements = self.elements.clone();
        elements.push(EventSet::single(item));
        Pattern { elements }
    }

    /// Adds `item` to the last element.
    pub fn i_extend(&self, item: ItemId) -> Pattern {
        let mut elements = self.elements.clone();
        let last = elements
            .pop()
            .expect("i-extension needs a non-empty pattern");
        elements.push(last.with_item(item));
        Pattern { elements }
    }

    /// All elements but the last, paired with the last one.
    pub fn split_last(&self) -> Option<(Pattern, &EventSet)> {
        let (last, head) = self.elements.split_last()?;
        Some((Pattern::new(head.to_vec()), last))
    }

    /// Sort key used for listings: cardinality first, then pattern order.
    pub fn canonical_cmp(&self, other: &Pattern) -> Ordering {
        self.cardinality()
            .cmp(&other.cardinality())
            .then_with(|| self.cmp(other))
    }

    pub fn display<'a>(&'a self, symbols: &'a SymbolTable) -> PatternDisplay<'a> {
        PatternDisplay {
            pattern: self,
            symbols,
        }
    }
}

impl Ord for Pattern {
    fn cmp(&self, other: &Self) -> Ordering {
        self.elements
            .len()
            .cmp(&other.elements.len())
            .then_with(|| self.elements.cmp(&other.elements))
    }
}

impl PartialOrd for Pattern {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<Vec<EventSet>> for Pattern {
    fn from(elements: Vec<EventSet>) -> Self {
        Pattern::new(elements)
    }
}

/// Human-readable `A,B -> C` rendering.
pub struct PatternDisplay<'a> {
    pattern: &'a Pattern,
    symbols: &'a SymbolTable,
}

impl fmt::Display for PatternDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, element) in self.pattern.elements().iter().enumerate() {
            if i > 0 {
                f.write_str(" -> ")?;
            }
            f.write_str("(")?;
            for (j, item) in element.items().iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                match self.symbols.name(*item) {
                    Some(name) => f.write_str(name)?,
                    None => write!(f, "{item}")?,
                }
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// A pattern with its absolute and relative support.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportedPattern {
    pub pattern: Pattern,
    pub support: u64,
    pub relative_support: f64,
}

impl SupportedPattern {
    pub fn new(pattern: Pattern, support: u64, db_size: u64) -> Self {
        let relative_support = if db_size == 0 {
            0.0
        } else {
            support as f64 / db_size as f64
        };
        SupportedPattern {
            pattern,
            support,
            relative_support,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(names: &[&str]) -> SymbolTable {
        let mut t = SymbolTable::new();
        for n in names {
            t.intern(n).unwrap();
        }
        t
    }

    fn es(ids: &[u32]) -> EventSet {
        EventSet::new(ids.iter().map(|&i| ItemId(i)).collect()).unwrap()
    }

    fn pat(elements: &[&[u32]]) -> Pattern {
        Pattern::new(elements.iter().map(|e| es(e)).collect())
    }

    #[test]
    fn intern_allocates_dense_ids() {
        let mut t = SymbolTable::new();
        assert_eq!(t.intern("Depressive disorder NEC").unwrap(), ItemId(0));
        let mut t = SymbolTable::new();
        let a = t.intern("A").unwrap();
        let b = t.intern("B").unwrap();
        let a2 = t.intern("A").unwrap();
        assert_eq!((a, b, a2), (ItemId(0), ItemId(1), ItemId(0)));
        assert_eq!(t.intern("  A ").unwrap(), ItemId(0));
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn intern_rejects_blank_names() {
        let mut t = SymbolTable::new();
        assert_eq!(t.intern("   "), Err(ModelError::EmptySymbol));
        assert_eq!(t.intern(""), Err(ModelError::EmptySymbol));
    }

    #[test]
    fn event_sets_are_canonical() {
        let e = EventSet::new(vec![ItemId(3), ItemId(1), ItemId(3)]).unwrap();
        assert_eq!(e.items(), &[ItemId(1), ItemId(3)]);
        assert_eq!(EventSet::new(vec![]), Err(ModelError::EmptyEvent));
        assert!(es(&[1]).is_subset_of(&es(&[0, 1, 2])));
        assert!(!es(&[1, 3]).is_subset_of(&es(&[0, 1, 2])));
    }

    #[test]
    fn cardinality_counts_items() {
        // C -> ABD -> B
        assert_eq!(pat(&[&[2], &[0, 1, 3], &[1]]).cardinality(), 5);
        assert_eq!(pat(&[&[0]]).cardinality(), 1);
        assert_eq!(pat(&[&[0, 1], &[0, 1]]).cardinality(), 4);
    }

    #[test]
    fn containment_examples() {
        // A=0, B=1, C=2
        let seq = Sequence::from_baskets(0, vec![es(&[0, 1]), es(&[2]), es(&[0, 1])]);
        assert!(seq.contains(&pat(&[&[0], &[1]])));
        assert!(seq.contains(&Pattern::empty()));
        let seq = Sequence::from_baskets(0, vec![es(&[0]), es(&[1])]);
        assert!(!seq.contains(&pat(&[&[0, 1]])));
    }

    #[test]
    fn support_examples() {
        let symbols = table(&["A", "B", "C", "D"]);
        let db = SequenceDatabase::new(
            symbols,
            vec![
                Sequence::from_baskets(0, vec![es(&[0]), es(&[1])]),
                Sequence::from_baskets(1, vec![es(&[0]), es(&[1])]),
                Sequence::from_baskets(2, vec![es(&[0]), es(&[2])]),
            ],
        )
        .unwrap();
        assert_eq!(db.support(&pat(&[&[0], &[1]])), 2);
        assert_eq!(db.support(&pat(&[&[3]])), 0);
        assert_eq!(db.support(&Pattern::empty()), 3);
        let p = db.pattern(&[vec!["A"], vec!["B"]]).unwrap();
        assert_eq!(db.support(&p), 2);
    }

    #[test]
    fn database_rejects_duplicate_sids_and_unknown_items() {
        let symbols = table(&["A"]);
        let dup = vec![
            Sequence::from_baskets(1, vec![es(&[0])]),
            Sequence::from_baskets(1, vec![es(&[0])]),
        ];
        assert_eq!(
            SequenceDatabase::new(symbols.clone(), dup),
            Err(ModelError::DuplicateSid(1))
        );
        let unknown = vec![Sequence::from_baskets(0, vec![es(&[5])])];
        assert_eq!(
            SequenceDatabase::new(symbols, unknown),
            Err(ModelError::UnknownItem(ItemId(5)))
        );
    }

    #[test]
    fn sequence_requires_increasing_eids() {
        let events = vec![
            Event {
                eid: 2,
                basket: es(&[0]),
            },
            Event {
                eid: 1,
                basket: es(&[0]),
            },
        ];
        assert!(Sequence::new(0, events).is_err());
    }

    #[test]
    fn pattern_order_is_element_count_first() {
        let short = pat(&[&[5]]);
        let long = pat(&[&[0], &[0]]);
        assert!(short < long);
        assert!(pat(&[&[0, 1]]) < pat(&[&[0, 2]]));
        assert_eq!(
            pat(&[&[0, 1]]).canonical_cmp(&pat(&[&[0], &[0]])),
            Ordering::Less
        );
    }

    #[test]
    fn demographic_helpers() {
        let t = table(&["yob:1943", "gender:female", "Essential hypertension"]);
        assert!(t.is_demographic(ItemId(0)));
        assert!(t.is_gender(ItemId(1)));
        assert!(!t.is_demographic(ItemId(2)));
        assert_eq!(t.yob_year(ItemId(0)), Some(1943));
        assert_eq!(t.yob_year(ItemId(2)), None);
    }
}
