//! Frequent-sequence enumeration over vertical id-lists.
//!
//! Every frequent item seeds an equivalence class. Each class is explored
//! depth first: a node's children are its I-extensions (a larger last
//! element) followed by its S-extensions (a new, later element), both in
//! ascending item order. A child is only tried with items that already
//! extended its parent frequently, and any extension supported by fewer than
//! `min_sup` sequences is pruned together with its whole subtree.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::MineError;
use crate::idlist::{temporal_join_i, temporal_join_s, verticalize, IdList};
use crate::model::{ItemId, Pattern, SequenceDatabase, SupportedPattern, SymbolTable};

pub const DEFAULT_MIN_SUP: MinSupport = MinSupport::Relative(0.001);
pub const DEFAULT_MAX_PATTERN_LENGTH: usize = 5;
pub const DEFAULT_MAX_ELEMENTS: usize = 5;

/// Minimum support, either a sequence count or a fraction of |D|.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MinSupport {
    Absolute(u64),
    Relative(f64),
}

impl MinSupport {
    /// Text containing a decimal point is a fraction in (0, 1]; anything else
    /// must be a positive integer count.
    pub fn parse(raw: &str) -> Result<Self, MineError> {
        let raw = raw.trim();
        let bad = || MineError::InvalidMinSupport(raw.to_string());
        if raw.contains('.') {
            let v: f64 = raw.parse().map_err(|_| bad())?;
            if !(v > 0.0 && v <= 1.0) {
                return Err(bad());
            }
            Ok(MinSupport::Relative(v))
        } else {
            let v: u64 = raw.parse().map_err(|_| bad())?;
            if v == 0 {
                return Err(bad());
            }
            Ok(MinSupport::Absolute(v))
        }
    }

    pub fn validate(self) -> Result<Self, MineError> {
        match self {
            MinSupport::Absolute(0) => Err(MineError::InvalidMinSupport("0".into())),
            MinSupport::Relative(v) if !(v > 0.0 && v <= 1.0) => {
                Err(MineError::InvalidMinSupport(v.to_string()))
            }
            ok => Ok(ok),
        }
    }

    /// Absolute threshold for a database of `db_size` sequences; never below 1.
    pub fn resolve(self, db_size: u64) -> u64 {
        match self {
            MinSupport::Absolute(n) => n.max(1),
            MinSupport::Relative(f) => ((f * db_size as f64).ceil() as u64).max(1),
        }
    }
}

impl fmt::Display for MinSupport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MinSupport::Absolute(n) => write!(f, "{n}"),
            MinSupport::Relative(v) if v.fract() == 0.0 => write!(f, "{v:.1}"),
            MinSupport::Relative(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinerConfig {
    pub min_sup: MinSupport,
    /// Cap on pattern cardinality (total item count).
    pub max_pattern_length: usize,
    /// Cap on the number of elements.
    pub max_elements: usize,
    /// List patterns made only of `yob:*`/`gender:*` items. They are mined
    /// either way because rules need them as antecedents.
    pub emit_demographic_only_patterns: bool,
    /// Worker count; `None` uses the global pool. Output does not depend on it.
    pub threads: Option<usize>,
}

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig {
            min_sup: DEFAULT_MIN_SUP,
            max_pattern_length: DEFAULT_MAX_PATTERN_LENGTH,
            max_elements: DEFAULT_MAX_ELEMENTS,
            emit_demographic_only_patterns: false,
            threads: None,
        }
    }
}

impl MinerConfig {
    pub fn with_min_sup(min_sup: MinSupport) -> Self {
        MinerConfig {
            min_sup,
            ..MinerConfig::default()
        }
    }

    pub(crate) fn validate(&self) -> Result<(), MineError> {
        self.min_sup.validate()?;
        if self.max_pattern_length == 0 {
            return Err(MineError::ZeroCap("max_pattern_length"));
        }
        if self.max_elements == 0 {
            return Err(MineError::ZeroCap("max_elements"));
        }
        if self.threads == Some(0) {
            return Err(MineError::ZeroCap("threads"));
        }
        Ok(())
    }
}

/// Frequent patterns sorted by cardinality, then pattern order.
///
/// `patterns` is the listing. Demographic-only patterns that are not listed
/// are kept in `antecedent_only` so that the union stays prefix-closed.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequentPatternSet {
    symbols: Arc<SymbolTable>,
    db_size: u64,
    min_sup: u64,
    patterns: Vec<SupportedPattern>,
    antecedent_only: Vec<SupportedPattern>,
}

impl FrequentPatternSet {
    /// Sorts `all` and splits off unlisted demographic-only patterns.
    pub fn new(
        symbols: Arc<SymbolTable>,
        db_size: u64,
        min_sup: u64,
        all: Vec<SupportedPattern>,
        emit_demographic_only_patterns: bool,
    ) -> Self {
        let (mut patterns, mut antecedent_only): (Vec<_>, Vec<_>) =
            all.into_iter().partition(|sp| {
                emit_demographic_only_patterns
                    || !sp.pattern.items().all(|i| symbols.is_demographic(i))
            });
        patterns.sort_by(|a, b| a.pattern.canonical_cmp(&b.pattern));
        antecedent_only.sort_by(|a, b| a.pattern.canonical_cmp(&b.pattern));
        FrequentPatternSet {
            symbols,
            db_size,
            min_sup,
            patterns,
            antecedent_only,
        }
    }

    /// Reassembles a set whose parts are already split.
    pub fn from_parts(
        symbols: Arc<SymbolTable>,
        db_size: u64,
        min_sup: u64,
        mut patterns: Vec<SupportedPattern>,
        mut antecedent_only: Vec<SupportedPattern>,
    ) -> Self {
        patterns.sort_by(|a, b| a.pattern.canonical_cmp(&b.pattern));
        antecedent_only.sort_by(|a, b| a.pattern.canonical_cmp(&b.pattern));
        FrequentPatternSet {
            symbols,
            db_size,
            min_sup,
            patterns,
            antecedent_only,
        }
    }

    pub fn symbols(&self) -> &Arc<SymbolTable> {
        &self.symbols
    }

    pub fn db_size(&self) -> u64 {
        self.db_size
    }

    pub fn min_sup(&self) -> u64 {
        self.min_sup
    }

    pub fn patterns(&self) -> &[SupportedPattern] {
        &self.patterns
    }

    pub fn antecedent_only(&self) -> &[SupportedPattern] {
        &self.antecedent_only
    }

    /// Listed and antecedent-only patterns together.
    pub fn all(&self) -> impl Iterator<Item = &SupportedPattern> {
        self.patterns.iter().chain(self.antecedent_only.iter())
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn support_index(&self) -> HashMap<&Pattern, u64> {
        self.all().map(|sp| (&sp.pattern, sp.support)).collect()
    }

    /// Pattern/support pairs of the union, in canonical order. Independent of
    /// symbol tables, which makes it the comparison key between miners.
    pub fn sorted_supports(&self) -> Vec<(Pattern, u64)> {
        let mut v: Vec<(Pattern, u64)> = self
            .all()
            .map(|sp| (sp.pattern.clone(), sp.support))
            .collect();
        v.sort_by(|a, b| a.0.canonical_cmp(&b.0));
        v
    }
}

struct Atom {
    item: ItemId,
    idlist: IdList,
}

struct Search<'a> {
    atoms: &'a [Atom],
    min_sup: usize,
    max_len: usize,
    max_elems: usize,
    db_size: u64,
}

impl Search<'_> {
    /// Visits `pattern` (already known frequent) and its subtree.
    ///
    /// `s_cands` and `i_cands` index into `atoms`; `i_cands` only holds items
    /// larger than the last item of the last element.
    fn expand(
        &self,
        pattern: Pattern,
        idlist: &IdList,
        s_cands: &[usize],
        i_cands: &[usize],
        out: &mut Vec<SupportedPattern>,
    ) {
        let card = pattern.cardinality();
        let elems = pattern.len();
        out.push(SupportedPattern::new(
            pattern.clone(),
            idlist.distinct_sids() as u64,
            self.db_size,
        ));
        if card >= self.max_len {
            return;
        }

        let i_ok: Vec<(usize, IdList)> = i_cands
            .iter()
            .filter_map(|&a| {
                let joined = temporal_join_i(idlist, &self.atoms[a].idlist);
                (joined.distinct_sids() >= self.min_sup).then_some((a, joined))
            })
            .collect();
        let s_ok: Vec<(usize, IdList)> = if elems < self.max_elems {
            s_cands
                .iter()
                .filter_map(|&a| {
                    let joined = temporal_join_s(idlist, &self.atoms[a].idlist);
                    (joined.distinct_sids() >= self.min_sup).then_some((a, joined))
                })
                .collect()
        } else {
            Vec::new()
        };
        let s_items: Vec<usize> = s_ok.iter().map(|(a, _)| *a).collect();
        let i_items: Vec<usize> = i_ok.iter().map(|(a, _)| *a).collect();

        for (k, (a, joined)) in i_ok.iter().enumerate() {
            let child = pattern.i_extend(self.atoms[*a].item);
            self.expand(child, joined, &s_items, &i_items[k + 1..], out);
        }
        for (k, (a, joined)) in s_ok.iter().enumerate() {
            let child = pattern.s_extend(self.atoms[*a].item);
            self.expand(child, joined, &s_items, &s_items[k + 1..], out);
        }
    }
}

/// Mines every pattern within the caps whose support reaches `min_sup`.
pub fn mine(db: &SequenceDatabase, config: &MinerConfig) -> Result<FrequentPatternSet, MineError> {
    config.validate()?;
    if db.is_empty() {
        return Err(MineError::EmptyDatabase);
    }
    let db_size = db.len() as u64;
    let min_sup = config.min_sup.resolve(db_size);
    let symbols = Arc::new(db.symbols().clone());

    let atoms: Vec<Atom> = verticalize(db)
        .into_iter()
        .filter(|(_, l)| l.distinct_sids() as u64 >= min_sup)
        .map(|(item, idlist)| Atom { item, idlist })
        .collect();
    let search = Search {
        atoms: &atoms,
        min_sup: min_sup as usize,
        max_len: config.max_pattern_length,
        max_elems: config.max_elements,
        db_size,
    };
    let all_atoms: Vec<usize> = (0..atoms.len()).collect();

    let run = || -> Vec<SupportedPattern> {
        let classes: Vec<Vec<SupportedPattern>> = (0..atoms.len())
            .into_par_iter()
            .map(|a| {
                let mut out = Vec::new();
                let root = Pattern::new(vec![crate::model::EventSet::single(atoms[a].item)]);
                search.expand(
                    root,
                    &atoms[a].idlist,
                    &all_atoms,
                    &all_atoms[a + 1..],
                    &mut out,
                );
                out
            })
            .collect();
        classes.into_iter().flatten().collect()
    };

    let all = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| MineError::ThreadPool(e.to_string()))?
            .install(run),
        None => run(),
    };

    Ok(FrequentPatternSet::new(
        symbols,
        db_size,
        min_sup,
        all,
        config.emit_demographic_only_patterns,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EventSet, Sequence};

    fn example_db() -> SequenceDatabase {
        let mut symbols = SymbolTable::new();
        let a = symbols.intern("A").unwrap();
        let b = symbols.intern("B").unwrap();
        let c = symbols.intern("C").unwrap();
        let seqs = vec![
            Sequence::from_baskets(0, vec![EventSet::single(a), EventSet::single(b)]),
            Sequence::from_baskets(1, vec![EventSet::single(a), EventSet::single(b)]),
            Sequence::from_baskets(2, vec![EventSet::single(a), EventSet::single(c)]),
        ];
        SequenceDatabase::new(symbols, seqs).unwrap()
    }

    fn cfg(min_sup: u64, max_len: usize) -> MinerConfig {
        MinerConfig {
            min_sup: MinSupport::Absolute(min_sup),
            max_pattern_length: max_len,
            max_elements: max_len,
            emit_demographic_only_patterns: true,
            threads: Some(1),
        }
    }

    #[test]
    fn min_support_parsing() {
        assert_eq!(MinSupport::parse("2").unwrap(), MinSupport::Absolute(2));
        assert_eq!(MinSupport::parse("0.5").unwrap(), MinSupport::Relative(0.5));
        assert_eq!(MinSupport::parse("1.0").unwrap(), MinSupport::Relative(1.0));
        for bad in ["1.5", "0", "0.0", "-1", "abc", "", "-0.2"] {
            assert!(MinSupport::parse(bad).is_err(), "{bad}");
        }
        assert_eq!(MinSupport::Relative(0.5).resolve(3), 2);
        assert_eq!(MinSupport::Relative(0.001).resolve(10), 1);
        assert_eq!(MinSupport::Relative(0.01).resolve(100_000), 1000);
    }

    #[test]
    fn mines_the_small_example() {
        let db = example_db();
        let set = mine(&db, &cfg(2, 3)).unwrap();
        let got: Vec<(String, u64)> = set
            .patterns()
            .iter()
            .map(|sp| (sp.pattern.display(db.symbols()).to_string(), sp.support))
            .collect();
        assert_eq!(
            got,
            vec![
                ("(A)".to_string(), 3),
                ("(B)".to_string(), 2),
                ("(A) -> (B)".to_string(), 2)
            ]
        );
        assert!((set.patterns()[2].relative_support - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn threshold_above_db_size_is_empty() {
        let set = mine(&example_db(), &cfg(4, 3)).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn rejects_empty_db_and_bad_caps() {
        let empty = SequenceDatabase::new(SymbolTable::new(), vec![]).unwrap();
        assert_eq!(mine(&empty, &cfg(1, 3)), Err(MineError::EmptyDatabase));
        let mut c = cfg(1, 3);
        c.max_elements = 0;
        assert!(mine(&example_db(), &c).is_err());
    }

    #[test]
    fn element_cap_limits_sequence_length() {
        let mut c = cfg(1, 4);
        c.max_elements = 1;
        let set = mine(&example_db(), &c).unwrap();
        assert!(set.patterns().iter().all(|sp| sp.pattern.len() == 1));
    }

    #[test]
    fn demographic_only_patterns_are_split_off() {
        let mut symbols = SymbolTable::new();
        let y = symbols.intern("yob:1943").unwrap();
        let h = symbols.intern("HTN").unwrap();
        let seqs = (0..3)
            .map(|sid| Sequence::from_baskets(sid, vec![EventSet::single(y), EventSet::single(h)]))
            .collect();
        let db = SequenceDatabase::new(symbols, seqs).unwrap();
        let mut c = cfg(1, 2);
        c.emit_demographic_only_patterns = false;
        let set = mine(&db, &c).unwrap();
        assert_eq!(set.antecedent_only().len(), 1);
        assert_eq!(set.len(), 2);
        c.emit_demographic_only_patterns = true;
        assert_eq!(mine(&db, &c).unwrap().len(), 3);
    }
}
