//! Sequential rules `X -> Y` built from a prefix-closed pattern set, and the
//! rule-shape analyses run on top of them: repeat chains, gender deltas and
//! year-of-birth profiles.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::RuleError;
use crate::miner::FrequentPatternSet;
use crate::model::{EventSet, ItemId, Pattern, SymbolTable};

pub const DEFAULT_MIN_CONF: f64 = 0.1;

/// Antecedent pattern followed by a single consequent element.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub antecedent: Pattern,
    pub consequent: EventSet,
    /// Support of the whole pattern `X -> Y`.
    pub support: u64,
    /// Support of `X`.
    pub antecedent_support: u64,
    /// `support / antecedent_support`, divided once from the integers.
    pub confidence: f64,
}

impl Rule {
    pub fn new(
        antecedent: Pattern,
        consequent: EventSet,
        support: u64,
        antecedent_support: u64,
    ) -> Self {
        let confidence = support as f64 / antecedent_support as f64;
        Rule {
            antecedent,
            consequent,
            support,
            antecedent_support,
            confidence,
        }
    }

    /// The full pattern `X -> Y`.
    pub fn pattern(&self) -> Pattern {
        let mut elements = self.antecedent.elements().to_vec();
        elements.push(self.consequent.clone());
        Pattern::new(elements)
    }

    /// Exact comparison of confidences as rationals.
    pub fn cmp_confidence(&self, other: &Rule) -> Ordering {
        let lhs = self.support as u128 * other.antecedent_support as u128;
        let rhs = other.support as u128 * self.antecedent_support as u128;
        lhs.cmp(&rhs)
    }
}

/// Rules sorted by confidence (descending), then canonical pattern order.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleSet {
    symbols: Arc<SymbolTable>,
    db_size: u64,
    min_conf: f64,
    rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(
        symbols: Arc<SymbolTable>,
        db_size: u64,
        min_conf: f64,
        mut rules: Vec<Rule>,
    ) -> Self {
        rules.sort_by(|a, b| {
            b.cmp_confidence(a)
                .then_with(|| a.pattern().canonical_cmp(&b.pattern()))
        });
        RuleSet {
            symbols,
            db_size,
            min_conf,
            rules,
        }
    }

    pub fn symbols(&self) -> &Arc<SymbolTable> {
        &self.symbols
    }

    pub fn db_size(&self) -> u64 {
        self.db_size
    }

    pub fn min_conf(&self) -> f64 {
        self.min_conf
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Looks a rule up by antecedent and consequent.
    pub fn find(&self, antecedent: &Pattern, consequent: &EventSet) -> Option<&Rule> {
        self.rules
            .iter()
            .find(|r| &r.antecedent == antecedent && &r.consequent == consequent)
    }
}

/// Splits every frequent pattern with two or more elements into
/// `all-but-last -> last` and keeps rules whose confidence reaches `min_conf`.
pub fn induce_rules(patterns: &FrequentPatternSet, min_conf: f64) -> Result<RuleSet, RuleError> {
    if !(min_conf > 0.0 && min_conf <= 1.0) {
        return Err(RuleError::InvalidMinConf(min_conf));
    }
    let index = patterns.support_index();
    let mut rules = Vec::new();
    for sp in patterns.all() {
        let Some((antecedent, consequent)) = sp.pattern.split_last() else {
            continue;
        };
        if antecedent.is_empty() {
            continue;
        }
        let Some(&antecedent_support) = index.get(&antecedent) else {
            return Err(RuleError::MissingPrefix {
                prefix: antecedent.display(patterns.symbols()).to_string(),
            });
        };
        let rule = Rule::new(
            antecedent,
            consequent.clone(),
            sp.support,
            antecedent_support,
        );
        if rule.confidence >= min_conf {
            rules.push(rule);
        }
    }
    Ok(RuleSet::new(
        patterns.symbols().clone(),
        patterns.db_size(),
        min_conf,
        rules,
    ))
}

/// One step of a repeat chain: `n x (A) -> (A)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainLink {
    pub repetitions: usize,
    pub confidence: f64,
    pub support: u64,
    pub antecedent_support: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepeatChain {
    pub item: ItemId,
    /// Ascending in `repetitions`; only steps that survived mining appear.
    pub chain: Vec<ChainLink>,
}

/// Collects rules of the form `(A) -> ... -> (A)` (n copies) `-> (A)`.
pub fn repeat_chains(rules: &RuleSet) -> Vec<RepeatChain> {
    let mut chains: BTreeMap<ItemId, Vec<ChainLink>> = BTreeMap::new();
    for rule in rules.rules() {
        if rule.consequent.len() != 1 {
            continue;
        }
        let item = rule.consequent.items()[0];
        if rule
            .antecedent
            .elements()
            .iter()
            .all(|e| e == &rule.consequent)
        {
            chains.entry(item).or_default().push(ChainLink {
                repetitions: rule.antecedent.len(),
                confidence: rule.confidence,
                support: rule.support,
                antecedent_support: rule.antecedent_support,
            });
        }
    }
    chains
        .into_iter()
        .map(|(item, mut chain)| {
            chain.sort_by_key(|l| l.repetitions);
            RepeatChain { item, chain }
        })
        .collect()
}

/// A rule with a gender item in its antecedent next to the same rule without it.
#[derive(Clone, Debug, PartialEq)]
pub struct GenderDelta {
    pub gender_item: ItemId,
    pub base_rule: Rule,
    pub gendered_rule: Rule,
    /// Gendered confidence minus base confidence.
    pub delta: f64,
    /// `delta / base confidence`.
    pub relative_delta: f64,
}

/// Pairs each gendered rule with its gender-free counterpart when both exist.
/// Sorted by |delta| descending.
pub fn gender_deltas(rules: &RuleSet) -> Vec<GenderDelta> {
    let symbols = rules.symbols();
    let mut out = Vec::new();
    for rule in rules.rules() {
        for (pos, element) in rule.antecedent.elements().iter().enumerate() {
            for &item in element.items() {
                if !symbols.is_gender(item) {
                    continue;
                }
                let mut stripped: Vec<EventSet> = Vec::with_capacity(rule.antecedent.len());
                for (k, e) in rule.antecedent.elements().iter().enumerate() {
                    if k == pos {
                        stripped.extend(e.without_item(item));
                    } else {
                        stripped.push(e.clone());
                    }
                }
                if stripped.is_empty() {
                    continue;
                }
                let stripped = Pattern::new(stripped);
                if let Some(base) = rules.find(&stripped, &rule.consequent) {
                    let delta = rule.confidence - base.confidence;
                    out.push(GenderDelta {
                        gender_item: item,
                        base_rule: base.clone(),
                        gendered_rule: rule.clone(),
                        delta,
                        relative_delta: delta / base.confidence,
                    });
                }
            }
        }
    }
    out.sort_by(|a, b| {
        b.delta.abs().total_cmp(&a.delta.abs()).then_with(|| {
            a.gendered_rule
                .pattern()
                .canonical_cmp(&b.gendered_rule.pattern())
        })
    });
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct YobPoint {
    pub year: i32,
    pub consequent: EventSet,
    pub confidence: f64,
    pub support: u64,
    pub antecedent_support: u64,
}

/// Rules `(yob:<year>) -> Y` with `consequent_item` in `Y`, sorted by year.
/// Antecedents that also carry a gender item are left out.
pub fn yob_profile(rules: &RuleSet, consequent_item: ItemId) -> Vec<YobPoint> {
    let symbols = rules.symbols();
    let mut out: Vec<YobPoint> = rules
        .rules()
        .iter()
        .filter(|r| r.consequent.contains(consequent_item))
        .filter_map(|r| {
            let [element] = r.antecedent.elements() else {
                return None;
            };
            let [item] = element.items() else {
                return None;
            };
            Some(YobPoint {
                year: symbols.yob_year(*item)?,
                consequent: r.consequent.clone(),
                confidence: r.confidence,
                support: r.support,
                antecedent_support: r.antecedent_support,
            })
        })
        .collect();
    out.sort_by(|a, b| {
        a.year
            .cmp(&b.year)
            .then_with(|| a.consequent.cmp(&b.consequent))
    });
    out
}

/// Year profiles for every single-item consequent that has one.
pub fn yob_profiles(rules: &RuleSet) -> Vec<(ItemId, Vec<YobPoint>)> {
    let mut items: Vec<ItemId> = rules
        .rules()
        .iter()
        .filter(|r| r.consequent.len() == 1)
        .map(|r| r.consequent.items()[0])
        .collect();
    items.sort_unstable();
    items.dedup();
    items
        .into_iter()
        .filter_map(|item| {
            let points: Vec<YobPoint> = yob_profile(rules, item)
                .into_iter()
                .filter(|p| p.consequent.len() == 1)
                .collect();
            (!points.is_empty()).then_some((item, points))
        })
        .collect()
}
