//! Python bindings: load or ingest a sequence database, mine it, induce rules
//! and run the repeat-chain, gender and year-of-birth analyses.

use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use seqmine_core::formats;
use seqmine_core::ingest::{parse_medical_table, parse_patient_table};
use seqmine_core::testkit::{self, GenConfig};
use seqmine_core::{
    EventSet, FrequentPatternSet as CoreFreq, MinSupport, MinerConfig, Pattern, Rule as CoreRule,
    RuleSet as CoreRules, SequenceDatabase as CoreDb, SymbolTable,
};

/// `(repetitions, confidence, support, antecedent_support)`.
type ChainStep = (usize, f64, u64, u64);
/// `(year, consequent, confidence, support, antecedent_support)`.
type YobRow = (i32, Vec<String>, f64, u64, u64);

fn err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn names(element: &EventSet, symbols: &SymbolTable) -> Vec<String> {
    element
        .items()
        .iter()
        .map(|&i| symbols.name(i).unwrap_or("?").to_string())
        .collect()
}

fn elements(pattern: &Pattern, symbols: &SymbolTable) -> Vec<Vec<String>> {
    pattern
        .elements()
        .iter()
        .map(|e| names(e, symbols))
        .collect()
}

/// Patient histories as an ordered list of baskets per patient.
#[pyclass(module = "seqmine", frozen)]
struct SequenceDatabase {
    inner: CoreDb,
}

#[pymethods]
impl SequenceDatabase {
    /// Builds a database from patient and medical tables held in strings.
    /// Returns the database and the ingest counts.
    #[staticmethod]
    #[pyo3(signature = (patients, medical, delimiter = ","))]
    fn from_tables(
        patients: &str,
        medical: &str,
        delimiter: &str,
    ) -> PyResult<(SequenceDatabase, Vec<(String, u64)>)> {
        let &[delim] = delimiter.as_bytes() else {
            return Err(err("delimiter must be a single byte"));
        };
        let p = parse_patient_table(patients.as_bytes(), delim).map_err(err)?;
        let m = parse_medical_table(medical.as_bytes(), delim).map_err(err)?;
        let (db, r) = seqmine_core::ingest::ingest(&p, &m);
        let report = vec![
            ("patients_in".to_string(), r.patients_in),
            ("patients_out".to_string(), r.patients_out),
            ("events_in".to_string(), r.events_in),
            ("events_kept".to_string(), r.events_kept),
            (
                "events_dropped_bad_date".to_string(),
                r.events_dropped_bad_date,
            ),
            (
                "events_merged_duplicate".to_string(),
                r.events_merged_duplicate,
            ),
            ("events_dropped_orphan".to_string(), r.events_dropped_orphan),
        ];
        Ok((SequenceDatabase { inner: db }, report))
    }

    /// Parses `#seqdb v1` text.
    #[staticmethod]
    fn from_seqdb(text: &str) -> PyResult<SequenceDatabase> {
        Ok(SequenceDatabase {
            inner: formats::read_seqdb(text).map_err(err)?,
        })
    }

    /// Builds a database from `[[basket, basket, ...], ...]`, one list per sequence.
    #[staticmethod]
    fn from_baskets(sequences: Vec<Vec<Vec<String>>>) -> PyResult<SequenceDatabase> {
        let mut text = String::from(formats::SEQDB_MAGIC);
        text.push('\n');
        for (sid, baskets) in sequences.iter().enumerate() {
            for (eid, basket) in baskets.iter().enumerate() {
                let items: Vec<String> = basket.iter().map(|s| formats::escape_symbol(s)).collect();
                text.push_str(&format!("{sid}\t{eid}\t{}\n", items.join(",")));
            }
        }
        Self::from_seqdb(&text)
    }

    fn to_seqdb(&self) -> String {
        formats::write_seqdb(&self.inner, None)
    }

    /// Number of sequences containing the pattern, given as a list of baskets.
    fn support(&self, pattern: Vec<Vec<String>>) -> PyResult<u64> {
        let refs: Vec<Vec<&str>> = pattern
            .iter()
            .map(|e| e.iter().map(String::as_str).collect())
            .collect();
        match self.inner.pattern(&refs) {
            Ok(p) => Ok(self.inner.support(&p)),
            // an unknown symbol occurs in no sequence
            Err(seqmine_core::ModelError::UnknownSymbol(_)) => Ok(0),
            Err(e) => Err(err(e)),
        }
    }

    fn sequences(&self) -> Vec<Vec<Vec<String>>> {
        let symbols = self.inner.symbols();
        self.inner
            .sequences()
            .iter()
            .map(|s| {
                s.events()
                    .iter()
                    .map(|e| names(&e.basket, symbols))
                    .collect()
            })
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("SequenceDatabase(sequences={})", self.inner.len())
    }
}

/// Frequent patterns with their supports.
#[pyclass(module = "seqmine", frozen)]
struct FrequentPatterns {
    inner: CoreFreq,
}

#[pymethods]
impl FrequentPatterns {
    /// Parses `#freq v1` text.
    #[staticmethod]
    fn from_freq(text: &str) -> PyResult<FrequentPatterns> {
        Ok(FrequentPatterns {
            inner: formats::read_freq(text).map_err(err)?,
        })
    }

    fn to_freq(&self) -> String {
        formats::write_freq(&self.inner, None)
    }

    /// Listed patterns as `(elements, support)` in canonical order.
    fn patterns(&self) -> Vec<(Vec<Vec<String>>, u64)> {
        let symbols = self.inner.symbols();
        self.inner
            .patterns()
            .iter()
            .map(|sp| (elements(&sp.pattern, symbols), sp.support))
            .collect()
    }

    #[getter]
    fn db_size(&self) -> u64 {
        self.inner.db_size()
    }

    /// Resolved absolute threshold.
    #[getter]
    fn min_sup(&self) -> u64 {
        self.inner.min_sup()
    }

    fn __len__(&self) -> usize {
        self.inner.patterns().len()
    }

    fn __repr__(&self) -> String {
        format!(
            "FrequentPatterns(patterns={}, min_sup={}, db_size={})",
            self.inner.patterns().len(),
            self.inner.min_sup(),
            self.inner.db_size()
        )
    }
}

/// One sequential rule `antecedent -> consequent`.
#[pyclass(module = "seqmine", frozen, get_all)]
struct Rule {
    antecedent: Vec<Vec<String>>,
    consequent: Vec<String>,
    support: u64,
    antecedent_support: u64,
    confidence: f64,
}

impl Rule {
    fn from_core(r: &CoreRule, symbols: &SymbolTable) -> Rule {
        Rule {
            antecedent: elements(&r.antecedent, symbols),
            consequent: names(&r.consequent, symbols),
            support: r.support,
            antecedent_support: r.antecedent_support,
            confidence: r.confidence,
        }
    }
}

#[pymethods]
impl Rule {
    fn __repr__(&self) -> String {
        let ante: Vec<String> = self
            .antecedent
            .iter()
            .map(|e| format!("({})", e.join(",")))
            .collect();
        format!(
            "Rule({} -> ({}), confidence={}, support={}/{})",
            ante.join(" -> "),
            self.consequent.join(","),
            self.confidence,
            self.support,
            self.antecedent_support
        )
    }
}

/// Rules sorted by descending confidence, plus the analyses built on them.
#[pyclass(module = "seqmine", frozen)]
struct RuleSet {
    inner: CoreRules,
}

#[pymethods]
impl RuleSet {
    fn rules(&self) -> Vec<Rule> {
        let symbols = self.inner.symbols();
        self.inner
            .rules()
            .iter()
            .map(|r| Rule::from_core(r, symbols))
            .collect()
    }

    fn to_rules(&self) -> String {
        formats::write_rules(&self.inner, None)
    }

    /// The `#report v1` text: repeat chains, gender deltas, yob profiles.
    fn report(&self) -> String {
        formats::write_report(&self.inner)
    }

    /// `{item: [(repetitions, confidence, support, antecedent_support), ...]}`.
    fn repeat_chains(&self) -> Vec<(String, Vec<ChainStep>)> {
        let symbols = self.inner.symbols();
        seqmine_core::repeat_chains(&self.inner)
            .into_iter()
            .map(|c| {
                (
                    symbols.name(c.item).unwrap_or("?").to_string(),
                    c.chain
                        .iter()
                        .map(|l| (l.repetitions, l.confidence, l.support, l.antecedent_support))
                        .collect(),
                )
            })
            .collect()
    }

    /// `(gender item, gendered rule, base rule, delta, relative delta)`, largest |delta| first.
    fn gender_deltas(&self) -> Vec<(String, Rule, Rule, f64, f64)> {
        let symbols = self.inner.symbols();
        seqmine_core::gender_deltas(&self.inner)
            .iter()
            .map(|d| {
                (
                    symbols.name(d.gender_item).unwrap_or("?").to_string(),
                    Rule::from_core(&d.gendered_rule, symbols),
                    Rule::from_core(&d.base_rule, symbols),
                    d.delta,
                    d.relative_delta,
                )
            })
            .collect()
    }

    /// `(year, consequent, confidence, support, antecedent_support)` for rules
    /// `(yob:<year>) -> Y` with `item` in `Y`.
    fn yob_profile(&self, item: &str) -> PyResult<Vec<YobRow>> {
        let symbols = self.inner.symbols();
        let id = symbols
            .get(item)
            .ok_or_else(|| PyKeyError::new_err(item.to_string()))?;
        Ok(seqmine_core::yob_profile(&self.inner, id)
            .iter()
            .map(|p| {
                (
                    p.year,
                    names(&p.consequent, symbols),
                    p.confidence,
                    p.support,
                    p.antecedent_support,
                )
            })
            .collect())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "RuleSet(rules={}, min_conf={})",
            self.inner.len(),
            self.inner.min_conf()
        )
    }
}

#[derive(FromPyObject)]
enum MinSupArg {
    Count(u64),
    Fraction(f64),
    Text(String),
}

impl MinSupArg {
    fn resolve(self) -> PyResult<MinSupport> {
        match self {
            MinSupArg::Count(n) => MinSupport::Absolute(n).validate(),
            MinSupArg::Fraction(f) => MinSupport::Relative(f).validate(),
            MinSupArg::Text(s) => MinSupport::parse(&s),
        }
        .map_err(err)
    }
}

/// Mines frequent patterns. `min_sup` is an int count, a float fraction of
/// the database, or a string using the same rule as the command line.
#[pyfunction]
#[pyo3(signature = (db, min_sup, max_len = 5, max_elems = 5, emit_demographic = false, threads = None))]
fn mine(
    py: Python<'_>,
    db: &SequenceDatabase,
    min_sup: MinSupArg,
    max_len: usize,
    max_elems: usize,
    emit_demographic: bool,
    threads: Option<usize>,
) -> PyResult<FrequentPatterns> {
    let config = MinerConfig {
        min_sup: min_sup.resolve()?,
        max_pattern_length: max_len,
        max_elements: max_elems,
        emit_demographic_only_patterns: emit_demographic,
        threads,
    };
    let inner = py
        .detach(|| seqmine_core::mine(&db.inner, &config))
        .map_err(err)?;
    Ok(FrequentPatterns { inner })
}

/// Brute-force miner for small databases; same output shape as `mine`.
#[pyfunction]
#[pyo3(signature = (db, min_sup, max_len = 4, max_elems = 4))]
fn oracle_mine(
    db: &SequenceDatabase,
    min_sup: u64,
    max_len: usize,
    max_elems: usize,
) -> PyResult<FrequentPatterns> {
    let inner = testkit::oracle_mine(&db.inner, min_sup, max_len, max_elems).map_err(err)?;
    Ok(FrequentPatterns { inner })
}

#[pyfunction]
#[pyo3(signature = (patterns, min_conf = 0.1))]
fn induce_rules(patterns: &FrequentPatterns, min_conf: f64) -> PyResult<RuleSet> {
    let inner = seqmine_core::induce_rules(&patterns.inner, min_conf).map_err(err)?;
    Ok(RuleSet { inner })
}

/// Runs the synthetic generator on a key-value config. Returns
/// `(patients_csv, medical_csv, manifest_text)`.
#[pyfunction]
#[pyo3(signature = (config, seed = None))]
fn generate(config: &str, seed: Option<u64>) -> PyResult<(String, String, String)> {
    let join = |errs: Vec<seqmine_core::ConfigError>| {
        err(errs
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; "))
    };
    let mut cfg = GenConfig::parse(config).map_err(join)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let g = testkit::generate(&cfg).map_err(join)?;
    Ok((g.patients_csv, g.medical_csv, g.manifest.render(None)))
}

#[pymodule]
fn seqmine(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<SequenceDatabase>()?;
    m.add_class::<FrequentPatterns>()?;
    m.add_class::<Rule>()?;
    m.add_class::<RuleSet>()?;
    m.add_function(wrap_pyfunction!(mine, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_mine, m)?)?;
    m.add_function(wrap_pyfunction!(induce_rules, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
