//! Text interchange formats: `#seqdb v1`, `#freq v1`, `#rules v1` and the
//! analysis report.
//!
//! Item symbols are written with backslash escapes for `\`, `,`, `|`, tab and
//! newlines, so any symbol survives a round trip. Lines starting with `## `
//! carry `key=value` run metadata and are ignored by readers unless noted.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::FormatError;
use crate::miner::FrequentPatternSet;
use crate::model::{
    Event, EventSet, Pattern, Sequence, SequenceDatabase, SupportedPattern, SymbolTable,
};
use crate::rules::{gender_deltas, repeat_chains, yob_profiles, RuleSet};

pub const SEQDB_MAGIC: &str = "#seqdb v1";
pub const FREQ_MAGIC: &str = "#freq v1";
pub const RULES_MAGIC: &str = "#rules v1";
pub const REPORT_MAGIC: &str = "#report v1";
const AUX_TAG: &str = "#aux";

/// Provenance written into every output file as `## key=value` lines.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunManifest {
    pub command: String,
    pub config: Vec<(String, String)>,
    pub input_digests: Vec<String>,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            ..Default::default()
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.config.push((key.to_string(), value.to_string()));
        self
    }

    pub fn with_input(mut self, digest: impl ToString) -> Self {
        self.input_digests.push(digest.to_string());
        self
    }

    pub fn render(&self, out: &mut String) {
        let _ = writeln!(out, "## command={}", self.command);
        let _ = writeln!(out, "## version={}", self.tool_version);
        for digest in &self.input_digests {
            let _ = writeln!(out, "## input_sha256={digest}");
        }
        for (k, v) in &self.config {
            let _ = writeln!(out, "## {k}={v}");
        }
    }

    /// Recovers a manifest from the `## ` lines of a file.
    pub fn parse(text: &str) -> RunManifest {
        let mut m = RunManifest::default();
        for (key, value) in meta_lines(text) {
            match key {
                "command" => m.command = value.to_string(),
                "version" => m.tool_version = value.to_string(),
                "input_sha256" => m.input_digests.push(value.to_string()),
                _ => m.config.push((key.to_string(), value.to_string())),
            }
        }
        m
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.config
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

fn meta_lines(text: &str) -> impl Iterator<Item = (&str, &str)> {
    text.lines()
        .filter_map(|l| l.strip_prefix("## "))
        .filter_map(|l| l.split_once('='))
}

pub fn escape_symbol(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            ',' => out.push_str("\\,"),
            '|' => out.push_str("\\|"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape_symbol(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(e @ ('\\' | ',' | '|')) => out.push(e),
            Some(other) => return Err(format!("unknown escape \\{other}")),
            None => return Err("dangling escape".into()),
        }
    }
    Ok(out)
}

/// Splits `field` on an unescaped `sep` and unescapes each piece.
fn split_escaped(field: &str, sep: char) -> Result<Vec<String>, String> {
    split_raw(field, sep)
        .into_iter()
        .map(unescape_symbol)
        .collect()
}

/// Splits on unescaped separators but keeps escapes in place.
pub(crate) fn split_raw(field: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut start = 0;
    let mut escaped = false;
    for (i, c) in field.char_indices() {
        if escaped {
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c == sep {
            parts.push(&field[start..i]);
            start = i + c.len_utf8();
        }
    }
    parts.push(&field[start..]);
    parts
}

pub fn render_element(element: &EventSet, symbols: &SymbolTable) -> String {
    element
        .items()
        .iter()
        .map(|&i| escape_symbol(symbols.name(i).unwrap_or("?")))
        .collect::<Vec<_>>()
        .join(",")
}

/// `a,b|c`: comma inside an element, pipe between elements.
pub fn render_pattern(pattern: &Pattern, symbols: &SymbolTable) -> String {
    pattern
        .elements()
        .iter()
        .map(|e| render_element(e, symbols))
        .collect::<Vec<_>>()
        .join("|")
}

fn parse_pattern_names(field: &str) -> Result<Vec<Vec<String>>, String> {
    split_raw(field, '|')
        .into_iter()
        .map(|element| {
            let items = split_escaped(element, ',')?;
            if items.iter().any(|i| i.trim().is_empty()) {
                return Err(format!("empty item in {element:?}"));
            }
            Ok(items)
        })
        .collect()
}

fn check_magic(text: &str, magic: &'static str) -> Result<(), FormatError> {
    let first = text.lines().next().unwrap_or("");
    if first.trim_end() != magic {
        return Err(FormatError::BadMagic {
            expected: magic,
            found: first.to_string(),
        });
    }
    Ok(())
}

fn line_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Line {
        line: line as u64,
        message: message.into(),
    }
}

pub fn write_seqdb(db: &SequenceDatabase, manifest: Option<&RunManifest>) -> String {
    let mut out = String::new();
    out.push_str(SEQDB_MAGIC);
    out.push('\n');
    if let Some(m) = manifest {
        m.render(&mut out);
    }
    for seq in db.sequences() {
        for event in seq.events() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}",
                seq.sid(),
                event.eid,
                render_element(&event.basket, db.symbols())
            );
        }
    }
    out
}

/// Parses a `#seqdb v1` file. Item ids follow sorted symbol order.
pub fn read_seqdb(text: &str) -> Result<SequenceDatabase, FormatError> {
    check_magic(text, SEQDB_MAGIC)?;
    let mut rows: Vec<(u32, u32, Vec<String>)> = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        let lineno = idx + 1;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [sid, eid, items] = fields[..] else {
            return Err(line_err(lineno, "expected sid<TAB>eid<TAB>items"));
        };
        let sid: u32 = sid.parse().map_err(|_| line_err(lineno, "bad sid"))?;
        let eid: u32 = eid.parse().map_err(|_| line_err(lineno, "bad eid"))?;
        let items = split_escaped(items, ',').map_err(|m| line_err(lineno, m))?;
        if items.iter().any(|i| i.trim().is_empty()) {
            return Err(line_err(lineno, "empty item"));
        }
        if rows
            .last()
            .is_some_and(|last| (sid, eid) <= (last.0, last.1))
        {
            return Err(line_err(lineno, "lines must be sorted by (sid, eid)"));
        }
        rows.push((sid, eid, items));
    }

    let names: BTreeSet<&str> = rows
        .iter()
        .flat_map(|r| r.2.iter().map(String::as_str))
        .collect();
    let symbols = SymbolTable::from_sorted_names(names)?;
    let mut sequences: Vec<Sequence> = Vec::new();
    let mut current: Option<(u32, Vec<Event>)> = None;
    for (sid, eid, items) in rows {
        let ids = items
            .iter()
            .map(|n| symbols.get(n).expect("interned above"))
            .collect();
        let event = Event {
            eid,
            basket: EventSet::new(ids)?,
        };
        match current.as_mut() {
            Some((cur, events)) if *cur == sid => events.push(event),
            _ => {
                if let Some((s, events)) = current.take() {
                    sequences.push(Sequence::new(s, events)?);
                }
                current = Some((sid, vec![event]));
            }
        }
    }
    if let Some((s, events)) = current {
        sequences.push(Sequence::new(s, events)?);
    }
    Ok(SequenceDatabase::new(symbols, sequences)?)
}

fn write_pattern_line(
    out: &mut String,
    prefix: &str,
    sp: &SupportedPattern,
    symbols: &SymbolTable,
) {
    let _ = writeln!(
        out,
        "{prefix}{}\t{}\t{}",
        sp.support,
        sp.relative_support,
        render_pattern(&sp.pattern, symbols)
    );
}

/// Writes a `#freq v1` file. Demographic-only patterns kept only for rule
/// antecedents go on `#aux` lines, which plain listings skip as comments.
pub fn write_freq(set: &FrequentPatternSet, manifest: Option<&RunManifest>) -> String {
    let mut out = String::new();
    out.push_str(FREQ_MAGIC);
    out.push('\n');
    let _ = writeln!(out, "## db_size={}", set.db_size());
    let _ = writeln!(out, "## min_sup_abs={}", set.min_sup());
    if let Some(m) = manifest {
        m.render(&mut out);
    }
    let symbols = set.symbols();
    for sp in set.patterns() {
        write_pattern_line(&mut out, "", sp, symbols);
    }
    for sp in set.antecedent_only() {
        write_pattern_line(&mut out, &format!("{AUX_TAG}\t"), sp, symbols);
    }
    out
}

pub fn read_freq(text: &str) -> Result<FrequentPatternSet, FormatError> {
    check_magic(text, FREQ_MAGIC)?;
    let meta = |key: &str| meta_lines(text).find(|(k, _)| *k == key).map(|(_, v)| v);
    let db_size: u64 = meta("db_size")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| line_err(1, "missing or bad `## db_size=` line"))?;
    let min_sup: u64 = meta("min_sup_abs")
        .and_then(|v| v.parse().ok())
        .unwrap_or(1);

    let mut rows: Vec<(bool, u64, Vec<Vec<String>>)> = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        let lineno = idx + 1;
        let (aux, body) = match line
            .strip_prefix(AUX_TAG)
            .and_then(|l| l.strip_prefix('\t'))
        {
            Some(body) => (true, body),
            None if line.starts_with('#') || line.trim().is_empty() => continue,
            None => (false, line),
        };
        let fields: Vec<&str> = body.split('\t').collect();
        let [support, _relative, pattern] = fields[..] else {
            return Err(line_err(
                lineno,
                "expected support<TAB>relative<TAB>pattern",
            ));
        };
        let support: u64 = support
            .parse()
            .map_err(|_| line_err(lineno, "bad support"))?;
        let names = parse_pattern_names(pattern).map_err(|m| line_err(lineno, m))?;
        rows.push((aux, support, names));
    }
    let all_names: BTreeSet<&str> = rows
        .iter()
        .flat_map(|r| r.2.iter().flatten().map(String::as_str))
        .collect();
    let symbols = Arc::new(SymbolTable::from_sorted_names(all_names)?);
    let mut listed = Vec::new();
    let mut aux = Vec::new();
    for (is_aux, support, names) in rows {
        let mut elements = Vec::with_capacity(names.len());
        for element in names {
            let ids = element
                .iter()
                .map(|n| symbols.get(n).expect("interned above"))
                .collect();
            elements.push(EventSet::new(ids)?);
        }
        let sp = SupportedPattern::new(Pattern::new(elements), support, db_size);
        if is_aux {
            aux.push(sp);
        } else {
            listed.push(sp);
        }
    }
    Ok(FrequentPatternSet::from_parts(
        symbols, db_size, min_sup, listed, aux,
    ))
}

pub fn write_rules(rules: &RuleSet, manifest: Option<&RunManifest>) -> String {
    let mut out = String::new();
    out.push_str(RULES_MAGIC);
    out.push('\n');
    let _ = writeln!(out, "## db_size={}", rules.db_size());
    let _ = writeln!(out, "## min_conf={}", rules.min_conf());
    if let Some(m) = manifest {
        m.render(&mut out);
    }
    let symbols = rules.symbols();
    for r in rules.rules() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            r.confidence,
            r.support,
            render_pattern(&r.antecedent, symbols),
            render_element(&r.consequent, symbols)
        );
    }
    out
}

/// Repeat chains, gender deltas and year-of-birth profiles as labeled
/// tab-separated sections.
pub fn write_report(rules: &RuleSet) -> String {
    let symbols = rules.symbols();
    let name = |id| escape_symbol(symbols.name(id).unwrap_or("?"));
    let mut out = String::new();
    out.push_str(REPORT_MAGIC);
    out.push('\n');

    out.push_str("[repeat_chains]\n");
    out.push_str("# item\trepetitions:confidence(support/antecedent_support)...\n");
    for chain in repeat_chains(rules) {
        let links: Vec<String> = chain
            .chain
            .iter()
            .map(|l| {
                format!(
                    "{}:{}({}/{})",
                    l.repetitions, l.confidence, l.support, l.antecedent_support
                )
            })
            .collect();
        let _ = writeln!(out, "{}\t{}", name(chain.item), links.join("\t"));
    }

    out.push_str("[gender_deltas]\n");
    out.push_str(
        "# delta\trelative_delta\tgendered_conf\tbase_conf\tgendered_antecedent\tconsequent\n",
    );
    for d in gender_deltas(rules) {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            d.delta,
            d.relative_delta,
            d.gendered_rule.confidence,
            d.base_rule.confidence,
            render_pattern(&d.gendered_rule.antecedent, symbols),
            render_element(&d.gendered_rule.consequent, symbols)
        );
    }

    out.push_str("[yob_profiles]\n");
    out.push_str("# consequent\tyear:confidence...\n");
    for (item, points) in yob_profiles(rules) {
        let pts: Vec<String> = points
            .iter()
            .map(|p| format!("{}:{}", p.year, p.confidence))
            .collect();
        let _ = writeln!(out, "{}\t{}", name(item), pts.join("\t"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escaping_round_trips() {
        for s in [
            "plain",
            "a,b",
            "x|y",
            "back\\slash",
            "tab\there",
            "Diarrhoea & vomiting, symptom",
        ] {
            let escaped = escape_symbol(s);
            assert!(!escaped.contains('\t'));
            assert_eq!(split_escaped(&escaped, ',').unwrap(), vec![s.to_string()]);
        }
        assert_eq!(split_raw("a\\|b|c", '|'), vec!["a\\|b", "c"]);
        assert!(split_escaped("bad\\q", ',').is_err());
    }

    #[test]
    fn seqdb_layout() {
        let mut symbols = SymbolTable::new();
        let a = symbols.intern("A").unwrap();
        let y = symbols.intern("yob:1973").unwrap();
        let db = SequenceDatabase::new(
            SymbolTable::from_sorted_names(["A", "yob:1973"]).unwrap(),
            vec![Sequence::from_baskets(
                0,
                vec![EventSet::single(y), EventSet::new(vec![a]).unwrap()],
            )],
        )
        .unwrap();
        let text = write_seqdb(&db, None);
        assert_eq!(text, "#seqdb v1\n0\t0\tyob:1973\n0\t1\tA\n");
        assert_eq!(read_seqdb(&text).unwrap(), db);
    }

    #[test]
    fn seqdb_rejects_bad_input() {
        assert!(matches!(
            read_seqdb("nope\n"),
            Err(FormatError::BadMagic { .. })
        ));
        assert!(read_seqdb("#seqdb v1\n0\t1\tA\n0\t0\tB\n").is_err());
        assert!(read_seqdb("#seqdb v1\n0\tx\tA\n").is_err());
        assert!(read_seqdb("#seqdb v1\n0\t0\n").is_err());
    }

    #[test]
    fn manifest_lines_round_trip() {
        let m = RunManifest::new("mine")
            .with("min_sup", "0.5")
            .with_input("abc123");
        let mut s = String::new();
        m.render(&mut s);
        let back = RunManifest::parse(&s);
        assert_eq!(back, m);
        assert_eq!(back.get("min_sup"), Some("0.5"));
    }

    #[test]
    fn freq_requires_db_size() {
        assert!(read_freq("#freq v1\n2\t0.5\tA\n").is_err());
        let set = read_freq("#freq v1\n## db_size=4\n2\t0.5\tA|B\n#aux\t4\t1\tyob:1943\n").unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.antecedent_only().len(), 1);
        assert_eq!(set.patterns()[0].pattern.len(), 2);
    }
}
