//! Synthetic patient and medical-event tables with planted rules.
//!
//! Each patient gets a year of birth, a gender, Poisson-distributed noise
//! events and, for every planted rule whose cohort they belong to, a chance
//! to carry the trigger and then the consequence. Planted events sit on
//! distinct, increasing dates; noise codes never overlap planted codes, so
//! the realized counts in the manifest are exactly the supports a miner sees.

use std::fmt::Write as _;

use chrono::{Days, NaiveDate};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::ConfigError;
use crate::formats::{escape_symbol, split_raw, unescape_symbol, RunManifest};
use crate::ingest::Gender;
use crate::model::{is_demographic_symbol, YOB_PREFIX};

pub const MANIFEST_MAGIC: &str = "#manifest v1";
/// Noise codes are `bg<number>`; planted codes may not use this prefix.
pub const NOISE_PREFIX: &str = "bg";

fn window_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2003, 1, 1).expect("valid date")
}

/// Length in days of the 2003-2010 collection window.
fn window_days() -> u64 {
    let end = NaiveDate::from_ymd_opt(2010, 12, 31).expect("valid date");
    (end - window_start()).num_days() as u64 + 1
}

/// Patients a planted rule applies to.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Cohort {
    pub yob: Option<(i32, i32)>,
    pub gender: Option<Gender>,
}

impl Cohort {
    pub fn matches(&self, yob: i32, gender: Gender) -> bool {
        self.yob.is_none_or(|(lo, hi)| (lo..=hi).contains(&yob))
            && self.gender.is_none_or(|g| g == gender)
    }

    fn label_terms(&self) -> Vec<String> {
        let mut terms = Vec::new();
        if let Some(g) = self.gender.and_then(Gender::item) {
            terms.push(g);
        }
        match self.yob {
            Some((lo, hi)) if lo == hi => terms.push(format!("{YOB_PREFIX}{lo}")),
            Some((lo, hi)) => terms.push(format!("{YOB_PREFIX}{lo}-{hi}")),
            None => {}
        }
        terms
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlantedRule {
    /// Codes that must occur in this order before the consequence can fire.
    pub trigger: Vec<String>,
    pub consequence: String,
    /// Chance a trigger carrier gets the consequence afterwards.
    pub probability: f64,
    /// Chance a cohort member without the trigger is given it. Zero means
    /// only patients who already carry it (through earlier rules) qualify.
    pub carrier_rate: f64,
    pub cohort: Cohort,
}

impl PlantedRule {
    /// `trigger -> consequence` for all cohort members, who always carry the
    /// trigger.
    pub fn new(trigger: &[&str], consequence: &str, probability: f64) -> Self {
        PlantedRule {
            trigger: trigger.iter().map(|s| s.to_string()).collect(),
            consequence: consequence.to_string(),
            probability,
            carrier_rate: 1.0,
            cohort: Cohort::default(),
        }
    }

    pub fn carrier_rate(mut self, rate: f64) -> Self {
        self.carrier_rate = rate;
        self
    }

    pub fn yob(mut self, lo: i32, hi: i32) -> Self {
        self.cohort.yob = Some((lo, hi));
        self
    }

    pub fn gender(mut self, gender: Gender) -> Self {
        self.cohort.gender = Some(gender);
        self
    }

    /// Cohort terms followed by trigger codes, comma separated; `*` if empty.
    pub fn label(&self) -> String {
        let mut terms = self.cohort.label_terms();
        terms.extend(self.trigger.iter().cloned());
        if terms.is_empty() {
            "*".to_string()
        } else {
            terms
                .iter()
                .map(|t| escape_symbol(t))
                .collect::<Vec<_>>()
                .join(",")
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenConfig {
    pub n_patients: usize,
    pub yob_range: (i32, i32),
    /// Fraction of patients that are female; the rest are male.
    pub gender_split: f64,
    pub background_items: usize,
    /// Mean number of noise events per patient (Poisson).
    pub background_rate: f64,
    pub planted_rules: Vec<PlantedRule>,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_patients: 1000,
            yob_range: (1930, 2005),
            gender_split: 0.5,
            background_items: 50,
            background_rate: 5.0,
            planted_rules: Vec::new(),
            seed: 0,
        }
    }
}

fn field_err(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field,
        message: message.into(),
    }
}

/// Drops a trailing `# comment`; the `#` must follow whitespace so codes
/// containing `#` survive.
fn strip_comment(line: &str) -> &str {
    line.char_indices()
        .find(|&(i, c)| c == '#' && line[..i].ends_with(char::is_whitespace))
        .map_or(line, |(i, _)| &line[..i])
}

fn unit(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), Vec<ConfigError>> {
        let mut errs = Vec::new();
        if self.n_patients == 0 {
            errs.push(field_err("n_patients", "must be at least 1"));
        }
        let (lo, hi) = self.yob_range;
        if lo > hi || lo < crate::ingest::MIN_YOB || hi > 2100 {
            errs.push(field_err("yob_range", format!("invalid range {lo}-{hi}")));
        }
        if !unit(self.gender_split) {
            errs.push(field_err("gender_split", "must lie in [0, 1]"));
        }
        if !(self.background_rate >= 0.0 && self.background_rate.is_finite()) {
            errs.push(field_err(
                "background_rate",
                "must be a non-negative number",
            ));
        }
        if self.background_rate > 0.0 && self.background_items == 0 {
            errs.push(field_err(
                "background_items",
                "noise needs at least one item",
            ));
        }
        for (i, r) in self.planted_rules.iter().enumerate() {
            let codes = r.trigger.iter().chain(std::iter::once(&r.consequence));
            for code in codes {
                if code.trim().is_empty() || code.trim() != code {
                    errs.push(field_err(
                        "plant",
                        format!("rule {}: blank or padded code {code:?}", i + 1),
                    ));
                } else if code.starts_with(NOISE_PREFIX) || is_demographic_symbol(code) {
                    errs.push(field_err(
                        "plant",
                        format!(
                            "rule {}: code {code:?} collides with reserved prefixes",
                            i + 1
                        ),
                    ));
                }
            }
            if !unit(r.probability) {
                errs.push(field_err(
                    "plant",
                    format!("rule {}: probability must lie in [0, 1]", i + 1),
                ));
            }
            if !unit(r.carrier_rate) {
                errs.push(field_err(
                    "plant",
                    format!("rule {}: carrier_rate must lie in [0, 1]", i + 1),
                ));
            }
            if r.cohort.yob.is_some_and(|(a, b)| a > b) {
                errs.push(field_err(
                    "plant",
                    format!("rule {}: empty yob range", i + 1),
                ));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// Parses the flat `key = value` format. `plant` may repeat:
    ///
    /// ```text
    /// plant = trigger=A > B; consequence=C; probability=0.2; carrier_rate=1; yob=1943-1944; gender=female
    /// ```
    pub fn parse(text: &str) -> Result<GenConfig, Vec<ConfigError>> {
        let mut cfg = GenConfig::default();
        let mut errs = Vec::new();
        let mut yob_min = cfg.yob_range.0;
        let mut yob_max = cfg.yob_range.1;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = strip_comment(raw).trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                errs.push(ConfigError::Line {
                    line,
                    message: "expected key = value".into(),
                });
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| ConfigError::Line {
                line,
                message: format!("{key}: {what} {value:?}"),
            };
            let result = match key {
                "n_patients" => value
                    .parse()
                    .map(|v| cfg.n_patients = v)
                    .map_err(|_| bad("not a count")),
                "yob_min" => value
                    .parse()
                    .map(|v| yob_min = v)
                    .map_err(|_| bad("not a year")),
                "yob_max" => value
                    .parse()
                    .map(|v| yob_max = v)
                    .map_err(|_| bad("not a year")),
                "gender_split" | "female_fraction" => value
                    .parse()
                    .map(|v| cfg.gender_split = v)
                    .map_err(|_| bad("not a number")),
                "background_items" => value
                    .parse()
                    .map(|v| cfg.background_items = v)
                    .map_err(|_| bad("not a count")),
                "background_rate" => value
                    .parse()
                    .map(|v| cfg.background_rate = v)
                    .map_err(|_| bad("not a number")),
                "seed" => value
                    .parse()
                    .map(|v| cfg.seed = v)
                    .map_err(|_| bad("not an integer")),
                "plant" => parse_plant(value)
                    .map(|r| cfg.planted_rules.push(r))
                    .map_err(|m| ConfigError::Line { line, message: m }),
                _ => Err(ConfigError::Line {
                    line,
                    message: format!("unknown key {key:?}"),
                }),
            };
            if let Err(e) = result {
                errs.push(e);
            }
        }
        cfg.yob_range = (yob_min, yob_max);
        if let Err(mut more) = cfg.validate() {
            errs.append(&mut more);
        }
        if errs.is_empty() {
            Ok(cfg)
        } else {
            Err(errs)
        }
    }

    /// Inverse of [`GenConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n_patients = {}", self.n_patients);
        let _ = writeln!(out, "yob_min = {}", self.yob_range.0);
        let _ = writeln!(out, "yob_max = {}", self.yob_range.1);
        let _ = writeln!(out, "gender_split = {}", self.gender_split);
        let _ = writeln!(out, "background_items = {}", self.background_items);
        let _ = writeln!(out, "background_rate = {}", self.background_rate);
        let _ = writeln!(out, "seed = {}", self.seed);
        for r in &self.planted_rules {
            let _ = write!(
                out,
                "plant = trigger={}; consequence={}; probability={}; carrier_rate={}",
                r.trigger.join(" > "),
                r.consequence,
                r.probability,
                r.carrier_rate
            );
            if let Some((lo, hi)) = r.cohort.yob {
                let _ = write!(out, "; yob={lo}-{hi}");
            }
            if let Some(g) = r.cohort.gender {
                let _ = write!(out, "; gender={g}");
            }
            out.push('\n');
        }
        out
    }
}

fn parse_plant(value: &str) -> Result<PlantedRule, String> {
    let mut rule = PlantedRule {
        trigger: Vec::new(),
        consequence: String::new(),
        probability: f64::NAN,
        carrier_rate: 1.0,
        cohort: Cohort::default(),
    };
    for part in value.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| format!("plant: expected name=value, got {part:?}"))?;
        let (k, v) = (k.trim(), v.trim());
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| format!("plant: {k} is not a number"))
        };
        match k {
            "trigger" => {
                rule.trigger = v
                    .split('>')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            }
            "consequence" => rule.consequence = v.to_string(),
            "probability" | "p" => rule.probability = num(v)?,
            "carrier_rate" => rule.carrier_rate = num(v)?,
            "yob" => {
                let (lo, hi) = v.split_once('-').unwrap_or((v, v));
                let lo = lo
                    .trim()
                    .parse()
                    .map_err(|_| "plant: bad yob range".to_string())?;
                let hi = hi
                    .trim()
                    .parse()
                    .map_err(|_| "plant: bad yob range".to_string())?;
                rule.cohort.yob = Some((lo, hi));
            }
            "gender" => {
                rule.cohort.gender = match Gender::parse(v) {
                    Gender::Unknown => return Err(format!("plant: unknown gender {v:?}")),
                    g => Some(g),
                }
            }
            other => return Err(format!("plant: unknown field {other:?}")),
        }
    }
    if rule.consequence.is_empty() {
        return Err("plant: missing consequence".into());
    }
    if rule.probability.is_nan() {
        return Err("plant: missing probability".into());
    }
    Ok(rule)
}

/// Realized counts for one planted rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub trigger: String,
    pub consequence: String,
    pub cohort_n: u64,
    pub carriers: u64,
    pub firings: u64,
}

impl ManifestEntry {
    /// `firings / carriers`, the confidence a miner must report.
    pub fn ratio(&self) -> f64 {
        self.firings as f64 / self.carriers as f64
    }
}

/// One entry per planted rule, in config order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn render(&self, run: Option<&RunManifest>) -> String {
        let mut out = String::new();
        out.push_str(MANIFEST_MAGIC);
        out.push('\n');
        if let Some(m) = run {
            m.render(&mut out);
        }
        out.push_str("# trigger|consequence|cohort_n|carriers|firings\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{}|{}|{}|{}|{}",
                e.trigger,
                escape_symbol(&e.consequence),
                e.cohort_n,
                e.carriers,
                e.firings
            );
        }
        out
    }

    /// Reads a rendered manifest. Labels stay in their escaped form.
    pub fn parse(text: &str) -> Result<Manifest, String> {
        let mut lines = text.lines();
        if lines.next().map(str::trim_end) != Some(MANIFEST_MAGIC) {
            return Err(format!("expected {MANIFEST_MAGIC:?} header"));
        }
        let mut entries = Vec::new();
        for line in lines {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            // counts are the last three fields; labels may contain escaped pipes
            let mut parts = line.rsplitn(4, '|');
            let firings = parts.next();
            let carriers = parts.next();
            let cohort_n = parts.next();
            let head = parts.next();
            let (Some(firings), Some(carriers), Some(cohort_n), Some(head)) =
                (firings, carriers, cohort_n, head)
            else {
                return Err(format!("malformed manifest line {line:?}"));
            };
            let [trigger, consequence] = split_raw(head, '|')[..] else {
                return Err(format!("malformed manifest line {line:?}"));
            };
            let num = |s: &str| {
                s.parse::<u64>()
                    .map_err(|_| format!("bad count in {line:?}"))
            };
            entries.push(ManifestEntry {
                trigger: trigger.to_string(),
                consequence: unescape_symbol(consequence)?,
                cohort_n: num(cohort_n)?,
                carriers: num(carriers)?,
                firings: num(firings)?,
            });
        }
        Ok(Manifest { entries })
    }
}

/// Generator output: the two ingest tables and the manifest.
#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub patients_csv: String,
    pub medical_csv: String,
    pub manifest: Manifest,
}

fn carries(history: &[usize], trigger: &[usize]) -> bool {
    let mut it = history.iter();
    trigger.iter().all(|t| it.any(|h| h == t))
}

/// Generates the tables. A pure function of `config` (including its seed).
pub fn generate(config: &GenConfig) -> Result<Generated, Vec<ConfigError>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = if config.background_rate > 0.0 {
        Some(
            Poisson::new(config.background_rate)
                .map_err(|e| vec![field_err("background_rate", e.to_string())])?,
        )
    } else {
        None
    };

    // planted codes interned locally so carrier checks compare integers
    let mut codes: Vec<String> = Vec::new();
    let mut code_id = |c: &str| match codes.iter().position(|x| x == c) {
        Some(i) => i,
        None => {
            codes.push(c.to_string());
            codes.len() - 1
        }
    };
    let plans: Vec<(Vec<usize>, usize)> = config
        .planted_rules
        .iter()
        .map(|r| {
            let trig = r.trigger.iter().map(|c| code_id(c)).collect();
            (trig, code_id(&r.consequence))
        })
        .collect();

    let width = config.n_patients.to_string().len().max(6);
    let noise_width = config.background_items.max(1).to_string().len().max(4);
    let days = window_days();
    let start = window_start();

    let mut manifest: Vec<ManifestEntry> = config
        .planted_rules
        .iter()
        .map(|r| ManifestEntry {
            trigger: r.label(),
            consequence: r.consequence.clone(),
            cohort_n: 0,
            carriers: 0,
            firings: 0,
        })
        .collect();

    let mut patients = csv::Writer::from_writer(Vec::new());
    let mut medical = csv::Writer::from_writer(Vec::new());
    patients
        .write_record(["patient_id", "yob", "gender"])
        .expect("in-memory write");
    medical
        .write_record(["patient_id", "date", "code"])
        .expect("in-memory write");

    for p in 0..config.n_patients {
        let key = format!("p{:0width$}", p + 1);
        let yob = rng.random_range(config.yob_range.0..=config.yob_range.1);
        let gender = if rng.random::<f64>() < config.gender_split {
            Gender::Female
        } else {
            Gender::Male
        };
        patients
            .write_record([key.as_str(), &yob.to_string(), gender.code()])
            .expect("in-memory write");

        let mut history: Vec<usize> = Vec::new();
        for (rule, ((trigger, consequence), entry)) in config
            .planted_rules
            .iter()
            .zip(plans.iter().zip(manifest.iter_mut()))
        {
            if !rule.cohort.matches(yob, gender) {
                continue;
            }
            entry.cohort_n += 1;
            let mut carrier = carries(&history, trigger);
            if !carrier && rng.random::<f64>() < rule.carrier_rate {
                history.extend_from_slice(trigger);
                carrier = true;
            }
            if carrier {
                entry.carriers += 1;
                if rng.random::<f64>() < rule.probability {
                    history.push(*consequence);
                    entry.firings += 1;
                }
            }
        }

        let mut rows: Vec<(u64, String)> = Vec::new();
        if !history.is_empty() {
            let mut slots = sample(&mut rng, days as usize, history.len()).into_vec();
            slots.sort_unstable();
            for (slot, code) in slots.into_iter().zip(&history) {
                rows.push((slot as u64, codes[*code].clone()));
            }
        }
        if let Some(dist) = &noise {
            let n = dist.sample(&mut rng) as u64;
            for _ in 0..n {
                let item = rng.random_range(0..config.background_items);
                let day = rng.random_range(0..days);
                rows.push((day, format!("{NOISE_PREFIX}{:0noise_width$}", item + 1)));
            }
        }
        rows.sort_by_key(|r| r.0);
        for (day, code) in rows {
            let date = start + Days::new(day);
            medical
                .write_record([key.as_str(), &date.format("%Y-%m-%d").to_string(), &code])
                .expect("in-memory write");
        }
    }

    let to_string = |w: csv::Writer<Vec<u8>>| {
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    };
    Ok(Generated {
        patients_csv: to_string(patients),
        medical_csv: to_string(medical),
        manifest: Manifest { entries: manifest },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GenConfig {
        GenConfig {
            n_patients: 200,
            yob_range: (1943, 1944),
            background_items: 10,
            background_rate: 3.0,
            planted_rules: vec![
                PlantedRule::new(&["D"], "D", 0.5),
                PlantedRule::new(&["D", "D"], "D", 0.5).carrier_rate(0.0),
                PlantedRule::new(&[], "HTN", 0.2).yob(1943, 1943),
            ],
            seed: 11,
            ..GenConfig::default()
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a, b);
        let mut other = small();
        other.seed = 12;
        assert_ne!(generate(&other).unwrap().medical_csv, a.medical_csv);
    }

    #[test]
    fn chain_counts_line_up() {
        let g = generate(&small()).unwrap();
        let e = &g.manifest.entries;
        assert_eq!(e[0].carriers, 200);
        // the second rule's carriers are exactly the first rule's firings
        assert_eq!(e[1].carriers, e[0].firings);
        assert_eq!(e[1].trigger, "D,D");
        assert_eq!(e[2].trigger, "yob:1943");
        assert_eq!(e[2].carriers, e[2].cohort_n);
    }

    #[test]
    fn extreme_probabilities() {
        let mut cfg = small();
        cfg.planted_rules = vec![
            PlantedRule::new(&["T"], "C0", 0.0),
            PlantedRule::new(&["T"], "C1", 1.0),
        ];
        let g = generate(&cfg).unwrap();
        assert_eq!(g.manifest.entries[0].firings, 0);
        assert_eq!(
            g.manifest.entries[1].firings,
            g.manifest.entries[1].carriers
        );
        assert!(!g.medical_csv.contains("C0"));
    }

    #[test]
    fn config_text_round_trip() {
        let mut cfg = small();
        cfg.planted_rules.push(
            PlantedRule::new(&["T"], "C", 0.174)
                .gender(Gender::Female)
                .carrier_rate(0.5),
        );
        let parsed = GenConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn config_trailing_comments() {
        let cfg = GenConfig::parse(
            "n_patients = 10   # small\nplant = trigger=a#1; consequence=b; probability=0.5 # note\n",
        )
        .unwrap();
        assert_eq!(cfg.n_patients, 10);
        assert_eq!(cfg.planted_rules[0].trigger, vec!["a#1".to_string()]);
        assert_eq!(cfg.planted_rules[0].probability, 0.5);
    }

    #[test]
    fn config_errors_name_fields() {
        let errs = GenConfig::parse("n_patients = 0\ngender_split = 2\nbogus = 1\nplant = consequence=bg1; probability=0.5\n")
            .unwrap_err();
        let text: Vec<String> = errs.iter().map(|e| e.to_string()).collect();
        assert!(text.iter().any(|t| t.contains("n_patients")));
        assert!(text.iter().any(|t| t.contains("gender_split")));
        assert!(text.iter().any(|t| t.contains("bogus")));
        assert!(text.iter().any(|t| t.contains("reserved")));
    }

    #[test]
    fn manifest_round_trip() {
        let g = generate(&small()).unwrap();
        let text = g.manifest.render(None);
        assert!(text.starts_with(MANIFEST_MAGIC));
        assert_eq!(Manifest::parse(&text).unwrap(), g.manifest);
    }
}
