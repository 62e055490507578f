//! Turns patient and medical-event tables into a transaction-style sequence
//! database: same-day events become one basket, baskets are ordered by date,
//! and each patient's sequence opens with a demographic basket.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Read;

use chrono::{Datelike, NaiveDate};

use crate::error::{Diagnostic, FormatError};
use crate::model::{
    Event, EventSet, Sequence, SequenceDatabase, SymbolTable, GENDER_PREFIX, YOB_PREFIX,
};

pub const MIN_YOB: i32 = 1850;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gender {
    Male,
    Female,
    Unknown,
}

impl Gender {
    /// Accepts `M`/`F`/`male`/`female` in any case; anything else is unknown.
    pub fn parse(s: &str) -> Gender {
        match s.trim().to_ascii_lowercase().as_str() {
            "m" | "male" => Gender::Male,
            "f" | "female" => Gender::Female,
            _ => Gender::Unknown,
        }
    }

    pub fn item(self) -> Option<String> {
        match self {
            Gender::Male => Some(format!("{GENDER_PREFIX}male")),
            Gender::Female => Some(format!("{GENDER_PREFIX}female")),
            Gender::Unknown => None,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Gender::Male => "M",
            Gender::Female => "F",
            Gender::Unknown => "U",
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::Male => "male",
            Gender::Female => "female",
            Gender::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatientRecord {
    pub patient_key: String,
    pub yob: i32,
    pub gender: Gender,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MedicalEventRecord {
    pub patient_key: String,
    pub date: NaiveDate,
    pub code: String,
}

/// Parsed patient table.
#[derive(Clone, Debug, Default)]
pub struct PatientTable {
    pub records: Vec<PatientRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Parsed medical table. Rows with partial or missing dates are counted in
/// `dropped_bad_date` and never become records.
#[derive(Clone, Debug, Default)]
pub struct MedicalTable {
    pub records: Vec<MedicalEventRecord>,
    pub diagnostics: Vec<Diagnostic>,
    pub dropped_bad_date: u64,
}

/// Counts describing one ingestion run.
///
/// `events_in == events_kept + events_dropped_bad_date
///   + events_merged_duplicate + events_dropped_orphan` always holds.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub patients_in: u64,
    pub patients_out: u64,
    pub events_in: u64,
    pub events_kept: u64,
    pub events_dropped_bad_date: u64,
    pub events_merged_duplicate: u64,
    pub events_dropped_orphan: u64,
}

impl IngestReport {
    pub fn is_balanced(&self) -> bool {
        self.events_in
            == self.events_kept
                + self.events_dropped_bad_date
                + self.events_merged_duplicate
                + self.events_dropped_orphan
    }
}

impl fmt::Display for IngestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "patients_in\t{}", self.patients_in)?;
        writeln!(f, "patients_out\t{}", self.patients_out)?;
        writeln!(f, "events_in\t{}", self.events_in)?;
        writeln!(f, "events_kept\t{}", self.events_kept)?;
        writeln!(
            f,
            "events_dropped_bad_date\t{}",
            self.events_dropped_bad_date
        )?;
        writeln!(
            f,
            "events_merged_duplicate\t{}",
            self.events_merged_duplicate
        )?;
        write!(f, "events_dropped_orphan\t{}", self.events_dropped_orphan)
    }
}

fn reader<R: Read>(input: R, delimiter: u8) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn column(headers: &csv::StringRecord, name: &'static str) -> Result<usize, FormatError> {
    headers
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case(name))
        .ok_or(FormatError::MissingColumn(name))
}

fn headers<R: Read>(rdr: &mut csv::Reader<R>) -> Result<csv::StringRecord, FormatError> {
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(FormatError::MissingHeader);
    }
    Ok(headers)
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn current_year() -> i32 {
    chrono::Utc::now().year()
}

/// Reads a `patient_id,yob,gender` table. Bad rows become diagnostics.
pub fn parse_patient_table<R: Read>(input: R, delimiter: u8) -> Result<PatientTable, FormatError> {
    let mut rdr = reader(input, delimiter);
    let headers = headers(&mut rdr)?;
    let key_col = column(&headers, "patient_id")?;
    let yob_col = column(&headers, "yob")?;
    let gender_col = column(&headers, "gender")?;
    let max_year = current_year();

    let mut table = PatientTable::default();
    for row in rdr.records() {
        let row = row?;
        let line = line_of(&row);
        let key = row.get(key_col).unwrap_or("");
        if key.is_empty() {
            table.diagnostics.push(Diagnostic {
                line,
                message: "missing patient_id".into(),
            });
            continue;
        }
        let yob_raw = row.get(yob_col).unwrap_or("");
        let yob = match yob_raw.parse::<i32>() {
            Ok(y) if (MIN_YOB..=max_year).contains(&y) => y,
            Ok(y) => {
                table.diagnostics.push(Diagnostic {
                    line,
                    message: format!("year of birth {y} outside [{MIN_YOB}, {max_year}]"),
                });
                continue;
            }
            Err(_) => {
                table.diagnostics.push(Diagnostic {
                    line,
                    message: format!("unparsable year of birth {yob_raw:?}"),
                });
                continue;
            }
        };
        table.records.push(PatientRecord {
            patient_key: key.to_string(),
            yob,
            gender: Gender::parse(row.get(gender_col).unwrap_or("")),
        });
    }
    Ok(table)
}

/// Strict `YYYY-MM-DD`; anything partial (`1995`, `1995-03`, `1995-00-00`)
/// or impossible yields `None`.
pub fn parse_full_date(raw: &str) -> Option<NaiveDate> {
    let mut parts = raw.trim().split('-');
    let (y, m, d) = (parts.next()?, parts.next()?, parts.next()?);
    if parts.next().is_some() || y.len() != 4 || m.len() != 2 || d.len() != 2 {
        return None;
    }
    NaiveDate::from_ymd_opt(y.parse().ok()?, m.parse().ok()?, d.parse().ok()?)
}

/// Reads a `patient_id,date,code` table, dropping rows without a full date.
pub fn parse_medical_table<R: Read>(input: R, delimiter: u8) -> Result<MedicalTable, FormatError> {
    let mut rdr = reader(input, delimiter);
    let headers = headers(&mut rdr)?;
    let key_col = column(&headers, "patient_id")?;
    let date_col = column(&headers, "date")?;
    let code_col = column(&headers, "code")?;

    let mut table = MedicalTable::default();
    for row in rdr.records() {
        let row = row?;
        let line = line_of(&row);
        let key = row.get(key_col).unwrap_or("");
        let code = row.get(code_col).unwrap_or("");
        if key.is_empty() || code.is_empty() {
            table.diagnostics.push(Diagnostic {
                line,
                message: "missing patient_id or code".into(),
            });
            continue;
        }
        let raw_date = row.get(date_col).unwrap_or("");
        match parse_full_date(raw_date) {
            Some(date) => table.records.push(MedicalEventRecord {
                patient_key: key.to_string(),
                date,
                code: code.to_string(),
            }),
            None => {
                table.dropped_bad_date += 1;
                table.diagnostics.push(Diagnostic {
                    line,
                    message: format!("partial or missing date {raw_date:?}; event dropped"),
                });
            }
        }
    }
    Ok(table)
}

/// Groups events into dated baskets and assembles the database.
///
/// Sids follow sorted patient key order. A repeated patient key keeps its
/// first record. Events for unknown patients are dropped as orphans.
pub fn build_sequences(
    patients: &[PatientRecord],
    events: &[MedicalEventRecord],
) -> (SequenceDatabase, IngestReport) {
    let mut report = IngestReport {
        patients_in: patients.len() as u64,
        events_in: events.len() as u64,
        ..IngestReport::default()
    };

    let mut by_key: BTreeMap<&str, &PatientRecord> = BTreeMap::new();
    for p in patients {
        by_key.entry(p.patient_key.as_str()).or_insert(p);
    }

    let mut grouped: HashMap<&str, BTreeMap<NaiveDate, BTreeSet<&str>>> = HashMap::new();
    for ev in events {
        if !by_key.contains_key(ev.patient_key.as_str()) {
            report.events_dropped_orphan += 1;
            continue;
        }
        let fresh = grouped
            .entry(ev.patient_key.as_str())
            .or_default()
            .entry(ev.date)
            .or_default()
            .insert(ev.code.trim());
        if fresh {
            report.events_kept += 1;
        } else {
            report.events_merged_duplicate += 1;
        }
    }

    // ids follow sorted symbol order so the database is independent of row order
    let mut names: BTreeSet<String> = BTreeSet::new();
    for p in by_key.values() {
        names.insert(format!("{YOB_PREFIX}{}", p.yob));
        names.extend(p.gender.item());
    }
    for days in grouped.values() {
        for codes in days.values() {
            names.extend(codes.iter().map(|c| c.to_string()));
        }
    }
    let symbols = SymbolTable::from_sorted_names(&names).expect("symbols are non-empty");

    let mut sequences = Vec::with_capacity(by_key.len());
    for (sid, (key, patient)) in by_key.iter().enumerate() {
        let mut demographic = vec![symbols
            .get(&format!("{YOB_PREFIX}{}", patient.yob))
            .expect("interned")];
        if let Some(g) = patient.gender.item() {
            demographic.push(symbols.get(&g).expect("interned"));
        }
        let mut baskets = vec![EventSet::new(demographic).expect("non-empty")];
        if let Some(days) = grouped.get(key) {
            for codes in days.values() {
                let ids = codes
                    .iter()
                    .map(|c| symbols.get(c).expect("interned"))
                    .collect();
                baskets.push(EventSet::new(ids).expect("non-empty"));
            }
        }
        sequences.push(Sequence::from_baskets(sid as u32, baskets));
    }
    report.patients_out = sequences.len() as u64;

    let db = SequenceDatabase::new(symbols, sequences).expect("sids are unique and items known");
    (db, report)
}

/// Runs both parsers and [`build_sequences`], folding the date drops into the
/// report.
pub fn ingest(patients: &PatientTable, medical: &MedicalTable) -> (SequenceDatabase, IngestReport) {
    let (db, mut report) = build_sequences(&patients.records, &medical.records);
    report.events_in += medical.dropped_bad_date;
    report.events_dropped_bad_date = medical.dropped_bad_date;
    (db, report)
}

/// Checks that a sequence's eids run 0..n and that demographics sit only in
/// the first basket.
pub fn check_demographic_layout(db: &SequenceDatabase, seq: &Sequence) -> bool {
    let symbols = db.symbols();
    let gaps_free = seq
        .events()
        .iter()
        .enumerate()
        .all(|(i, e): (usize, &Event)| e.eid == i as u32);
    let Some((first, rest)) = seq.events().split_first() else {
        return false;
    };
    let count = |prefix: &str| {
        first
            .basket
            .items()
            .iter()
            .filter(|&&i| symbols.name(i).is_some_and(|n| n.starts_with(prefix)))
            .count()
    };
    let later_clean = rest
        .iter()
        .all(|e| e.basket.items().iter().all(|&i| !symbols.is_demographic(i)));
    gaps_free && count(YOB_PREFIX) == 1 && count(GENDER_PREFIX) <= 1 && later_clean
}

#[cfg(test)]
mod tests {
    use super::*;

    fn patients(text: &str) -> PatientTable {
        parse_patient_table(text.as_bytes(), b',').unwrap()
    }

    fn medical(text: &str) -> MedicalTable {
        parse_medical_table(text.as_bytes(), b',').unwrap()
    }

    fn names(db: &SequenceDatabase, seq: usize) -> Vec<Vec<String>> {
        db.sequences()[seq]
            .events()
            .iter()
            .map(|e| {
                e.basket
                    .items()
                    .iter()
                    .map(|&i| db.symbols().name(i).unwrap().to_string())
                    .collect()
            })
            .collect()
    }

    #[test]
    fn patient_rows() {
        let t = patients("patient_id,yob,gender\np1,1973,M\np2,19xx,F\n");
        assert_eq!(
            t.records,
            vec![PatientRecord {
                patient_key: "p1".into(),
                yob: 1973,
                gender: Gender::Male
            }]
        );
        assert_eq!(t.diagnostics.len(), 1);
        assert_eq!(t.diagnostics[0].line, 3);
    }

    #[test]
    fn patient_header_only() {
        let t = patients("patient_id,yob,gender\n");
        assert!(t.records.is_empty());
        assert!(t.diagnostics.is_empty());
    }

    #[test]
    fn patient_year_out_of_range() {
        let t = patients("patient_id,yob,gender\np1,1700,M\np2,3000,F\n");
        assert!(t.records.is_empty());
        assert_eq!(t.diagnostics.len(), 2);
    }

    #[test]
    fn missing_columns_are_fatal() {
        let err = parse_patient_table("patient_id,gender\np1,M\n".as_bytes(), b',').unwrap_err();
        assert!(matches!(err, FormatError::MissingColumn("yob")));
        let err = parse_medical_table("".as_bytes(), b',').unwrap_err();
        assert!(matches!(err, FormatError::MissingHeader));
    }

    #[test]
    fn medical_rows_and_partial_dates() {
        let t = medical(
            "patient_id,date,code\np1,2004-03-15,H060.\np1,2004-03,H060.\np1,1995-00-00,X\np1,,X\np1,1995,X\n",
        );
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.records[0].code, "H060.");
        assert_eq!(t.dropped_bad_date, 4);
    }

    #[test]
    fn quoted_fields_and_tabs() {
        let t = medical("patient_id,date,code\np1,2004-03-15,\"Diarrhoea & vomiting, symptom\"\n");
        assert_eq!(t.records[0].code, "Diarrhoea & vomiting, symptom");
        let t = parse_medical_table(
            "patient_id\tdate\tcode\np1\t2004-03-15\tA\n".as_bytes(),
            b'\t',
        )
        .unwrap();
        assert_eq!(t.records.len(), 1);
    }

    #[test]
    fn grouping_example() {
        let p = patients("patient_id,yob,gender\np1,1973,M\n");
        let m =
            medical("patient_id,date,code\np1,2005-01-02,A\np1,2004-03-15,B\np1,2004-03-15,A\n");
        let (db, report) = ingest(&p, &m);
        assert_eq!(
            names(&db, 0),
            vec![
                vec!["gender:male".to_string(), "yob:1973".to_string()],
                vec!["A".to_string(), "B".to_string()],
                vec!["A".to_string()],
            ]
        );
        assert!(report.is_balanced());
        assert_eq!(report.events_kept, 3);
    }

    #[test]
    fn patient_without_events_and_unknown_gender() {
        let p = patients("patient_id,yob,gender\np1,1980,\n");
        let (db, _) = ingest(&p, &medical("patient_id,date,code\n"));
        assert_eq!(names(&db, 0), vec![vec!["yob:1980".to_string()]]);
        assert!(check_demographic_layout(&db, &db.sequences()[0]));
    }

    #[test]
    fn duplicates_and_orphans_are_counted() {
        let p = patients("patient_id,yob,gender\np1,1973,F\n");
        let m = medical(
            "patient_id,date,code\np1,2004-03-15,A\np1,2004-03-15,A\np9,2004-03-15,X\np1,2004-03,A\n",
        );
        let (db, report) = ingest(&p, &m);
        assert_eq!(report.events_merged_duplicate, 1);
        assert_eq!(report.events_dropped_orphan, 1);
        assert_eq!(report.events_dropped_bad_date, 1);
        assert_eq!(report.events_in, 4);
        assert!(report.is_balanced());
        assert_eq!(names(&db, 0)[1], vec!["A".to_string()]);
        assert!(db.symbols().get("X").is_none());
    }

    #[test]
    fn sids_follow_patient_key_order() {
        let p = patients("patient_id,yob,gender\nzed,1950,M\nalice,1960,F\n");
        let (db, report) = ingest(&p, &medical("patient_id,date,code\n"));
        assert_eq!(report.patients_out, 2);
        assert_eq!(names(&db, 0)[0], vec!["gender:female", "yob:1960"]);
        assert_eq!(names(&db, 1)[0], vec!["gender:male", "yob:1950"]);
    }

    #[test]
    fn strict_dates() {
        assert!(parse_full_date("2004-03-15").is_some());
        assert!(parse_full_date("2004-02-30").is_none());
        assert!(parse_full_date("2004-3-15").is_none());
        assert!(parse_full_date("2004-03-15-01").is_none());
    }
}
