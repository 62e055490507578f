//! Sequential rule mining over longitudinal patient records.
//!
//! The pipeline: [`ingest`] turns patient and medical-event tables into a
//! [`SequenceDatabase`] whose sequences start with a demographic basket,
//! [`miner::mine`] enumerates frequent sequences with vertical id-list joins,
//! and [`rules::induce_rules`] derives confidence-ranked rules that the
//! analyses in [`rules`] slice by repetition, gender and year of birth.
//! [`testkit`] holds the brute-force oracle and the synthetic generator.

pub mod error;
pub mod formats;
pub mod idlist;
pub mod ingest;
pub mod miner;
pub mod model;
pub mod rules;
pub mod testkit;

pub use error::{ConfigError, Diagnostic, FormatError, MineError, ModelError, RuleError};
pub use idlist::{temporal_join_i, temporal_join_s, verticalize, IdList};
pub use ingest::{
    build_sequences, parse_medical_table, parse_patient_table, Gender, IngestReport,
    MedicalEventRecord, PatientRecord,
};
pub use miner::{mine, FrequentPatternSet, MinSupport, MinerConfig};
pub use model::{
    Event, EventSet, ItemId, Pattern, Sequence, SequenceDatabase, SupportedPattern, SymbolTable,
};
pub use rules::{
    gender_deltas, induce_rules, repeat_chains, yob_profile, GenderDelta, RepeatChain, Rule,
    RuleSet,
};
