//! Ground truth: a brute-force miner and a synthetic patient generator that
//! plants rules and records how often they fired.

pub mod generator;
pub mod oracle;

pub use generator::{generate, Cohort, GenConfig, Generated, Manifest, ManifestEntry, PlantedRule};
pub use oracle::{oracle_mine, ORACLE_MAX_ITEMS, ORACLE_MAX_LEN};
