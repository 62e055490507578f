//! `seqmine`: generate, ingest, mine, induce rules and verify sequence
//! databases of patient records.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | `verify` found a difference between miner and oracle |
//! | 2 | missing or unreadable file, or an empty database |
//! | 3 | malformed input file |
//! | 4 | invalid parameter, command line or generator config |
//! | 5 | frequent-pattern file is not prefix-closed |
//! | 6 | input exceeds the oracle's safety caps |

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use seqmine_core::formats::{
    read_freq, read_seqdb, render_pattern, write_freq, write_report, write_rules, write_seqdb,
    RunManifest, FREQ_MAGIC, RULES_MAGIC, SEQDB_MAGIC,
};
use seqmine_core::ingest::{ingest, parse_medical_table, parse_patient_table};
use seqmine_core::miner::{DEFAULT_MAX_ELEMENTS, DEFAULT_MAX_PATTERN_LENGTH};
use seqmine_core::testkit::{generate, oracle_mine, GenConfig};
use seqmine_core::{
    induce_rules, mine, FormatError, FrequentPatternSet, MinSupport, MineError, MinerConfig,
    Pattern, RuleError, SequenceDatabase,
};
use sha2::{Digest, Sha256};

/// Like `println!`, but a closed stdout (e.g. piped into `head`) is not an error.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

#[derive(Parser)]
#[command(
    name = "seqmine",
    version,
    about = "Sequential rule mining over patient event histories"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic patient and medical tables with planted rules.
    Gen {
        /// Key-value generator config.
        config: PathBuf,
        /// Directory receiving patients.csv, medical.csv and manifest.txt.
        out_dir: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build a sequence database from patient and medical tables.
    Ingest {
        patients: PathBuf,
        medical: PathBuf,
        out: PathBuf,
        /// Tables are tab-separated instead of comma-separated.
        #[arg(long)]
        tab: bool,
    },
    /// Mine frequent sequential patterns.
    Mine {
        seqdb: PathBuf,
        out: PathBuf,
        #[command(flatten)]
        params: MineParams,
        /// Also list patterns made only of demographic items.
        #[arg(long)]
        emit_demographic: bool,
        /// Worker threads; defaults to available parallelism.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Induce sequential rules from a frequent-pattern file.
    Rules {
        freq: PathBuf,
        out: PathBuf,
        #[arg(long, default_value = "0.1")]
        min_conf: String,
        /// Write repeat chains, gender deltas and yob profiles here (`-` for stdout).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Mine with both the miner and the brute-force oracle and compare.
    Verify {
        seqdb: PathBuf,
        #[command(flatten)]
        params: MineParams,
        /// Drop one miner pattern before comparing; exercises the mismatch path.
        #[arg(long, hide = true)]
        corrupt: bool,
    },
    /// Summarize a seqdb, freq or rules file.
    Stats { file: PathBuf },
}

#[derive(Args)]
struct MineParams {
    /// Integer sequence count, or a fraction of |D| when it has a decimal point.
    #[arg(long, default_value = "0.001")]
    min_sup: String,
    /// Maximum total items per pattern.
    #[arg(long, default_value_t = DEFAULT_MAX_PATTERN_LENGTH)]
    max_len: usize,
    /// Maximum elements per pattern.
    #[arg(long, default_value_t = DEFAULT_MAX_ELEMENTS)]
    max_elems: usize,
}

impl MineParams {
    fn config(
        &self,
        emit_demographic: bool,
        threads: Option<usize>,
    ) -> Result<MinerConfig, Failure> {
        let min_sup = MinSupport::parse(&self.min_sup).map_err(|e| Failure::new(4, e))?;
        if self.max_len == 0 || self.max_elems == 0 {
            return Err(Failure::new(
                4,
                "--max-len and --max-elems must be at least 1",
            ));
        }
        if threads == Some(0) {
            return Err(Failure::new(4, "--threads must be at least 1"));
        }
        Ok(MinerConfig {
            min_sup,
            max_pattern_length: self.max_len,
            max_elements: self.max_elems,
            emit_demographic_only_patterns: emit_demographic,
            threads,
        })
    }
}

struct Failure {
    code: u8,
    messages: Vec<String>,
}

impl Failure {
    fn new(code: u8, message: impl ToString) -> Self {
        Failure {
            code,
            messages: vec![message.to_string()],
        }
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        let code = match e {
            FormatError::Io(_) => 2,
            _ => 3,
        };
        Failure::new(code, e)
    }
}

impl From<MineError> for Failure {
    fn from(e: MineError) -> Self {
        let code = match e {
            MineError::EmptyDatabase => 2,
            MineError::OracleLimit { .. } => 6,
            _ => 4,
        };
        Failure::new(code, e)
    }
}

impl From<RuleError> for Failure {
    fn from(e: RuleError) -> Self {
        let code = match e {
            RuleError::MissingPrefix { .. } => 5,
            RuleError::InvalidMinConf(_) => 4,
        };
        Failure::new(code, e)
    }
}

fn read_input(path: &Path) -> Result<(String, String), Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))?;
    let digest = hex::encode(Sha256::digest(&bytes));
    let text = String::from_utf8(bytes)
        .map_err(|_| Failure::new(3, format!("{}: not valid UTF-8", path.display())))?;
    Ok((text, digest))
}

fn write_output(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))
}

fn with_path<T>(path: &Path, r: Result<T, FormatError>) -> Result<T, Failure> {
    r.map_err(|e| {
        let mut f = Failure::from(e);
        f.messages[0] = format!("{}: {}", path.display(), f.messages[0]);
        f
    })
}

fn cmd_gen(config: &Path, out_dir: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let (text, digest) = read_input(config)?;
    let mut cfg = GenConfig::parse(&text).map_err(|errs| Failure {
        code: 4,
        messages: errs.iter().map(ToString::to_string).collect(),
    })?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let generated = generate(&cfg).map_err(|errs| Failure {
        code: 4,
        messages: errs.iter().map(ToString::to_string).collect(),
    })?;
    fs::create_dir_all(out_dir)
        .map_err(|e| Failure::new(2, format!("{}: {e}", out_dir.display())))?;
    let run = RunManifest::new("gen")
        .with_input(digest)
        .with("seed", cfg.seed);
    write_output(&out_dir.join("patients.csv"), &generated.patients_csv)?;
    write_output(&out_dir.join("medical.csv"), &generated.medical_csv)?;
    write_output(
        &out_dir.join("manifest.txt"),
        &generated.manifest.render(Some(&run)),
    )?;
    say!("patients\t{}", cfg.n_patients);
    for e in &generated.manifest.entries {
        say!(
            "planted\t{} -> {}\t{}/{} carriers fired (cohort {})",
            e.trigger,
            e.consequence,
            e.firings,
            e.carriers,
            e.cohort_n
        );
    }
    Ok(())
}

fn cmd_ingest(patients: &Path, medical: &Path, out: &Path, tab: bool) -> Result<(), Failure> {
    let delimiter = if tab { b'\t' } else { b',' };
    let (p_text, p_digest) = read_input(patients)?;
    let (m_text, m_digest) = read_input(medical)?;
    let p = with_path(patients, parse_patient_table(p_text.as_bytes(), delimiter))?;
    let m = with_path(medical, parse_medical_table(m_text.as_bytes(), delimiter))?;
    for d in &p.diagnostics {
        eprintln!("{}: {d}", patients.display());
    }
    for d in &m.diagnostics {
        eprintln!("{}: {d}", medical.display());
    }
    let (db, report) = ingest(&p, &m);
    let run = RunManifest::new("ingest")
        .with_input(p_digest)
        .with_input(m_digest)
        .with("delimiter", if tab { "tab" } else { "comma" });
    write_output(out, &write_seqdb(&db, Some(&run)))?;
    say!("{report}");
    Ok(())
}

fn load_seqdb(path: &Path) -> Result<(SequenceDatabase, String), Failure> {
    let (text, digest) = read_input(path)?;
    let db = with_path(path, read_seqdb(&text))?;
    Ok((db, digest))
}

fn cmd_mine(seqdb: &Path, out: &Path, config: MinerConfig) -> Result<(), Failure> {
    let (db, digest) = load_seqdb(seqdb)?;
    let started = Instant::now();
    let set = mine(&db, &config)?;
    let elapsed = started.elapsed();
    let run = RunManifest::new("mine")
        .with_input(digest)
        .with("min_sup", config.min_sup)
        .with("max_len", config.max_pattern_length)
        .with("max_elems", config.max_elements)
        .with("emit_demographic", config.emit_demographic_only_patterns);
    write_output(out, &write_freq(&set, Some(&run)))?;
    say!("sequences\t{}", db.len());
    say!("min_sup_abs\t{}", set.min_sup());
    say!("patterns\t{}", set.patterns().len());
    eprintln!("mined in {elapsed:.3?}");
    Ok(())
}

fn cmd_rules(
    freq: &Path,
    out: &Path,
    min_conf: &str,
    report: Option<&Path>,
) -> Result<(), Failure> {
    let min_conf: f64 = min_conf
        .trim()
        .parse()
        .map_err(|_| Failure::new(4, format!("invalid --min-conf {min_conf:?}")))?;
    let (text, digest) = read_input(freq)?;
    let set = with_path(freq, read_freq(&text))?;
    let started = Instant::now();
    let rules = induce_rules(&set, min_conf)?;
    let elapsed = started.elapsed();
    let run = RunManifest::new("rules").with_input(digest);
    write_output(out, &write_rules(&rules, Some(&run)))?;
    say!("rules\t{}", rules.len());
    eprintln!("induced in {elapsed:.3?}");
    match report {
        Some(p) if p == Path::new("-") => emit(&write_report(&rules)),
        Some(p) => write_output(p, &write_report(&rules))?,
        None => {}
    }
    Ok(())
}

fn first_difference(miner: &FrequentPatternSet, oracle: &FrequentPatternSet) -> Option<String> {
    let a = miner.sorted_supports();
    let b = oracle.sorted_supports();
    let symbols = miner.symbols();
    let show = |p: &Pattern| render_pattern(p, symbols);
    let mut i = 0;
    loop {
        match (a.get(i), b.get(i)) {
            (None, None) => return None,
            (Some((p, s)), Some((q, t))) if p == q && s == t => i += 1,
            (Some((p, s)), Some((q, t))) if p == q => {
                return Some(format!("{}: miner support {s}, oracle {t}", show(p)))
            }
            (Some((p, s)), Some((q, _))) if p.canonical_cmp(q).is_lt() => {
                return Some(format!("{} (support {s}) only in miner output", show(p)))
            }
            (Some(_), Some((q, t))) | (None, Some((q, t))) => {
                return Some(format!("{} (support {t}) only in oracle output", show(q)))
            }
            (Some((p, s)), None) => {
                return Some(format!("{} (support {s}) only in miner output", show(p)))
            }
        }
    }
}

fn cmd_verify(seqdb: &Path, config: MinerConfig, corrupt: bool) -> Result<bool, Failure> {
    let (db, _) = load_seqdb(seqdb)?;
    if db.is_empty() {
        return Err(MineError::EmptyDatabase.into());
    }
    let min_sup = config.min_sup.resolve(db.len() as u64);
    let oracle = oracle_mine(&db, min_sup, config.max_pattern_length, config.max_elements)?;
    let mined = mine(&db, &config)?;
    let mined = if corrupt {
        let mut listed = mined.patterns().to_vec();
        listed.pop();
        FrequentPatternSet::from_parts(
            mined.symbols().clone(),
            mined.db_size(),
            mined.min_sup(),
            listed,
            mined.antecedent_only().to_vec(),
        )
    } else {
        mined
    };
    match first_difference(&mined, &oracle) {
        None => {
            say!("identical\t{} patterns at min_sup {min_sup}", oracle.len());
            Ok(true)
        }
        Some(diff) => {
            say!("mismatch\t{diff}");
            Ok(false)
        }
    }
}

fn cmd_stats(path: &Path) -> Result<(), Failure> {
    let (text, _) = read_input(path)?;
    let magic = text.lines().next().unwrap_or("");
    let mut out = String::new();
    if magic == SEQDB_MAGIC {
        let db = with_path(path, read_seqdb(&text))?;
        let events: usize = db.sequences().iter().map(|s| s.events().len()).sum();
        let items: usize = db
            .sequences()
            .iter()
            .flat_map(|s| s.events())
            .map(|e| e.basket.len())
            .sum();
        let _ = writeln!(out, "kind\tseqdb");
        let _ = writeln!(out, "sequences\t{}", db.len());
        let _ = writeln!(out, "symbols\t{}", db.symbols().len());
        let _ = writeln!(out, "events\t{events}");
        let _ = writeln!(out, "item_occurrences\t{items}");
        if !db.is_empty() {
            let _ = writeln!(
                out,
                "mean_events_per_sequence\t{:.3}",
                events as f64 / db.len() as f64
            );
        }
    } else if magic == FREQ_MAGIC {
        let set = with_path(path, read_freq(&text))?;
        let _ = writeln!(out, "kind\tfreq");
        let _ = writeln!(out, "db_size\t{}", set.db_size());
        let _ = writeln!(out, "min_sup_abs\t{}", set.min_sup());
        let _ = writeln!(out, "patterns\t{}", set.patterns().len());
        let _ = writeln!(out, "antecedent_only\t{}", set.antecedent_only().len());
        let mut by_len = std::collections::BTreeMap::new();
        for p in set.patterns() {
            *by_len.entry(p.pattern.cardinality()).or_insert(0usize) += 1;
        }
        for (len, n) in by_len {
            let _ = writeln!(out, "length_{len}\t{n}");
        }
    } else if magic == RULES_MAGIC {
        let rules = text
            .lines()
            .skip(1)
            .filter(|l| !l.starts_with('#') && !l.is_empty())
            .map(|l| {
                l.split('\t')
                    .next()
                    .and_then(|c| c.parse::<f64>().ok())
                    .ok_or_else(|| {
                        Failure::new(3, format!("{}: bad rule line {l:?}", path.display()))
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let _ = writeln!(out, "kind\trules");
        let _ = writeln!(out, "rules\t{}", rules.len());
        if !rules.is_empty() {
            let max = rules.iter().cloned().fold(f64::MIN, f64::max);
            let min = rules.iter().cloned().fold(f64::MAX, f64::min);
            let mean = rules.iter().sum::<f64>() / rules.len() as f64;
            let _ = writeln!(out, "confidence_max\t{max}");
            let _ = writeln!(out, "confidence_min\t{min}");
            let _ = writeln!(out, "confidence_mean\t{mean:.6}");
        }
    } else {
        return Err(Failure::new(
            3,
            format!("{}: unrecognized file header {magic:?}", path.display()),
        ));
    }
    emit(&out);
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Gen {
            config,
            out_dir,
            seed,
        } => cmd_gen(&config, &out_dir, seed)?,
        Command::Ingest {
            patients,
            medical,
            out,
            tab,
        } => cmd_ingest(&patients, &medical, &out, tab)?,
        Command::Mine {
            seqdb,
            out,
            params,
            emit_demographic,
            threads,
        } => cmd_mine(&seqdb, &out, params.config(emit_demographic, threads)?)?,
        Command::Rules {
            freq,
            out,
            min_conf,
            report,
        } => cmd_rules(&freq, &out, &min_conf, report.as_deref())?,
        Command::Verify {
            seqdb,
            params,
            corrupt,
        } => {
            if !cmd_verify(&seqdb, params.config(false, None)?, corrupt)? {
                return Ok(1);
            }
        }
        Command::Stats { file } => cmd_stats(&file)?,
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(4);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            for m in &f.messages {
                eprintln!("error: {m}");
            }
            ExitCode::from(f.code)
        }
    }
}
