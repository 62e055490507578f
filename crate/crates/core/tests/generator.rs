use seqmine_core::ingest::{ingest, parse_medical_table, parse_patient_table};
use seqmine_core::testkit::{generate, GenConfig, PlantedRule};
use seqmine_core::{induce_rules, mine, MinSupport, MinerConfig};

fn three_sigma(n: u64, p: f64) -> f64 {
    3.0 * (n as f64 * p * (1.0 - p)).sqrt()
}

#[test]
fn carrier_counts_follow_the_configured_rate() {
    let cfg = GenConfig {
        n_patients: 10_000,
        yob_range: (1943, 1943),
        background_items: 20,
        background_rate: 2.0,
        planted_rules: vec![PlantedRule::new(&["T"], "HTN", 0.117).carrier_rate(0.4)],
        seed: 99,
        ..GenConfig::default()
    };
    let g = generate(&cfg).unwrap();
    let e = &g.manifest.entries[0];
    assert_eq!(e.cohort_n, 10_000);
    let expected = 0.4 * 10_000.0;
    assert!((e.carriers as f64 - expected).abs() <= three_sigma(10_000, 0.4));
    assert!((e.firings as f64 - 0.117 * e.carriers as f64).abs() <= three_sigma(e.carriers, 0.117));
}

#[test]
fn mined_confidence_equals_manifest_ratio() {
    let cfg = GenConfig {
        n_patients: 3_000,
        yob_range: (1940, 1949),
        background_items: 30,
        background_rate: 4.0,
        planted_rules: vec![
            PlantedRule::new(&["T"], "C", 0.3).carrier_rate(0.5),
            PlantedRule::new(&[], "HTN", 0.2).yob(1943, 1943),
        ],
        seed: 5,
        ..GenConfig::default()
    };
    let g = generate(&cfg).unwrap();
    let p = parse_patient_table(g.patients_csv.as_bytes(), b',').unwrap();
    let m = parse_medical_table(g.medical_csv.as_bytes(), b',').unwrap();
    assert!(p.diagnostics.is_empty() && m.diagnostics.is_empty());
    let (db, report) = ingest(&p, &m);
    assert!(report.is_balanced());

    let set = mine(&db, &MinerConfig::with_min_sup(MinSupport::Absolute(20))).unwrap();
    let rules = induce_rules(&set, 0.01).unwrap();

    let tc = db.pattern(&[vec!["T"], vec!["C"]]).unwrap();
    let (x, y) = tc.split_last().unwrap();
    let rule = rules.find(&x, y).unwrap();
    let e = &g.manifest.entries[0];
    assert_eq!(
        (rule.support, rule.antecedent_support),
        (e.firings, e.carriers)
    );

    let yh = db.pattern(&[vec!["yob:1943"], vec!["HTN"]]).unwrap();
    let (x, y) = yh.split_last().unwrap();
    let rule = rules.find(&x, y).unwrap();
    let e = &g.manifest.entries[1];
    assert_eq!(
        (rule.support, rule.antecedent_support),
        (e.firings, e.cohort_n)
    );
}

#[test]
fn zero_probability_rule_never_appears() {
    let cfg = GenConfig {
        n_patients: 500,
        planted_rules: vec![PlantedRule::new(&["T"], "NEVER", 0.0)],
        seed: 1,
        ..GenConfig::default()
    };
    let g = generate(&cfg).unwrap();
    assert_eq!(g.manifest.entries[0].firings, 0);
    let p = parse_patient_table(g.patients_csv.as_bytes(), b',').unwrap();
    let m = parse_medical_table(g.medical_csv.as_bytes(), b',').unwrap();
    let (db, _) = ingest(&p, &m);
    assert!(db.symbols().get("NEVER").is_none());
}
