"""Smoke test for the seqmine extension module.

Build and install first:

    maturin build --release -m crates/python/Cargo.toml
    pip install target/wheels/seqmine-*.whl
"""

import seqmine


def check_example_database():
    db = seqmine.SequenceDatabase.from_baskets(
        [[["A"], ["B"]], [["A"], ["B"]], [["A"], ["C"]]]
    )
    assert len(db) == 3
    assert db.support([["A"], ["B"]]) == 2
    assert db.support([["Z"]]) == 0

    freq = seqmine.mine(db, 2, max_len=3)
    assert sorted(freq.patterns()) == sorted(
        [([["A"]], 3), ([["B"]], 2), ([["A"], ["B"]], 2)]
    )
    assert seqmine.mine(db, 0.5).min_sup == 2
    assert freq.patterns() == seqmine.oracle_mine(db, 2, max_len=3, max_elems=3).patterns()

    rules = seqmine.induce_rules(freq, 0.1)
    [rule] = rules.rules()
    assert rule.antecedent == [["A"]] and rule.consequent == ["B"]
    assert (rule.support, rule.antecedent_support) == (2, 3)
    assert abs(rule.confidence - 2 / 3) < 1e-12
    assert len(seqmine.induce_rules(freq, 0.7)) == 0

    again = seqmine.FrequentPatterns.from_freq(freq.to_freq())
    assert again.patterns() == freq.patterns()

    for bad in ("1.5", 0, "abc"):
        try:
            seqmine.mine(db, bad)
        except ValueError:
            pass
        else:
            raise AssertionError(f"min_sup {bad!r} accepted")


def check_planted_chain():
    config = "\n".join(
        [
            "n_patients = 2000",
            "background_items = 10",
            "background_rate = 2",
            "seed = 5",
            "plant = trigger=D; consequence=D; probability=0.343; carrier_rate=1",
            "plant = trigger=D > D; consequence=D; probability=0.527; carrier_rate=0",
        ]
    )
    patients, medical, manifest = seqmine.generate(config)
    db, report = seqmine.SequenceDatabase.from_tables(patients, medical)
    report = dict(report)
    assert report["patients_out"] == 2000
    assert report["events_in"] == (
        report["events_kept"]
        + report["events_dropped_bad_date"]
        + report["events_merged_duplicate"]
        + report["events_dropped_orphan"]
    )

    rules = seqmine.induce_rules(seqmine.mine(db, 0.01, threads=2))
    chains = dict(rules.repeat_chains())
    links = chains["D"]
    assert [n for n, *_ in links] == [1, 2]

    entries = [
        line.split("|") for line in manifest.splitlines() if not line.startswith("#")
    ]
    for (n, conf, sup, ante), entry in zip(links, entries):
        carriers, firings = int(entry[3]), int(entry[4])
        assert (sup, ante) == (firings, carriers), (n, sup, ante, entry)
    assert "[repeat_chains]" in rules.report()


if __name__ == "__main__":
    check_example_database()
    check_planted_chain()
    print("seqmine smoke test passed", seqmine.__version__)
