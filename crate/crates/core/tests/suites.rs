use transience::verify::{run_suite, summary_table, SUITES};

#[test]
fn every_suite_passes() {
    for name in SUITES {
        let reports = run_suite(name, 11).unwrap();
        assert!(!reports.is_empty());
        assert!(reports.iter().all(|r| r.passed), "{name}:\n{}", summary_table(&reports));
    }
}

#[test]
fn unknown_suite_is_rejected() {
    assert!(run_suite("nonsense", 0).is_err());
}
