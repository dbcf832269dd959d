use specap_core::verify::{run_suite, Suite};

#[test]
fn every_suite_passes_at_default_size() {
    for suite in Suite::ALL {
        let rep = run_suite(suite).unwrap();
        println!("{rep}");
        assert!(rep.passed(), "{rep}");
        assert!(rep.cases() > 0);
    }
}
