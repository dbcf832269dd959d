use specap::checkpoint::{Checkpoint, Lineage, CHECKPOINT_VERSION};
use specap::files::{dataset_hash, load_dataset, read_jsonl, save_dataset, write_json, write_jsonl};
use specap::report_diff::report_diff;
use specap::CliError;
use specap_core::metrics::MetricsReport;
use specap_core::synthworld::{generate_dataset, WorldConfig};
use specap_core::training::{mle_run, ExperimentConfig, MleObjective, RunControl};

#[test]
fn dataset_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let ds = generate_dataset(&WorldConfig { num_images: 40, ..Default::default() }, 3).unwrap();
    save_dataset(dir.path(), &ds).unwrap();
    let back = load_dataset(dir.path()).unwrap();
    assert_eq!(back, ds);
    assert_eq!(back.vocab.encode(&["cat", "zebra"]), ds.vocab.encode(&["cat", "zebra"]));
    let h = dataset_hash(dir.path()).unwrap();
    save_dataset(dir.path(), &back).unwrap();
    assert_eq!(dataset_hash(dir.path()).unwrap(), h);
}

#[test]
fn inconsistent_dataset_is_a_precondition_failure() {
    let dir = tempfile::tempdir().unwrap();
    let mut ds = generate_dataset(&WorldConfig { num_images: 40, ..Default::default() }, 3).unwrap();
    ds.splits.test.pop();
    save_dataset(dir.path(), &ds).unwrap();
    assert!(matches!(load_dataset(dir.path()), Err(CliError::Precondition(_))));
    std::fs::remove_file(dir.path().join("vocab.json")).unwrap();
    let err = load_dataset(dir.path()).unwrap_err();
    assert!(err.to_string().contains("vocab.json"));
}

#[test]
fn jsonl_reports_bad_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.jsonl");
    write_jsonl(&p, &[1u32, 2, 3]).unwrap();
    assert_eq!(read_jsonl::<u32>(&p).unwrap(), vec![1, 2, 3]);
    std::fs::write(&p, "1\nnope\n").unwrap();
    assert!(read_jsonl::<u32>(&p).unwrap_err().to_string().contains("line 2"));
}

#[test]
fn checkpoint_round_trip_and_version_check() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::preset("desk").unwrap();
    cfg.world.num_images = 40;
    cfg.mle.max_iterations = 6;
    cfg.mle.eval_interval = 3;
    let ds = generate_dataset(&cfg.world, 0).unwrap();
    let mut state = mle_run(&cfg, &ds).unwrap();
    state.run(&ds, &mut RunControl { stop_after: Some(4), observer: None }).unwrap();
    let lineage = Lineage {
        config_hash: "c".into(),
        data_hash: "d".into(),
        vocab_fingerprint: ds.vocab.fingerprint(),
    };
    let path = dir.path().join("ckpt");
    Checkpoint::from_run(&state, false, &lineage).unwrap().save(&path).unwrap();
    let loaded = Checkpoint::load(&path).unwrap();
    assert_eq!(loaded.lineage, lineage);
    assert_eq!(loaded.iteration, 4);
    let mut resumed = loaded.run_state::<MleObjective>().unwrap();
    assert_eq!(resumed.model, state.model);
    state.run(&ds, &mut RunControl::default()).unwrap();
    resumed.run(&ds, &mut RunControl::default()).unwrap();
    assert_eq!(resumed.model, state.model);
    assert_eq!(resumed.log, state.log);
    assert!(loaded.retriever().is_err());

    let mut v: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    v["version"] = (CHECKPOINT_VERSION + 1).into();
    write_json(&path, &v).unwrap();
    assert!(matches!(Checkpoint::load(&path), Err(CliError::Precondition(_))));
}

#[test]
fn report_diff_matches_golden_file() {
    let fixtures = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let read = |n: &str| -> MetricsReport { serde_json::from_slice(&std::fs::read(fixtures.join(n)).unwrap()).unwrap() };
    let table = report_diff("baseline.json", &read("baseline.json"), "ccos.json", &read("ccos.json"));
    let golden = std::fs::read_to_string(fixtures.join("diff.golden")).unwrap();
    assert_eq!(table, golden);
}
