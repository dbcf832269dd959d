#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const TINY_CONFIG: &str = r#"{
  "world": {"num_images": 60},
  "mle": {"max_iterations": 40, "eval_interval": 20},
  "nlu": {"max_iterations": 40, "eval_interval": 20},
  "finetune": {"max_iterations": 30, "eval_interval": 10}
}"#;

pub fn specap(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specap"))
        .args(args)
        .env("SPECAP_RUN_ROOT", root)
        .current_dir(root)
        .output()
        .expect("spawn specap")
}

/// Runs a command that must succeed and returns its stdout.
pub fn ok(root: &Path, args: &[&str]) -> String {
    let out = specap(root, args);
    assert!(
        out.status.success(),
        "specap {args:?} exited {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn write_config(root: &Path, name: &str, text: &str) -> PathBuf {
    let p = root.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

pub fn bytes(p: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

/// Tiny dataset plus pretrained captioner and retriever under `root`, all
/// at seed 1: `data-seed1`, `mle-seed1`, `nlu-seed1`.
pub fn pretrained(root: &Path) {
    write_config(root, "tiny.json", TINY_CONFIG);
    ok(root, &["gen-data", "--config", "tiny.json", "--seed", "1"]);
    for phase in ["mle", "nlu"] {
        ok(root, &["train", "--phase", phase, "--config", "tiny.json", "--seed", "1", "--data", "data-seed1"]);
    }
}

pub fn finetune_args<'a>(loss: &'a str, out: &'a str) -> Vec<&'a str> {
    vec![
        "train", "--phase", "finetune", "--loss", loss, "--config", "tiny.json", "--seed", "1", "--data", "data-seed1",
        "--captioner", "mle-seed1", "--retriever", "nlu-seed1", "--out", out,
    ]
}
