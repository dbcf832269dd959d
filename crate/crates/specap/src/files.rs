//! JSON and JSON-lines files, written atomically.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use specap_core::hash::sha256_hex;
use specap_core::synthworld::{CaptionRecord, Dataset, DatasetSplits, RegionFeatureGrid, SceneSpec, Vocabulary};

use crate::error::{CliError, Result};

pub const SCENES: &str = "scenes.jsonl";
pub const FEATURES: &str = "features.jsonl";
pub const CAPTIONS: &str = "captions.jsonl";
pub const SPLITS: &str = "splits.json";
pub const VOCAB: &str = "vocab.json";
/// Dataset files in hashing order.
pub const DATASET_FILES: [&str; 5] = [SCENES, FEATURES, CAPTIONS, SPLITS, VOCAB];

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().ok_or_else(|| CliError::write(path, "not a file path"))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    let mut f = fs::File::create(&tmp).map_err(|e| CliError::write(&tmp, e))?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(|e| CliError::write(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::write(path, e))
}

pub fn to_json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| CliError::Runtime(format!("serialization: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, &to_json_bytes(value)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| CliError::read(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::read(path, e))
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).map_err(|e| CliError::write(path, e))?;
        out.push(b'\n');
    }
    write_atomic(path, &out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let f = fs::File::open(path).map_err(|e| CliError::read(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| CliError::read(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| CliError::read(path, format!("line {}: {e}", n + 1)))?);
    }
    Ok(out)
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| CliError::read(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Hashes of the given files, keyed by their display path.
pub fn hash_files(paths: &[PathBuf]) -> Result<BTreeMap<String, String>> {
    paths.iter().map(|p| Ok((p.display().to_string(), file_sha256(p)?))).collect()
}

/// True when `dir` exists and has at least one entry.
pub fn is_non_empty_dir(dir: &Path) -> bool {
    fs::read_dir(dir).map(|mut d| d.next().is_some()).unwrap_or(false)
}

pub fn save_dataset(dir: &Path, ds: &Dataset) -> Result<()> {
    write_jsonl(&dir.join(SCENES), &ds.scenes)?;
    write_jsonl(&dir.join(FEATURES), &ds.grids)?;
    write_jsonl(&dir.join(CAPTIONS), &ds.captions)?;
    write_json(&dir.join(SPLITS), &ds.splits)?;
    write_json(&dir.join(VOCAB), &ds.vocab)
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    for f in DATASET_FILES {
        if !dir.join(f).is_file() {
            return Err(CliError::Precondition(format!("dataset file {} is missing", dir.join(f).display())));
        }
    }
    let ds = Dataset {
        scenes: read_jsonl::<SceneSpec>(&dir.join(SCENES))?,
        grids: read_jsonl::<RegionFeatureGrid>(&dir.join(FEATURES))?,
        captions: read_jsonl::<CaptionRecord>(&dir.join(CAPTIONS))?,
        splits: read_json::<DatasetSplits>(&dir.join(SPLITS))?,
        vocab: read_json::<Vocabulary>(&dir.join(VOCAB))?,
    };
    ds.validate()
        .map_err(|e| CliError::Precondition(format!("dataset in {} is inconsistent: {e}", dir.display())))?;
    Ok(ds)
}

/// Combined fingerprint of a dataset directory's files.
pub fn dataset_hash(dir: &Path) -> Result<String> {
    let mut joined = String::new();
    for f in DATASET_FILES {
        joined.push_str(f);
        joined.push(' ');
        joined.push_str(&file_sha256(&dir.join(f))?);
        joined.push('\n');
    }
    Ok(sha256_hex(joined.as_bytes()))
}
