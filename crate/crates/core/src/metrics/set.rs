use alloc::collections::BTreeSet;

use crate::{Error, Result};

/// Percentage of distinct strings.
pub fn diversity_pct<S: AsRef<str>>(generated: &[S]) -> Result<f64> {
    if generated.is_empty() {
        return Err(Error::Empty("diversity of no captions"));
    }
    let distinct: BTreeSet<&str> = generated.iter().map(|s| s.as_ref()).collect();
    Ok(100.0 * distinct.len() as f64 / generated.len() as f64)
}

/// Percentage of captions absent from `training`.
pub fn novelty_pct<S: AsRef<str>>(generated: &[S], training: &BTreeSet<alloc::string::String>) -> Result<f64> {
    if generated.is_empty() {
        return Err(Error::Empty("novelty of no captions"));
    }
    let novel = generated.iter().filter(|g| !training.contains(g.as_ref())).count();
    Ok(100.0 * novel as f64 / generated.len() as f64)
}

/// Distinct whitespace-delimited tokens across all captions.
pub fn vocab_size_used<S: AsRef<str>>(generated: &[S]) -> usize {
    generated
        .iter()
        .flat_map(|s| s.as_ref().split_whitespace())
        .collect::<BTreeSet<_>>()
        .len()
}

pub fn recall_at_k(ranks: &[usize], k: usize) -> Result<f64> {
    if ranks.is_empty() {
        return Err(Error::Empty("recall of no ranks"));
    }
    if k == 0 {
        return Err(Error::Config("recall@k needs k >= 1".into()));
    }
    Ok(100.0 * ranks.iter().filter(|&&r| r <= k).count() as f64 / ranks.len() as f64)
}

pub fn mean_rank(ranks: &[usize]) -> Result<f64> {
    if ranks.is_empty() {
        return Err(Error::Empty("mean of no ranks"));
    }
    Ok(ranks.iter().sum::<usize>() as f64 / ranks.len() as f64)
}

pub fn avg_caption_length<S: AsRef<str>>(generated: &[S]) -> Result<f64> {
    if generated.is_empty() {
        return Err(Error::Empty("length of no captions"));
    }
    let total: usize = generated.iter().map(|s| s.as_ref().split_whitespace().count()).sum();
    Ok(total as f64 / generated.len() as f64)
}
