use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::hash::sha256_hex;
use crate::{Error, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const BOS: usize = 2;
pub const EOS: usize = 3;
const RESERVED: [&str; 4] = ["<pad>", "<unk>", "<bos>", "<eos>"];

/// Lowercases and drops every character that is not alphanumeric or
/// whitespace, then splits on whitespace.
pub fn normalize_text(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .flat_map(|c| c.to_lowercase())
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .collect();
    cleaned.split_whitespace().map(|w| w.to_string()).collect()
}

/// Word/index maps with four reserved entries at the front.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabularyRecord", into = "VocabularyRecord")]
pub struct Vocabulary {
    words: Vec<String>,
    index: BTreeMap<String, usize>,
    pub min_count: usize,
}

/// Serialized form: the index→word list and the count threshold.
#[derive(Serialize, Deserialize)]
struct VocabularyRecord {
    words: Vec<String>,
    min_count: usize,
}

impl From<VocabularyRecord> for Vocabulary {
    fn from(r: VocabularyRecord) -> Self {
        Self::from_words(r.words, r.min_count)
    }
}

impl From<Vocabulary> for VocabularyRecord {
    fn from(v: Vocabulary) -> Self {
        Self {
            words: v.words,
            min_count: v.min_count,
        }
    }
}

impl Vocabulary {
    /// Every word whose training count reaches `min_count`, in sorted order.
    pub fn build<'a, I, S>(captions: I, min_count: usize) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [S]>,
        S: AsRef<str> + 'a,
    {
        if min_count == 0 {
            return Err(Error::Config("min_count must be at least 1".into()));
        }
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        let mut any = false;
        for caption in captions {
            for w in caption {
                any = true;
                *counts.entry(w.as_ref()).or_default() += 1;
            }
        }
        if !any {
            return Err(Error::Empty("training corpus"));
        }
        let mut words: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        words.extend(
            counts
                .into_iter()
                .filter(|&(w, c)| c >= min_count && !RESERVED.contains(&w))
                .map(|(w, _)| w.to_string()),
        );
        Ok(Self::from_words(words, min_count))
    }

    /// Rebuilds the lookup index from the index→word list.
    pub fn from_words(words: Vec<String>, min_count: usize) -> Self {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Self {
            words,
            index,
            min_count,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Words that are not reserved tokens.
    pub fn content_words(&self) -> &[String] {
        &self.words[RESERVED.len()..]
    }

    pub fn id(&self, word: &str) -> usize {
        self.index.get(word).copied().unwrap_or(UNK)
    }

    pub fn word(&self, id: usize) -> Result<&str> {
        self.words
            .get(id)
            .map(|s| s.as_str())
            .ok_or(Error::UnknownToken { id, vocab: self.len() })
    }

    pub fn encode<S: AsRef<str>>(&self, words: &[S]) -> Vec<usize> {
        words.iter().map(|w| self.id(w.as_ref())).collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Result<Vec<String>> {
        ids.iter().map(|&i| self.word(i).map(|s| s.to_string())).collect()
    }

    pub fn fingerprint(&self) -> String {
        sha256_hex(self.words.join("\n").as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn split(s: &[&str]) -> Vec<Vec<String>> {
        s.iter().map(|c| normalize_text(c)).collect()
    }

    #[test]
    fn counting_oracle() {
        let corpus = split(&["a cat", "a dog", "a cat"]);
        let v = Vocabulary::build(corpus.iter().map(|c| c.as_slice()), 2).unwrap();
        assert_eq!(v.content_words(), &["a".to_string(), "cat".to_string()]);
        assert_eq!(v.id("dog"), UNK);
    }

    #[test]
    fn threshold_off_keeps_everything() {
        let corpus = split(&["a cat", "a dog", "the bird"]);
        let v = Vocabulary::build(corpus.iter().map(|c| c.as_slice()), 1).unwrap();
        assert_eq!(v.len(), 5 + 4);
    }

    #[test]
    fn below_threshold_maps_to_unk() {
        let corpus = split(&["x x x x", "y y y y y"]);
        let v = Vocabulary::build(corpus.iter().map(|c| c.as_slice()), 5).unwrap();
        assert_eq!(v.id("x"), UNK);
        assert_ne!(v.id("y"), UNK);
    }

    #[test]
    fn rejects_empty_corpus_and_zero_threshold() {
        let empty: Vec<Vec<String>> = vec![];
        assert!(Vocabulary::build(empty.iter().map(|c| c.as_slice()), 1).is_err());
        let corpus = split(&["a"]);
        assert!(Vocabulary::build(corpus.iter().map(|c| c.as_slice()), 0).is_err());
    }

    #[test]
    fn normalization_lowercases_and_strips_punctuation() {
        assert_eq!(normalize_text("A Cat, on   the MAT!"), vec!["a", "cat", "on", "the", "mat"]);
    }

    #[test]
    fn round_trip_every_id() {
        let corpus = split(&["a cat sat", "a dog ran"]);
        let v = Vocabulary::build(corpus.iter().map(|c| c.as_slice()), 1).unwrap();
        let ids: Vec<usize> = (0..v.len()).collect();
        assert_eq!(v.encode(&v.decode(&ids).unwrap()), ids);
        assert!(v.decode(&[v.len()]).is_err());
    }
}
