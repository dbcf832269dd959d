use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::overlap::{bleu_n, rouge_l, ROUGE_BETA};
use super::set::{avg_caption_length, diversity_pct, mean_rank, novelty_pct, recall_at_k, vocab_size_used};
use crate::{Error, Result};

pub const RECALL_KS: [usize; 3] = [1, 5, 10];

/// Generated captions with their references and retrieval ranks, one entry
/// per image.
#[derive(Debug, Clone, Default)]
pub struct CaptionCorpus {
    pub image_ids: Vec<usize>,
    pub generated: Vec<String>,
    pub references: Vec<Vec<String>>,
    pub ranks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub num_captions: usize,
    pub diversity_pct: f64,
    pub novelty_pct: f64,
    pub vocab_size: usize,
    pub recall_at: BTreeMap<String, f64>,
    pub mean_rank: f64,
    pub bleu: BTreeMap<String, f64>,
    pub rouge_l: f64,
    pub avg_caption_length: f64,
}

pub fn compute_report(corpus: &CaptionCorpus, training: &BTreeSet<String>) -> Result<MetricsReport> {
    let n = corpus.generated.len();
    if n == 0 {
        return Err(Error::Empty("evaluation corpus"));
    }
    if corpus.ranks.len() != n || corpus.references.len() != n {
        return Err(Error::Config("caption corpus columns differ in length".into()));
    }
    let mut recall_at = BTreeMap::new();
    for k in RECALL_KS {
        recall_at.insert(k.to_string(), recall_at_k(&corpus.ranks, k)?);
    }
    let mut bleu = BTreeMap::new();
    for k in 1..=4 {
        bleu.insert(k.to_string(), bleu_n(&corpus.generated, &corpus.references, k)?);
    }
    Ok(MetricsReport {
        num_captions: n,
        diversity_pct: diversity_pct(&corpus.generated)?,
        novelty_pct: novelty_pct(&corpus.generated, training)?,
        vocab_size: vocab_size_used(&corpus.generated),
        recall_at,
        mean_rank: mean_rank(&corpus.ranks)?,
        bleu,
        rouge_l: rouge_l(&corpus.generated, &corpus.references, ROUGE_BETA)?,
        avg_caption_length: avg_caption_length(&corpus.generated)?,
    })
}

impl MetricsReport {
    pub fn recall(&self, k: usize) -> Option<f64> {
        self.recall_at.get(&k.to_string()).copied()
    }

    pub fn is_valid(&self) -> bool {
        let pct = |x: f64| (0.0..=100.0).contains(&x);
        let r: Vec<f64> = self.recall_at.values().copied().collect();
        let ks_monotone = RECALL_KS
            .windows(2)
            .all(|w| self.recall(w[0]).unwrap_or(0.0) <= self.recall(w[1]).unwrap_or(0.0));
        pct(self.diversity_pct)
            && pct(self.novelty_pct)
            && r.iter().all(|&x| pct(x))
            && ks_monotone
            && self.mean_rank >= 1.0
            && self.bleu.values().all(|&b| (0.0..=1.0).contains(&b))
            && (0.0..=1.0).contains(&self.rouge_l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn full_report() {
        let corpus = CaptionCorpus {
            image_ids: vec![0, 1],
            generated: vec!["a cat".into(), "a dog".into()],
            references: vec![vec!["a cat".into()], vec!["a red dog".into()]],
            ranks: vec![1, 7],
        };
        let train: BTreeSet<String> = ["a cat".to_string()].into_iter().collect();
        let r = compute_report(&corpus, &train).unwrap();
        assert_eq!(r.diversity_pct, 100.0);
        assert_eq!(r.novelty_pct, 50.0);
        assert_eq!(r.vocab_size, 3);
        assert_eq!(r.recall(1), Some(50.0));
        assert_eq!(r.recall(10), Some(100.0));
        assert_eq!(r.mean_rank, 4.0);
        assert_eq!(r.avg_caption_length, 2.0);
        assert!(r.is_valid());
        assert!(compute_report(&CaptionCorpus::default(), &train).is_err());
    }
}
