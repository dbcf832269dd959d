use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::{math, Error, Result};

pub const ROUGE_BETA: f64 = 1.2;

fn ngram_counts<'a>(tokens: &'a [&'a str], n: usize) -> BTreeMap<&'a [&'a str], usize>
where
{
    let mut out = BTreeMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *out.entry(w).or_insert(0) += 1;
        }
    }
    out
}

fn tokens<S: AsRef<str>>(s: &S) -> Vec<&str> {
    s.as_ref().split_whitespace().collect()
}

fn check_corpus<S: AsRef<str>, R: AsRef<str>>(generated: &[S], references: &[Vec<R>]) -> Result<()> {
    if generated.is_empty() {
        return Err(Error::Empty("candidate corpus"));
    }
    if references.len() != generated.len() {
        return Err(Error::Config(alloc::format!(
            "{} candidates but {} reference sets",
            generated.len(),
            references.len()
        )));
    }
    if let Some(i) = references.iter().position(|r| r.is_empty()) {
        return Err(Error::Config(alloc::format!("candidate {i} has no references")));
    }
    Ok(())
}

/// Corpus BLEU up to order `n`: clipped n-gram precisions pooled over the
/// corpus, geometric mean over orders, brevity penalty from the closest
/// reference length per candidate (shorter wins a tie). No smoothing.
pub fn bleu_n<S: AsRef<str>, R: AsRef<str>>(generated: &[S], references: &[Vec<R>], n: usize) -> Result<f64> {
    check_corpus(generated, references)?;
    if !(1..=4).contains(&n) {
        return Err(Error::Config(alloc::format!("BLEU order {n} outside 1..=4")));
    }
    let mut matched = [0usize; 4];
    let mut total = [0usize; 4];
    let (mut cand_len, mut ref_len) = (0usize, 0usize);
    for (cand, refs) in generated.iter().zip(references) {
        let c = tokens(cand);
        let rs: Vec<Vec<&str>> = refs.iter().map(tokens).collect();
        cand_len += c.len();
        ref_len += rs
            .iter()
            .map(|r| r.len())
            .min_by_key(|&l| (l.abs_diff(c.len()), l))
            .unwrap_or(0);
        for k in 1..=n {
            let mut max_ref: BTreeMap<&[&str], usize> = BTreeMap::new();
            for r in &rs {
                for (g, cnt) in ngram_counts(r, k) {
                    let e = max_ref.entry(g).or_insert(0);
                    *e = (*e).max(cnt);
                }
            }
            for (g, cnt) in ngram_counts(&c, k) {
                total[k - 1] += cnt;
                matched[k - 1] += cnt.min(max_ref.get(g).copied().unwrap_or(0));
            }
        }
    }
    if cand_len == 0 {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    for k in 0..n {
        if matched[k] == 0 {
            return Ok(0.0);
        }
        log_sum += math::ln(matched[k] as f64 / total[k] as f64);
    }
    let bp = math::exp((1.0 - ref_len as f64 / cand_len as f64).min(0.0));
    Ok(bp * math::exp(log_sum / n as f64))
}

/// Longest common subsequence length.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = alloc::vec![0usize; b.len() + 1];
    let mut cur = prev.clone();
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// LCS F-measure of one candidate against one reference.
pub fn rouge_l_pair(cand: &[&str], reference: &[&str], beta: f64) -> f64 {
    let l = lcs_len(cand, reference);
    if l == 0 {
        return 0.0;
    }
    let p = l as f64 / cand.len() as f64;
    let r = l as f64 / reference.len() as f64;
    let b2 = beta * beta;
    (1.0 + b2) * p * r / (r + b2 * p)
}

/// Mean over candidates of the best ROUGE-L F-measure over its references.
pub fn rouge_l<S: AsRef<str>, R: AsRef<str>>(generated: &[S], references: &[Vec<R>], beta: f64) -> Result<f64> {
    check_corpus(generated, references)?;
    let total: f64 = generated
        .iter()
        .zip(references)
        .map(|(c, refs)| {
            let c = tokens(c);
            refs.iter()
                .map(|r| rouge_l_pair(&c, &tokens(r), beta))
                .fold(0.0, f64::max)
        })
        .sum();
    Ok(total / generated.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn bleu_examples() {
        let refs = vec![vec!["the cat sat down"]];
        let b = bleu_n(&["the cat sat"], &refs, 1).unwrap();
        assert!((b - 0.7165).abs() < 1e-4, "{b}");
        let refs = vec![vec!["a b c d", "x"]];
        for n in 1..=4 {
            assert_eq!(bleu_n(&["a b c d"], &refs, n).unwrap(), 1.0);
        }
        assert_eq!(bleu_n(&["q r"], &refs, 1).unwrap(), 0.0);
        assert!(bleu_n::<&str, &str>(&[], &[], 1).is_err());
        assert!(bleu_n(&["a"], &refs, 5).is_err());
    }

    #[test]
    fn bleu_clips_repeats() {
        // "the the the" vs "the cat": clipped unigram precision 1/3
        let refs = vec![vec!["the cat"]];
        let b = bleu_n(&["the the the"], &refs, 1).unwrap();
        assert!((b - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rouge_examples() {
        let refs = vec![vec!["a x c"]];
        let r = rouge_l(&["a b c"], &refs, ROUGE_BETA).unwrap();
        assert!((r - 2.0 / 3.0).abs() < 1e-12);
        let refs = vec![vec!["p q", "a b c"]];
        assert_eq!(rouge_l(&["a b c"], &refs, ROUGE_BETA).unwrap(), 1.0);
        let refs = vec![vec!["p q"]];
        assert_eq!(rouge_l(&["a b c"], &refs, ROUGE_BETA).unwrap(), 0.0);
    }

    #[test]
    fn lcs_small() {
        assert_eq!(lcs_len(&[1, 2, 3, 4], &[2, 4, 3]), 2);
        assert_eq!(lcs_len::<u8>(&[], &[1]), 0);
    }
}
