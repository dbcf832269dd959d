use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CheckOutcome, Suite, SuiteReport};
use crate::math;
use crate::metrics::{
    avg_caption_length, bleu_n, diversity_pct, mean_rank, novelty_pct, recall_at_k, rouge_l, vocab_size_used, ROUGE_BETA,
};

const ALPHABET: [&str; 4] = ["a", "b", "c", "d"];

/// Longest common subsequence by enumerating every subsequence of `a`.
pub fn oracle_lcs_len(a: &[&str], b: &[&str]) -> usize {
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let len = mask.count_ones() as usize;
        if len <= best {
            continue;
        }
        let mut j = 0;
        let mut ok = true;
        for (i, w) in a.iter().enumerate() {
            if mask & (1 << i) == 0 {
                continue;
            }
            while j < b.len() && b[j] != *w {
                j += 1;
            }
            if j == b.len() {
                ok = false;
                break;
            }
            j += 1;
        }
        if ok {
            best = len;
        }
    }
    best
}

fn count_at(tokens: &[&str], gram: &[&str]) -> usize {
    let mut n = 0;
    let k = gram.len();
    let mut i = 0;
    while i + k <= tokens.len() {
        let mut same = true;
        for j in 0..k {
            if tokens[i + j] != gram[j] {
                same = false;
            }
        }
        if same {
            n += 1;
        }
        i += 1;
    }
    n
}

/// Corpus BLEU computed by direct n-gram scanning.
pub fn oracle_bleu(generated: &[Vec<&str>], references: &[Vec<Vec<&str>>], n: usize) -> f64 {
    let mut matched = vec![0usize; n];
    let mut total = vec![0usize; n];
    let (mut cand_len, mut ref_len) = (0usize, 0usize);
    for (c, refs) in generated.iter().zip(references) {
        cand_len += c.len();
        let mut best = refs[0].len();
        for r in refs {
            let (d, bd) = (r.len().abs_diff(c.len()), best.abs_diff(c.len()));
            if d < bd || (d == bd && r.len() < best) {
                best = r.len();
            }
        }
        ref_len += best;
        for k in 1..=n {
            if c.len() < k {
                continue;
            }
            for i in 0..=c.len() - k {
                total[k - 1] += 1;
                let gram = &c[i..i + k];
                let first = (0..i).all(|p| &c[p..p + k] != gram);
                if !first {
                    continue;
                }
                let in_cand = count_at(c, gram);
                let in_refs = refs.iter().map(|r| count_at(r, gram)).max().unwrap_or(0);
                matched[k - 1] += in_cand.min(in_refs);
            }
        }
    }
    if cand_len == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for k in 0..n {
        if matched[k] == 0 {
            return 0.0;
        }
        log_sum += math::ln(matched[k] as f64 / total[k] as f64);
    }
    let bp = math::exp((1.0 - ref_len as f64 / cand_len as f64).min(0.0));
    bp * math::exp(log_sum / n as f64)
}

/// Corpus ROUGE-L from the brute-force LCS.
pub fn oracle_rouge_l(generated: &[Vec<&str>], references: &[Vec<Vec<&str>>], beta: f64) -> f64 {
    let mut total = 0.0;
    for (c, refs) in generated.iter().zip(references) {
        let mut best: f64 = 0.0;
        for r in refs {
            let l = oracle_lcs_len(c, r);
            let f = if l == 0 {
                0.0
            } else {
                let p = l as f64 / c.len() as f64;
                let rc = l as f64 / r.len() as f64;
                let b2 = beta * beta;
                (1.0 + b2) * p * rc / (rc + b2 * p)
            };
            best = best.max(f);
        }
        total += best;
    }
    total / generated.len() as f64
}

fn all_captions(max_len: usize) -> Vec<Vec<&'static str>> {
    let mut out: Vec<Vec<&str>> = vec![];
    let mut layer: Vec<Vec<&str>> = vec![vec![]];
    for _ in 0..max_len {
        let mut next = vec![];
        for c in &layer {
            for w in ALPHABET {
                let mut d = c.clone();
                d.push(w);
                next.push(d);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn random_caption(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<&'static str> {
    let len = rng.random_range(1..=max_len);
    (0..len).map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())]).collect()
}

fn join(c: &[&str]) -> String {
    c.join(" ")
}

struct Checks {
    bleu: [CheckOutcome; 4],
    rouge: CheckOutcome,
    set: CheckOutcome,
    ranks: CheckOutcome,
}

fn compare_overlap(ch: &mut Checks, gen: &[Vec<&str>], refs: &[Vec<Vec<&str>>], case: &dyn Fn() -> String) {
    let gs: Vec<String> = gen.iter().map(|c| join(c)).collect();
    let rs: Vec<Vec<String>> = refs.iter().map(|r| r.iter().map(|c| join(c)).collect()).collect();
    for n in 1..=4 {
        let want = oracle_bleu(gen, refs, n);
        let got = bleu_n(&gs, &rs, n);
        ch.bleu[n - 1].require(got.as_ref().is_ok_and(|&g| g == want), || {
            format!("{}: BLEU-{n} {got:?} vs oracle {want}", case())
        });
    }
    let want = oracle_rouge_l(gen, refs, ROUGE_BETA);
    let got = rouge_l(&gs, &rs, ROUGE_BETA);
    ch.rouge
        .require(got.as_ref().is_ok_and(|&g| g == want), || format!("{}: ROUGE-L {got:?} vs oracle {want}", case()));
}

fn compare_set(ch: &mut Checks, gen: &[String], training: &BTreeSet<String>, case: &dyn Fn() -> String) {
    let n = gen.len() as f64;
    let mut distinct: Vec<&String> = vec![];
    for g in gen {
        if !distinct.contains(&g) {
            distinct.push(g);
        }
    }
    let novel = gen.iter().filter(|g| !training.iter().any(|t| t == *g)).count();
    let mut words: Vec<&str> = vec![];
    let mut tokens = 0usize;
    for g in gen {
        for w in g.split(' ').filter(|w| !w.is_empty()) {
            tokens += 1;
            if !words.contains(&w) {
                words.push(w);
            }
        }
    }
    let ok = diversity_pct(gen).is_ok_and(|x| x == 100.0 * distinct.len() as f64 / n)
        && novelty_pct(gen, training).is_ok_and(|x| x == 100.0 * novel as f64 / n)
        && vocab_size_used(gen) == words.len()
        && avg_caption_length(gen).is_ok_and(|x| x == tokens as f64 / n);
    ch.set.require(ok, || format!("{}: set metrics disagree on {gen:?}", case()));
}

fn compare_ranks(ch: &mut Checks, ranks: &[usize]) {
    let n = ranks.len() as f64;
    let mut sum = 0usize;
    for r in ranks {
        sum += r;
    }
    let mut ok = mean_rank(ranks).is_ok_and(|x| x == sum as f64 / n);
    for k in [1, 2, 5, 10] {
        let mut hits = 0usize;
        for &r in ranks {
            if r <= k {
                hits += 1;
            }
        }
        ok &= recall_at_k(ranks, k).is_ok_and(|x| x == 100.0 * hits as f64 / n);
    }
    ch.ranks.require(ok, || format!("ranks {ranks:?}"));
}

/// Checks every metric against brute-force oracles:
/// - every candidate/reference pair with both lengths ≤ 4 over a 4-word
///   alphabet;
/// - every corpus of up to 3 captions of length ≤ 2, for the set metrics;
/// - 3000 random corpora of 1–5 captions of length 1–6 with 1–5 references
///   each, for all metrics.
pub fn metrics_suite(seed: u64) -> SuiteReport {
    let mut ch = Checks {
        bleu: core::array::from_fn(|n| CheckOutcome::new(format!("bleu_{}", n + 1))),
        rouge: CheckOutcome::new("rouge_l"),
        set: CheckOutcome::new("set_metrics"),
        ranks: CheckOutcome::new("rank_metrics"),
    };

    let short = all_captions(4);
    for c in &short {
        for r in &short {
            compare_overlap(&mut ch, &[c.clone()], &[vec![r.clone()]], &|| format!("{c:?} vs {r:?}"));
        }
    }

    let tiny: Vec<String> = all_captions(2).iter().map(|c| join(c)).collect();
    let training: BTreeSet<String> = tiny.iter().step_by(3).cloned().collect();
    for i in 0..tiny.len() {
        compare_set(&mut ch, &[tiny[i].clone()], &training, &|| format!("corpus {i}"));
        for j in 0..tiny.len() {
            let pair = [tiny[i].clone(), tiny[j].clone()];
            compare_set(&mut ch, &pair, &training, &|| format!("corpus {i},{j}"));
            for k in 0..tiny.len() {
                let triple = [tiny[i].clone(), tiny[j].clone(), tiny[k].clone()];
                compare_set(&mut ch, &triple, &training, &|| format!("corpus {i},{j},{k}"));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..3000 {
        let n = rng.random_range(1..=5);
        let gen: Vec<Vec<&str>> = (0..n).map(|_| random_caption(&mut rng, 6)).collect();
        let refs: Vec<Vec<Vec<&str>>> = (0..n)
            .map(|_| {
                let m = rng.random_range(1..=5);
                (0..m).map(|_| random_caption(&mut rng, 6)).collect()
            })
            .collect();
        compare_overlap(&mut ch, &gen, &refs, &|| format!("random corpus {t}"));
        let gs: Vec<String> = gen.iter().map(|c| join(c)).collect();
        let training: BTreeSet<String> = refs.iter().flatten().map(|c| join(c)).collect();
        compare_set(&mut ch, &gs, &training, &|| format!("random corpus {t}"));
        let ranks: Vec<usize> = (0..rng.random_range(1..=20)).map(|_| rng.random_range(1..=12)).collect();
        compare_ranks(&mut ch, &ranks);
    }

    let Checks { bleu, rouge, set, ranks } = ch;
    let mut checks: Vec<CheckOutcome> = bleu.into_iter().collect();
    checks.extend([rouge, set, ranks]);
    SuiteReport {
        suite: Suite::Metrics,
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_lcs_examples() {
        assert_eq!(oracle_lcs_len(&["a", "b", "c"], &["a", "x", "c"]), 2);
        assert_eq!(oracle_lcs_len(&["a", "b"], &["c"]), 0);
        assert_eq!(oracle_lcs_len(&["a", "b", "a", "b"], &["b", "a", "b", "a"]), 3);
    }

    #[test]
    fn oracle_bleu_hand_example() {
        let b = oracle_bleu(&[vec!["the", "cat", "sat"]], &[vec![vec!["the", "cat", "sat", "down"]]], 1);
        assert!((b - math::exp(1.0 - 4.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn enumeration_sizes() {
        assert_eq!(all_captions(2).len(), 4 + 16);
        assert_eq!(all_captions(4).len(), 340);
    }
}
