use std::collections::BTreeSet;

use proptest::prelude::*;
use specap_core::metrics::{bleu_n, diversity_pct, lcs_len, mean_rank, recall_at_k, rouge_l, ROUGE_BETA};
use specap_core::retriever::{cosine_similarity, rank_by_similarity};
use specap_core::synthworld::{Vocabulary, UNK};

fn caption() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!["red", "cube", "left", "of", "a", "sphere"]), 1..8)
        .prop_map(|w| w.join(" "))
}

proptest! {
    #[test]
    fn overlap_scores_stay_in_unit_interval(
        gen in prop::collection::vec(caption(), 1..5),
        refs in prop::collection::vec(prop::collection::vec(caption(), 1..4), 5),
    ) {
        let refs = &refs[..gen.len()];
        for n in 1..=4 {
            let b = bleu_n(&gen, refs, n).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&b));
        }
        let r = rouge_l(&gen, refs, ROUGE_BETA).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&r));
    }

    #[test]
    fn identical_corpus_scores_one(gen in prop::collection::vec(caption(), 1..5)) {
        let refs: Vec<Vec<String>> = gen.iter().map(|c| vec![c.clone()]).collect();
        prop_assert_eq!(rouge_l(&gen, &refs, ROUGE_BETA).unwrap(), 1.0);
        prop_assert_eq!(bleu_n(&gen, &refs, 1).unwrap(), 1.0);
    }

    #[test]
    fn lcs_is_symmetric_and_bounded(a in prop::collection::vec(0u8..4, 0..10), b in prop::collection::vec(0u8..4, 0..10)) {
        let l = lcs_len(&a, &b);
        prop_assert_eq!(l, lcs_len(&b, &a));
        prop_assert!(l <= a.len().min(b.len()));
    }

    #[test]
    fn duplicating_a_corpus_keeps_set_metrics(gen in prop::collection::vec(caption(), 1..6)) {
        let doubled: Vec<String> = gen.iter().chain(&gen).cloned().collect();
        prop_assert_eq!(diversity_pct(&doubled).unwrap(), diversity_pct(&gen).unwrap() / 2.0);
    }

    #[test]
    fn recall_is_monotone_in_k(ranks in prop::collection::vec(1usize..30, 1..40)) {
        let mut prev = 0.0;
        for k in 1..30 {
            let r = recall_at_k(&ranks, k).unwrap();
            prop_assert!(r >= prev);
            prev = r;
        }
        prop_assert_eq!(prev, 100.0);
        prop_assert!(mean_rank(&ranks).unwrap() >= 1.0);
    }

    #[test]
    fn ranks_form_a_permutation(sims in prop::collection::vec(-3i8..3, 1..12)) {
        let pool: Vec<(usize, f64)> = sims.iter().enumerate().map(|(i, &s)| (i, s as f64)).collect();
        let ranks: BTreeSet<usize> = (0..pool.len()).map(|t| rank_by_similarity(&pool, t).unwrap()).collect();
        prop_assert_eq!(ranks, (1..=pool.len()).collect::<BTreeSet<_>>());
    }

    #[test]
    fn cosine_ignores_positive_scale(
        a in prop::collection::vec(-5.0f64..5.0, 4),
        b in prop::collection::vec(-5.0f64..5.0, 4),
        k in 0.01f64..100.0,
    ) {
        prop_assume!(a.iter().any(|x| x.abs() > 1e-3) && b.iter().any(|x| x.abs() > 1e-3));
        let scaled: Vec<f64> = a.iter().map(|x| x * k).collect();
        let (c1, c2) = (cosine_similarity(&a, &b).unwrap(), cosine_similarity(&scaled, &b).unwrap());
        prop_assert!((c1 - c2).abs() < 1e-12);
        prop_assert!(c1.abs() <= 1.0 + 1e-12);
    }
}

#[test]
fn vocabulary_survives_json() {
    let captions: Vec<Vec<&str>> = vec![vec!["a", "red", "cube"], vec!["a", "blue", "cube"], vec!["a", "red", "cone"]];
    let vocab = Vocabulary::build(captions.iter().map(|c| c.as_slice()), 2).unwrap();
    let json = serde_json::to_string(&vocab).unwrap();
    let back: Vocabulary = serde_json::from_str(&json).unwrap();
    assert_eq!(back.words(), vocab.words());
    assert_eq!(back.fingerprint(), vocab.fingerprint());
    assert_eq!(back.encode(&["a", "red", "cone"]), vocab.encode(&["a", "red", "cone"]));
    assert_eq!(back.id("cone"), UNK);
    assert_ne!(back.id("cube"), UNK);
}
